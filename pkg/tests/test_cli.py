"""Command line driver: exit codes, config merging, artifact provenance."""

import json
import math

import pytest

from skewloc.cli import main
from skewloc.output import config_hash, read_embedded_config
from skewloc.sampling import rng_for

from conftest import GOLDEN


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main([*argv, "--out", str(out)]), out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["--version"])
    assert ei.value.code == 0
    assert capsys.readouterr().out.strip() == "skewloc 0.1.0"


def test_dc_check_artifacts(tmp_path):
    rc, out = run(tmp_path, "dc-check", "--range", "64")
    assert rc == 0
    doc = json.loads((out / "dc.json").read_text())
    assert set(doc) == {"config", "config_hash", "version", "result"}
    assert doc["version"] == "0.1.0"
    assert set(doc["config"]) == {"command", "omega", "c", "range", "seed"}
    assert doc["config"]["command"] == "dc-check"
    assert doc["config_hash"] == config_hash(doc["config"])
    assert doc["result"]["ok"] is True
    lines = (out / "dc_margins.csv").read_text().splitlines()
    assert len(lines) == 66
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "k,dist,bound"
    assert (out / "dc_margins.columns.json").exists()
    assert (out / "dc.schema.json").exists()


def test_merge_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "dc.json"
    cfg.write_text(json.dumps({"command": "dc-check", "range": 32, "c": 0.05}))

    rc, out = run(tmp_path, "dc-check", "--config", str(cfg))
    assert rc == 0
    emb = read_embedded_config(out / "dc.json")
    assert emb["range"] == 32 and emb["c"] == 0.05

    monkeypatch.setenv("SKEWLOC_RANGE", "64")
    rc, out = run(tmp_path, "dc-check", "--config", str(cfg))
    assert rc == 0
    emb = read_embedded_config(out / "dc.json")
    assert emb["range"] == 64 and emb["c"] == 0.05

    rc, out = run(tmp_path, "dc-check", "--config", str(cfg), "--range", "128")
    assert rc == 0
    assert read_embedded_config(out / "dc.json")["range"] == 128

    monkeypatch.delenv("SKEWLOC_RANGE")
    monkeypatch.setenv("SKEWLOC_CONFIG", str(cfg))
    rc, out = run(tmp_path, "dc-check")
    assert rc == 0
    assert read_embedded_config(out / "dc.json")["range"] == 32


def test_invalid_configuration_exits_4(tmp_path, capsys):
    assert main(["dc-check", "--bogus"]) == 4
    assert "invalid configuration" in capsys.readouterr().err
    assert main([]) == 4
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"command": "green", "n": 8}')
    assert main(["dc-check", "--config", str(wrong)]) == 4
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"zzz": 1}')
    assert main(["dc-check", "--config", str(unknown)]) == 4
    nonbool = tmp_path / "nonbool.json"
    nonbool.write_text('{"plot": 1}')
    assert main(["dc-check", "--config", str(nonbool)]) == 4
    assert main(["dc-check", "--config", str(tmp_path / "absent.json")]) == 4
    assert main(["orbit", "--length", "0"]) == 4


def test_singularity_guard_exits_2(tmp_path, capsys):
    rc, _ = run(tmp_path, "green", "--x1", "0.5", "--x2", "0.0",
                "--omega", "0.0", "--n", "16")
    assert rc == 2
    assert "singularity guard" in capsys.readouterr().err


def test_untrusted_inversion_exits_3(tmp_path, capsys):
    rc, _ = run(tmp_path, "green", "--x1", "0.5", "--x2", "0.0",
                "--omega", "0.0", "--n", "16", "--tau-sing", "0.0")
    assert rc == 3
    assert "non-finite" in capsys.readouterr().err


def test_truncation_breach_exits_5(tmp_path, capsys):
    rc, _ = run(tmp_path, "rotor", "--n-max", "64", "--steps", "200",
                "--b", "0.3")
    assert rc == 5
    assert "truncation breach" in capsys.readouterr().err


def test_orbit_artifacts_and_env_plot(tmp_path, monkeypatch):
    monkeypatch.setenv("SKEWLOC_PLOT", "1")
    rc, out = run(tmp_path, "orbit", "--length", "50", "--checkpoint", "100",
                  "--seed", "2")
    assert rc == 0
    lines = (out / "orbit.csv").read_text().splitlines()
    assert len(lines) == 53
    doc = json.loads((out / "orbit.json").read_text())
    res = doc["result"]
    assert set(res) == {"visit", "drift", "drift_max", "singularity_distance"}
    assert set(res["drift"]) == {"10", "-10", "100", "-100"}
    assert res["drift_max"] < 1e-9
    assert res["singularity_distance"] > 0.0
    assert (out / "orbit.png").stat().st_size > 0


def test_seedless_start_is_pinned_in_config(tmp_path):
    rc, out = run(tmp_path, "orbit", "--length", "10", "--checkpoint", "10",
                  "--seed", "7")
    assert rc == 0
    emb = read_embedded_config(out / "orbit.json")
    u = rng_for(7, stream=100).uniform(size=2)
    assert emb["x1"] == float(u[0]) and emb["x2"] == float(u[1])
    first_row = (out / "orbit.csv").read_text().splitlines()[2]
    assert first_row == f"0,{emb['x1']!r},{emb['x2']!r}"


def test_green_artifacts_with_plot(tmp_path):
    rc, out = run(tmp_path, "green", "--n", "32", "--seed", "1", "--plot")
    assert rc == 0
    doc = json.loads((out / "green.json").read_text())
    res = doc["result"]
    assert res["route"] == "factorized"
    assert res["cond"] >= 1.0
    assert res["direct_relative_delta"] < 1e-8
    assert res["fit"]["rate"] > 0.0
    lines = (out / "green_profile.csv").read_text().splitlines()
    assert len(lines) == 34
    assert (out / "green.png").stat().st_size > 0
    assert "plot" not in doc["config"] and "workers" not in doc["config"]


def test_scan_measure_bytes_match_across_workers(tmp_path):
    argv = ["scan-measure", "--scales", "16", "24", "--samples", "40",
            "--smallness-samples", "100", "--seed", "3"]
    rc1 = main([*argv, "--workers", "1", "--out", str(tmp_path / "w1")])
    rc2 = main([*argv, "--workers", "2", "--out", str(tmp_path / "w2")])
    assert rc1 == rc2 == 0
    for name in ("scan_measure.csv", "scan_measure.json"):
        b1 = (tmp_path / "w1" / name).read_bytes()
        b2 = (tmp_path / "w2" / name).read_bytes()
        assert b1 == b2


def test_patch_good_instance(tmp_path):
    rc, out = run(tmp_path, "patch", "--interval-sites", "65",
                  "--window-length", "16", "--energy", "0.3",
                  "--x1", "0.80110097254757462", "--x2", "0.51549126313622495")
    assert rc == 0
    doc = json.loads((out / "patch.json").read_text())
    verdict = doc["result"]["verdict"]
    assert verdict["hypotheses_ok"] is True and verdict["ok"] is True
    assert verdict["fit"]["rate"] == pytest.approx(4.611, abs=0.05)
    assert doc["result"]["contraction"]["length"] == 16
    lines = (out / "patch_windows.csv").read_text().splitlines()
    assert len(lines) == 9


def test_patch_failed_hypotheses_still_reports(tmp_path):
    # a planted near-zero bounded-factor diagonal at site 32: the verdict
    # is negative but the run itself succeeds and writes artifacts
    k0 = 1.0
    v_star = (math.atan(-(1e-3 * k0 - 0.3)) / math.pi) % 1.0
    x1 = (v_star + 1e-10 - 32 * 0.37 - (32 * 31 // 2) * GOLDEN) % 1.0
    rc, out = run(tmp_path, "patch", "--interval-sites", "65",
                  "--window-length", "16", "--rho", "1.0", "--energy", "0.3",
                  "--x1", repr(x1), "--x2", "0.37")
    assert rc == 0
    verdict = json.loads((out / "patch.json").read_text())["result"]["verdict"]
    assert verdict["hypotheses_ok"] is False and verdict["ok"] is False
    assert verdict["failing_windows"] == [[16, 32], [24, 40], [32, 48],
                                          [40, 56], [48, 64]]
    lines = (out / "patch_windows.csv").read_text().splitlines()
    assert len(lines) == 9


def test_multiscale_cmd(tmp_path):
    rc, out = run(tmp_path, "multiscale", "--sites", "256",
                  "--sub-length", "32", "--seed", "1")
    assert rc == 0
    doc = json.loads((out / "multiscale.json").read_text())
    res = doc["result"]
    assert set(res) == {"bad_fraction", "cap", "decay_floor", "density",
                        "series_certificate", "schedule"}
    assert 0.0 <= res["bad_fraction"] <= 1.0
    assert res["series_certificate"]["failure"] in (None, "diagonal",
                                                    "contraction")
    lines = (out / "classify.csv").read_text().splitlines()
    assert len(lines) == 258
    assert main(["multiscale", "--eps0", "1e-6",
                 "--out", str(tmp_path / "bad")]) == 4
