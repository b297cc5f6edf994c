"""Numerical laboratory for localization in skew-shift lattice operators.

The package builds long-range lattice operators whose diagonal is a
tangent potential sampled along a torus skew shift, factors out the
potential's poles into a bounded matrix, and measures Green-function
decay, good/bad window statistics, resolvent patching, eigenvector
localization, and the companion kicked-rotor dynamics.
"""

from .config import VERSION as __version__
from .dynamics import (
    DCReport,
    Frequency,
    OrbitSpec,
    TorusPoint,
    VisitCount,
    check_dc,
    circle_dist,
    ensure_dc,
    first_coords,
    iterate_closed,
    orbit_coords,
    orbit_iterated,
    singularity_distance,
    step,
    step_back,
    torus_dist,
    visit_count,
)
from .errors import (
    ConfigError,
    ConvergenceFailure,
    DecayViolation,
    HypothesisFailed,
    IllConditioned,
    InfeasibleCover,
    InsufficientData,
    SingularityGuard,
    SkewlocError,
    SymmetryViolation,
    TruncationBreach,
)
from .operator import (
    HoppingKernel,
    LatticeOperator,
    Window,
    assemble,
    kernel_from_file,
    kernel_from_profile,
    kernel_from_table,
    potential,
)
from .green import (
    BInverse,
    DecayFit,
    Factorization,
    GreenMatrix,
    decay_profile,
    factorize,
    fit_decay,
    green,
    green_direct,
    invert_b,
)
from .multiscale import (
    DensityReport,
    MeasureEstimate,
    NeumannCertificate,
    ScaleMeasure,
    ScaleSchedule,
    SiteClassification,
    bad_set_measure,
    classify_sites,
    diag_smallness_measure,
    neumann_initial,
    norm_cap,
    single_site_smallness,
    window_density,
)
from .patching import (
    ContractionReport,
    Cover,
    PatchReport,
    ResolventBound,
    build_cover,
    contraction_check,
    patch_verify,
    propagate_bounds,
    resolvent_step,
)
from .diagnostics import (
    EigenPair,
    FrequencyComparison,
    LocalizationReport,
    SpectrumResult,
    classify_frequency,
    eigenvector_decay,
    frequency_comparison,
    ipr,
    localization_report,
    spectral_distance,
    spectrum,
)
from .rotor import (
    EvolutionResult,
    RotorState,
    evolve,
    growth_exponent,
    kick,
    kick_bessel,
    kinetic_phase,
    resonance_scan,
    step as rotor_step,
    step_inverse as rotor_step_inverse,
)
from .sampling import parallel_map, rng_for, sample_box, sample_torus

__all__ = [name for name in dir() if not name.startswith("_")]
