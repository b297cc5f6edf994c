"""Shared numerical defaults.

Single source for the guard tolerances so the dynamics, operator and
Green-function layers cannot drift apart.
"""

# Stamped into every JSON artifact; keep in sync with pyproject.
VERSION = "0.1.0"

# Minimum circle distance of any orbit point to the potential pole at 1/2.
DEFAULT_TAU_SING = 1e-8

# Condition-number cap above which an inversion is reported as untrusted.
DEFAULT_COND_CAP = 1e12

# Finite range and constant for the default diophantine check.
DEFAULT_DC_CONSTANT = 0.1
DEFAULT_DC_RANGE = 4096

# Eigen-solves are refused when the diagonal already exceeds this size.
DEFAULT_MAX_DIAG = 1e10
