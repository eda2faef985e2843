import os

# Import version from single source of truth
from __version__ import __version__


def _env_int(name, default):
    value = os.getenv(name)
    if value is None or value.strip() == '':
        return default
    try:
        return int(float(value))
    except ValueError:
        print(f"WARNING: ignoring non-numeric {name}={value!r}")
        return default


def _env_float(name, default):
    value = os.getenv(name)
    if value is None or value.strip() == '':
        return default
    try:
        return float(value)
    except ValueError:
        print(f"WARNING: ignoring non-numeric {name}={value!r}")
        return default


def _get_data_dir() -> str:
    """Return the qsiset data directory (not created until something is written)."""
    base = os.getenv('DATA_DIR', os.path.expanduser("~"))
    return os.path.join(base, "QsiSetData")


class Config:
    # Application version (imported from __version__.py)
    APP_VERSION = __version__

    PRESETS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets")

    # ENUMERATION CEILINGS
    MEMBER_CEILING = _env_int('QSISET_MEMBER_CEILING', 50_000_000)  # indices materialized at once
    STATE_CEILING = _env_int('QSISET_STATE_CEILING', 5_000_000)  # distinct partial states in the level histogram
    LEVEL_CEILING = _env_int('QSISET_LEVEL_CEILING', 2_000_000)  # integer b-levels (tau * denominator) per histogram

    # TAIL SUMMATION
    TAIL_REL_TOL = _env_float('QSISET_TAIL_TOL', 1e-12)  # relative to the total sum
    TAIL_THETA_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95)  # remainder splitting exponents tried
    FACTORIAL_MARGINS = (0.5, 0.75, 0.9)  # candidate p with sum(alpha**p) < 1
    ORACLE_BOX_CEILING = _env_int('QSISET_ORACLE_BOX_CEILING', 5_000_000)  # points summed by the brute-force oracle

    # EHRHART FITTING
    EHRHART_PERIOD_CAP = _env_int('QSISET_PERIOD_CAP', 64)  # largest period tried before giving up
    EHRHART_MIN_VERIFY = 16  # held-out dilations checked at least

    # VOLUME (lattice scaling)
    VOLUME_TOL = _env_float('QSISET_VOLUME_TOL', 1e-3)  # relative change between extrapolants
    VOLUME_TAU_START = 8  # first dilation of the doubling ladder
    VOLUME_TAU_CAP = _env_int('QSISET_VOLUME_TAU_CAP', 4096)  # largest dilation tried

    # SERIES
    POLYLOG_REL_TOL = 1e-16  # stop when remaining terms fall below this share
    SUMJN_REL_TOL = 1e-18

    # ESTIMATE GRIDS
    DEFAULT_EPSILONS = (0.3, 1.0, 4.0)
    DEFAULT_P_GRID = (0.3, 0.5, 0.7, 0.9)
    TANGENCY_GRID_SIZE = 64  # log-spaced p values in (0, 4]
    ISO_OPTIMIZED_CONSTANT = 1.09

    # ASSUMPTION CHECKS
    DEFAULT_BOX_RADIUS = 12
    DEFAULT_TAU_GRID = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    RANDOM_DIRECTIONS = 8  # sampled on top of axes and the diagonal
    DEFAULT_SEED = _env_int('QSISET_SEED', 20240229)

    # CONCURRENCY
    WORKERS = _env_int('QSISET_WORKERS', 1)  # threads for independent rows

    @classmethod
    def validate_config(cls):
        """Validate configuration settings"""
        issues = []

        if not os.path.isdir(cls.PRESETS_DIR):
            issues.append(f"Presets directory not found: {cls.PRESETS_DIR}")

        if cls.MEMBER_CEILING < 1:
            issues.append("MEMBER_CEILING must be positive")
        if cls.STATE_CEILING < 1:
            issues.append("STATE_CEILING must be positive")
        if not 0 < cls.TAIL_REL_TOL < 1:
            issues.append("TAIL_REL_TOL should be in (0, 1)")
        if cls.EHRHART_PERIOD_CAP < 1:
            issues.append("EHRHART_PERIOD_CAP must be at least 1")
        if cls.VOLUME_TAU_CAP < cls.VOLUME_TAU_START:
            issues.append("VOLUME_TAU_CAP is below VOLUME_TAU_START")
        if cls.WORKERS < 1:
            issues.append("WORKERS must be at least 1")
        if cls.ORACLE_BOX_CEILING < 1:
            issues.append("ORACLE_BOX_CEILING must be positive")

        return issues

    @classmethod
    def get_log_dir(cls):
        """Default directory of qsiset.log and run_events.json, read from DATA_DIR at call time."""
        return os.path.join(_get_data_dir(), "logs")

    @classmethod
    def get_enumeration_config(cls):
        return {
            'member_ceiling': cls.MEMBER_CEILING,
            'state_ceiling': cls.STATE_CEILING,
            'level_ceiling': cls.LEVEL_CEILING,
        }

    @classmethod
    def get_tail_config(cls):
        return {
            'tail_rel_tol': cls.TAIL_REL_TOL,
            'theta_grid': list(cls.TAIL_THETA_GRID),
            'factorial_margins': list(cls.FACTORIAL_MARGINS),
            'oracle_box_ceiling': cls.ORACLE_BOX_CEILING,
        }

    @classmethod
    def get_polytope_config(cls):
        return {
            'period_cap': cls.EHRHART_PERIOD_CAP,
            'min_verify': cls.EHRHART_MIN_VERIFY,
            'volume_tol': cls.VOLUME_TOL,
            'volume_tau_start': cls.VOLUME_TAU_START,
            'volume_tau_cap': cls.VOLUME_TAU_CAP,
        }
