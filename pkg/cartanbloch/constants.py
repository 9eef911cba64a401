"""Project-wide constants."""

from os import getenv


def _env_bool(name: str, default: str | None = None) -> bool:
    """Return a boolean flag read from the environment."""

    value = getenv(name)
    if value is None:
        value = default if default is not None else "0"
    value = str(value).strip().lower()
    return value not in {"0", "false", "no", "off", ""}


def _env_float(name: str, default: float) -> float:
    """Return a positive finite ``float`` read from the environment."""

    raw = getenv(name)
    if raw is None or str(raw).strip() == "":
        return float(default)
    try:
        value = float(str(raw).strip().replace(",", "."))
    except ValueError:
        return float(default)
    if value != value or value in (float("inf"), float("-inf")):
        return float(default)
    return abs(value) if value != 0 else float(default)


def _env_int(name: str, default: int) -> int:
    """Return a positive ``int`` read from the environment."""

    raw = getenv(name)
    try:
        value = int(str(raw).strip())
    except (TypeError, ValueError):
        return default
    return value if value > 0 else default


# Metric evaluation refuses points closer to the boundary than this.
BOUNDARY_FLOOR = _env_float("CARTANBLOCH_BOUNDARY_FLOOR", 1e-8)

# Finest boundary distance targeted by profile sweeps.
DELTA_FLOOR = _env_float("CARTANBLOCH_DELTA_FLOOR", 1e-6)

# Smallest admissible eigenvalue of G relative to its trace.
COND_RTOL = _env_float("CARTANBLOCH_COND_RTOL", 1e-14)

# Hermitian symmetry tolerance for metric matrices.
HERMITIAN_TOL = 1e-12

# Pass threshold of the automorphism identity battery.
IDENTITY_TOL = _env_float("CARTANBLOCH_IDENTITY_TOL", 1e-9)

# Default number of worker processes for sampling loops.
DEFAULT_WORKERS = _env_int("CARTANBLOCH_WORKERS", 1)

# Free parameter ``a`` of the extremal test functions.
DEFAULT_A_PARAM = _env_float("CARTANBLOCH_A_PARAM", 1.0)

# Boundary distances below which a profile sample counts as near-boundary.
NEAR_BOUNDARY = 1e-2

# Default δ grid of profile sweeps (decades down to DELTA_FLOOR).
DEFAULT_DELTAS = tuple(
    10.0**-k for k in range(1, 7) if 10.0**-k >= DELTA_FLOOR * 0.999
)

DEFAULT_EPSILONS = (1e-1, 1e-2)

LOG_LEVEL = (getenv("CARTANBLOCH_LOG_LEVEL") or "INFO").strip().upper()

# Emit timing information in reports; off by default so that reports are
# byte-identical between runs.
REPORT_TIMINGS = _env_bool("CARTANBLOCH_REPORT_TIMINGS", "0")
