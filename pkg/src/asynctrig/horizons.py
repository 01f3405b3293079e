"""Horizon enumeration and the average-idle objective.

A horizon is a nonempty tuple of actions in {0..m} (0 = idle).  Every
triggering mechanism maximizes the same count-based objective
(z + l)/(m l), the fraction of sensor-slots left unused over the horizon.
"""

from itertools import product

from .errors import ConfigError, ResourceCapError

DEFAULT_CAP = 10**6


def enumerate_horizons(m: int, l_min: int, l_max: int, cap: int = DEFAULT_CAP):
    """All action sequences over {0..m} of each length in [l_min, l_max].

    Lexicographic within each length, lengths ascending; the count is
    sum_{i=l_min}^{l_max} (m+1)^i and must not exceed the cap.
    """
    if m < 1:
        raise ConfigError(f"sensor count must be >= 1, got {m}")
    if not (1 <= l_min <= l_max):
        raise ConfigError(f"need 1 <= l_min <= l_max, got [{l_min}, {l_max}]")
    count = sum((m + 1) ** i for i in range(l_min, l_max + 1))
    if count > cap:
        raise ResourceCapError(f"horizon count {count} exceeds cap {cap}")
    out = []
    for l in range(l_min, l_max + 1):
        out.extend(product(range(m + 1), repeat=l))
    return out


def avg_idle_metric(sigma, m: int) -> float:
    """(z + |sigma|)/(m |sigma|) with z = number of idle steps.

    Equals 1 - readings/(m |sigma|): the fraction of sensor-slots unused.
    """
    if m < 1:
        raise ConfigError(f"sensor count must be >= 1, got {m}")
    sigma = tuple(sigma)
    z = sum(1 for a in sigma if a == 0)
    return (z + len(sigma)) / (m * len(sigma))


def horizon_to_text(sigma) -> str:
    """Comma-free digit string, e.g. (0,0,1,2) -> \"0012\"."""
    sigma = tuple(sigma)
    if any(not (0 <= a <= 9) for a in sigma):
        raise ConfigError("digit-string format supports at most 9 sensors")
    return "".join(str(a) for a in sigma)


def horizon_from_text(text: str):
    if not text or not text.isdigit():
        raise ConfigError(f"invalid horizon string {text!r}")
    return tuple(int(ch) for ch in text)
