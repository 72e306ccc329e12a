"""Log-log fits and the decay report shared by the audits."""
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass
class PowerFit:
    slope: float
    intercept: float
    stderr: float
    n: int
    window: tuple


@dataclass
class DecayReport:
    name: str
    t: np.ndarray
    values: np.ndarray
    envelope: np.ndarray
    fit: PowerFit = None
    target_slope: float = None
    tolerance: float = None
    constants: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def rows(self):
        env = self.envelope if self.envelope is not None else np.full_like(self.values, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = self.values / env
        return [(float(a), float(b), float(c), float(r)) for a, b, c, r in zip(self.t, self.values, env, ratio)]


def fit_power_law(t, y, window=None):
    """Least-squares slope of ``log y`` against ``log t`` inside ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (t > 0) & (y > 0)
    if window is not None:
        mask &= (t >= window[0] * (1 - 1e-12)) & (t <= window[1] * (1 + 1e-12))
    if mask.sum() < 3:
        raise ValueError("fewer than three positive samples in the fit window")
    res = stats.linregress(np.log(t[mask]), np.log(y[mask]))
    win = (float(t[mask].min()), float(t[mask].max()))
    return PowerFit(float(res.slope), float(res.intercept), float(res.stderr), int(mask.sum()), win)


def samples_per_decade(t, window):
    t = np.asarray(t)
    inside = t[(t >= window[0]) & (t <= window[1])]
    span = np.log10(window[1] / window[0])
    return inside.size / span if span > 0 else 0.0


def dyadic_indices(times, t_first, per_octave=4):
    """Indices of a uniform time grid closest to a geometric ladder starting at ``t_first``."""
    t = times.t
    T = t[-1]
    n = int(np.floor(np.log2(T / t_first) * per_octave + 1e-9))
    targets = t_first * 2.0 ** (np.arange(n + 1) / per_octave)
    idx = np.unique([int(np.argmin(np.abs(t - x))) for x in targets])
    return idx


def log_drift(t, y, rate, confidence=0.95):
    """Coefficient ``c`` of ``log y + rate*log t = const + c log log(t+2)``.

    Returns (c, half-width of the confidence interval).  A surviving factor
    ``log(t+2)`` in the decay would give ``c`` close to 1.
    """
    t = np.asarray(t, dtype=float)
    z = np.log(y) + rate * np.log(t)
    x = np.log(np.log(t + 2.0))
    res = stats.linregress(x, z)
    q = stats.t.ppf(0.5 + confidence / 2, t.size - 2)
    return float(res.slope), float(q * res.stderr)
