"""Tail behavior of the joint stationary distribution.

For large orbit sizes the full-system probabilities obey a two-sided bound
of the form

    C1 * f(n) <= pi[n, K-k] <= C2 * f(n)

where f is a regime-dependent envelope: in the nonpersistent regime
f(n) = base^n / n! * n^(exponent - k), and in the persistent regime
f(n) = base^n * n^(exponent - k).  The bounding constants are existential,
so verification is numerical: divide the probabilities by the envelope and
check that the resulting sequence stays within a bounded band with no
systematic log-drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log

import numpy as np

from .errors import NonErgodicError, RegimeError
from .expansion import Regime
from .model import ModelParams, check_ergodicity
from .rate_matrix import StationaryDistribution


@dataclass(frozen=True)
class TailLaw:
    """Envelope parameters for the tail of pi[n, K-k].

    `base` is the geometric factor per orbit level, `exponent` the polynomial
    power at k = 0, and each idle server shifts the exponent by
    `per_idle_shift` (always -1).  quad_a/quad_b and discriminant_ok report
    the a^2 - 4b < 0 side condition of the nonpersistent envelope; they are
    None in the persistent regime.
    """

    regime: Regime
    base: float
    exponent: float
    per_idle_shift: float = -1.0
    quad_a: float | None = None
    quad_b: float | None = None
    discriminant_ok: bool | None = None


def tail_law(params: ModelParams) -> TailLaw:
    """Compute the tail envelope for an ergodic model."""
    erg = check_ergodicity(params)
    if not erg.ergodic:
        raise NonErgodicError(f"no stationary tail: rho = {erg.rho:.6g} >= 1")
    lam = params.arrival_rate
    mu = params.retrial_rate
    p = params.join_prob
    nu = params.nu
    if lam * p <= 0.0:
        raise RegimeError("tail law undefined when the orbit is unreachable (lambda*p = 0)")
    if params.persistent:
        rho = erg.rho
        alpha = rho * (nu[-1] - p * nu[-2]) / (p * mu)
        return TailLaw(Regime.PERSISTENT, rho, alpha)
    w = params.blocked_loss_prob
    base = lam * p / (mu * w)
    a = nu[-1] / (mu * w)
    b = a * a * (1.0 + lam * ((1 - p) * (1 - params.retry_prob)
                              + params.retry_prob * (1 - params.rejoin_prob)) / nu[-1]) \
        if nu[-1] > 0 else 0.0
    return TailLaw(Regime.NONPERSISTENT, base, -a,
                   quad_a=a, quad_b=b, discriminant_ok=a * a - 4 * b < 0)


@dataclass
class TailRatioSeries:
    """Compensated probabilities pi[n, K-k] / envelope(n) over n = 1..N.

    Levels where the stored probability is exactly zero (truncation
    underflow) are flagged absent and carry NaN values.
    """

    idle_count: int
    levels: np.ndarray
    values: np.ndarray
    log_values: np.ndarray
    absent: np.ndarray


def tail_ratio_series(dist: StationaryDistribution, law: TailLaw,
                      k: int) -> TailRatioSeries:
    """Divide the joint probabilities at k idle servers by the tail envelope.

    All arithmetic runs in log space so that n! and base^n cannot overflow.
    """
    K = dist.pi.shape[1] - 1
    if not 0 <= k <= K:
        raise ValueError(f"idle count must be in 0..{K}, got {k}")
    N = dist.horizon_N
    levels = np.arange(1, N + 1)
    probs = dist.pi[1:, K - k]
    logv = np.full(N, np.nan)
    absent = probs <= 0.0
    log_base = log(law.base)
    for idx, n in enumerate(levels):
        if absent[idx]:
            continue
        lv = log(probs[idx]) - n * log_base - (law.exponent - k) * log(n)
        if law.regime is Regime.NONPERSISTENT:
            lv += lgamma(n + 1)
        logv[idx] = lv
    with np.errstate(over="ignore"):
        values = np.exp(logv)
    return TailRatioSeries(k, levels, values, logv, absent)


@dataclass
class BoundednessVerdict:
    passed: bool
    minimum: float
    maximum: float
    spread: float        # maximum / minimum over the window
    drift: float         # least-squares slope of the log-series per step
    window: int

    def __str__(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (f"{state} (min={self.minimum:.6g}, max={self.maximum:.6g}, "
                f"spread={self.spread:.4g}, drift={self.drift:.3e}/step)")


def boundedness_check(series, window: int, bound_factor: float = 10.0,
                      drift_limit: float = 0.01) -> BoundednessVerdict:
    """Numerical stand-in for "bounded between two positive constants".

    Looks at the last `window` entries: the band must be narrower than
    `bound_factor` and the log-series must have per-step drift below
    `drift_limit`.  Accepts a TailRatioSeries or a plain value sequence.
    """
    values = series.values if isinstance(series, TailRatioSeries) else np.asarray(series, dtype=float)
    if len(values) < 2 * window:
        raise ValueError(f"series of length {len(values)} too short for window {window}")
    tail = values[-window:]
    finite = np.isfinite(tail) & (tail > 0.0)
    if finite.sum() < 2:
        raise ValueError("window has fewer than 2 positive finite entries")
    steps = np.flatnonzero(finite).astype(float)
    logs = np.log(tail[finite])
    drift = float(np.polyfit(steps, logs, 1)[0])
    lo = float(tail[finite].min())
    hi = float(tail[finite].max())
    spread = hi / lo
    passed = spread < bound_factor and abs(drift) < drift_limit
    return BoundednessVerdict(passed, lo, hi, spread, drift, window)
