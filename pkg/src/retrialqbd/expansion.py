"""Series coefficients for the rate-matrix rows in powers of 1/n.

The nonzero row of R(n) admits an asymptotic expansion in the orbit size n.
Two regimes with different leading orders:

* nonpersistent (blocked_loss_prob > 0): entry K-k decays like n^-(k+1) and
  the coefficients gamma[k][m] (m >= 1) carry alternating signs,
      r(n)[K-k] ~ sum_m gamma[k][m] (-1)^(m+1) n^-(k+m);
* persistent (q = r = 1): entry K-k decays like n^-k with coefficients
  theta[k][m] (m >= 0),
      r(n)[K-k] ~ sum_m theta[k][m] (-1)^m n^-(k+m).

Both tables are triangular recursions seeded by closed forms at the lowest
order.  The convolution terms below were validated against the fixed-point
solver by order-of-accuracy fits (the error of the m-term truncation decays
like n^-(k+m+1)); see the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import numpy as np

from .errors import RegimeError
from .model import ModelParams, _require_valid

SATURATION_LIMIT = 1e305
SUPPORTED_MAX_ORDER = 8  # beyond this, coefficients can overflow for large K


class Regime(Enum):
    NONPERSISTENT = "nonpersistent"
    PERSISTENT = "persistent"


def regime_of(params: ModelParams) -> Regime:
    return Regime.PERSISTENT if params.persistent else Regime.NONPERSISTENT


def pochhammer(phi: float, n: int) -> float:
    """Rising factorial phi (phi+1) ... (phi+n-1), with empty product 1."""
    if n < 0:
        raise ValueError("pochhammer order must be >= 0")
    out = 1.0
    for i in range(n):
        out *= phi + i
    return out


def _poch_over_factorial(phi: float, n: int) -> float:
    """pochhammer(phi, n) / n! as one float product; avoids huge-int blowup."""
    out = 1.0
    for i in range(n):
        out *= (phi + i) / (i + 1)
    return out


@dataclass
class ExpansionTable:
    """Triangular coefficient table, indexed by (k: idle servers, m: order).

    Out-of-range reads (k > K, or m below the regime's minimum order) return
    zero; the recursions rely on that convention.  `saturated` marks entries
    whose magnitude exceeded double precision.
    """

    regime: Regime
    coeffs: np.ndarray  # shape (K+1, max_order+1)
    max_order: int
    saturated: np.ndarray

    @property
    def capacity(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def min_order(self) -> int:
        return 1 if self.regime is Regime.NONPERSISTENT else 0

    def coeff(self, k: int, m: int) -> float:
        if k > self.capacity or m < self.min_order:
            return 0.0
        if k < 0 or m > self.max_order:
            raise IndexError(f"coefficient ({k}, {m}) outside table")
        return float(self.coeffs[k, m])


def gamma_table(params: ModelParams, max_order: int,
                general_only: bool = False) -> ExpansionTable:
    """Coefficient table for the nonpersistent regime.

    Orders 1..3 use their closed low-order recursions; higher orders use the
    general recursion with the Pochhammer convolution.  `general_only`
    forces the general recursion from order 2 on (used for cross-checking
    the two paths).
    """
    _require_valid(params)
    w = params.blocked_loss_prob
    if w <= 0.0:
        raise RegimeError("gamma_table requires abandonment: (1-r) + r(1-q) > 0")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")

    lam = params.arrival_rate
    mu = params.retrial_rate
    K = params.capacity
    nu = params.nu
    g = np.zeros((K + 1, max_order + 1))

    def G(k: int, m: int) -> float:
        if k > K or m < 1:
            return 0.0
        return g[k, m]

    with np.errstate(over="ignore", invalid="ignore"):
        g[0, 1] = lam * params.join_prob / (mu * w)
        for k in range(1, K + 1):
            g[k, 1] = nu[K - k + 1] / mu * g[k - 1, 1]
        for m in range(2, max_order + 1):
            # entry k = 0 follows from the exact row-sum identity
            g[0, m] = sum(G(k, m - k) * (-1) ** (k + 1) for k in range(1, K + 1)) / w
            for k in range(1, K + 1):
                if m == 2 and not general_only:
                    g[k, m] = (nu[K - k + 1] / mu * G(k - 1, 2)
                               + ((lam + nu[K - k]) / mu - g[0, 1] * (1 - params.retry_prob))
                               * G(k, 1))
                elif m == 3 and not general_only:
                    rbar = 1 - params.retry_prob
                    g[k, m] = (nu[K - k + 1] / mu * G(k - 1, 3)
                               + (lam / mu + g[0, 1] * params.retry_prob) * G(k + 1, 1)
                               + ((lam + nu[K - k]) / mu - g[0, 1] * rbar) * G(k, 2)
                               - (g[0, 1] * k + g[0, 2]) * rbar * G(k, 1))
                else:
                    g[k, m] = _gamma_general(params, g, k, m)
    return ExpansionTable(Regime.NONPERSISTENT, g, max_order, _saturation(g))


def _gamma_general(params: ModelParams, g: np.ndarray, k: int, m: int) -> float:
    """General-order recursion for gamma[k][m], k >= 1, m >= 2."""
    lam = params.arrival_rate
    mu = params.retrial_rate
    r = params.retry_prob
    K = params.capacity
    nu = params.nu

    def G(kk: int, mm: int) -> float:
        if kk > K or mm < 1:
            return 0.0
        return g[kk, mm]

    acc = (nu[K - k + 1] / mu * G(k - 1, m)
           + lam / mu * G(k + 1, m - 2)
           + (lam + nu[K - k]) / mu * G(k, m - 1))
    for j in range(m - 1):  # j = 0 .. m-2
        if j == 0:
            phi_j = (1 - r) * G(k, 1)
        else:
            # alpha/beta collect the shift (n+1 -> n) of the two flux rows;
            # the Pochhammer base follows the exponent of the shifted term
            alpha = (-1) ** (j + 1) * sum(
                G(k + 1, i) * _poch_over_factorial(k + i, j - i)
                for i in range(1, j + 1))
            beta = (-1) ** j * sum(
                G(k, i) * _poch_over_factorial(k + i - 1, j + 1 - i)
                for i in range(1, j + 2))
            phi_j = r * alpha + (1 - r) * beta
        acc += phi_j * G(0, m - j - 1) * (-1) ** (j + 1)
    return acc


def theta_table(params: ModelParams, max_order: int) -> ExpansionTable:
    """Coefficient table for the persistent regime (q = r = 1)."""
    _require_valid(params)
    if not params.persistent:
        raise RegimeError("theta_table requires q = 1 and r = 1")
    if max_order < 0:
        raise ValueError("max_order must be >= 0")

    lam = params.arrival_rate
    mu = params.retrial_rate
    K = params.capacity
    nu = params.nu
    t = np.zeros((K + 1, max_order + 1))

    def T(k: int, m: int) -> float:
        if k > K or m < 0:
            return 0.0
        return t[k, m]

    with np.errstate(over="ignore", invalid="ignore"):
        t[0, 0] = lam * params.join_prob / nu[K]
        if K >= 1:
            t[1, 0] = lam * params.join_prob / mu
        for k in range(2, K + 1):
            t[k, 0] = nu[K - k + 1] / mu * t[k - 1, 0]
        for m in range(1, max_order + 1):
            # k = 1 from the exact row-sum identity, then k = 2..K, k = 0 last
            if K >= 1:
                t[1, m] = sum(T(i, m + 1 - i) * (-1) ** i
                              for i in range(2, min(K, m + 1) + 1))
            for k in range(2, K + 1):
                acc = (nu[K - k + 1] / mu * T(k - 1, m)
                       + lam / mu * T(k + 1, m - 2)
                       + (lam + nu[K - k]) / mu * T(k, m - 1))
                for j in range(m):  # j = 0 .. m-1
                    conv = (-1) ** j * sum(
                        T(k + 1, i) * _poch_over_factorial(k + i, j - i)
                        for i in range(j + 1))
                    acc += conv * T(0, m - j - 1) * (-1) ** (j + 1)
                t[k, m] = acc
            acc0 = -lam / nu[K] * T(1, m - 1)
            for j in range(1, m + 1):
                conv = (-1) ** j * sum(
                    T(1, i) * _poch_over_factorial(i, j - i)
                    for i in range(1, j + 1))
                acc0 += mu / nu[K] * conv * T(0, m - j) * (-1) ** j
            t[0, m] = acc0
    return ExpansionTable(Regime.PERSISTENT, t, max_order, _saturation(t))


def _saturation(coeffs: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return ~np.isfinite(coeffs) | (np.abs(coeffs) > SATURATION_LIMIT)


def eval_expansion(table: ExpansionTable, n: int, terms: int) -> np.ndarray:
    """Truncated series for the whole row r(n), one value per system state.

    `terms` is the highest order m used: nonpersistent sums orders 1..m,
    persistent sums orders 0..m.
    """
    if n < 1:
        raise ValueError("level must be >= 1")
    if terms > table.max_order:
        raise ValueError(f"requested {terms} terms but table holds {table.max_order}")
    if terms < table.min_order:
        raise ValueError(f"terms must be >= {table.min_order} in this regime")
    K = table.capacity
    out = np.zeros(K + 1)
    nf = float(n)
    if table.regime is Regime.NONPERSISTENT:
        for k in range(K + 1):
            out[K - k] = sum(table.coeffs[k, i] * (-1) ** (i + 1) * nf ** -(k + i)
                             for i in range(1, terms + 1))
    else:
        for k in range(K + 1):
            out[K - k] = sum(table.coeffs[k, i] * (-1) ** i * nf ** -(k + i)
                             for i in range(0, terms + 1))
    return out


def explicit_small_k(params: ModelParams, n: int) -> np.ndarray:
    """Closed-form row r(n) for the persistent regime with K = 1 or K = 2."""
    _require_valid(params)
    if not params.persistent:
        raise RegimeError("closed forms require q = r = 1")
    if params.capacity not in (1, 2):
        raise RegimeError("closed forms exist only for K = 1 or K = 2")
    if n < 1:
        raise ValueError("level must be >= 1")
    lam = params.arrival_rate
    mu = params.retrial_rate
    lp = lam * params.join_prob
    nu = params.nu
    nm = n * mu
    if params.capacity == 1:
        return np.array([lp / nm, lp / nm * (lam + nm) / nu[1]])
    denom = lam + nu[1] + nm
    r0 = lp * nu[1] / (nm * denom)
    r1 = lp * (lam + nm) / (nm * denom)
    shifted = lam + nu[1] + (n + 1) * mu
    r2 = (lp * ((lam + nm) ** 2 + nm * nu[1])
          / (nm * (nu[2] * shifted + lp * nu[1]))) * shifted / denom
    return np.array([r0, r1, r2])
