"""Rate-matrix rows, censored generator, and the joint stationary distribution.

The stationary vectors of consecutive orbit levels are linked by
pi_n = pi_{n-1} R(n), where R(n) is the minimal nonnegative solution of the
level-n quadratic matrix equation.  Because the up-block has a single
nonzero row, every R(n) is zero except for its last row r(n); all solvers
here work on that row directly and never form a matrix inverse.

r(n) is obtained by a backward fixed-point recursion seeded with the zero
matrix far above the requested horizon; the seeding depth is doubled until
the deepest requested row stops moving in L1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NonErgodicError, NumericalError
from .model import ModelParams, build_blocks, check_ergodicity, _require_valid

DEFAULT_TOL = 1e-10
DEPTH_CAP = 2 ** 20


@dataclass
class RateRowSequence:
    """Nonzero (last) rows of the rate matrices R(1), ..., R(N).

    rows[n] is r(n); row 0 is kept at zero so that indices match levels.
    `iterations` records the backward seeding depth accepted by the
    doubling scheme, i.e. the number of fixed-point compositions applied
    at the deepest level N (shallower levels get strictly more).
    """

    rows: np.ndarray
    horizon_N: int
    tol: float
    iterations: int

    def row(self, n: int) -> np.ndarray:
        if not 1 <= n <= self.horizon_N:
            raise IndexError(f"level {n} outside computed range 1..{self.horizon_N}")
        return self.rows[n]

    def downward_flux(self, params: ModelParams, n: int) -> np.ndarray:
        """Row of per-state rates into level n-1 as seen through r(n).

        Entry i combines the abandonment and successful-retry flows out of
        level n: r(n) @ q2(n).
        """
        return self.row(n) @ build_blocks(params, n).q2

    def full_matrix(self, n: int) -> np.ndarray:
        """R(n) as a dense matrix (zero everywhere except the last row)."""
        K1 = self.rows.shape[1]
        out = np.zeros((K1, K1))
        out[K1 - 1] = self.row(n)
        return out


class _SweepWorkspace:
    """Precomputed pieces of the per-level linear system.

    The within-level block is affine in n and the down block is linear in n,
    so a backward sweep only needs one template of each.
    """

    def __init__(self, params: ModelParams):
        _require_valid(params)
        K = params.capacity
        mu = params.retrial_rate
        self.lam_p = params.arrival_rate * params.join_prob
        self.base = -np.asarray(build_blocks(params, 0).q1)  # -q1 at n = 0
        diag = np.full(K + 1, mu)
        diag[K] = mu * params.blocked_loss_prob
        self.mu_diag = diag
        self.q2_unit = np.asarray(build_blocks(params, 1).q2)  # q2 at n = 1
        self.e_last = np.zeros(K + 1)
        self.e_last[K] = 1.0
        self.K = K

    def step(self, n: int, next_row: np.ndarray) -> np.ndarray:
        """One backward composition: the last row of R_n applied to e_K @ next_row."""
        A = self.base + np.diag(n * self.mu_diag)
        A[self.K] -= (n + 1) * (next_row @ self.q2_unit)
        try:
            y = np.linalg.solve(A.T, self.e_last)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular level-{n} system in backward sweep", level=n) from exc
        return self.lam_p * y


def rate_map(params: ModelParams, n: int, x: np.ndarray) -> np.ndarray:
    """Apply the level-n fixed-point map to a trial matrix x.

    Returns q0(n-1) @ inverse(-q1(n) - x @ q2(n+1)).  Only the last row of
    the result is nonzero, so a single transposed solve (LU with partial
    pivoting) is performed; no inverse is formed.
    """
    _require_valid(params)
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    K = params.capacity
    A = -np.asarray(build_blocks(params, n).q1)
    A -= np.asarray(x) @ build_blocks(params, n + 1).q2
    e_last = np.zeros(K + 1)
    e_last[K] = 1.0
    try:
        y = np.linalg.solve(A.T, e_last)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular level-{n} system", level=n) from exc
    out = np.zeros((K + 1, K + 1))
    out[K] = params.arrival_rate * params.join_prob * y
    return out


def backward_sweep(params: ModelParams, horizon_N: int, depth: int) -> np.ndarray:
    """Rows r(1..N) from one backward pass seeded with zeros at level N + depth.

    The row at level n receives N + depth - n compositions, so the horizon
    level N is always the least-converged one.
    """
    ws = _SweepWorkspace(params)
    rows = np.zeros((horizon_N + 1, ws.K + 1))
    row = np.zeros(ws.K + 1)
    for j in range(horizon_N + depth - 1, 0, -1):
        row = ws.step(j, row)
        if j <= horizon_N:
            rows[j] = row
    return rows


def compute_rate_rows(params: ModelParams, horizon_N: int,
                      tol: float = DEFAULT_TOL,
                      depth_cap: int = DEPTH_CAP) -> RateRowSequence:
    """Compute r(n) for n = 1..N by the doubling scheme.

    Seeding depths 2^k - 1 are tried for k = 1, 2, ...; convergence is
    declared when the L1 change of r(N) between consecutive trials drops
    below `tol`, and the deeper trial is returned.
    """
    if horizon_N < 1:
        raise ValueError("horizon_N must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    erg = check_ergodicity(params)
    if not erg.ergodic:
        raise NonErgodicError(f"lambda*p/nu_K = {erg.rho:.6g} >= 1 with q = r = 1")
    prev = backward_sweep(params, horizon_N, 1)
    k = 1
    while True:
        k += 1
        depth = 2 ** k - 1
        if depth > depth_cap:
            raise ConvergenceError(
                f"backward recursion not converged at depth cap {depth_cap}")
        cur = backward_sweep(params, horizon_N, depth)
        if np.abs(cur[horizon_N] - prev[horizon_N]).sum() < tol:
            return RateRowSequence(cur, horizon_N, tol, depth)
        prev = cur


def censored_generator(params: ModelParams, seq: RateRowSequence, n: int) -> np.ndarray:
    """Generator of the chain watched only on orbit levels 0..n-1.

    The block structure is unchanged except for the corner block, which is
    corrected by the probabilistic flow through the removed levels:
    q1(n-1) + R(n) q2(n).  Every row sums to zero.
    """
    if not 1 <= n <= seq.horizon_N:
        raise ValueError(f"censoring level must be in 1..{seq.horizon_N}, got {n}")
    K1 = params.capacity + 1
    out = np.zeros((n * K1, n * K1))
    for lev in range(n):
        blocks = build_blocks(params, lev)
        sl = slice(lev * K1, (lev + 1) * K1)
        if lev == n - 1:
            corner = np.asarray(blocks.q1).copy()
            corner[K1 - 1] += seq.row(n) @ build_blocks(params, n).q2
            out[sl, sl] = corner
        else:
            out[sl, sl] = blocks.q1
            out[sl, (lev + 1) * K1:(lev + 2) * K1] = blocks.q0
        if lev >= 1:
            out[sl, (lev - 1) * K1:lev * K1] = blocks.q2
    return out


@dataclass
class StationaryDistribution:
    """Joint stationary probabilities pi[n, i] for levels 0..N.

    Stored values are normalized so that the probabilities over the kept
    range sum to one.  `mass_captured` estimates which fraction of the full
    chain's mass the kept range represents (a geometric extrapolation of the
    level masses beyond N); `tail_warning` is set when the estimated missing
    fraction exceeds 1e-8.
    """

    pi: np.ndarray
    mass_captured: float
    horizon_N: int
    tail_warning: bool

    def level_mass(self, n: int) -> float:
        return float(self.pi[n].sum())


TAIL_MASS_WARN = 1e-8


def stationary_distribution(params: ModelParams, seq: RateRowSequence) -> StationaryDistribution:
    """Solve the boundary level and propagate pi_n = pi_{n-1} R(n) up to N.

    The boundary vector spans the one-dimensional null space of
    q1(0) + R(1) q2(1); it is found by replacing one column with ones
    (a stable pivot for irreducible generator null spaces).
    """
    K = params.capacity
    N = seq.horizon_N
    boundary = censored_generator(params, seq, 1)

    # the null direction is only as exact as the rate rows feeding R(1),
    # so the rank cutoff scales with the fixed-point tolerance
    sv = np.linalg.svd(boundary, compute_uv=False)
    cutoff = sv[0] * max(100.0 * seq.tol, (K + 1) * np.finfo(float).eps)
    null_dim = int((sv <= cutoff).sum())
    if null_dim != 1:
        raise NumericalError(
            f"boundary generator null space has dimension {null_dim}, expected 1")

    M = boundary.copy()
    M[:, 0] = 1.0
    rhs = np.zeros(K + 1)
    rhs[0] = 1.0
    try:
        pi0 = np.linalg.solve(M.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("boundary solve failed") from exc
    if pi0.min() < -1e-10 * max(pi0.max(), 1.0):
        raise NumericalError("boundary vector has significant negative entries")
    pi0 = np.maximum(pi0, 0.0)

    pi = np.zeros((N + 1, K + 1))
    pi[0] = pi0
    for n in range(1, N + 1):
        pi[n] = pi[n - 1][K] * seq.row(n)

    level_mass = pi.sum(axis=1)
    kept = float(level_mass.sum())
    tail = _tail_estimate(level_mass)
    mass_captured = kept / (kept + tail)
    return StationaryDistribution(
        pi / kept, mass_captured, N, bool(1.0 - mass_captured > TAIL_MASS_WARN))


def _tail_estimate(level_mass: np.ndarray) -> float:
    """Geometric extrapolation of the level masses beyond the horizon."""
    if len(level_mass) < 2 or level_mass[-1] <= 0.0 or level_mass[-2] <= 0.0:
        return 0.0  # dead tail: propagation keeps later levels at zero
    # masses still growing at the horizon give no usable decay ratio; clamp
    # so the captured fraction stays positive and the warning flag carries
    # the signal
    g = min(level_mass[-1] / level_mass[-2], 1.0 - 1e-12)
    return float(level_mass[-1] * g / (1.0 - g))
