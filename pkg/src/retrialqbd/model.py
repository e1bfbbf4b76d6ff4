"""Queue model parameters and level-dependent generator blocks.

The system is an M/M/c/K queue (c servers, K - c waiting positions) with a
retrial orbit.  A blocked arrival joins the orbit with probability p.  Each
orbiting customer leaves the orbit after an exponential time with rate mu;
it then retries with probability r (abandoning otherwise) and, if the retry
finds the system full, rejoins the orbit with probability q (abandoning
otherwise).  With i customers in the system the total service rate is nu[i].

The pair (customers in system, customers in orbit) is a continuous-time
Markov chain whose generator is block tridiagonal when grouped by orbit
occupancy n; the three (K+1) x (K+1) blocks at level n are produced by
:func:`build_blocks`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RegimeError


@dataclass(frozen=True)
class ModelParams:
    """All queue parameters.

    arrival_rate   lambda, rate of primary (external) arrivals, > 0
    retrial_rate   mu, per-customer orbit departure rate, > 0
    join_prob      p, probability a blocked arrival joins the orbit
    rejoin_prob    q, probability a blocked retrial rejoins the orbit
    retry_prob     r, probability an orbit departure retries (vs abandons)
    servers        c, number of servers, >= 1
    capacity       K, system capacity (servers + buffer), >= c
    service_rates  (nu_0, ..., nu_K), nondecreasing with nu_0 = 0
    """

    arrival_rate: float
    retrial_rate: float
    join_prob: float
    rejoin_prob: float
    retry_prob: float
    servers: int
    capacity: int
    service_rates: tuple[float, ...]

    @property
    def blocked_loss_prob(self) -> float:
        """Probability that an orbit departure facing a full system is lost.

        Equals (1-r) + r*(1-q): abandonment either at the departure epoch or
        at the blocked retry.  Zero exactly in the persistent case q = r = 1.
        """
        return (1.0 - self.retry_prob) + self.retry_prob * (1.0 - self.rejoin_prob)

    @property
    def persistent(self) -> bool:
        """True when orbiting customers never abandon (q = r = 1)."""
        return self.rejoin_prob == 1.0 and self.retry_prob == 1.0

    @property
    def nu(self) -> np.ndarray:
        return np.asarray(self.service_rates, dtype=float)


def linear_service_rates(capacity: int, unit: float = 1.0) -> tuple[float, ...]:
    """Service-rate vector nu_i = i * unit (one shared rate per busy server)."""
    return tuple(unit * i for i in range(capacity + 1))


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`; collects every violated invariant."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(self.violations)


def validate(params: ModelParams) -> ValidationReport:
    """Check all parameter invariants, reporting every violation at once."""
    v: list[str] = []
    if not params.arrival_rate > 0:
        v.append("lambda must be > 0")
    if not params.retrial_rate > 0:
        v.append("mu must be > 0")
    for name, value in (("p", params.join_prob),
                        ("q", params.rejoin_prob),
                        ("r", params.retry_prob)):
        if not 0.0 <= value <= 1.0:
            v.append(f"{name} out of [0,1]")
    if params.servers < 1:
        v.append("c must be a positive integer")
    if params.capacity < params.servers:
        v.append("K must be >= c")
    nu = params.service_rates
    if len(nu) != params.capacity + 1:
        v.append(f"nu must have K+1 = {params.capacity + 1} entries, got {len(nu)}")
    else:
        if nu[0] != 0.0:
            v.append("nu[0] must be 0")
        if any(nu[i + 1] < nu[i] for i in range(len(nu) - 1)):
            v.append("nu must be nondecreasing")
    return ValidationReport(v)


@dataclass(frozen=True)
class ErgodicityResult:
    ergodic: bool
    rho: float


def check_ergodicity(params: ModelParams) -> ErgodicityResult:
    """Decide ergodicity and return rho = lambda*p / nu_K.

    Any abandonment channel (q < 1 or r < 1) makes the chain ergodic for all
    rates.  In the persistent case q = r = 1 the chain is ergodic iff
    rho < 1.
    """
    _require_valid(params)
    nu_k = params.service_rates[-1]
    if params.persistent and nu_k <= 0.0:
        raise RegimeError("rho undefined: nu[K] = 0 with q = r = 1")
    rho = params.arrival_rate * params.join_prob / nu_k if nu_k > 0 else float("inf")
    ergodic = (not params.persistent) or rho < 1.0
    return ErgodicityResult(ergodic, rho)


@dataclass(frozen=True)
class GeneratorBlocks:
    """The three generator blocks for one orbit level n.

    q0 moves the orbit up (blocked arrival joins), q1 acts within the level,
    q2 moves the orbit down (orbit departure).  q0 + q1 + q2 has zero row
    sums for every n.
    """

    level: int
    q0: np.ndarray
    q1: np.ndarray
    q2: np.ndarray


def build_blocks(params: ModelParams, n: int) -> GeneratorBlocks:
    """Assemble the level-n blocks of the block-tridiagonal generator."""
    _require_valid(params)
    if n < 0:
        raise ValueError(f"level must be >= 0, got {n}")
    lam = params.arrival_rate
    mu = params.retrial_rate
    p = params.join_prob
    r = params.retry_prob
    w = params.blocked_loss_prob
    K = params.capacity
    nu = params.nu

    q0 = np.zeros((K + 1, K + 1))
    q0[K, K] = lam * p

    q1 = np.zeros((K + 1, K + 1))
    for i in range(K):
        q1[i, i + 1] = lam
        q1[i, i] = -(lam + n * mu + nu[i])
    for i in range(1, K + 1):
        q1[i, i - 1] = nu[i]
    q1[K, K] = -(lam * p + n * mu * w + nu[K])

    q2 = np.zeros((K + 1, K + 1))
    for i in range(K):
        q2[i, i] = n * mu * (1.0 - r)
        q2[i, i + 1] = n * mu * r
    q2[K, K] = n * mu * w

    for m in (q0, q1, q2):
        m.setflags(write=False)
    return GeneratorBlocks(n, q0, q1, q2)


def _require_valid(params: ModelParams) -> None:
    report = validate(params)
    if not report.ok:
        raise ValueError(f"invalid model parameters: {report}")
