"""Independent oracles: brute-force generator solve and event simulation.

Neither path touches the rate-matrix machinery.  The brute force enumerates
all states (i, n) up to an orbit cap and solves the global balance equations
directly; the simulator runs many Gillespie chains in numpy lockstep for the
single-server persistent model.
"""

from __future__ import annotations

import numpy as np


def brute_force_stationary(lam, mu, p, q, r, K, nu, orbit_cap):
    """Stationary distribution of the truncated chain by dense null solve.

    Returns pi with shape (orbit_cap + 1, K + 1); rows index the orbit.
    """
    size = (K + 1) * (orbit_cap + 1)
    idx = lambda i, n: n * (K + 1) + i
    gen = np.zeros((size, size))
    loss = (1 - r) + r * (1 - q)
    for n in range(orbit_cap + 1):
        for i in range(K + 1):
            s = idx(i, n)
            if i < K:
                gen[s, idx(i + 1, n)] += lam
            elif n < orbit_cap:
                gen[s, idx(K, n + 1)] += lam * p
            if i >= 1:
                gen[s, idx(i - 1, n)] += nu[i]
            if n >= 1:
                if i < K:
                    gen[s, idx(i, n - 1)] += n * mu * (1 - r)
                    gen[s, idx(i + 1, n - 1)] += n * mu * r
                else:
                    gen[s, idx(K, n - 1)] += n * mu * loss
    np.fill_diagonal(gen, 0.0)
    np.fill_diagonal(gen, -gen.sum(axis=1))
    gen[:, 0] = 1.0
    rhs = np.zeros(size)
    rhs[0] = 1.0
    pi = np.linalg.solve(gen.T, rhs)
    return pi.reshape(orbit_cap + 1, K + 1)


def simulate_single_server(lam: float, mu: float, nu1: float,
                           n_chains: int = 1000, n_steps: int = 10000,
                           orbit_cells: int = 4, seed: int = 0,
                           burn_frac: float = 0.2):
    """Time-average state occupancies from n_chains x n_steps events.

    Returns (busy_frac, orbit_occ, joint_occ):
      busy_frac[c]      per-chain fraction of time the server is busy
      orbit_occ[c, n]   per-chain fraction of time with n in orbit (n < orbit_cells)
      joint_occ[c, i, n] per-chain fraction of time in state (i, n)
    """
    rng = np.random.default_rng(seed)
    busy = np.zeros(n_chains, dtype=np.int64)
    orbit = np.zeros(n_chains, dtype=np.int64)
    burn = int(n_steps * burn_frac)
    total_time = np.zeros(n_chains)
    busy_time = np.zeros(n_chains)
    orbit_time = np.zeros((n_chains, orbit_cells))
    joint_time = np.zeros((n_chains, 2, orbit_cells))

    for step in range(n_steps):
        # active transitions: arrival (always), orbit retrial (only when the
        # server is idle: a blocked retrial rejoins, so no state change), and
        # service completion
        rate_arrival = np.full(n_chains, lam)
        rate_retry = np.where(busy == 0, orbit * mu, 0.0)
        rate_service = np.where(busy == 1, nu1, 0.0)
        total = rate_arrival + rate_retry + rate_service
        hold = rng.exponential(1.0 / total)
        if step >= burn:
            total_time += hold
            busy_time += hold * (busy == 1)
            cell = np.minimum(orbit, orbit_cells - 1)
            small = orbit < orbit_cells
            np.add.at(orbit_time, (np.arange(n_chains)[small], cell[small]), hold[small])
            np.add.at(joint_time,
                      (np.arange(n_chains)[small], busy[small], cell[small]),
                      hold[small])
        u = rng.random(n_chains) * total
        is_arrival = u < rate_arrival
        is_retry = ~is_arrival & (u < rate_arrival + rate_retry)
        is_service = ~is_arrival & ~is_retry
        # arrival: idle server is taken; busy server blocks it into the orbit
        orbit = orbit + (is_arrival & (busy == 1))
        busy = np.where(is_arrival & (busy == 0), 1, busy)
        # successful retrial: orbit customer takes the idle server
        orbit = orbit - is_retry
        busy = np.where(is_retry, 1, busy)
        busy = np.where(is_service, 0, busy)

    return (busy_time / total_time,
            orbit_time / total_time[:, None],
            joint_time / total_time[:, None, None])
