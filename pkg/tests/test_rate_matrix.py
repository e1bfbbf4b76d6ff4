import numpy as np
import pytest

from retrialqbd import (ModelParams, NonErgodicError, backward_sweep,
                        build_blocks, censored_generator, compute_rate_rows,
                        linear_service_rates, rate_map,
                        stationary_distribution)

from sim_oracle import brute_force_stationary, simulate_single_server


def make(lam=1.0, mu=1.0, p=1.0, q=1.0, r=1.0, c=1, K=1, nu=None):
    if nu is None:
        nu = linear_service_rates(K)
    return ModelParams(lam, mu, p, q, r, c, K, tuple(nu))


MIXED = make(lam=1.3, mu=0.9, p=0.6, q=0.7, r=0.5, c=3, K=3)
PERSISTENT_K2 = make(lam=1.0, mu=1.0, p=1.0, c=2, K=2)


class TestRateMap:
    def test_zero_seed_matches_direct_inverse(self):
        params = make()
        got = rate_map(params, 1, np.zeros((2, 2)))
        want = build_blocks(params, 0).q0 @ np.linalg.inv(-build_blocks(params, 1).q1)
        assert np.allclose(got, want, atol=1e-14)

    def test_result_rows_structurally_zero(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 0.2, size=(4, 4))
        out = rate_map(MIXED, 5, x)
        assert np.all(out[:3] == 0.0)

    def test_fixed_point_residual(self):
        for params in (MIXED, PERSISTENT_K2):
            seq = compute_rate_rows(params, 30)
            for n in range(1, 30):
                resid = (build_blocks(params, n - 1).q0
                         + seq.full_matrix(n) @ build_blocks(params, n).q1
                         + seq.full_matrix(n) @ seq.full_matrix(n + 1)
                         @ build_blocks(params, n + 1).q2)
                assert np.abs(resid).max() < 1e-9

    def test_no_orbit_entry_gives_zero_map(self):
        params = make(p=0.0, q=0.7, r=0.5)
        rng = np.random.default_rng(5)
        for _ in range(5):
            x = rng.uniform(0, 0.3, size=(2, 2))
            assert np.all(rate_map(params, 2, x) == 0.0)


class TestComputeRateRows:
    def test_single_server_closed_form_row(self):
        params = make(lam=0.5)
        seq = compute_rate_rows(params, 10)
        assert seq.row(10)[0] == pytest.approx(0.05, abs=1e-12)
        assert seq.row(10)[1] == pytest.approx(0.525, abs=1e-12)

    def test_two_server_closed_form_entry(self):
        seq = compute_rate_rows(PERSISTENT_K2, 5)
        assert seq.row(5)[0] == pytest.approx(1.0 / 35.0, rel=1e-10)

    def test_row_sum_identity_all_levels(self):
        for params in (MIXED, PERSISTENT_K2, make(lam=0.8, q=0.3, r=1.0, K=2, c=2)):
            lam_p = params.arrival_rate * params.join_prob
            mu = params.retrial_rate
            w = params.blocked_loss_prob
            seq = compute_rate_rows(params, 50)
            for n in range(1, 51):
                row = seq.row(n)
                total = row[:-1].sum() + w * row[-1]
                assert total == pytest.approx(lam_p / (n * mu), abs=10 * seq.tol)

    def test_monotone_in_depth(self):
        for params in (MIXED, PERSISTENT_K2):
            prev = backward_sweep(params, 20, 1)
            for k in range(2, 6):
                cur = backward_sweep(params, 20, 2 ** k - 1)
                assert np.all(cur - prev >= -1e-14)
                prev = cur

    def test_non_ergodic_rejected(self):
        with pytest.raises(NonErgodicError):
            compute_rate_rows(make(lam=2.0), 10)

    def test_depth_cap_enforced(self):
        from retrialqbd import ConvergenceError
        with pytest.raises(ConvergenceError):
            compute_rate_rows(make(lam=0.5), 10, depth_cap=1)

    def test_accepted_depth_recorded(self):
        seq = compute_rate_rows(MIXED, 20)
        assert seq.iterations >= 3
        assert (seq.iterations + 1) & seq.iterations == 0  # 2^k - 1 shape

    def test_entries_nonnegative(self):
        seq = compute_rate_rows(MIXED, 40)
        assert seq.rows.min() >= 0.0

    def test_no_orbit_entry_gives_zero_rows(self):
        seq = compute_rate_rows(make(p=0.0, q=0.5), 10)
        assert np.all(seq.rows == 0.0)

    def test_downward_flux_matches_balance_definition(self):
        params = MIXED
        seq = compute_rate_rows(params, 10)
        n = 4
        row = seq.row(n)
        mu, r = params.retrial_rate, params.retry_prob
        w = params.blocked_loss_prob
        expect = np.zeros(4)
        expect[0] = n * mu * (1 - r) * row[0]
        for i in (1, 2):
            expect[i] = n * mu * r * row[i - 1] + n * mu * (1 - r) * row[i]
        expect[3] = n * mu * r * row[2] + n * mu * w * row[3]
        assert np.allclose(seq.downward_flux(params, n), expect, atol=1e-14)


class TestCensoredGenerator:
    def test_row_sums_zero(self):
        seq = compute_rate_rows(MIXED, 20)
        for n in (1, 2, 7, 20):
            gen = censored_generator(MIXED, seq, n)
            assert np.abs(gen.sum(axis=1)).max() < 1e-10

    def test_level_one_is_boundary_block(self):
        seq = compute_rate_rows(MIXED, 5)
        gen = censored_generator(MIXED, seq, 1)
        want = np.asarray(build_blocks(MIXED, 0).q1).copy()
        want[-1] += seq.row(1) @ build_blocks(MIXED, 1).q2
        assert np.allclose(gen, want, atol=1e-14)

    def test_corner_row_sums_offset_down_rates(self):
        params = MIXED
        seq = compute_rate_rows(params, 20)
        n = 6
        K1 = params.capacity + 1
        corner = np.asarray(build_blocks(params, n - 1).q1).copy()
        corner[-1] += seq.row(n) @ build_blocks(params, n).q2
        sums = corner.sum(axis=1)
        mu = params.retrial_rate
        for i in range(K1 - 1):
            assert sums[i] == pytest.approx(-(n - 1) * mu, abs=1e-9)
        assert sums[-1] == pytest.approx(
            -(n - 1) * mu * params.blocked_loss_prob, abs=1e-9)

    def test_out_of_range_level(self):
        seq = compute_rate_rows(MIXED, 5)
        with pytest.raises(ValueError):
            censored_generator(MIXED, seq, 6)


class TestStationaryDistribution:
    def test_balance_equations(self):
        params = MIXED
        N = 60
        seq = compute_rate_rows(params, N)
        dist = stationary_distribution(params, seq)
        worst = 0.0
        for n in range(1, N):
            resid = (dist.pi[n - 1] @ build_blocks(params, n - 1).q0
                     + dist.pi[n] @ build_blocks(params, n).q1
                     + dist.pi[n + 1] @ build_blocks(params, n + 1).q2)
            worst = max(worst, np.abs(resid).max())
        assert worst < 1e-10

    def test_normalized(self):
        seq = compute_rate_rows(MIXED, 60)
        dist = stationary_distribution(MIXED, seq)
        assert dist.pi.sum() == pytest.approx(1.0, abs=1e-10)
        assert dist.pi.min() >= 0.0
        assert 0.0 < dist.mass_captured <= 1.0

    def test_propagation_identity(self):
        seq = compute_rate_rows(MIXED, 40)
        dist = stationary_distribution(MIXED, seq)
        for n in range(1, 41):
            want = dist.pi[n - 1] @ seq.full_matrix(n)
            assert np.allclose(dist.pi[n], want, atol=1e-10)

    def test_ratio_identity_with_rate_rows(self):
        # pi[n, K-k] / pi[n, K] equals r(n)[K-k] / r(n)[K]
        params = MIXED
        seq = compute_rate_rows(params, 40)
        dist = stationary_distribution(params, seq)
        K = params.capacity
        for n in range(1, 41):
            row = seq.row(n)
            if dist.pi[n, K] == 0.0:
                continue
            for k in range(K + 1):
                got = dist.pi[n, K - k] / dist.pi[n, K]
                want = row[K - k] / row[K]
                assert got == pytest.approx(want, rel=1e-9)

    def test_orbit_never_entered(self):
        params = make(p=0.0, q=0.5, K=2, c=2)
        seq = compute_rate_rows(params, 10)
        dist = stationary_distribution(params, seq)
        assert dist.pi[0].sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(dist.pi[1:] == 0.0)
        assert dist.mass_captured == pytest.approx(1.0)

    def test_truncation_before_decay_flags_warning(self):
        # at rho = 0.9 the level masses grow until n ~ 8; truncating at 5
        # leaves most of the mass outside the kept range
        params = make(lam=9.0, c=10, K=10)
        seq = compute_rate_rows(params, 5)
        dist = stationary_distribution(params, seq)
        assert dist.tail_warning
        assert 0.0 < dist.mass_captured < 0.9
        assert dist.pi.sum() == pytest.approx(1.0, abs=1e-10)

    def test_matches_brute_force_generator_solve(self):
        # enumerate all (i, n) states and solve the global balance system
        # directly; no rate matrices, no censoring
        cases = [
            make(lam=1.3, mu=0.9, p=0.6, q=0.7, r=0.5, c=2, K=2),
            make(lam=1.0, mu=1.0, p=1.0, c=2, K=2),
            make(lam=14.0, mu=1.0, p=0.7, q=0.35, r=1.0, c=10, K=10),
        ]
        for params in cases:
            cap = 80
            brute = brute_force_stationary(
                params.arrival_rate, params.retrial_rate, params.join_prob,
                params.rejoin_prob, params.retry_prob, params.capacity,
                params.nu, cap)
            seq = compute_rate_rows(params, cap)
            dist = stationary_distribution(params, seq)
            assert np.abs(brute[:61] - dist.pi[:61]).max() < 1e-12

    def test_single_server_against_simulation(self):
        lam, mu, nu1 = 0.5, 1.0, 1.0
        params = make(lam=lam, mu=mu, nu=(0.0, nu1))
        seq = compute_rate_rows(params, 400)
        dist = stationary_distribution(params, seq)

        busy, orbit, joint = simulate_single_server(lam, mu, nu1, seed=20240817)
        n_chains = busy.shape[0]

        def band(samples):
            return samples.mean(), 3.0 * samples.std(ddof=1) / np.sqrt(n_chains)

        mean, half = band(busy)
        assert abs(mean - dist.pi[:, 1].sum()) < half
        for cell in range(orbit.shape[1]):
            mean, half = band(orbit[:, cell])
            assert abs(mean - dist.pi[cell].sum()) < half
        for i in (0, 1):
            for cell in range(joint.shape[2]):
                mean, half = band(joint[:, i, cell])
                assert abs(mean - dist.pi[cell, i]) < half
