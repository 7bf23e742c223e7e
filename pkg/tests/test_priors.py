"""Pitman-Yor stick-breaking against closed-form moments."""

import numpy as np
import pytest

from nsflows.priors import (
    PriorSpec,
    init_particles,
    prior_monte_carlo,
    stick_breaking_draw,
)


def _spec(d=0.2, c=10.0, var=25.0, K=64):
    return PriorSpec(d, c, (0.0, 0.0), var * np.eye(2), K=K)


class TestPriorSpec:
    def test_validation(self):
        with pytest.raises(ValueError, match="discount"):
            PriorSpec(-0.1, 10.0, (0.0,), np.eye(1))
        with pytest.raises(ValueError, match="discount"):
            PriorSpec(1.0, 10.0, (0.0,), np.eye(1))
        with pytest.raises(ValueError, match="concentration"):
            PriorSpec(0.2, -0.2, (0.0,), np.eye(1))
        with pytest.raises(ValueError, match="K"):
            PriorSpec(0.2, 10.0, (0.0,), np.eye(1), K=0)
        with pytest.raises(np.linalg.LinAlgError):
            PriorSpec(0.2, 10.0, (0.0, 0.0), -np.eye(2))
        with pytest.raises(ValueError, match="shape"):
            PriorSpec(0.2, 10.0, (0.0, 0.0), np.eye(3))

    def test_dirichlet_process_edge(self):
        # discount 0 with positive concentration is valid
        spec = PriorSpec(0.0, 1.0, (0.0,), np.eye(1), K=8)
        assert spec.discount == 0.0

    def test_base_sampling_moments(self):
        spec = _spec(var=25.0)
        rng = np.random.default_rng(0)
        X = spec.sample_base(40000, rng)
        assert np.allclose(X.mean(axis=0), 0.0, atol=0.1)
        assert np.allclose(X.var(axis=0), 25.0, atol=0.5)


class TestStickBreaking:
    def test_weights_sum_to_one(self):
        spec = _spec()
        rng = np.random.default_rng(1)
        for _ in range(50):
            mu = stick_breaking_draw(spec, rng)
            assert mu.n == spec.K
            assert mu.weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(mu.weights >= 0)

    def test_first_stick_mean(self):
        # E[w_1] = E[V_1] = (1 - d) / (1 + c) = 0.8 / 11 for PY(0.2, 10)
        spec = _spec(0.2, 10.0)
        rng = np.random.default_rng(2)
        draws = np.array([stick_breaking_draw(spec, rng).weights[0] for _ in range(20000)])
        expect = 0.8 / 11.0
        se = draws.std() / np.sqrt(draws.size)
        assert abs(draws.mean() - expect) < 3 * se

    def test_dirichlet_residual_mass(self):
        # for d = 0 the mass left after K-1 sticks has mean (c/(c+1))^(K-1)
        c, K = 2.0, 6
        spec = PriorSpec(0.0, c, (0.0,), np.eye(1), K=K)
        rng = np.random.default_rng(3)
        last = np.array([stick_breaking_draw(spec, rng).weights[-1] for _ in range(20000)])
        expect = (c / (c + 1.0)) ** (K - 1)
        se = last.std() / np.sqrt(last.size)
        assert abs(last.mean() - expect) < 3 * se

    def test_truncation_to_one_atom(self):
        spec = PriorSpec(0.2, 10.0, (0.0,), np.eye(1), K=1)
        mu = stick_breaking_draw(spec, np.random.default_rng(4))
        assert mu.n == 1
        assert mu.weights[0] == 1.0

    def test_deterministic_under_seed(self):
        spec = _spec()
        a = stick_breaking_draw(spec, np.random.default_rng(9))
        b = stick_breaking_draw(spec, np.random.default_rng(9))
        assert np.array_equal(a.atoms, b.atoms)
        assert np.array_equal(a.weights, b.weights)


class TestInitParticles:
    def test_uniform_weights_and_base_law(self):
        spec = _spec(var=9.0)
        mu = init_particles(spec, 500, np.random.default_rng(5))
        assert mu.n == 500
        assert np.allclose(mu.weights, 1.0 / 500)
        assert abs(mu.atoms.mean()) < 0.5
        assert abs(mu.atoms.var() - 9.0) < 1.0

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            init_particles(_spec(), 0, np.random.default_rng(0))


class TestPriorMonteCarlo:
    def test_draw_count_and_independence(self):
        spec = _spec(K=16)
        draws = prior_monte_carlo(spec, 3, np.random.default_rng(6))
        assert len(draws) == 3
        assert not np.array_equal(draws[0].atoms, draws[1].atoms)

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            prior_monte_carlo(_spec(), 0, np.random.default_rng(0))
