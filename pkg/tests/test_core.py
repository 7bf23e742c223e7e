"""Measures, kernels, and mixture targets against independent references."""

import math

import numpy as np
import pytest

import oracles
from nsflows import core
from nsflows.core import (
    GaussianKernel,
    GaussianMixture,
    LIKELIHOOD_FLOOR,
    ParticleMeasure,
    as_point,
    four_component_target,
    kernel_eval,
    kernel_eval_atoms,
    kernel_grad_theta,
    marginal_likelihood,
    mixture_density,
    paw_target,
    sample_mixture,
)


class TestParticleMeasure:
    def test_basic_properties(self):
        mu = ParticleMeasure([[0.0, 0.0], [1.0, 2.0]], [0.25, 0.75])
        assert mu.n == 2
        assert mu.dim == 2
        assert mu.weights.sum() == 1.0

    def test_weight_sum_tolerance(self):
        # inside the 1e-12 window: accepted and exactly renormalised
        w = np.array([0.5, 0.5 + 5e-13])
        mu = ParticleMeasure([[0.0], [1.0]], w)
        assert mu.weights.sum() == 1.0
        with pytest.raises(ValueError, match="sum"):
            ParticleMeasure([[0.0], [1.0]], [0.5, 0.6])

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError, match="lengths"):
            ParticleMeasure([[0.0], [1.0]], [1.0])
        with pytest.raises(ValueError, match="non-finite"):
            ParticleMeasure([[np.nan]], [1.0])
        with pytest.raises(ValueError, match="non-finite"):
            ParticleMeasure([[0.0]], [np.inf])
        with pytest.raises(ValueError, match="nonnegative"):
            ParticleMeasure([[0.0], [1.0]], [1.5, -0.5])

    def test_ess(self):
        uni = ParticleMeasure(np.zeros((4, 1)), np.full(4, 0.25))
        assert uni.ess() == pytest.approx(4.0, abs=1e-12)
        degen = ParticleMeasure(np.zeros((4, 1)), [1.0, 0.0, 0.0, 0.0])
        assert degen.ess() == pytest.approx(1.0, abs=1e-12)

    def test_with_weights_keeps_atoms(self):
        mu = ParticleMeasure([[0.0], [1.0]], [0.5, 0.5])
        nu = mu.with_weights([0.1, 0.9])
        assert nu.atoms is mu.atoms
        assert np.allclose(nu.weights, [0.1, 0.9])

    def test_as_point(self):
        assert as_point([1, 2]).dtype == float
        with pytest.raises(ValueError, match="dimension"):
            as_point([1.0, 2.0], dim=3)
        with pytest.raises(ValueError, match="non-finite"):
            as_point([np.inf])


class TestGaussianKernel:
    def test_standard_normal_values(self):
        # 1-D unit bandwidth: phi(0) and phi(2) frozen from the oracle
        k = GaussianKernel(1.0, dim=1)
        assert kernel_eval(k, [0.0], [0.0]) == pytest.approx(
            0.3989422804014327, abs=1e-15
        )
        assert kernel_eval(k, [1.0], [-1.0]) == pytest.approx(
            0.053990966513188052, abs=1e-15
        )

    def test_peak_value_2d(self):
        # at zero distance the 2-D density is 1 / (2 pi h^2)
        k = GaussianKernel(1.0, dim=2)
        assert kernel_eval(k, [0.0, 0.0], [0.0, 0.0]) == pytest.approx(
            0.15915494309189534, abs=1e-15
        )

    def test_matches_reference_pdf(self):
        k = GaussianKernel(0.35, dim=2)
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, th = rng.normal(size=2), rng.normal(size=2)
            assert kernel_eval(k, x, th) == pytest.approx(
                oracles.iso_gauss_pdf(x, th, 0.35), rel=1e-12
            )

    def test_symmetry(self):
        k = GaussianKernel(0.7, dim=3)
        x, th = np.array([1.0, 2.0, -1.0]), np.array([0.5, 0.0, 0.25])
        assert kernel_eval(k, x, th) == kernel_eval(k, th, x)

    def test_vectorised_matches_scalar(self):
        k = GaussianKernel(0.35, dim=2)
        rng = np.random.default_rng(1)
        x = rng.normal(size=2)
        atoms = rng.normal(size=(6, 2))
        vals = kernel_eval_atoms(k, x, atoms)
        for i in range(6):
            assert vals[i] == pytest.approx(kernel_eval(k, x, atoms[i]), rel=1e-14)

    def test_gradient_matches_central_differences(self):
        k = GaussianKernel(0.6, dim=2)
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.normal(size=2)
            th = rng.normal(size=2)
            grad = kernel_grad_theta(k, x, th[None, :])[0]
            num = oracles.central_diff_grad(lambda t: kernel_eval(k, x, t), th)
            assert np.allclose(grad, num, rtol=1e-6, atol=1e-10)

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(ValueError, match="bandwidth"):
            GaussianKernel(0.0)
        with pytest.raises(ValueError, match="bandwidth"):
            GaussianKernel(-1.0)


class TestMarginalLikelihood:
    def test_two_atom_fixture(self):
        # atoms at -1 and +1 on the line, x = 1, unit bandwidth:
        # 0.5 phi(2) + 0.5 phi(0)
        mu = ParticleMeasure([[-1.0], [1.0]], [0.5, 0.5])
        k = GaussianKernel(1.0, dim=1)
        assert marginal_likelihood(mu, [1.0], k) == pytest.approx(
            0.22646662345731036, abs=1e-15
        )

    def test_floor_and_counter(self):
        mu = ParticleMeasure([[0.0]], [1.0])
        k = GaussianKernel(0.1, dim=1)
        core.reset_underflow_count()
        assert marginal_likelihood(mu, [1e6], k) == LIKELIHOOD_FLOOR
        assert core.underflow_count() == 1
        marginal_likelihood(mu, [0.0], k)
        assert core.underflow_count() == 1
        core.reset_underflow_count()
        assert core.underflow_count() == 0


class TestGaussianMixture:
    def test_weight_validation(self):
        with pytest.raises(ValueError, match="sum"):
            GaussianMixture([((0.0, 0.0), np.eye(2), 0.7)])
        with pytest.raises(ValueError, match="positive definite"):
            GaussianMixture([((0.0, 0.0), -np.eye(2), 1.0)])
        with pytest.raises(ValueError, match="symmetric"):
            GaussianMixture([((0.0, 0.0), np.array([[1.0, 0.5], [0.0, 1.0]]), 1.0)])

    def test_density_matches_reference(self):
        gm = paw_target()
        comps = [(gm.means[j], gm.covs[j], gm.weights[j]) for j in range(gm.n_components)]
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.normal(loc=6.5, scale=1.5, size=2)
            assert mixture_density(gm, x) == pytest.approx(
                oracles.mixture_pdf(x, comps), rel=1e-10
            )

    def test_density_integrates_to_one(self):
        # mid-point rule over a box that captures nearly all the mass
        gm = four_component_target()
        xs = np.linspace(-5, 5, 201)
        step = xs[1] - xs[0]
        total = sum(
            mixture_density(gm, (x, y)) for x in xs for y in xs
        ) * step**2
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_sampling_moments(self):
        gm = four_component_target()
        rng = np.random.default_rng(4)
        X = sample_mixture(gm, 40000, rng)
        # symmetric corners: mean 0; E[x^2] = 4 + 0.09 per coordinate
        assert np.allclose(X.mean(axis=0), [0.0, 0.0], atol=0.05)
        assert np.allclose((X**2).mean(axis=0), [4.09, 4.09], atol=0.1)

    def test_sampling_deterministic(self):
        gm = paw_target()
        a = sample_mixture(gm, 50, np.random.default_rng(7))
        b = sample_mixture(gm, 50, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_sample_shapes(self):
        gm = paw_target()
        assert sample_mixture(gm, 0, np.random.default_rng(0)).shape == (0, 2)
        with pytest.raises(ValueError):
            sample_mixture(gm, -1, np.random.default_rng(0))


class TestTargets:
    def test_paw_layout(self):
        gm = paw_target()
        assert gm.n_components == 7
        assert gm.dim == 2
        assert gm.weights.sum() == pytest.approx(1.0, abs=1e-15)
        # one palm, four toes above it, two heel lobes below
        assert sum(1 for m in gm.means if m[1] > 6.8) == 4
        assert sum(1 for m in gm.means if m[1] < 5.8) == 2
        # the whole paw sits far from the origin
        assert min(np.linalg.norm(m) for m in gm.means) > 7.0

    def test_four_component_layout(self):
        gm = four_component_target()
        assert gm.n_components == 4
        corners = {(float(m[0]), float(m[1])) for m in gm.means}
        assert corners == {(-2.0, -2.0), (-2.0, 2.0), (2.0, -2.0), (2.0, 2.0)}
        assert np.allclose(gm.weights, 0.25)
