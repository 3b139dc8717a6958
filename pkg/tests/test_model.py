import math

import numpy as np
import pytest

from curvflow.model import FlowRegime, eta, f_eps, f_eps_derivatives, linearized_coeffs


def random_points(rng, count, dim, lo=0.5, hi=2.0):
    """Random z with |z| in [lo, hi]: away from 0 so finite differences of the
    high-order derivatives stay in their asymptotic regime."""
    v = rng.standard_normal((count, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(lo, hi, size=(count, 1))


class TestRegime:
    def test_valid(self):
        assert FlowRegime.imcf() == FlowRegime(1, 1.0)
        assert FlowRegime.mcf() == FlowRegime(-1, -1.0)
        assert FlowRegime.mcf(3).alpha == pytest.approx(-1.0 / 3.0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            FlowRegime(1, 2.0)
        with pytest.raises(ValueError):
            FlowRegime(-1, -0.4)
        with pytest.raises(ValueError):
            FlowRegime(2, 1.0)

    def test_names(self):
        assert FlowRegime.imcf().name == "imcf"
        assert FlowRegime.mcf().name == "mcf"
        assert FlowRegime.mcf(2).name == "mcf2"


class TestFeps:
    def test_at_zero(self):
        assert f_eps(np.zeros(3), 0.7) == pytest.approx(0.7)

    def test_euclidean_limit(self):
        assert f_eps(np.array([3.0, 4.0]), 0.0) == pytest.approx(5.0)

    def test_arithmetic(self):
        assert f_eps(np.array([1.0, 1.0]), 1.0) == pytest.approx(math.sqrt(3.0))

    def test_gap_bound(self):
        rng = np.random.default_rng(0)
        z = rng.standard_normal((200, 3)) * 3
        for eps in (1.0, 0.3, 0.01):
            gap = f_eps(z, eps) - np.linalg.norm(z, axis=1)
            assert np.all(gap >= 0) and np.all(gap <= eps)


class TestDerivatives:
    def test_values_at_zero(self):
        g, h, t = f_eps_derivatives(np.zeros(2), 0.5)
        assert g == pytest.approx([0.0, 0.0])
        assert h == pytest.approx(np.eye(2) / 0.5)
        assert t == pytest.approx(np.zeros((2, 2, 2)))

    def test_hessian_eigenvalues(self):
        rng = np.random.default_rng(1)
        for z in random_points(rng, 50, 3):
            fe = f_eps(z, 0.4)
            _, h, _ = f_eps_derivatives(z, 0.4)
            eig = np.sort(np.linalg.eigvalsh(h))
            expected = np.sort([1.0 / fe, 1.0 / fe, 0.4**2 / fe**3])
            assert eig == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
    def test_finite_difference_chain(self, eps):
        # each derivative order is checked against central differences of the
        # previous one, grounding out at f_eps itself
        rng = np.random.default_rng(7)
        pts = random_points(rng, 100, 3)
        step = 1e-5 * (1.0 + np.linalg.norm(pts, axis=1))
        grad, hess, third = f_eps_derivatives(pts, eps)
        d = pts.shape[1]
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            hp = step[:, None] * e
            fd_g = (f_eps(pts + hp, eps) - f_eps(pts - hp, eps)) / (2 * step)
            assert fd_g == pytest.approx(grad[:, i], rel=1e-6)
            gp, _, _ = f_eps_derivatives(pts + hp, eps)
            gm, _, _ = f_eps_derivatives(pts - hp, eps)
            fd_h = (gp - gm) / (2 * step[:, None])
            assert fd_h == pytest.approx(hess[:, :, i], rel=1e-6, abs=1e-9)
            _, hp2, _ = f_eps_derivatives(pts + hp, eps)
            _, hm2, _ = f_eps_derivatives(pts - hp, eps)
            fd_t = (hp2 - hm2) / (2 * step[:, None, None])
            assert fd_t == pytest.approx(third[:, :, :, i], rel=1e-6, abs=1e-8)


class TestEta:
    def test_imcf(self):
        v, dv = eta(FlowRegime.imcf(), 2.0)
        assert v == pytest.approx(2.0) and dv == pytest.approx(1.0)

    def test_mcf_power_rule(self):
        v, dv = eta(FlowRegime.mcf(), 2.0)
        assert v == pytest.approx(-0.5) and dv == pytest.approx(0.25)

    def test_unit_argument(self):
        for regime in (FlowRegime.imcf(), FlowRegime.mcf(), FlowRegime.mcf(2)):
            v, _ = eta(regime, 1.0)
            assert v == regime.sigma

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            eta(FlowRegime.mcf(), 0.0)


class TestLinearizedCoeffs:
    def test_zero_gradient(self):
        a, c, lam, big = linearized_coeffs(FlowRegime.mcf(), 0.5, np.zeros(2))
        assert a == pytest.approx(-np.eye(2) / 0.5)
        assert c == pytest.approx(np.zeros(2))
        assert lam == pytest.approx(big) == pytest.approx(2.0)

    def test_drift_bound(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal((100, 2)) * 2
        for regime in (FlowRegime.imcf(), FlowRegime.mcf()):
            _, c, _, _ = linearized_coeffs(regime, 0.3, z)
            fe = f_eps(z, 0.3)
            _, deta = eta(regime, fe)
            assert np.all(np.linalg.norm(c, axis=-1) <= np.abs(deta) + 1e-14)

    def test_spectral_bounds_match_eigensolver(self):
        rng = np.random.default_rng(3)
        pts = random_points(rng, 100, 2, lo=0.0 + 1e-3, hi=3.0)
        a, _, lam, big = linearized_coeffs(FlowRegime.imcf(), 0.25, pts)
        for k in range(len(pts)):
            eig = np.linalg.eigvalsh(-a[k])
            assert eig.min() == pytest.approx(lam[k], rel=1e-10)
            assert eig.max() == pytest.approx(big[k], rel=1e-10)

    def test_condition_number(self):
        rng = np.random.default_rng(4)
        for z in random_points(rng, 30, 3):
            a, _, lam, big = linearized_coeffs(FlowRegime.mcf(), 0.2, z)
            cond = np.linalg.cond(-a)
            fe = f_eps(z, 0.2)
            assert cond == pytest.approx(fe**2 / 0.2**2, rel=1e-10)
            assert cond == pytest.approx(big / lam, rel=1e-10)
