import numpy as np
import pytest

from curvflow.assembly import assemble_residual
from curvflow.elements import ElementKind
from curvflow.fespace import DiscreteField, build_space, interpolate
from curvflow.mesh import build_disk_mesh
from curvflow.model import FlowRegime
from curvflow.oracle import (
    OracleError,
    exact_mcf_arrival,
    radial_solve,
    regularization_gap,
)
from tests.conftest import cached_profile


class TestExactArrival:
    def test_boundary_zero(self):
        assert exact_mcf_arrival(1.0, 2, np.array([0.6, 0.8])) == pytest.approx(0.0)

    def test_center_values(self):
        assert exact_mcf_arrival(1.0, 2, np.array([0.0, 0.0, 0.0])) == pytest.approx(0.25)
        assert exact_mcf_arrival(1.0, 1, np.array([0.0, 0.0])) == pytest.approx(0.5)

    def test_requires_curved_flow(self):
        with pytest.raises(ValueError):
            exact_mcf_arrival(1.0, 0, np.array([0.0]))


class TestRadialSolve:
    def test_boundary_and_symmetry(self):
        p = cached_profile(FlowRegime.mcf(), 0.2, 1.0, 1, 10000)
        assert abs(p.u[-1]) < 1e-12
        assert abs(p.du[0]) < 1e-12

    def test_ode_residual(self):
        p = cached_profile(FlowRegime.mcf(), 0.1, 1.0, 1, 10000)
        assert p.ode_residual < 1e-8

    def test_self_convergence(self):
        a = radial_solve(FlowRegime.mcf(), 0.2, 1.0, 1, resolution=10000)
        b = radial_solve(FlowRegime.mcf(), 0.2, 1.0, 1, resolution=20000)
        assert np.max(np.abs(b.u[::2] - a.u)) < 1e-8

    def test_profile_monotone_mcf(self):
        p = cached_profile(FlowRegime.mcf(), 0.2, 1.0, 1, 10000)
        assert np.all(np.diff(p.u) <= 1e-14)

    def test_gap_decreases_with_eps(self):
        gaps = []
        for eps in (0.5, 0.25, 0.125):
            p = cached_profile(FlowRegime.mcf(), eps, 1.0, 1, 10000)
            exact = (1.0 - p.r**2) / 2.0
            gaps.append(np.max(np.abs(p.u - exact)))
        assert gaps[0] > gaps[1] > gaps[2] > 0

    def test_regularization_gap_table(self):
        rows = regularization_gap(FlowRegime.mcf(), 1.0, 1, [0.5, 0.25], resolution=4000)
        assert rows[0]["gap"] > rows[1]["gap"] > 0
        assert all(r["accuracy"] >= 0 for r in rows)
        with pytest.raises(ValueError):
            regularization_gap(FlowRegime.imcf(), 1.0, 1, [0.5])

    def test_imcf_sign(self):
        p = cached_profile(FlowRegime.imcf(), 0.25, 1.0, 0, 4000)
        assert p.u[0] < 0  # expanding flow labels the interior negatively

    def test_unsolvable_interval_mcf_reports_divergence(self):
        # the contracting 1D problem has no smooth solution once the interval
        # outgrows the regularization scale
        with pytest.raises(OracleError):
            radial_solve(FlowRegime.mcf(), 0.2, 1.0, 0, resolution=2000)

    def test_extension_beyond_radius(self):
        p = cached_profile(FlowRegime.mcf(), 0.25, 1.0, 1, 10000)
        inside = p.value(np.array([0.999]))[0]
        outside = p.value(np.array([1.002]))[0]
        assert outside < inside  # quadratic continuation keeps the slope


class TestConsistencyBridge:
    def test_interpolated_profile_residual_decreases(self):
        # the plain interpolant of the reference satisfies the discrete
        # equation against interior test functions up to interpolation error
        regime = FlowRegime.mcf()
        prof = cached_profile(regime, 0.25, 1.0, 1, 10000)
        ref = prof.as_field(2)
        sups = []
        for h in (0.5, 0.25, 0.125):
            sp = build_space(build_disk_mesh(1.0, h), ElementKind("argyris", 5), True)
            u = interpolate(sp, ref)
            res = assemble_residual(sp, u, regime, 0.25)
            free = sp.free_mask()
            sups.append(float(np.max(np.abs(res[free]))))
        assert sups[0] > sups[1] > sups[2]
