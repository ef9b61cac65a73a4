import numpy as np
import pytest

import uwdg
from uwdg.errors import InstabilityError
from uwdg.flux import ALTERNATING, CENTRAL, FluxConfig
from uwdg.projection import DGFunction, plane_wave, project_star
from uwdg.solver import (DGOperator, TimeScheme, apply_bilinear, integrate,
                         l2_norm, rk4_step, time_derivative)

FLUX_FAMILIES = [CENTRAL, ALTERNATING, FluxConfig(0.3, 0.4, 0.4),
                 FluxConfig(0.25, 5, 0)]


def random_field(mesh, k, rng):
    c = rng.normal(size=(mesh.N, k + 1)) + 1j * rng.normal(size=(mesh.N, k + 1))
    return DGFunction(mesh, k, c)


def mass_inner(u: DGFunction, v: DGFunction) -> complex:
    w = u.mesh.h_sizes[:, None] / (2 * np.arange(u.k + 1) + 1)
    return complex(np.sum(u.coeffs * np.conj(v.coeffs) * w))


class TestBilinearForm:
    @pytest.mark.parametrize("cfg", FLUX_FAMILIES, ids=lambda c: c.label())
    def test_symmetry_and_realness(self, cfg):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 12, "perturbed", 0.05, 8)
        op = DGOperator(mesh, cfg, 3)
        rng = np.random.default_rng(17)
        for _ in range(100):
            u = random_field(mesh, 3, rng)
            v = random_field(mesh, 3, rng)
            auv = apply_bilinear(op, u, v)
            avu = apply_bilinear(op, v, u)
            assert abs(auv - avu) <= 1e-12 * abs(auv)
            avvb = apply_bilinear(op, v, DGFunction(mesh, 3, np.conj(v.coeffs)))
            assert abs(avvb.imag) <= 1e-12 * abs(avvb)

    def test_constants_in_kernel(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8)
        op = DGOperator(mesh, FluxConfig(0.3, 0.4, 0.4), 2)
        const = DGFunction(mesh, 2)
        const.coeffs[:, 0] = 2.0 - 1.0j
        td = time_derivative(op, const)
        assert np.abs(td.coeffs).max() < 1e-13
        rng = np.random.default_rng(3)
        v = random_field(mesh, 2, rng)
        assert abs(apply_bilinear(op, const, v)) < 1e-12


class TestTimeDerivative:
    @pytest.mark.parametrize("cfg", FLUX_FAMILIES, ids=lambda c: c.label())
    def test_conservation_residual(self, cfg):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 10, "perturbed", 0.05, 1)
        op = DGOperator(mesh, cfg, 3)
        rng = np.random.default_rng(23)
        for _ in range(100):
            v = random_field(mesh, 3, rng)
            td = time_derivative(op, v)
            ip = mass_inner(td, v)
            assert abs(2 * ip.real) <= 1e-12 * l2_norm(td) * l2_norm(v)

    def test_linearity(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8)
        op = DGOperator(mesh, CENTRAL, 2)
        rng = np.random.default_rng(5)
        u, v = random_field(mesh, 2, rng), random_field(mesh, 2, rng)
        a, b = 1.3 - 0.2j, -0.7j
        lhs = time_derivative(op, a * u + b * v)
        rhs = a * time_derivative(op, u) + b * time_derivative(op, v)
        assert np.abs(lhs.coeffs - rhs.coeffs).max() < 1e-13 * np.abs(lhs.coeffs).max()

    def test_matrix_free_equals_assembled(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 6, "perturbed", 0.1, 4)
        op = DGOperator(mesh, FluxConfig(0.3, 0.4, 0.4), 3)
        M = op.as_matrix()
        rng = np.random.default_rng(7)
        u = random_field(mesh, 3, rng)
        mf = op.apply(u.coeffs).ravel()
        mat = M @ u.coeffs.ravel()
        assert np.abs(mf - mat).max() <= 1e-13 * np.abs(mat).max()

    def test_coupling_blocks_match_apply(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 9, "perturbed", 0.1, 2)
        op = DGOperator(mesh, ALTERNATING, 2)
        Cm, C0, Cp = op.coupling_blocks()
        rng = np.random.default_rng(8)
        c = rng.normal(size=(9, 3)) + 1j * rng.normal(size=(9, 3))
        via_blocks = (np.matmul(C0, c[:, :, None])[:, :, 0]
                      + np.matmul(Cp, np.roll(c, -1, 0)[:, :, None])[:, :, 0]
                      + np.matmul(Cm, np.roll(c, 1, 0)[:, :, None])[:, :, 0])
        direct = op.apply(c)
        assert np.abs(via_blocks - direct).max() <= 1e-12 * np.abs(direct).max()

    def test_steady_plane_wave_consistency(self):
        # td(Pstar e^{i3x}) approaches i * (-9) * field at order k+1
        f = plane_wave(3.0)
        errs = []
        for N in (20, 40, 80):
            mesh = uwdg.make_mesh(0, 2 * np.pi, N)
            op = DGOperator(mesh, CENTRAL, 3)
            ps = project_star(f, 0.0, mesh, 3, CENTRAL)
            resid = time_derivative(op, ps) - (-9j) * ps
            errs.append(l2_norm(resid) / l2_norm(ps))
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        np.testing.assert_allclose(orders, 4.0, atol=0.35)


class TestNorm:
    def test_single_mode(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8, "perturbed", 0.2, 3)
        u = DGFunction(mesh, 2)
        u.coeffs[3, 0] = 1.0
        assert l2_norm(u) == pytest.approx(np.sqrt(mesh.h_sizes[3]), rel=1e-14)

    def test_matches_quadrature(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8, "perturbed", 0.2, 3)
        rng = np.random.default_rng(9)
        u = random_field(mesh, 3, rng)
        rule = uwdg.gauss_rule(10)
        vals = u.eval_ref(rule.nodes)
        ref = np.sqrt(np.sum(0.5 * mesh.h_sizes
                             * (np.abs(vals) ** 2 @ rule.weights)))
        assert l2_norm(u) == pytest.approx(ref, rel=1e-12)


class _DiagonalOp:
    """Test hook: du/dt = i lambda u."""

    def __init__(self, lam):
        self.lam = lam

    def apply(self, coeffs):
        return 1j * self.lam * coeffs


class TestRK4:
    def test_zero_field(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8)
        op = DGOperator(mesh, CENTRAL, 2)
        u = DGFunction(mesh, 2)
        out = integrate(op, u, TimeScheme(c=0.05, t_end=0.2))
        assert np.abs(out.u.coeffs).max() == 0.0

    def test_single_step_matches_taylor(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 4)
        u = DGFunction(mesh, 2)
        u.coeffs[:, :] = 1.0 + 0.5j
        lam, dt = 2.7, 0.13
        stepped = rk4_step(_DiagonalOp(lam), u, dt)
        z = 1j * lam * dt
        taylor = 1 + z + z ** 2 / 2 + z ** 3 / 6 + z ** 4 / 24
        np.testing.assert_allclose(stepped.coeffs, taylor * u.coeffs, rtol=1e-14)

    def test_final_time_is_exact(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8)
        op = DGOperator(mesh, CENTRAL, 2)
        f = plane_wave(1.0)
        u0 = uwdg.project_l2(f, 0.0, mesh, 2)
        scheme = TimeScheme(c=0.05, t_end=0.1)
        res = integrate(op, u0, scheme, method="stepping")
        n_full = int(np.floor(scheme.t_end / res.dt + 1e-12))
        assert res.n_steps == n_full + 1       # truncated final step
        assert res.norm_history[-1][0] == pytest.approx(0.1, abs=1e-14)

    @pytest.mark.parametrize("method", ["sparse", "circulant"])
    def test_paths_match_stepping(self, method):
        f = plane_wave(3.0)
        mesh = uwdg.make_mesh(0, 2 * np.pi, 12)
        op = DGOperator(mesh, CENTRAL, 3)
        u0 = project_star(f, 0.0, mesh, 3, CENTRAL)
        scheme = TimeScheme(c=0.01, t_end=0.043)
        ref = integrate(op, u0, scheme, method="stepping").u
        out = integrate(op, u0, scheme, method=method).u
        assert np.abs(out.coeffs - ref.coeffs).max() < 1e-11

    def test_sparse_path_on_perturbed_mesh(self):
        f = plane_wave(3.0)
        mesh = uwdg.make_mesh(0, 2 * np.pi, 10, "perturbed", 0.1, 6)
        op = DGOperator(mesh, ALTERNATING, 3)
        u0 = project_star(f, 0.0, mesh, 3, ALTERNATING)
        scheme = TimeScheme(c=0.01, t_end=0.02)
        ref = integrate(op, u0, scheme, method="stepping").u
        out = integrate(op, u0, scheme, method="sparse").u
        assert np.abs(out.coeffs - ref.coeffs).max() < 1e-11

    def test_norm_drift_small(self):
        f = plane_wave(3.0)
        mesh = uwdg.make_mesh(0, 2 * np.pi, 40)
        op = DGOperator(mesh, CENTRAL, 2)
        u0 = uwdg.reference_interpolant(f, 0.0, mesh, 2, CENTRAL)
        res = integrate(op, u0, TimeScheme(c=0.05, t_end=1.0))
        assert abs(l2_norm(res.u) / l2_norm(u0) - 1.0) < 1e-8

    def test_instability_detected(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 16)
        op = DGOperator(mesh, CENTRAL, 2)
        u0 = uwdg.project_l2(plane_wave(3.0), 0.0, mesh, 2)
        bad = TimeScheme(c=0.05, t_end=3.0, dt_override=0.05)
        with pytest.raises(InstabilityError) as err:
            integrate(op, u0, bad, method="stepping")
        assert err.value.dt == pytest.approx(0.05)
        with pytest.raises(InstabilityError):
            integrate(op, u0, bad, method="circulant")

    def test_overflow_between_checkpoints_detected(self):
        # this flux family exceeds the RK4 limit at k=2, N=80 with the
        # default constant; the norm overflows to non-finite between
        # checkpoints and must still be flagged
        mesh = uwdg.make_mesh(0, 2 * np.pi, 80)
        cfg = FluxConfig(0.3, 0.4, 0.4)
        op = DGOperator(mesh, cfg, 2)
        u0 = project_star(plane_wave(3.0), 0.0, mesh, 2, cfg)
        with pytest.raises(InstabilityError, match="non-finite|grew"):
            integrate(op, u0, TimeScheme(c=0.05, t_end=0.05))
