import numpy as np
import pytest

import uwdg
from uwdg.basis import gauss_rule, legendre_table
from uwdg.errors import ProjectionUndefinedError, ResidualUndefinedError
from uwdg.flux import ALTERNATING, CENTRAL, FluxConfig, cell_blocks, scale_flux
from uwdg.projection import (AnalyticField, DGFunction, leading_residual,
                             plane_wave, project_dagger, project_l2,
                             project_star, special_points)

FLUX_FAMILIES = [CENTRAL, ALTERNATING, FluxConfig(0.3, 0.4, 0.4),
                 FluxConfig(0.25, 5, 0)]


def dg_field(u: DGFunction) -> AnalyticField:
    """Expose a DG function as an exact-solution provider."""
    return AnalyticField(eval=lambda x, t, d=0: u.eval(x, s=d), d_max=2)


def poly_field(mono_coeffs) -> AnalyticField:
    mono = np.asarray(mono_coeffs, dtype=complex)

    def _eval(x, t, d=0):
        c = mono
        for _ in range(d):
            c = np.polynomial.polynomial.polyder(c)
        return np.polynomial.polynomial.polyval(np.asarray(x, float), c)

    return AnalyticField(eval=_eval, d_max=10)


class TestPlaneWaveField:
    def test_derivative_identity(self):
        f = plane_wave(3.0)
        x = np.linspace(0, 2 * np.pi, 7)
        for d in range(5):
            np.testing.assert_allclose(f.eval(x, 0.4, d),
                                       (3j) ** d * f.eval(x, 0.4, 0),
                                       rtol=1e-13)

    def test_solves_the_equation(self):
        # i u_t + u_xx = 0  <=>  d_t u = i d_x^2 u
        from uwdg.projection import time_derivative_field
        f = plane_wave(3.0)
        ft = time_derivative_field(f, 1)
        x = np.linspace(0, 2 * np.pi, 7)
        eps = 1e-6
        fd = (f.eval(x, 0.2 + eps, 0) - f.eval(x, 0.2 - eps, 0)) / (2 * eps)
        np.testing.assert_allclose(ft.eval(x, 0.2, 0), fd, rtol=1e-8)

    def test_periodicity(self):
        f = plane_wave(3.0)
        assert f.eval(0.0, 1.0, 0) == pytest.approx(f.eval(2 * np.pi, 1.0, 0))


class TestL2Projection:
    def test_reproduces_piecewise_polynomials(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8, "perturbed", 0.1, 2)
        rng = np.random.default_rng(0)
        u = DGFunction(mesh, 3, rng.normal(size=(8, 4)) + 1j * rng.normal(size=(8, 4)))
        p = project_l2(dg_field(u), 0.0, mesh, 3)
        np.testing.assert_allclose(p.coeffs, u.coeffs, atol=1e-13)

    def test_orthogonality_to_higher_mode(self):
        # a pure degree k+1 Legendre mode projects to zero
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8)
        hi = DGFunction(mesh, 4)
        hi.coeffs[:, 4] = 1.0
        p = project_l2(dg_field(hi), 0.0, mesh, 3)
        np.testing.assert_allclose(p.coeffs, 0.0, atol=1e-13)

    def test_order_k_plus_one(self):
        f = plane_wave(3.0)
        errs = []
        for N in (40, 80, 160):
            mesh = uwdg.make_mesh(0, 2 * np.pi, N)
            errs.append(uwdg.broken_l2_error(project_l2(f, 0.0, mesh, 2), f, 0.0))
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        np.testing.assert_allclose(orders, 3.0, atol=0.1)


class TestFluxMatchingProjection:
    @pytest.mark.parametrize("cfg", FLUX_FAMILIES, ids=lambda c: c.label())
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_interface_conditions(self, cfg, k):
        f = plane_wave(3.0)
        kind = ("perturbed" if cfg.alpha1_t ** 2 + cfg.beta1_t * cfg.beta2_t
                == 0.25 else "uniform")
        mesh = uwdg.make_mesh(0, 2 * np.pi, 16, kind, 0.1, 5)
        ps = project_star(f, 0.3, mesh, k, cfg)
        uhat, uxt = uwdg.numerical_fluxes(ps, cfg)
        xs = mesh.nodes[1:]
        assert np.abs(uhat - f.eval(xs, 0.3, 0)).max() < 1e-10
        assert np.abs(uxt - f.eval(xs, 0.3, 1)).max() < 1e-10

    def test_low_moments_match_l2_projection(self):
        f = plane_wave(3.0)
        mesh = uwdg.make_mesh(0, 2 * np.pi, 12)
        k = 4
        ps = project_star(f, 0.0, mesh, k, CENTRAL)
        p0 = project_l2(f, 0.0, mesh, k)
        np.testing.assert_allclose(ps.coeffs[:, : k - 1], p0.coeffs[:, : k - 1],
                                   atol=1e-13)

    def test_orthogonality_invariant(self):
        # (f - Pstar f) is L2-orthogonal to degree <= k-2 per cell
        f = plane_wave(3.0)
        mesh = uwdg.make_mesh(0, 2 * np.pi, 12)
        k = 3
        ps = project_star(f, 0.0, mesh, k, CENTRAL)
        rule = gauss_rule(20)
        pts = mesh.quad_points(rule.nodes)
        diff = f.eval(pts, 0.0, 0) - ps.eval_ref(rule.nodes)
        tab = legendre_table(k - 2, rule.nodes)[:, 0, :]
        moments = (diff * rule.weights) @ tab
        assert np.abs(moments).max() < 1e-12

    def test_polynomial_reproduction_local_class(self):
        # the test polynomial is not periodic, so cell 0 (whose left
        # endpoint data wraps to x = b) is excluded; every other cell's
        # local solve must reproduce the polynomial exactly
        mesh = uwdg.make_mesh(0, 1.0, 8, "perturbed", 0.2, 9)
        f = poly_field([0.3 + 0.2j, -1.0, 0.5j, 0.25])
        ps = project_star(f, 0.0, mesh, 3, ALTERNATING)
        ref = project_l2(f, 0.0, mesh, 3)
        np.testing.assert_allclose(ps.coeffs[1:], ref.coeffs[1:], atol=1e-12)

    def test_order_k_plus_one(self):
        f = plane_wave(3.0)
        errs = []
        for N in (20, 40, 80):
            mesh = uwdg.make_mesh(0, 2 * np.pi, N)
            errs.append(uwdg.broken_l2_error(
                project_star(f, 0.0, mesh, 3, CENTRAL), f, 0.0))
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        np.testing.assert_allclose(orders, 4.0, atol=0.25)

    def test_unsupported_configuration_raises(self):
        mesh = uwdg.make_mesh(0, 2 * np.pi, 16, "perturbed", 0.1, 3)
        with pytest.raises(ProjectionUndefinedError):
            project_star(plane_wave(3.0), 0.0, mesh, 2, CENTRAL)

    def test_series_identity_local_class(self):
        # under the local class the top-two correction equals the trace
        # series sum_{m>k} u_{j,m} (A+B)^{-1}(G L-_m + H L+_m), truncated
        # at m = k+6 for a smooth field
        f = plane_wave(3.0)
        mesh = uwdg.make_mesh(0, 2 * np.pi, 20)
        k = 3
        sf = scale_flux(ALTERNATING, mesh.h)
        ps = project_star(f, 0.0, mesh, k, ALTERNATING)
        rule = gauss_rule(40)
        pts = mesh.quad_points(rule.nodes)
        fv = f.eval(pts, 0.0, 0)
        tab = legendre_table(k + 6, rule.nodes)[:, 0, :]
        wtab = tab * rule.weights[:, None]
        coef = (fv @ wtab) * ((2 * np.arange(k + 7) + 1) / 2.0)   # (N, k+7)
        blk = cell_blocks(sf, k, mesh.h)
        AB = blk.A + blk.B
        gh = uwdg.interface_matrices(sf)
        correction = np.zeros((mesh.N, 2), dtype=complex)
        for m in range(k + 1, k + 7):
            rhs = (gh.G @ uwdg.flux.trace_vector(m, mesh.h, "-")
                   + gh.H @ uwdg.flux.trace_vector(m, mesh.h, "+"))
            Mm = np.linalg.solve(AB, rhs)
            correction += coef[:, m][:, None] * Mm[None, :]
        direct = ps.coeffs[:, k - 1:] - coef[:, k - 1: k + 1]
        np.testing.assert_allclose(direct, correction, atol=1e-10)


class TestLocalVariant:
    def test_equals_star_under_local_class(self):
        f = plane_wave(3.0)
        mesh = uwdg.make_mesh(0, 2 * np.pi, 12, "perturbed", 0.1, 7)
        for cfg in (ALTERNATING, FluxConfig(0.3, 0.4, 0.4)):
            ps = project_star(f, 0.5, mesh, 3, cfg)
            pd = project_dagger(f, 0.5, mesh, 3, cfg)
            assert np.abs(ps.coeffs - pd.coeffs).max() < 1e-11

    def test_polynomial_identity(self):
        # non-periodic test polynomial: cell 0 reads wrapped left-endpoint
        # data, so the identity is checked on the remaining cells
        mesh = uwdg.make_mesh(0, 1.0, 8)
        f = poly_field([1.0, 0.5, -0.25j])
        pd = project_dagger(f, 0.0, mesh, 2, CENTRAL)
        ref = project_l2(f, 0.0, mesh, 2)
        np.testing.assert_allclose(pd.coeffs[1:], ref.coeffs[1:], atol=1e-13)

    def test_distance_to_star_gains_one_order(self):
        f = plane_wave(3.0)
        errs = []
        for N in (20, 40, 80):
            mesh = uwdg.make_mesh(0, 2 * np.pi, N)
            d = project_star(f, 0.0, mesh, 3, CENTRAL) \
                - project_dagger(f, 0.0, mesh, 3, CENTRAL)
            errs.append(uwdg.l2_norm(d))
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        np.testing.assert_allclose(orders, 5.0, atol=0.25)

    def test_singular_cell_raises(self):
        # ratio +1 with even k makes det(A_j+B_j) = 0
        mesh = uwdg.make_mesh(0, 2 * np.pi, 8)
        with pytest.raises(ProjectionUndefinedError, match="Gamma_j/Lambda_j"):
            project_dagger(plane_wave(3.0), 0.0, mesh, 2, FluxConfig(0, 1, 0))


class TestLeadingResidual:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_alternating(self, k):
        # displayed formulas give b = +-(2k+1)/k^2, c = -(k+1)^2/k^2
        # (verified against the first-principles 2x2 solve)
        for sgn in (+1.0, -1.0):
            sf = scale_flux(FluxConfig(0.5 * sgn, 0, 0), 1.0)
            res = leading_residual(k, 1.0, sf)
            assert res.b == pytest.approx(sgn * (2 * k + 1) / k ** 2, rel=1e-13)
            assert res.c == pytest.approx(-((k + 1) ** 2) / k ** 2, rel=1e-13)

    @pytest.mark.parametrize("k", [3, 5])
    def test_central_odd(self, k):
        res = leading_residual(k, 0.4, scale_flux(CENTRAL, 0.4))
        assert res.b == pytest.approx(0.0, abs=1e-14)
        assert res.c == pytest.approx(-1.0, rel=1e-14)

    @pytest.mark.parametrize("k", [2, 4])
    def test_central_even(self, k):
        res = leading_residual(k, 0.4, scale_flux(CENTRAL, 0.4))
        assert res.b == pytest.approx(0.0, abs=1e-14)
        assert res.c == pytest.approx(-((k + 1) * (k + 2)) / (k * (k - 1)),
                                      rel=1e-13)

    @pytest.mark.parametrize("k,b1t", [(2, 3.0), (4, 5.0)])
    def test_ipdg_even(self, k, b1t):
        h = 0.37
        res = leading_residual(k, h, scale_flux(FluxConfig(0, b1t, 0), h))
        expect = -((k + 1) * (k + 2) - 2 * b1t) / (k * (k - 1) - 2 * b1t)
        assert res.c == pytest.approx(expect, rel=1e-12)
        assert res.b == pytest.approx(0.0, abs=1e-13)

    def test_residual_matches_projector_algebra(self):
        # R_{k+1} = L_{k+1} - [L_{k-1}, L_k] (A+B)^{-1}(G L-_{k+1} + H L+_{k+1})
        rng = np.random.default_rng(6)
        for _ in range(25):
            k = int(rng.integers(2, 6))
            h = float(rng.uniform(0.1, 1.5))
            sf = scale_flux(FluxConfig(*rng.normal(size=3) * 0.5), h)
            blk = cell_blocks(sf, k, h)
            if abs(np.linalg.det(blk.A + blk.B)) < 1e-8:
                continue
            gh = uwdg.interface_matrices(sf)
            rhs = (gh.G @ uwdg.flux.trace_vector(k + 1, h, "-")
                   + gh.H @ uwdg.flux.trace_vector(k + 1, h, "+"))
            Mm = np.linalg.solve(blk.A + blk.B, rhs)
            res = leading_residual(k, h, sf)
            assert res.c == pytest.approx(-Mm[0], rel=1e-10, abs=1e-12)
            assert res.b == pytest.approx(-Mm[1], rel=1e-10, abs=1e-12)

    def test_zero_denominator(self):
        with pytest.raises(ResidualUndefinedError):
            leading_residual(2, 1.0, scale_flux(FluxConfig(0, 1, 0), 1.0))

    def test_orthogonal_to_low_degrees(self):
        rule = gauss_rule(12)
        res = leading_residual(4, 1.0, scale_flux(FluxConfig(0.3, 0.4, 0.4), 1.0))
        vals = res.eval(rule.nodes)
        tab = legendre_table(2, rule.nodes)[:, 0, :]
        moments = (vals * rule.weights) @ tab
        assert np.abs(moments).max() < 1e-12


class TestSpecialPoints:
    def test_central_k3_lobatto_gauss(self):
        pts = special_points(3, 1.0, scale_flux(CENTRAL, 1.0))
        lobatto4 = np.array([-1.0, -1 / np.sqrt(5), 1 / np.sqrt(5), 1.0])
        gauss3 = np.array([-np.sqrt(3 / 5), 0.0, np.sqrt(3 / 5)])
        np.testing.assert_allclose(pts.d0, lobatto4, atol=1e-10)
        np.testing.assert_allclose(pts.d1, gauss3, atol=1e-10)
        np.testing.assert_allclose(pts.d2, lobatto4[1:3], atol=1e-10)

    def test_dne_cases(self):
        pts = special_points(2, 1.0, scale_flux(FluxConfig(0.3, 0.4, 0.4), 1.0))
        assert pts.d1.size == 0          # no first-derivative points
        pts2 = special_points(2, 1.0, scale_flux(FluxConfig(0.25, 2, 0), 1.0))
        assert pts2.d2.size == 0         # no second-derivative points

    def test_roots_are_polished(self):
        for cfg in FLUX_FAMILIES:
            pts = special_points(3, 0.7, scale_flux(cfg, 0.7))
            for s, xi in enumerate(pts.sets()):
                if xi.size:
                    assert np.abs(pts.residual.eval(xi, s)).max() < 1e-10

    def test_minimum_point_counts(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(60):
            k = int(rng.integers(2, 5))
            cfg = FluxConfig(*(rng.normal(size=3) * 0.6))
            try:
                pts = special_points(k, 1.0, scale_flux(cfg, 1.0))
            except ResidualUndefinedError:
                continue
            assert pts.d0.size >= k - 1
            if k >= 3:
                assert pts.d1.size >= k - 2
            checked += 1
        assert checked > 40
