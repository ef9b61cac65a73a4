"""DG fields, exact-solution providers, and the flux-matching projections.

P0 is the cellwise L2 projection.  The flux-matching projection Pstar
keeps the L2 moments up to degree k-2 and replaces the top two Legendre
coefficients per cell so that the numerical fluxes of the projection
reproduce (u, u_x) exactly at every interface; depending on the flux
class this is a per-cell 2x2 solve (A1) or one periodic block-circulant
solve (A2/A3).  Pdagger imposes both endpoint conditions on the same
cell and is always local.  The leading residual polynomial
L_{k+1} + b L_k + c L_{k-1} and the root sets D0/D1/D2 of its first
three derivative orders mark where the DG error superconverges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import basis
from .errors import ProjectionUndefinedError, ResidualUndefinedError
from .flux import (AssumptionClass, FluxConfig, ScaledFlux, cell_blocks,
                   classify_assumption, flux_projection_rhs_matrix,
                   gamma_lambda, interface_matrices, scale_flux,
                   solve_block_circulant)
from .mesh import Mesh1D


class DGFunction:
    """Complex piecewise polynomial stored as per-cell Legendre coefficients.

    coeffs[j, m] multiplies L_{j,m}(x) = L_m(2(x - x_j)/h_j); shape (N, k+1).
    """

    __slots__ = ("mesh", "k", "coeffs")

    def __init__(self, mesh: Mesh1D, k: int, coeffs: np.ndarray | None = None):
        self.mesh = mesh
        self.k = k
        if coeffs is None:
            coeffs = np.zeros((mesh.N, k + 1), dtype=complex)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.shape != (mesh.N, k + 1):
            raise ValueError("coefficient array has wrong shape")

    def copy(self) -> "DGFunction":
        return DGFunction(self.mesh, self.k, self.coeffs.copy())

    def __add__(self, other: "DGFunction") -> "DGFunction":
        return DGFunction(self.mesh, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other: "DGFunction") -> "DGFunction":
        return DGFunction(self.mesh, self.k, self.coeffs - other.coeffs)

    def __mul__(self, z) -> "DGFunction":
        return DGFunction(self.mesh, self.k, self.coeffs * z)

    __rmul__ = __mul__

    def eval_ref(self, xi, s: int = 0) -> np.ndarray:
        """Evaluate the s-th x-derivative at reference points xi in every
        cell; returns shape (N, len(xi)).  Chain rule factors (2/h_j)^s
        are applied."""
        xi = np.atleast_1d(xi)
        tab = basis.legendre_table(self.k, xi, ders=s)[:, s, :]  # (nq, k+1)
        vals = self.coeffs @ tab.T
        if s:
            vals = vals * (2.0 / self.mesh.h_sizes[:, None]) ** s
        return vals

    def eval(self, x, s: int = 0) -> np.ndarray:
        """Evaluate at arbitrary physical points (periodic reduction)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        j, xi = self.mesh.reference_coord(x)
        tab = basis.legendre_table(self.k, xi, ders=s)[..., s, :]
        vals = np.einsum("...m,...m->...", self.coeffs[j], tab)
        if s:
            vals = vals * (2.0 / self.mesh.h_sizes[j]) ** s
        return vals

    def traces(self):
        """One-sided endpoint values and physical derivatives per cell:
        (v_right, d_right, v_left, d_left), each of shape (N,)."""
        m = np.arange(self.k + 1)
        sgn = (-1.0) ** m
        dval = m * (m + 1)
        hj = self.mesh.h_sizes
        v_r = self.coeffs.sum(axis=1)
        v_l = self.coeffs @ sgn
        d_r = (self.coeffs @ dval) / hj
        d_l = -(self.coeffs @ (sgn * dval)) / hj
        return v_r, d_r, v_l, d_l

    def cell_norms_sq(self) -> np.ndarray:
        """Per-cell squared L2 norms by Parseval."""
        w = self.mesh.h_sizes[:, None] / (2 * np.arange(self.k + 1) + 1)
        return np.sum(np.abs(self.coeffs) ** 2 * w, axis=1)


@dataclass(frozen=True)
class AnalyticField:
    """Exact-solution provider: eval(x, t, d) returns the d-th spatial
    derivative of u(x, t).  Time derivatives are obtained by callers via
    the evolution identity d_t^r u = i^r d_x^{2r} u."""

    eval: Callable[[np.ndarray, float, int], np.ndarray]
    d_max: int
    name: str = "field"


def plane_wave(kappa: float = 3.0, name: str | None = None) -> AnalyticField:
    """Periodic plane wave exp(i kappa (x - kappa t)) on [0, 2 pi]."""

    def _eval(x, t, d=0):
        x = np.asarray(x, dtype=float)
        return (1j * kappa) ** d * np.exp(1j * kappa * (x - kappa * t))

    return AnalyticField(eval=_eval, d_max=10 ** 6,
                         name=name or f"plane_wave(kappa={kappa:g})")


def time_derivative_field(f: AnalyticField, r: int) -> AnalyticField:
    """The r-th time derivative of an evolution field, as a spatial field:
    d_t^r u = i^r d_x^{2r} u."""
    if r == 0:
        return f

    def _eval(x, t, d=0):
        return (1j ** r) * f.eval(x, t, d + 2 * r)

    return AnalyticField(eval=_eval, d_max=f.d_max - 2 * r,
                         name=f"d_t^{r} {f.name}")


def project_l2(f: AnalyticField, t: float, mesh: Mesh1D, k: int,
               n_quad: int | None = None) -> DGFunction:
    """Cellwise L2 projection onto degree <= k via over-integrated Gauss
    quadrature: coeffs[j, m] = (2m+1)/h_j * int_{I_j} f L_{j,m}."""
    rule = basis.gauss_rule(n_quad or basis.default_quad_points(k))
    pts = mesh.quad_points(rule.nodes)
    fv = f.eval(pts, t, 0)
    tab = basis.legendre_table(k, rule.nodes)[:, 0, :]      # (nq, k+1)
    wtab = tab * rule.weights[:, None]
    coeffs = (fv @ wtab) * ((2 * np.arange(k + 1) + 1) / 2.0)
    return DGFunction(mesh, k, coeffs)


def interface_data(f: AnalyticField, t: float, mesh: Mesh1D) -> np.ndarray:
    """Exact [u, u_x] at the N interfaces x_{j+1/2}, shape (N, 2)."""
    xs = mesh.nodes[1:]
    return np.column_stack([f.eval(xs, t, 0), f.eval(xs, t, 1)])


def _resolve_class(cfg: FluxConfig, mesh: Mesh1D, k: int,
                   cls: AssumptionClass | None) -> AssumptionClass:
    if cls is None:
        cls = classify_assumption(cfg, mesh, k)
    if not cls.supported:
        raise ProjectionUndefinedError(
            f"flux {cfg.label()} on this mesh is {cls.tag}: {cls.warning}")
    return cls


def _top_two_local(mesh: Mesh1D, k: int, sf: ScaledFlux,
                   low_coeffs: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Per-cell 2x2 solves (A_j + B_j) y_j = data_j - footprint(low modes).

    data holds the cell-local interface target G[u,u_x]|right +
    H[u,u_x]|left (or zero for correction functions).  Returns (N, 2).
    """
    out = np.empty((mesh.N, 2), dtype=complex)
    for j in range(mesh.N):
        hj = mesh.h_sizes[j]
        blk = cell_blocks(sf, k, hj)
        AB = blk.A + blk.B
        det = AB[0, 0] * AB[1, 1] - AB[0, 1] * AB[1, 0]
        if abs(det) <= 1e-13 * (np.abs(AB).max() ** 2 + 1e-300):
            raise ProjectionUndefinedError(
                f"cell-local projection undefined on cell {j}: "
                f"(-1)**(k+1) * Gamma_j/Lambda_j == 1 "
                f"(det(A_j+B_j) = {det:.3e})")
        r = data[j].astype(complex)
        for m in range(k - 1):
            r -= low_coeffs[j, m] * flux_projection_rhs_matrix(sf, k, hj, m)
        out[j] = np.linalg.solve(AB, r)
    return out


def _top_two_global(mesh: Mesh1D, k: int, sf: ScaledFlux,
                    low_coeffs: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Coupled interface rows A y_j + B y_{j+1} = data_j - footprints,
    solved by the block-circulant DFT factorization (uniform mesh)."""
    h = mesh.h
    blk = cell_blocks(sf, k, h)
    gh = interface_matrices(sf)
    m = np.arange(k - 1)
    # interface footprint of the known low modes of cells j (left side of
    # the interface, through G) and j+1 (right side, through H)
    Lm = np.stack([np.ones(k - 1), m * (m + 1) / h])              # (2, k-1)
    Lp = np.stack([(-1.0) ** m, -((-1.0) ** m) * m * (m + 1) / h])
    rhs = data.astype(complex)
    rhs -= low_coeffs[:, : k - 1] @ (gh.G @ Lm).T
    rhs -= np.roll(low_coeffs[:, : k - 1], -1, axis=0) @ (gh.H @ Lp).T
    return solve_block_circulant(blk.A, blk.B, rhs)


def project_star(f: AnalyticField, t: float, mesh: Mesh1D, k: int,
                 cfg: FluxConfig, cls: AssumptionClass | None = None,
                 n_quad: int | None = None) -> DGFunction:
    """Flux-matching projection: L2 moments up to k-2, and the scheme's
    numerical fluxes evaluated on the result equal (u, u_x) at every
    interface.  Right-hand data uses the exact interface values of f."""
    if k < 2:
        raise ValueError("projection needs k >= 2")
    if f.d_max < 1:
        raise ValueError("field must supply first derivatives")
    cls = _resolve_class(cfg, mesh, k, cls)
    sf = scale_flux(cfg, mesh.h)
    out = project_l2(f, t, mesh, k, n_quad)
    iface = interface_data(f, t, mesh)                    # (N, 2) at x_{j+1/2}
    if cls.tag == "A1":
        gh = interface_matrices(sf)
        # cell j sees its own endpoints: interfaces j+1/2 (right) and j-1/2
        data = iface @ gh.G.T + np.roll(iface, 1, axis=0) @ gh.H.T
        top = _top_two_local(mesh, k, sf, out.coeffs, data)
    else:
        top = _top_two_global(mesh, k, sf, out.coeffs, iface)
    out.coeffs[:, k - 1:] = top
    return out


def project_dagger(f: AnalyticField, t: float, mesh: Mesh1D, k: int,
                   cfg: FluxConfig, n_quad: int | None = None) -> DGFunction:
    """Cell-local variant: both endpoint flux conditions are written on
    the same cell, so the solve is always a per-cell 2x2 system.  Under
    the local class A1 it coincides with project_star."""
    if k < 2:
        raise ValueError("projection needs k >= 2")
    sf = scale_flux(cfg, mesh.h)
    gh = interface_matrices(sf)
    out = project_l2(f, t, mesh, k, n_quad)
    iface = interface_data(f, t, mesh)
    data = iface @ gh.G.T + np.roll(iface, 1, axis=0) @ gh.H.T
    top = _top_two_local(mesh, k, sf, out.coeffs, data)
    out.coeffs[:, k - 1:] = top
    return out


@dataclass(frozen=True)
class LeadingResidual:
    """R_{k+1} = L_{k+1} + b L_k + c L_{k-1} on the reference interval."""

    k: int
    b: float
    c: float

    def legendre_coeffs(self, s: int = 0) -> np.ndarray:
        c = np.zeros(self.k + 2)
        c[self.k + 1] = 1.0
        c[self.k] = self.b
        c[self.k - 1] = self.c
        d = basis.legendre_derivative_matrix(self.k + 1)
        for _ in range(s):
            c = d @ c
        return c

    def eval(self, xi, s: int = 0) -> np.ndarray:
        tab = basis.legendre_table(self.k + 1, xi, ders=s)[..., s, :]
        return tab @ self.legendre_coeffs()


@dataclass(frozen=True)
class SpecialPoints:
    """Reference-interval superconvergence point sets for one cell width.

    d0/d1/d2 are the real roots in [-1, 1] of the leading residual and its
    first two derivatives; empty arrays mean the set does not exist (DNE).
    """

    residual: LeadingResidual
    d0: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def sets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.d0, self.d1, self.d2


def leading_residual(k: int, h_j: float, sf: ScaledFlux) -> LeadingResidual:
    """Coefficients b, c of the leading projection-error polynomial.

    Evaluated directly from the scaled parameters at the given cell width
    (the h-dependent terms cancel for scale-invariant fluxes on uniform
    meshes; no symbolic simplification is attempted)."""
    s = sf.alpha1 ** 2 + sf.beta1 * sf.beta2
    gamma, lam = gamma_lambda(sf, k, h_j)
    den = gamma + (-1.0) ** k * lam
    scale = abs(gamma) + abs(lam) + 1.0 / h_j
    if abs(den) <= 1e-13 * scale:
        raise ResidualUndefinedError(
            f"leading residual undefined: Gamma + (-1)^k Lambda = {den:.3e}")
    b = -(2 * sf.alpha1 * (2 * k + 1) / h_j) / den
    c_num = (sf.beta1
             - 2 * (k + 1) ** 2 / h_j * (s + 0.25)
             - (-1.0) ** (k + 1) * 2 * (k + 1) / h_j * (s - 0.25)
             + sf.beta2 / h_j ** 2 * k * (k + 2) * (k + 1) ** 2)
    c = -c_num / den
    return LeadingResidual(k=k, b=b, c=c)


def _real_roots_in_reference(leg_coeffs: np.ndarray) -> np.ndarray:
    """Real roots of a Legendre-coefficient polynomial inside [-1, 1].

    Companion-matrix roots of the monomial form, one Newton polish step on
    the (stable) Legendre evaluation, then filtering: |imag| <= 1e-9,
    |xi| <= 1 (roots at cell endpoints are genuine members of the sets),
    duplicates merged at 1e-8 spacing.
    """
    mono = np.polynomial.legendre.leg2poly(leg_coeffs)
    mono = np.trim_zeros(mono, "b")
    if len(mono) <= 1:
        return np.array([])
    roots = np.polynomial.polynomial.polyroots(mono)

    dmat = basis.legendre_derivative_matrix(len(leg_coeffs) - 1)
    dcoef = dmat @ leg_coeffs
    deg = len(leg_coeffs) - 1

    keep = []
    for r in roots:
        if abs(r.imag) > 1e-9:
            continue
        x = float(r.real)
        tab = basis.legendre_table(deg, x)[0, 0, :]
        val = tab @ leg_coeffs
        der = tab @ dcoef
        if der != 0.0:
            x = x - val / der
        if abs(x) > 1.0 + 1e-12:
            continue
        keep.append(min(1.0, max(-1.0, x)))
    keep.sort()
    out = []
    for x in keep:
        if not out or x - out[-1] > 1e-8:
            out.append(x)
    return np.array(out)


def special_points(k: int, h_j: float, sf: ScaledFlux) -> SpecialPoints:
    """Root sets of the leading residual and its derivatives.

    Empty sets are a valid outcome (reported as DNE by the diagnostics).
    """
    res = leading_residual(k, h_j, sf)
    c0 = res.legendre_coeffs()
    d = basis.legendre_derivative_matrix(k + 1)
    c1 = d @ c0
    c2 = d @ c1
    return SpecialPoints(residual=res,
                         d0=_real_roots_in_reference(c0),
                         d1=_real_roots_in_reference(c1),
                         d2=_real_roots_in_reference(c2))
