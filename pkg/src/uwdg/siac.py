"""Smoothness-increasing accuracy-conserving post-processing.

The kernel is a symmetric combination of 2k+1 central B-splines of order
k+1 shifted to the integers -k..k.  Its weights solve the discrete
moment conditions int K(x) x^m dx = delta_{m0} for m = 0..2k, which
(with evenness supplying the odd moments) makes convolution against the
kernel reproduce polynomials through degree 2k+1.  The moment system is
assembled and solved in exact rational arithmetic, so the weights are
correct to the last bit.

Post-processing convolves the DG solution with the h-scaled kernel on a
uniform mesh; the integral is split at every B-spline knot and every
cell boundary so each piece is a polynomial integrated exactly by a
small Gauss rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from . import basis
from .errors import UnsupportedOperationError
from .projection import AnalyticField, DGFunction


@dataclass(frozen=True)
class KernelSpec:
    """SIAC kernel for DG degree k: B-spline order ell = k+1, integer
    shifts gamma in [-k, k] with symmetric weights summing to 1, support
    half-width (3k+1)/2 in units of h."""

    k: int
    order: int
    shifts: np.ndarray
    weights: np.ndarray

    @property
    def support_halfwidth(self) -> float:
        return (3 * self.k + 1) / 2.0

    def eval(self, x) -> np.ndarray:
        """Kernel value K(x) = sum_g w_g psi^(order)(x - g)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for g, w in zip(self.shifts, self.weights):
            out += w * basis.bspline_eval(self.order, x - g)
        return out

    def knots(self) -> np.ndarray:
        """Breakpoints of the kernel's piecewise-polynomial structure."""
        half = self.order / 2.0
        pts = set()
        for g in self.shifts:
            for i in range(self.order + 1):
                pts.add(float(g - half + i))
        return np.array(sorted(pts))


@lru_cache(maxsize=16)
def _bspline_moments(order: int, p_max: int) -> tuple:
    """Exact moments int psi^(order)(x) x^p dx for p = 0..p_max.

    psi^(1) has moments 1/(2^p (p+1)) for even p; convolution adds
    moments binomially."""
    mom = [Fraction(1, (p + 1) * 2 ** p) if p % 2 == 0 else Fraction(0)
           for p in range(p_max + 1)]
    base = list(mom)
    for _ in range(order - 1):
        nxt = []
        for p in range(p_max + 1):
            acc = Fraction(0)
            for i in range(p + 1):
                acc += comb(p, i) * mom[i] * base[p - i]
            nxt.append(acc)
        mom = nxt
    return tuple(mom)


def _solve_fraction_system(A: list[list[Fraction]], b: list[Fraction]):
    """Gaussian elimination with partial pivoting over the rationals."""
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        if M[piv][col] == 0:
            raise ArithmeticError("singular moment system")
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col]
        for r in range(n):
            if r == col or M[r][col] == 0:
                continue
            fac = M[r][col] / inv
            M[r] = [a - fac * c for a, c in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def kernel_coeffs(k: int) -> KernelSpec:
    """Build the post-processing kernel for DG degree k >= 1."""
    if k < 1:
        raise ValueError("kernel needs k >= 1")
    order = k + 1
    shifts = np.arange(-k, k + 1)
    mu = _bspline_moments(order, 2 * k)
    rows = []
    rhs = []
    for m in range(2 * k + 1):
        row = []
        for g in shifts:
            # int psi(x-g) x^m dx = sum_i C(m,i) g^(m-i) mu_i
            acc = Fraction(0)
            for i in range(m + 1):
                acc += comb(m, i) * Fraction(int(g)) ** (m - i) * mu[i]
            row.append(acc)
        rows.append(row)
        rhs.append(Fraction(1) if m == 0 else Fraction(0))
    try:
        w = _solve_fraction_system(rows, rhs)
    except ArithmeticError as exc:
        raise ArithmeticError(f"kernel moment system singular for k={k}") from exc
    weights = np.array([float(x) for x in w])
    weights.setflags(write=False)
    shifts.setflags(write=False)
    return KernelSpec(k=k, order=order, shifts=shifts, weights=weights)


def _convolve_cells(u_h: DGFunction, cells: np.ndarray, xi0: float,
                    spec: KernelSpec, n_gauss: int) -> np.ndarray:
    """u*(x) for the points sitting at reference offset xi0 inside the
    given cells of a uniform mesh, vectorized over the cells.

    In the scaled variable z = (y - x)/h the kernel knots and the cell
    crossings are the same for every such point, so each polynomial piece
    contributes one small matrix product across all cells at once.
    """
    mesh = u_h.mesh
    k = u_h.k
    half = spec.support_halfwidth
    # breakpoints: kernel knots plus cell-boundary crossings at
    # z = m + (1 - xi0)/2, m integer
    shift = (1.0 - xi0) / 2.0
    cross = shift + np.arange(np.ceil(-half - shift), np.floor(half - shift) + 1)
    breaks = np.unique(np.concatenate([spec.knots(), cross]))
    breaks = breaks[(breaks > -half - 1e-12) & (breaks < half + 1e-12)]
    rule = basis.gauss_rule(n_gauss)
    out = np.zeros(len(cells), dtype=complex)
    for z0, z1 in zip(breaks[:-1], breaks[1:]):
        if z1 - z0 < 1e-14:
            continue
        zg = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * rule.nodes
        kv = spec.eval(zg) * (0.5 * (z1 - z0) * rule.weights)
        for zq, kw in zip(zg, kv):
            if kw == 0.0:
                continue
            # evaluation point y = x + h z sits `off` cells to the right
            off = int(np.floor((xi0 + 2.0 * zq + 1.0) / 2.0))
            xi = xi0 + 2.0 * zq - 2.0 * off
            tab = basis.legendre_table(k, xi)[0, 0, :]
            vals = u_h.coeffs[(cells + off) % mesh.N] @ tab
            out += kw * vals
    return out


def _require_uniform(u_h: DGFunction):
    if not u_h.mesh.is_uniform:
        raise UnsupportedOperationError(
            "post-processing is defined on uniform meshes only")


def postprocess_value(u_h: DGFunction, x, spec: KernelSpec,
                      n_gauss: int | None = None) -> complex | np.ndarray:
    """Post-processed value u*(x) = int K_h(y - x) u_h(y) dy with the
    periodic extension of u_h; K_h(x) = K(x/h)/h and the kernel is even,
    so orientation is immaterial.  Accepts scalar or array x."""
    _require_uniform(u_h)
    ng = n_gauss or (u_h.k + 1)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    cells, xis = u_h.mesh.reference_coord(xs)
    out = np.empty(xs.shape, dtype=complex)
    # points sharing a reference offset share the breakpoint pattern
    for xi0 in np.unique(xis):
        mask = xis == xi0
        out[mask] = _convolve_cells(u_h, cells[mask], float(xi0), spec, ng)
    return out if np.ndim(x) else complex(out[0])


def postprocessed_error(u_h: DGFunction, f: AnalyticField, t: float,
                        spec: KernelSpec, n_quad: int | None = None) -> float:
    """E* = || u - u* || by per-cell quadrature on a uniform mesh."""
    _require_uniform(u_h)
    mesh = u_h.mesh
    rule = basis.gauss_rule(n_quad or basis.default_quad_points(u_h.k))
    cells = np.arange(mesh.N)
    total = 0.0
    for q, xi0 in enumerate(rule.nodes):
        x = mesh.centers + 0.5 * mesh.h_sizes * xi0
        star = _convolve_cells(u_h, cells, float(xi0), spec, u_h.k + 1)
        diff2 = np.abs(f.eval(x, t, 0) - star) ** 2
        total += float(np.sum(0.5 * mesh.h_sizes * rule.weights[q] * diff2))
    return float(np.sqrt(total))
