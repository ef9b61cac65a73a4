"""Shared numerical substrate on the reference interval [-1, 1].

Legendre polynomial evaluation (values and first two derivatives),
Gauss-Legendre quadrature, the coefficient maps of the antiderivative
operators used throughout the superconvergence machinery, the reference
mass/stiffness matrices of the ultra-weak volume term, and central
B-splines for the post-processing kernel.

All operations here are pure functions of their inputs; returned arrays
are freshly allocated and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1].

    An n-point rule integrates polynomials up to degree 2n-1 exactly;
    weights are positive and sum to 2.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> complex:
        """Integrate from samples at the rule's nodes (last axis)."""
        return values @ self.weights


@dataclass(frozen=True)
class ReferenceMatrices:
    """Reference-interval mass diagonal and second-derivative stiffness.

    mass_diag[m] = integral of L_m^2 = 2/(2m+1).
    stiff2[m][n] = integral of L_n * L_m'' ; zero unless n <= m-2 and
    n+m even, because L_m'' has degree m-2 and parity (-1)^m.
    """

    mass_diag: np.ndarray
    stiff2: np.ndarray


def legendre_eval(m: int, s: int, xi):
    """Evaluate d^s L_m / dxi^s at xi for s in {0, 1, 2}.

    Uses the value recurrence (2i-1)/i * xi * L_{i-1} - (i-1)/i * L_{i-2}
    differentiated through, which is stable on all of [-1, 1] (the
    (1-xi^2) derivative identity is not used, so endpoints are exact).
    Accepts scalar or array xi.
    """
    if m < 0:
        raise ValueError("degree m must be >= 0")
    if s not in (0, 1, 2):
        raise ValueError("derivative order s must be 0, 1 or 2")
    xi = np.asarray(xi, dtype=float)
    l0 = np.ones_like(xi)
    d0 = np.zeros_like(xi)
    dd0 = np.zeros_like(xi)
    l1 = np.zeros_like(xi)
    d1 = np.zeros_like(xi)
    dd1 = np.zeros_like(xi)
    for i in range(1, m + 1):
        a = (2 * i - 1) / i
        b = (i - 1) / i
        l2, d2, dd2 = l1, d1, dd1
        l1, d1, dd1 = l0, d0, dd0
        l0 = a * xi * l1 - b * l2
        d0 = a * (l1 + xi * d1) - b * d2
        dd0 = a * (2 * d1 + xi * dd1) - b * dd2
    out = (l0, d0, dd0)[s]
    return out if out.ndim else float(out)


def legendre_table(max_degree: int, xi, ders: int = 0) -> np.ndarray:
    """Table of L_0..L_max (and derivatives) at the points xi.

    Returns an array of shape xi.shape + (ders+1, max_degree+1); entry
    [..., s, m] holds d^s L_m / dxi^s.  This is the vectorized workhorse
    behind projections, error norms and point evaluation.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.zeros(xi.shape + (ders + 1, max_degree + 1))
    out[..., 0, 0] = 1.0
    if max_degree >= 1:
        out[..., 0, 1] = xi
        if ders >= 1:
            out[..., 1, 1] = 1.0
    for m in range(2, max_degree + 1):
        a = (2 * m - 1) / m
        b = (m - 1) / m
        out[..., 0, m] = a * xi * out[..., 0, m - 1] - b * out[..., 0, m - 2]
        if ders >= 1:
            out[..., 1, m] = (
                a * (out[..., 0, m - 1] + xi * out[..., 1, m - 1])
                - b * out[..., 1, m - 2]
            )
        if ders >= 2:
            out[..., 2, m] = (
                a * (2 * out[..., 1, m - 1] + xi * out[..., 2, m - 1])
                - b * out[..., 2, m - 2]
            )
    return out


@lru_cache(maxsize=64)
def gauss_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1]."""
    if n < 1:
        raise ValueError("quadrature point count must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


def default_quad_points(k: int) -> int:
    """Point count for smooth-function integrals: over-integration so that
    projection and error numbers are quadrature-noise-free at table scales."""
    return max(k + 3, 10)


def antiderivative_map(order: int, coeffs: np.ndarray) -> np.ndarray:
    """Legendre coefficients of the running antiderivative from xi = -1.

    Maps the coefficients of p to those of q(xi) = int_{-1}^{xi} p, applied
    `order` times (order 1 or 2).  Degrees m >= 1 use the telescoping
    identity (L_{m+1} - L_{m-1})/(2m+1); the constant mode is integrated
    explicitly to 1 + xi so the lower limit is honored.  Output length is
    len(coeffs) + order.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    c = np.asarray(coeffs)
    for _ in range(order):
        out = np.zeros(len(c) + 1, dtype=np.result_type(c, float))
        out[0] += c[0]
        out[1] += c[0]
        for m in range(1, len(c)):
            out[m + 1] += c[m] / (2 * m + 1)
            out[m - 1] -= c[m] / (2 * m + 1)
        c = out
    return c


@lru_cache(maxsize=32)
def reference_matrices(k: int) -> ReferenceMatrices:
    """Mass diagonal and exact stiff2 for degrees 0..k (k >= 2).

    The stiff2 integrand L_n L_m'' has degree <= 2k-2, so a (k+1)-point
    Gauss rule evaluates it exactly.
    """
    if k < 2:
        raise ValueError("reference matrices need k >= 2")
    mass = 2.0 / (2 * np.arange(k + 1) + 1)
    rule = gauss_rule(k + 1)
    tab = legendre_table(k, rule.nodes, ders=2)
    vals = tab[:, 0, :]    # (nq, k+1)
    dd = tab[:, 2, :]
    stiff2 = np.einsum("q,qm,qn->mn", rule.weights, dd, vals)
    stiff2[np.abs(stiff2) < 1e-13] = 0.0
    mass.setflags(write=False)
    stiff2.setflags(write=False)
    return ReferenceMatrices(mass_diag=mass, stiff2=stiff2)


@lru_cache(maxsize=32)
def legendre_derivative_matrix(k: int) -> np.ndarray:
    """Matrix D with (D c) the Legendre coefficients of d/dxi of c.

    Built from L'_m = sum over j < m, j+m odd of (2j+1) L_j.
    """
    d = np.zeros((k + 1, k + 1))
    for m in range(1, k + 1):
        for j in range(m - 1, -1, -2):
            d[j, m] = 2 * j + 1
    d.setflags(write=False)
    return d


def bspline_eval(order: int, x) -> np.ndarray | float:
    """Central B-spline of order ell at x (scalar or array).

    psi^(1) is the indicator of [-1/2, 1/2); higher orders follow the
    Cox-de Boor recursion for uniform knots at -ell/2 .. ell/2, i.e.
    repeated convolution with the unit indicator.  The result is a
    piecewise polynomial of degree ell-1 supported on [-ell/2, ell/2]
    with unit integral.
    """
    if order < 1:
        raise ValueError("B-spline order must be >= 1")
    x = np.asarray(x, dtype=float)

    def rec(ell, y):
        if ell == 1:
            return np.where((y >= -0.5) & (y < 0.5), 1.0, 0.0)
        return (
            (y + ell / 2) * rec(ell - 1, y + 0.5)
            + (ell / 2 - y) * rec(ell - 1, y - 0.5)
        ) / (ell - 1)

    out = rec(order, x)
    return out if out.ndim else float(out)
