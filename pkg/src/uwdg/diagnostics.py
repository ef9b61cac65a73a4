"""Error metrics of the superconvergence study.

Flux errors, cell-average error, distance to the flux-matching
projection, point errors at the superconvergence sets, broken L2 errors,
and the observed-order bookkeeping for refinement sweeps.  Integrals use
the over-integration rule of the basis module so reported numbers are
quadrature converged at table scales.  Metrics whose point sets are
empty are reported as the DNE sentinel, never as NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import basis
from .flux import FluxConfig, interface_matrices, scale_flux
from .projection import (AnalyticField, DGFunction, project_star,
                         special_points)

DNE = "DNE"


def numerical_fluxes(u: DGFunction, cfg: FluxConfig):
    """(uhat, uxtilde) of a DG field at its N interfaces x_{j+1/2}."""
    gh = interface_matrices(scale_flux(cfg, u.mesh.h))
    v_r, d_r, v_l, d_l = u.traces()
    left = np.stack([v_r, d_r])                 # trace from cell j
    right = np.stack([np.roll(v_l, -1), np.roll(d_l, -1)])
    flux = gh.G @ left + gh.H @ right
    return flux[0], flux[1]


def flux_errors(u_h: DGFunction, f: AnalyticField, t: float,
                cfg: FluxConfig) -> tuple[float, float]:
    """RMS interface errors of the two numerical fluxes against (u, u_x)."""
    uhat, uxt = numerical_fluxes(u_h, cfg)
    xs = u_h.mesh.nodes[1:]
    n = u_h.mesh.N
    e_f = np.sqrt(np.sum(np.abs(f.eval(xs, t, 0) - uhat) ** 2) / n)
    e_fx = np.sqrt(np.sum(np.abs(f.eval(xs, t, 1) - uxt) ** 2) / n)
    return float(e_f), float(e_fx)


def cell_average_error(u_h: DGFunction, f: AnalyticField, t: float,
                       n_quad: int | None = None) -> float:
    """RMS over cells of the mean-value error |h_j^-1 int (u - u_h)|."""
    mesh = u_h.mesh
    rule = basis.gauss_rule(n_quad or basis.default_quad_points(u_h.k))
    fv = f.eval(mesh.quad_points(rule.nodes), t, 0)
    mean_exact = 0.5 * (fv @ rule.weights)      # h_j^-1 int u = mean on ref
    mean_h = u_h.coeffs[:, 0]
    return float(np.sqrt(np.sum(np.abs(mean_exact - mean_h) ** 2) / mesh.N))


def broken_l2_error(u_h: DGFunction, f: AnalyticField, t: float, s: int = 0,
                    n_quad: int | None = None) -> float:
    """|| d^s(u - u_h) || over the mesh by per-cell quadrature."""
    mesh = u_h.mesh
    rule = basis.gauss_rule(n_quad or basis.default_quad_points(u_h.k))
    diff = f.eval(mesh.quad_points(rule.nodes), t, s) - u_h.eval_ref(rule.nodes, s)
    cell = 0.5 * mesh.h_sizes * (np.abs(diff) ** 2 @ rule.weights)
    return float(np.sqrt(np.sum(cell)))


def projection_error(u_h: DGFunction, f: AnalyticField, t: float,
                     cfg: FluxConfig) -> float:
    """|| u_h - Pstar u || at time t."""
    from .solver import l2_norm
    ps = project_star(f, t, u_h.mesh, u_h.k, cfg)
    return l2_norm(u_h - ps)


def point_errors(u_h: DGFunction, f: AnalyticField, t: float,
                 cfg: FluxConfig):
    """Average point-value errors (E_u, E_ux, E_uxx) at the root sets of
    the leading residual and its first two derivatives.

    Points are per-cell reference roots (one-sided evaluation at cell
    endpoints when those are roots); an empty set yields the DNE
    sentinel for that metric.
    """
    mesh = u_h.mesh
    sf = scale_flux(cfg, mesh.h)
    cache: dict[float, object] = {}
    sums = [0.0, 0.0, 0.0]
    counts = [0, 0, 0]
    for j in range(mesh.N):
        hj = float(mesh.h_sizes[j])
        pts = cache.get(hj)
        if pts is None:
            pts = special_points(u_h.k, hj, sf)
            cache[hj] = pts
        center = mesh.centers[j]
        for s, xi in enumerate(pts.sets()):
            if xi.size == 0:
                continue
            x = center + 0.5 * hj * xi
            tab = basis.legendre_table(u_h.k, xi, ders=s)[:, s, :]
            uh_vals = (tab @ u_h.coeffs[j]) * (2.0 / hj) ** s
            sums[s] += float(np.sum(np.abs(f.eval(x, t, s) - uh_vals) ** 2))
            counts[s] += xi.size
    return tuple(
        float(np.sqrt(sums[s] / counts[s])) if counts[s] else DNE
        for s in range(3)
    )


def observed_orders(errors, Ns) -> list:
    """Pairwise dyadic orders log2(e_N / e_2N); entries where either error
    is non-positive/non-finite are None."""
    Ns = list(Ns)
    for a, b in zip(Ns, Ns[1:]):
        if b != 2 * a:
            raise ValueError("observed orders need a strictly doubling N list")
    out = []
    for e0, e1 in zip(errors, errors[1:]):
        ok = (isinstance(e0, (int, float)) and isinstance(e1, (int, float))
              and np.isfinite(e0) and np.isfinite(e1) and e0 > 0 and e1 > 0)
        out.append(float(np.log2(e0 / e1)) if ok else None)
    return out


@dataclass
class ErrorReport:
    """Rows of per-N metrics plus run metadata; orders are attached per
    metric between successive rows by the study runner."""

    meta: dict
    metric_names: list[str]
    rows: list[dict] = field(default_factory=list)
    orders: dict = field(default_factory=dict)   # metric -> list aligned rows[1:]

    def column_count(self) -> int:
        return 1 + 2 * len(self.metric_names)
