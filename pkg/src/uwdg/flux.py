"""Flux parameter algebra and the block-circulant interface solver.

The scheme's numerical fluxes at an interface act on the trace pairs
[u, u_x] from the two sides through the 2x2 matrices G and H = I - G.
Everything the projections and corrections need at cell boundaries is
collected here: the Gamma/Lambda quantities, the boundary blocks A_j/B_j
built from Legendre trace vectors, the A1/A2/A3 classification that
decides whether the flux-matching projection is cell-local or a global
periodic solve, and the DFT solver for the latter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularSymbolError
from .mesh import Mesh1D

A1_TOL = 1e-12          # detection of alpha1^2 + beta1*beta2 == 1/4
RESONANCE_TOL = 1e-9    # |(.)^N - 1| threshold for the A3 non-resonance checks
SYMBOL_COND_MAX = 1e12  # condition number cutoff for circulant symbol blocks


@dataclass(frozen=True)
class FluxConfig:
    """Dimensionless tilde parameters of a scale-invariant flux."""

    alpha1_t: float = 0.0
    beta1_t: float = 0.0
    beta2_t: float = 0.0

    def label(self) -> str:
        return f"({self.alpha1_t:g},{self.beta1_t:g},{self.beta2_t:g})"


#: commonly used parameter choices
CENTRAL = FluxConfig(0.0, 0.0, 0.0)
ALTERNATING = FluxConfig(0.5, 0.0, 0.0)


@dataclass(frozen=True)
class ScaledFlux:
    """Flux parameters instantiated at mesh scale h:
    alpha1 = alpha1~, beta1 = beta1~/h, beta2 = beta2~*h."""

    alpha1: float
    beta1: float
    beta2: float
    h: float


@dataclass(frozen=True)
class InterfaceMatrices:
    G: np.ndarray
    H: np.ndarray


@dataclass(frozen=True)
class CellBlocks:
    """Per-cell boundary algebra for polynomial degree k on a cell of
    width h_j.

    A = G [L^-_{k-1}, L^-_k] and B = H [L^+_{k-1}, L^+_k] where the trace
    vectors carry the physical value/derivative pair of the scaled
    Legendre basis at the right (-) and left (+) endpoints:
    L^-_m = [1, m(m+1)/h_j], L^+_m = (-1)^m [1, -m(m+1)/h_j].
    Identities: det(A+B) = 2((-1)^k Gamma + Lambda), reducing to
    2(-1)^k Gamma when Lambda = 0 (the local-projection class).
    """

    A: np.ndarray
    B: np.ndarray
    gamma: float
    lam: float
    k: int
    h_j: float
    Q: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class AssumptionClass:
    """Solvability classification of the flux-matching projection."""

    tag: str                      # "A1" | "A2" | "A3" | "Unsupported"
    diagnostics: dict
    warning: str | None = None

    @property
    def supported(self) -> bool:
        return self.tag in ("A1", "A2", "A3")


def scale_flux(cfg: FluxConfig, h: float) -> ScaledFlux:
    if not h > 0:
        raise ValueError("mesh scale h must be positive")
    return ScaledFlux(alpha1=cfg.alpha1_t, beta1=cfg.beta1_t / h,
                      beta2=cfg.beta2_t * h, h=h)


def interface_matrices(sf: ScaledFlux) -> InterfaceMatrices:
    G = np.array([[0.5 + sf.alpha1, -sf.beta2],
                  [-sf.beta1, 0.5 - sf.alpha1]])
    H = np.eye(2) - G
    G.setflags(write=False)
    H.setflags(write=False)
    return InterfaceMatrices(G=G, H=H)


def trace_vector(m: int, h_j: float, side: str) -> np.ndarray:
    """Value/derivative pair of L_{j,m} at a cell endpoint.

    side "-" is the right endpoint (trace from inside), "+" the left.
    The second entry is the physical x-derivative (2/h_j) L'_m(+-1).
    """
    if side == "-":
        return np.array([1.0, m * (m + 1) / h_j])
    return (-1.0) ** m * np.array([1.0, -m * (m + 1) / h_j])


def gamma_lambda(sf: ScaledFlux, k: int, h_j: float) -> tuple[float, float]:
    s = sf.alpha1 ** 2 + sf.beta1 * sf.beta2
    gamma = (sf.beta1 + sf.beta2 / h_j ** 2 * k ** 2 * (k ** 2 - 1)
             - 2 * k ** 2 / h_j * (s + 0.25))
    lam = -2 * k / h_j * (s - 0.25)
    return gamma, lam


def cell_blocks(sf: ScaledFlux, k: int, h_j: float) -> CellBlocks:
    if k < 2:
        raise ValueError("boundary blocks need k >= 2")
    gh = interface_matrices(sf)
    A = np.column_stack([gh.G @ trace_vector(k - 1, h_j, "-"),
                         gh.G @ trace_vector(k, h_j, "-")])
    B = np.column_stack([gh.H @ trace_vector(k - 1, h_j, "+"),
                         gh.H @ trace_vector(k, h_j, "+")])
    gamma, lam = gamma_lambda(sf, k, h_j)
    Q = None
    if abs(np.linalg.det(A)) > 1e-14 * max(1.0, np.abs(A).max() ** 2):
        Q = -np.linalg.solve(A, B)
        Q.setflags(write=False)
    A.setflags(write=False)
    B.setflags(write=False)
    return CellBlocks(A=A, B=B, gamma=gamma, lam=lam, k=k, h_j=h_j, Q=Q)


def flux_projection_rhs_matrix(sf: ScaledFlux, k: int, h_j: float,
                               m: int) -> np.ndarray:
    """G L^-_m + H L^+_m, the interface footprint of mode m of one cell."""
    gh = interface_matrices(sf)
    return gh.G @ trace_vector(m, h_j, "-") + gh.H @ trace_vector(m, h_j, "+")


def classify_assumption(cfg: FluxConfig, mesh: Mesh1D, k: int) -> AssumptionClass:
    """Decide A1 / A2 / A3 / Unsupported for this flux, mesh and degree.

    A1 (local): alpha1^2 + beta1*beta2 = 1/4 and Gamma_j != 0 on every
    cell.  A2 (global): uniform mesh, != 1/4, |Gamma/Lambda| > 1.
    A3 (global): uniform mesh, != 1/4, and the non-resonance conditions
    hold: |Gamma/Lambda| = 1 with odd N and ((-1)^{k+1} Gamma/Lambda)^N
    != 1, or |Gamma/Lambda| < 1 with
    ((-1)^{k+1} Gamma/Lambda + sqrt((Gamma/Lambda)^2 - 1))^N != 1 in
    complex arithmetic.  Near-resonant configurations are reported
    Unsupported with a warning rather than silently solved.
    """
    if k < 2:
        raise ValueError("classification needs k >= 2")
    sf = scale_flux(cfg, mesh.h)
    s = cfg.alpha1_t ** 2 + cfg.beta1_t * cfg.beta2_t
    diag: dict = {"alpha1^2+beta1*beta2": s, "N": mesh.N, "k": k}

    if abs(s - 0.25) <= A1_TOL:
        gammas = np.array([gamma_lambda(sf, k, hj)[0] for hj in mesh.h_sizes])
        scale = np.abs(gammas).max() + 1.0 / mesh.h
        diag["min|Gamma_j|*h"] = float(np.abs(gammas).min() * mesh.h)
        if np.all(np.abs(gammas) > 1e-12 * scale):
            return AssumptionClass("A1", diag)
        return AssumptionClass("Unsupported", diag,
                               warning="Gamma_j = 0 on some cell")

    if not mesh.is_uniform:
        return AssumptionClass(
            "Unsupported", diag,
            warning="global projection requires a uniform mesh")

    gamma, lam = gamma_lambda(sf, k, mesh.h)
    diag["Gamma*h"], diag["Lambda*h"] = gamma * mesh.h, lam * mesh.h
    if abs(lam) <= 1e-14 * (abs(gamma) + 1.0 / mesh.h):
        return AssumptionClass("Unsupported", diag,
                               warning="Lambda = 0: Gamma/Lambda undefined")
    rho = gamma / lam
    diag["Gamma/Lambda"] = rho
    sign = (-1.0) ** (k + 1)
    # eigenvalues of Q = -A^{-1}B: sign*(rho +- sqrt(rho^2 - 1))
    eig = sign * (rho + np.sqrt(complex(rho * rho - 1.0)))
    diag["eig(Q)"] = (eig, sign * (rho - np.sqrt(complex(rho * rho - 1.0))))

    if abs(rho) > 1.0 + RESONANCE_TOL:
        return AssumptionClass("A2", diag)

    if abs(abs(rho) - 1.0) <= RESONANCE_TOL:
        val = (sign * rho) ** mesh.N
        diag["resonance"] = abs(val - 1.0)
        if mesh.N % 2 == 1 and abs(val - 1.0) > RESONANCE_TOL:
            return AssumptionClass("A3", diag)
        return AssumptionClass(
            "Unsupported", diag,
            warning="|Gamma/Lambda| = 1 resonance (needs odd N and "
                    "((-1)^(k+1) Gamma/Lambda)^N != 1)")

    val = eig ** mesh.N
    diag["resonance"] = abs(val - 1.0)
    if abs(val - 1.0) > RESONANCE_TOL:
        return AssumptionClass("A3", diag)
    return AssumptionClass(
        "Unsupported", diag,
        warning="near-resonant A3 configuration: |eig(Q)^N - 1| = "
                f"{abs(val - 1.0):.3e}")


def solve_block_circulant(A: np.ndarray, B: np.ndarray,
                          rhs: np.ndarray) -> np.ndarray:
    """Solve the periodic interface system with rows A x_j + B x_{j+1} = r_j.

    The coefficient matrix is block-circulant with first block row
    (A, B, 0, ..., 0); the DFT over the cell index block-diagonalizes it
    into N independent 2x2 solves with symbol A + omega^l B,
    omega = exp(2 pi i / N).  rhs has shape (N, 2); the solution has the
    same shape.  A (near) singular symbol raises SingularSymbolError
    naming the offending frequency.
    """
    rhs = np.asarray(rhs, dtype=complex)
    N = rhs.shape[0]
    omega = np.exp(2j * np.pi * np.arange(N) / N)
    symbols = A[None, :, :] + omega[:, None, None] * B[None, :, :]

    sv = np.linalg.svd(symbols, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        conds = sv[:, 0] / sv[:, 1]
    bad = np.where(~np.isfinite(conds) | (conds > SYMBOL_COND_MAX))[0]
    if bad.size:
        l = int(bad[0])
        raise SingularSymbolError(l, float(conds[l]))

    rhat = np.fft.fft(rhs, axis=0)
    xhat = np.linalg.solve(symbols, rhat[:, :, None])[:, :, 0]
    return np.fft.ifft(xhat, axis=0)
