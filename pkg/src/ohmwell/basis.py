"""Weighted-orthonormal trigonometric bases for the 1-D TEM Galerkin system.

Electric modes start from ``sin(k pi x / L)`` and vanish at both ends (the
perfect-conductor condition); magnetic modes start from ``1`` and
``cos((k-1) pi x / L)`` with no boundary condition. Both families are
orthonormalized with modified Gram-Schmidt in the eps- and mu-weighted L2
products, evaluated by composite Gauss-Legendre quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ResolutionError, ShapeError
from .materials import MaterialField

REORTHO_PIVOT = 1e-6
SINGULAR_PIVOT = 1e-8


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    L: float
    nodes: np.ndarray
    weights: np.ndarray
    q: int
    panels: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def default_panels(m: int) -> int:
    return max(8, 2 * m)


def build_grid(L: float, q: int = 8, panels: int = 8) -> QuadratureGrid:
    """Composite Gauss-Legendre rule with ``q`` points on each of ``panels``
    equal panels of ``[0, L]``."""
    if not (L > 0 and np.isfinite(L)):
        raise ConfigurationError(f"interval length must be positive, got {L}")
    if int(q) != q or not 2 <= q <= 16:
        raise ConfigurationError(f"points per panel must be in [2, 16], got {q}")
    if int(panels) != panels or panels < 1:
        raise ConfigurationError(f"panel count must be >= 1, got {panels}")
    q, panels = int(q), int(panels)
    ref_x, ref_w = np.polynomial.legendre.leggauss(q)
    h = L / panels
    left = np.arange(panels) * h
    nodes = (left[:, None] + 0.5 * h * (ref_x + 1.0)).ravel()
    weights = np.tile(0.5 * h * ref_w, panels)
    return QuadratureGrid(float(L), nodes, weights, q, panels)


def raw_e_modes(m: int, L: float, x):
    """Values and derivatives of ``sin(k pi x / L)``, k = 1..m; shape (m, len(x))."""
    x = np.asarray(x, dtype=float)
    k = np.arange(1, m + 1)[:, None] * (np.pi / L)
    return np.sin(k * x), k * np.cos(k * x)


def raw_h_modes(m: int, L: float, x):
    """Values and derivatives of ``cos((k-1) pi x / L)``, k = 1..m."""
    x = np.asarray(x, dtype=float)
    k = np.arange(0, m)[:, None] * (np.pi / L)
    return np.cos(k * x), -k * np.sin(k * x)


def gram_matrix(raw, weight, grid: QuadratureGrid):
    return (raw * (grid.weights * weight)) @ raw.T


def modified_gram_schmidt(raw, weight, grid: QuadratureGrid):
    """Return lower-triangular ``R`` with ``R @ raw`` orthonormal in the
    ``weight``-weighted quadrature product."""
    m = raw.shape[0]
    w = grid.weights * weight
    R = np.zeros((m, m))
    Q = np.zeros_like(raw)
    for k in range(m):
        v = raw[k].copy()
        c = np.zeros(m)
        c[k] = 1.0
        start = np.sqrt(np.dot(w * v, v))
        for _ in range(2):
            for j in range(k):
                r = np.dot(w * v, Q[j])
                v -= r * Q[j]
                c -= r * R[j]
            pivot = np.sqrt(np.dot(w * v, v))
            if pivot >= REORTHO_PIVOT * start:
                break
        if pivot < SINGULAR_PIVOT * start or pivot == 0.0:
            raise ResolutionError(
                f"mode {k + 1} is numerically dependent on earlier modes; "
                "use a finer quadrature grid or fewer modes"
            )
        Q[k] = v / pivot
        R[k] = c / pivot
    return R


@dataclass(frozen=True, eq=False)
class BasisSet:
    m: int
    grid: QuadratureGrid
    phi: np.ndarray
    psi: np.ndarray
    dphi: np.ndarray
    dpsi: np.ndarray
    C: np.ndarray
    R_e: np.ndarray
    R_h: np.ndarray
    eps: np.ndarray
    mu: np.ndarray

    def evaluate(self, x, which: str = "e", derivative: bool = False):
        """Orthonormal modes at arbitrary points (not only quadrature nodes)."""
        if which == "e":
            vals, ders = raw_e_modes(self.m, self.grid.L, x)
            R = self.R_e
        elif which == "h":
            vals, ders = raw_h_modes(self.m, self.grid.L, x)
            R = self.R_h
        else:
            raise ValueError(f"which must be 'e' or 'h', got {which!r}")
        return R @ (ders if derivative else vals)


def build_basis(m: int, grid: QuadratureGrid, mat: MaterialField) -> BasisSet:
    if int(m) != m or m < 1:
        raise ConfigurationError(f"mode count must be >= 1, got {m}")
    m = int(m)
    if mat.eps_values.shape != grid.nodes.shape:
        raise ShapeError("material is not sampled on the quadrature grid")
    L = grid.L
    e_raw, de_raw = raw_e_modes(m, L, grid.nodes)
    h_raw, dh_raw = raw_h_modes(m, L, grid.nodes)
    for label, raw, weight in (("e", e_raw, mat.eps_values), ("h", h_raw, mat.mu_values)):
        G = gram_matrix(raw, weight, grid)
        lam_min = np.linalg.eigvalsh(G)[0]
        if lam_min <= 1e-8:
            raise ResolutionError(
                f"{label}-mode Gram matrix is numerically singular "
                f"(smallest eigenvalue {lam_min:.3e}); refine the grid or reduce m"
            )
    R_e = modified_gram_schmidt(e_raw, mat.eps_values, grid)
    R_h = modified_gram_schmidt(h_raw, mat.mu_values, grid)
    phi, dphi = R_e @ e_raw, R_e @ de_raw
    psi, dpsi = R_h @ h_raw, R_h @ dh_raw
    C = (dphi * grid.weights) @ psi.T
    for arr in (phi, psi, dphi, dpsi, C, R_e, R_h):
        arr.setflags(write=False)
    return BasisSet(m, grid, phi, psi, dphi, dpsi, C, R_e, R_h,
                    mat.eps_values, mat.mu_values)


def _check_samples(basis: BasisSet, f, name):
    f = np.asarray(f, dtype=float)
    if f.shape != basis.grid.nodes.shape:
        raise ShapeError(
            f"{name} has {f.shape} samples, grid has {basis.grid.nodes.shape}"
        )
    return f


def project_initial(basis: BasisSet, mat: MaterialField, e0, h0):
    """Weighted orthogonal projection of sampled initial fields."""
    e0 = _check_samples(basis, e0, "e0")
    h0 = _check_samples(basis, h0, "h0")
    w = basis.grid.weights
    a0 = basis.phi @ (w * mat.eps_values * e0)
    b0 = basis.psi @ (w * mat.mu_values * h0)
    return a0, b0


def synthesize(basis: BasisSet, coeffs, which: str = "e"):
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.m:
        raise ShapeError(f"expected {basis.m} coefficients, got {coeffs.shape[-1]}")
    modes = basis.phi if which == "e" else basis.psi
    return coeffs @ modes


def weighted_norm(basis: BasisSet, f, which: str = "e") -> float:
    weight = basis.eps if which == "e" else basis.mu
    return float(np.sqrt(np.sum(basis.grid.weights * weight * f * f)))


def orthonormality_residual(basis: BasisSet) -> float:
    w = basis.grid.weights
    Ge = (basis.phi * (w * basis.eps)) @ basis.phi.T
    Gh = (basis.psi * (w * basis.mu)) @ basis.psi.T
    eye = np.eye(basis.m)
    return float(max(np.abs(Ge - eye).max(), np.abs(Gh - eye).max()))


def green_residual(basis: BasisSet) -> float:
    """``max |int phi_k' psi_l + int phi_k psi_l'|`` (boundary term is zero)."""
    other = (basis.phi * basis.grid.weights) @ basis.dpsi.T
    return float(np.abs(basis.C + other).max())
