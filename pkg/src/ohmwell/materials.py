"""Material coefficients and Ohm laws.

The 1-D solver works with scalar permittivity/permeability profiles sampled
on quadrature nodes. Full 3x3 coefficient matrices appear only in the
pointwise hypothesis checker. Ohm laws are isotropic: the conduction current
is ``j1(xi) = g(|xi|) xi / |xi|`` for a radial profile ``g``, plus an
imposed source current ``j0(x, t)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CoercivityError,
    ConfigurationError,
    ExtrapolationError,
    InvalidDomainError,
)

DEFAULT_UPPER_BOUND = 1e12
TOL = 1e-12

# ---------------------------------------------------------------------------
# material field


@dataclass(frozen=True, eq=False)
class MaterialField:
    grid: np.ndarray
    eps_values: np.ndarray
    mu_values: np.ndarray
    eps_star: float
    mu_star: float
    upper_bound: float = DEFAULT_UPPER_BOUND

    # symmetry of scalar coefficients is automatic in 1-D
    symmetric = True

    def __post_init__(self):
        for name in ("grid", "eps_values", "mu_values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _piecewise_values(x, breaks, values):
    idx = np.searchsorted(np.asarray(breaks, dtype=float), x, side="right")
    return np.asarray(values, dtype=float)[idx]


def _check_positive(label, values, where):
    for i, v in enumerate(values):
        if not np.isfinite(v) or v <= 0.0:
            raise CoercivityError(
                f"{label} must be positive, got {v} at {where} {i}", node=i
            )


def build_material_field(spec: dict, grid) -> MaterialField:
    """Sample a material description on the given nodes.

    ``spec["kind"]`` is ``constant`` (scalars ``eps``, ``mu``), ``piecewise``
    (interior ``breaks`` and one value per piece; a piece is closed on the
    left) or ``table`` (nodes ``x`` with linear interpolation).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidDomainError("material grid is empty")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InvalidDomainError("material grid must be strictly increasing")
    kind = spec.get("kind", "constant")
    upper = float(spec.get("upper_bound", DEFAULT_UPPER_BOUND))

    if kind == "constant":
        eps_spec = [float(spec.get("eps", 1.0))]
        mu_spec = [float(spec.get("mu", 1.0))]
        _check_positive("eps", eps_spec, "piece")
        _check_positive("mu", mu_spec, "piece")
        eps = np.full(grid.shape, eps_spec[0])
        mu = np.full(grid.shape, mu_spec[0])
    elif kind == "piecewise":
        breaks = [float(b) for b in spec.get("breaks", [])]
        eps_spec = [float(v) for v in spec["eps"]]
        mu_spec = [float(v) for v in spec["mu"]]
        if len(eps_spec) != len(breaks) + 1 or len(mu_spec) != len(breaks) + 1:
            raise ConfigurationError(
                "piecewise material needs one eps/mu value per piece"
            )
        if any(b1 >= b2 for b1, b2 in zip(breaks, breaks[1:])):
            raise ConfigurationError("piecewise breaks must be increasing")
        _check_positive("eps", eps_spec, "piece")
        _check_positive("mu", mu_spec, "piece")
        eps = _piecewise_values(grid, breaks, eps_spec)
        mu = _piecewise_values(grid, breaks, mu_spec)
    elif kind == "table":
        xs = np.asarray(spec["x"], dtype=float)
        eps_spec = np.asarray(spec["eps"], dtype=float)
        mu_spec = np.asarray(spec["mu"], dtype=float)
        if xs.shape != eps_spec.shape or xs.shape != mu_spec.shape or xs.size < 2:
            raise ConfigurationError("material table columns must match (>= 2 rows)")
        if np.any(np.diff(xs) <= 0):
            raise ConfigurationError("material table x must be increasing")
        _check_positive("eps", eps_spec, "table row")
        _check_positive("mu", mu_spec, "table row")
        if grid[0] < xs[0] or grid[-1] > xs[-1]:
            raise InvalidDomainError("material table does not cover the grid")
        eps = np.interp(grid, xs, eps_spec)
        mu = np.interp(grid, xs, mu_spec)
    else:
        raise ConfigurationError(f"unknown material kind {kind!r}")

    _check_positive("eps", eps, "node")
    _check_positive("mu", mu, "node")
    if eps.max() > upper or mu.max() > upper:
        raise ConfigurationError(f"material coefficient exceeds upper bound {upper}")
    return MaterialField(
        grid=grid,
        eps_values=eps,
        mu_values=mu,
        eps_star=float(eps.min()),
        mu_star=float(mu.min()),
        upper_bound=upper,
    )


# ---------------------------------------------------------------------------
# pointwise 3x3 hypotheses


@dataclass(frozen=True)
class Matrix3Coefficient:
    entries: np.ndarray
    symmetric: bool = True
    coercive: bool = True
    coercivity: float = 0.0

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.shape != (3, 3):
            raise ConfigurationError("coefficient matrix must be 3x3")
        object.__setattr__(self, "entries", arr)


@dataclass(frozen=True)
class HypothesisReport:
    symmetry_defect: float
    min_eigenvalue: float
    symmetric_ok: bool
    coercive_ok: bool

    @property
    def passed(self) -> bool:
        return self.symmetric_ok and self.coercive_ok


def check_hypotheses_pointwise(m: Matrix3Coefficient, tol: float = TOL) -> HypothesisReport:
    """Symmetry defect and coercivity of a pointwise coefficient matrix.

    Coercivity ``xi . M xi >= c |xi|^2`` only sees the symmetric part, so the
    smallest eigenvalue reported is that of ``(M + M^T) / 2``.
    """
    M = m.entries
    defect = float(np.max(np.abs(M - M.T)))
    lam = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    sym_ok = defect <= tol if m.symmetric else True
    if m.coercive:
        coer_ok = lam >= m.coercivity - tol and lam > 0.0
    else:
        coer_ok = True
    return HypothesisReport(defect, lam, sym_ok, coer_ok)


# ---------------------------------------------------------------------------
# current sources


def _shape_function(shape: str, L: float):
    if shape in ("const", "constant"):
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    try:
        name, k = shape.split(":")
        k = int(k)
    except ValueError:
        raise ConfigurationError(f"unknown source shape {shape!r}") from None
    if name == "sin":
        return lambda x: np.sin(k * np.pi * np.asarray(x, dtype=float) / L)
    if name == "cos":
        return lambda x: np.cos(k * np.pi * np.asarray(x, dtype=float) / L)
    raise ConfigurationError(f"unknown source shape {shape!r}")


@dataclass(frozen=True, eq=False)
class CurrentSource:
    """Imposed current ``j0(x, t) = amplitude(t) * shape(x)`` along the
    transverse direction, with ``amplitude`` piecewise constant in time.

    ``times`` are the left ends of the pieces and start at 0; the last piece
    extends to infinity.
    """

    times: tuple
    amplitudes: tuple
    shape: str
    L: float

    def __post_init__(self):
        if len(self.times) != len(self.amplitudes) or not self.times:
            raise ConfigurationError("source times and amplitudes must match")
        if self.times[0] != 0.0 or any(a >= b for a, b in zip(self.times, self.times[1:])):
            raise ConfigurationError("source times must start at 0 and increase")
        object.__setattr__(self, "_shape", _shape_function(self.shape, self.L))

    def amplitude(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.amplitudes[max(i, 0)])

    def profile(self, x):
        return self._shape(x)

    def transverse(self, x, t):
        return self.amplitude(t) * self._shape(x)

    @property
    def breakpoints(self) -> tuple:
        return tuple(self.times[1:])

    def is_zero(self) -> bool:
        return all(a == 0.0 for a in self.amplitudes)

    def norm_H(self, t: float, nodes, weights) -> float:
        v = self.transverse(nodes, t)
        return float(np.sqrt(np.sum(weights * v * v)))

    def norm_sq_QT(self, T: float, nodes, weights) -> float:
        """Exact-in-time ``||j0||^2`` over ``[0, T] x [0, L]``."""
        prof = float(np.sum(weights * self._shape(nodes) ** 2))
        edges = list(self.times) + [np.inf]
        total = 0.0
        for a, lo, hi in zip(self.amplitudes, edges[:-1], edges[1:]):
            span = max(0.0, min(hi, T) - min(lo, T))
            total += a * a * span
        return total * prof


# ---------------------------------------------------------------------------
# Ohm laws


def _norm3(xi):
    # scaled so tiny or huge components neither underflow nor overflow
    big = np.max(np.abs(xi), axis=-1)
    safe = np.where(big > 0, big, 1.0)
    return big * np.linalg.norm(xi / safe[..., None], axis=-1)

OHM_KINDS = ("zero", "linear", "saturating", "table")


@dataclass(frozen=True, eq=False)
class OhmLaw:
    kind: str
    sigma0: float = 0.0
    c1: float = 1.0
    j0: CurrentSource | None = None
    table_xi: np.ndarray | None = None
    table_j: np.ndarray | None = None
    monotone: bool = True

    def __post_init__(self):
        if self.kind not in OHM_KINDS:
            raise ConfigurationError(f"unknown Ohm law kind {self.kind!r}")
        if self.sigma0 < 0:
            raise ConfigurationError("sigma0 must be non-negative")
        if self.c1 <= 0:
            raise ConfigurationError("c1 must be positive")

    # radial profile g(s), s = |xi| >= 0
    def radial(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "linear":
            return self.sigma0 * s
        if self.kind == "saturating":
            return self.sigma0 * s / np.hypot(1.0, s)
        if np.any(s > self.table_xi[-1]):
            raise ExtrapolationError(
                f"|xi| = {float(np.max(s))} outside Ohm table range [0, {self.table_xi[-1]}]"
            )
        return np.interp(s, self.table_xi, self.table_j)

    def j1(self, xi):
        """Conduction current for 3-vectors ``xi`` (last axis of length 3)."""
        xi = np.asarray(xi, dtype=float)
        s = _norm3(xi)
        g = self.radial(s)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(s > 0, g / np.where(s > 0, s, 1.0), 0.0)
        return scale[..., None] * xi

    def j1_scalar(self, e):
        """Transverse conduction current for scalar field samples (odd in e)."""
        e = np.asarray(e, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(e)
        if self.kind == "linear":
            return self.sigma0 * e
        if self.kind == "saturating":
            return self.sigma0 * e / np.hypot(1.0, e)
        return np.sign(e) * self.radial(np.abs(e))

    def j0_vector(self, x, t):
        out = np.zeros(3)
        if self.j0 is not None:
            out[1] = float(self.j0.transverse(np.asarray(x, dtype=float), t))
        return out

    def has_source(self) -> bool:
        return self.j0 is not None and not self.j0.is_zero()


def build_ohm_law(spec: dict, L: float = 1.0) -> OhmLaw:
    kind = spec.get("kind", "zero")
    sigma0 = float(spec.get("sigma0", 1.0 if kind in ("linear", "saturating") else 0.0))
    j0 = None
    src = spec.get("j0")
    if src and src.get("kind", "none") != "none":
        j0 = CurrentSource(
            times=tuple(float(t) for t in src["times"]),
            amplitudes=tuple(float(a) for a in src["amplitudes"]),
            shape=src.get("shape", "const"),
            L=L,
        )
    table_xi = table_j = None
    monotone = True
    if kind == "table":
        tab = spec["table"]
        table_xi = np.asarray(tab["xi"], dtype=float)
        table_j = np.asarray(tab["j"], dtype=float)
        if table_xi.shape != table_j.shape or table_xi.size < 2:
            raise ConfigurationError("Ohm table needs matching xi/j columns (>= 2 rows)")
        if table_xi[0] != 0.0 or table_j[0] != 0.0:
            raise ConfigurationError("Ohm table must start at (0, 0)")
        if np.any(np.diff(table_xi) <= 0):
            raise ConfigurationError("Ohm table xi must be increasing")
        monotone = bool(np.all(np.diff(table_j) >= 0))
    if "c1" in spec:
        c1 = float(spec["c1"])
    elif kind == "table":
        ratios = np.abs(table_j[1:]) / table_xi[1:]
        c1 = float(ratios.max()) if ratios.max() > 0 else 1.0
    else:
        c1 = sigma0 if sigma0 > 0 else 1.0
    return OhmLaw(kind, sigma0, c1, j0, table_xi, table_j, monotone)


def eval_j(law: OhmLaw, x: float, t: float, xi) -> np.ndarray:
    """Total current ``j0(x, t) + j1(xi)`` for a single 3-vector."""
    xi = np.asarray(xi, dtype=float)
    return law.j0_vector(x, t) + law.j1(xi)


def dissipation_density(law: OhmLaw, x: float, t: float, xi) -> float:
    return float(np.dot(eval_j(law, x, t, xi), np.asarray(xi, dtype=float)))


# ---------------------------------------------------------------------------
# sampled hypothesis checks


@dataclass(frozen=True)
class GrowthReport:
    max_ratio: float
    c1: float
    n_admissible: int
    passed: bool
    message: str = ""


@dataclass(frozen=True)
class MonotonicityReport:
    min_product: float
    n_pairs: int
    passed: bool


def _unpack(samples: Iterable[Sequence], width: int):
    rows = list(samples)
    if not rows:
        raise ConfigurationError("sample list is empty")
    cols = list(zip(*rows))
    if len(cols) != width:
        raise ConfigurationError(f"samples must have {width} entries each")
    return [np.asarray(c, dtype=float) for c in cols]


def check_growth(law: OhmLaw, samples, tol: float = TOL) -> GrowthReport:
    """Largest ``|j1(xi)| / |xi|`` over samples ``(x, t, xi)``; j0 is excluded."""
    _, _, xi = _unpack(samples, 3)
    xi = xi.reshape(-1, 3)
    s = _norm3(xi)
    keep = s > 0
    if not np.any(keep):
        return GrowthReport(0.0, law.c1, 0, True, "no admissible samples")
    ratio = _norm3(law.j1(xi[keep])) / s[keep]
    worst = float(ratio.max())
    return GrowthReport(worst, law.c1, int(keep.sum()), worst <= law.c1 * (1 + tol))


def check_monotonicity(law: OhmLaw, pairs, tol: float = TOL) -> MonotonicityReport:
    """Smallest ``(j1(xi) - j1(eta)) . (xi - eta)`` over ``(x, t, xi, eta)``."""
    _, _, xi, eta = _unpack(pairs, 4)
    xi = xi.reshape(-1, 3)
    eta = eta.reshape(-1, 3)
    prod = np.einsum("ij,ij->i", law.j1(xi) - law.j1(eta), xi - eta)
    worst = float(prod.min())
    return MonotonicityReport(worst, len(prod), worst >= -tol)


def random_samples(rng: np.random.Generator, n: int, L: float, T: float, max_norm=1e3):
    """Random ``(x, t, xi)`` with log-uniform magnitudes in ``[1e-6, 1] * max_norm``."""
    x = rng.uniform(0.0, L, n)
    t = rng.uniform(0.0, T, n)
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    xi = d * max_norm * 10.0 ** rng.uniform(-6, 0, (n, 1))
    return list(zip(x, t, xi))


def random_pairs(rng: np.random.Generator, n: int, L: float, T: float, max_norm=1e3):
    a = random_samples(rng, n, L, T, max_norm)
    b = random_samples(rng, n, L, T, max_norm)
    return [(x, t, xi, eta) for (x, t, xi), (_, _, eta) in zip(a, b)]
