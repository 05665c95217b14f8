"""Faedo-Galerkin simulation of the 1-D TEM Maxwell system with an Ohm law.

The reduced system on ``[0, L]`` with perfectly conducting ends reads

    eps e_t = -h_x - j(e),      mu h_t = -e_x,      e(0) = e(L) = 0.

Expanding ``e`` in the eps-orthonormal sine family and ``h`` in the
mu-orthonormal cosine family gives the coefficient system

    a' = C b - P j(e_m),        b' = -C^T a,

with ``C[k, l] = int phi_k' psi_l`` and ``P`` the (unweighted) L2 projection
onto the electric modes. The skew coupling conserves the field energy
``(|a|^2 + |b|^2) / 2`` exactly, so every change in energy is accounted for
by the dissipation ``(j(e_m), e_m)``.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from . import cara_ode
from .basis import BasisSet, build_basis, build_grid, project_initial, raw_e_modes, raw_h_modes
from .cara_ode import OdeProblem, PiecewiseConstant, Trajectory
from .config import SimulationConfig
from .errors import ComparabilityError, ConfigurationError, ShapeError
from .materials import MaterialField, OhmLaw, build_material_field, build_ohm_law


@dataclass(frozen=True)
class GalerkinState:
    t: float
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True, eq=False)
class EnergyLedger:
    times: np.ndarray
    E: np.ndarray
    D: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    x: np.ndarray
    e: np.ndarray
    h: np.ndarray
    a: np.ndarray
    b: np.ndarray


@dataclass(eq=False)
class SimulationResult:
    config: SimulationConfig | None
    basis: BasisSet
    material: MaterialField
    law: OhmLaw
    problem: OdeProblem
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ledger: EnergyLedger
    snapshots: list
    poynting: list
    fine_times: np.ndarray
    fine_E: np.ndarray
    fine_dissipation: np.ndarray
    field_energy_defect: float
    wall_time: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def states(self):
        return [GalerkinState(t, a, b) for t, a, b in zip(self.times, self.a, self.b)]


def growth_constant(basis: BasisSet, mat: MaterialField, law: OhmLaw) -> float:
    """Computable ``k_m`` with ``|f_m| <= k_m (||j0||_H + |a| + |b|)``."""
    return float(np.linalg.norm(basis.C, 2) + max(law.c1, 1.0) / min(mat.eps_star, 1.0))


class GalerkinRHS:
    """Right-hand side of the coefficient system for ``y = (a, b)``."""

    def __init__(self, basis: BasisSet, law: OhmLaw):
        self.m = basis.m
        self.C = np.ascontiguousarray(basis.C)
        self.CT = np.ascontiguousarray(basis.C.T)
        self.phi = basis.phi
        self.phi_w = basis.phi * basis.grid.weights
        self.law = law
        self.conducting = law.kind != "zero"
        self.source = law.j0 if law.has_source() else None
        if self.source is not None:
            self.source_proj = self.phi_w @ self.source.profile(basis.grid.nodes)

    def __call__(self, t, y):
        m = self.m
        a, b = y[:m], y[m:]
        da = self.C @ b
        if self.conducting:
            da -= self.phi_w @ self.law.j1_scalar(a @ self.phi)
        if self.source is not None:
            da -= self.source.amplitude(t) * self.source_proj
        return np.concatenate([da, -(self.CT @ a)])


def assemble(basis: BasisSet, mat: MaterialField, law: OhmLaw, y0=None, T: float = 1.0) -> OdeProblem:
    if mat.eps_values.shape != basis.grid.nodes.shape or not np.array_equal(mat.eps_values, basis.eps):
        raise ShapeError("material does not match the basis it was built with")
    m = basis.m
    if y0 is None:
        y0 = np.zeros(2 * m)
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (2 * m,):
        raise ShapeError(f"initial state must have length {2 * m}, got {y0.shape}")
    km = growth_constant(basis, mat, law)
    if law.has_source():
        src = law.j0
        grid = basis.grid
        A = PiecewiseConstant(
            tuple(src.times),
            tuple(km * src.norm_H(t, grid.nodes, grid.weights) for t in src.times),
        )
        breaks = src.breakpoints
    else:
        A = PiecewiseConstant.constant(0.0)
        breaks = ()
    return OdeProblem(GalerkinRHS(basis, law), y0, T, A, km, breaks)


# ---------------------------------------------------------------------------
# initial data


def sample_initial(spec, which: str, m_hint: int, L: float, x):
    x = np.asarray(x, dtype=float)
    if spec == "zero":
        return np.zeros_like(x)
    raw_modes = raw_e_modes if which == "e" else raw_h_modes
    if isinstance(spec, str):
        k = int(spec.split(":")[1])
        vals, _ = raw_modes(k, L, x)
        return vals[k - 1]
    if "modes" in spec:
        coeffs = np.asarray(spec["modes"], dtype=float)
        vals, _ = raw_modes(coeffs.size, L, x)
        return coeffs @ vals
    xs = np.asarray(spec["x"], dtype=float)
    if x.min() < xs[0] or x.max() > xs[-1]:
        raise ConfigurationError("initial-data table does not cover [0, L]")
    return np.interp(x, xs, np.asarray(spec["v"], dtype=float))


# ---------------------------------------------------------------------------
# simulation


def _segments(n: int, T: float, breaks):
    """Index ranges between source switch times on the step grid."""
    idx = sorted({int(round(b / T * n)) for b in breaks if 0 < b < T})
    edges = [0] + idx + [n]
    return list(zip(edges[:-1], edges[1:]))


def _dissipation(rhs: GalerkinRHS, basis: BasisSet, times, a_all, i0, i1):
    e = a_all[i0:i1 + 1] @ basis.phi
    j = rhs.law.j1_scalar(e)
    if rhs.source is not None:
        # one source piece per segment: evaluate strictly inside it
        tm = 0.5 * (times[i0] + times[i1])
        j = j + rhs.source.amplitude(tm) * rhs.source.profile(basis.grid.nodes)
    return (j * e) @ basis.grid.weights


def simulate(basis: BasisSet, mat: MaterialField, law: OhmLaw, a0, b0, T: float,
             dt: float, scheme: str = "rk4", stride: int = 10, snapshots=(),
             config: SimulationConfig | None = None) -> SimulationResult:
    start = _time.perf_counter()
    m = basis.m
    problem = assemble(basis, mat, law, np.concatenate([a0, b0]), T)
    traj: Trajectory = cara_ode.integrate(problem, scheme, dt, stride=1)
    n = traj.steps
    times = traj.times
    a_all, b_all = traj.states[:, :m], traj.states[:, m:]
    E_all = 0.5 * np.sum(traj.states ** 2, axis=1)

    rhs = problem.rhs
    diss = np.zeros(n + 1)
    D_all = np.zeros(n + 1)
    offset = 0.0
    for i0, i1 in _segments(n, T, law.j0.breakpoints if law.has_source() else ()):
        seg = _dissipation(rhs, basis, times, a_all, i0, i1)
        # the left end of a segment reuses the right-limit value of the source
        diss[i0:i1 + 1] = seg
        D_all[i0:i1 + 1] = offset + cumulative_simpson(seg, x=times[i0:i1 + 1], initial=0.0)
        offset = D_all[i1]

    keep = list(range(0, n + 1, stride))
    if keep[-1] != n:
        keep.append(n)
    ledger = EnergyLedger(
        times[keep], E_all[keep], D_all[keep], E_all[keep] + D_all[keep] - E_all[0]
    )

    w = basis.grid.weights
    e_fin = a_all[-1] @ basis.phi
    h_fin = b_all[-1] @ basis.psi
    field_E = 0.5 * (np.sum(w * mat.eps_values * e_fin ** 2) + np.sum(w * mat.mu_values * h_fin ** 2))
    defect = abs(field_E - E_all[-1])

    ends = np.array([0.0, basis.grid.L])
    phi_end = basis.evaluate(ends, "e")
    psi_end = basis.evaluate(ends, "h")
    snaps, flux = [], []
    for s in snapshots:
        i = min(max(int(round(s / T * n)), 0), n)
        a, b = a_all[i].copy(), b_all[i].copy()
        snaps.append(Snapshot(float(times[i]), basis.grid.nodes, a @ basis.phi, b @ basis.psi, a, b))
        flux.append((a @ phi_end) * (b @ psi_end))

    return SimulationResult(
        config=config, basis=basis, material=mat, law=law, problem=problem,
        times=times[keep], a=a_all[keep], b=b_all[keep], ledger=ledger,
        snapshots=snaps, poynting=flux, fine_times=times, fine_E=E_all,
        fine_dissipation=diss, field_energy_defect=float(defect),
        wall_time=_time.perf_counter() - start,
        extras={"fine_states": traj.states, "radius": traj.radius},
    )


def build_setup(config: SimulationConfig):
    grid = build_grid(config.L, config.q, config.panels)
    mat = build_material_field(dict(config.material), grid.nodes)
    law = build_ohm_law(config.ohm, config.L)
    basis = build_basis(config.modes, grid, mat)
    return grid, mat, law, basis


def run(config: SimulationConfig) -> SimulationResult:
    start = _time.perf_counter()
    grid, mat, law, basis = build_setup(config)
    e0 = sample_initial(config.e0, "e", config.modes, config.L, grid.nodes)
    h0 = sample_initial(config.h0, "h", config.modes, config.L, grid.nodes)
    a0, b0 = project_initial(basis, mat, e0, h0)
    result = simulate(basis, mat, law, a0, b0, config.T, config.dt, config.scheme,
                      config.output_stride, config.snapshots, config)
    result.wall_time = _time.perf_counter() - start
    return result


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class Report:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.6e} (threshold {self.threshold:.3e})"


def energy_residual(result: SimulationResult) -> float:
    return float(np.max(np.abs(result.ledger.residual)))


def energy_report(result: SimulationResult, tol: float = 1e-8) -> Report:
    r = energy_residual(result)
    return Report("energy residual", r, tol, r <= tol)


def energy_inequality_check(result: SimulationResult, tol: float = 1e-8) -> Report:
    E = result.ledger.E
    rise = float(np.max(np.diff(E), initial=0.0))
    return Report("energy non-increase", rise, tol, rise <= tol,
                  {"max_over_initial": float(np.max(E - E[0]))})


def apriori_constant(c1: float, eps_star: float, T: float) -> float:
    """Constant of the Galerkin energy estimate obtained by Gronwall.

    ``||e||^2 + ||h||^2 <= u0 + c2 (||j0||^2 + int ||e||^2)`` with
    ``c2 = max(1, (1 + 2 c1) / eps_star)``; Gronwall then gives the factor
    ``c2 (1 + c2 T exp(c2 T))`` in front of ``u0 + ||j0||^2``.
    """
    c2 = max(1.0, (1.0 + 2.0 * c1) / eps_star)
    return cara_ode.gronwall_bound(c2, c2, T)


def source_norm_sq(result: SimulationResult) -> float:
    law = result.law
    if not law.has_source():
        return 0.0
    g = result.basis.grid
    return law.j0.norm_sq_QT(float(result.fine_times[-1]), g.nodes, g.weights)


def apriori_check(result: SimulationResult, j0_norm: float | None = None) -> Report:
    j0_sq = source_norm_sq(result) if j0_norm is None else float(j0_norm) ** 2
    T = float(result.fine_times[-1])
    c = apriori_constant(result.law.c1, result.material.eps_star, T)
    E = result.ledger.E
    bound = c * (2.0 * E[0] + j0_sq)
    worst = float(np.max(2.0 * E))
    margin = bound - worst
    return Report("a-priori bound margin", margin, 0.0, margin >= 0.0,
                  {"c": c, "bound": bound, "max_2E": worst, "j0_norm_sq": j0_sq})


def gronwall_check(result: SimulationResult) -> Report:
    cert = cara_ode.gronwall_certificate(result.problem)
    y = result.extras["fine_states"]
    worst = float(np.max(np.linalg.norm(y, axis=1)))
    slack = 1e-10 * max(1.0, worst)
    return Report("Gronwall certificate margin", cert - worst, 0.0, worst <= cert + slack,
                  {"certificate": cert, "max_norm": worst})


def contraction_check(resA: SimulationResult, resB: SimulationResult, tol: float = 1e-8) -> Report:
    if resA.basis.m != resB.basis.m:
        raise ComparabilityError("runs use different mode counts")
    if resA.times.shape != resB.times.shape or not np.allclose(resA.times, resB.times, rtol=0, atol=1e-12):
        raise ComparabilityError("runs use different output times")
    if not (np.array_equal(resA.basis.C, resB.basis.C)
            and np.array_equal(resA.material.eps_values, resB.material.eps_values)
            and np.array_equal(resA.material.mu_values, resB.material.mu_values)):
        raise ComparabilityError("runs use different bases or materials")
    if resA.config is not None and resB.config is not None and resA.config.ohm != resB.config.ohm:
        raise ComparabilityError("runs use different Ohm laws")
    d = np.sum((resA.a - resB.a) ** 2, axis=1) + np.sum((resA.b - resB.b) ** 2, axis=1)
    excess = float(np.max(d - d[0]))
    return Report("contraction excess", excess, tol, excess <= tol,
                  {"d0": float(d[0]), "d_max": float(d.max()), "monotone_law": resA.law.monotone,
                   "d": d})


def poynting_boundary(result: SimulationResult, points=None, tol: float = 1e-12) -> Report:
    """Largest ``|e h|`` at the given points (default: both ends) over snapshots."""
    if points is None:
        vals = [np.abs(f) for f in result.poynting]
    else:
        pts = np.asarray(points, dtype=float)
        phi = result.basis.evaluate(pts, "e")
        psi = result.basis.evaluate(pts, "h")
        vals = [np.abs((s.a @ phi) * (s.b @ psi)) for s in result.snapshots]
    worst = float(max((float(np.max(v)) for v in vals), default=0.0))
    return Report("Poynting boundary flux", worst, tol, worst <= tol)


def field_energy_report(result: SimulationResult, tol: float = 1e-10) -> Report:
    return Report("field-space energy cross-check", result.field_energy_defect, tol,
                  result.field_energy_defect <= tol)


def energy_rate_defect(result: SimulationResult) -> float:
    """Finite-difference ``dE/dt`` against the trapezoid mean of ``-(j, e)``."""
    t, E, d = result.fine_times, result.fine_E, result.fine_dissipation
    rate = np.diff(E) / np.diff(t)
    return float(np.max(np.abs(rate + 0.5 * (d[:-1] + d[1:]))))


def dissipative_law(law: OhmLaw) -> bool:
    return not law.has_source() and (law.kind in ("zero", "linear", "saturating")
                                     or (law.kind == "table" and law.monotone))


def standard_reports(result: SimulationResult, energy_tol: float = 1e-8) -> list:
    reports = [
        energy_report(result, energy_tol),
        apriori_check(result),
        poynting_boundary(result),
        field_energy_report(result),
        gronwall_check(result),
    ]
    if dissipative_law(result.law):
        reports.append(energy_inequality_check(result))
    return reports
