"""Fixed-step integration of Caratheodory initial-value problems.

Right-hand sides are measurable in ``t`` and continuous in ``y`` with linear
growth ``|f(t, y)| <= A(t) + C0 |y|``. The integrator follows the existence
proof for such problems: it integrates the truncated field ``f_r`` that
freezes ``f`` outside the ball ``|y - y0| <= r``, with ``r`` taken from the
Gronwall estimate, and then certifies afterwards that the truncation was never
active so the computed trajectory solves the original problem.

Steps are split at the declared discontinuities of ``f`` in ``t``, and every
stage is evaluated strictly inside its sub-step, so piecewise-constant time
dependence is integrated without loss of order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    GrowthCertificateError,
    StiffnessError,
)

RADIUS_MARGIN = 1e-3


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous step function; ``edges[0] == 0`` and the last value
    holds to infinity."""

    edges: tuple
    values: tuple

    def __post_init__(self):
        if len(self.edges) != len(self.values) or not self.edges:
            raise ConfigurationError("edges and values must have equal, non-zero length")
        if self.edges[0] != 0.0 or any(a >= b for a, b in zip(self.edges, self.edges[1:])):
            raise ConfigurationError("edges must start at 0 and increase")
        if any(v < 0 for v in self.values):
            raise ConfigurationError("growth majorant must be non-negative")

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls((0.0,), (float(value),))

    def __call__(self, t: float) -> float:
        i = int(np.searchsorted(self.edges, t, side="right")) - 1
        return self.values[max(i, 0)]

    def integral(self, a: float, b: float) -> float:
        ends = list(self.edges[1:]) + [np.inf]
        total = 0.0
        for lo, hi, v in zip(self.edges, ends, self.values):
            lo, hi = max(lo, a), min(hi, b)
            if hi > lo:
                total += v * (hi - lo)
        return total

    @property
    def breakpoints(self) -> tuple:
        return tuple(self.edges[1:])


@dataclass(frozen=True, eq=False)
class OdeProblem:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    y0: np.ndarray
    T: float
    A: PiecewiseConstant
    C0: float
    breakpoints: tuple = ()

    def __post_init__(self):
        y0 = np.atleast_1d(np.array(self.y0, dtype=float))
        object.__setattr__(self, "y0", y0)
        if not self.T > 0:
            raise DomainError(f"horizon must be positive, got {self.T}")
        if self.C0 < 0:
            raise DomainError("C0 must be non-negative")

    @property
    def dim(self) -> int:
        return self.y0.size

    def all_breakpoints(self):
        pts = set(self.A.breakpoints) | set(self.breakpoints)
        return sorted(p for p in pts if 0.0 < p < self.T)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    steps: int
    clamp_activated: bool
    radius: float
    max_deviation: float


def gronwall_bound(c1: float, c2: float, t: float) -> float:
    """``c1 (1 + c2 t exp(c2 t))``."""
    if c1 < 0 or c2 < 0 or t < 0:
        raise DomainError("Gronwall constants and time must be non-negative")
    if c1 == 0.0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(c1 * (1.0 + c2 * t * np.exp(c2 * t)))


def truncation_radius(problem: OdeProblem) -> float:
    C0, T = problem.C0, problem.T
    mass = problem.A.integral(0.0, T) + C0 * np.linalg.norm(problem.y0) * T
    if mass == 0.0:
        return 0.0
    with np.errstate(over="ignore"):
        return float((1.0 + C0 * T * np.exp(C0 * T)) * mass * (1.0 + RADIUS_MARGIN))


class ClampedRHS:
    """``f_r``: ``f`` inside the ball of radius ``r`` around ``y0``, and ``f``
    at the radial projection onto the sphere outside it."""

    def __init__(self, problem: OdeProblem, r: float):
        if r < 0:
            raise DomainError("truncation radius must be non-negative")
        self.f = problem.rhs
        self.y0 = problem.y0
        self.r = r
        self.activated = False

    def __call__(self, t, xi):
        d = xi - self.y0
        dist = np.sqrt(np.dot(d, d))
        if dist <= self.r:
            return self.f(t, xi)
        self.activated = True
        return self.f(t, self.y0 + self.r * d / dist)


def clamp_rhs(problem: OdeProblem, r: float) -> ClampedRHS:
    return ClampedRHS(problem, r)


def _rk4_step(f, ta, tb, y):
    h = tb - ta
    # stages at the sub-step ends are nudged inside (ta, tb)
    t0 = np.nextafter(ta, tb)
    t1 = np.nextafter(tb, ta)
    tm = ta + 0.5 * h
    k1 = f(t0, y)
    k2 = f(tm, y + 0.5 * h * k1)
    k3 = f(tm, y + 0.5 * h * k2)
    k4 = f(t1, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_step(f, ta, tb, y, maxiter=50, tol=1e-12):
    h = tb - ta
    tm = ta + 0.5 * h
    y_new = y + h * f(tm, y)
    for _ in range(maxiter):
        y_next = y + h * f(tm, 0.5 * (y + y_new))
        if not np.all(np.isfinite(y_next)):
            break
        delta = np.max(np.abs(y_next - y_new))
        y_new = y_next
        if delta <= tol * (1.0 + np.max(np.abs(y_new))):
            return y_new
    raise StiffnessError(
        f"implicit midpoint iteration did not converge at t={ta:.6g}; reduce dt"
    )


SCHEMES = {"rk4": _rk4_step, "midpoint-implicit": _midpoint_step}


def step_count(T: float, dt: float) -> int:
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ConfigurationError(f"dt={dt} does not divide T={T}")
    return n


def integrate(problem: OdeProblem, scheme: str = "rk4", dt: float = 1e-3,
              stride: int = 1) -> Trajectory:
    """Integrate ``problem`` on a uniform grid, returning every ``stride``-th
    state (the final time is always included)."""
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    step = SCHEMES[scheme]
    T = problem.T
    n = step_count(T, dt)
    grid = T * np.arange(n + 1) / n
    r = truncation_radius(problem)
    f = ClampedRHS(problem, r)
    breaks = problem.all_breakpoints()

    keep = list(range(0, n + 1, stride))
    if keep[-1] != n:
        keep.append(n)
    keep_set = set(keep)
    out = np.empty((len(keep), problem.dim))
    out[0] = problem.y0
    j = 1
    y = problem.y0.copy()
    max_dev = 0.0
    bi = 0
    snap = 1e-12 * T
    for i in range(n):
        ta, tb = grid[i], grid[i + 1]
        while bi < len(breaks) and breaks[bi] <= ta + snap:
            bi += 1
        t = ta
        y_prev = y
        while bi < len(breaks) and breaks[bi] < tb - snap:
            y = step(f, t, breaks[bi], y)
            t = breaks[bi]
            bi += 1
        y = step(f, t, tb, y)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(
                f"non-finite state after t={ta:.6g}", last_time=ta, last_state=y_prev
            )
        max_dev = max(max_dev, float(np.linalg.norm(y - problem.y0)))
        if i + 1 in keep_set:
            out[j] = y
            j += 1
    if f.activated or max_dev > r:
        raise GrowthCertificateError(
            f"state left the certified ball (max |y - y0| = {max_dev:.6g}, r = {r:.6g}); "
            "declared growth data does not bound the right-hand side"
        )
    return Trajectory(grid[keep], out, n, f.activated, r, max_dev)


def residual_check(problem: OdeProblem, traj: Trajectory) -> float:
    """``max_t |y(t) - y0 - int_0^t f(s, y(s)) ds|`` with cumulative Simpson."""
    fv = np.array([problem.rhs(t, y) for t, y in zip(traj.times, traj.states)])
    integral = cumulative_simpson(fv, x=traj.times, axis=0, initial=0.0)
    res = traj.states - problem.y0 - integral
    return float(np.max(np.linalg.norm(res, axis=1)))


def gronwall_certificate(problem: OdeProblem) -> float:
    """Upper bound for ``max_t |y(t)|`` implied by the growth data."""
    c1 = float(np.linalg.norm(problem.y0)) + problem.A.integral(0.0, problem.T)
    return gronwall_bound(c1, problem.C0, problem.T)
