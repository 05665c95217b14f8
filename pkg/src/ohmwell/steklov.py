"""Steklov (sliding-window) time averages on uniform sample grids.

Samples are read as the piecewise-linear interpolant on ``[0, T]`` and the
function is extended by zero outside that interval, with a jump at the ends.
Windows are restricted to whole numbers of steps, so every window integral is
an exact trapezoid sum and the derivative and adjoint identities of the
averages hold as algebraic identities on the grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DomainError, PreconditionError


@dataclass(frozen=True, eq=False)
class TimeSeries:
    T: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        vals = np.array(self.values, dtype=float)
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * max(self.T, 1.0) or vals.shape[0] != n + 1:
            raise AlignmentError(
                f"expected T/dt + 1 = {n + 1} samples, got {vals.shape[0]}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, f, T: float, n: int) -> "TimeSeries":
        t = T * np.arange(n + 1) / n
        return cls(T, T / n, np.asarray(f(t), dtype=float))

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.T * np.arange(self.n + 1) / self.n


@dataclass(frozen=True, eq=False)
class AveragedSeries:
    source: TimeSeries
    lam: float
    direction: str
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.source.times


def window_steps(series: TimeSeries, lam: float) -> int:
    if not lam > 0:
        raise DomainError(f"averaging window must be positive, got {lam}")
    k = int(round(lam / series.dt))
    if k < 1 or abs(k * series.dt - lam) > 1e-9 * lam:
        raise AlignmentError(f"window {lam} is not a multiple of dt={series.dt}")
    return k


def _cell_integrals(series: TimeSeries):
    v = series.values
    return 0.5 * series.dt * (v[:-1] + v[1:])


def _window_sums(cells, k: int, direction: str, n: int):
    # forward: cells i .. i+k-1 ; backward: cells i-k .. i-1 ; cells outside [0, n) are zero
    pad = np.zeros((k,) + cells.shape[1:])
    padded = np.concatenate([pad, cells, pad])
    windows = np.lib.stride_tricks.sliding_window_view(padded, k, axis=0)
    sums = windows.sum(axis=-1)
    if direction in ("fwd", "forward"):
        return sums[k:k + n + 1]
    return sums[:n + 1]


def steklov(series: TimeSeries, lam: float, direction: str = "fwd") -> AveragedSeries:
    """Forward average ``(1/lam) int_t^{t+lam} f`` or backward average
    ``(1/lam) int_{t-lam}^t f`` at every sample instant."""
    k = window_steps(series, lam)
    cells = _cell_integrals(series)
    if direction not in ("fwd", "forward", "bwd", "backward"):
        raise ValueError(f"direction must be 'fwd' or 'bwd', got {direction!r}")
    # direct window sums (no running totals) keep rounding independent of n
    vals = _window_sums(cells, k, direction, series.n) / lam
    return AveragedSeries(series, float(lam), direction, vals)


@dataclass(frozen=True)
class IdentityReport:
    discrepancy: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tol


def check_derivative_identity(series: TimeSeries, lam: float, tol: float = 1e-12) -> IdentityReport:
    """Forward difference of the forward average against ``(f(t+lam) - f(t))/lam``.

    Both sides are cell averages over ``[t_i, t_{i+1}]``, taken on interior
    cells whose shifted copy stays inside ``[0, T]``.
    """
    k = window_steps(series, lam)
    n = series.n
    if k >= n:
        return IdentityReport(0.0, tol)
    avg = steklov(series, lam, "fwd").values
    lhs = (avg[1:n - k + 1] - avg[:n - k]) / series.dt
    mid = 0.5 * (series.values[:-1] + series.values[1:])
    rhs = (mid[k:] - mid[:n - k]) / lam
    return IdentityReport(float(np.max(np.abs(lhs - rhs), initial=0.0)), tol)


def trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def _pair(w, f, g):
    if f.ndim > 1:
        g = g[:, None]
    return float(np.sum(w.reshape((-1,) + (1,) * (f.ndim - 1)) * f * g))


def check_adjoint_identity(series: TimeSeries, alpha: TimeSeries, lam: float,
                           tol: float = 1e-12) -> IdentityReport:
    """Relative discrepancy in moving the average from ``f`` onto a test
    function ``alpha``: ``int f alpha_bwd = int f_fwd alpha`` and
    ``int f alpha_fwd = int f_bwd alpha``, both by trapezoid sums."""
    k = window_steps(series, lam)
    if alpha.values.shape[0] != series.values.shape[0] or alpha.values.ndim != 1:
        raise PreconditionError("alpha must be a scalar series on the same grid")
    n = series.n
    a = alpha.values
    if np.any(a[:k + 1] != 0.0) or np.any(a[n - k:] != 0.0):
        raise PreconditionError("alpha must vanish within one window of both endpoints")
    w = trapezoid_weights(n, series.dt)
    f = series.values
    worst = 0.0
    for inner, outer in (("bwd", "fwd"), ("fwd", "bwd")):
        lhs = _pair(w, f, steklov(alpha, lam, inner).values)
        rhs = _pair(w, steklov(series, lam, outer).values, a)
        scale = max(abs(lhs), abs(rhs))
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return IdentityReport(worst, tol)


def l2_norm(series_values, dt: float) -> float:
    v = np.asarray(series_values, dtype=float)
    w = trapezoid_weights(v.shape[0] - 1, dt)
    sq = v * v if v.ndim == 1 else np.sum(v * v, axis=1)
    return float(np.sqrt(np.dot(w, sq)))


@dataclass(frozen=True)
class ConvergenceRow:
    lam: float
    error: float
    order: float | None


def convergence_study(series: TimeSeries, lambdas, direction: str = "fwd"):
    """``||f_lam - f||_L2`` for each window, with observed orders between
    consecutive windows."""
    lambdas = [float(x) for x in lambdas]
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise DomainError("windows must be strictly decreasing")
    if lambdas and lambdas[0] >= series.T:
        raise DomainError("largest window must be shorter than T")
    errors = []
    for lam in lambdas:
        diff = steklov(series, lam, direction).values - series.values
        errors.append(l2_norm(diff, series.dt))
    rows = []
    for i, (lam, err) in enumerate(zip(lambdas, errors)):
        order = None
        if i > 0 and err > 0 and errors[i - 1] > 0:
            order = float(np.log(errors[i - 1] / err) / np.log(lambdas[i - 1] / lam))
        rows.append(ConvergenceRow(lam, err, order))
    return rows


def is_monotone_decreasing(rows) -> bool:
    return all(b.error < a.error for a, b in zip(rows, rows[1:]))
