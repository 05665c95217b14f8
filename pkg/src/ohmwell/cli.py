"""Command-line entry point: ``ohmwell <subcommand> ...``.

Exit codes: 0 when everything ran and every enabled check passed, 2 when a
diagnostic failed, 1 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import __version__, cara_ode, galerkin, materials, steklov
from .config import parse_config
from .errors import (
    DivergenceError,
    ExtrapolationError,
    GrowthCertificateError,
    OhmwellError,
    StiffnessError,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
RUNTIME_FAILURES = (GrowthCertificateError, DivergenceError, StiffnessError, ExtrapolationError)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    wall_time: float
    passed: bool
    reports: list
    seed: int | None = None

    def to_json(self) -> str:
        # wall time varies between identical runs; keep it out of the file
        d = asdict(self)
        del d["wall_time"]
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _report_dict(r: galerkin.Report) -> dict:
    return {"name": r.name, "value": float(r.value), "threshold": float(r.threshold),
            "passed": bool(r.passed)}


def snapshot_name(t: float) -> str:
    return f"{t:.10f}.csv"


def write_results(result: galerkin.SimulationResult, directory, reports=None) -> RunManifest:
    """Write energy.csv, coeffs.csv, snapshots/*.csv and manifest.json."""
    out = Path(directory)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    led = result.ledger
    _write_csv(out / "energy.csv", ["t", "E", "D", "residual"],
               zip(led.times, led.E, led.D, led.residual))
    m = result.basis.m
    header = ["t"] + [f"a{k}" for k in range(1, m + 1)] + [f"b{k}" for k in range(1, m + 1)]
    _write_csv(out / "coeffs.csv", header,
               (np.concatenate([[t], a, b]) for t, a, b in zip(result.times, result.a, result.b)))
    for snap in result.snapshots:
        _write_csv(out / "snapshots" / snapshot_name(snap.t), ["x", "e", "h"],
                   zip(snap.x, snap.e, snap.h))
    if reports is None:
        reports = galerkin.standard_reports(result)
    manifest = RunManifest(
        config_hash=result.config.hash() if result.config is not None else "",
        tool_version=__version__,
        wall_time=result.wall_time,
        passed=all(r.passed for r in reports),
        reports=[_report_dict(r) for r in reports],
    )
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest


def _print_reports(reports):
    for r in reports:
        print(r.line())


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("OHMWELL_THREADS", "2")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    config = parse_config(args.config)
    out = args.out or config.out_dir
    result = galerkin.run(config)
    reports = galerkin.standard_reports(result)
    manifest = write_results(result, out, reports)
    print(f"ohmwell {__version__}: simulated m={config.modes}, T={config.T}, dt={config.dt}"
          f" in {result.wall_time:.3f} s -> {out}")
    _print_reports(reports)
    return EXIT_OK if manifest.passed else EXIT_FAILED


def cmd_verify_energy(args) -> int:
    config = parse_config(args.config)
    result = galerkin.run(config)
    reports = [galerkin.energy_report(result, args.tol)]
    if galerkin.dissipative_law(result.law):
        reports.append(galerkin.energy_inequality_check(result))
    print(f"energy residual max_t |E + D - E(0)| = {galerkin.energy_residual(result):.6e}")
    _print_reports(reports)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_compare(args) -> int:
    configs = [parse_config(args.config_a), parse_config(args.config_b)]
    with ThreadPoolExecutor(max_workers=min(2, _threads())) as pool:
        res_a, res_b = pool.map(galerkin.run, configs)
    report = galerkin.contraction_check(res_a, res_b, args.tol)
    d = report.detail
    print(f"d(0) = {d['d0']:.6e}, max_t d(t) = {d['d_max']:.6e}, "
          f"monotone law claimed: {d['monotone_law']}")
    print(report.line())
    if not report.passed:
        print("contraction violated: solution differences grew")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_ohm_check(args) -> int:
    config = parse_config(args.config)
    law = materials.build_ohm_law(config.ohm, config.L)
    rng = np.random.default_rng(args.seed)
    max_norm = float(law.table_xi[-1]) if law.kind == "table" else 1e3
    samples = materials.random_samples(rng, args.samples, config.L, config.T, max_norm)
    pairs = materials.random_pairs(rng, args.samples, config.L, config.T, max_norm)
    growth = materials.check_growth(law, samples)
    mono = materials.check_monotonicity(law, pairs)
    reports = [
        galerkin.Report("growth ratio max |j1|/|xi|", growth.max_ratio, law.c1, growth.passed),
        galerkin.Report("monotonicity min product", mono.min_product, -materials.TOL, mono.passed),
    ]
    print(f"law={law.kind} sigma0={law.sigma0} c1={law.c1} samples={args.samples} seed={args.seed}")
    _print_reports(reports)
    passed = all(r.passed for r in reports)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(config.hash(), __version__, 0.0, passed,
                               [_report_dict(r) for r in reports], seed=args.seed)
        (Path(args.out) / "manifest.json").write_text(manifest.to_json())
    return EXIT_OK if passed else EXIT_FAILED


def read_series(path) -> steklov.TimeSeries:
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    names = data.dtype.names
    if not names or names[0] != "t" or len(names) < 2:
        raise OhmwellError(f"{path}: expected columns t, v1, ..., vn")
    t = np.asarray(data["t"], dtype=float)
    vals = np.column_stack([data[n] for n in names[1:]])
    if vals.shape[1] == 1:
        vals = vals[:, 0]
    if t.size < 3 or t[0] != 0.0:
        raise OhmwellError(f"{path}: series must start at t=0 with >= 3 samples")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if np.max(np.abs(np.diff(t) - dt)) > 1e-9 * max(dt, 1.0):
        raise OhmwellError(f"{path}: sample times must be uniform")
    return steklov.TimeSeries(float(t[-1]), dt, vals)


def default_bump(series: steklov.TimeSeries, lam: float) -> steklov.TimeSeries:
    """Smooth test function vanishing within one window of both ends."""
    t = series.times
    a, b = lam * 1.5, series.T - lam * 1.5
    alpha = np.zeros_like(t)
    inside = (t > a) & (t < b)
    s = (t[inside] - a) / (b - a)
    alpha[inside] = np.sin(np.pi * s) ** 2
    return steklov.TimeSeries(series.T, series.dt, alpha)


def cmd_steklov_check(args) -> int:
    series = read_series(args.series)
    lam = args.lam
    avg = steklov.steklov(series, lam, args.direction)
    deriv = steklov.check_derivative_identity(series, lam)
    reports = [galerkin.Report("derivative identity", deriv.discrepancy, deriv.tol, deriv.passed)]
    if 3 * lam < series.T:
        adj = steklov.check_adjoint_identity(series, default_bump(series, lam), lam)
        reports.append(galerkin.Report("adjoint identity", adj.discrepancy, adj.tol, adj.passed))
    lams = [lam]
    while len(lams) < 4:
        nxt = lams[-1] / 2
        k = nxt / series.dt
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            break
        lams.append(nxt)
    if lam < series.T:
        print("lambda, L2 error, observed order")
        for row in steklov.convergence_study(series, lams, args.direction):
            order = "-" if row.order is None else f"{row.order:.3f}"
            print(f"{row.lam:.6g}, {row.error:.6e}, {order}")
    _print_reports(reports)
    if args.out:
        vals = avg.values if avg.values.ndim > 1 else avg.values[:, None]
        header = ["t"] + [f"v{i}" for i in range(1, vals.shape[1] + 1)]
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        _write_csv(Path(args.out), header, (np.concatenate([[t], v]) for t, v in zip(avg.times, vals)))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def demo_problem(name: str):
    """Named test problems with closed-form solutions: (problem, exact(t), dt)."""
    if name == "exp":
        p = cara_ode.OdeProblem(lambda t, y: y, [1.0], 1.0, cara_ode.PiecewiseConstant.constant(0.0), 1.0)
        return p, lambda t: np.array([np.exp(t)]), 1e-3
    if name == "square-wave":
        A = cara_ode.PiecewiseConstant((0.0, 0.5), (1.0, 0.0))
        p = cara_ode.OdeProblem(lambda t, y: np.array([A(t)]), [0.0], 1.0, A, 0.0)
        return p, lambda t: np.array([min(t, 0.5)]), 1e-3
    if name == "zero":
        p = cara_ode.OdeProblem(lambda t, y: np.zeros_like(y), [1.0], 1.0,
                                cara_ode.PiecewiseConstant.constant(0.0), 0.0)
        return p, lambda t: np.array([1.0]), 1e-3
    if name == "oscillator":
        p = cara_ode.OdeProblem(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0], 2 * np.pi,
                                cara_ode.PiecewiseConstant.constant(0.0), 1.0)
        return p, lambda t: np.array([np.cos(t), -np.sin(t)]), 2 * np.pi / 1000
    if name == "forced":
        # y' = A(t) - y with A = 1 on [0, 1/2), 0 afterwards
        A = cara_ode.PiecewiseConstant((0.0, 0.5), (1.0, 0.0))
        p = cara_ode.OdeProblem(lambda t, y: A(t) - y, [0.0], 1.0, A, 1.0)

        def exact(t):
            if t <= 0.5:
                return np.array([1 - np.exp(-t)])
            return np.array([(1 - np.exp(-0.5)) * np.exp(-(t - 0.5))])
        return p, exact, 1e-3
    raise OhmwellError(f"unknown demo problem {name!r}")


DEMO_PROBLEMS = ("exp", "square-wave", "zero", "oscillator", "forced")


def cmd_ode_demo(args) -> int:
    problem, exact, dt = demo_problem(args.problem)
    dt = args.dt or dt
    traj = cara_ode.integrate(problem, args.scheme, dt)
    err = float(np.max([np.linalg.norm(y - exact(t)) for t, y in zip(traj.times, traj.states)]))
    res = cara_ode.residual_check(problem, traj)
    cert = cara_ode.gronwall_certificate(problem)
    worst = float(np.max(np.linalg.norm(traj.states, axis=1)))
    print(f"problem={args.problem} scheme={args.scheme} dt={dt} steps={traj.steps}")
    print(f"y(T) = {traj.states[-1].tolist()}, radius r = {traj.radius:.6g}, "
          f"clamp activated: {traj.clamp_activated}")
    reports = [
        galerkin.Report("max error vs exact", err, args.tol, err <= args.tol),
        galerkin.Report("Gronwall certificate margin", cert - worst, 0.0, worst <= cert * (1 + 1e-12)),
    ]
    print(f"integral-equation residual = {res:.6e}")
    _print_reports(reports)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ohmwell", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a configuration and write CSV results")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify-energy", help="check the energy balance of a run")
    s.add_argument("--config", required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_verify_energy)

    s = sub.add_parser("compare", help="contraction check between two runs")
    s.add_argument("--config-a", required=True)
    s.add_argument("--config-b", required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("ohm-check", help="sampled growth and monotonicity checks")
    s.add_argument("--config", required=True)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ohm_check)

    s = sub.add_parser("steklov-check", help="Steklov identities for a CSV time series")
    s.add_argument("--series", required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--direction", choices=("fwd", "bwd"), default="fwd")
    s.add_argument("--out")
    s.set_defaults(func=cmd_steklov_check)

    s = sub.add_parser("ode-demo", help="integrate a named test problem")
    s.add_argument("--problem", required=True, choices=DEMO_PROBLEMS)
    s.add_argument("--scheme", choices=tuple(cara_ode.SCHEMES), default="rk4")
    s.add_argument("--dt", type=float)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_ode_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except RUNTIME_FAILURES as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (OhmwellError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
