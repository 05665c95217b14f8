"""Strict JSON experiment configuration.

Unknown keys are rejected and every error names the offending key path and,
where it can be located, its line in the source text.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .basis import default_panels
from .errors import ConfigParseError

SCHEMES = ("rk4", "midpoint-implicit")


@dataclass(frozen=True)
class SimulationConfig:
    L: float
    material: dict
    ohm: dict
    modes: int
    q: int
    panels: int
    T: float
    dt: float
    scheme: str = "rk4"
    output_stride: int = 10
    e0: object = "zero"
    h0: object = "zero"
    out_dir: str = "out"
    snapshots: tuple = ()
    formats: tuple = ("csv",)

    def to_dict(self) -> dict:
        return {
            "domain": {"L": self.L},
            "material": _thaw(self.material),
            "ohm": _thaw(self.ohm),
            "modes": self.modes,
            "quadrature": {"q": self.q, "panels": self.panels},
            "time": {"T": self.T, "dt": self.dt, "scheme": self.scheme,
                     "output_stride": self.output_stride},
            "initial": {"e0": _thaw(self.e0), "h0": _thaw(self.h0)},
            "outputs": {"dir": self.out_dir, "snapshots": list(self.snapshots),
                        "formats": list(self.formats)},
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_updates(self, **changes) -> "SimulationConfig":
        d = {**self.__dict__, **changes}
        return SimulationConfig(**d)


def _thaw(v):
    if isinstance(v, FrozenDict):
        return {k: _thaw(x) for k, x in v.items()}
    if isinstance(v, tuple):
        return [_thaw(x) for x in v]
    return v


class FrozenDict(dict):
    """Hashable, read-only dict used for nested config sections."""

    def _ro(self, *a, **k):
        raise TypeError("config sections are read-only")

    __setitem__ = __delitem__ = update = pop = popitem = clear = setdefault = _ro

    def __hash__(self):
        return hash(json.dumps(_thaw(self), sort_keys=True))


def _freeze(v):
    if isinstance(v, dict):
        return FrozenDict({k: _freeze(x) for k, x in v.items()})
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


class _Validator:
    def __init__(self, text: str | None):
        self.text = text or ""

    def line_of(self, path):
        if not self.text:
            return None
        pos = 0
        found = None
        for key in path:
            if isinstance(key, int):
                continue
            idx = self.text.find(f'"{key}"', pos)
            if idx < 0:
                break
            pos = idx
            found = idx
        if found is None:
            return None
        return self.text.count("\n", 0, found) + 1

    def fail(self, path, msg):
        dotted = ".".join(str(p) for p in path)
        raise ConfigParseError(msg, dotted, self.line_of(path))

    def obj(self, v, path, allowed, required=()):
        if not isinstance(v, dict):
            self.fail(path, f"expected an object, got {type(v).__name__}")
        for k in v:
            if k not in allowed:
                self.fail(list(path) + [k], f"unknown key {k!r}")
        for k in required:
            if k not in v:
                self.fail(list(path) + [k], "missing required key")
        return v

    def number(self, v, path, positive=False, nonneg=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {type(v).__name__}")
        v = float(v)
        if v != v or v in (float("inf"), float("-inf")):
            self.fail(path, "must be finite")
        if positive and not v > 0:
            self.fail(path, f"must be > 0, got {v}")
        if nonneg and v < 0:
            self.fail(path, f"must be >= 0, got {v}")
        return v

    def integer(self, v, path, minimum=None):
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(path, f"expected an integer, got {type(v).__name__}")
        if minimum is not None and v < minimum:
            self.fail(path, f"must be >= {minimum}, got {v}")
        return v

    def string(self, v, path, choices=None):
        if not isinstance(v, str):
            self.fail(path, f"expected a string, got {type(v).__name__}")
        if choices is not None and v not in choices:
            self.fail(path, f"must be one of {list(choices)}, got {v!r}")
        return v

    def numbers(self, v, path, min_len=1, **kw):
        if not isinstance(v, list) or len(v) < min_len:
            self.fail(path, f"expected a list of at least {min_len} numbers")
        return [self.number(x, list(path) + [i], **kw) for i, x in enumerate(v)]


def _material(val: _Validator, v):
    p = ["material"]
    val.obj(v, p, ("kind", "eps", "mu", "breaks", "x", "upper_bound"), ("kind",))
    kind = val.string(v["kind"], p + ["kind"], ("constant", "piecewise", "table"))
    out = {"kind": kind}
    if "upper_bound" in v:
        out["upper_bound"] = val.number(v["upper_bound"], p + ["upper_bound"], positive=True)
    if kind == "constant":
        val.obj(v, p, ("kind", "eps", "mu", "upper_bound"))
        out["eps"] = val.number(v.get("eps", 1.0), p + ["eps"])
        out["mu"] = val.number(v.get("mu", 1.0), p + ["mu"])
    elif kind == "piecewise":
        val.obj(v, p, ("kind", "eps", "mu", "breaks", "upper_bound"), ("eps", "mu", "breaks"))
        out["breaks"] = val.numbers(v["breaks"], p + ["breaks"], min_len=0)
        out["eps"] = val.numbers(v["eps"], p + ["eps"])
        out["mu"] = val.numbers(v["mu"], p + ["mu"])
        n = len(out["breaks"]) + 1
        if len(out["eps"]) != n or len(out["mu"]) != n:
            val.fail(p, "piecewise material needs len(breaks) + 1 values of eps and mu")
    else:
        val.obj(v, p, ("kind", "eps", "mu", "x", "upper_bound"), ("x", "eps", "mu"))
        for k in ("x", "eps", "mu"):
            out[k] = val.numbers(v[k], p + [k], min_len=2)
        if not len(out["x"]) == len(out["eps"]) == len(out["mu"]):
            val.fail(p, "material table columns must have equal length")
    return out


def _ohm(val: _Validator, v):
    p = ["ohm"]
    val.obj(v, p, ("kind", "sigma0", "c1", "table", "j0"), ("kind",))
    kind = val.string(v["kind"], p + ["kind"], ("zero", "linear", "saturating", "table"))
    out = {"kind": kind}
    if kind in ("linear", "saturating"):
        out["sigma0"] = val.number(v.get("sigma0", 1.0), p + ["sigma0"], nonneg=True)
    elif "sigma0" in v:
        out["sigma0"] = val.number(v["sigma0"], p + ["sigma0"], nonneg=True)
    if "c1" in v:
        out["c1"] = val.number(v["c1"], p + ["c1"], positive=True)
    if kind == "table":
        if "table" not in v:
            val.fail(p + ["table"], "missing required key")
        tp = p + ["table"]
        val.obj(v["table"], tp, ("xi", "j"), ("xi", "j"))
        xi = val.numbers(v["table"]["xi"], tp + ["xi"], min_len=2, nonneg=True)
        jj = val.numbers(v["table"]["j"], tp + ["j"], min_len=2)
        if len(xi) != len(jj):
            val.fail(tp, "table columns xi and j must have equal length")
        out["table"] = {"xi": xi, "j": jj}
    elif "table" in v:
        val.fail(p + ["table"], "only allowed for kind 'table'")
    src = v.get("j0", {"kind": "none"})
    sp = p + ["j0"]
    val.obj(src, sp, ("kind", "times", "amplitudes", "shape"), ("kind",))
    skind = val.string(src["kind"], sp + ["kind"], ("none", "piecewise"))
    if skind == "none":
        val.obj(src, sp, ("kind",))
        out["j0"] = {"kind": "none"}
    else:
        val.obj(src, sp, ("kind", "times", "amplitudes", "shape"), ("times", "amplitudes"))
        times = val.numbers(src["times"], sp + ["times"], nonneg=True)
        amps = val.numbers(src["amplitudes"], sp + ["amplitudes"])
        if len(times) != len(amps):
            val.fail(sp, "times and amplitudes must have equal length")
        if times[0] != 0.0 or any(a >= b for a, b in zip(times, times[1:])):
            val.fail(sp + ["times"], "must start at 0 and increase strictly")
        shape = val.string(src.get("shape", "const"), sp + ["shape"])
        if shape not in ("const", "constant"):
            name, _, k = shape.partition(":")
            if name not in ("sin", "cos") or not k.isdigit():
                val.fail(sp + ["shape"], "expected 'const', 'sin:k' or 'cos:k'")
        out["j0"] = {"kind": "piecewise", "times": times, "amplitudes": amps, "shape": shape}
    return out


def _initial_field(val: _Validator, v, path):
    if isinstance(v, str):
        if v == "zero":
            return v
        name, _, k = v.partition(":")
        if name == "mode" and k.isdigit() and int(k) >= 1:
            return v
        val.fail(path, f"expected 'zero' or 'mode:k', got {v!r}")
    val.obj(v, path, ("modes", "x", "v"))
    if "modes" in v:
        val.obj(v, path, ("modes",))
        return {"modes": val.numbers(v["modes"], path + ["modes"])}
    val.obj(v, path, ("x", "v"), ("x", "v"))
    x = val.numbers(v["x"], path + ["x"], min_len=2)
    y = val.numbers(v["v"], path + ["v"], min_len=2)
    if len(x) != len(y):
        val.fail(path, "x and v must have equal length")
    return {"x": x, "v": y}


def config_from_dict(raw: dict, text: str | None = None) -> SimulationConfig:
    val = _Validator(text)
    top = ("domain", "material", "ohm", "modes", "quadrature", "time", "initial", "outputs")
    val.obj(raw, [], top, ("domain", "material", "ohm", "modes", "time", "initial"))

    val.obj(raw["domain"], ["domain"], ("L",), ("L",))
    L = val.number(raw["domain"]["L"], ["domain", "L"], positive=True)
    material = _material(val, raw["material"])
    ohm = _ohm(val, raw["ohm"])
    m = val.integer(raw["modes"], ["modes"], minimum=1)

    quad = val.obj(raw.get("quadrature", {}), ["quadrature"], ("q", "panels"))
    q = val.integer(quad.get("q", 8), ["quadrature", "q"], minimum=2)
    if q > 16:
        val.fail(["quadrature", "q"], f"must be <= 16, got {q}")
    panels = val.integer(quad.get("panels", default_panels(m)), ["quadrature", "panels"], minimum=1)

    tp = ["time"]
    tsec = val.obj(raw["time"], tp, ("T", "dt", "scheme", "output_stride"), ("T", "dt"))
    T = val.number(tsec["T"], tp + ["T"], positive=True)
    dt = val.number(tsec["dt"], tp + ["dt"], positive=True)
    n = round(T / dt)
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        val.fail(tp + ["dt"], f"dt={dt} must divide T={T}")
    scheme = val.string(tsec.get("scheme", "rk4"), tp + ["scheme"], SCHEMES)
    stride = val.integer(tsec.get("output_stride", 10), tp + ["output_stride"], minimum=1)
    if ohm["j0"]["kind"] == "piecewise":
        for i, t in enumerate(ohm["j0"]["times"]):
            k = round(t / dt)
            if abs(k * dt - t) > 1e-9 * max(T, 1.0):
                val.fail(["ohm", "j0", "times", i], f"source switch time {t} is not a multiple of dt")

    ip = ["initial"]
    init = val.obj(raw["initial"], ip, ("e0", "h0"))
    e0 = _initial_field(val, init.get("e0", "zero"), ip + ["e0"])
    h0 = _initial_field(val, init.get("h0", "zero"), ip + ["h0"])

    op = ["outputs"]
    outs = val.obj(raw.get("outputs", {}), op, ("dir", "snapshots", "formats"))
    out_dir = val.string(outs.get("dir", "out"), op + ["dir"])
    snaps = outs.get("snapshots", [0.0, T])
    snaps = val.numbers(snaps, op + ["snapshots"], min_len=0)
    for i, s in enumerate(snaps):
        if s < 0 or s > T * (1 + 1e-12):
            val.fail(op + ["snapshots", i], f"snapshot time {s} outside [0, T]")
    fmts = outs.get("formats", ["csv"])
    if not isinstance(fmts, list):
        val.fail(op + ["formats"], "expected a list")
    fmts = [val.string(f, op + ["formats", i], ("csv",)) for i, f in enumerate(fmts)]

    return SimulationConfig(
        L=L, material=_freeze(material), ohm=_freeze(ohm), modes=m, q=q, panels=panels,
        T=T, dt=dt, scheme=scheme, output_stride=stride, e0=_freeze(e0), h0=_freeze(h0),
        out_dir=out_dir, snapshots=tuple(snaps), formats=tuple(fmts),
    )


def parse_config_text(text: str) -> SimulationConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, "", exc.lineno) from None
    return config_from_dict(raw, text)


def parse_config(path) -> SimulationConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text)


def serialize_config(config: SimulationConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
