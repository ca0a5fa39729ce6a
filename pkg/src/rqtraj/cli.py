"""Command-line front end.

    rqtraj trajectory --m0 1 --E 1.4142135623730951 --a 2 --mode both
    rqtraj nodes --m0 0 --E 3.141592653589793
    rqtraj validate all
    rqtraj forbidden --m0 1 --E 0.8
    rqtraj basis-dump --potential linear --potential-params 0.1 --domain 0,2

Exit codes: 0 success, 1 input error, 2 tolerance or numerical failure.
Precedence: built-in defaults < ``--config`` file (flat ``key = value``) < flags.
The effective configuration is echoed into every output.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .action import conjugate_momentum
from .analytic import (
    forbidden_segments,
    free_kinematics_closed,
    free_trajectory_closed,
    node_lattice,
    node_report,
    quadrature_counterpart,
)
from .dynamics import firqnl_residual, kinematics_along, node_guard_mask, trajectory_by_quadrature
from .errors import IntegrationFailure, RootBracketFailure, RQTrajError
from .kleingordon import basis_samples, kg_basis_free_allowed, kg_basis_free_forbidden, kg_basis_numeric
from .model import Microstate, ParticleSpec, Potential, UnitSystem
from .serialize import to_csv, to_json
from .validation import (
    DEFAULT_C_LADDER,
    DEFAULT_HBAR_LADDER,
    classical_limit_suite,
    firqnl_ode_crosscheck,
    nonrelativistic_limit_suite,
    rqshje_closure,
)

OUTPUT_DIR_ENV = "RQTRAJ_OUTPUT_DIR"
SUITES = ("classical-limit", "nonrel-limit", "ode-crosscheck", "rqshje")
# per-command (samples, guard) defaults
COMMAND_DEFAULTS = {"trajectory": (201, 1e-6), "forbidden": (50, 1e-3), "basis-dump": (201, None)}


def _floats(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def _pair(text):
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return vals


def _opt_float(text):
    return None if text in (None, "", "none", "None") else float(text)


# key -> (type, default)
SETTINGS = {
    "hbar": (float, 1.0),
    "c": (float, 1.0),
    "m0": (float, 1.0),
    "E": (float, math.sqrt(2.0)),
    "a": (float, 2.0),
    "b": (float, 0.0),
    "x0": (float, 0.0),
    "t0": (float, 0.0),
    "potential": (str, "free"),
    "potential_params": (_floats, ()),
    "domain": (lambda s: _pair(s) if s not in (None, "") else None, None),
    "step": (float, 1e-3),
    "t_start": (float, 0.0),
    "t_end": (_opt_float, None),
    "samples": (lambda s: None if s in (None, "", "none") else int(s), None),
    "mode": (str, "quadrature"),
    "guard": (_opt_float, None),
    "count": (int, 5),
    "ladder": (lambda s: _floats(s) or None, None),
    "T": (float, 1e-3),
    "x_start": (_opt_float, None),
    "x_end": (_opt_float, None),
    "format": (str, None),
    "tol_residual": (_opt_float, None),
    "tol_deviation": (float, 1e-7),
    "tol_degeneracy": (float, 1e-12),
    "tol_ode": (float, 1e-10),
}


CONFIG_ALIASES = {"potential.tag": "potential", "potential.params": "potential_params"}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1 (exit 2 is reserved for tolerance failures)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    s = argparse.SUPPRESS
    p = _Parser(add_help=False)
    g = p.add_argument_group("physics")
    g.add_argument("--config", default=s, help="flat key = value file; flags override it")
    for key in ("hbar", "c", "m0", "E", "a", "b", "x0", "t0"):
        g.add_argument(f"--{key}", default=s, help=f"default {SETTINGS[key][1]:.17g}")
    g.add_argument("--potential", default=s, choices=("free", "constant", "linear"))
    g.add_argument("--potential-params", dest="potential_params", default=s, help="comma-separated, e.g. slope,offset")
    g.add_argument("--domain", default=s, help="lo,hi of the numeric Klein-Gordon basis (non-free potentials)")
    g.add_argument("--step", default=s, help="RK4 step of the numeric basis")
    o = p.add_argument_group("output")
    o.add_argument("--out", default=s, help=f"output file (relative paths resolve under ${OUTPUT_DIR_ENV} if set); stdout if omitted")
    o.add_argument("--format", default=s, choices=("csv", "json"))
    o.add_argument("--sweep", default=s, help="KEY=v1,v2,...: one run per value, files suffixed .KEY=value")
    t = p.add_argument_group("tolerances")
    t.add_argument("--tol-residual", dest="tol_residual", default=s, help="max FIRQNL residual / E^4 (default 1e-8 free, 1e-5 numeric)")
    t.add_argument("--tol-deviation", dest="tol_deviation", default=s, help="max |x_quadrature - x_closed| (default 1e-7)")
    t.add_argument("--tol-degeneracy", dest="tol_degeneracy", default=s, help="degenerate-energy band (default 1e-12)")
    t.add_argument("--tol-ode", dest="tol_ode", default=s, help="ODE cross-check rtol (default 1e-10)")
    return p


def build_parser() -> argparse.ArgumentParser:
    s = argparse.SUPPRESS
    common = _common()
    parser = _Parser(prog="rqtraj", description="Relativistic quantum trajectories in one dimension.")
    parser.add_argument("--version", action="version", version=f"rqtraj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory", parents=[common], help="trajectory CSV/JSON")
    p.add_argument("--mode", default=s, choices=("quadrature", "closed", "both"))
    p.add_argument("--t-start", dest="t_start", default=s)
    p.add_argument("--t-end", dest="t_end", default=s, help="default: four node periods after t-start")
    p.add_argument("--samples", default=s)
    p.add_argument("--guard", default=s, help="node guard half-width as a fraction of dt (default 1e-6)")

    p = sub.add_parser("nodes", parents=[common], help="node lattice JSON")
    p.add_argument("--count", default=s)

    p = sub.add_parser("validate", parents=[common], help="run verification suites")
    p.add_argument("suite", help="one of " + ", ".join(SUITES + ("all",)))
    p.add_argument("--ladder", default=s, help="comma-separated hbar (classical-limit) or c (nonrel-limit) values")
    p.add_argument("--T", default=s, help="kinetic energy held fixed in nonrel-limit (default 1e-3)")

    p = sub.add_parser("forbidden", parents=[common], help="segmented forbidden-region trajectory")
    p.add_argument("--t-start", dest="t_start", default=s)
    p.add_argument("--t-end", dest="t_end", default=s, help="default: two half-periods after t-start")
    p.add_argument("--samples", default=s, help="samples per segment")
    p.add_argument("--guard", default=s, help="clearance at singular ends as a fraction of the half-period")

    p = sub.add_parser("basis-dump", parents=[common], help="Klein-Gordon basis samples")
    p.add_argument("--x-start", dest="x_start", default=s)
    p.add_argument("--x-end", dest="x_end", default=s)
    p.add_argument("--samples", default=s)
    return parser


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        key = CONFIG_ALIASES.get(key, key)
        if key not in SETTINGS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def resolve_config(ns: argparse.Namespace) -> dict:
    raw = {}
    if getattr(ns, "config", None):
        raw.update(read_config_file(ns.config))
    raw.update({k: v for k, v in vars(ns).items() if k in SETTINGS})
    cfg = {}
    for key, (conv, default) in SETTINGS.items():
        cfg[key] = conv(raw[key]) if key in raw else default
    for key in ("tol_residual", "tol_deviation", "tol_degeneracy", "tol_ode", "guard", "step"):
        if cfg[key] is not None and not cfg[key] > 0:
            raise ValueError(f"{key} must be positive")
    if cfg["samples"] is not None and cfg["samples"] < 2:
        raise ValueError("samples must be at least 2")
    if cfg["mode"] not in ("quadrature", "closed", "both"):
        raise ValueError(f"unknown mode {cfg['mode']!r}")
    cfg["command"] = ns.command
    samples, guard = COMMAND_DEFAULTS.get(ns.command, (201, None))
    if cfg["samples"] is None:
        cfg["samples"] = samples
    if cfg["guard"] is None:
        cfg["guard"] = guard
    if ns.command == "validate":
        cfg["suite"] = ns.suite
    return cfg


def _objects(cfg):
    u = UnitSystem(cfg["hbar"], cfg["c"])
    p = ParticleSpec(cfg["m0"], cfg["E"])
    ms = Microstate(cfg["a"], cfg["b"], cfg["x0"], cfg["t0"])
    pot = Potential.from_tag(cfg["potential"], cfg["potential_params"])
    return u, p, ms, pot


def _echo(cfg) -> dict:
    out = {}
    for k, v in sorted(cfg.items()):
        if isinstance(v, tuple):
            v = ",".join(format(x, ".17g") for x in v)
        out[k] = "none" if v is None else v
    return out


class ToleranceFailure(Exception):
    pass


def _numeric_basis(cfg, p, pot, u):
    if cfg["domain"] is None:
        raise ValueError("non-free potentials need --domain lo,hi for the numeric basis")
    return kg_basis_numeric(p, pot, u, cfg["domain"], cfg["step"])


def cmd_trajectory(cfg) -> tuple:
    u, p, ms, pot = _objects(cfg)
    mode = cfg["mode"]
    t_lo = cfg["t_start"]
    cols = {}
    if pot.tag == "free":
        lat = node_lattice(p, u, ms, cfg["tol_degeneracy"])
        t_hi = cfg["t_end"] if cfg["t_end"] is not None else t_lo + 4 * lat.dt
        if not t_hi > t_lo:
            raise ValueError("t_end must exceed t_start")
        nodes = lat.t(lat.indices_between(t_lo, t_hi))
        guard = cfg["guard"] * lat.dt
        basis, qms = quadrature_counterpart(p, ms, u, cfg["tol_degeneracy"])
        if mode == "closed":
            ts = np.linspace(t_lo, t_hi, cfg["samples"])
            ts = ts[node_guard_mask(ts, nodes, guard)]
            x, n = free_trajectory_closed(p, ms, u, ts, cfg["tol_degeneracy"])
            _, v, _ = free_kinematics_closed(p, ms, u, ts, cfg["tol_degeneracy"])
            P = conjugate_momentum(basis, qms, u, x)
            kin = kinematics_along(basis, qms, p, pot, u, x, cfg["tol_degeneracy"])
            res = firqnl_residual(kin, p, pot, u, x, cfg["tol_degeneracy"])
            cols = {"t": ts, "x": x, "v": v, "P": P, "branch": n, "firqnl_residual": res}
        else:
            tr = trajectory_by_quadrature(basis, qms, p, pot, u, (t_lo, t_hi), cfg["samples"], nodes, guard, deg_tol=cfg["tol_degeneracy"])
            cols = {"t": tr.t, "x": tr.x, "v": tr.v, "P": tr.P, "branch": tr.branch, "firqnl_residual": tr.firqnl_residual}
            if mode == "both":
                x_closed, _ = free_trajectory_closed(p, ms, u, tr.t, cfg["tol_degeneracy"])
                cols["x_closed"] = x_closed
                cols["deviation"] = np.abs(tr.x - x_closed)
        tol_res = cfg["tol_residual"] or 1e-8
    else:
        if mode != "quadrature":
            raise ValueError("closed forms exist only for the free potential; use --mode quadrature")
        basis = _numeric_basis(cfg, p, pot, u)
        t_hi = cfg["t_end"] if cfg["t_end"] is not None else t_lo + 1.0
        tr = trajectory_by_quadrature(basis, ms, p, pot, u, (t_lo, t_hi), cfg["samples"], deg_tol=cfg["tol_degeneracy"])
        cols = {"t": tr.t, "x": tr.x, "v": tr.v, "P": tr.P, "branch": tr.branch, "firqnl_residual": tr.firqnl_residual}
        tol_res = cfg["tol_residual"] or 1e-5
    summary = {"max_firqnl_over_E4": float(np.max(np.abs(cols["firqnl_residual"]))) / p.E**4}
    failures = []
    if summary["max_firqnl_over_E4"] > tol_res:
        failures.append(f"FIRQNL residual {summary['max_firqnl_over_E4']:.3g} > {tol_res:g}")
    if "deviation" in cols:
        summary["max_deviation"] = float(np.max(cols["deviation"]))
        if summary["max_deviation"] > cfg["tol_deviation"]:
            failures.append(f"deviation {summary['max_deviation']:.3g} > {cfg['tol_deviation']:g}")
    fmt = cfg["format"] or "csv"
    if fmt == "csv":
        header = {**_echo(cfg), **{f"result.{k}": v for k, v in summary.items()}}
        text = to_csv(list(cols), zip(*cols.values()), header)
    else:
        text = to_json({"config": _echo(cfg), "summary": summary, "columns": cols})
    return text, failures


def cmd_nodes(cfg) -> tuple:
    u, p, ms, _ = _objects(cfg)
    rep = node_report(p, u, ms, cfg["count"])
    if (cfg["format"] or "json") == "csv":
        header = {**_echo(cfg), "result.dt": rep["dt"], "result.dx": rep["dx"], "result.mean_velocity": rep["mean_velocity"]}
        return to_csv(["n", "t", "x"], ([d["n"], d["t"], d["x"]] for d in rep["nodes"]), header), []
    return to_json({"config": _echo(cfg), **rep}), []


def cmd_validate(cfg) -> tuple:
    suite = cfg["suite"]
    if suite not in SUITES + ("all",):
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    if suite == "all" and cfg["ladder"] is not None:
        raise ValueError("--ladder applies to a single ladder suite, not to 'all'")
    u, p, ms, pot = _objects(cfg)
    selected = SUITES if suite == "all" else (suite,)
    reports = []
    for name in selected:
        if name == "classical-limit":
            r = classical_limit_suite(p, ms, u, cfg["ladder"] or DEFAULT_HBAR_LADDER)
        elif name == "nonrel-limit":
            r = nonrelativistic_limit_suite(p.m0, cfg["T"], ms, u, cfg["ladder"] or DEFAULT_C_LADDER)
        elif name == "ode-crosscheck":
            r = firqnl_ode_crosscheck(p, ms, u, tol=cfg["tol_ode"])
        else:
            r = rqshje_closure(p, pot, u, domain=cfg["domain"], step=cfg["step"])
        reports.append(r.to_dict())
    failures = [f"suite {r['name']} failed" for r in reports if not r["pass"]]
    return to_json({"config": _echo(cfg), "reports": reports, "pass": not failures}), failures


def cmd_forbidden(cfg) -> tuple:
    u, p, ms, _ = _objects(cfg)
    if cfg["potential"] != "free":
        raise ValueError("forbidden-region closed forms need the free potential")
    from .analytic import _forbidden_scales

    _, omega = _forbidden_scales(p, u, cfg["tol_degeneracy"])
    half = math.pi / abs(omega)
    t_lo = cfg["t_start"]
    t_hi = cfg["t_end"] if cfg["t_end"] is not None else t_lo + 2 * half
    singular, segments = forbidden_segments(p, ms, u, t_lo, t_hi, cfg["samples"], cfg["guard"], cfg["tol_degeneracy"])
    if (cfg["format"] or "csv") == "csv":
        header = {**_echo(cfg), "singular_times": ";".join(f"{t:.17g}:{kind}" for t, kind in singular) or "none"}
        rows = ([i, t, x, v] for i, (ts, xs, vs) in enumerate(segments) for t, x, v in zip(ts, xs, vs))
        return to_csv(["segment", "t", "x", "v"], rows, header), []
    data = {
        "config": _echo(cfg),
        "singular_times": [{"t": t, "kind": kind} for t, kind in singular],
        "segments": [{"segment": i, "t": ts, "x": xs, "v": vs} for i, (ts, xs, vs) in enumerate(segments)],
    }
    return to_json(data), []


def cmd_basis_dump(cfg) -> tuple:
    u, p, ms, pot = _objects(cfg)
    if pot.tag == "free":
        if p.E > p.rest_energy(u):
            basis = kg_basis_free_allowed(p, u, cfg["tol_degeneracy"], origin=ms.x0)
            span = 2 * math.pi / basis.k
        else:
            basis = kg_basis_free_forbidden(p, u, cfg["tol_degeneracy"], origin=ms.x0)
            span = 2.0 / basis.kappa
        lo = cfg["x_start"] if cfg["x_start"] is not None else ms.x0
        hi = cfg["x_end"] if cfg["x_end"] is not None else lo + span
    else:
        basis = _numeric_basis(cfg, p, pot, u)
        lo = cfg["x_start"] if cfg["x_start"] is not None else cfg["domain"][0]
        hi = cfg["x_end"] if cfg["x_end"] is not None else cfg["domain"][1]
    xs = np.linspace(lo, hi, cfg["samples"])
    table = basis_samples(basis, xs)
    resid = basis.kg_residual(xs)
    names = ["x", "theta", "dtheta", "phi", "dphi", "wronskian", "kg_residual"]
    cols = {n: table[:, i] for i, n in enumerate(names[:-1])}
    cols["kg_residual"] = resid
    if (cfg["format"] or "csv") == "csv":
        return to_csv(names, zip(*cols.values()), {**_echo(cfg), "result.basis": type(basis).__name__}), []
    return to_json({"config": _echo(cfg), "basis": type(basis).__name__, "columns": cols}), []


COMMANDS = {
    "trajectory": cmd_trajectory,
    "nodes": cmd_nodes,
    "validate": cmd_validate,
    "forbidden": cmd_forbidden,
    "basis-dump": cmd_basis_dump,
}


def _out_path(out: str | None, sweep_suffix: str = "") -> Path | None:
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    if sweep_suffix:
        path = path.with_name(f"{path.stem}.{sweep_suffix}{path.suffix}")
    return path


def _run_one(ns, overrides: dict, suffix: str) -> int:
    for k, v in overrides.items():
        setattr(ns, k, v)
    cfg = resolve_config(ns)
    text, failures = COMMANDS[ns.command](cfg)
    path = _out_path(getattr(ns, "out", None), suffix)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    for f in failures:
        print(f"tolerance failure: {f}", file=sys.stderr)
    return 2 if failures else 0


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        sweep = getattr(ns, "sweep", None)
        if sweep is None:
            return _run_one(ns, {}, "")
        key, sep, values = sweep.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in SETTINGS:
            raise ValueError(f"bad --sweep {sweep!r}; expected KEY=v1,v2,...")
        if getattr(ns, "out", None) is None:
            raise ValueError("--sweep needs --out (one file per value)")
        vals = sorted(set(_floats(values)))
        code = 0
        for v in vals:
            code = max(code, _run_one(ns, {key: repr(v)}, f"{key}={v:.17g}"))
        return code
    except (IntegrationFailure, RootBracketFailure) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (RQTrajError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
