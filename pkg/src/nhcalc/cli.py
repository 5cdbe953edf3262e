"""Command-line front end.

Every run is driven by a resolved configuration with sections ``[model]``,
``[task]`` and ``[run]``; it can come from ``--config`` and from flags, and
it is echoed to ``manifest.cfg`` in the output directory together with the
list of files written.  Feeding a manifest back as ``--config`` reproduces
the run (its ``[outputs]`` and ``[result]`` sections are ignored).

Exit codes: 0 success, 1 failed check, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import contextlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eigensystem import MODELS, biorthonormality_defect, export_system_csv, model_system, spectral_profile
from .fourier import export_coefficients_csv, forward, sobolev_norm
from .grid import GridFunction, norm
from .operators import EnsembleConfig, apply
from .symbols import X, SymbolSpec, _lambdify, parse_expression, sample
from .verify import FOURIER_KINDS, OPERATOR_KINDS, CheckSpec, stability_sweep

COMMANDS = ("model", "transform", "apply", "profile", "verify", "sweep", "solve")
SOLVE_KINDS = ("heat", "wave", "stationary")

MODEL_KEYS = {"name", "N", "n", "h"}
TASK_KEYS = {
    "kind", "check", "p", "q", "b", "s", "Q_m", "rho", "phi", "variant", "symbol", "form",
    "collar", "route", "N_list", "function", "p_list", "B", "A", "u0", "u1", "b_profile",
    "f", "T", "dt", "c", "picard_tol", "max_iter", "tol", "snapshot_every",
}
RUN_KEYS = {"seed", "count", "families", "band_limit", "out"}
IGNORED_SECTIONS = {"outputs", "result"}

TASK_DEFAULTS = {
    "transform": {"function": "cos(2*pi*x)", "variant": "L", "s": "1"},
    "apply": {"symbol": "1/(1+w)", "form": "multiplier", "function": "cos(2*pi*x)"},
    "profile": {"p_list": "1, 2, inf"},
    "verify": {"check": "hausdorff_young", "p": "1.5", "variant": "L"},
    "sweep": {"check": "hausdorff_young", "p": "1.5", "variant": "L", "N_list": "32, 64, 128"},
    "solve": {"p": "2", "B": "identity", "u0": "1", "T": "1", "dt": "1e-3", "c": "2",
              "picard_tol": "1e-12"},
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved configuration of one run."""

    command: str
    model: dict = field(default_factory=dict)
    task: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    def to_parser(self) -> configparser.ConfigParser:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["model"] = dict(sorted(self.model.items()))
        cp["task"] = dict(sorted({"command": self.command, **self.task}.items()))
        cp["run"] = dict(sorted(self.run.items()))
        return cp

    @property
    def out(self) -> Path:
        return Path(self.run["out"])

    @property
    def seed(self) -> int:
        return int(self.run.get("seed", "0"))


def _read_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    allowed = {"model": MODEL_KEYS, "task": TASK_KEYS | {"command"}, "run": RUN_KEYS}
    for sec in cp.sections():
        if sec in IGNORED_SECTIONS:
            continue
        if sec not in allowed:
            raise UsageError(f"unknown config section [{sec}]")
        for key in cp[sec]:
            if key not in allowed[sec]:
                raise UsageError(f"unknown key {key!r} in [{sec}]")
    return cp


def _normalise_model(name: str) -> str:
    name = name.replace("-", "_")
    if name not in MODELS:
        raise UsageError(f"unknown model {name!r}; choose from {', '.join(MODELS)}")
    return name


def resolve(args: argparse.Namespace) -> RunConfig:
    cp = _read_config(args.config) if args.config else None
    sec = (lambda s: dict(cp[s]) if cp is not None and cp.has_section(s) else {})
    model, task, run = sec("model"), sec("task"), sec("run")
    cfg_command = task.pop("command", None)
    if cfg_command and cfg_command != args.command:
        raise UsageError(f"config is for {cfg_command!r}, not {args.command!r}")
    if args.model:
        model["name"] = args.model
    for key in ("N", "n", "h"):
        v = getattr(args, key)
        if v is not None:
            model[key] = str(v)
    if args.seed is not None:
        run["seed"] = str(args.seed)
    if args.out is not None:
        run["out"] = args.out
    for item in args.set or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.split(".", 1)
        target = {"model": model, "task": task, "run": run}.get(section)
        allowed = {"model": MODEL_KEYS, "task": TASK_KEYS, "run": RUN_KEYS}.get(section)
        if target is None or key not in allowed:
            raise UsageError(f"unknown key {lhs!r}")
        target[key] = value
    if getattr(args, "kind", None):
        task["kind"] = args.kind
    model["name"] = _normalise_model(model.get("name", "torus_laplacian"))
    model.setdefault("N", "16")
    N = int(model["N"])
    model.setdefault("n", str(4 * N + 4))
    if model["name"] == "derivative_h":
        model.setdefault("h", "2")
    else:
        model.pop("h", None)
    for k, v in TASK_DEFAULTS.get(args.command, {}).items():
        task.setdefault(k, v)
    if args.command == "solve":
        task.setdefault("kind", "heat")
        if task["kind"] not in SOLVE_KINDS:
            raise UsageError(f"unknown problem kind {task['kind']!r}")
    run.setdefault("seed", "0")
    run.setdefault("count", "64")
    run.setdefault("families", "band_limited_gaussian, single_mode, bump")
    run.setdefault("out", "nhcalc_out")
    return RunConfig(args.command, model, task, run)


# --- helpers ---------------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _system(cfg: RunConfig):
    m = cfg.model
    return model_system(m["name"], int(m["N"]), int(m["n"]), float(m.get("h", 2.0)))


def _function(sys, text: str, variable: str = "x") -> GridFunction:
    expr = parse_expression(text, {variable: X} if variable != "x" else None)
    return GridFunction(sys.grid, _lambdify(expr)(sys.grid.points, 0.0, 0.0))


def _ensemble(cfg: RunConfig) -> EnsembleConfig:
    fams = tuple(f.strip() for f in cfg.run["families"].split(",") if f.strip())
    band = cfg.run.get("band_limit")
    return EnsembleConfig(int(cfg.run["count"]), cfg.seed, fams, int(band) if band else None)


def _symbol_spec(task: dict, key: str = "symbol") -> SymbolSpec:
    return SymbolSpec(task.get("form", "multiplier"), task[key])


def _operator(sys, text: str | None, form: str = "multiplier"):
    if text is None or text.strip() in ("0", "zero", "none"):
        return None
    if text.strip() == "identity":
        return "identity"
    return sample(SymbolSpec(form, text), sys)


def _write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


# --- commands --------------------------------------------------------------

def cmd_model(cfg: RunConfig):
    sys_ = _system(cfg)
    files = [export_system_csv(sys_, cfg.out / "system.csv")]
    info = {**sys_.descriptor(), "biorthonormality_defect": biorthonormality_defect(sys_)}
    files.append(_write_json(cfg.out / "model.json", _jsonable(info)))
    return 0, files, {"biorthonormality_defect": info["biorthonormality_defect"]}


def cmd_transform(cfg: RunConfig):
    sys_ = _system(cfg)
    f = _function(sys_, cfg.task["function"])
    a = forward(sys_, f, cfg.task["variant"])
    files = [export_coefficients_csv(a, cfg.out / "coefficients.csv")]
    info = {"l2_norm": norm(f, 2), "sobolev_norm": sobolev_norm(sys_, f, float(cfg.task["s"])),
            "s": float(cfg.task["s"]), "variant": cfg.task["variant"]}
    files.append(_write_json(cfg.out / "transform.json", _jsonable(info)))
    return 0, files, {"sobolev_norm": info["sobolev_norm"]}


def cmd_apply(cfg: RunConfig):
    sys_ = _system(cfg)
    f = _function(sys_, cfg.task["function"])
    sym = sample(_symbol_spec(cfg.task), sys_)
    g = apply(sys_, sym, f)
    path = cfg.out / "result.csv"
    with path.open("w") as fh:
        fh.write("x,re,im\n")
        for x, z in zip(sys_.grid.points, g.values):
            fh.write(f"{x!r},{float(z.real)!r},{float(z.imag)!r}\n")
    info = {"input_l2": norm(f, 2), "output_l2": norm(g, 2), "output_linf": norm(g, math.inf)}
    return 0, [path, _write_json(cfg.out / "apply.json", _jsonable(info))], {"output_l2": info["output_l2"]}


def cmd_profile(cfg: RunConfig):
    sys_ = _system(cfg)
    prof = spectral_profile(sys_, tuple(_floats(cfg.task["p_list"])))
    path = _write_json(cfg.out / "spectral_profile.json", _jsonable(prof.to_dict()))
    return 0, [path], {"q_fit": prof.Q_fit}


def _check_spec(cfg: RunConfig) -> CheckSpec:
    t = cfg.task
    check = t["check"]
    if check not in FOURIER_KINDS + OPERATOR_KINDS:
        raise UsageError(f"unknown check {check!r}")
    params = {}
    for key in ("p", "q", "b", "s", "Q_m", "rho", "collar"):
        if key in t:
            params[key] = float(t[key]) if key != "rho" else int(t[key])
    for key in ("phi", "variant", "route"):
        if key in t:
            params[key] = t[key]
    symbol = None
    if check in OPERATOR_KINDS:
        if "symbol" not in t:
            raise UsageError(f"check {check!r} needs task.symbol")
        default_form = "multiplier" if check == "lplq_multiplier" else "pseudo_multiplier"
        symbol = SymbolSpec(t.get("form", default_form), t["symbol"])
    return CheckSpec(check, cfg.model["name"], float(cfg.model.get("h", 2.0)), params, symbol,
                     _ensemble(cfg))


def _finish_report(cfg: RunConfig, rep):
    files = [rep.write_json(cfg.out / "report.json"), rep.write_members_csv(cfg.out / "members.csv")]
    code = 0 if rep.status == "pass" else 1
    return code, files, {"status": rep.status, "max_ratio": rep.max_ratio}


def cmd_verify(cfg: RunConfig):
    spec = _check_spec(cfg)
    rep = spec.run(int(cfg.model["N"]))
    return _finish_report(cfg, rep)


def cmd_sweep(cfg: RunConfig):
    spec = _check_spec(cfg)
    rep = stability_sweep(spec, [int(v) for v in _floats(cfg.task["N_list"])])
    return _finish_report(cfg, rep)


def cmd_solve(cfg: RunConfig):
    from .pde import (CauchyProblem, existence_time, sc_membership, solve_heat,
                      solve_stationary, solve_wave)

    t = cfg.task
    sys_ = _system(cfg)
    p = float(t["p"])
    kind = t["kind"]
    B = _operator(sys_, t.get("B"))
    if kind == "stationary":
        A = _operator(sys_, t.get("A", "identity"))
        f = _function(sys_, t.get("f", "0"))
        res = solve_stationary(CauchyProblem(sys_, p, B=B, A=A, f=f),
                               int(t.get("max_iter", 200)), float(t.get("tol", 1e-12)))
        info = {"residual": res.residual, "iterations": res.iterations, "apriori": res.apriori}
        path = cfg.out / "solution.csv"
        with path.open("w") as fh:
            fh.write("x,re,im\n")
            for x, z in zip(sys_.grid.points, res.u.values):
                fh.write(f"{x!r},{float(z.real)!r},{float(z.imag)!r}\n")
        return 0, [path, _write_json(cfg.out / "solve.json", _jsonable(info))], {"residual": res.residual}
    u0 = _function(sys_, t["u0"])
    u1 = _function(sys_, t["u1"]) if "u1" in t else None
    b_text = t.get("b_profile", "1")
    b_expr = _lambdify(parse_expression(b_text, {"t": X}))

    def b(times):
        return np.real(b_expr(times, 0.0, 0.0))

    T, dt, c = float(t["T"]), float(t["dt"]), float(t["c"])
    problem = CauchyProblem(sys_, p, u0, B, u1, b, T)
    solver = solve_heat if kind == "heat" else solve_wave
    traj = solver(problem, dt, float(t["picard_tol"]))
    norms = {"u0": norm(u0, 2), "u1": norm(u1, 2) if u1 is not None else 0.0}
    if kind == "heat":
        et = existence_time("heat", c, p, norms)
    else:
        fine = np.linspace(0.0, T, 2001)
        b_l2 = float(np.sqrt(np.trapezoid(b(fine) ** 2, fine)))
        et = existence_time("wave", c, p, norms, b_l2)
    member, margin = sc_membership(traj, c, norms, kind)
    snap = int(t.get("snapshot_every", 0)) or None
    files = traj.export_csv(cfg.out / "trajectory.csv", snap)
    info = {
        "kind": kind,
        "blowup_flag": traj.blowup,
        "t_last": traj.t_last,
        "complete": traj.complete,
        "max_l2": traj.max_l2,
        "T_star": et.T_star,
        "T_star_certificate": et.certificate,
        "T_star_alternatives": et.alternatives,
        "sc_member": member,
        "sc_margin": margin,
        "max_picard_iterations": int(max(traj.picard_iterations)),
        "diagnostics": traj.diagnostics,
    }
    files.append(_write_json(cfg.out / "solve.json", _jsonable(info)))
    return 0, files, {"blowup_flag": traj.blowup, "t_last": traj.t_last, "T_star": et.T_star,
                      "sc_member": member}


HANDLERS = {
    "model": cmd_model,
    "transform": cmd_transform,
    "apply": cmd_apply,
    "profile": cmd_profile,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "solve": cmd_solve,
}


def write_manifest(cfg: RunConfig, files, result: dict) -> Path:
    cp = cfg.to_parser()
    cp["outputs"] = {f"file{i}": Path(f).name for i, f in enumerate(files)}
    cp["result"] = {k: (repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)) for k, v in result.items()}
    path = cfg.out / "manifest.cfg"
    with path.open("w") as fh:
        cp.write(fh)
    return path


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nhcalc", description="Nonharmonic spectral analysis toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "solve":
            sp.add_argument("kind", nargs="?", choices=SOLVE_KINDS)
        sp.add_argument("--config")
        sp.add_argument("--model")
        sp.add_argument("--N", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--h", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    return parser


def _thread_limit():
    val = os.environ.get("NHCALC_THREADS")
    if not val:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(val))


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise _ArgError("a subcommand is required: " + " | ".join(COMMANDS))
        cfg = resolve(args)
    except (_ArgError, UsageError, ValueError) as exc:
        print(f"nhcalc: error: {exc}", file=sys.stderr)
        return 2
    try:
        with _thread_limit():
            cfg.out.mkdir(parents=True, exist_ok=True)
            code, files, result = HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"nhcalc: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"nhcalc: invalid parameters: {exc}", file=sys.stderr)
        return 2
    write_manifest(cfg, files, result)
    print(json.dumps(_jsonable(result), sort_keys=True))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
