"""Command-line interface.

Exit codes: 0 success, 2 parse or validation error, 3 hypothesis
precondition failure (reducible mean migration), 4 the ``check`` command
found violations, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import modelfile
from .catalog import catalog, get_entry
from .digdid import did_scan, dig_scan
from .errors import DomainError, HypothesisError, ModelError, NumericalError, PatchGrowthError
from .limits import limit_report, sigma_chi
from .monodromy import check_H2, growth_rate, iterate_periods
from .pathmodel import ModelParameters, PatchModel
from .simplexflow import CheckConfig, check_H3, check_H4

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_VIOLATED, EXIT_NUMERIC = 0, 2, 3, 4, 5
JOBS_ENV = "PATCHGROWTH_JOBS"


class _InputError(Exception):
    """Bad command-line value (exit code 2)."""


def _fmt(x) -> str:
    return format(float(x), ".17g")


def parse_grid(text: str, *, positive: bool, name: str) -> np.ndarray:
    """Parse ``"v1,v2,..."`` or ``"log:start:stop:count"`` (geometric spacing).

    Values are sorted ascending and deduplicated.
    """
    s = text.strip()
    try:
        if s.startswith("log:"):
            parts = s.split(":")
            if len(parts) != 4:
                raise ValueError("expected log:start:stop:count")
            lo, hi, cnt = float(parts[1]), float(parts[2]), int(parts[3])
            if lo <= 0 or hi <= 0 or cnt < 1:
                raise ValueError("log grid needs positive bounds and count >= 1")
            values = np.geomspace(lo, hi, cnt)
        else:
            values = np.array([float(v) for v in s.split(",") if v.strip()])
    except ValueError as exc:
        raise _InputError(f"invalid {name} grid {text!r}: {exc}") from None
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise _InputError(f"{name} grid must be nonempty and finite")
    if positive and np.any(values <= 0):
        raise _InputError(f"{name} grid values must be > 0")
    if np.any(values < 0):
        raise _InputError(f"{name} grid values must be >= 0")
    return np.unique(values)


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV)
    if not raw:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise _InputError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    return max(jobs, 1)


def _config(args) -> CheckConfig:
    try:
        return CheckConfig(
            samples=args.samples,
            perturbations=args.perturbations,
            radius=args.radius,
            seed=args.seed,
            horizon_scale=args.horizon_scale,
            horizon_min=args.horizon_min,
            horizon_max=args.horizon_max,
            tol=args.tol,
            n_jobs=args.check_jobs,
        )
    except ModelError as exc:
        raise _InputError(str(exc)) from None


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        print(json.dumps(doc, indent=2, default=_json_default))
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


def _load(path) -> PatchModel:
    return modelfile.load(path)


def _params(m, T) -> ModelParameters:
    try:
        return ModelParameters(m, T)
    except (ValueError, ModelError) as exc:
        raise _InputError(str(exc)) from None


# ---------------------------------------------------------------- commands


def cmd_eval(args) -> int:
    model = _load(args.model)
    res = growth_rate(model, _params(args.m, args.T))
    sigma, chi = sigma_chi(model)
    doc = {"m": args.m, "T": args.T, "lambda": res.Lambda, "mu": res.mu, "log_mu": res.log_mu,
           "pi": res.pi.tolist(), "sigma": sigma, "chi": chi, "decoupled": res.decoupled}
    lines = [f"Lambda = {_fmt(res.Lambda)}", f"mu     = {_fmt(res.mu)}",
             f"pi     = [{', '.join(_fmt(p) for p in res.pi)}]",
             f"sigma  = {_fmt(sigma)}", f"chi    = {_fmt(chi)}"]
    if res.decoupled:
        lines.append("note: m = 0, patches decoupled; Lambda is the largest mean growth rate")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_limits(args) -> int:
    model = _load(args.model)
    cfg = _config(args)
    rep = limit_report(model, args.m, force=args.force, config=cfg, m_probe=args.m_probe)
    doc = rep.to_dict()
    doc["config"] = cfg.as_dict()
    flags = rep.flags()
    rows = [("sigma", "ideal worst habitat", rep.sigma, ""),
            ("chi", "ideal best habitat", rep.chi, "")]
    labels = {
        "lambda_0T": "m -> 0 (any T)",
        "lambda_m0": f"T -> 0 at m={args.m:g}",
        "lambda_mInf": f"T -> inf at m={args.m:g}",
        "lambda_infT": "m -> inf (any T)",
        "lambda_00": "m, T -> 0",
        "lambda_0inf": "m -> 0 then T -> inf",
        "lambda_inf0": "m -> inf then T -> 0",
    }
    values = rep.values()
    for key, label in labels.items():
        note = flags[key]["note"] if key in flags else ""
        rows.append((key, label, values[key], note))
    lines = [f"{'quantity':<12} {'limit':<24} {'value':>24}  note"]
    for key, label, val, note in rows:
        shown = "absent" if val is None else _fmt(val)
        lines.append(f"{key:<12} {label:<24} {shown:>24}  {note}")
    lines.append("hypotheses: " + ", ".join(f"{k}={v.verdict}" for k, v in rep.reports.items()))
    lines.append("config: " + json.dumps(cfg.as_dict()))
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def _report_text(rep) -> list[str]:
    lines = [f"{rep.hypothesis}: {rep.verdict}"]
    for w in rep.witnesses:
        lines.append(f"  [{w.kind}] tau={_fmt(w.tau)}: {w.reason}")
        for k, v in w.data.items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            lines.append(f"      {k} = {v}")
    return lines


def cmd_check(args) -> int:
    model = _load(args.model)
    cfg = _config(args)
    reports = [check_H2(model), check_H3(model, args.m, cfg), check_H4(model, cfg)]
    doc = {"m": args.m, "config": cfg.as_dict(), "reports": [r.to_dict() for r in reports]}
    lines = []
    for r in reports:
        lines.extend(_report_text(r))
    lines.append("config: " + json.dumps(cfg.as_dict()))
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK if all(r.verified for r in reports) else EXIT_VIOLATED


def _sweep_point(task):
    model, m, T = task
    try:
        res = growth_rate(model, ModelParameters(m, T))
    except HypothesisError as exc:
        return ("hypothesis", str(exc))
    except (NumericalError, ArithmeticError) as exc:
        return ("numeric", str(exc))
    return ("ok", res.Lambda, res.mu, res.decoupled)


def cmd_sweep(args) -> int:
    model = _load(args.model)
    ms = parse_grid(args.m, positive=False, name="m")
    Ts = parse_grid(args.T, positive=True, name="T")
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    tasks = [(model, float(m), float(T)) for m in ms for T in Ts]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_sweep_point(t) for t in tasks]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "T", "lambda", "mu", "decoupled"])
    status = EXIT_OK
    for (_, m, T), res in zip(tasks, results):
        if res[0] == "ok":
            writer.writerow([_fmt(m), _fmt(T), _fmt(res[1]), _fmt(res[2]), str(res[3]).lower()])
            continue
        writer.writerow([_fmt(m), _fmt(T), "nan", "nan", "false"])
        print(f"error at m={m:g}, T={T:g}: {res[1]}", file=sys.stderr)
        code = EXIT_HYPOTHESIS if res[0] == "hypothesis" else EXIT_NUMERIC
        status = status or code
    _write_text(args.output, buf.getvalue())
    return status


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _phenomenon_text(res) -> list[str]:
    lines = [f"{res.phenomenon}: {res.feasible}", f"gate: {res.gate}"]
    cls = res.classification
    lines.append("mean growth: " + ", ".join(f"{_fmt(r)} ({lab})" for r, lab in zip(cls.rbar, cls.labels)))
    lines.append(f"sigma = {_fmt(cls.sigma)}, chi = {_fmt(cls.chi)}")
    if res.witness is None:
        lines.append("witness: none on the grid")
    else:
        m, T, lam = res.witness
        lines.append(f"witness: m={_fmt(m)}, T={_fmt(T)}, Lambda={_fmt(lam)}")
    lines.append(f"evaluations: {res.evaluations}")
    return lines


def cmd_dig(args) -> int:
    model = _load(args.model)
    cfg = _config(args)
    ms = parse_grid(args.m, positive=True, name="m")
    Ts = parse_grid(args.T, positive=True, name="T")
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    res = dig_scan(model, ms, Ts, config=cfg, n_jobs=jobs)
    doc = res.to_dict()
    doc["config"] = cfg.as_dict()
    lines = _phenomenon_text(res)
    lines.append("config: " + json.dumps(cfg.as_dict()))
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_did(args) -> int:
    loaded = modelfile.load(args.model, growth_only=True)
    growth = loaded.growth if isinstance(loaded, PatchModel) else loaded
    migration = loaded.migration if (isinstance(loaded, PatchModel) and args.use_migration) else None
    if args.use_migration and migration is None:
        raise _InputError("--use-migration needs a file with L in every segment")
    cfg = _config(args)
    ms = parse_grid(args.m, positive=True, name="m")
    Ts = parse_grid(args.T, positive=True, name="T")
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    if args.epsilon < 0:
        raise _InputError("epsilon must be >= 0")
    res = did_scan(growth, ms, Ts, args.epsilon, migration=migration, config=cfg, n_jobs=jobs)
    doc = res.to_dict()
    doc["config"] = cfg.as_dict()
    lines = _phenomenon_text(res)
    if "case" in res.details:
        lines.append(f"construction: case {res.details['case']}, never minimal "
                     f"{res.details['never_minimal']}, epsilon {_fmt(res.details['epsilon'])}")
    if res.limit is not None:
        lines.append(f"m -> inf limit: {_fmt(res.limit)}")
    built = res.details.get("model")
    if built is not None and "construction" in res.details:
        built.name = built.name or "did-construction"
        text = modelfile.dumps(built)
        if args.emit:
            Path(args.emit).write_text(text)
            lines.append(f"constructed model written to {args.emit}")
            doc["model_file"] = args.emit
        else:
            lines.append("constructed model:")
            lines.append(text.rstrip("\n"))
            doc["model_file"] = modelfile.model_to_dict(built)
    lines.append("config: " + json.dumps(cfg.as_dict()))
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_trajectory(args) -> int:
    model = _load(args.model)
    params = _params(args.m, args.T)
    if args.x0 is None:
        x0 = np.ones(model.n)
    else:
        try:
            x0 = np.array([float(v) for v in args.x0.split(",")])
        except ValueError:
            raise _InputError(f"invalid x0 {args.x0!r}") from None
        if x0.size != model.n:
            raise _InputError(f"x0 needs {model.n} entries, got {x0.size}")
    if args.periods < 1:
        raise _InputError("periods must be >= 1")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *[f"x{i + 1}" for i in range(model.n)], "log_norm"])
    for k, theta, log_norm in iterate_periods(model, params, x0, args.periods):
        x = theta * np.exp(log_norm) if log_norm < 700 else np.full(model.n, np.inf)
        writer.writerow([_fmt(k * args.T), *[_fmt(v) for v in x], _fmt(log_norm)])
    _write_text(args.output, buf.getvalue())
    return EXIT_OK


def cmd_catalog(args) -> int:
    entries = catalog()
    doc = [{"name": e.name, "description": e.description, "parameters": list(e.parameters),
            "defaults": e.defaults} for e in entries]
    lines = []
    for e in entries:
        defaults = ", ".join(f"{k}={v:g}" for k, v in e.defaults.items())
        lines.append(f"{e.name:<22} {e.description}")
        lines.append(f"{'':<22} defaults: {defaults}")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        entry = get_entry(args.name)
    except KeyError as exc:
        raise _InputError(exc.args[0]) from None
    params = {}
    for item in args.param or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise _InputError(f"parameter must look like name=value, got {item!r}")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise _InputError(f"invalid value in {item!r}") from None
    model = entry.build(**params)
    _write_text(args.output, modelfile.dumps(model))
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_check_flags(p: argparse.ArgumentParser) -> None:
    d = CheckConfig()
    g = p.add_argument_group("hypothesis-check sampling")
    g.add_argument("--samples", type=int, default=d.samples,
                   help="samples per non-constant segment (default %(default)s)")
    g.add_argument("--perturbations", type=int, default=d.perturbations,
                   help="perturbations per sample (default %(default)s)")
    g.add_argument("--radius", type=float, default=d.radius,
                   help="perturbation size (default %(default)s)")
    g.add_argument("--seed", type=int, default=d.seed, help="base seed (default %(default)s)")
    g.add_argument("--horizon-scale", type=float, default=d.horizon_scale,
                   help="flow horizon is scale/gap (default %(default)s)")
    g.add_argument("--horizon-min", type=float, default=d.horizon_min,
                   help="lower clip of the flow horizon (default %(default)s)")
    g.add_argument("--horizon-max", type=float, default=d.horizon_max,
                   help="upper clip of the flow horizon (default %(default)s)")
    g.add_argument("--tol", type=float, default=d.tol,
                   help="convergence distance (default %(default)s)")
    g.add_argument("--check-jobs", type=int, default=d.n_jobs,
                   help="threads for the sampled checks (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchgrowth",
        description="Growth rates of time-periodic patch models with migration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, *, model=True, json_flag=True):
        p = sub.add_parser(name, help=help_, description=help_)
        if model:
            p.add_argument("model", help="model file (JSON)")
        if json_flag:
            p.add_argument("--json", action="store_true", help="structured output")
        p.set_defaults(func=func)
        return p

    p = add("eval", cmd_eval, "growth rate at one (m, T)")
    p.add_argument("--m", type=float, required=True, help="migration strength")
    p.add_argument("--T", type=float, required=True, help="period")

    p = add("limits", cmd_limits, "table of asymptotic limits with hypothesis flags")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--m-probe", type=float, default=1e-2,
                   help="m used to probe the small-m hypothesis (default %(default)s)")
    p.add_argument("--force", action="store_true",
                   help="report formula values even when hypotheses are not verified")
    _add_check_flags(p)

    p = add("check", cmd_check, "H2/H3/H4 reports; exit 4 unless all verified")
    p.add_argument("--m", type=float, required=True)
    _add_check_flags(p)

    jobs_help = f"worker processes (default ${JOBS_ENV} or 1)"
    p = add("sweep", cmd_sweep, "CSV of the growth rate over an (m, T) grid", json_flag=False)
    p.add_argument("--m", required=True, help='grid: "v1,v2,..." or "log:start:stop:count"')
    p.add_argument("--T", required=True, help="grid, same syntax")
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.add_argument("--jobs", type=int, help=jobs_help)

    grid_default = "log:0.01:1000:13"
    for name, func, help_ in (("dig", cmd_dig, "search for dispersal-induced growth"),
                              ("did", cmd_did, "search for dispersal-induced decay")):
        p = add(name, func, help_)
        p.add_argument("--m", default=grid_default, help="m grid (default %(default)s)")
        p.add_argument("--T", default=grid_default, help="T grid (default %(default)s)")
        p.add_argument("--jobs", type=int, help=jobs_help)
        _add_check_flags(p)
        if name == "did":
            p.add_argument("--epsilon", type=float, default=1e-3,
                           help="weight of the extra links when a patch is never worst")
            p.add_argument("--use-migration", action="store_true",
                           help="scan the migration in the file instead of constructing one")
            p.add_argument("--emit", help="write the constructed model file here")

    p = add("trajectory", cmd_trajectory, "per-period population samples as CSV",
            json_flag=False)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--x0", help="comma-separated initial population (default all ones)")
    p.add_argument("--periods", type=int, default=100)
    p.add_argument("-o", "--output", help="CSV path (default stdout)")

    add("catalog", cmd_catalog, "list built-in models", model=False)

    p = add("export", cmd_export, "write a built-in model as a model file", model=False,
            json_flag=False)
    p.add_argument("name", help="catalog entry name")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="override a parameter (repeatable)")
    p.add_argument("-o", "--output", help="file path (default stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (_InputError, ModelError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PatchGrowthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
