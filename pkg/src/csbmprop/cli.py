"""Command-line entry point.

Every subcommand is a batch job.  It writes its tables as CSV (one file per
experiment, a '#' comment line describing the columns, '.' decimals) and a
``<stem>.manifest.json`` next to them recording the resolved parameters,
seeds, tool version, output paths and wall-clock time.  Running the command
stored under ``argv`` in a manifest reproduces the CSV byte for byte, with
any ``--threads`` value.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as rngmod
from .csbm import CsbmParams, gaussian_by_separation, laplace_by_norm, sample_csbm, save_graph
from .experiments import (FORMS, PRESETS, SWEEP_COLUMNS, TRANSFER_COLUMNS, TRANSITION_COLUMNS, W_GRID,
                          WSWEEP_COLUMNS, Rule, Schedule, SweepSpec, TransferSpec, TransitionSpec, WSweepSpec,
                          parse_model, preset, sparse_regime_sweep, sweep_n, transfer_experiment, transition_curve,
                          w_sweep)


class CliError(Exception):
    """A user-facing error; main() prints it and exits with status 1."""


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    vals = _float_list(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def _rule(text: str) -> Rule:
    """'COEF' or 'COEF:FORM', e.g. '2:inv_sqrt' for 2/sqrt(n)."""
    coef, _, form = text.partition(":")
    try:
        return Rule(float(coef), form or "const")
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


SCHEDULE_HELP = ("schedule rules are COEF or COEF:FORM with FORM one of " + ", ".join(FORMS)
                 + "; e.g. --p 2:inv_sqrt means p = 2/sqrt(n)")


def _columns_epilog(columns, extra: str = "") -> str:
    return f"CSV columns: {', '.join(columns)}.  {extra}".strip()


# --------------------------------------------------------------------------
# manifest and outputs
# --------------------------------------------------------------------------


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(args, stem: str, params: dict, outputs: dict, started: float, extra=None) -> Path:
    doc = {
        "tool": "csbmprop",
        "version": __version__,
        "subcommand": args.command,
        "argv": list(args.argv),
        "params": params,
        "seed": args.seed,
        "threads": args.threads,
        "rng": rngmod.generator_info(),
        "python": platform.python_version(),
        "outputs": {k: str(v) for k, v in outputs.items()},
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(timespec="seconds"),
        "wall_clock_s": round(time.time() - started, 3),
    }
    if extra:
        doc.update(extra)
    path = _out_dir(args) / f"{stem}.manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    return path


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _emit(args, result, stem: str, started: float) -> int:
    out = _out_dir(args) / f"{stem}.csv"
    result.write_csv(out)
    man = _write_manifest(args, stem, result.meta, {"csv": out}, started)
    print(f"wrote {out}")
    print(f"wrote {man}")
    return 0


# --------------------------------------------------------------------------
# schedules from presets or flags
# --------------------------------------------------------------------------

_SCHEDULE_FLAGS = ("p", "q", "sep", "m", "family", "b")


def _add_schedule_flags(sp, kinds: str):
    names = ", ".join(k for k, v in PRESETS.items() if v.kind in kinds.split("|"))
    sp.add_argument("--preset", help=f"named parameter block: {names}")
    g = sp.add_argument_group("explicit schedule", SCHEDULE_HELP)
    g.add_argument("--p", type=_rule, help="intra-class edge probability rule")
    g.add_argument("--q", type=_rule, help="inter-class edge probability rule")
    g.add_argument("--sep", type=_rule, help="||mu - nu|| (Gaussian) or ||mu|| (Laplace) rule")
    g.add_argument("--m", type=_positive_int, help="attribute dimension (default 10)")
    g.add_argument("--family", choices=("gaussian", "laplace"), help="attribute family (default gaussian)")
    g.add_argument("--b", type=float, help="Laplace scale (default 1)")


def _schedule(args, kinds: tuple[str, ...]):
    """(schedule, preset or None) from --preset or the explicit flags, never both."""
    given = [f"--{k}" for k in _SCHEDULE_FLAGS if getattr(args, k, None) is not None]
    if args.preset:
        if given:
            raise CliError(f"--preset {args.preset} conflicts with explicit schedule flags {', '.join(given)}")
        try:
            pr = preset(args.preset)
        except ValueError as e:
            raise CliError(str(e)) from None
        if pr.kind not in kinds:
            raise CliError(f"preset {pr.name} is a {pr.kind} preset; this command takes {' or '.join(kinds)} presets")
        return pr.schedule, pr
    missing = [f"--{k}" for k in ("p", "q", "sep") if getattr(args, k) is None]
    if missing:
        raise CliError(f"give --preset or all of --p, --q, --sep (missing {', '.join(missing)})")
    return Schedule(args.p, args.q, args.sep, m=args.m or 10, family=args.family or "gaussian",
                    b=1.0 if args.b is None else args.b), None


def _n_grid(args, pr):
    if args.n_grid:
        return args.n_grid
    return pr.n_grid if pr else None


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _attr_from_flags(args):
    if (args.gauss_sep is None) == (args.laplace_norm is None):
        raise CliError("give exactly one of --gauss-sep and --laplace-norm")
    if args.gauss_sep is not None:
        if args.gauss_sep < 0:
            raise CliError("--gauss-sep must be >= 0")
        return gaussian_by_separation(args.gauss_sep, args.m)
    if args.laplace_norm < 0:
        raise CliError("--laplace-norm must be >= 0")
    if not args.b > 0:
        raise CliError("--b must be positive")
    return laplace_by_norm(args.laplace_norm, args.m, args.b)


def _check_pq(p, q):
    for name, v in (("p", p), ("q", q)):
        if not v > 0:
            raise CliError(f"{name} must be positive")
        if v > 1:
            raise CliError(f"{name} must be <= 1")


def cmd_generate(args) -> int:
    started = time.time()
    _check_pq(args.p, args.q)
    params = CsbmParams(args.n, args.p, args.q, _attr_from_flags(args), args.seed)
    g = sample_csbm(params)
    paths = save_graph(g, _out_dir(args), args.stem)
    man = _write_manifest(args, args.stem, params.to_dict(), paths, started,
                          {"summary": {"num_edges": g.num_edges, "mean_degree": float(g.degree().mean())}})
    for p in paths.values():
        print(f"wrote {p}")
    print(f"wrote {man}")
    return 0


def _models_arg(args):
    try:
        return tuple(parse_model(m) for m in args.models.split(",")) if args.models else None
    except ValueError as e:
        raise CliError(str(e)) from None


def cmd_sweep(args, sparse: bool = False) -> int:
    started = time.time()
    kinds = ("sparse",) if sparse else ("sweep", "sparse")
    sched, pr = _schedule(args, kinds)
    if args.swap:
        sched = sched.swapped()
    grid = _n_grid(args, pr)
    if not grid:
        raise CliError("--n-grid is required without a preset")
    kw = {"models": _models_arg(args)} if args.models else {}
    spec = SweepSpec(sched, grid, trials=args.trials, seed=args.seed, **kw)
    res = (sparse_regime_sweep if sparse else sweep_n)(spec, args.threads)
    res.meta["preset"] = pr.name if pr else None
    res.meta["swapped"] = bool(args.swap)
    stem = args.stem or ((pr.name if pr else args.command) + ("-swapped" if args.swap else ""))
    return _emit(args, res, stem, started)


def cmd_wsweep(args) -> int:
    started = time.time()
    sched, pr = _schedule(args, ("wsweep",))
    grid = _n_grid(args, pr)
    if not grid:
        raise CliError("--n-grid is required without a preset")
    spec = WSweepSpec(sched, args.w_grid, tuple(grid), trials=args.trials, seed=args.seed)
    res = w_sweep(spec, args.threads)
    res.meta["preset"] = pr.name if pr else None
    return _emit(args, res, args.stem or (pr.name if pr else "wsweep"), started)


def cmd_transfer(args) -> int:
    started = time.time()
    sched, pr = _schedule(args, ("transfer",))
    n = args.n or (pr.n_grid[0] if pr else 20000)
    spec = TransferSpec(sched, n=n, intensities=args.intensities, trials=args.trials, seed=args.seed)
    res = transfer_experiment(spec, args.threads)
    res.meta["preset"] = pr.name if pr else None
    return _emit(args, res, args.stem or (pr.name if pr else "transfer"), started)


_TRANSITION_FLAGS = ("n", "fixed", "struct_points", "sep_min", "sep_max", "sep_points", "heterophilic", "m",
                     "family", "b")


def cmd_transition(args) -> int:
    started = time.time()
    given = {k: getattr(args, k) for k in _TRANSITION_FLAGS if getattr(args, k) not in (None, False)}
    if args.preset:
        if given:
            raise CliError(f"--preset {args.preset} conflicts with explicit flags "
                           + ", ".join("--" + k.replace("_", "-") for k in given))
        try:
            pr = preset(args.preset)
        except ValueError as e:
            raise CliError(str(e)) from None
        if pr.kind != "transition":
            raise CliError(f"preset {pr.name} is a {pr.kind} preset; this command takes transition presets")
        base = pr.transition
    else:
        pr, base = None, TransitionSpec()
    spec = TransitionSpec(**{**base.to_dict(), **given, "trials": args.trials, "seed": args.seed})
    res = transition_curve(spec, args.threads)
    res.meta["preset"] = pr.name if pr else None
    return _emit(args, res, args.stem or (pr.name if pr else "transition"), started)


def _load_real(args):
    from .realdata import load_linqs, load_topology

    if args.edges or args.labels:
        if not (args.edges and args.labels):
            raise CliError("--edges and --labels go together")
        if args.content or args.cites:
            raise CliError("use either --edges/--labels or --content/--cites")
        return load_topology(args.edges, args.labels, args.name or Path(args.edges).stem)
    if args.content and args.cites:
        return load_linqs(args.content, args.cites, args.name or Path(args.content).stem)
    raise CliError("give --edges and --labels, or --content and --cites")


def _parse_real_rule(text: str, name: str):
    from .realdata import SEVERAL_VS_SEVERAL, parse_rule

    key = text.strip().lower()
    if key in SEVERAL_VS_SEVERAL:
        return SEVERAL_VS_SEVERAL[key]
    if key == "several":
        if name.lower() not in SEVERAL_VS_SEVERAL:
            raise CliError(f"no stored several-vs-several partition for dataset {name!r}")
        return SEVERAL_VS_SEVERAL[name.lower()]
    try:
        return parse_rule(text)
    except ValueError:
        raise CliError(f"cannot parse --rule {text!r}") from None


def _train_config(args):
    from .trainer import TrainConfig

    return TrainConfig(lr=args.lr, weight_decay=args.weight_decay, epochs=args.epochs, seed=args.seed)


def cmd_real(args) -> int:
    from .realdata import GAUSSIAN_MODELS, LAPLACE_MODELS, real_accuracy_table

    started = time.time()
    topo = _load_real(args)
    rule = _parse_real_rule(args.rule, topo.name)
    allowed = GAUSSIAN_MODELS if args.family == "gaussian" else LAPLACE_MODELS
    models = tuple(m for m in args.models.split(",") if m) if args.models else allowed
    bad = [m for m in models if m not in allowed]
    if bad:
        raise CliError(f"models {bad} are not available with {args.family} attributes (choose from {allowed})")
    res = real_accuracy_table(topo, rule, args.family, args.levels, models, trials=args.trials, seed=args.seed,
                              m=args.m, b=args.b, config=_train_config(args), threads=args.threads)
    res.meta["inputs"] = {k: getattr(args, k) for k in ("edges", "labels", "content", "cites") if getattr(args, k)}
    return _emit(args, res, args.stem or f"real-{topo.name}-{args.family}", started)


def cmd_train(args) -> int:
    from .csbm import load_graph
    from .realdata import make_train_test_pair
    from .trainer import default_psi_kind, evaluate, init_model, save_checkpoint, train

    started = time.time()
    if args.graph:
        if any(getattr(args, k) is not None for k in ("n", "p", "q", "gauss_sep", "laplace_norm")):
            raise CliError("--graph conflicts with the synthetic-graph flags")
        g_train = load_graph(args.graph)
        g_test = None
        family = args.family or "gaussian"
        params = {"graph": str(args.graph)}
    else:
        missing = [f"--{k}" for k in ("n", "p", "q") if getattr(args, k) is None]
        if missing:
            raise CliError(f"give --graph or all of --n, --p, --q (missing {', '.join(missing)})")
        _check_pq(args.p, args.q)
        spec = _attr_from_flags(args)
        family = "gaussian" if args.gauss_sep is not None else "laplace"
        if args.family and args.family != family:
            raise CliError(f"--family {args.family} conflicts with the attribute flag")
        cp = CsbmParams(args.n, args.p, args.q, spec, args.seed)
        g = sample_csbm(cp)
        from .realdata import LabeledTopology

        u, v = g.edges()
        topo = LabeledTopology(g.n, u, v, (g.labels > 0).astype(np.int64), "csbm")
        g_train, g_test = make_train_test_pair(topo, g.labels, spec, args.seed)
        params = {"csbm": cp.to_dict()}
    kind = args.psi or default_psi_kind(args.variant, family)
    model = init_model(args.variant, g_train.m, kind, seed=args.seed, threshold=args.init_threshold,
                       clamp=args.init_clamp, neighbor_weight=args.neighbor_weight,
                       phi_sign=-1.0 if args.heterophilic else 1.0)
    config = _train_config(args)
    res = train(model, g_train, config)
    metrics = {"train_acc": evaluate(res.model, g_train), "final_loss": res.losses[-1] if res.losses else None}
    if g_test is not None:
        metrics["test_acc"] = evaluate(res.model, g_test)
    out = _out_dir(args)
    ckpt = out / f"{args.stem}.model.json"
    trace = out / f"{args.stem}.loss.csv"
    save_checkpoint(ckpt, res.model, config, {"metrics": metrics})
    trace.write_text(res.trace_csv(), encoding="utf-8")
    params.update({"variant": args.variant, "psi_kind": kind, "init": model.to_dict(), "train": config.to_dict()})
    man = _write_manifest(args, args.stem, params, {"checkpoint": ckpt, "loss_trace": trace}, started,
                          {"metrics": metrics})
    for k, v in metrics.items():
        print(f"{k} {v!r}")
    print(f"wrote {ckpt}")
    print(f"wrote {trace}")
    print(f"wrote {man}")
    return 0


def cmd_verify(args) -> int:
    from . import checks as chk

    started = time.time()
    names = [c for c in args.checks.split(",") if c] if args.checks else list(chk.CHECKS)
    unknown = [c for c in names if c not in chk.CHECKS]
    if unknown:
        raise CliError(f"unknown checks {unknown}; choose from {', '.join(chk.CHECKS)}")
    results = []
    outputs = {}
    for nm in names:
        if nm == "moments":
            r = chk.check_moments(samples=args.samples, seed=args.seed)
            from .experiments import ExperimentResult

            table = ExperimentResult("moments", tuple(r.table[0]), r.table,
                                     "closed-form vs Monte Carlo message moments;")
            text = table.to_csv()
            sys.stdout.write(text)
            path = _out_dir(args) / "verify-moments.csv"
            path.write_text(text, encoding="utf-8")
            outputs["moments"] = path
        else:
            r = chk.CHECKS[nm](seed=args.seed)
        results.append(r)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    _write_manifest(args, "verify", {"checks": names, "samples": args.samples}, outputs, started,
                    {"results": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]})
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else 1


def cmd_info(args) -> int:
    from .theory import attributed_info, classify_regime, structural_info

    doc = {"version": __version__, "rng": rngmod.generator_info(), "python": platform.python_version(),
           "threads_default": os.cpu_count() or 1}
    if args.preset:
        try:
            pr = preset(args.preset)
        except ValueError as e:
            raise CliError(str(e)) from None
        d = {"name": pr.name, "kind": pr.kind, "note": pr.note}
        if pr.schedule is not None:
            d["schedule"] = pr.schedule.to_dict()
            d["n_grid"] = list(pr.n_grid)
            pts = []
            for n in pr.n_grid:
                p, q = pr.schedule.pq(n)
                rep = classify_regime(pr.schedule.params(n, 0))
                pts.append({"n": n, "p": p, "q": q, "sep": pr.schedule.sep(n),
                            "structural_info": structural_info(p, q),
                            "attr_info": attributed_info(pr.schedule.attr(n)), "regime": rep.regime})
            d["points"] = pts
        if pr.transition is not None:
            d["transition"] = pr.transition.to_dict()
        doc["preset"] = d
    else:
        doc["presets"] = {k: {"kind": v.kind, "note": v.note} for k, v in PRESETS.items()}
    print(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable))
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _common(defaults: bool) -> argparse.ArgumentParser:
    """Global flags; accepted before or after the subcommand."""
    sup = argparse.SUPPRESS
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_nonneg_int, default=0 if defaults else sup, help="master seed (default 0)")
    p.add_argument("--threads", type=_positive_int, default=(os.cpu_count() or 1) if defaults else sup,
                   help="worker threads (default: available cores); results do not depend on it")
    p.add_argument("--out-dir", default="." if defaults else sup, help="output directory (default .)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csbmprop", parents=[_common(True)],
                                     description="Message passing on contextual stochastic block models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common(False)

    def add(name, help_, epilog=""):
        return sub.add_parser(name, parents=[common], help=help_, description=help_, epilog=epilog)

    sp = add("generate", "sample one CSBM graph and write header JSON, edge list, labels and attributes")
    sp.add_argument("--n", type=_positive_int, required=True, help="number of nodes")
    sp.add_argument("--p", type=float, required=True, help="intra-class edge probability")
    sp.add_argument("--q", type=float, required=True, help="inter-class edge probability")
    sp.add_argument("--gauss-sep", type=float, help="Gaussian attributes with this ||mu - nu||")
    sp.add_argument("--laplace-norm", type=float, help="Laplace attributes with this ||mu||")
    sp.add_argument("--m", type=_positive_int, default=10, help="attribute dimension (default 10)")
    sp.add_argument("--b", type=float, default=1.0, help="Laplace scale (default 1)")
    sp.add_argument("--stem", default="graph", help="output file stem (default graph)")
    sp.set_defaults(func=cmd_generate)

    for name, sparse in (("sweep", False), ("sparse", True)):
        sp = add(name, "accuracy of the nonlinear and linear models over an n grid"
                 + (" on a sparse schedule" if sparse else ""),
                 _columns_epilog(SWEEP_COLUMNS, "List cells are ';'-separated."))
        _add_schedule_flags(sp, "sparse" if sparse else "sweep|sparse")
        sp.add_argument("--n-grid", type=_int_list, help="comma-separated n values (default: the preset's grid)")
        sp.add_argument("--trials", type=_positive_int, default=5, help="trials per n (default 5)")
        sp.add_argument("--models", help="comma list of nonlinear, linear, linear:<w> (default nonlinear,linear)")
        sp.add_argument("--swap", action="store_true", help="exchange the p and q rules")
        sp.add_argument("--stem", help="output file stem (default: preset or command name)")
        sp.set_defaults(func=cmd_sweep, sparse=sparse)

    sp = add("wsweep", "linear-model accuracy over a grid of neighbor weights w",
             _columns_epilog(WSWEEP_COLUMNS))
    _add_schedule_flags(sp, "wsweep")
    sp.add_argument("--w-grid", type=_float_list, default=W_GRID, help="comma-separated weights (default 0.5,1,2,10)")
    sp.add_argument("--n-grid", type=_int_list, help="comma-separated n values (default: the preset's grid)")
    sp.add_argument("--trials", type=_positive_int, default=5, help="trials per n (default 5)")
    sp.add_argument("--stem", help="output file stem")
    sp.set_defaults(func=cmd_wsweep)

    sp = add("transfer", "error increase when test-time class means are rotated",
             _columns_epilog(TRANSFER_COLUMNS))
    _add_schedule_flags(sp, "transfer")
    sp.add_argument("--n", type=_positive_int, help="number of nodes (default: preset value, else 20000)")
    sp.add_argument("--intensities", type=_float_list, default=(0.01, 0.02, 0.05, 0.1, 0.2),
                    help="comma-separated perturbation intensities")
    sp.add_argument("--trials", type=_positive_int, default=20, help="trials (default 20)")
    sp.add_argument("--stem", help="output file stem")
    sp.set_defaults(func=cmd_transfer)

    names = ", ".join(k for k, v in PRESETS.items() if v.kind == "transition")
    sp = add("transition", "accuracy surface over structural and attributed information",
             _columns_epilog(TRANSITION_COLUMNS))
    sp.add_argument("--preset", help=f"named parameter block: {names}")
    sp.add_argument("--n", type=_positive_int, help="number of nodes (default 20000)")
    sp.add_argument("--fixed", type=float, help="the fixed edge probability (default 5e-3)")
    sp.add_argument("--struct-points", type=_positive_int, help="points on the swept probability axis (default 12)")
    sp.add_argument("--sep-min", type=float, help="smallest attribute level (default 1e-4)")
    sp.add_argument("--sep-max", type=float, help="largest attribute level (default 10)")
    sp.add_argument("--sep-points", type=_positive_int, help="points on the attribute axis (default 12)")
    sp.add_argument("--heterophilic", action="store_true", help="sweep q instead of p")
    sp.add_argument("--m", type=_positive_int, help="attribute dimension (default 10)")
    sp.add_argument("--family", choices=("gaussian", "laplace"), help="attribute family (default gaussian)")
    sp.add_argument("--b", type=float, help="Laplace scale (default 1)")
    sp.add_argument("--trials", type=_positive_int, default=5, help="trials (default 5)")
    sp.add_argument("--stem", help="output file stem")
    sp.set_defaults(func=cmd_transition)

    from .realdata import REAL_COLUMNS

    sp = add("real", "trained-model accuracy on a real topology with synthetic attributes",
             _columns_epilog(REAL_COLUMNS, "Variants: a nonlinear, b psi-only, c phi-only, linear."))
    sp.add_argument("--edges", help="edge list, one 'u v' pair per line, '#' comments allowed")
    sp.add_argument("--labels", help="one integer class per line")
    sp.add_argument("--content", help="LINQS .content file")
    sp.add_argument("--cites", help="LINQS .cites file")
    sp.add_argument("--name", help="dataset name (default: file stem)")
    sp.add_argument("--rule", default="0",
                    help="class rule: K (K-vs-all), A,B/C,D, 'several' or a dataset name (default 0)")
    sp.add_argument("--family", choices=("gaussian", "laplace"), default="gaussian")
    sp.add_argument("--levels", type=_float_list, default=(0.1, 0.5, 1.0, 2.0),
                    help="attribute levels: ||mu - nu|| (Gaussian) or ||mu|| (Laplace)")
    sp.add_argument("--models", help="comma list of variants (default: all for the family)")
    sp.add_argument("--trials", type=_positive_int, default=5)
    sp.add_argument("--m", type=_positive_int, default=10)
    sp.add_argument("--b", type=float, default=1.0)
    _add_train_flags(sp)
    sp.add_argument("--stem", help="output file stem")
    sp.set_defaults(func=cmd_real)

    sp = add("train", "train one learned propagation model; writes a checkpoint and a loss trace")
    sp.add_argument("--graph", help="header JSON written by 'generate' (otherwise a CSBM is sampled)")
    sp.add_argument("--n", type=_positive_int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--gauss-sep", type=float)
    sp.add_argument("--laplace-norm", type=float)
    sp.add_argument("--m", type=_positive_int, default=10)
    sp.add_argument("--b", type=float, default=1.0)
    sp.add_argument("--family", choices=("gaussian", "laplace"), help="attribute family of --graph")
    sp.add_argument("--variant", choices=("a", "b", "c", "linear"), default="a")
    sp.add_argument("--psi", choices=("linear", "clamp"), help="psi form (default depends on variant and family)")
    sp.add_argument("--init-threshold", type=float, default=0.2)
    sp.add_argument("--init-clamp", type=float, default=0.2)
    sp.add_argument("--neighbor-weight", type=float, default=1.0, help="fixed weight for linear propagation")
    sp.add_argument("--heterophilic", action="store_true", help="negative message direction for phi")
    _add_train_flags(sp)
    sp.add_argument("--stem", default="train", help="output file stem (default train)")
    sp.set_defaults(func=cmd_train)

    sp = add("verify", "self-checks: MAP oracle, moment formulas, gradients and phi properties",
             "Prints the moment table as CSV, then one PASS/FAIL line per check; exit status 1 on any failure.")
    sp.add_argument("--checks", help="comma list from map, moments, gradients, phi (default all)")
    sp.add_argument("--samples", type=_positive_int, default=10**6, help="Monte Carlo samples per moment point")
    sp.set_defaults(func=cmd_verify)

    sp = add("info", "print version, generator and preset details as JSON")
    sp.add_argument("--preset", help="resolve one preset over its n grid")
    sp.set_defaults(func=cmd_info)
    return parser


def _add_train_flags(sp):
    g = sp.add_argument_group("training")
    g.add_argument("--epochs", type=_nonneg_int, default=500)
    g.add_argument("--lr", type=float, default=1e-2)
    g.add_argument("--weight-decay", type=float, default=5e-4)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        if args.func is cmd_sweep:
            return cmd_sweep(args, args.sparse)
        return args.func(args)
    except (CliError, ValueError, OSError, FloatingPointError) as e:
        msg = str(e) or type(e).__name__
        print(f"csbmprop {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
