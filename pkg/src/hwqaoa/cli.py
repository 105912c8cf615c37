"""Command-line interface: ``hwqaoa <command> [options]``.

Settings are resolved as flag > environment (``HWQAOA_<FLAG>``, e.g.
``HWQAOA_JOBS=4``) > ``--config`` JSON > built-in default.

Exit codes: 0 success, 1 failed validation, 2 malformed input,
3 dimension budget exceeded.
"""
from __future__ import annotations

import argparse
import cmath
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .fitting import ANSATZE, fit_scaling
from .graphs import ProblemKind, load_instances, random_instances, save_instances
from .harness import (ConfigMismatch, ExperimentConfig, read_summary, rounds_to_target,
                      run_experiment, write_summary, summarize, load_records)
from .operators import MixerKind
from .qaoa import AngleSchedule, Simulator, Variant
from .subspace import CapacityError, build_index
from .tuner import InductiveTuner, TunerConfig
from .validation import format_report, validate

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
ENV_PREFIX = "HWQAOA_"

# flags that may come from the environment, with their parsers
_ENV_FLAGS = {"config": str, "jobs": int, "seed": int, "out_dir": str, "variant": str,
              "target": str, "p_max": int, "n": str, "k": str, "kind": str}


class InputError(ValueError):
    """Malformed command-line input; reported with exit code 2."""


def _int_list(s) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    return [int(v) for v in str(s).replace(" ", "").split(",") if v]


def _float_list(s) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(v) for v in str(s).replace(" ", "").split(",") if v]


def _apply_env(args: argparse.Namespace) -> None:
    for name, conv in _ENV_FLAGS.items():
        if getattr(args, name, "absent") is None:
            raw = os.environ.get(ENV_PREFIX + name.upper())
            if raw is not None:
                try:
                    setattr(args, name, conv(raw))
                except ValueError as exc:
                    raise InputError(f"{ENV_PREFIX}{name.upper()}={raw!r}: {exc}") from None


def _load_config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"--config {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise InputError(f"--config {args.config}: expected a JSON object")
    return data


def _pick(args, cfg: dict, name: str, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def _single(value, flag: str) -> int:
    vals = _int_list(value)
    if len(vals) != 1:
        raise InputError(f"{flag} expects a single integer, got {value!r}")
    return vals[0]


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1))


# -- instances ---------------------------------------------------------------

def _instance_from_args(args, cfg):
    """Load ``--instance`` (with ``--index``) or draw one seeded G(n, p) graph."""
    path = _pick(args, cfg, "instance")
    if path:
        try:
            insts = load_instances(path)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"--instance {path}: {exc}") from None
        idx = int(_pick(args, cfg, "index", 0))
        if not 0 <= idx < len(insts):
            raise InputError(f"--index {idx} out of range for {len(insts)} instance(s)")
        return insts[idx]
    n = _pick(args, cfg, "n")
    if n is None:
        raise InputError("give --instance FILE or --n (with --kind, --k, --seed)")
    n = _single(n, "--n")
    k = _pick(args, cfg, "k", "half")
    k = n // 2 if k == "half" else _single(k, "--k")
    kind = _pick(args, cfg, "kind", "densest")
    seed = int(_pick(args, cfg, "seed", 0))
    return random_instances(kind, n, k, 1, seed, float(_pick(args, cfg, "edge_probability", 0.5)))[0]


def cmd_gen_instances(args) -> int:
    cfg = _load_config(args)
    kind = _pick(args, cfg, "kind", "densest")
    seed = int(_pick(args, cfg, "seed", cfg.get("master_seed", 0)))
    count = int(_pick(args, cfg, "count", 40))
    ep = float(_pick(args, cfg, "edge_probability", 0.5))
    out_dir = Path(_pick(args, cfg, "out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for n in _int_list(_pick(args, cfg, "n", cfg.get("n_values", [8]))):
        k = _pick(args, cfg, "k", "half")
        k = n // 2 if k == "half" else _single(k, "--k")
        insts = random_instances(kind, n, k, count, seed, ep)
        path = out_dir / f"instances_{ProblemKind.parse(kind).value}_n{n}_k{k}.json"
        save_instances(path, insts)
        written.append(str(path))
    _emit({"written": written, "count": count, "master_seed": seed})
    return EXIT_OK


# -- single runs ---------------------------------------------------------------

def _schedule_from_args(args, cfg) -> AngleSchedule:
    p = _pick(args, cfg, "p")
    if p is not None and int(p) == 0:
        return AngleSchedule.empty()
    angles = _pick(args, cfg, "angles")
    if angles is None:
        raise InputError("--angles is required unless --p 0 (JSON {\"betas\": [...], "
                         "\"gammas\": [...]} or a file holding it)")
    if isinstance(angles, str):
        text = Path(angles).read_text() if Path(angles).is_file() else angles
        try:
            angles = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"--angles: {exc}") from None
    try:
        sched = AngleSchedule.from_dict(angles)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"--angles: {exc}") from None
    if p is not None and sched.p != int(p):
        raise InputError(f"--p {p} disagrees with {sched.p} angle pairs in --angles")
    return sched


def _dump_state(path, index, psi) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "bitstring", "probability", "phase"])
        for r, a in enumerate(psi):
            w.writerow([r, index.bitstring(r), repr(float(abs(a) ** 2)), repr(cmath.phase(a))])


def cmd_run(args) -> int:
    cfg = _load_config(args)
    inst = _instance_from_args(args, cfg)
    variant = _variant(_pick(args, cfg, "variant", "Clique-Obj"))
    threshold = _pick(args, cfg, "threshold")
    sched = _schedule_from_args(args, cfg)
    if variant.thresholded and threshold is None and sched.p > 0:
        raise InputError(f"--threshold is required for the thresholded variant {variant.name}")
    sim = Simulator(inst, variant)
    res = sim.run(sched, None if threshold is None else int(threshold),
                  keep_state=bool(args.state_csv))
    if args.state_csv:
        _dump_state(args.state_csv, build_index(inst.n, inst.k), res.final_state)
    _emit({"variant": variant.name, "n": inst.n, "k": inst.k, "kind": inst.kind.value,
           "p": sched.p, "threshold": threshold, "expectation": res.expectation,
           "approx_ratio": res.approx_ratio, "per_round_ratios": list(res.per_round_ratios),
           "c_max": sim.cost.c_max})
    return EXIT_OK


def _variant(s) -> Variant:
    try:
        return Variant.parse(s)
    except ValueError as exc:
        raise InputError(f"--variant {s!r}: {exc}") from None


def cmd_tune(args) -> int:
    cfg = _load_config(args)
    inst = _instance_from_args(args, cfg)
    variant = _variant(_pick(args, cfg, "variant", "Clique-Obj"))
    tuner_cfg = TunerConfig.from_dict({**cfg.get("tuner", {}),
                                       **({"seed": args.seed} if args.seed is not None else {})})
    p_max = _pick(args, cfg, "p_max")
    target = _pick(args, cfg, "target")
    if p_max is None and target is None:
        raise InputError("tune needs --p-max and/or --target")
    tuner = InductiveTuner(inst, variant, tuner_cfg, _pick(args, cfg, "strategy"))
    if target is not None:
        targets = _float_list(target)
        rec = rounds_to_target(inst, variant, targets, tuner_cfg, tuner.strategy,
                               None if p_max is None else int(p_max))
        rounds = rec.rounds
        extra = {"rounds_to_target": rec.rounds_to_target}
    else:
        tuner.run_until(None, int(p_max))
        rounds = tuner.rounds
        extra = {}
    out = {"variant": variant.name, "strategy": tuner.strategy, "instance": inst.to_dict(),
           "rounds": [_slim(r.to_dict()) for r in rounds], **extra}
    _emit(out)
    return EXIT_OK


def _slim(d):
    d.get("extra", {}).pop("per_threshold", None)
    return d


# -- experiments ---------------------------------------------------------------

def _experiment_config(args, cfg) -> ExperimentConfig:
    d = {k: v for k, v in cfg.items() if k not in ("out_dir", "jobs")}
    if args.n is not None:
        d["n_values"] = _int_list(args.n)
    if args.k is not None:
        d["k"] = args.k if args.k == "half" else _single(args.k, "--k")
    if args.kind is not None:
        d["kinds"] = [s for s in str(args.kind).split(",") if s]
    if args.variant is not None:
        d["variants"] = [s for s in str(args.variant).split(",") if s]
    if args.target is not None:
        d["targets"] = _float_list(args.target)
    if args.p_max is not None:
        d["p_cap"] = int(args.p_max)
    if args.seed is not None:
        d["master_seed"] = int(args.seed)
    if getattr(args, "instances", None) is not None:
        d["instances_per_n"] = int(args.instances)
    try:
        return ExperimentConfig.from_dict(d)
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"experiment config: {exc}") from None


def cmd_experiment(args) -> int:
    cfg = _load_config(args)
    config = _experiment_config(args, cfg)
    out_dir = _pick(args, cfg, "out_dir", "results")
    jobs = int(_pick(args, cfg, "jobs", os.cpu_count() or 1))

    def progress(d):
        print(f"{d['kind']} n={d['n']} #{d['index']} {d['variant']}: {d['rounds_to_target']}",
              file=sys.stderr)

    try:
        records = run_experiment(config, out_dir, jobs, resume=not args.fresh, progress=progress)
    except ConfigMismatch as exc:
        raise InputError(f"{exc}; use a new --out-dir or --fresh") from None
    _emit({"out_dir": str(out_dir), "records": len(records), "config_hash": config.config_hash()})
    return EXIT_OK


# -- fitting and plot data -------------------------------------------------------

def _summary_rows(args, cfg) -> list[dict]:
    sources = args.summary or []
    out_dir = _pick(args, cfg, "out_dir")
    if not sources and out_dir:
        base = Path(out_dir)
        if (base / "summary.csv").exists():
            sources = [str(base / "summary.csv")]
        elif (base / "records.jsonl").exists():
            rows = summarize(load_records(base / "records.jsonl"))
            write_summary(base / "summary.csv", rows)
            sources = [str(base / "summary.csv")]
    if not sources:
        raise InputError("no summary found: give --summary FILE or --out-dir holding summary.csv")
    rows = []
    for s in sources:
        try:
            rows.extend(read_summary(s))
        except (OSError, KeyError, ValueError) as exc:
            raise InputError(f"--summary {s}: {exc}") from None
    hashes = {r["config_hash"] for r in rows}
    if len(hashes) > 1:
        raise InputError(f"summaries come from different configs {sorted(hashes)}; refusing to fit")
    expect = None
    if cfg:
        expect = ExperimentConfig.from_dict(cfg).config_hash()
    if args.expect_hash:
        expect = args.expect_hash
    if expect is not None and hashes and expect not in hashes:
        raise InputError(f"summary config hash {hashes.pop()} does not match expected {expect}")
    return rows


def _x_of(row, xaxis):
    return math.comb(row["n"], row["k"]) if xaxis == "dim" else row["n"]


def _fits(args, cfg, rows):
    ansatz = args.ansatz
    xaxis = args.x or ("dim" if ansatz == "monomial" else "n")
    targets = _float_list(args.target) if args.target else sorted({r["target"] for r in rows})
    variants = [s for s in (args.variant or "").split(",") if s] or \
        sorted({r["variant"] for r in rows})
    variants = [_variant(v).name for v in variants]
    kinds = [ProblemKind.parse(s).value for s in (args.kind or "").split(",") if s] or \
        sorted({r["kind"] for r in rows})
    fits = []
    for kind in kinds:
        for v in variants:
            for t in targets:
                cell = sorted((r for r in rows if r["kind"] == kind and r["variant"] == v
                               and r["target"] == t and r["count"] >= 1
                               and np.isfinite(r["mean"])), key=lambda r: r["n"])
                if len(cell) < 4:
                    continue
                fit = fit_scaling([r["mean"] for r in cell], [r["stddev"] for r in cell],
                                  [_x_of(r, xaxis) for r in cell], ansatz)
                fits.append({"kind": kind, "variant": v, "target": t, "x": xaxis,
                             "config_hash": cell[0]["config_hash"],
                             "master_seed": cell[0]["master_seed"], "cells": cell,
                             **fit.to_dict(), "_fit": fit})
    return fits


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    rows = _summary_rows(args, cfg)
    fits = _fits(args, cfg, rows)
    out = [{k: v for k, v in f.items() if k not in ("_fit", "cells")} for f in fits]
    out_dir = _pick(args, cfg, "out_dir")
    if out_dir:
        Path(out_dir, f"fits_{args.ansatz}.json").write_text(json.dumps(out, indent=1))
    _emit(out)
    return EXIT_OK


def cmd_plot_data(args) -> int:
    cfg = _load_config(args)
    rows = _summary_rows(args, cfg)
    fits = _fits(args, cfg, rows)
    out_dir = Path(_pick(args, cfg, "out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    tidy, curves = out_dir / f"plot_{args.ansatz}.csv", out_dir / f"curve_{args.ansatz}.csv"
    with open(tidy, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "n", "variant", "target", "mean", "stddev", "fit_curve_value",
                    "config_hash", "master_seed"])
        for f in fits:
            for r in f["cells"]:
                w.writerow([f["kind"], r["n"], f["variant"], f["target"], repr(r["mean"]),
                            repr(r["stddev"]), repr(float(f["_fit"].predict(_x_of(r, f["x"])))),
                            f["config_hash"], f["master_seed"]])
    with open(curves, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "variant", "target", "n", "x", "fit_curve_value", "config_hash",
                    "master_seed"])
        for f in fits:
            ns = [r["n"] for r in f["cells"]]
            frac = f["cells"][-1]["k"] / f["cells"][-1]["n"]
            for n in np.linspace(min(ns), max(ns), args.samples):
                x = n
                if f["x"] == "dim":
                    # C(n, frac * n) continued smoothly through the gamma function
                    k = frac * n
                    x = math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))
                w.writerow([f["kind"], f["variant"], f["target"], repr(float(n)), repr(float(x)),
                            repr(float(f["_fit"].predict(x))), f["config_hash"],
                            f["master_seed"]])
    _emit({"tidy": str(tidy), "curves": str(curves), "fits": len(fits)})
    return EXIT_OK


# -- validation ------------------------------------------------------------------

def cmd_validate(args) -> int:
    ns = _int_list(args.n) if args.n is not None else [4, 6, 8]
    if any(n > 8 or n < 2 for n in ns):
        raise InputError("validate runs at 2 <= n <= 8")
    variants = [s for s in (args.variant or "").split(",") if s] or None
    kwargs = {"variants": [_variant(v) for v in variants]} if variants else {}
    results = validate(ns, args.draws, args.seed or 0, corrupt=args.corrupt_mixer, **kwargs)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# -- parser --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--variant", help="e.g. Clique-Obj, Grover-Th (comma list where allowed)")
    p.add_argument("--target", help="target approximation ratio(s), comma separated")
    p.add_argument("--p-max", dest="p_max", type=int, help="round cap")
    p.add_argument("--n", help="vertex count (comma list for experiments)")
    p.add_argument("--k", help="subset size, or 'half'")
    p.add_argument("--kind", help="densest | cover | bisection")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hwqaoa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-instances", help="write seeded G(n, p) instance files")
    _common(p)
    p.add_argument("--count", type=int)
    p.add_argument("--edge-probability", dest="edge_probability", type=float)
    p.set_defaults(func=cmd_gen_instances)

    for name, func, help_ in (("run", cmd_run, "evolve one schedule and print its metrics"),
                              ("tune", cmd_tune, "tune angles round by round")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--instance", help="instance JSON file")
        p.add_argument("--index", type=int, help="which instance in a list file (default 0)")
        p.add_argument("--edge-probability", dest="edge_probability", type=float)
        p.set_defaults(func=func)
    run_p = sub.choices["run"]
    run_p.add_argument("--angles", help='JSON {"betas": [...], "gammas": [...]} or a file')
    run_p.add_argument("--threshold", type=int, help="threshold for -Th variants")
    run_p.add_argument("--p", type=int, help="round count; 0 gives Dicke-state metrics")
    run_p.add_argument("--state-csv", dest="state_csv",
                       help="write rank, bitstring, probability, phase per basis state")
    sub.choices["tune"].add_argument("--strategy", help="gd | bh | bh-random | pi")

    p = sub.add_parser("experiment", help="run a resumable ensemble experiment")
    _common(p)
    p.add_argument("--instances", type=int, help="instances per n")
    p.add_argument("--fresh", action="store_true", help="discard existing results in --out-dir")
    p.set_defaults(func=cmd_experiment)

    for name, func, help_ in (("fit", cmd_fit, "weighted scaling fits of a summary"),
                              ("plot-data", cmd_plot_data, "tidy CSV plus fitted curves")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--summary", action="append", help="summary.csv (repeatable)")
        p.add_argument("--ansatz", choices=ANSATZE, default="power")
        p.add_argument("--x", choices=("n", "dim"),
                       help="abscissa: n or C(n, k) (default: dim for monomial, else n)")
        p.add_argument("--expect-hash", dest="expect_hash",
                       help="refuse summaries whose config hash differs")
        p.set_defaults(func=func)
    sub.choices["plot-data"].add_argument("--samples", type=int, default=101,
                                          help="curve samples between the smallest and largest n")

    p = sub.add_parser("validate", help="subspace vs full-space agreement table")
    _common(p)
    p.add_argument("--draws", type=int, default=6, help="random draws per n and variant")
    p.add_argument("--corrupt-mixer", dest="corrupt_mixer",
                   choices=[m.value for m in MixerKind],
                   help="negative control: flip the sign of this mixer")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_env(args)
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
