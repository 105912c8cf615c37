"""Ensemble experiments: rounds-to-target sweeps, per-round tables, summaries.

Output layout of :func:`run_experiment` (all inside ``out_dir``):

``records.jsonl``   one :class:`ExperimentRecord` per line, sorted by
                    (kind, n, instance index, variant) once the run completes
``timings.jsonl``   wall-clock seconds per tuned round, keyed like the records
``summary.csv``     kind, n, variant, target, mean, stddev, count, capped, ...
``manifest.json``   config, config hash, package version, timestamps
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graphs import (ProblemInstance, ProblemKind, all_four_vertex_graphs, generate_erdos_renyi,
                     instance_seed)
from .qaoa import Variant
from .tuner import InductiveTuner, TunedRound, TunerConfig, default_strategy

SCHEMA_VERSION = 1
CAP_EXCEEDED = "cap-exceeded"


@dataclass
class ExperimentConfig:
    kinds: list = field(default_factory=lambda: ["densest"])
    n_values: list = field(default_factory=lambda: [4, 6, 8])
    k: int | str = "half"            # "half" means k = n // 2
    edge_probability: float = 0.5
    instances_per_n: int = 40
    exhaustive_n4: bool = True       # all 64 labelled graphs at n = 4
    variants: list = field(default_factory=lambda: ["Clique-Obj", "Grover-Th"])
    strategies: dict = field(default_factory=dict)  # variant name -> tuner strategy
    targets: list = field(default_factory=lambda: [0.99, 0.95])
    p_cap: int | None = None         # None: ceil(4 sqrt(C(n, k))) per instance
    tuner: dict = field(default_factory=dict)
    master_seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.kinds = [ProblemKind.parse(k).value for k in self.kinds]
        self.variants = [Variant.parse(v).name for v in self.variants]
        self.targets = [float(t) for t in self.targets]
        if not self.targets or any(not 0 < t <= 1 for t in self.targets):
            raise ValueError(f"targets must lie in (0, 1], got {self.targets}")
        if self.p_cap is not None and self.p_cap < 1:
            raise ValueError("p_cap must be >= 1")
        if self.instances_per_n < 1:
            raise ValueError("instances_per_n must be >= 1")
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {self.schema_version}")
        TunerConfig.from_dict(self.tuner)
        self.strategies = {Variant.parse(k).name: v for k, v in self.strategies.items()}

    def k_for(self, n: int) -> int:
        return n // 2 if self.k == "half" else int(self.k)

    def tuner_config(self) -> TunerConfig:
        return TunerConfig.from_dict(self.tuner)

    def strategy_for(self, variant) -> str:
        v = Variant.parse(variant)
        return self.strategies.get(v.name, default_strategy(v))

    def p_cap_for(self, n: int, k: int) -> int:
        if self.p_cap is not None:
            return self.p_cap
        return math.ceil(4 * math.sqrt(math.comb(n, k)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known - {"out_dir", "jobs"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def ensemble(config: ExperimentConfig, kind, n: int) -> list[tuple[int, ProblemInstance]]:
    """``(index, instance)`` pairs for one (kind, n) cell of the experiment."""
    kind = ProblemKind.parse(kind)
    k = config.k_for(n)
    if n == 4 and config.exhaustive_n4:
        return [(i, ProblemInstance(g, kind, k, None))
                for i, g in enumerate(all_four_vertex_graphs())]
    out = []
    for i in range(config.instances_per_n):
        s = instance_seed(config.master_seed, i, n)
        out.append((i, ProblemInstance(generate_erdos_renyi(n, config.edge_probability, s),
                                       kind, k, s)))
    return out


@dataclass
class ExperimentRecord:
    kind: str
    n: int
    k: int
    index: int
    seed: int | None
    variant: str
    strategy: str
    p_cap: int
    rounds: list                    # TunedRound per p = 0..p_final
    rounds_to_target: dict          # str(target) -> int | CAP_EXCEEDED
    instance: dict = field(default_factory=dict)
    config_hash: str = ""
    master_seed: int = 0

    @property
    def key(self) -> tuple:
        return (self.kind, self.n, self.index, self.variant)

    @property
    def ratios(self) -> list[float]:
        return [r.approx_ratio for r in self.rounds]

    def to_dict(self) -> dict:
        rounds = []
        for r in self.rounds:
            d = r.to_dict()
            extra = {k: v for k, v in d.get("extra", {}).items() if k != "per_threshold"}
            if extra:
                d["extra"] = extra
            else:
                d.pop("extra", None)
            rounds.append(d)
        return {"kind": self.kind, "n": self.n, "k": self.k, "index": self.index,
                "seed": self.seed, "variant": self.variant, "strategy": self.strategy,
                "p_cap": self.p_cap, "rounds_to_target": self.rounds_to_target,
                "rounds": rounds, "instance": self.instance,
                "config_hash": self.config_hash, "master_seed": self.master_seed}

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentRecord:
        return cls(d["kind"], d["n"], d["k"], d["index"], d["seed"], d["variant"],
                   d["strategy"], d["p_cap"], [TunedRound.from_dict(r) for r in d["rounds"]],
                   d["rounds_to_target"], d.get("instance", {}), d.get("config_hash", ""),
                   d.get("master_seed", 0))


def first_crossing(ratios, target: float):
    """Smallest p with ``ratios[p] >= target``, else :data:`CAP_EXCEEDED`."""
    for p, r in enumerate(ratios):
        if r >= target:
            return p
    return CAP_EXCEEDED


def rounds_to_target(instance: ProblemInstance, variant, target, config: TunerConfig | None = None,
                     strategy: str | None = None, p_cap: int | None = None, index: int = 0,
                     timings: list | None = None) -> ExperimentRecord:
    """Tune p = 1, 2, ... until every target is reached or ``p_cap`` rounds.

    ``target`` may be a single ratio or a list; the record holds the first
    crossing for each.
    """
    targets = [float(target)] if np.ndim(target) == 0 else [float(t) for t in target]
    if any(not 0 < t <= 1 for t in targets):
        raise ValueError(f"targets must lie in (0, 1], got {targets}")
    variant = Variant.parse(variant)
    if p_cap is None:
        p_cap = math.ceil(4 * math.sqrt(math.comb(instance.n, instance.k)))
    tuner = InductiveTuner(instance, variant, config, strategy)
    goal = max(targets)
    while tuner.p < p_cap and tuner.rounds[-1].approx_ratio < goal:
        t0 = time.perf_counter()
        tuner.step()
        if timings is not None:
            timings.append(time.perf_counter() - t0)
    ratios = [r.approx_ratio for r in tuner.rounds]
    return ExperimentRecord(instance.kind.value, instance.n, instance.k, index, instance.seed,
                            variant.name, tuner.strategy, p_cap, tuner.rounds,
                            {repr(t): first_crossing(ratios, t) for t in targets},
                            instance.to_dict())


def ensemble_stats(values) -> tuple[float, float]:
    """Sample mean and (n-1) standard deviation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError(f"need at least 2 values for a standard deviation, got {v.size}")
    return float(v.mean()), float(v.std(ddof=1))


def summarize(records, targets=None) -> list[dict]:
    """Per (kind, n, variant, target) statistics of rounds-to-target.

    Instances that hit the round cap are counted in ``capped`` and left out
    of the mean and standard deviation.
    """
    cells = {}
    for rec in records:
        for t, val in rec.rounds_to_target.items():
            if targets is not None and float(t) not in targets:
                continue
            cells.setdefault((rec.kind, rec.n, rec.k, rec.variant, float(t)), []).append(
                (val, rec.config_hash, rec.master_seed))
    rows = []
    for (kind, n, k, variant, t), vals in sorted(cells.items()):
        done = [v for v, _, _ in vals if v != CAP_EXCEEDED]
        mean = std = float("nan")
        if len(done) >= 2:
            mean, std = ensemble_stats(done)
        elif len(done) == 1:
            mean, std = float(done[0]), 0.0
        rows.append({"kind": kind, "n": n, "k": k, "variant": variant, "target": t, "mean": mean,
                     "stddev": std, "count": len(done), "capped": len(vals) - len(done),
                     "config_hash": vals[0][1], "master_seed": vals[0][2]})
    return rows


SUMMARY_FIELDS = ["kind", "n", "k", "variant", "target", "mean", "stddev", "count", "capped",
                  "config_hash", "master_seed"]


def write_summary(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_summary(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            row["n"] = int(row["n"])
            row["k"] = int(row["k"])
            row["count"] = int(row["count"])
            row["capped"] = int(row["capped"])
            row["master_seed"] = int(row["master_seed"])
            for key in ("target", "mean", "stddev"):
                row[key] = float(row[key])
            rows.append(row)
    return rows


def round_by_round_table(instances, variants, p_max: int, config: TunerConfig | None = None,
                         strategies: dict | None = None) -> dict:
    """Mean approximation ratio per round ``0..p_max`` for each variant.

    Every instance is tuned for exactly ``p_max`` rounds (no early stop).
    """
    strategies = strategies or {}
    table = {}
    for v in variants:
        v = Variant.parse(v)
        rows = []
        for inst in instances:
            tuner = InductiveTuner(inst, v, config, strategies.get(v.name))
            tuner.run_until(None, p_max)
            rows.append([r.approx_ratio for r in tuner.rounds])
        table[v.name] = np.mean(np.asarray(rows), axis=0)
    return table


def _job(args):
    inst, index, variant, targets, tuner_dict, strategy, p_cap = args
    timings = []
    rec = rounds_to_target(inst, variant, targets, TunerConfig.from_dict(tuner_dict), strategy,
                           p_cap, index, timings)
    return rec.to_dict(), timings


def _sort_key(d):
    return (d["kind"], d["n"], d["index"], d["variant"])


def _read_jsonl(path):
    if not Path(path).exists():
        return []
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


class ConfigMismatch(ValueError):
    """Existing results were produced by a different configuration."""


def run_experiment(config: ExperimentConfig, out_dir, jobs: int = 1, resume: bool = True,
                   progress=None) -> list[ExperimentRecord]:
    """Run every (kind, n, instance, variant) cell, appending records as they finish.

    Re-invocation skips cells already present in ``records.jsonl``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config.config_hash()
    rec_path, tim_path = out / "records.jsonl", out / "timings.jsonl"
    manifest_path = out / "manifest.json"
    existing = _read_jsonl(rec_path) if resume else []
    for d in existing:
        if d.get("config_hash") != chash:
            raise ConfigMismatch(f"{rec_path} holds results for config {d.get('config_hash')}, "
                                 f"not {chash}")
    if not resume:
        for pth in (rec_path, tim_path):
            if pth.exists():
                pth.unlink()
    done = {_sort_key(d) for d in existing}
    manifest = {"config": config.to_dict(), "config_hash": chash,
                "master_seed": config.master_seed, "package_version": _version(),
                "started": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    if manifest_path.exists() and resume:
        old = json.loads(manifest_path.read_text())
        manifest["started"] = old.get("started", manifest["started"])
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True))

    tasks = []
    tuner_dict = config.tuner_config().to_dict()
    for kind in config.kinds:
        for n in config.n_values:
            for index, inst in ensemble(config, kind, n):
                for v in config.variants:
                    key = (ProblemKind.parse(kind).value, n, index, v)
                    if key in done:
                        continue
                    tasks.append((inst, index, v, config.targets, tuner_dict,
                                  config.strategy_for(v), config.p_cap_for(n, inst.k)))

    def store(d, timings):
        d["config_hash"] = chash
        d["master_seed"] = config.master_seed
        with open(rec_path, "a") as fh:
            fh.write(json.dumps(d, sort_keys=True) + "\n")
        with open(tim_path, "a") as fh:
            fh.write(json.dumps({"key": list(_sort_key(d)), "seconds": timings}) + "\n")
        if progress:
            progress(d)

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for d, timings in pool.map(_job, tasks):
                store(d, timings)
    else:
        for t in tasks:
            store(*_job(t))

    # deterministic final order, independent of scheduling
    dicts = sorted(_read_jsonl(rec_path), key=_sort_key)
    tmp = rec_path.with_suffix(".tmp")
    tmp.write_text("".join(json.dumps(d, sort_keys=True) + "\n" for d in dicts))
    os.replace(tmp, rec_path)
    records = [ExperimentRecord.from_dict(d) for d in dicts]
    write_summary(out / "summary.csv", summarize(records))
    manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    manifest["records"] = len(records)
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return records


def load_records(path) -> list[ExperimentRecord]:
    return [ExperimentRecord.from_dict(d) for d in _read_jsonl(path)]


def _version() -> str:
    from . import __version__
    return __version__
