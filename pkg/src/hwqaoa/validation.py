"""Agreement checks between the subspace simulator and the full-space reference.

:func:`validate` draws random instances and angle schedules, runs both
simulators and reports the worst deviation per variant. A mixer override
(:func:`corrupt_mixer_sign`) lets the suite be pointed at a deliberately
broken operator to confirm that it notices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import ProblemInstance, ProblemKind, generate_erdos_renyi, instance_seed
from .oracle import align_global_phase, full_space_run, weight_sector_leakage
from .operators import MixerKind, MixerOperator, get_mixer
from .qaoa import VARIANTS, AngleSchedule, Simulator, Variant
from .subspace import build_cost_vector, build_index

AMPLITUDE_TOL = 1e-10
NORM_TOL = 1e-12
LEAKAGE_TOL = 1e-12


def corrupt_mixer_sign(op: MixerOperator) -> MixerOperator:
    """The same mixer with its Hamiltonian negated (a sign bug)."""
    h = -op.matrix()
    w, q = np.linalg.eigh(h)
    return MixerOperator(op.kind, op.n, op.k, op.dim, w, q)


@dataclass
class CheckResult:
    variant: str
    draws: int = 0
    max_amplitude_dev: float = 0.0
    max_norm_dev: float = 0.0
    max_leakage: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.max_amplitude_dev <= AMPLITUDE_TOL and self.max_norm_dev <= NORM_TOL
                and self.max_leakage <= LEAKAGE_TOL)


def _embed(psi_sub, index, n):
    full = np.zeros(1 << n, dtype=np.complex128)
    full[index.states] = psi_sub
    return full


def random_draw(rng: np.random.Generator, n: int, kind, master_seed: int, draw: int):
    """One random (instance, schedule, threshold) triple."""
    kind = ProblemKind(kind)
    seed = instance_seed(master_seed, draw, n)
    graph = generate_erdos_renyi(n, 0.5, seed)
    instance = ProblemInstance(graph, kind, n // 2, seed)
    p = int(rng.integers(1, 5))
    schedule = AngleSchedule(rng.uniform(0, 2 * np.pi, p), rng.uniform(0, 2 * np.pi, p))
    return instance, schedule


def validate(n_values=(4, 6, 8), draws_per_n: int = 6, seed: int = 0, variants=VARIANTS,
             corrupt: MixerKind | str | None = None) -> list[CheckResult]:
    """Compare subspace and full-space evolutions for each variant.

    ``draws_per_n`` random (instance, schedule) pairs are drawn per n and
    per variant; problem kinds cycle through densest, cover and bisection.
    ``corrupt`` names a mixer whose operator is replaced by its sign-flipped
    version in the subspace path only.
    """
    corrupt = None if corrupt is None else MixerKind.parse(corrupt)
    kinds = [k.value for k in ProblemKind]
    rng = np.random.default_rng(seed)
    results = []
    for variant in (Variant.parse(v) for v in variants):
        res = CheckResult(variant.name)
        for n in n_values:
            index = build_index(n, n // 2)
            mixer = get_mixer(variant.mixer, n, n // 2)
            if variant.mixer is corrupt:
                mixer = corrupt_mixer_sign(mixer)
            for d in range(draws_per_n):
                instance, schedule = random_draw(rng, n, kinds[d % 3], seed, d)
                cost = build_cost_vector(instance, index)
                threshold = None
                if variant.thresholded:
                    threshold = int(rng.integers(cost.c_min - 1, cost.c_max + 1))
                sim = Simulator(instance, variant, mixer=mixer)
                psi = sim.run(schedule, threshold, keep_state=True).final_state
                ref = full_space_run(instance, variant, schedule, threshold)
                got = align_global_phase(_embed(psi, index, n), ref)
                dev = float(np.max(np.abs(got - ref)))
                res.max_amplitude_dev = max(res.max_amplitude_dev, dev)
                res.max_norm_dev = max(res.max_norm_dev, abs(float(np.vdot(psi, psi).real) - 1))
                res.max_leakage = max(res.max_leakage, weight_sector_leakage(ref, n, n // 2))
                res.draws += 1
                if dev > AMPLITUDE_TOL:
                    res.failures.append({"n": n, "kind": instance.kind.value, "draw": d,
                                         "deviation": dev})
        results.append(res)
    return results


def format_report(results) -> str:
    lines = [f"{'variant':<12} {'draws':>5} {'max |dpsi|':>11} {'max |1-norm|':>12} "
             f"{'max leak':>9}  result"]
    for r in results:
        lines.append(f"{r.variant:<12} {r.draws:>5} {r.max_amplitude_dev:>11.2e} "
                     f"{r.max_norm_dev:>12.2e} {r.max_leakage:>9.1e}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
