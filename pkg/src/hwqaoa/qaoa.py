"""Alternating phase/mixer evolution from the Dicke state, and its metrics."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import ProblemInstance
from .operators import (DEFAULT_MAX_OPERATOR_DIM, MixerKind, apply_mixer,
                        apply_phase_separator, get_mixer)
from .subspace import CostVector, build_cost_vector, build_index, dicke_state

TWO_PI = 2.0 * math.pi


class Separator(str, enum.Enum):
    OBJECTIVE = "obj"
    THRESHOLD = "th"


@dataclass(frozen=True)
class Variant:
    mixer: MixerKind
    separator: Separator

    @property
    def name(self) -> str:
        return f"{self.mixer.label}-{self.separator.value.capitalize()}"

    @property
    def thresholded(self) -> bool:
        return self.separator is Separator.THRESHOLD

    @classmethod
    def parse(cls, s) -> Variant:
        """Parse names such as ``Clique-Obj`` or ``grover-th``."""
        if isinstance(s, cls):
            return s
        mixer, _, sep = str(s).strip().lower().partition("-")
        return cls(MixerKind.parse(mixer), Separator(sep))

    def __str__(self) -> str:
        return self.name


VARIANTS = tuple(Variant(m, s) for m in MixerKind for s in Separator)
CLIQUE_OBJ = Variant(MixerKind.CLIQUE, Separator.OBJECTIVE)
GROVER_TH = Variant(MixerKind.GROVER, Separator.THRESHOLD)


@dataclass
class AngleSchedule:
    betas: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        self.betas = np.atleast_1d(np.asarray(self.betas, dtype=np.float64)).copy()
        self.gammas = np.atleast_1d(np.asarray(self.gammas, dtype=np.float64)).copy()
        if self.betas.shape != self.gammas.shape or self.betas.ndim != 1:
            raise ValueError(f"betas {self.betas.shape} and gammas {self.gammas.shape} "
                             "must be 1-d of equal length")

    @property
    def p(self) -> int:
        return self.betas.shape[0]

    @classmethod
    def empty(cls) -> AngleSchedule:
        return cls(np.zeros(0), np.zeros(0))

    @classmethod
    def from_vector(cls, x) -> AngleSchedule:
        x = np.asarray(x, dtype=np.float64)
        p = x.shape[0] // 2
        return cls(x[:p], x[p:])

    def as_vector(self) -> np.ndarray:
        """``[beta_1..beta_p, gamma_1..gamma_p]``."""
        return np.concatenate([self.betas, self.gammas])

    def reduced(self, mixer: MixerKind) -> AngleSchedule:
        """Angles mapped into [0, 2pi) where 2pi is an exact period.

        Gamma always has period 2pi (integer costs, 0/1 threshold spectrum).
        Beta has period 2pi for Grover (projector) and Clique (integer
        spectrum); Ring spectra are not integral, so Ring betas are kept as is.
        """
        betas = self.betas
        if MixerKind.parse(mixer) is not MixerKind.RING:
            betas = np.mod(betas, TWO_PI)
        return AngleSchedule(betas, np.mod(self.gammas, TWO_PI))

    def to_dict(self) -> dict:
        return {"betas": self.betas.tolist(), "gammas": self.gammas.tolist()}

    @classmethod
    def from_dict(cls, d) -> AngleSchedule:
        return cls(d["betas"], d["gammas"])


@dataclass
class RunResult:
    expectation: float
    approx_ratio: float
    per_round_ratios: np.ndarray
    final_state: np.ndarray | None = field(default=None, repr=False)


def expectation_and_ratio(state: np.ndarray, cost: CostVector) -> tuple[float, float]:
    """``<H_C>`` and ``<H_C> / c_max`` (ratio 1 when ``c_max == 0``)."""
    exp = float(np.dot(cost.values, np.abs(state) ** 2))
    return exp, ratio_of(exp, cost)


def ratio_of(expectation, cost: CostVector):
    if cost.c_max == 0:
        return 1.0 if np.ndim(expectation) == 0 else np.ones_like(expectation)
    return expectation / cost.c_max


class Simulator:
    """Operators for one (instance, variant) pair, reused across many angle sets."""

    def __init__(self, instance: ProblemInstance, variant, max_operator_dim=DEFAULT_MAX_OPERATOR_DIM,
                 mixer=None):
        self.instance = instance
        self.variant = Variant.parse(variant)
        self.index = build_index(instance.n, instance.k)
        self.cost = build_cost_vector(instance, self.index)
        self.mixer = mixer if mixer is not None else get_mixer(
            self.variant.mixer, instance.n, instance.k, max_dim=max_operator_dim)
        self._costf = self.cost.values.astype(np.float64)

    def _check_threshold(self, threshold):
        if self.variant.thresholded and threshold is None:
            raise ValueError(f"{self.variant.name} requires a threshold")
        return int(threshold) if self.variant.thresholded else None

    def evolve(self, schedule: AngleSchedule, threshold=None, record=False):
        """Final state, plus per-round ratios (round 0 first) when ``record``."""
        th = self._check_threshold(threshold)
        psi = dicke_state(self.index)
        ratios = [self._ratio(psi)] if record else None
        for beta, gamma in zip(schedule.betas, schedule.gammas):
            psi = apply_phase_separator(psi, self.cost, gamma, th)
            psi = apply_mixer(psi, self.mixer, beta)
            if record:
                ratios.append(self._ratio(psi))
        return psi, ratios

    def _ratio(self, psi):
        return ratio_of(float(self._costf @ (psi.real ** 2 + psi.imag ** 2)), self.cost)

    def run(self, schedule: AngleSchedule, threshold=None, keep_state=False) -> RunResult:
        psi, ratios = self.evolve(schedule, threshold, record=True)
        exp, ratio = expectation_and_ratio(psi, self.cost)
        return RunResult(exp, ratio, np.asarray(ratios), psi if keep_state else None)

    def expectation(self, x, threshold=None) -> float:
        """``<H_C>`` for the angle vector ``x = [betas, gammas]``."""
        return float(self.expectations(np.asarray(x, dtype=np.float64)[None, :], threshold)[0])

    def expectations(self, xs, threshold=None) -> np.ndarray:
        """``<H_C>`` for each row of ``xs`` (shape (m, 2p)), evolved as one batch."""
        th = self._check_threshold(threshold)
        xs = np.asarray(xs, dtype=np.float64)
        m, two_p = xs.shape
        p = two_p // 2
        psi = np.empty((self.index.dim, m), dtype=np.complex128)
        psi[:] = 1.0 / math.sqrt(self.index.dim)
        for t in range(p):
            psi = apply_phase_separator(psi, self.cost, xs[:, p + t], th)
            psi = apply_mixer(psi, self.mixer, xs[:, t])
        return self._costf @ (psi.real ** 2 + psi.imag ** 2)


def run_qaoa(instance: ProblemInstance, variant, schedule: AngleSchedule,
             threshold: int | None = None, keep_state: bool = False) -> RunResult:
    """Evolve the Dicke state through ``schedule`` (phase, then mixer, each round)."""
    return Simulator(instance, variant).run(schedule, threshold, keep_state)


def grover_th_schedule(p: int, p_star: int) -> AngleSchedule:
    """All-pi angles for the first ``p_star`` rounds, zero afterwards."""
    if not 0 <= p_star <= p:
        raise ValueError(f"need 0 <= p_star <= p, got p_star={p_star}, p={p}")
    a = np.zeros(p)
    a[:p_star] = math.pi
    return AngleSchedule(a, a)


def grover_pi_expectations(cost: CostVector, threshold: int, p: int) -> np.ndarray:
    """``<H_C>`` after ``j = 0..p`` all-pi Grover-Th rounds, in closed form.

    The state stays in the span of the uniform superpositions over marked
    (cost > threshold) and unmarked states; the marked weight after ``j``
    rounds is ``sin^2((2j+1) asin(sqrt(M/N)))``.
    """
    values = cost.values
    marked = values > threshold
    n_tot = values.shape[0]
    n_marked = int(marked.sum())
    mean_all = float(values.mean())
    if n_marked in (0, n_tot):
        return np.full(p + 1, mean_all)
    mu_m = float(values[marked].mean())
    mu_u = float(values[~marked].mean())
    theta = math.asin(math.sqrt(n_marked / n_tot))
    prob = np.sin((2 * np.arange(p + 1) + 1) * theta) ** 2
    out = prob * mu_m + (1.0 - prob) * mu_u
    out[0] = mean_all  # exact, so that ties at j = 0 compare equal across thresholds
    return out
