"""Angle and threshold search.

Angles are tuned by gradient ascent on ``<H_C>`` (central finite differences,
Armijo backtracking) and by basin-hopping that uses the same ascent as its
local step. Thresholds are tuned by an exhaustive scan above the previous
round's threshold (Clique/Ring) or by a peak search over the closed-form
all-pi Grover profile (Grover-Th).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .graphs import ProblemInstance
from .qaoa import (GROVER_TH, AngleSchedule, Simulator, Variant, grover_pi_expectations,
                   grover_th_schedule, ratio_of)
from .subspace import build_cost_vector, build_index


@dataclass
class TunerConfig:
    bh_iterations: int = 100
    bh_step_size: float = 0.5        # half-width of the uniform per-angle kick
    bh_temperature: float = 1.0
    fd_step: float = 1e-6
    gd_initial_step: float = 0.1
    gd_armijo_c: float = 1e-4
    gd_backtrack: float = 0.5
    gd_max_backtracks: int = 30
    gd_convergence_tol: float = 1e-8
    max_gd_iterations: int = 500
    gd_direction: str = "bfgs"       # or "steepest"
    seed: int = 0

    def __post_init__(self):
        for name in ("bh_iterations", "max_gd_iterations", "gd_max_backtracks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("bh_step_size", "bh_temperature", "fd_step", "gd_initial_step",
                     "gd_armijo_c", "gd_convergence_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.gd_direction not in ("bfgs", "steepest"):
            raise ValueError(f"unknown gd_direction {self.gd_direction!r}")
        if not 0 < self.gd_backtrack < 1:
            raise ValueError("gd_backtrack must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> TunerConfig:
        names = {f.name for f in fields(cls)}
        unknown = set(d or {}) - names
        if unknown:
            raise ValueError(f"unknown tuner keys: {sorted(unknown)}")
        return cls(**(d or {}))


@dataclass
class TunedRound:
    p: int
    schedule: AngleSchedule
    threshold: int | None
    expectation: float
    approx_ratio: float
    converged: bool = True
    p_star: int | None = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"p": self.p, "threshold": self.threshold, "expectation": self.expectation,
             "approx_ratio": self.approx_ratio, "converged": self.converged,
             "p_star": self.p_star, "iterations": self.iterations}
        d.update(self.schedule.to_dict())
        if self.extra:
            d["extra"] = self.extra
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TunedRound:
        return cls(d["p"], AngleSchedule.from_dict(d), d["threshold"], d["expectation"],
                   d["approx_ratio"], d.get("converged", True), d.get("p_star"),
                   d.get("iterations", 0), d.get("extra", {}))


# -- gradients ---------------------------------------------------------------

def central_difference(fun_batch, x, h):
    """Central-difference gradient; ``fun_batch`` maps (m, d) points to m values."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    eye = np.eye(d) * h
    vals = fun_batch(np.vstack([x + eye, x - eye]))
    return (vals[:d] - vals[d:]) / (2.0 * h)


def five_point_difference(fun_batch, x, h):
    """Fourth-order stencil, used only to cross-check :func:`central_difference`."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    eye = np.eye(d) * h
    vals = fun_batch(np.vstack([x + 2 * eye, x + eye, x - eye, x - 2 * eye]))
    f2, f1, m1, m2 = vals[:d], vals[d:2 * d], vals[2 * d:3 * d], vals[3 * d:]
    return (-f2 + 8 * f1 - 8 * m1 + m2) / (12.0 * h)


def gradient_ascent(fun_batch, x0, config: TunerConfig):
    """Maximize by gradient ascent with Armijo backtracking.

    The ascent direction is the raw gradient (``gd_direction="steepest"``) or
    the gradient preconditioned by a BFGS inverse-Hessian estimate built from
    successive gradients (``"bfgs"``). Returns ``(x, f(x), converged,
    iterations)``; ``converged`` means the gradient norm fell below
    ``gd_convergence_tol``. A line search that finds no ascent step, or the
    iteration cap, ends the run unconverged.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    fx = float(fun_batch(x[None, :])[0])
    if x.size == 0:
        return x, fx, True, 0
    bfgs = config.gd_direction == "bfgs"
    hinv = np.eye(x.size)
    g = central_difference(fun_batch, x, config.fd_step)
    for it in range(config.max_gd_iterations):
        gnorm = math.sqrt(float(g @ g))
        if gnorm < config.gd_convergence_tol:
            return x, fx, True, it
        d = hinv @ g if bfgs else g
        slope = float(g @ d)
        if slope <= 0:  # lost positive definiteness: restart from the gradient
            hinv = np.eye(x.size)
            d, slope = g, gnorm * gnorm
        step = 1.0 if bfgs and it > 0 else config.gd_initial_step
        for _ in range(config.gd_max_backtracks):
            trial = x + step * d
            ft = float(fun_batch(trial[None, :])[0])
            # strict: a step that rounds to no change must not count as progress
            if ft > fx and ft >= fx + config.gd_armijo_c * step * slope:
                break
            step *= config.gd_backtrack
        else:
            return x, fx, False, it + 1
        g_new = central_difference(fun_batch, trial, config.fd_step)
        if bfgs:
            s_vec = trial - x
            y_vec = g - g_new  # gradient change of the minimized function -f
            sy = float(s_vec @ y_vec)
            if sy > 1e-12:
                rho = 1.0 / sy
                hy = hinv @ y_vec
                hinv = (hinv - rho * (np.outer(s_vec, hy) + np.outer(hy, s_vec))
                        + (rho * rho * float(y_vec @ hy) + rho) * np.outer(s_vec, s_vec))
        x, fx, g = trial, ft, g_new
    return x, fx, bool(np.linalg.norm(g) < config.gd_convergence_tol), config.max_gd_iterations


# -- angle search ------------------------------------------------------------

def extrapolate_angles(prev: AngleSchedule) -> AngleSchedule:
    """Append a copy of the last (beta, gamma) pair."""
    if prev.p < 1:
        raise ValueError("cannot extrapolate an empty schedule")
    return AngleSchedule(np.append(prev.betas, prev.betas[-1]),
                         np.append(prev.gammas, prev.gammas[-1]))


def _rng(config: TunerConfig, *salt) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed, *salt]))


def _finish(sim: Simulator, p, x, threshold, converged, iterations, **extra) -> TunedRound:
    sched = AngleSchedule.from_vector(x).reduced(sim.variant.mixer)
    exp = sim.expectation(sched.as_vector(), threshold)
    return TunedRound(p, sched, threshold, exp, float(ratio_of(exp, sim.cost)),
                      converged, iterations=iterations, extra=extra)


def _objective(sim, threshold):
    return lambda xs: sim.expectations(xs, threshold)


def optimize_angles_gd(instance: ProblemInstance, variant, p: int, threshold,
                       start: AngleSchedule, config: TunerConfig | None = None,
                       sim: Simulator | None = None) -> TunedRound:
    """Gradient ascent over all 2p angles from ``start``."""
    config = config or TunerConfig()
    sim = sim or Simulator(instance, variant)
    if start.p != p:
        raise ValueError(f"start schedule has {start.p} rounds, expected {p}")
    x, _, conv, its = gradient_ascent(_objective(sim, threshold), start.as_vector(), config)
    return _finish(sim, p, x, threshold, conv, its)


def optimize_angles_basinhopping(instance: ProblemInstance, variant, p: int, threshold,
                                 start="random", config: TunerConfig | None = None,
                                 sim: Simulator | None = None) -> TunedRound:
    """Basin-hopping over all 2p angles.

    ``start`` is ``"random"`` (uniform in [0, 2pi)) or an AngleSchedule with
    ``p`` rounds (e.g. from :func:`extrapolate_angles`). Each hop kicks every
    angle by U(-bh_step_size, bh_step_size), refines by gradient ascent and is
    accepted by the Metropolis rule on ``<H_C>``; the best point seen is returned.
    """
    config = config or TunerConfig()
    sim = sim or Simulator(instance, variant)
    fun = _objective(sim, threshold)
    is_random = isinstance(start, str)
    rng = _rng(config, p, 0 if is_random else 1, 0 if threshold is None else threshold + 1)
    if is_random:
        if start != "random":
            raise ValueError(f"unknown start {start!r}")
        x0 = rng.uniform(0.0, 2 * math.pi, 2 * p)
    else:
        if start.p != p:
            raise ValueError(f"start schedule has {start.p} rounds, expected {p}")
        x0 = start.as_vector()
    x, fx, conv, its = gradient_ascent(fun, x0, config)
    best_x, best_f, best_conv = x, fx, conv
    total = its
    for _ in range(config.bh_iterations):
        trial0 = x + rng.uniform(-config.bh_step_size, config.bh_step_size, x.shape)
        xt, ft, ct, its = gradient_ascent(fun, trial0, config)
        total += its
        if ft > best_f:
            best_x, best_f, best_conv = xt, ft, ct
        u = rng.random()
        if ft >= fx or u < math.exp((ft - fx) / config.bh_temperature):
            x, fx = xt, ft
    return _finish(sim, p, best_x, threshold, best_conv, total)


# -- threshold search --------------------------------------------------------

def grover_round(cost, p: int, threshold: int) -> tuple[float, int]:
    """Best ``(<H_C>, p_star)`` over all-pi prefixes of length ``0..p``."""
    exps = grover_pi_expectations(cost, threshold, p)
    j = int(np.argmax(exps))  # first maximum: shortest prefix
    return float(exps[j]), j


def grover_threshold_profile(cost, p: int, lo: int = 0) -> np.ndarray:
    """Overshoot-guarded expectation for every threshold in ``[lo, c_max - 1]``."""
    return np.array([grover_round(cost, p, th)[0] for th in range(lo, cost.c_max)])


def _threshold_domain(cost, prev_threshold):
    # objectives are >= 0, so th = 0 is the lowest threshold that can mark
    # anything other than the whole space (a global phase)
    lo = max(0, int(prev_threshold))
    hi = max(lo, cost.c_max - 1)
    return lo, hi


def distinct_thresholds(cost, prev_threshold: int = -1) -> list[int]:
    """Smallest threshold of each distinct marked set in ``[prev, c_max - 1]``.

    Thresholds ``th < th'`` mark the same states iff no cost lies in
    ``(th, th']``, so only ``lo`` and the cost values inside the domain matter.
    """
    lo, hi = _threshold_domain(cost, prev_threshold)
    vals = np.unique(cost.values)
    return [lo] + [int(v) for v in vals if lo < v <= hi]


def find_threshold_grover(instance: ProblemInstance, p: int, prev_threshold: int = -1,
                          cost=None) -> TunedRound:
    """Peak search over thresholds for Grover-Th with overshoot-guarded pi angles.

    The guarded expectation rises to a single peak and then falls as the
    threshold grows. The search runs over :func:`distinct_thresholds`
    (removing plateaus from repeated marked sets) and narrows by comparing
    neighbouring values at the midpoint. Thresholds where no pi round helps
    sit at the floor value ``mean(cost)``; that plateau can only lie left of
    the peak, so floor ties move right. Remaining ties go to the lower
    threshold, and a profile that never leaves the floor returns the lowest.
    """
    if cost is None:
        cost = build_cost_vector(instance, build_index(instance.n, instance.k))
    cands = distinct_thresholds(cost, prev_threshold)
    floor = float(cost.values.mean())
    memo = {}

    def value(i):
        if i not in memo:
            memo[i] = grover_round(cost, p, cands[i])
        return memo[i][0]

    lo, hi = 0, len(cands) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        a, b = value(mid), value(mid + 1)
        if b > a or (a <= floor and b <= floor):
            lo = mid + 1
        else:
            hi = mid
    if value(lo) <= floor:
        lo = 0
    th = cands[lo]
    value(lo)
    exp, p_star = memo[lo]
    return TunedRound(p, grover_th_schedule(p, p_star), th, exp,
                      float(ratio_of(exp, cost)), True, p_star=p_star,
                      extra={"evaluations": len(memo)})


def find_threshold_grover_exhaustive(instance, p, prev_threshold=-1, cost=None) -> TunedRound:
    """Scan every threshold in the domain; the oracle for :func:`find_threshold_grover`."""
    if cost is None:
        cost = build_cost_vector(instance, build_index(instance.n, instance.k))
    lo, hi = _threshold_domain(cost, prev_threshold)
    best = None
    for th in range(lo, hi + 1):
        exp, p_star = grover_round(cost, p, th)
        if best is None or exp > best[0]:
            best = (exp, p_star, th)
    exp, p_star, th = best
    return TunedRound(p, grover_th_schedule(p, p_star), th, exp,
                      float(ratio_of(exp, cost)), True, p_star=p_star)


def find_threshold_exhaustive(instance: ProblemInstance, variant, p: int,
                              prev_threshold: int = -1, angle_strategy: str = "gd",
                              config: TunerConfig | None = None,
                              prev_schedules: dict | None = None,
                              incumbent: AngleSchedule | None = None,
                              sim: Simulator | None = None) -> TunedRound:
    """Try every threshold in ``[prev_threshold, c_max - 1]``, tuning angles for each.

    Only the lowest threshold of each distinct marked set is tuned (see
    :func:`distinct_thresholds`); the others define identical operators.

    ``angle_strategy`` is ``"gd"`` (gradient ascent) or ``"bh"`` (basin-hopping).
    The start point for threshold ``th`` is the extrapolation of
    ``prev_schedules[th]`` (that threshold's tuned (p-1)-round schedule) when
    present, else of ``incumbent``; at ``p = 1`` with neither, a seeded random
    point. Ties keep the lower threshold. All per-threshold results are
    returned in ``extra["per_threshold"]`` for the next round's warm starts.
    """
    variant = Variant.parse(variant)
    if not variant.thresholded:
        raise ValueError(f"{variant.name} has no threshold")
    config = config or TunerConfig()
    sim = sim or Simulator(instance, variant)
    prev_schedules = prev_schedules or {}
    best = None
    per_threshold = {}
    # thresholds sharing a marked set define the same operator; keep the lowest
    for th in distinct_thresholds(sim.cost, prev_threshold):
        base = prev_schedules.get(th, incumbent)
        if base is not None and base.p == p - 1 and p > 1:
            start = extrapolate_angles(base)
        elif base is not None and base.p == p:
            start = base
        else:
            start = AngleSchedule.from_vector(
                _rng(config, p, 2, th + 1).uniform(0.0, 2 * math.pi, 2 * p))
        if angle_strategy == "gd":
            tr = optimize_angles_gd(instance, variant, p, th, start, config, sim=sim)
        elif angle_strategy == "bh":
            tr = optimize_angles_basinhopping(instance, variant, p, th, start, config, sim=sim)
        else:
            raise ValueError(f"unknown angle strategy {angle_strategy!r}")
        per_threshold[th] = tr.schedule
        if best is None or tr.expectation > best.expectation:
            best = tr
    best.extra["per_threshold"] = per_threshold
    return best


# -- round-by-round ----------------------------------------------------------

STRATEGIES = ("gd", "bh", "bh-random", "pi")


def default_strategy(variant) -> str:
    return "pi" if Variant.parse(variant) == GROVER_TH else "gd"


class InductiveTuner:
    """Tunes p = 1, 2, ... for one instance, each round seeded by the last.

    Strategies:

    ``gd``
        basin-hopping from a random point at p = 1, then gradient ascent from
        the extrapolated (p-1)-round optimum.
    ``bh``
        basin-hopping at every p, started from the extrapolated optimum.
    ``bh-random``
        basin-hopping at every p from a fresh random point; rounds are
        independent and no monotonicity is enforced.
    ``pi``
        Grover-Th only: all-pi angles with the overshoot guard and the
        peak threshold search.

    For the other strategies the best value at p is never allowed to drop
    below the value at p-1: if it would, the (p-1) schedule padded with a
    zero-angle round is refined instead (it reproduces the p-1 value exactly).
    """

    def __init__(self, instance: ProblemInstance, variant, config: TunerConfig | None = None,
                 strategy: str | None = None, sim: Simulator | None = None):
        self.instance = instance
        self.variant = Variant.parse(variant)
        self.config = config or TunerConfig()
        self.strategy = strategy or default_strategy(self.variant)
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "pi" and self.variant != GROVER_TH:
            raise ValueError("the 'pi' strategy applies to Grover-Th only")
        self.sim = sim or Simulator(instance, self.variant)
        exp = float(self.sim.cost.values.mean())
        self.rounds = [TunedRound(0, AngleSchedule.empty(), None, exp,
                                  float(ratio_of(exp, self.sim.cost)))]

    @property
    def p(self) -> int:
        return len(self.rounds) - 1

    @property
    def cost(self):
        return self.sim.cost

    def step(self) -> TunedRound:
        p = self.p + 1
        prev = self.rounds[-1]
        if self.strategy == "pi":
            tr = find_threshold_grover(self.instance, p, -1 if prev.threshold is None
                                       else prev.threshold, cost=self.cost)
        elif self.variant.thresholded:
            tr = self._step_threshold(p, prev)
        else:
            tr = self._step_angles(p, prev)
        if self.strategy not in ("bh-random", "pi") and tr.expectation < prev.expectation:
            tr = self._padded(p, prev, tr)
        self.rounds.append(tr)
        return tr

    def _angle_mode(self, p):
        if self.strategy == "bh-random" or p == 1:
            return "bh", False
        return ("gd" if self.strategy == "gd" else "bh"), True

    def _step_angles(self, p, prev):
        mode, warm = self._angle_mode(p)
        start = extrapolate_angles(prev.schedule) if warm else "random"
        if mode == "gd":
            return optimize_angles_gd(self.instance, self.variant, p, None, start,
                                      self.config, sim=self.sim)
        return optimize_angles_basinhopping(self.instance, self.variant, p, None, start,
                                            self.config, sim=self.sim)

    def _step_threshold(self, p, prev):
        mode, warm = self._angle_mode(p)
        prev_th = -1 if prev.threshold is None else prev.threshold
        return find_threshold_exhaustive(
            self.instance, self.variant, p, prev_th, mode, self.config,
            prev_schedules=prev.extra.get("per_threshold") if warm else None,
            incumbent=prev.schedule if warm and prev.p > 0 else None, sim=self.sim)

    def _padded(self, p, prev, tr):
        start = AngleSchedule(np.append(prev.schedule.betas, 0.0),
                              np.append(prev.schedule.gammas, 0.0))
        th = prev.threshold if self.variant.thresholded else None
        if th is None and self.variant.thresholded:
            th = tr.threshold
        alt = optimize_angles_gd(self.instance, self.variant, p, th, start, self.config,
                                 sim=self.sim)
        if alt.expectation < prev.expectation:  # ascent never goes below its start
            alt = TunedRound(p, start.reduced(self.variant.mixer), th, prev.expectation,
                             prev.approx_ratio, False)
        alt.extra["padded"] = True
        if "per_threshold" in tr.extra:
            alt.extra["per_threshold"] = tr.extra["per_threshold"]
        return alt if alt.expectation >= tr.expectation else tr

    def run_until(self, target: float | None = None, p_cap: int = 1) -> list[TunedRound]:
        """Step until the ratio reaches ``target`` (if given) or ``p == p_cap``."""
        while self.p < p_cap:
            if target is not None and self.rounds[-1].approx_ratio >= target:
                break
            self.step()
        return self.rounds
