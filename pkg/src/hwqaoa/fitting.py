"""Weighted least-squares scaling fits of rounds-to-target against problem size.

Ansätze (x is usually n, or C(n, k) for the monomial law):

* ``log``      a * log(b x + c)
* ``power``    a * x**b + c
* ``monomial`` a * x**b
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

ANSATZE = ("log", "power", "monomial")
STDDEV_FLOOR = 0.5
N_STARTS = 20

_PENALTY = 1e6


def model(ansatz: str, params, x):
    x = np.asarray(x, dtype=np.float64)
    if ansatz == "log":
        a, b, c = params
        arg = b * x + c
        with np.errstate(invalid="ignore", divide="ignore"):
            return a * np.log(arg)
    if ansatz == "power":
        a, b, c = params
        return a * x ** b + c
    if ansatz == "monomial":
        a, b = params
        return a * x ** b
    raise ValueError(f"unknown ansatz {ansatz!r}")


def _start_box(ansatz, x):
    xmin = float(np.min(x))
    if ansatz == "log":
        return lambda rng: _log_start(rng, xmin)
    if ansatz == "power":
        return lambda rng: np.array([rng.uniform(0.01, 10), rng.uniform(0.01, 2),
                                     rng.uniform(-5, 5)])
    return lambda rng: np.array([rng.uniform(0.01, 10), rng.uniform(0.01, 2)])


def _log_start(rng, xmin):
    a = rng.uniform(0.1, 10)
    b = rng.uniform(0.1, 10)
    c = rng.uniform(-b * xmin + 0.1, 5)  # keeps b*x + c > 0 on the data
    return np.array([a, b, c])


@dataclass
class ScalingFit:
    ansatz: str
    params: tuple
    residual: float            # weighted sum of squared residuals
    exponent_ci: tuple | None  # 95% interval on b (power / monomial)
    converged: bool
    dof: int

    def predict(self, x):
        return model(self.ansatz, self.params, x)

    def to_dict(self) -> dict:
        names = "abc"[: len(self.params)]
        return {"ansatz": self.ansatz,
                "params": {k: float(v) for k, v in zip(names, self.params)},
                "residual": float(self.residual),
                "exponent_ci95": None if self.exponent_ci is None else [float(v) for v in self.exponent_ci],
                "converged": bool(self.converged), "dof": int(self.dof)}

    @classmethod
    def from_dict(cls, d) -> ScalingFit:
        ci = d.get("exponent_ci95")
        return cls(d["ansatz"], tuple(d["params"][k] for k in sorted(d["params"])),
                   d["residual"], None if ci is None else tuple(ci), d["converged"], d["dof"])


def weights_from_stddevs(stddevs, floor: float = STDDEV_FLOOR) -> np.ndarray:
    """Per-point sigma: the ensemble stddev, or ``floor`` where it is zero."""
    s = np.asarray(stddevs, dtype=np.float64)
    return np.where(s > 0, s, floor)


def fit_scaling(means, stddevs, ns, ansatz: str, n_starts: int = N_STARTS, seed: int = 0,
                stddev_floor: float = STDDEV_FLOOR) -> ScalingFit:
    """Minimize ``sum_i ((mean_i - f(n_i)) / sigma_i)**2`` from seeded random starts.

    The 95% interval on the exponent uses the linearized covariance scaled by
    the reduced chi-square and a Student-t quantile with ``len(ns) - n_params``
    degrees of freedom.
    """
    if ansatz not in ANSATZE:
        raise ValueError(f"unknown ansatz {ansatz!r}")
    y = np.asarray(means, dtype=np.float64)
    x = np.asarray(ns, dtype=np.float64)
    if not y.shape == x.shape == np.shape(stddevs):
        raise ValueError("means, stddevs and ns must have equal length")
    if x.size < 4:
        raise ValueError(f"need at least 4 data points, got {x.size}")
    sigma = weights_from_stddevs(stddevs, stddev_floor)

    def resid(theta):
        f = model(ansatz, theta, x)
        r = (y - f) / sigma
        return np.where(np.isfinite(r), r, _PENALTY)

    draw = _start_box(ansatz, x)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_starts):
        theta0 = draw(rng)
        try:
            sol = optimize.least_squares(resid, theta0, method="trf", xtol=1e-15,
                                         ftol=1e-15, gtol=1e-15, max_nfev=5000)
        except (ValueError, FloatingPointError):
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise RuntimeError("no start produced a finite fit")
    theta = best.x
    r = resid(theta)
    ssr = float(r @ r)
    dof = x.size - theta.size
    ci = None
    if ansatz in ("power", "monomial"):
        ci = _exponent_ci(resid, theta, ssr, dof)
    return ScalingFit(ansatz, tuple(float(t) for t in theta), ssr, ci,
                      bool(best.success), dof)


def _exponent_ci(resid, theta, ssr, dof):
    jac = optimize.approx_fprime(theta, resid, 1e-7)
    try:
        cov = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return (float("nan"), float("nan"))
    if dof > 0:
        cov = cov * (ssr / dof)
        q = stats.t.ppf(0.975, dof)
    else:
        q = stats.norm.ppf(0.975)
    half = q * float(np.sqrt(max(cov[1, 1], 0.0)))
    return (float(theta[1] - half), float(theta[1] + half))
