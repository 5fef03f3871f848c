"""Limited-memory BFGS with a strong-Wolfe line search.

Hand-rolled rather than wrapped from scipy because the experiment layer
needs things the library minimizers hide: a record for every accepted
iterate (n_I is the unit of the classical-resource measure), Wolfe-condition
assertions on accepted steps, deterministic behavior across platforms, and a
counted steepest-descent fallback when the line search collapses.

Objectives are callables theta -> (cost, grad) or (cost, grad, extras) with
extras an arbitrary JSON-friendly mapping copied into the trace record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class OptimizerConfig:
    memory: int = 10
    max_iterations: int = 1000
    grad_tol: float = 1e-6        # stop when ||g||_inf drops below
    f_tol: float = 1e-12          # relative cost-decrease floor
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    seed: int = 0
    max_step_growth: float = 1e8  # line-search upper bracket

    def __post_init__(self):
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise ConfigurationError("need 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise ConfigurationError("memory must be >= 1")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")


class StopReason(Enum):
    GRAD_TOL = "grad_tol"
    F_TOL = "f_tol"
    MAX_ITERATIONS = "max_iterations"
    LINE_SEARCH_FAILURE = "line_search_failure"
    NON_FINITE = "non_finite"


@dataclass
class IterationRecord:
    n_I: int
    cost: float
    grad_norm: float              # inf-norm at the iterate
    extras: dict = field(default_factory=dict)
    fallback: bool = False        # step taken by steepest descent

    def as_json(self) -> str:
        d = {"n_I": self.n_I, "cost": self.cost, "grad_norm": self.grad_norm,
             "fallback": self.fallback}
        d.update(self.extras)
        return json.dumps(d)


@dataclass
class OptimizationTrace:
    records: list[IterationRecord]
    theta: np.ndarray
    stop_reason: StopReason
    n_evals: int = 0              # objective evaluations, line search included
    n_fallback: int = 0

    @property
    def n_iterations(self) -> int:
        """Accepted steps (record for the initial point not counted)."""
        return self.records[-1].n_I

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    def to_json_lines(self) -> str:
        return "\n".join(r.as_json() for r in self.records)


def sample_initial_params(n_params: int, seed) -> np.ndarray:
    """Uniform [0, 2pi) start; every generator here is 2pi-periodic."""
    if n_params < 1:
        raise ConfigurationError("n_params must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * np.pi, n_params)


def _normalize(objective):
    """Uniform (cost, grad, extras) view of 2- or 3-tuple objectives."""
    def call(theta):
        out = objective(theta)
        if len(out) == 2:
            f, g = out
            return float(f), np.asarray(g, dtype=float), {}
        f, g, extras = out
        return float(f), np.asarray(g, dtype=float), dict(extras)
    return call


def _cubic_step(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi):
    """Cubic-interpolation minimizer inside [a_lo, a_hi]; None if ill-posed."""
    if a_lo == a_hi:
        return None
    d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi)
    disc = d1 * d1 - d_lo * d_hi
    if disc < 0.0:
        return None
    d2 = np.sign(a_hi - a_lo) * np.sqrt(disc)
    denom = d_hi - d_lo + 2.0 * d2
    if denom == 0.0:
        return None
    a = a_hi - (a_hi - a_lo) * (d_hi + d2 - d1) / denom
    if not np.isfinite(a):
        return None
    return float(a)


class _NonFinite(Exception):
    def __init__(self, cost):
        self.cost = cost


class _LineSearch:
    """Strong-Wolfe search along p from x: bracket then zoom with cubic steps."""

    def __init__(self, func, x, p, f0, g0, c1, c2, alpha_max):
        self.func, self.x, self.p = func, x, p
        self.f0, self.d0 = f0, float(g0 @ p)
        self.c1, self.c2, self.alpha_max = c1, c2, alpha_max
        self.n_evals = 0

    def _eval(self, alpha):
        f, g, extras = self.func(self.x + alpha * self.p)
        self.n_evals += 1
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise _NonFinite(f)
        return f, g, extras, float(g @ self.p)

    def _armijo(self, alpha, f):
        return f <= self.f0 + self.c1 * alpha * self.d0

    def _curvature(self, d):
        return abs(d) <= self.c2 * abs(self.d0)

    def run(self, alpha0=1.0, max_brackets=20):
        if self.d0 >= 0.0:
            return None
        a_prev, f_prev, d_prev = 0.0, self.f0, self.d0
        alpha = min(alpha0, self.alpha_max)
        for i in range(max_brackets):
            f, g, extras, d = self._eval(alpha)
            if not self._armijo(alpha, f) or (i > 0 and f >= f_prev):
                return self._zoom(a_prev, f_prev, d_prev, alpha, f, d)
            if self._curvature(d):
                return alpha, f, g, extras
            if d >= 0.0:
                return self._zoom(alpha, f, d, a_prev, f_prev, d_prev)
            a_prev, f_prev, d_prev = alpha, f, d
            if alpha >= self.alpha_max:
                return None
            alpha = min(2.0 * alpha, self.alpha_max)
        return None

    def _zoom(self, a_lo, f_lo, d_lo, a_hi, f_hi, d_hi, max_zoom=30):
        for _ in range(max_zoom):
            lo, hi = (a_lo, a_hi) if a_lo < a_hi else (a_hi, a_lo)
            width = hi - lo
            a = _cubic_step(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            # guard against stagnation at the interval edges
            if a is None or not lo + 0.1 * width <= a <= hi - 0.1 * width:
                a = 0.5 * (lo + hi)
            f, g, extras, d = self._eval(a)
            if not self._armijo(a, f) or f >= f_lo:
                a_hi, f_hi, d_hi = a, f, d
            else:
                if self._curvature(d):
                    return a, f, g, extras
                if d * (a_hi - a_lo) >= 0.0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo = a, f, d
            if width < 1e-16 * max(1.0, abs(a_lo)):
                break
        return None


def _two_loop(g, s_list, y_list, rho_list):
    """Standard L-BFGS two-loop recursion; returns the descent direction."""
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= (s @ y) / (y @ y)      # Barzilai-Borwein initial scaling
    for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def minimize(objective, theta0: np.ndarray, config: OptimizerConfig | None = None
             ) -> OptimizationTrace:
    """L-BFGS descent from theta0; the trace keeps one record per iterate.

    Record 0 is the starting point; n_I counts accepted steps.  A failed
    Wolfe search retries with a steepest-descent direction (flagged in the
    record); failure of that too, or a non-finite objective, stops the run
    with the corresponding reason and a diagnostic final record.
    """
    cfg = config or OptimizerConfig()
    func = _normalize(objective)
    x = np.asarray(theta0, dtype=float).copy()

    f, g, extras = func(x)
    n_evals = 1
    records = [IterationRecord(0, f, float(np.abs(g).max()) if g.size else 0.0, extras)]
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        return OptimizationTrace(records, x, StopReason.NON_FINITE, n_evals)
    if np.abs(g).max() < cfg.grad_tol:
        return OptimizationTrace(records, x, StopReason.GRAD_TOL, n_evals)

    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    n_fallback = 0
    reason = StopReason.MAX_ITERATIONS

    for it in range(1, cfg.max_iterations + 1):
        p = _two_loop(g, s_list, y_list, rho_list)
        if p @ g >= 0.0:            # history gave an ascent direction: reset
            s_list, y_list, rho_list = [], [], []
            p = -g
        try:
            ls = _LineSearch(func, x, p, f, g, cfg.wolfe_c1, cfg.wolfe_c2,
                             cfg.max_step_growth)
            hit = ls.run()
            n_evals += ls.n_evals
            fallback = False
            if hit is None and not np.array_equal(p, -g):
                s_list, y_list, rho_list = [], [], []
                ls = _LineSearch(func, x, -g, f, g, cfg.wolfe_c1, cfg.wolfe_c2,
                                 cfg.max_step_growth)
                gn = float(np.abs(g).max())
                hit = ls.run(alpha0=min(1.0, 1.0 / max(gn, 1e-12)))
                n_evals += ls.n_evals
                fallback = True
                p = -g
        except _NonFinite as bad:
            records.append(IterationRecord(it, float(bad.cost), float("nan"),
                                           {"error": "non-finite objective"}))
            reason = StopReason.NON_FINITE
            break
        if hit is None:
            reason = StopReason.LINE_SEARCH_FAILURE
            break
        alpha, f_new, g_new, extras = hit
        if fallback:
            n_fallback += 1
        x_new = x + alpha * p
        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > cfg.memory:
                s_list.pop(0), y_list.pop(0), rho_list.pop(0)
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        records.append(IterationRecord(it, f, float(np.abs(g).max()), extras, fallback))
        if np.abs(g).max() < cfg.grad_tol:
            reason = StopReason.GRAD_TOL
            break
        if 0.0 <= decrease <= cfg.f_tol * max(1.0, abs(f)):
            reason = StopReason.F_TOL
            break

    return OptimizationTrace(records, x, reason, n_evals, n_fallback)
