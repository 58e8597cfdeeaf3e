"""Right-hand sides of the convergence guarantees and numerical audits.

The ``bound_*`` functions are pure formula evaluations. The audits run a
recursion and compare a realised quantity with its bound; they return a
bool or a ``(realised, bound)`` pair and raise :class:`BoundViolation`
only when asked to ``check``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import BoundViolation, ConfigurationError
from .optim import OnlineToBatchState, Weights, o2b_ftrl_step, unit_weights

SLACK = 1e-9


@dataclass(frozen=True)
class BoundInputs:
    dist0: float = 0.0  # ||x_1 - x*||
    G: float = 0.0
    G_inf: float = 0.0
    L_smooth: float = 0.0
    sigma: float = 0.0
    c: float = 1.0
    alpha_scale: float = 1.0
    eps: float = 1.0
    T: int = 1
    d: int = 1

    def __post_init__(self):
        for name in ("dist0", "G", "G_inf", "L_smooth", "sigma", "c", "alpha_scale", "eps"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        if self.T < 1:
            raise ConfigurationError("T must be at least 1")

    @property
    def C(self) -> float:
        return self.dist0**2 / self.alpha_scale + 2.0 * self.alpha_scale


def _need_eps(inp: BoundInputs):
    if inp.eps <= 0:
        raise ConfigurationError("eps must be positive")


def bound_fixed_schedule(inp: BoundInputs) -> float:
    """``dist0^2 G / (c sqrt T) + 2 c G / sqrt T``."""
    if inp.c <= 0:
        raise ConfigurationError("c must be positive")
    root_t = math.sqrt(inp.T)
    return inp.dist0**2 * inp.G / (inp.c * root_t) + 2.0 * inp.c * inp.G / root_t


def bound_adaptive_global(inp: BoundInputs, observed_sq_grad_sum: float) -> float:
    _need_eps(inp)
    a = inp.alpha_scale
    return (inp.C * math.sqrt(observed_sq_grad_sum + inp.eps) + a * inp.G**2 / math.sqrt(inp.eps)) / inp.T


def bound_adaptive_coordinate(inp: BoundInputs, per_coord_sums) -> float:
    _need_eps(inp)
    sums = np.asarray(per_coord_sums, dtype=np.float64)
    a = inp.alpha_scale
    d = sums.size
    return (inp.C * float(np.sqrt(sums + inp.eps).sum()) + a * d * inp.G_inf**2 / math.sqrt(inp.eps)) / inp.T


def bound_smooth(inp: BoundInputs, variant: str = "noisy") -> float:
    """Smooth-case bound; ``variant="noiseless"`` drops the noise term."""
    _need_eps(inp)
    if variant not in ("noisy", "noiseless"):
        raise ConfigurationError(f"unknown variant {variant!r}")
    C, L, a, eps = inp.C, inp.L_smooth, inp.alpha_scale, inp.eps
    ln_t = math.log(inp.T)
    tail = a * inp.G**2 / math.sqrt(eps)
    inner = eps + 4 * L**2 * C**2 * ln_t**2 + 4 * L * C * math.sqrt(eps) * ln_t + 2 * tail
    value = C / inp.T * (math.sqrt(inner) + tail)
    if variant == "noisy":
        value += math.sqrt(2.0) * C * inp.sigma / math.sqrt(inp.T)
    return value


def bound_last_iterate(x1, x_star, gammas: Sequence, grads: Sequence, alphas: Optional[Sequence[float]] = None) -> float:
    """General last-iterate bound for FTRL-based SGDM after ``T = len(grads)`` gradients.

    ``gammas[k]`` is ``gamma_k`` for ``k = 0..T-1``.
    """
    T = len(grads)
    if len(gammas) != T:
        raise ConfigurationError("need gamma_0..gamma_{T-1}")
    alphas = np.ones(T) if alphas is None else np.asarray(alphas, dtype=np.float64)
    diff = np.asarray(x1, float) - np.asarray(x_star, float)
    total = float(np.sum(diff**2 / np.asarray(gammas[-1], float)))
    for gamma, a, g in zip(gammas, alphas, grads):
        total += float(np.sum(np.asarray(gamma, float) * a**2 * np.asarray(g, float) ** 2))
    return total / float(alphas.sum())


# ---------------------------------------------------------------------------
# Regret and online-to-batch audits
# ---------------------------------------------------------------------------


def _check_gammas(gammas) -> list:
    table = [np.asarray(g, dtype=np.float64) for g in gammas]
    for k, g in enumerate(table):
        if np.any(g <= 0):
            raise ConfigurationError(f"gamma_{k} must be positive")
        if k and np.any(g > table[k - 1]):
            raise ConfigurationError(f"gamma_{k} exceeds gamma_{k - 1}")
    return table


def ftrl_regret_gap(grads, gammas, u, x1=None, alphas=None, check: bool = False):
    """Regret of quadratic-regularized FTRL on linear losses ``<alpha_t g_t, w>``.

    Plays ``w_t = x1 - gamma_{t-1} sum_{i<t} alpha_i g_i`` with ``gammas[k]``
    holding ``gamma_k`` (``k = 0..T-1``) and returns ``(regret, bound)``
    where ``bound = ||(u - x1)/sqrt(gamma_{T-1})||^2 + 1/2 sum <gamma_{t-1}, (alpha_t g_t)^2>``.
    """
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    T = len(grads)
    if T == 0:
        raise ConfigurationError("empty loss stream")
    table = _check_gammas(gammas)
    if len(table) != T:
        raise ConfigurationError("need one gamma per round")
    u = np.asarray(u, dtype=np.float64)
    x1 = np.zeros_like(u) if x1 is None else np.asarray(x1, dtype=np.float64)
    alphas = np.ones(T) if alphas is None else np.asarray(alphas, dtype=np.float64)

    running = np.zeros_like(u)
    regret = 0.0
    stability = 0.0
    for gamma, a, g in zip(table, alphas, grads):
        w = x1 - gamma * running
        ag = a * g
        regret += float(ag @ (w - u))
        stability += float(np.sum(gamma * ag * ag))
        running += ag
    bound = float(np.sum((u - x1) ** 2 / table[-1])) + 0.5 * stability
    if check and regret > bound + SLACK:
        raise BoundViolation(f"regret {regret:.6e} exceeds bound {bound:.6e}")
    return regret, bound


@dataclass
class OnlineToBatchTrace:
    """Per-round record of an anytime online-to-batch run (index ``t-1`` holds round ``t``)."""

    xs: np.ndarray          # x_t
    values: np.ndarray      # f(x_t)
    regrets: np.ndarray     # R_t(u) of the inner FTRL learner
    alpha_sums: np.ndarray  # sum_{i<=t} alpha_i


def o2b_trace(grad_fn: Callable, f: Callable, w1, gamma_fn: Callable, T: int, u,
              alpha: Weights = unit_weights) -> OnlineToBatchTrace:
    """Runs online-to-batch FTRL for ``T`` rounds.

    ``grad_fn(x, t)`` returns ``g_t`` at ``x_t`` and ``gamma_fn(t)`` returns the
    ``gamma_t`` used to form ``w_{t+1}``. The regret is measured against ``u``.
    """
    state = OnlineToBatchState.initial(w1, alpha)
    u = np.asarray(u, dtype=np.float64)
    xs, values, regrets, sums = [], [], [], []
    regret = 0.0
    total = 0.0
    for t in range(1, T + 1):
        x = state.x
        g = np.asarray(grad_fn(x, t), dtype=np.float64)
        a = float(alpha(t))
        regret += a * float(g @ (state.w - u))
        total += a
        xs.append(x.copy())
        values.append(float(f(x)))
        regrets.append(regret)
        sums.append(total)
        state = o2b_ftrl_step(state, g, gamma_fn(t), alpha)
    return OnlineToBatchTrace(np.array(xs), np.array(values), np.array(regrets), np.array(sums))


def o2b_gap_audit(run, regret: float, alphas, f_star: Optional[float]) -> bool:
    """``f(x_T) - f* <= R_T(x*) / sum_t alpha_t`` for a deterministic run.

    ``run`` is a :class:`~ftrlm.harness.RunRecord` (its last objective is
    ``f(x_T)``) or a plain float.
    """
    if f_star is None:
        raise ConfigurationError("the audit needs a known optimal value")
    final = float(run) if np.isscalar(run) else float(run.objective_per_epoch[-1])
    total = float(np.sum(alphas))
    if not total > 0:
        raise ConfigurationError("weights must sum to a positive value")
    return final - f_star <= regret / total + SLACK


def mean_within_bound(gaps, bound: float, n_se: float = 3.0) -> bool:
    """Seed-averaged audit: ``mean(gaps) <= bound + n_se * standard error``."""
    gaps = np.asarray(gaps, dtype=np.float64)
    se = gaps.std(ddof=1) / math.sqrt(gaps.size) if gaps.size > 1 else 0.0
    return float(gaps.mean()) <= bound + n_se * se


# ---------------------------------------------------------------------------
# Auxiliary inequalities
# ---------------------------------------------------------------------------


def power_sum_check(j: int, t: int, T: int, alpha: float) -> bool:
    """``(1/(T-j+1)) sum_{k=j+1}^{t} k^-alpha <= 2 / T^alpha``."""
    if not (1 <= j <= t <= T):
        raise ConfigurationError("need 1 <= j <= t <= T")
    if not 0 < alpha <= 0.5:
        raise ConfigurationError("need 0 < alpha <= 1/2")
    k = np.arange(j + 1, t + 1, dtype=np.float64)
    lhs = float(np.sum(k**-alpha)) / (T - j + 1)
    return lhs <= 2.0 / float(T) ** alpha


def power_sum_grid(T_max: int, alphas: Sequence[float]) -> int:
    """Number of ``(j, t, T, alpha)`` violations with ``T <= T_max``; vectorised over ``j, t``."""
    violations = 0
    for alpha in alphas:
        if not 0 < alpha <= 0.5:
            raise ConfigurationError("need 0 < alpha <= 1/2")
        prefix = np.concatenate(([0.0], np.cumsum(np.arange(1, T_max + 1, dtype=np.float64) ** -alpha)))
        for T in range(1, T_max + 1):
            j = np.arange(1, T + 1)[:, None]
            t = np.arange(1, T + 1)[None, :]
            lhs = (prefix[t] - prefix[j]) / (T - j + 1)
            valid = t >= j
            violations += int(np.count_nonzero(valid & (lhs > 2.0 / float(T) ** alpha)))
    return violations


def gradient_gap_check(f: Callable, grad: Callable, M: float, inf_f: float, points) -> bool:
    """``||grad f(x)||^2 <= 2 M (f(x) - inf f)`` at every point."""
    for x in points:
        g = np.asarray(grad(x), dtype=np.float64)
        rhs = 2.0 * M * (float(f(x)) - inf_f)
        if float(g @ g) > rhs + 1e-12 * max(1.0, abs(rhs)):
            return False
    return True


def _inv_sqrt(u):
    return u**-0.5


def _two_sqrt(u):
    return 2.0 * math.sqrt(u)


def increment_sum_check(a0: float, a, A: float, f: Callable = _inv_sqrt, antiderivative: Optional[Callable] = None) -> bool:
    """``sum_i a_i f(a_0 + ... + a_{i-1}) <= int_{a_0}^{sum a} f + A f(a_0)``.

    Defaults to ``f(u) = u^-1/2`` with its closed-form integral; other
    non-increasing ``f`` are integrated numerically unless an antiderivative
    is given.
    """
    a = np.asarray(a, dtype=np.float64)
    if not a0 > 0:
        raise ConfigurationError("a0 must be positive")
    if np.any(a < 0) or np.any(a > A):
        raise ConfigurationError("every a_i must lie in [0, A]")
    if f is _inv_sqrt and antiderivative is None:
        antiderivative = _two_sqrt
    partial = a0 + np.concatenate(([0.0], np.cumsum(a)))
    lhs = float(sum(ai * f(si) for ai, si in zip(a, partial[:-1])))
    lo, hi = a0, float(partial[-1])
    if antiderivative is not None:
        area = antiderivative(hi) - antiderivative(lo)
    else:
        area = integrate.quad(f, lo, hi)[0]
    rhs = area + A * f(a0)
    return lhs <= rhs + 1e-12 * max(1.0, abs(rhs))
