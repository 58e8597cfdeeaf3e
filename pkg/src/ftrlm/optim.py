"""Iterate-update rules.

Everything here is functional: a step takes an immutable state plus a
gradient and returns a new state. Arrays are float64 throughout and all
accumulators are running sums, so each step is O(d) in time and memory.

Rules provided:

* ``sgdm_step``      -- heavy-ball SGDM written as an EMA of gradients,
  optionally tracking the running average of iterates (SGDM-AVG).
* ``adagrad_step``   -- coordinate-wise AdaGrad.
* ``ftrl_sgdm_step`` -- FTRL-based SGDM: increasing momentum
  ``beta_t = S_{t-1} / S_t`` and a shrink of the iterate towards ``x_1``.
* ``o2b_ftrl_step``  -- anytime online-to-batch conversion wrapped around
  FTRL with a quadratic regularizer. Produces the same ``x_t`` sequence as
  ``ftrl_sgdm_step`` when seeded with ``w_1 = x_1``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, HorizonExceededError, InvalidInputError, StateError

Weights = Callable[[int], float]


def unit_weights(t: int) -> float:
    """The default weight sequence ``alpha_t = 1``."""
    return 1.0


@dataclass(frozen=True)
class GradientSample:
    """A stochastic subgradient plus an optional tag (e.g. the sample index)."""

    g: np.ndarray
    meta: Any = None


GradientLike = Union[GradientSample, np.ndarray, Sequence[float]]


def _as_gradient(g: GradientLike, d: int) -> np.ndarray:
    if isinstance(g, GradientSample):
        g = g.g
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (d,):
        raise ConfigurationError(f"gradient has shape {g.shape}, expected ({d},)")
    if not np.all(np.isfinite(g)):
        raise InvalidInputError("gradient contains NaN or Inf")
    return g


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerState:
    """Iterate and bookkeeping shared by every update rule.

    ``t`` is the 1-based index of the current iterate ``x``; the gradient
    passed to the next step is ``g_t`` taken at ``x``. ``sum_alpha`` and
    ``sum_alpha_prev`` are the weight sums through the last processed
    gradient and the one before it. ``avg`` is only tracked for SGDM-AVG.
    """

    x: np.ndarray
    m: np.ndarray
    x1: np.ndarray
    t: int = 1
    sum_alpha: float = 0.0
    sum_alpha_prev: float = 0.0
    accum_sq: np.ndarray = field(default=None)  # type: ignore[assignment]
    accum_sq_norm: float = 0.0
    avg: Optional[np.ndarray] = None

    @classmethod
    def initial(cls, x1, average: bool = False) -> "OptimizerState":
        x1 = np.array(x1, dtype=np.float64, ndmin=1)
        if x1.ndim != 1:
            raise ConfigurationError("initial point must be a vector")
        if not np.all(np.isfinite(x1)):
            raise InvalidInputError("initial point contains NaN or Inf")
        return cls(
            x=x1.copy(),
            m=np.zeros_like(x1),
            x1=x1,
            accum_sq=np.zeros_like(x1),
            avg=x1.copy() if average else None,
        )

    @property
    def dim(self) -> int:
        return self.x.shape[0]


# ---------------------------------------------------------------------------
# Stepsize schedules
# ---------------------------------------------------------------------------


class StepsizeSchedule:
    """Base class for the gamma rules; subclasses are frozen dataclasses."""

    adaptive = False

    def gamma(self, t: int, accum_sq: np.ndarray, accum_sq_norm: float):
        raise NotImplementedError

    def describe(self) -> str:
        fields = ",".join(f"{f.name}={getattr(self, f.name)!r}" for f in dataclasses.fields(self))
        return f"{type(self).__name__}({fields})"


def _require_positive(**values):
    for name, value in values.items():
        if not (np.isfinite(value) and value > 0):
            raise ConfigurationError(f"{name} must be positive, got {value!r}")


def _check_adaptive(scale, eps):
    # eps = 0 is allowed for evaluating gamma once gradients have arrived;
    # ftrl_sgdm_step insists on eps > 0
    _require_positive(scale=scale)
    if not (np.isfinite(eps) and eps >= 0):
        raise ConfigurationError(f"eps must be non-negative, got {eps!r}")


@dataclass(frozen=True)
class Polynomial(StepsizeSchedule):
    """``gamma_t = c / (t + shift) ** power``.

    ``shift=1`` gives the ``gamma_{t-1} = c / sqrt(t)`` indexing used when
    the first gradient should see ``c`` itself.
    """

    c: float
    power: float = 0.5
    shift: int = 0

    def __post_init__(self):
        _require_positive(c=self.c)
        if self.power < 0:
            raise ConfigurationError("power must be non-negative")
        if self.shift < 0:
            raise ConfigurationError("shift must be non-negative")

    def gamma(self, t, accum_sq, accum_sq_norm):
        return self.c / float(t + self.shift) ** self.power


@dataclass(frozen=True)
class ConstantHorizon(StepsizeSchedule):
    """``gamma = c / (G sqrt(T))`` for a known horizon ``T``."""

    c: float
    T: int
    G: float = 1.0

    def __post_init__(self):
        _require_positive(c=self.c, T=self.T, G=self.G)

    def gamma(self, t, accum_sq, accum_sq_norm):
        if t > self.T:
            raise HorizonExceededError(f"step {t} is past the horizon T={self.T}")
        return self.c / (self.G * np.sqrt(self.T))


@dataclass(frozen=True)
class AdaptiveGlobal(StepsizeSchedule):
    """AdaGrad-norm: ``scale / sqrt(eps + sum_i alpha_i^2 ||g_i||^2)``."""

    scale: float
    eps: float

    adaptive = True

    def __post_init__(self):
        _check_adaptive(self.scale, self.eps)

    def gamma(self, t, accum_sq, accum_sq_norm):
        return self.scale / np.sqrt(self.eps + accum_sq_norm)


@dataclass(frozen=True)
class AdaptiveCoordinate(StepsizeSchedule):
    """Per-coordinate AdaGrad: ``scale / sqrt(eps + sum_i alpha_i^2 g_i^2)``."""

    scale: float
    eps: float

    adaptive = True

    def __post_init__(self):
        _check_adaptive(self.scale, self.eps)

    def gamma(self, t, accum_sq, accum_sq_norm):
        return self.scale / np.sqrt(self.eps + accum_sq)


@dataclass(frozen=True)
class Explicit(StepsizeSchedule):
    """A precomputed table: ``gamma_t = values[t - 1]`` (scalars or vectors)."""

    values: tuple

    def __post_init__(self):
        table = [np.asarray(v, dtype=np.float64) for v in self.values]
        for k, v in enumerate(table):
            if not np.all(v > 0):
                raise ConfigurationError(f"gamma_{k + 1} must be positive")
            if k and np.any(v > table[k - 1]):
                raise ConfigurationError(f"gamma_{k + 1} exceeds gamma_{k}")
        object.__setattr__(self, "values", tuple(table))

    def gamma(self, t, accum_sq, accum_sq_norm):
        if t > len(self.values):
            raise HorizonExceededError(f"no gamma tabulated for step {t}")
        return self.values[t - 1]

    def describe(self):
        return f"Explicit(len={len(self.values)})"


def emit_gamma(sched: StepsizeSchedule, state: OptimizerState) -> np.ndarray:
    """The gamma vector for ``state.t`` given the accumulators in ``state``."""
    with np.errstate(divide="ignore"):
        gamma = sched.gamma(state.t, state.accum_sq, state.accum_sq_norm)
    if not np.all(np.isfinite(gamma)):
        raise ConfigurationError("gamma is undefined: eps = 0 and no gradient mass yet")
    return np.broadcast_to(np.asarray(gamma, dtype=np.float64), (state.dim,)).copy()


# ---------------------------------------------------------------------------
# Update rules
# ---------------------------------------------------------------------------


def sgdm_step(state: OptimizerState, g: GradientLike, eta: float, beta: float) -> OptimizerState:
    """``m <- beta m + (1 - beta) g``; ``x <- x - eta m``."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigurationError(f"beta must lie in [0, 1], got {beta}")
    if eta < 0:
        raise ConfigurationError(f"eta must be non-negative, got {eta}")
    g = _as_gradient(g, state.dim)

    m = beta * state.m + (1.0 - beta) * g
    x = state.x - eta * m
    t = state.t + 1
    avg = None
    if state.avg is not None:
        # average of x_1..x_t, including the starting point
        avg = ((t - 1) * state.avg + x) / t
    return dataclasses.replace(
        state,
        x=x,
        m=m,
        t=t,
        sum_alpha_prev=state.sum_alpha,
        sum_alpha=state.sum_alpha + 1.0,
        avg=avg,
    )


def adagrad_step(state: OptimizerState, g: GradientLike, scale: float, eps: float) -> OptimizerState:
    """Coordinate-wise AdaGrad; the current gradient enters the accumulator first.

    Coordinates whose denominator is exactly zero (``eps == 0`` and no
    gradient mass so far) are left in place.
    """
    if eps < 0:
        raise ConfigurationError("eps must be non-negative")
    _require_positive(scale=scale)
    g = _as_gradient(g, state.dim)

    accum_sq = state.accum_sq + g * g
    denom = np.sqrt(eps + accum_sq)
    step = np.divide(g, denom, out=np.zeros_like(g), where=denom > 0)
    return dataclasses.replace(
        state,
        x=state.x - scale * step,
        t=state.t + 1,
        sum_alpha_prev=state.sum_alpha,
        sum_alpha=state.sum_alpha + 1.0,
        accum_sq=accum_sq,
        accum_sq_norm=state.accum_sq_norm + float(g @ g),
    )


def ftrl_sgdm_step(
    state: OptimizerState,
    g: GradientLike,
    sched: StepsizeSchedule,
    alpha: Weights = unit_weights,
) -> OptimizerState:
    """One step of FTRL-based SGDM.

    ``alpha`` maps a 1-based index to its positive weight; ``alpha(t + 1)``
    is needed at step ``t`` for the shrink factor. Adaptive schedules see
    the accumulators after ``g_t`` has been folded in.
    """
    t = state.t
    a_t = float(alpha(t))
    a_next = float(alpha(t + 1))
    if not (a_t > 0 and a_next > 0):
        raise ConfigurationError(f"weights must be positive, got alpha_{t}={a_t}, alpha_{t + 1}={a_next}")
    if sched.adaptive and not sched.eps > 0:
        raise ConfigurationError("adaptive schedules need eps > 0 inside FTRL-based SGDM")
    g = _as_gradient(g, state.dim)

    s_prev = state.sum_alpha
    s = s_prev + a_t
    s_next = s + a_next
    beta = s_prev / s  # exactly 0 at t = 1
    m = beta * state.m + (1.0 - beta) * g

    ag = a_t * g
    accum_sq = state.accum_sq + ag * ag
    accum_sq_norm = state.accum_sq_norm + float(ag @ ag)
    gamma = sched.gamma(t, accum_sq, accum_sq_norm)

    eta = (a_next * s / s_next) * np.asarray(gamma, dtype=np.float64)
    x = (s / s_next) * state.x + (a_next / s_next) * state.x1 - eta * m
    return dataclasses.replace(
        state,
        x=x,
        m=m,
        t=t + 1,
        sum_alpha=s,
        sum_alpha_prev=s_prev,
        accum_sq=accum_sq,
        accum_sq_norm=accum_sq_norm,
    )


@dataclass(frozen=True)
class OnlineToBatchState:
    """Running sums for anytime online-to-batch over quadratic-regularized FTRL.

    ``w`` is the latest FTRL point ``w_t`` and ``x`` the weighted average
    ``sum_i alpha_i w_i / sum_i alpha_i`` over ``i <= t``.
    """

    w1: np.ndarray
    w: np.ndarray
    x: np.ndarray
    t: int
    sum_alpha: float
    sum_alpha_g: np.ndarray
    sum_alpha_w: np.ndarray

    @classmethod
    def initial(cls, w1, alpha: Weights = unit_weights) -> "OnlineToBatchState":
        w1 = np.array(w1, dtype=np.float64, ndmin=1)
        a1 = float(alpha(1))
        if not a1 > 0:
            raise ConfigurationError("alpha_1 must be positive")
        return cls(
            w1=w1,
            w=w1.copy(),
            x=w1.copy(),
            t=1,
            sum_alpha=a1,
            sum_alpha_g=np.zeros_like(w1),
            sum_alpha_w=a1 * w1,
        )


def o2b_ftrl_step(
    state: OnlineToBatchState,
    g: GradientLike,
    gamma,
    alpha: Weights = unit_weights,
) -> OnlineToBatchState:
    """Feed ``g_t`` (taken at ``state.x``); returns the state holding ``w_{t+1}``, ``x_{t+1}``."""
    if state.t < 1 or not state.sum_alpha > 0:
        raise StateError("online-to-batch state was not initialised")
    t = state.t
    a_t = float(alpha(t))
    a_next = float(alpha(t + 1))
    if not (a_t > 0 and a_next > 0):
        raise ConfigurationError("weights must be positive")
    g = _as_gradient(g, state.w1.shape[0])
    gamma = np.asarray(gamma, dtype=np.float64)
    if np.any(gamma <= 0):
        raise ConfigurationError("gamma must be positive")

    sum_alpha_g = state.sum_alpha_g + a_t * g
    w = state.w1 - gamma * sum_alpha_g
    sum_alpha = state.sum_alpha + a_next
    sum_alpha_w = state.sum_alpha_w + a_next * w
    return OnlineToBatchState(
        w1=state.w1,
        w=w,
        x=sum_alpha_w / sum_alpha,
        t=t + 1,
        sum_alpha=sum_alpha,
        sum_alpha_g=sum_alpha_g,
        sum_alpha_w=sum_alpha_w,
    )


# ---------------------------------------------------------------------------
# Stateful wrappers used by the experiment harness
# ---------------------------------------------------------------------------


class Optimizer:
    """Mutable holder around an :class:`OptimizerState`.

    ``x`` is where the next gradient must be taken; ``output`` is the point
    that is reported (the last iterate, or the running average).
    """

    name = "base"

    def __init__(self, x1, average: bool = False):
        self.state = OptimizerState.initial(x1, average=average)

    @property
    def x(self) -> np.ndarray:
        return self.state.x

    @property
    def output(self) -> np.ndarray:
        return self.state.x

    def step(self, g: GradientLike) -> None:
        raise NotImplementedError


class SGDM(Optimizer):
    """Constant-momentum SGDM with ``eta_t`` taken from a schedule."""

    name = "SGDM"

    def __init__(self, x1, lr: StepsizeSchedule, beta: float = 0.9, average: bool = False):
        super().__init__(x1, average=average)
        if not 0.0 <= beta <= 1.0:
            raise ConfigurationError("beta must lie in [0, 1]")
        self.lr = lr
        self.beta = beta

    def step(self, g):
        eta = float(self.lr.gamma(self.state.t, self.state.accum_sq, self.state.accum_sq_norm))
        self.state = sgdm_step(self.state, g, eta, self.beta)


class SGDMAvg(SGDM):
    name = "SGDM-AVG"

    def __init__(self, x1, lr: StepsizeSchedule, beta: float = 0.9):
        super().__init__(x1, lr, beta, average=True)

    @property
    def output(self):
        return self.state.avg


class AdaGrad(Optimizer):
    name = "AdaGrad"

    def __init__(self, x1, scale: float, eps: float = 1e-8):
        super().__init__(x1)
        self.scale = scale
        self.eps = eps

    def step(self, g):
        self.state = adagrad_step(self.state, g, self.scale, self.eps)


class FTRLSGDM(Optimizer):
    """FTRL-based SGDM with any gamma schedule and weight sequence."""

    name = "FTRL-M"

    def __init__(self, x1, sched: StepsizeSchedule, alpha: Weights = unit_weights):
        super().__init__(x1)
        self.sched = sched
        self.alpha = alpha

    def step(self, g):
        self.state = ftrl_sgdm_step(self.state, g, self.sched, self.alpha)
