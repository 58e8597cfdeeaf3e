"""Adversarial convex function on which constant-momentum SGDM is slow.

The function is ``f(x) = max_{i in [T+1]} <h_i, x>`` on ``R^T`` with

    h_{i,j} = a_j   for j < i
    h_{i,i} = -b_i  for i <= T
    h_{i,j} = 0     for j > i

``a_j = L (1 - beta) / (8 (T - j + 1))`` and ``b_j = L j^alpha / (2 T^alpha)``.
Its infimum is 0. Started at the origin with a smallest-index tie-breaking
subgradient oracle, SGDM with ``eta_t = c t^-alpha`` visits a closed-form
trajectory ``z_t`` whose final value is of order ``ln T / T^alpha``.
``AdversarialInstance.floor`` is the target ``L^2 (1-beta)^2 c ln T / (4 T^alpha)``;
``coordinate_floor`` is the smaller value that the per-coordinate bound
``z_{T+1,j} >= L (1-beta) c / (4 T^alpha)`` actually implies.

No routine here materialises the ``(T+1) x T`` matrix: rows are built on
demand and ``f`` is evaluated with a prefix sum in O(T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, List

import numpy as np

from .errors import BoundViolation, ConfigurationError, ConstructionError
from .optim import OptimizerState, sgdm_step

TIE_TOL = 1e-12


@dataclass(frozen=True)
class AdversarialInstance:
    T: int
    alpha: float
    beta: float
    c: float = 1.0
    L: float = 1.0
    a: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ConfigurationError("T must be a positive integer")
        if not 0.0 <= self.alpha <= 0.5:
            raise ConfigurationError("alpha must lie in [0, 1/2]")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigurationError("beta must lie in [0, 1)")
        if not (self.c > 0 and self.L > 0):
            raise ConfigurationError("c and L must be positive")
        j = np.arange(1, self.T + 1, dtype=np.float64)
        a = self.L * (1.0 - self.beta) / (8.0 * (self.T - j + 1.0))
        b = self.L * j**self.alpha / (2.0 * float(self.T) ** self.alpha)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.max_row_norm() > self.L * (1 + 1e-12):
            raise ConfigurationError("construction is not L-Lipschitz")

    def row_norms_sq(self) -> np.ndarray:
        """``||h_i||^2`` for ``i = 1..T+1``."""
        prefix = np.concatenate(([0.0], np.cumsum(self.a**2)))
        return np.concatenate((prefix[:-1] + self.b**2, prefix[-1:]))

    def max_row_norm(self) -> float:
        return float(np.sqrt(self.row_norms_sq().max()))

    def stepsize(self, t: int) -> float:
        return self.c * float(t) ** -self.alpha

    def coordinate_floor(self) -> float:
        """``sum_j a_j`` times the per-coordinate lower bound on ``z_{T+1,j}``.

        This is what the coordinate bound gives before the harmonic sum is
        replaced by ``ln T``; it is smaller than :meth:`floor` by a factor
        of about 8.
        """
        zmin = self.L * (1 - self.beta) * self.c / (4.0 * float(self.T) ** self.alpha)
        return float(self.a.sum()) * zmin

    def floor(self) -> float:
        """Target floor ``L^2 (1-beta)^2 c ln T / (4 T^alpha)`` after ``T`` steps."""
        return (self.L**2 * (1 - self.beta) ** 2 * self.c * math.log(self.T)
                / (4.0 * float(self.T) ** self.alpha))


def hvec(inst: AdversarialInstance, i: int) -> np.ndarray:
    """Row ``h_i`` (1-based ``i`` in ``1..T+1``) as a dense vector."""
    if not 1 <= i <= inst.T + 1:
        raise IndexError(f"row index {i} outside [1, {inst.T + 1}]")
    h = np.zeros(inst.T)
    h[: i - 1] = inst.a[: i - 1]
    if i <= inst.T:
        h[i - 1] = -inst.b[i - 1]
    return h


def _inner_products(inst: AdversarialInstance, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (inst.T,):
        raise ConfigurationError(f"x has shape {x.shape}, expected ({inst.T},)")
    prefix = np.concatenate(([0.0], np.cumsum(inst.a * x)))
    return np.concatenate((prefix[:-1] - inst.b * x, prefix[-1:]))


def eval_f(inst: AdversarialInstance, x) -> tuple[float, int]:
    """Value of ``f`` at ``x`` and the smallest (1-based) index attaining it."""
    values = _inner_products(inst, x)
    top = values.max()
    idx = int(np.flatnonzero(values >= top - TIE_TOL)[0]) + 1
    return float(top), idx


def subgradient(inst: AdversarialInstance, x) -> np.ndarray:
    """Returns ``h_i`` for the smallest active index ``i``."""
    return hvec(inst, eval_f(inst, x)[1])


def iter_z_sequence(inst: AdversarialInstance) -> Iterator[np.ndarray]:
    """Yields ``z_1, ..., z_{T+1}`` lazily.

    Keeps only ``z_t`` and ``M_t = beta M_{t-1} + h_t``, so memory stays
    O(T) even though the full trajectory would be O(T^2).
    """
    T, beta = inst.T, inst.beta
    z = np.zeros(T)
    acc = np.zeros(T)
    yield z.copy()
    for t in range(1, T + 1):
        acc *= beta
        acc[: t - 1] += inst.a[: t - 1]
        acc[t - 1] -= inst.b[t - 1]
        z = z - (1.0 - beta) * inst.stepsize(t) * acc
        yield z.copy()


def z_sequence(inst: AdversarialInstance) -> List[np.ndarray]:
    """The whole trajectory as a list. Quadratic memory; use for small T."""
    return list(iter_z_sequence(inst))


@dataclass(frozen=True)
class LowerBoundReport:
    instance: AdversarialInstance
    observed_gap: float
    gap_at_T: float
    theoretical_floor: float
    sgdm_matches_z: bool
    max_rel_deviation: float
    active_set_ok: bool
    coordinate_floor: float

    @property
    def ratio(self) -> float:
        return self.observed_gap / self.theoretical_floor


def verify_lower_bound(inst: AdversarialInstance, rtol: float = 1e-9, check: bool = True) -> LowerBoundReport:
    """Runs SGDM on the instance and checks it against the closed form.

    The gap is measured at ``z_{T+1}`` (after ``T`` steps); ``gap_at_T`` is
    ``f(z_T)`` for reference. Raises :class:`ConstructionError` if the SGDM
    iterates leave the closed-form trajectory, and :class:`BoundViolation`
    if ``check`` is set and the gap falls below ``inst.floor()``.
    """
    state = OptimizerState.initial(np.zeros(inst.T))
    worst = 0.0
    active_ok = True
    gap_at_T = float("nan")
    for t, z in enumerate(iter_z_sequence(inst), start=1):
        scale = max(float(np.abs(z).max()), np.finfo(float).tiny)
        dev = float(np.abs(state.x - z).max()) / scale
        worst = max(worst, dev)
        if dev > rtol:
            raise ConstructionError(f"SGDM iterate {t} deviates from z_{t} by {dev:.3e} (relative)")
        value, idx = eval_f(inst, state.x)
        active_ok &= idx == t
        if t == inst.T:
            gap_at_T = value
        if t == inst.T + 1:
            break
        state = sgdm_step(state, hvec(inst, idx), inst.stepsize(t), inst.beta)

    observed = eval_f(inst, state.x)[0]
    if check and observed < inst.floor():
        raise BoundViolation(f"gap {observed:.6e} is below the floor {inst.floor():.6e} for {inst}")
    return LowerBoundReport(
        instance=inst,
        observed_gap=observed,
        gap_at_T=gap_at_T,
        theoretical_floor=inst.floor(),
        sgdm_matches_z=True,
        max_rel_deviation=worst,
        active_set_ok=active_ok,
        coordinate_floor=inst.coordinate_floor(),
    )
