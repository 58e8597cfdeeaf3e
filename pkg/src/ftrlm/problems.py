"""Linear-model losses, datasets and stochastic gradient oracles.

Datasets keep their rows in a scipy CSR matrix; feature indices are
0-based internally. Objectives are sums over samples by default, and the
stochastic oracle scales each per-sample subgradient by ``n`` so that its
expectation is a subgradient of the sum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .optim import GradientSample


class SparseVector(NamedTuple):
    indices: np.ndarray
    values: np.ndarray

    def dense(self, d: int) -> np.ndarray:
        out = np.zeros(d)
        out[self.indices] = self.values
        return out


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


class LossKind:
    """A per-sample loss of the score ``s = <w, x>``.

    ``coef`` returns a derivative in ``s`` so that ``coef * x`` is a
    subgradient. At kinks the zero element is chosen.
    """

    name = "loss"

    def values(self, scores: np.ndarray, labels: np.ndarray, data: "Dataset") -> np.ndarray:
        raise NotImplementedError

    def coef(self, scores, labels, data: "Dataset"):
        raise NotImplementedError


@dataclass(frozen=True)
class Hinge(LossKind):
    name = "hinge"

    def values(self, scores, labels, data=None):
        return np.maximum(0.0, 1.0 - labels * scores)

    def coef(self, scores, labels, data=None):
        return np.where(1.0 - labels * scores > 0, -labels, 0.0)


@dataclass(frozen=True)
class SquaredHinge(LossKind):
    name = "squared_hinge"

    def values(self, scores, labels, data=None):
        return np.maximum(0.0, 1.0 - labels * scores) ** 2

    def coef(self, scores, labels, data=None):
        return -2.0 * np.maximum(0.0, 1.0 - labels * scores) * labels


@dataclass(frozen=True, eq=False)
class AbsDeviation(LossKind):
    """``|<x, w - target>|``; labels are ignored.

    A single row holding ``G`` turns this into ``G |w - target|``.
    """

    target: np.ndarray
    name = "abs_deviation"

    def __post_init__(self):
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64))

    def offsets(self, data: "Dataset") -> np.ndarray:
        return data.X @ self.target

    def values(self, scores, labels, data):
        return np.abs(scores - self.offsets(data))

    def coef(self, scores, labels, data):
        return np.sign(scores - self.offsets(data))


def make_loss(name: str, target=None) -> LossKind:
    name = name.lower().replace("-", "_")
    if name == "hinge":
        return Hinge()
    if name in ("squared_hinge", "sqhinge"):
        return SquaredHinge()
    if name in ("abs_deviation", "absdev"):
        if target is None:
            raise ConfigurationError("abs_deviation needs a target vector")
        return AbsDeviation(np.asarray(target, dtype=np.float64))
    raise ConfigurationError(f"unknown loss {name!r}")


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemMeta:
    G: float = 0.0
    G_inf: float = 0.0
    L_smooth: float = 0.0
    sigma: Optional[float] = None
    margin: Optional[float] = None
    f_star: Optional[float] = None
    w_star: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


def describe_rows(X: sp.csr_matrix, **extra) -> ProblemMeta:
    """Per-sample bounds: ``G`` and ``G_inf`` bound the subgradient of one
    hinge term; ``L_smooth`` is the squared-hinge smoothness of the sum."""
    n = X.shape[0]
    sq_norms = np.asarray(X.multiply(X).sum(axis=1)).ravel() if n else np.zeros(0)
    max_sq = float(sq_norms.max()) if n else 0.0
    g_inf = float(np.abs(X.data).max()) if X.nnz else 0.0
    return ProblemMeta(G=np.sqrt(max_sq), G_inf=g_inf, L_smooth=2.0 * n * max_sq, **extra)


@dataclass(frozen=True, eq=False)
class Dataset:
    X: sp.csr_matrix
    y: np.ndarray
    meta: ProblemMeta = field(default_factory=ProblemMeta)

    def __post_init__(self):
        X = sp.csr_matrix(self.X, dtype=np.float64)
        X.sort_indices()
        y = np.asarray(self.y, dtype=np.float64)
        if y.shape != (X.shape[0],):
            raise ConfigurationError("one label per row is required")
        if not np.all(np.abs(y) == 1.0):
            raise ConfigurationError("labels must be +1 or -1")
        if X.nnz > 1:
            row_start = np.zeros(X.nnz, dtype=bool)
            row_start[X.indptr[:-1][X.indptr[:-1] < X.nnz]] = True
            dup = (X.indices[1:] == X.indices[:-1]) & ~row_start[1:]
            if np.any(dup):
                pos = int(np.flatnonzero(dup)[0]) + 1
                row = int(np.searchsorted(X.indptr, pos, side="right")) - 1
                raise ConfigurationError(f"row {row} has duplicate feature indices")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def row(self, i: int) -> SparseVector:
        lo, hi = self.X.indptr[i], self.X.indptr[i + 1]
        return SparseVector(self.X.indices[lo:hi], self.X.data[lo:hi])

    def equals(self, other: "Dataset") -> bool:
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X.indptr, other.X.indptr)
            and np.array_equal(self.X.indices, other.X.indices)
            and np.array_equal(self.X.data, other.X.data)
            and np.array_equal(self.y, other.y)
        )


def from_dense(X, y, **meta) -> Dataset:
    X = sp.csr_matrix(np.asarray(X, dtype=np.float64))
    return Dataset(X, y, describe_rows(X, **meta))


def synth_separable(n: int, d: int, margin: float, seed: int) -> Dataset:
    """Gaussian points labelled by a random unit direction ``u``, each pushed
    ``margin`` further along ``u`` on its own side.

    Every point then has ``y <u, x> >= margin``, so the squared hinge loss
    vanishes at ``w* = u / margin`` for every sample.
    """
    if n < 1 or d < 1:
        raise ConfigurationError("n and d must be at least 1")
    if not margin > 0:
        raise ConfigurationError("margin must be positive")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    X = rng.standard_normal((n, d))
    y = np.where(X @ u >= 0, 1.0, -1.0)
    X += margin * y[:, None] * u
    # roundoff can leave a point a hair inside the margin
    short = margin - y * (X @ u)
    bump = short > 0
    if np.any(bump):
        X[bump] += ((short[bump] + 4 * np.finfo(float).eps * margin) * y[bump])[:, None] * u
    w_star = u / margin
    Xs = sp.csr_matrix(X)
    return Dataset(Xs, y, describe_rows(Xs, margin=margin, f_star=0.0, w_star=w_star))


# ---------------------------------------------------------------------------
# Objectives and oracles
# ---------------------------------------------------------------------------


def loss_and_subgrad(kind: LossKind, w, row: SparseVector, label: float, data: Optional[Dataset] = None):
    """Loss of one sample and its subgradient restricted to the row's support.

    ``data`` is unused by the built-in losses and kept for custom ones.
    """
    w = np.asarray(w, dtype=np.float64)
    score = np.array([float(w[row.indices] @ row.values)])
    labels = np.array([float(label)])
    if isinstance(kind, AbsDeviation):
        ref = np.array([float(kind.target[row.indices] @ row.values)])
        value = float(np.abs(score - ref)[0])
        coef = float(np.sign(score - ref)[0])
    else:
        value = float(kind.values(score, labels, data)[0])
        coef = float(kind.coef(score, labels, data)[0])
    return value, SparseVector(row.indices, coef * row.values)


def full_objective(kind: LossKind, w, data: Dataset, reduction: str = "sum") -> float:
    scores = data.X @ np.asarray(w, dtype=np.float64)
    total = float(kind.values(scores, data.y, data).sum())
    if reduction == "mean":
        return total / data.n
    if reduction != "sum":
        raise ConfigurationError(f"unknown reduction {reduction!r}")
    return total


def full_subgradient(kind: LossKind, w, data: Dataset, reduction: str = "sum") -> np.ndarray:
    scores = data.X @ np.asarray(w, dtype=np.float64)
    g = data.X.T @ kind.coef(scores, data.y, data)
    return g / data.n if reduction == "mean" else g


class SampleOrder(enum.Enum):
    WITH_REPLACEMENT = "with_replacement"
    SHUFFLE_EACH_EPOCH = "shuffle"


def epoch_orders(n: int, seed: int, order: SampleOrder = SampleOrder.SHUFFLE_EACH_EPOCH) -> Iterator[np.ndarray]:
    """Per-epoch index arrays (``n`` draws each), deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    while True:
        if order is SampleOrder.SHUFFLE_EACH_EPOCH:
            yield rng.permutation(n)
        else:
            yield rng.integers(0, n, size=n)


class StochasticOracle:
    """Single-sample subgradients of the summed objective.

    Call it with the current point to get the next :class:`GradientSample`;
    ``meta`` carries the sample index. ``epoch`` counts completed passes of
    ``n`` draws and ``at_epoch_boundary`` is true right after each one.
    """

    def __init__(self, data: Dataset, kind: LossKind, seed: int,
                 order: SampleOrder = SampleOrder.SHUFFLE_EACH_EPOCH, reduction: str = "sum"):
        if data.n == 0:
            raise ConfigurationError("dataset is empty")
        if reduction not in ("sum", "mean"):
            raise ConfigurationError(f"unknown reduction {reduction!r}")
        self.data = data
        self.kind = kind
        self.scale = float(data.n) if reduction == "sum" else 1.0
        self._orders = epoch_orders(data.n, seed, order)
        self._current = next(self._orders)
        self._pos = 0
        self.epoch = 0
        self.steps = 0
        if isinstance(kind, AbsDeviation):
            self._offsets = kind.offsets(data)

    @property
    def at_epoch_boundary(self) -> bool:
        return self._pos == 0 and self.steps > 0

    def __call__(self, w) -> GradientSample:
        i = int(self._current[self._pos])
        self._pos += 1
        self.steps += 1
        if self._pos == self.data.n:
            self._current = next(self._orders)
            self._pos = 0
            self.epoch += 1
        return GradientSample(self.gradient_of(i, w), meta=i)

    def gradient_of(self, i: int, w) -> np.ndarray:
        row = self.data.row(i)
        score = float(np.asarray(w)[row.indices] @ row.values)
        if isinstance(self.kind, AbsDeviation):
            coef = float(np.sign(score - self._offsets[i]))
        else:
            coef = float(self.kind.coef(np.array([score]), self.data.y[i:i + 1])[0])
        g = np.zeros(self.data.d)
        g[row.indices] = (self.scale * coef) * row.values
        return g
