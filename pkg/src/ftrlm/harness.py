"""Experiment runner: grid x seeds x algorithms, per-epoch objectives, CSV.

Every run is a pure function of (config, algorithm, stepsize, seed), so
output bytes do not depend on how runs are scheduled across processes.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import AllRunsDivergedError, ConfigurationError, SlopeUndefinedError
from .libsvm import load_libsvm
from .lower_bound import AdversarialInstance, verify_lower_bound
from .optim import (AdaGrad, AdaptiveCoordinate, FTRLSGDM, Optimizer, Polynomial, SGDM, SGDMAvg,
                    StepsizeSchedule)
from .problems import (AbsDeviation, Dataset, Hinge, LossKind, SampleOrder, SquaredHinge, StochasticOracle,
                       epoch_orders, full_objective, make_loss, synth_separable)

log = logging.getLogger(__name__)

ALGORITHMS = ("SGDM", "SGDM-AVG", "AdaGrad", "FTRL-M", "AdaFTRL-M")
_ALGO_CODES = {
    "SGDM": _kernels.SGDM,
    "SGDM-AVG": _kernels.SGDM_AVG,
    "AdaGrad": _kernels.ADAGRAD,
    "FTRL-M": _kernels.FTRL_M,
    "AdaFTRL-M": _kernels.ADA_FTRL_M,
}
DIVERGENCE_THRESHOLD = 1e12


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _floats(text: str) -> List[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


@dataclass
class ExperimentConfig:
    """What to run. ``grids`` overrides ``grid`` per algorithm.

    Stepsize meaning per algorithm: SGDM and SGDM-AVG use ``eta_t = c/sqrt(t)``,
    AdaGrad uses ``c`` as its scale, FTRL-M uses ``gamma_t = c/sqrt(t)`` and
    AdaFTRL-M the per-coordinate adaptive gamma with scale ``c``.
    """

    algorithms: List[str]
    grid: List[float] = field(default_factory=lambda: [1.0])
    grids: Dict[str, List[float]] = field(default_factory=dict)
    epochs: int = 50
    seeds: List[int] = field(default_factory=lambda: list(range(5)))
    loss: str = "squared_hinge"
    # synthetic data; ignored when ``data_path`` is set
    n: int = 800
    d: int = 100
    margin: float = 0.1
    data_seed: int = 0
    data_path: Optional[str] = None
    n_features: Optional[int] = None
    beta: float = 0.9
    eps: float = 1e-8
    order: SampleOrder = SampleOrder.SHUFFLE_EACH_EPOCH
    reduction: str = "sum"
    backend: str = "numba"
    output: Optional[str] = None

    def __post_init__(self):
        if not self.algorithms:
            raise ConfigurationError("at least one algorithm is required")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ConfigurationError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
        for name in self.algorithms:
            if not self.grid_for(name):
                raise ConfigurationError(f"empty stepsize grid for {name}")
            if any(not c > 0 for c in self.grid_for(name)):
                raise ConfigurationError(f"stepsizes must be positive for {name}")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be non-negative")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError("beta must lie in [0, 1]")
        if self.backend not in ("numba", "python"):
            raise ConfigurationError(f"unknown backend {self.backend!r}")

    def grid_for(self, algo: str) -> List[float]:
        return list(self.grids.get(algo, self.grid))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Reads an INI-style ``key = value`` file with an ``[experiment]``
        section and an optional ``[grids]`` section keyed by algorithm."""
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.optionxform = str
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        if "experiment" not in parser:
            raise ConfigurationError(f"{path}: missing [experiment] section")
        sec = parser["experiment"]
        kw = {}
        for key, raw in sec.items():
            if key == "algorithms":
                kw[key] = [tok for tok in raw.replace(",", " ").split()]
            elif key == "grid":
                kw[key] = _floats(raw)
            elif key == "seeds":
                kw[key] = [int(tok) for tok in raw.replace(",", " ").split()]
            elif key in ("epochs", "n", "d", "data_seed", "n_features"):
                kw[key] = int(raw)
            elif key in ("margin", "beta", "eps"):
                kw[key] = float(raw)
            elif key == "order":
                kw[key] = SampleOrder(raw.strip())
            elif key in ("loss", "data_path", "reduction", "backend", "output"):
                kw[key] = raw.strip()
            else:
                raise ConfigurationError(f"{path}: unknown key {key!r}")
        if "grids" in parser:
            kw["grids"] = {algo: _floats(raw) for algo, raw in parser["grids"].items()}
        return cls(**kw)

    def load_dataset(self) -> Dataset:
        if self.data_path:
            path = Path(self.data_path)
            if not path.is_absolute() and not path.exists():
                path = Path(os.environ.get("FTRLM_DATA_DIR", ".")) / path
            return load_libsvm(path, n_features=self.n_features)
        return synth_separable(self.n, self.d, self.margin, self.data_seed)

    def loss_kind(self) -> LossKind:
        return make_loss(self.loss)


def make_schedule(algo: str, c: float, eps: float = 1e-8) -> StepsizeSchedule:
    if algo == "AdaFTRL-M":
        return AdaptiveCoordinate(scale=c, eps=eps)
    if algo == "AdaGrad":
        return AdaptiveCoordinate(scale=c, eps=eps)
    return Polynomial(c=c, power=0.5)


def make_optimizer(algo: str, x1, c: float, beta: float = 0.9, eps: float = 1e-8) -> Optimizer:
    sched = make_schedule(algo, c, eps)
    if algo == "SGDM":
        return SGDM(x1, sched, beta)
    if algo == "SGDM-AVG":
        return SGDMAvg(x1, sched, beta)
    if algo == "AdaGrad":
        return AdaGrad(x1, c, eps)
    if algo in ("FTRL-M", "AdaFTRL-M"):
        return FTRLSGDM(x1, sched)
    raise ConfigurationError(f"unknown algorithm {algo!r}")


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    algo: str
    schedule: str
    stepsize: float
    seed: int
    epochs: int
    objective_per_epoch: List[float]
    grad_sq_sum: float = 0.0
    grad_sq_per_coord: Optional[np.ndarray] = field(default=None, repr=False)
    wallclock: float = 0.0
    diverged: bool = False

    @property
    def final_objective(self) -> float:
        return self.objective_per_epoch[-1]

    def key(self) -> Tuple[str, float, int]:
        return (self.algo, self.stepsize, self.seed)


def _is_diverged(value: float) -> bool:
    return not math.isfinite(value) or value > DIVERGENCE_THRESHOLD


def _loss_code(kind: LossKind) -> int:
    if isinstance(kind, Hinge):
        return _kernels.HINGE
    if isinstance(kind, SquaredHinge):
        return _kernels.SQUARED_HINGE
    if isinstance(kind, AbsDeviation):
        return _kernels.ABS_DEVIATION
    raise ConfigurationError(f"no compiled path for loss {kind!r}")


def run_single(data: Dataset, kind: LossKind, algo: str, c: float, seed: int,
               cfg: ExperimentConfig) -> RunRecord:
    """One training run; records the full objective at every epoch boundary."""
    started = time.perf_counter()
    d = data.d
    scale = float(data.n) if cfg.reduction == "sum" else 1.0
    x1 = np.zeros(d)
    objective = [full_objective(kind, x1, data, cfg.reduction)]
    gsq = np.zeros(d)
    diverged = False

    if cfg.backend == "numba":
        x, m, avg = x1.copy(), np.zeros(d), x1.copy()
        counters = np.array([1.0, 0.0])
        offsets = kind.offsets(data) if isinstance(kind, AbsDeviation) else np.zeros(data.n)
        orders = epoch_orders(data.n, seed, cfg.order)
        X = data.X
        algo_code, loss_code = _ALGO_CODES[algo], _loss_code(kind)
        for _ in range(cfg.epochs):
            _kernels.run_epoch(algo_code, loss_code, X.indptr, X.indices, X.data, data.y, offsets,
                               next(orders), scale, x, m, x1, gsq, avg, counters, c, cfg.beta, cfg.eps)
            out = avg if algo == "SGDM-AVG" else x
            with np.errstate(all="ignore"):
                value = full_objective(kind, out, data, cfg.reduction)
            objective.append(value)
            if _is_diverged(value):
                diverged = True
                break
    else:
        opt = make_optimizer(algo, x1, c, cfg.beta, cfg.eps)
        oracle = StochasticOracle(data, kind, seed, cfg.order, cfg.reduction)
        for _ in range(cfg.epochs):
            for _ in range(data.n):
                sample = oracle(opt.x)
                gsq += sample.g * sample.g
                opt.step(sample)
            with np.errstate(all="ignore"):
                value = full_objective(kind, opt.output, data, cfg.reduction)
            objective.append(value)
            if _is_diverged(value):
                diverged = True
                break

    if diverged:
        log.warning("%s c=%g seed=%d diverged after %d epochs", algo, c, seed, len(objective) - 1)
    return RunRecord(
        algo=algo,
        schedule=make_schedule(algo, c, cfg.eps).describe(),
        stepsize=c,
        seed=seed,
        epochs=len(objective) - 1,
        objective_per_epoch=objective,
        grad_sq_sum=float(gsq.sum()),
        grad_sq_per_coord=gsq,
        wallclock=time.perf_counter() - started,
        diverged=diverged,
    )


def _run_job(args):
    data, kind, algo, c, seed, cfg = args
    return run_single(data, kind, algo, c, seed, cfg)


def run_experiment(cfg: ExperimentConfig, data: Optional[Dataset] = None, threads: int = 1) -> List[RunRecord]:
    """All (algorithm, stepsize, seed) runs, sorted by that key.

    ``threads > 1`` fans runs out to worker processes.
    """
    data = cfg.load_dataset() if data is None else data
    kind = cfg.loss_kind()
    jobs = [(data, kind, algo, c, seed, cfg)
            for algo in cfg.algorithms for c in cfg.grid_for(algo) for seed in cfg.seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_job, jobs))
    else:
        records = [_run_job(job) for job in jobs]
    return sorted(records, key=RunRecord.key)


def mean_series(records: Iterable[RunRecord]) -> Dict[Tuple[str, float], np.ndarray]:
    """Seed-averaged objective per (algo, stepsize), diverged runs excluded."""
    groups: Dict[Tuple[str, float], List[List[float]]] = defaultdict(list)
    for rec in records:
        if not rec.diverged:
            groups[(rec.algo, rec.stepsize)].append(rec.objective_per_epoch)
    return {key: np.mean(np.asarray(runs, dtype=np.float64), axis=0) for key, runs in sorted(groups.items())}


def grid_select(records: Sequence[RunRecord]) -> Dict[str, float]:
    """Best stepsize per algorithm by mean final objective; ties go to the smaller stepsize."""
    algos = sorted({rec.algo for rec in records})
    means = mean_series(records)
    best = {}
    for algo in algos:
        candidates = [(series[-1], c) for (a, c), series in means.items() if a == algo]
        if not candidates:
            raise AllRunsDivergedError(f"every run of {algo} diverged")
        best[algo] = min(candidates)[1]
    return best


def slope_fit(values, window: float = 0.5, f_star: float = 0.0, epochs=None) -> float:
    """Least-squares slope of ``log(value - f_star)`` against ``log(epoch)``
    over the last ``window`` fraction of points.

    ``epochs`` defaults to ``1..len(values)``. Gaps under 1e-15 are clipped;
    negative gaps are an error.
    """
    values = np.asarray(values, dtype=np.float64)
    epochs = np.arange(1, values.size + 1, dtype=np.float64) if epochs is None else np.asarray(epochs, float)
    if epochs.shape != values.shape:
        raise ConfigurationError("epochs and values differ in length")
    if not 0 < window <= 1:
        raise ConfigurationError("window must lie in (0, 1]")
    k = int(math.ceil(window * values.size))
    gaps = values[-k:] - f_star
    xs = epochs[-k:]
    if k < 3:
        raise SlopeUndefinedError(f"need at least 3 points in the window, got {k}")
    if np.any(~np.isfinite(gaps)) or np.any(gaps < 0) or np.any(xs <= 0):
        raise SlopeUndefinedError("gaps must be finite and non-negative, epochs positive")
    slope, _ = np.polyfit(np.log(xs), np.log(np.maximum(gaps, 1e-15)), 1)
    return float(slope)


def record_slope(rec_or_series, window: float = 0.5, f_star: float = 0.0) -> float:
    """Tail slope of a per-epoch series whose first entry is the initial point."""
    series = rec_or_series.objective_per_epoch if isinstance(rec_or_series, RunRecord) else rec_or_series
    return slope_fit(np.asarray(series)[1:], window=window, f_star=f_star)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

CSV_HEADER = ("algo", "schedule", "seed", "epoch", "objective")


def _fmt(value: float) -> str:
    return f"{value:.16e}"


def emit_csv(records: Sequence[RunRecord], path) -> None:
    """Writes one row per epoch per run, then the seed mean of each group.

    Diverged runs are left out of the file.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    by_group: Dict[Tuple[str, float], List[RunRecord]] = defaultdict(list)
    for rec in sorted(records, key=RunRecord.key):
        by_group[(rec.algo, rec.stepsize)].append(rec)
    for (algo, _), recs in by_group.items():
        ok = [r for r in recs if not r.diverged]
        for rec in ok:
            for epoch, value in enumerate(rec.objective_per_epoch):
                writer.writerow((algo, rec.schedule, rec.seed, epoch, _fmt(value)))
        if ok:
            mean = np.mean([r.objective_per_epoch for r in ok], axis=0)
            for epoch, value in enumerate(mean):
                writer.writerow((algo, ok[0].schedule, "mean", epoch, _fmt(value)))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> Dict[Tuple[str, str, str], List[float]]:
    """Parses an emitted CSV back into ``{(algo, schedule, seed): series}``."""
    out: Dict[Tuple[str, str, str], List[float]] = defaultdict(list)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ConfigurationError(f"{path}: unexpected header {header}")
        for algo, schedule, seed, epoch, value in reader:
            series = out[(algo, schedule, seed)]
            if int(epoch) != len(series):
                raise ConfigurationError(f"{path}: epochs out of order for {algo} {schedule} {seed}")
            series.append(float(value))
    return dict(out)


# ---------------------------------------------------------------------------
# Lower-bound sweep
# ---------------------------------------------------------------------------

LOWERBOUND_HEADER = ("T", "beta", "alpha", "c", "L", "observed_gap", "theoretical_floor", "ratio")


def lowerbound_sweep(betas: Sequence[float], alphas: Sequence[float], Ts: Sequence[int],
                     c: float = 1.0, L: float = 1.0) -> List[dict]:
    rows = []
    for beta in betas:
        for alpha in alphas:
            for T in Ts:
                report = verify_lower_bound(AdversarialInstance(T=int(T), alpha=alpha, beta=beta, c=c, L=L),
                                            check=False)
                rows.append({
                    "T": int(T), "beta": beta, "alpha": alpha, "c": c, "L": L,
                    "observed_gap": report.observed_gap,
                    "theoretical_floor": report.theoretical_floor,
                    "ratio": report.ratio,
                })
    return rows


def write_lowerbound_csv(rows: Sequence[dict], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(LOWERBOUND_HEADER)
    for row in rows:
        writer.writerow([row["T"], row["beta"], row["alpha"], row["c"], row["L"],
                         _fmt(row["observed_gap"]), _fmt(row["theoretical_floor"]), _fmt(row["ratio"])])
