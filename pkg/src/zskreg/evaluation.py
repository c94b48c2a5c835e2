"""Zero-shot evaluation: folds, scores, C search, rank statistics, timing.

Zero-shot cross-validation partitions targets and, independently, each
target's instances into the same number of groups.  Fold f holds out
target-group f (unobserved) and instance-group f (test instances); the two
mixed quadrants -- observed targets with test instances, and unobserved
targets with train instances -- are discarded for consistency, so a fold
never leaks a tested instance into fitting nor an unobserved target into
training.

The comparison score is the relative mean squared error, in percent:
100 * SSE(prediction) / SSE(train-label-mean predictor), evaluated on the
test rows.  0 is perfect, 100 matches the uninformative baseline.
"""

from __future__ import annotations

import time
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _scipy_stats

from . import methods as methods_mod
from .data import ZeroShotDataset, slice_by_target
from .svr import SvrConfig

__all__ = [
    "DEFAULT_C_GRID",
    "TIMING_METHODS",
    "SCORE_DEFINITION",
    "UndefinedScoreError",
    "ZeroShotSplit",
    "make_splits",
    "training_subset",
    "fold_test_arrays",
    "relative_mse",
    "grid_search_c",
    "friedman_ranks",
    "friedman_chi_squared",
    "nemenyi_cd",
    "NemenyiResult",
    "FoldOutcome",
    "BenchmarkCell",
    "BenchmarkReport",
    "run_benchmark",
    "in_sample_scores",
    "TimingCell",
    "run_timing",
]

DEFAULT_C_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
TIMING_METHODS = ("BL_Q", "DSIL_PHI", "DSIL_KPHI", "DSIL_KQ")

SCORE_DEFINITION = (
    "relative MSE (percent) = 100 * sum((y - y_hat)^2) / "
    "sum((y - mean(train labels))^2) on the zero-shot test rows; "
    "0 is perfect, 100 matches the train-mean predictor"
)


class UndefinedScoreError(ValueError):
    """Constant test labels equal to the train mean: score undefined."""


@dataclass(frozen=True)
class ZeroShotSplit:
    """One fold: row sets plus the observed/unobserved target partition."""

    train_rows: np.ndarray
    test_rows: np.ndarray
    observed_targets: tuple[str, ...]
    unobserved_targets: tuple[str, ...]


def make_splits(ds: ZeroShotDataset, folds: int, seed: int) -> list[ZeroShotSplit]:
    """Deterministic zero-shot folds over both targets and instances."""
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    slices = slice_by_target(ds)
    m = len(slices)
    if m < folds:
        raise ValueError(f"need at least {folds} targets for {folds}-fold zero-shot CV, got {m}")
    for sl in slices:
        if len(sl) < folds:
            raise ValueError(
                f"target {sl.target_id!r} has {len(sl)} instances; {folds}-fold CV needs >= {folds}"
            )
    rng = np.random.default_rng(seed)
    target_groups = np.array_split(rng.permutation(m), folds)
    instance_groups = [
        np.array_split(sl.rows[rng.permutation(len(sl))], folds) for sl in slices
    ]

    splits = []
    for f in range(folds):
        unobserved = set(int(t) for t in target_groups[f])
        test_rows = np.concatenate([instance_groups[t][f] for t in sorted(unobserved)])
        train_parts = [
            instance_groups[t][g]
            for t in range(m)
            if t not in unobserved
            for g in range(folds)
            if g != f
        ]
        train_rows = np.concatenate(train_parts)
        splits.append(
            ZeroShotSplit(
                train_rows=np.sort(train_rows),
                test_rows=np.sort(test_rows),
                observed_targets=tuple(
                    sl.target_id for t, sl in enumerate(slices) if t not in unobserved
                ),
                unobserved_targets=tuple(
                    sl.target_id for t, sl in enumerate(slices) if t in unobserved
                ),
            )
        )
    return splits


def training_subset(ds: ZeroShotDataset, split: ZeroShotSplit) -> ZeroShotDataset:
    """Train rows with the side table restricted to observed targets."""
    return ds.take(
        split.train_rows,
        side_info=ds.side_info.restrict(split.observed_targets),
        name=f"{ds.name}[train]",
    )


def fold_test_arrays(ds: ZeroShotDataset, split: ZeroShotSplit) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(X_test, S_test, y_test) for the fold's unobserved-target test rows."""
    rows = split.test_rows
    return ds.features[rows], ds.side_rows()[rows], ds.labels[rows]


def relative_mse(y_true, y_pred, y_train_mean: float) -> float:
    """100 * SSE(prediction) / SSE(constant train-mean predictor)."""
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}")
    if y_true.size == 0:
        raise ValueError("empty score input")
    denom = float(np.sum((y_true - y_train_mean) ** 2))
    if denom == 0.0:
        raise UndefinedScoreError(
            "test labels are constant and equal to the train mean; relative MSE undefined"
        )
    return 100.0 * float(np.sum((y_true - y_pred) ** 2)) / denom


def _derive_seed(seed: int, *parts) -> int:
    """Stable sub-seed from a master seed and string parts (run-to-run fixed)."""
    h = zlib.crc32("|".join(str(p) for p in parts).encode("utf-8"))
    return (int(seed) * 0x9E3779B1 + h) & 0x7FFF_FFFF_FFFF_FFFF


def grid_search_c(
    ds_train: ZeroShotDataset,
    variant: str,
    grid=DEFAULT_C_GRID,
    base_cfg: SvrConfig = SvrConfig(),
    folds: int = 3,
    seed: int = 0,
) -> SvrConfig:
    """Pick C minimizing inner zero-shot CV mean MSE; ties go to smaller C."""
    if len(grid) == 0:
        raise ValueError("empty C grid")
    splits = make_splits(ds_train, folds, seed)
    prepared = [
        (training_subset(ds_train, sp), *fold_test_arrays(ds_train, sp)) for sp in splits
    ]
    best_c = None
    best_mse = np.inf
    for c in sorted(float(c) for c in grid):
        total = 0.0
        for sub, X_te, S_te, y_te in prepared:
            reg = methods_mod.fit(sub, variant, base_cfg.with_c(c))
            resid = y_te - reg.predict_many(X_te, S_te)
            total += float(np.mean(resid**2))
        mse = total / len(prepared)
        if mse < best_mse:
            best_mse = mse
            best_c = c
    return base_cfg.with_c(best_c)


# --- rank statistics ---------------------------------------------------------

# Studentized-range-derived q constants for the Nemenyi test, k = 2..10,
# as used in the standard rank-based comparison of learners over datasets.
NEMENYI_Q_TABLE = {
    0.01: (2.576, 2.913, 3.113, 3.255, 3.364, 3.452, 3.526, 3.590, 3.646),
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}


def _row_ranks(scores: np.ndarray) -> np.ndarray:
    return np.vstack([_scipy_stats.rankdata(row, method="average") for row in scores])


def friedman_ranks(scores) -> tuple[np.ndarray, np.ndarray]:
    """Per-dataset ranks (1 = lowest error, ties averaged) and column means."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 2 or scores.shape[1] < 2:
        raise ValueError("friedman_ranks needs a (datasets >= 2) x (methods >= 2) matrix")
    if np.isnan(scores).any():
        raise ValueError("NaN scores cannot be ranked")
    ranks = _row_ranks(scores)
    return ranks, ranks.mean(axis=0)


def friedman_chi_squared(scores) -> tuple[float, float]:
    """Friedman chi-squared statistic and p-value over the score matrix."""
    ranks, avg = friedman_ranks(scores)
    n, k = ranks.shape
    chi2 = 12.0 * n / (k * (k + 1)) * (float(np.sum(avg**2)) - k * (k + 1) ** 2 / 4.0)
    p = float(_scipy_stats.chi2.sf(chi2, k - 1))
    return chi2, p


def nemenyi_cd(k: int, n_datasets: int, alpha: float = 0.05) -> float:
    """Critical difference q_alpha(k) * sqrt(k(k+1) / (6N))."""
    if not 2 <= k <= 10:
        raise ValueError(f"k must be in 2..10, got {k}")
    if n_datasets < 1:
        raise ValueError(f"N must be >= 1, got {n_datasets}")
    table = NEMENYI_Q_TABLE.get(round(float(alpha), 2))
    if table is None:
        raise ValueError(f"unsupported alpha {alpha!r}; supported: 0.01, 0.05, 0.10")
    q = table[k - 2]
    return q * float(np.sqrt(k * (k + 1) / (6.0 * n_datasets)))


@dataclass(frozen=True)
class NemenyiResult:
    """Critical difference plus pairwise significance flags at one alpha."""

    k: int
    n_datasets: int
    alpha: float
    critical_difference: float
    pairwise: tuple[tuple[str, str, float, bool], ...]  # (a, b, |rank diff|, significant)


def _nemenyi_result(methods: list[str], avg_ranks: np.ndarray, n: int, alpha: float) -> NemenyiResult:
    k = len(methods)
    cd = nemenyi_cd(k, n, alpha)
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = abs(float(avg_ranks[i] - avg_ranks[j]))
            pairs.append((methods[i], methods[j], diff, diff >= cd))
    return NemenyiResult(k=k, n_datasets=n, alpha=alpha, critical_difference=cd, pairwise=tuple(pairs))


# --- benchmark harness -------------------------------------------------------


@dataclass(frozen=True)
class FoldOutcome:
    fold: int
    chosen_c: float
    rel_mse: float
    n_train: int
    n_test: int


@dataclass
class BenchmarkCell:
    dataset: str
    method: str
    score: float = np.nan
    fold_outcomes: tuple[FoldOutcome, ...] = ()
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and np.isfinite(self.score)


@dataclass
class BenchmarkReport:
    """Per-cell scores plus rank statistics over complete dataset rows."""

    methods: list[str]
    dataset_names: list[str]
    cells: list[BenchmarkCell]
    folds: int
    seed: int
    score_definition: str = SCORE_DEFINITION
    ranked_datasets: list[str] = field(default_factory=list)
    ranks: dict[str, dict[str, float]] = field(default_factory=dict)
    average_ranks: dict[str, float] = field(default_factory=dict)
    friedman_chi2: float | None = None
    friedman_p: float | None = None
    nemenyi: list[NemenyiResult] = field(default_factory=list)
    stats_note: str | None = None

    def cell(self, dataset: str, method: str) -> BenchmarkCell:
        for c in self.cells:
            if c.dataset == dataset and c.method == method:
                return c
        raise KeyError((dataset, method))

    def score_matrix(self) -> np.ndarray:
        """(n_datasets, n_methods) matrix, NaN for failed cells."""
        out = np.full((len(self.dataset_names), len(self.methods)), np.nan)
        for c in self.cells:
            i = self.dataset_names.index(c.dataset)
            j = self.methods.index(c.method)
            out[i, j] = c.score if c.ok else np.nan
        return out


def _evaluate_cell(
    ds: ZeroShotDataset,
    method: str,
    folds: int,
    seed: int,
    base_cfg: SvrConfig,
    c_grid,
) -> BenchmarkCell:
    """Outer zero-shot CV with a per-fold inner grid search over C."""
    cell = BenchmarkCell(dataset=ds.name, method=method)
    try:
        splits = make_splits(ds, folds, _derive_seed(seed, ds.name, "outer"))
        outcomes = []
        scores = []
        for f, sp in enumerate(splits):
            sub = training_subset(ds, sp)
            cfg = grid_search_c(
                sub, method, c_grid, base_cfg, folds=folds,
                seed=_derive_seed(seed, ds.name, "inner", f),
            )
            reg = methods_mod.fit(sub, method, cfg)
            X_te, S_te, y_te = fold_test_arrays(ds, sp)
            score = relative_mse(y_te, reg.predict_many(X_te, S_te), float(sub.labels.mean()))
            scores.append(score)
            outcomes.append(
                FoldOutcome(fold=f, chosen_c=cfg.c, rel_mse=score,
                            n_train=len(sp.train_rows), n_test=len(sp.test_rows))
            )
        cell.score = float(np.mean(scores))
        cell.fold_outcomes = tuple(outcomes)
    except Exception as exc:  # a failing method marks the cell, not the run
        cell.error = f"{type(exc).__name__}: {exc}"
    return cell


def _cell_job(args) -> BenchmarkCell:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return _evaluate_cell(*args)


def run_benchmark(
    datasets,
    methods,
    folds: int = 3,
    seed: int = 0,
    svr_cfg: SvrConfig = SvrConfig(),
    c_grid=DEFAULT_C_GRID,
    alphas=(0.05,),
    max_parallel: int = 1,
) -> BenchmarkReport:
    """Score every dataset x method cell, then rank and test the methods.

    Cells are independent; `max_parallel` > 1 runs them in worker
    processes.  Results are identical for any parallelism degree.
    """
    datasets = list(datasets)
    methods = [str(m) for m in methods]
    if not datasets or not methods:
        raise ValueError("need at least one dataset and one method")
    names = [ds.name for ds in datasets]
    if len(set(names)) != len(names):
        raise ValueError(f"dataset names must be unique, got {names}")

    jobs = [(ds, m, folds, seed, svr_cfg, c_grid) for ds in datasets for m in methods]
    if max_parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_parallel) as pool:
            cells = list(pool.map(_cell_job, jobs))
    else:
        cells = [_cell_job(j) for j in jobs]

    report = BenchmarkReport(
        methods=methods, dataset_names=names, cells=cells, folds=folds, seed=seed
    )
    _attach_statistics(report, alphas)
    return report


def _attach_statistics(report: BenchmarkReport, alphas=(0.05,)) -> None:
    """Fill ranks and Friedman/Nemenyi fields over complete dataset rows."""
    matrix = report.score_matrix()
    complete = [i for i in range(len(report.dataset_names)) if not np.isnan(matrix[i]).any()]
    report.ranked_datasets = [report.dataset_names[i] for i in complete]
    if complete:
        ranks = _row_ranks(matrix[complete])
        for row, i in enumerate(complete):
            report.ranks[report.dataset_names[i]] = {
                m: float(ranks[row, j]) for j, m in enumerate(report.methods)
            }
        avg = ranks.mean(axis=0)
        report.average_ranks = {m: float(avg[j]) for j, m in enumerate(report.methods)}
    k = len(report.methods)
    n = len(complete)
    if k < 2 or n < 2:
        report.stats_note = "statistics require >= 2 methods and >= 2 ranked datasets"
        return
    chi2, p = friedman_chi_squared(matrix[complete])
    report.friedman_chi2 = chi2
    report.friedman_p = p
    avg = np.array([report.average_ranks[m] for m in report.methods])
    for alpha in alphas:
        try:
            report.nemenyi.append(_nemenyi_result(report.methods, avg, n, alpha))
        except ValueError as exc:
            report.stats_note = str(exc)


def in_sample_scores(ds: ZeroShotDataset, method_names, svr_cfg: SvrConfig = SvrConfig()) -> dict[str, float]:
    """Diagnostic mode, no CV: fit on every row and score the same rows.

    Useful for sanity checks on tiny datasets where zero-shot folds are
    impossible; the relative MSE reference is the overall label mean.
    """
    X, S, y = ds.features, ds.side_rows(), ds.labels
    out = {}
    for m in method_names:
        reg = methods_mod.fit(ds, m, svr_cfg)
        out[m] = relative_mse(y, reg.predict_many(X, S), float(y.mean()))
    return out


# --- timing harness ----------------------------------------------------------


@dataclass(frozen=True)
class TimingCell:
    """Wall-clock fit+predict seconds for one method on one grid dataset."""

    method: str
    ax_plus_as: int
    no_times_mo: int
    seconds: tuple[float, ...]

    @property
    def seconds_median(self) -> float:
        return float(np.median(self.seconds))


def run_timing(
    datasets,
    methods=TIMING_METHODS,
    repeats: int = 3,
    svr_cfg: SvrConfig = SvrConfig(),
) -> list[TimingCell]:
    """Median fit+predict wall time per (method, size) cell.

    Every timed fit sees all rows (the dataset's full instance count feeds
    the learner) and prediction covers the same rows.  One warm-up run per
    cell is discarded.  Cells run strictly serially so the clock readings
    stay honest.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    cells = []
    for ds in datasets:
        X_q, S_q = ds.features, ds.side_rows()
        for method in methods:
            def fit_predict_once():
                reg = methods_mod.fit(ds, method, svr_cfg)
                reg.predict_many(X_q, S_q)

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fit_predict_once()  # warm-up, discarded
                times = []
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    fit_predict_once()
                    times.append(time.perf_counter() - t0)
            cells.append(
                TimingCell(
                    method=method,
                    ax_plus_as=ds.a_x + ds.a_s,
                    no_times_mo=ds.n_rows,
                    seconds=tuple(times),
                )
            )
    return cells
