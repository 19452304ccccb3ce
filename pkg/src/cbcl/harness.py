"""Full incremental and few-shot-incremental experiment driver.

Per increment the harness tunes hyperparameters (skipped for singleton grids),
learns the incoming classes, enforces the centroid budget (the reduction is
planned before the new centroids are inserted, using their projected count),
and evaluates on the union of test sets of every class seen so far. Runs
repeat with reshuffled class orders and are aggregated as mean and standard
deviation per increment.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import PREDICTION_MODES, IncrementReport, evaluate
from .dataset import EmbeddingDataset, IncrementSplits, plan_increments
from .errors import ConfigError, MetricError
from .model import CbclModel, Hyperparams, learn_class, total_centroids
from .reduction import apply_reduction, plan_reduction
from .seeding import derive_seed
from .tuning import tune

REDUCTION_MODES = ("cluster", "remove")

DEFAULT_D_GRID = (70.0, 75.0, 80.0, 85.0, 90.0)
DEFAULT_N_GRID = tuple(range(1, 11))
DEFAULT_N_GRID_FEW_SHOT = (1,)


@dataclass
class ExperimentConfig:
    """Everything needed to drive an experiment besides the data itself."""

    classes_per_batch: int
    runs: int = 1
    seed: int = 0
    shots: int | None = None
    budget: int | None = None
    d_grid: tuple[float, ...] = DEFAULT_D_GRID
    n_grid: tuple[int, ...] | None = None  # defaults to 1..10, or (1,) for few-shot
    mode: str = "voting"
    reduction_mode: str = "cluster"
    folds: int = 3
    alpha_offline: float | None = None
    test_fraction: float = 0.2
    shuffle_within_class: bool = False
    reshuffle_per_run: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.mode not in PREDICTION_MODES:
            raise ConfigError(f"mode must be one of {PREDICTION_MODES}, got {self.mode!r}")
        if self.reduction_mode not in REDUCTION_MODES:
            raise ConfigError(
                f"reduction_mode must be one of {REDUCTION_MODES}, got {self.reduction_mode!r}"
            )
        self.d_grid = tuple(sorted({float(d) for d in self.d_grid}))
        if not self.d_grid:
            raise ConfigError("d_grid must be non-empty")
        if self.n_grid is None:
            self.n_grid = DEFAULT_N_GRID_FEW_SHOT if self.shots is not None else DEFAULT_N_GRID
        self.n_grid = tuple(sorted({int(n) for n in self.n_grid}))
        if not self.n_grid:
            raise ConfigError("n_grid must be non-empty")


@dataclass(frozen=True)
class IncrementRecord:
    """Metrics and settings for one increment of one run."""

    index: int
    new_classes: tuple[int, ...]
    hyperparams: Hyperparams
    report: IncrementReport
    alpha_all: float
    alpha_base: float
    alpha_new: float
    total_centroids: int


@dataclass
class RunResult:
    run_index: int
    increments: list[IncrementRecord] = field(default_factory=list)

    @property
    def average_incremental_accuracy(self) -> float:
        """Mean of overall top-1 accuracy over all increments, the base one included."""
        return float(np.mean([rec.alpha_all for rec in self.increments]))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunResult]

    @property
    def num_increments(self) -> int:
        return len(self.runs[0].increments)

    def accuracy_matrix(self) -> np.ndarray:
        """(runs, increments) overall top-1 accuracies."""
        return np.array([[rec.alpha_all for rec in run.increments] for run in self.runs])

    @property
    def per_increment_mean(self) -> np.ndarray:
        return self.accuracy_matrix().mean(axis=0)

    @property
    def per_increment_std(self) -> np.ndarray:
        return self.accuracy_matrix().std(axis=0)

    @property
    def average_incremental_accuracy(self) -> float:
        return float(np.mean([run.average_incremental_accuracy for run in self.runs]))

    @property
    def average_incremental_accuracy_std(self) -> float:
        return float(np.std([run.average_incremental_accuracy for run in self.runs]))

    @property
    def final_accuracy_mean(self) -> float:
        return float(self.accuracy_matrix()[:, -1].mean())

    @property
    def final_accuracy_std(self) -> float:
        return float(self.accuracy_matrix()[:, -1].std())


@dataclass(frozen=True)
class OmegaMetrics:
    """Retention/recall/overall accuracy normalized against an offline baseline."""

    base: float
    new: float
    all: float


def _test_union(
    test_source: EmbeddingDataset,
    splits: IncrementSplits,
    classes: list[int],
) -> EmbeddingDataset:
    idx = np.concatenate([splits.test_indices[cid] for cid in classes])
    return test_source.subset(np.sort(idx))


def _single_run(
    dataset: EmbeddingDataset,
    config: ExperimentConfig,
    run_index: int,
    test_dataset: EmbeddingDataset | None,
) -> RunResult:
    # With reshuffle_per_run off every run consumes identical seed streams,
    # so repeated runs are exact replicas (useful for determinism checks).
    run_tag = run_index if config.reshuffle_per_run else 0
    plan_seed = derive_seed(config.seed, run_tag)
    splits = plan_increments(
        dataset,
        config.classes_per_batch,
        shots=config.shots,
        seed=plan_seed,
        test_dataset=test_dataset,
        test_fraction=config.test_fraction,
        shuffle_within_class=config.shuffle_within_class,
    )
    test_source = test_dataset if test_dataset is not None else dataset
    train_vectors = dataset.vectors.astype(np.float64)

    model = CbclModel(dataset.dim, budget=config.budget)
    run = RunResult(run_index=run_index)
    seen: list[int] = []
    base_classes: list[int] = []
    for t, batch in enumerate(splits.plan.class_batches):
        new_samples = {
            cid: train_vectors[splits.train_indices[cid]] for cid in batch
        }
        if len(config.d_grid) == 1 and len(config.n_grid) == 1:
            hp = Hyperparams(config.d_grid[0], config.n_grid[0])
        else:
            hp = tune(
                model,
                new_samples,
                config.d_grid,
                config.n_grid,
                folds=config.folds,
                seed=derive_seed(config.seed, run_tag, t, 1),
            )

        # Learn the incoming classes off to the side first: their centroids do
        # not depend on the rest of the model, and the budget plan needs their
        # count before they are inserted.
        scratch = CbclModel(dataset.dim)
        for cid in batch:
            learn_class(scratch, cid, new_samples[cid], hp.distance_threshold)
        k_new = total_centroids(scratch)
        if config.budget is not None and total_centroids(model) + k_new > config.budget:
            plan = plan_reduction(model, k_new, config.budget)
            apply_reduction(
                model,
                plan,
                mode=config.reduction_mode,
                seed=derive_seed(config.seed, run_tag, t, 2),
            )
        for cid in batch:
            model.classes[cid] = scratch.classes[cid]
            model.history.append((cid, hp.distance_threshold))
        if t == 0:
            base_classes = list(batch)
        seen.extend(batch)

        test = _test_union(test_source, splits, seen)
        report = evaluate(model, test, n=hp.vote_neighbors, mode=config.mode)
        run.increments.append(
            IncrementRecord(
                index=t,
                new_classes=tuple(batch),
                hyperparams=hp,
                report=report,
                alpha_all=report.accuracy,
                alpha_base=report.accuracy_over(base_classes),
                alpha_new=report.accuracy_over(batch),
                total_centroids=total_centroids(model),
            )
        )
    return run


def run_experiment(
    dataset: EmbeddingDataset,
    config: ExperimentConfig,
    test_dataset: EmbeddingDataset | None = None,
) -> ExperimentResult:
    """Execute all runs of the incremental protocol and aggregate them.

    `dataset` provides training data; when `test_dataset` is omitted a seeded
    per-class 80/20 split of `dataset` supplies the test sets. Runs are
    independent and may execute in parallel (`config.threads`); increments
    within a run are strictly sequential.
    """
    if test_dataset is not None and test_dataset.dim != dataset.dim:
        raise ConfigError("train and test datasets must share the same dimension")
    indices = range(config.runs)
    if config.threads > 1 and config.runs > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            runs = list(
                pool.map(lambda r: _single_run(dataset, config, r, test_dataset), indices)
            )
    else:
        runs = [_single_run(dataset, config, r, test_dataset) for r in indices]
    return ExperimentResult(config=config, runs=runs)


def omega_metrics(result: ExperimentResult, alpha_offline: float) -> OmegaMetrics:
    """Normalized retention metrics over increments 2..T, averaged across runs.

    base = mean of alpha_base_t / alpha_offline, new = mean of alpha_new_t,
    all = mean of alpha_all_t / alpha_offline; values above 1 mean the model
    beats the offline baseline.
    """
    if not 0 < alpha_offline <= 1:
        raise ValueError("alpha_offline must lie in (0, 1]")
    if result.num_increments < 2:
        raise MetricError("omega metrics need at least two increments")
    per_run = []
    for run in result.runs:
        tail = run.increments[1:]
        per_run.append(
            (
                float(np.mean([rec.alpha_base for rec in tail])) / alpha_offline,
                float(np.mean([rec.alpha_new for rec in tail])),
                float(np.mean([rec.alpha_all for rec in tail])) / alpha_offline,
            )
        )
    base, new, all_ = (float(np.mean([p[i] for p in per_run])) for i in range(3))
    return OmegaMetrics(base=base, new=new, all=all_)


# -- experiment config files and result emission --------------------------

_CONFIG_KEYS = {
    "train", "test", "classes_per_batch", "runs", "seed", "shots", "budget",
    "d_grid", "n_grid", "mode", "reduction", "folds", "alpha_offline",
    "test_fraction", "shuffle_within_class", "reshuffle_per_run", "threads",
}

_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False}


def parse_config_file(path) -> tuple[ExperimentConfig, str, str | None]:
    """Parse a flat key=value experiment file -> (config, train path, test path)."""
    raw: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
        raw[key] = value

    if "train" not in raw:
        raise ConfigError(f"{path}: missing required key 'train'")
    if "classes_per_batch" not in raw:
        raise ConfigError(f"{path}: missing required key 'classes_per_batch'")

    def parse_bool(key: str, default: bool) -> bool:
        if key not in raw:
            return default
        value = raw[key].lower()
        if value not in _BOOL_VALUES:
            raise ConfigError(f"{path}: {key} must be true/false, got {raw[key]!r}")
        return _BOOL_VALUES[value]

    try:
        config = ExperimentConfig(
            classes_per_batch=int(raw["classes_per_batch"]),
            runs=int(raw.get("runs", "1")),
            seed=int(raw.get("seed", "0")),
            shots=int(raw["shots"]) if raw.get("shots") else None,
            budget=int(raw["budget"]) if raw.get("budget") else None,
            d_grid=tuple(float(v) for v in raw["d_grid"].split(",")) if raw.get("d_grid")
            else DEFAULT_D_GRID,
            n_grid=tuple(int(v) for v in raw["n_grid"].split(",")) if raw.get("n_grid")
            else None,
            mode=raw.get("mode", "voting"),
            reduction_mode=raw.get("reduction", "cluster"),
            folds=int(raw.get("folds", "3")),
            alpha_offline=float(raw["alpha_offline"]) if raw.get("alpha_offline") else None,
            test_fraction=float(raw.get("test_fraction", "0.2")),
            shuffle_within_class=parse_bool("shuffle_within_class", False),
            reshuffle_per_run=parse_bool("reshuffle_per_run", True),
            threads=int(raw.get("threads", "1")),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config, raw["train"], raw.get("test")


def write_increment_csv(result: ExperimentResult, destination) -> None:
    """Per-increment rows for every run."""
    with open(destination, "w", newline="") as sink:
        writer = csv.writer(sink)
        writer.writerow(
            [
                "run", "increment", "classes_seen", "n_test", "accuracy",
                "base_accuracy", "new_accuracy", "distance_threshold",
                "vote_size", "total_centroids",
            ]
        )
        for run in result.runs:
            seen = 0
            for rec in run.increments:
                seen += len(rec.new_classes)
                writer.writerow(
                    [
                        run.run_index, rec.index, seen, rec.report.n_test,
                        f"{rec.alpha_all:.6f}", f"{rec.alpha_base:.6f}",
                        f"{rec.alpha_new:.6f}", f"{rec.hyperparams.distance_threshold:g}",
                        rec.hyperparams.vote_neighbors, rec.total_centroids,
                    ]
                )


def summary_text(result: ExperimentResult) -> str:
    """Aggregate metrics as `metric<TAB>value` lines."""
    lines = [
        f"runs\t{len(result.runs)}",
        f"increments\t{result.num_increments}",
        f"average_incremental_accuracy\t{result.average_incremental_accuracy:.6f}",
        f"average_incremental_accuracy_std\t{result.average_incremental_accuracy_std:.6f}",
        f"final_accuracy\t{result.final_accuracy_mean:.6f}",
        f"final_accuracy_std\t{result.final_accuracy_std:.6f}",
    ]
    for t, (mean, std) in enumerate(zip(result.per_increment_mean, result.per_increment_std)):
        lines.append(f"increment_accuracy.{t}\t{mean:.6f}\t{std:.6f}")
    if result.config.alpha_offline is not None and result.num_increments >= 2:
        omega = omega_metrics(result, result.config.alpha_offline)
        lines.append(f"omega_base\t{omega.base:.6f}")
        lines.append(f"omega_new\t{omega.new:.6f}")
        lines.append(f"omega_all\t{omega.all:.6f}")
    return "\n".join(lines) + "\n"


def write_summary(result: ExperimentResult, destination) -> None:
    Path(destination).write_text(summary_text(result))
