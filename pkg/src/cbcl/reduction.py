"""Memory-budget enforcement: per-class centroid targets and k-means compaction.

When storing the incoming classes' centroids would exceed the budget K, each
old class y gives up centroids in proportion to how many it holds:

    target_y = floor(count_y * (1 - required_reduction / old_total))

clamped to at least one centroid per class; any overshoot the clamps introduce
is taken back from the classes with the most centroids first. Targets are then
realized either by clustering each class's centroids down to its target
("cluster" mode, the default) or by dropping the lightest centroids
("remove" mode, kept as an ablation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, PlanError
from .model import CbclModel, Centroid
from .seeding import derive_seed


@dataclass(frozen=True)
class ReductionPlan:
    """Per-class centroid targets that fit the incoming classes under the budget."""

    k_t: int
    k_new: int
    k_r: int
    per_class_target: dict[int, int]


@dataclass(frozen=True, eq=False)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...]


def plan_reduction(model: CbclModel, k_new: int, budget: int) -> ReductionPlan:
    """Compute per-class centroid targets so k_new more centroids fit under budget.

    A no-op plan (targets = current counts) when everything already fits.
    Otherwise each class keeps floor(count * kept_fraction), at least 1; the
    flooring shortfall is resolved by decrementing classes in descending order
    of current centroid count (ties to the lower class id).
    """
    if k_new < 0:
        raise ValueError("k_new must be non-negative")
    if budget < 1:
        raise ValueError("budget must be positive")
    counts = {cid: len(cm.centroids) for cid, cm in model.classes.items() if cm.centroids}
    k_t = sum(counts.values())
    if budget < len(counts) + k_new:
        raise ConfigError(
            f"budget {budget} cannot hold one centroid for each of {len(counts)} "
            f"existing classes plus {k_new} incoming centroids"
        )
    if k_t + k_new <= budget:
        return ReductionPlan(k_t=k_t, k_new=k_new, k_r=0, per_class_target=dict(counts))

    k_r = k_t + k_new - budget
    kept = k_t - k_r
    # Integer arithmetic keeps the floor exact.
    targets = {cid: max(1, (cnt * kept) // k_t) for cid, cnt in counts.items()}
    by_size = sorted(counts, key=lambda cid: (-counts[cid], cid))
    while sum(targets.values()) > budget - k_new:
        shrunk = False
        for cid in by_size:
            if sum(targets.values()) <= budget - k_new:
                break
            if targets[cid] > 1:
                targets[cid] -= 1
                shrunk = True
        if not shrunk:
            raise ConfigError("budget infeasible even with one centroid per class")
    return ReductionPlan(k_t=k_t, k_new=k_new, k_r=k_r, per_class_target=targets)


def apply_reduction(
    model: CbclModel,
    plan: ReductionPlan,
    mode: str = "cluster",
    seed: int = 0,
) -> CbclModel:
    """Shrink each class to its planned centroid count. Mutates and returns model.

    cluster mode runs k-means over the class's centroid vectors and replaces
    them with the k means, each weighted by the summed weights of its members,
    so per-class weight totals are conserved. remove mode keeps the
    heaviest-weight centroids (ties to the lower index). Training-sample
    counts are never touched.
    """
    if mode not in ("cluster", "remove"):
        raise ValueError(f"mode must be 'cluster' or 'remove', got {mode!r}")
    for cid, target in plan.per_class_target.items():
        cm = model.classes.get(cid)
        if cm is None:
            raise PlanError(f"plan covers class {cid} which is not in the model")
        if target > len(cm.centroids):
            raise PlanError(
                f"class {cid}: target {target} exceeds current {len(cm.centroids)} centroids"
            )
        if target < 1:
            raise PlanError(f"class {cid}: target must be >= 1")

    for cid in sorted(plan.per_class_target):
        cm = model.classes[cid]
        target = plan.per_class_target[cid]
        if target == len(cm.centroids):
            continue
        if mode == "remove":
            order = sorted(range(len(cm.centroids)), key=lambda i: (-cm.centroids[i].weight, i))
            keep = sorted(order[:target])
            cm.centroids = [cm.centroids[i] for i in keep]
        else:
            points = cm.centroid_matrix()
            weights = cm.weights()
            result = kmeans(points, target, seed=derive_seed(seed, cid))
            merged: list[Centroid] = []
            for j in range(target):
                members = result.labels == j
                merged.append(Centroid(result.centers[j].copy(), int(weights[members].sum())))
            cm.centroids = merged
    return model


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++: spread initial centers with D^2 sampling."""
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest_sq = cdist(points, centers[:1], "sqeuclidean")[:, 0]
    for i in range(1, k):
        total = closest_sq.sum()
        if total > 0:
            idx = rng.choice(n, p=closest_sq / total)
        else:
            idx = rng.integers(n)  # all remaining points coincide with a center
        centers[i] = points[idx]
        closest_sq = np.minimum(closest_sq, cdist(points, centers[i : i + 1], "sqeuclidean")[:, 0])
    return centers


def _lloyd(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iters: int,
    tol: float,
) -> KMeansResult:
    n = len(points)
    centers = _kmeanspp_init(points, k, rng)
    history: list[float] = []
    prev_inertia = np.inf
    labels = np.zeros(n, dtype=np.int64)
    for iteration in range(1, max_iters + 1):
        dist_sq = cdist(points, centers, "sqeuclidean")
        labels = np.argmin(dist_sq, axis=1)
        sizes = np.bincount(labels, minlength=k)
        if (sizes == 0).any():
            # Reseed each empty cluster with the point farthest from its
            # assigned center, taken from a cluster that can spare one.
            point_cost = dist_sq[np.arange(n), labels]
            for j in np.flatnonzero(sizes == 0):
                donors = sizes[labels] >= 2
                far = int(np.flatnonzero(donors)[np.argmax(point_cost[donors])])
                sizes[labels[far]] -= 1
                sizes[j] += 1
                labels[far] = j
                point_cost[far] = 0.0
        new_centers = np.empty_like(centers)
        for j in range(k):
            new_centers[j] = points[labels == j].mean(axis=0)
        diffs = points - new_centers[labels]
        inertia = float((diffs * diffs).sum())
        if inertia > prev_inertia * (1 + 1e-12) + 1e-12:
            raise AssertionError(
                f"k-means objective increased at iteration {iteration}: "
                f"{prev_inertia} -> {inertia}"
            )
        history.append(inertia)
        movement = float(np.linalg.norm(new_centers - centers, axis=1).sum())
        centers = new_centers
        prev_inertia = inertia
        if movement < tol:
            break
    # Final assignment against the final centers, so labels and inertia match them.
    dist_sq = cdist(points, centers, "sqeuclidean")
    labels = np.argmin(dist_sq, axis=1)
    inertia = float(dist_sq[np.arange(n), labels].sum())
    return KMeansResult(
        centers=centers,
        labels=labels,
        inertia=inertia,
        n_iter=len(history),
        inertia_history=tuple(history),
    )


def kmeans(
    points,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
    n_init: int = 10,
) -> KMeansResult:
    """Seeded Lloyd's k-means with k-means++ starts.

    Runs `n_init` independent initializations and keeps the lowest final
    within-cluster sum of squares; each run terminates when total center
    movement drops below `tol` or after `max_iters` iterations. The objective
    is checked to be non-increasing at every iteration. Deterministic for a
    given seed.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a non-empty (count, dim) array")
    if not 1 <= k <= len(points):
        raise ValueError(f"k must be in [1, {len(points)}], got {k}")
    if k == len(points):
        labels = np.arange(k, dtype=np.int64)
        return KMeansResult(points.copy(), labels, 0.0, 0, (0.0,))
    best: KMeansResult | None = None
    for child in np.random.SeedSequence(seed).spawn(max(1, n_init)):
        result = _lloyd(points, k, np.random.default_rng(child), max_iters, tol)
        if best is None or result.inertia < best.inertia:
            best = result
    return best
