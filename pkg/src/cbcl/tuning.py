"""Per-increment hyperparameter selection by cross-validation.

Candidate thresholds and vote sizes are scored using only the already-learned
centroids plus the incoming classes' training data: for each fold the new
classes are learned onto a copy of the model with the candidate threshold and
the held-out samples are classified over all seen classes. The winning pair
maximizes mean fold accuracy; ties prefer the smaller threshold, then the
smaller vote size.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .classifier import _argmax_label, _centroid_table, _vote_scores
from .errors import ConfigError
from .model import CbclModel, Hyperparams, learn_class
from .seeding import derive_seed


def _fold_assignments(
    samples_by_class: dict[int, np.ndarray],
    folds: int,
    seed: int,
) -> dict[int, list[np.ndarray]]:
    """Seeded per-class partition into `folds` disjoint held-out chunks."""
    chunks: dict[int, list[np.ndarray]] = {}
    for cid in sorted(samples_by_class):
        n = len(samples_by_class[cid])
        rng = np.random.default_rng(derive_seed(seed, cid))
        perm = rng.permutation(n)
        chunks[cid] = [np.sort(part) for part in np.array_split(perm, folds)]
    return chunks


def tune(
    model: CbclModel,
    new_class_samples: dict[int, np.ndarray],
    d_grid,
    n_grid,
    folds: int = 3,
    seed: int = 0,
) -> Hyperparams:
    """Pick (distance threshold, vote size) from the grids by cross-validation.

    Folds are demoted to the smallest new-class sample count when necessary
    (leave-one-out for two-sample classes); when some class has a single
    sample no split is possible and the default pair (smallest threshold,
    smallest vote size) is returned. The input model is never mutated.
    """
    d_grid = sorted({float(d) for d in d_grid})
    n_grid = sorted({int(n) for n in n_grid})
    if not d_grid or not n_grid:
        raise ConfigError("d_grid and n_grid must be non-empty")
    if not new_class_samples:
        raise ConfigError("no new-class samples to tune on")
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    if len(d_grid) == 1 and len(n_grid) == 1:
        return Hyperparams(d_grid[0], n_grid[0])

    samples = {
        int(cid): np.asarray(vecs, dtype=np.float64)
        for cid, vecs in new_class_samples.items()
    }
    min_count = min(len(v) for v in samples.values())
    if min_count < 2:
        return Hyperparams(d_grid[0], n_grid[0])
    folds = min(folds, min_count)

    chunks = _fold_assignments(samples, folds, seed)
    # mean accuracy per (d, n), accumulated over folds
    totals = {(d, n): 0.0 for d in d_grid for n in n_grid}
    for d in d_grid:
        for fold in range(folds):
            trial = model.copy()
            held_vectors: list[np.ndarray] = []
            held_labels: list[int] = []
            for cid in sorted(samples):
                held = chunks[cid][fold]
                mask = np.ones(len(samples[cid]), dtype=bool)
                mask[held] = False
                learn_class(trial, cid, samples[cid][mask], d)
                held_vectors.append(samples[cid][held])
                held_labels.extend([cid] * len(held))
            queries = np.vstack(held_vectors)
            truth = np.asarray(held_labels)
            matrix, row_class, train_counts = _centroid_table(trial)
            distances = cdist(queries, matrix)
            for n in n_grid:
                correct = 0
                for r in range(len(queries)):
                    scores = _vote_scores(distances[r], row_class, train_counts, n)
                    if _argmax_label(scores) == truth[r]:
                        correct += 1
                totals[(d, n)] += correct / len(queries)

    best_pair = None
    best_total = -1.0
    for d in d_grid:  # ascending, so ties keep the smaller d then smaller n
        for n in n_grid:
            if totals[(d, n)] > best_total:
                best_total = totals[(d, n)]
                best_pair = (d, n)
    return Hyperparams(best_pair[0], best_pair[1])
