# Memory budgets: when the next batch of classes would overflow the centroid
# budget K, every old class is shrunk proportionally to its size and compacted
# with k-means. Compare that against simply dropping the lightest centroids,
# across a sweep of budgets.
#
# The clusters here are drawn with overlapping spreads on purpose; with easy,
# well-separated data every budget looks perfect and the comparison says
# nothing.

import numpy as np

from cbcl import EmbeddingDataset, ExperimentConfig, run_experiment


def overlapping_clusters(num_classes, per_class, dim, mean_scale, spread, seed):
    rng = np.random.default_rng(seed)
    means = rng.normal(0, mean_scale, (num_classes, dim))
    labels = np.repeat(np.arange(num_classes), per_class)
    vectors = np.vstack(
        [means[c] + spread * rng.standard_normal((per_class, dim)) for c in range(num_classes)]
    )
    return EmbeddingDataset(dim, labels, vectors.astype(np.float32))


data = overlapping_clusters(10, 40, dim=8, mean_scale=2.0, spread=1.5, seed=21)

# an unbudgeted probe shows how many centroids the protocol would store
probe = run_experiment(
    data, ExperimentConfig(classes_per_batch=2, runs=5, seed=4, d_grid=(3.0,), n_grid=(3,))
)
full_load = [rec.total_centroids for rec in probe.runs[0].increments]
print(f"unbudgeted centroid totals per increment: {full_load}")
print(f"unbudgeted average incremental accuracy: {probe.average_incremental_accuracy:.3f}\n")

print(f"{'budget':>6} | {'cluster':>8} | {'remove':>8}")
for budget in (full_load[-1], full_load[-1] // 2, int(0.3 * full_load[-1])):
    row = [f"{budget:>6}"]
    for mode in ("cluster", "remove"):
        config = ExperimentConfig(
            classes_per_batch=2, runs=5, seed=4, d_grid=(3.0,), n_grid=(3,),
            budget=budget, reduction_mode=mode,
        )
        result = run_experiment(data, config)
        row.append(f"{result.average_incremental_accuracy:>8.3f}")
    print(" | ".join(row))

print("\na loose budget costs nothing; tight budgets cost accuracy, and")
print("clustering the survivors retains a little more than plain removal.")
