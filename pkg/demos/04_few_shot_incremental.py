# Few-shot incremental learning: each new class contributes only n training
# samples, yet evaluation still covers the complete test set of every class
# seen so far. With so little data the vote size stays at 1 and the threshold
# is still cross-validated per increment.

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


data = overlapping_clusters(12, 60, dim=8, mean_scale=2.0, spread=1.5, seed=13)

print(f"{'shots':>5} | {'avg incremental acc':>20} | {'final acc':>10}")
for shots in (5, 10, None):
    config = ExperimentConfig(
        classes_per_batch=3,
        runs=5,
        seed=2,
        shots=shots,                 # None = use the full training split
        d_grid=(3.0, 5.0),
        folds=3,
    )
    result = run_experiment(data, config)
    label = str(shots) if shots else "all"
    print(f"{label:>5} | {result.average_incremental_accuracy:>20.3f} "
          f"| {result.final_accuracy_mean:>10.3f}")

print("\nfive samples per class already carry most of the signal; the full")
print("training split mainly sharpens the overlapping boundaries.")
