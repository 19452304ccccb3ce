# Build a centroid model from synthetic embeddings and classify queries.
#
# Each class is summarized online: a sample merges into its nearest centroid
# (weighted mean) when closer than the distance threshold, otherwise it opens
# a new centroid. Prediction sums inverse distances of the n globally nearest
# centroids per class and divides by the class's training-sample count.

import numpy as np

from cbcl import CbclModel, learn_class, make_synthetic, predict, predict_ncm, total_centroids

data = make_synthetic(num_classes=4, per_class=30, dim=8, separation=25, spread=1.5, seed=42)
print(f"dataset: {len(data)} vectors, dim={data.dim}, classes={data.classes}")

model = CbclModel(data.dim)
for cid in data.classes:
    samples = data.vectors[data.class_index[cid]].astype(np.float64)
    learn_class(model, cid, samples, distance_threshold=4.0)

print(f"\ncentroids per class (threshold 4.0):")
for cid, cm in sorted(model.classes.items()):
    weights = [c.weight for c in cm.centroids]
    print(f"  class {cid}: {len(cm.centroids)} centroids, weights {weights}")
print(f"total centroids: {total_centroids(model)}")

# classify a few held-out-style queries: true samples plus a perturbed one
rng = np.random.default_rng(7)
for cid in data.classes:
    x = data.vectors[data.class_index[cid][0]].astype(np.float64) + rng.normal(0, 0.5, data.dim)
    vote = predict(model, x, n=3)
    ncm = predict_ncm(model, x)
    top = {c: round(s, 4) for c, s in vote.scores.items() if s > 0}
    print(f"true {cid} -> vote {vote.label} (scores {top}), nearest-mean {ncm.label}")

# a coarser threshold merges everything into one centroid per class
coarse = CbclModel(data.dim)
for cid in data.classes:
    samples = data.vectors[data.class_index[cid]].astype(np.float64)
    learn_class(coarse, cid, samples, distance_threshold=1e6)
print(f"\nwith a huge threshold every class collapses to its mean: "
      f"{[len(cm.centroids) for cm in coarse.classes.values()]} centroids per class")
