# Drive the full class-incremental protocol: classes arrive in batches, the
# model never revisits old training data, and every increment is evaluated on
# the union of test sets of all classes seen so far (single-headed evaluation).

from cbcl import ExperimentConfig, make_synthetic, omega_metrics, run_experiment, summary_text

data = make_synthetic(num_classes=10, per_class=40, dim=16, separation=30, spread=2.0, seed=3)

config = ExperimentConfig(
    classes_per_batch=2,      # 5 increments of 2 classes
    runs=5,                   # class order reshuffled per run
    seed=11,
    d_grid=(4.0, 6.0, 8.0),   # tuned per increment by cross-validation
    n_grid=(1, 3, 5),
    folds=3,
    alpha_offline=0.95,       # external offline baseline for the omega metrics
)
result = run_experiment(data, config)

print("per-increment accuracy (mean +- std over runs):")
for t, (mean, std) in enumerate(zip(result.per_increment_mean, result.per_increment_std)):
    classes_seen = 2 * (t + 1)
    print(f"  after {classes_seen:2d} classes: {mean:.3f} +- {std:.3f}")

print(f"\naverage incremental accuracy: {result.average_incremental_accuracy:.3f}")
print(f"final accuracy: {result.final_accuracy_mean:.3f} +- {result.final_accuracy_std:.3f}")

omega = omega_metrics(result, alpha_offline=config.alpha_offline)
print(f"omega base/new/all: {omega.base:.3f} / {omega.new:.3f} / {omega.all:.3f}")

print("\nchosen hyperparameters, run 0:")
for rec in result.runs[0].increments:
    print(f"  increment {rec.index}: classes {rec.new_classes} "
          f"D={rec.hyperparams.distance_threshold:g} n={rec.hyperparams.vote_neighbors}")

print("\nfull summary block:")
print(summary_text(result))
