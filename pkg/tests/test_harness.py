import numpy as np
import pytest

from cbcl import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    Hyperparams,
    IncrementRecord,
    IncrementReport,
    MetricError,
    RunResult,
    make_synthetic,
    omega_metrics,
    parse_config_file,
    run_experiment,
    summary_text,
    write_increment_csv,
)


def result_from_alphas(all_by_increment, base=None, new=None):
    """Assemble a single-run ExperimentResult straight from accuracy series."""
    base = base if base is not None else all_by_increment
    new = new if new is not None else all_by_increment
    dummy_report = IncrementReport(
        class_ids=(0,), confusion=np.ones((1, 1), dtype=np.int64),
        accuracy=1.0, per_class_accuracy={0: 1.0}, n_test=1,
    )
    run = RunResult(run_index=0)
    for t, (a, b, n) in enumerate(zip(all_by_increment, base, new)):
        run.increments.append(
            IncrementRecord(
                index=t, new_classes=(t,), hyperparams=Hyperparams(1.0, 1),
                report=dummy_report, alpha_all=a, alpha_base=b, alpha_new=n,
                total_centroids=1,
            )
        )
    config = ExperimentConfig(classes_per_batch=1, d_grid=(1.0,), n_grid=(1,))
    return ExperimentResult(config=config, runs=[run])


def easy_config(**overrides):
    defaults = dict(
        classes_per_batch=2, runs=1, seed=0, d_grid=(3.0,), n_grid=(2,),
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestRunExperiment:
    def test_single_class_train_equals_test(self):
        data = make_synthetic(1, 10, 3, separation=5, spread=1, seed=0)
        config = ExperimentConfig(classes_per_batch=1, d_grid=(100.0,), n_grid=(1,), seed=1)
        result = run_experiment(data, config, test_dataset=data)
        assert result.num_increments == 1
        assert result.runs[0].increments[0].alpha_all == 1.0
        assert result.average_incremental_accuracy == 1.0

    def test_increments_cover_exactly_the_seen_classes(self):
        data = make_synthetic(6, 12, 3, separation=40, spread=1, seed=2)
        result = run_experiment(data, easy_config(classes_per_batch=2, seed=3))
        splits_order = []
        for t, rec in enumerate(result.runs[0].increments):
            splits_order.extend(rec.new_classes)
            assert sorted(rec.report.class_ids) == sorted(splits_order)
            assert rec.report.n_test > 0
        assert len(splits_order) == 6

    def test_one_increment_vs_many_same_final_model_accuracy(self):
        data = make_synthetic(6, 15, 4, separation=30, spread=1.5, seed=4)
        one = run_experiment(data, easy_config(classes_per_batch=6, seed=7))
        many = run_experiment(data, easy_config(classes_per_batch=2, seed=7))
        assert one.runs[0].increments[-1].alpha_all == pytest.approx(
            many.runs[0].increments[-1].alpha_all
        )

    def test_shared_seed_runs_have_zero_std(self):
        data = make_synthetic(4, 10, 3, separation=30, spread=1, seed=5)
        config = easy_config(runs=3, reshuffle_per_run=False, seed=11)
        result = run_experiment(data, config)
        assert result.average_incremental_accuracy_std == 0.0
        assert np.all(result.per_increment_std == 0.0)

    def test_reshuffled_runs_are_deterministic_across_calls(self):
        data = make_synthetic(4, 10, 3, separation=10, spread=2, seed=6)
        config = easy_config(runs=2, seed=13)
        a = run_experiment(data, config)
        b = run_experiment(data, easy_config(runs=2, seed=13))
        assert np.array_equal(a.accuracy_matrix(), b.accuracy_matrix())

    def test_budget_respected_throughout(self):
        # threshold below the sample spacing: 16 train centroids per class,
        # so from the second batch on the budget forces reductions
        data = make_synthetic(6, 20, 3, separation=40, spread=1, seed=7)
        config = easy_config(classes_per_batch=2, budget=40, d_grid=(0.5,), seed=2)
        result = run_experiment(data, config)
        free = run_experiment(data, easy_config(classes_per_batch=2, d_grid=(0.5,), seed=2))
        records = result.runs[0].increments
        for rec, unbounded in zip(records, free.runs[0].increments):
            assert rec.total_centroids <= 40
            assert rec.total_centroids <= unbounded.total_centroids
        assert records[-1].total_centroids < free.runs[0].increments[-1].total_centroids

    def test_first_batch_overflowing_budget_is_infeasible(self):
        data = make_synthetic(4, 20, 3, separation=40, spread=1, seed=7)
        config = easy_config(classes_per_batch=2, budget=10, d_grid=(0.5,), seed=2)
        with pytest.raises(ConfigError):
            run_experiment(data, config)

    def test_few_shot_uses_exactly_n_training_samples(self):
        data = make_synthetic(4, 30, 3, separation=40, spread=1, seed=8)
        config = easy_config(classes_per_batch=2, shots=5, d_grid=(0.001,), seed=3)
        result = run_experiment(data, config)
        final = result.runs[0].increments[-1]
        # threshold far below sample spacing: every shot becomes one centroid
        assert final.total_centroids == 4 * 5

    def test_threads_do_not_change_results(self):
        data = make_synthetic(4, 12, 3, separation=20, spread=1.5, seed=9)
        serial = run_experiment(data, easy_config(runs=3, seed=5))
        threaded = run_experiment(data, easy_config(runs=3, seed=5, threads=3))
        assert np.array_equal(serial.accuracy_matrix(), threaded.accuracy_matrix())

    def test_tuning_path_runs(self):
        data = make_synthetic(4, 12, 3, separation=50, spread=1, seed=10)
        config = ExperimentConfig(
            classes_per_batch=2, d_grid=(0.5, 30.0), n_grid=(1, 3), folds=2, seed=4
        )
        result = run_experiment(data, config)
        for rec in result.runs[0].increments:
            assert rec.hyperparams.distance_threshold in (0.5, 30.0)
            assert rec.hyperparams.vote_neighbors in (1, 3)

    def test_mismatched_test_dim_rejected(self):
        train = make_synthetic(2, 5, 3, separation=5, spread=1, seed=0)
        test = make_synthetic(2, 5, 4, separation=5, spread=1, seed=0)
        with pytest.raises(ConfigError):
            run_experiment(train, easy_config(classes_per_batch=1), test_dataset=test)


class TestAggregates:
    def test_average_incremental_accuracy_is_plain_mean(self):
        result = result_from_alphas([0.9, 0.8, 0.7])
        assert result.average_incremental_accuracy == pytest.approx(0.8, abs=1e-15)

    def test_accuracy_bounds(self):
        data = make_synthetic(4, 10, 3, separation=10, spread=3, seed=11)
        result = run_experiment(data, easy_config(runs=2, seed=1))
        matrix = result.accuracy_matrix()
        assert np.all(matrix >= 0.0) and np.all(matrix <= 1.0)


class TestOmegaMetrics:
    def test_hand_computed_example(self):
        result = result_from_alphas([1.0, 1.0, 1.0], base=[0.9, 0.6, 0.5])
        omega = omega_metrics(result, alpha_offline=0.699)
        assert omega.base == pytest.approx((0.6 / 0.699 + 0.5 / 0.699) / 2, abs=1e-12)

    def test_perfect_new_class_recall(self):
        result = result_from_alphas([0.5, 0.5, 0.5], new=[1.0, 1.0, 1.0])
        assert omega_metrics(result, 0.7).new == pytest.approx(1.0)

    def test_base_normalization_identity(self):
        result = result_from_alphas([0.5, 0.5], base=[0.699, 0.699])
        assert omega_metrics(result, 0.699).base == pytest.approx(1.0)

    def test_too_few_increments(self):
        result = result_from_alphas([0.9])
        with pytest.raises(MetricError):
            omega_metrics(result, 0.7)

    def test_bad_alpha_offline(self):
        result = result_from_alphas([0.9, 0.8])
        with pytest.raises(ValueError):
            omega_metrics(result, 0.0)


class TestConfigFileAndOutputs:
    def test_parse_roundtrip(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "# comment\n"
            "train = data/train.cef\n"
            "test = data/test.cef\n"
            "classes_per_batch = 10\n"
            "runs = 3\n"
            "seed = 42\n"
            "budget = 7500\n"
            "d_grid = 70,75,80\n"
            "n_grid = 1,2,3\n"
            "mode = ncm\n"
            "reduction = remove\n"
            "alpha_offline = 0.699\n"
        )
        config, train, test = parse_config_file(cfg)
        assert train == "data/train.cef"
        assert test == "data/test.cef"
        assert config.classes_per_batch == 10
        assert config.budget == 7500
        assert config.d_grid == (70.0, 75.0, 80.0)
        assert config.mode == "ncm"
        assert config.reduction_mode == "remove"
        assert config.alpha_offline == 0.699

    def test_few_shot_defaults_vote_grid_to_one(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("train = t.cef\nclasses_per_batch = 2\nshots = 5\n")
        config, _, _ = parse_config_file(cfg)
        assert config.n_grid == (1,)

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("train = t.cef\nclasses_per_batch = 2\nbogus = 1\n")
        with pytest.raises(ConfigError):
            parse_config_file(cfg)

    def test_csv_and_summary_outputs(self, tmp_path):
        data = make_synthetic(4, 10, 3, separation=30, spread=1, seed=12)
        result = run_experiment(data, easy_config(runs=2, seed=6))
        csv_path = tmp_path / "increments.csv"
        write_increment_csv(result, csv_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0].startswith("run,increment,classes_seen")
        assert len(lines) == 1 + 2 * result.num_increments
        text = summary_text(result)
        assert "average_incremental_accuracy\t" in text
        assert "final_accuracy\t" in text
