import numpy as np
import pytest

from cbcl import (
    CbclModel,
    ConfigError,
    PlanError,
    apply_reduction,
    kmeans,
    learn_class,
    plan_reduction,
    total_centroids,
)


def model_with_counts(counts, dim=1, gap=1000.0):
    """One centroid per sample; class c holds counts[c] centroids."""
    m = CbclModel(dim)
    for cid, count in counts.items():
        samples = [[gap * cid + 10.0 * i] + [0.0] * (dim - 1) for i in range(count)]
        learn_class(m, cid, samples, 0.5)
        assert len(m.classes[cid].centroids) == count
    return m


def partitions(indices, k):
    """All ways to split indices into k non-empty groups."""
    if k == 1:
        yield [list(indices)]
        return
    if len(indices) == k:
        yield [[i] for i in indices]
        return
    first, rest = indices[0], indices[1:]
    for smaller in partitions(rest, k - 1):
        yield [[first]] + smaller
    for smaller in partitions(rest, k):
        for g in range(len(smaller)):
            yield smaller[:g] + [[first] + smaller[g]] + smaller[g + 1 :]


def exhaustive_sse(points, k):
    best = np.inf
    for groups in partitions(list(range(len(points))), k):
        sse = 0.0
        for group in groups:
            members = points[group]
            sse += ((members - members.mean(axis=0)) ** 2).sum()
        best = min(best, sse)
    return best


class TestPlanReduction:
    def test_direct_arithmetic(self):
        m = model_with_counts({0: 4, 1: 4})
        plan = plan_reduction(m, k_new=4, budget=10)
        assert plan.k_r == 2
        assert plan.per_class_target == {0: 3, 1: 3}

    def test_identity_when_under_budget(self):
        m = model_with_counts({0: 3, 1: 2})
        plan = plan_reduction(m, k_new=4, budget=20)
        assert plan.k_r == 0
        assert plan.per_class_target == {0: 3, 1: 2}

    def test_clamp_to_one_each(self):
        m = model_with_counts({0: 3, 1: 3, 2: 3})
        plan = plan_reduction(m, k_new=0, budget=3)
        assert plan.per_class_target == {0: 1, 1: 1, 2: 1}

    def test_shortfall_taken_from_largest_class(self):
        # floors: 10*(5/12)=4, 1*(5/12)=0 -> clamp 1, 1 -> total 6 > 5:
        # the largest class gives the extra one back.
        m = model_with_counts({0: 10, 1: 1, 2: 1})
        plan = plan_reduction(m, k_new=0, budget=5)
        assert plan.per_class_target == {0: 3, 1: 1, 2: 1}
        assert sum(plan.per_class_target.values()) <= 5

    def test_infeasible_budget(self):
        m = model_with_counts({0: 2, 1: 2, 2: 2})
        with pytest.raises(ConfigError):
            plan_reduction(m, k_new=0, budget=2)
        with pytest.raises(ConfigError):
            plan_reduction(m, k_new=8, budget=10)

    def test_random_plans_respect_budget(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            counts = {c: int(rng.integers(1, 20)) for c in range(int(rng.integers(1, 7)))}
            m = model_with_counts(counts)
            k_new = int(rng.integers(0, 15))
            lo = len(counts) + k_new
            budget = int(rng.integers(lo, lo + 40))
            plan = plan_reduction(m, k_new, budget)
            assert sum(plan.per_class_target.values()) + k_new <= budget
            assert all(t >= 1 for t in plan.per_class_target.values())


class TestApplyReduction:
    def test_cluster_mode_pairs_nearby_centroids(self):
        m = CbclModel(1)
        learn_class(m, 0, [[0.0], [0.2], [10.0], [10.2]], 0.1)
        plan = plan_reduction(m, k_new=0, budget=2)
        apply_reduction(m, plan, mode="cluster", seed=3)
        vectors = sorted(c.vector[0] for c in m.classes[0].centroids)
        assert vectors == pytest.approx([0.1, 10.1])
        assert sorted(c.weight for c in m.classes[0].centroids) == [2, 2]

    def test_untouched_class_is_bit_identical(self):
        # class 1 already sits at the one-centroid floor, so its target equals
        # its current count and reduction must not touch it
        m = model_with_counts({0: 6, 1: 1})
        before = [(c.vector.tobytes(), c.weight) for c in m.classes[1].centroids]
        plan = plan_reduction(m, k_new=0, budget=5)
        assert plan.per_class_target[1] == 1
        apply_reduction(m, plan, mode="cluster", seed=0)
        after = [(c.vector.tobytes(), c.weight) for c in m.classes[1].centroids]
        assert before == after

    def test_remove_mode_keeps_heaviest(self):
        m = CbclModel(1)
        # weight 5 at 0.0 (five merges), then two singleton centroids
        learn_class(m, 0, [[0.0]] * 5 + [[50.0], [100.0]], 1.0)
        weights = [c.weight for c in m.classes[0].centroids]
        assert weights == [5, 1, 1]
        plan = plan_reduction(m, k_new=0, budget=1)
        apply_reduction(m, plan, mode="remove", seed=0)
        assert len(m.classes[0].centroids) == 1
        assert m.classes[0].centroids[0].weight == 5
        assert m.classes[0].train_count == 7  # untouched

    def test_remove_mode_tie_keeps_lower_index(self):
        m = CbclModel(1)
        learn_class(m, 0, [[0.0], [50.0], [100.0]], 1.0)
        plan = plan_reduction(m, k_new=0, budget=2)
        apply_reduction(m, plan, mode="remove", seed=0)
        kept = [c.vector[0] for c in m.classes[0].centroids]
        assert kept == [0.0, 50.0]

    def test_cluster_mode_conserves_weights_and_counts(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = CbclModel(3)
            totals = {}
            for cid in range(4):
                samples = rng.normal(size=(int(rng.integers(4, 30)), 3)) + 5 * cid
                learn_class(m, cid, samples, 1.0)
                totals[cid] = sum(c.weight for c in m.classes[cid].centroids)
            k_new = int(rng.integers(0, 6))
            budget = max(4 + k_new, total_centroids(m) // 2)
            plan = plan_reduction(m, k_new, budget)
            apply_reduction(m, plan, mode="cluster", seed=int(rng.integers(1 << 31)))
            for cid in range(4):
                assert len(m.classes[cid].centroids) == plan.per_class_target[cid]
                assert sum(c.weight for c in m.classes[cid].centroids) == totals[cid]
            assert total_centroids(m) + k_new <= budget

    def test_target_above_count_rejected(self):
        from cbcl import ReductionPlan

        m = model_with_counts({0: 2})
        plan = ReductionPlan(k_t=2, k_new=0, k_r=0, per_class_target={0: 5})
        with pytest.raises(PlanError):
            apply_reduction(m, plan, mode="cluster", seed=0)

    def test_train_counts_never_change(self):
        m = model_with_counts({0: 8, 1: 4})
        counts_before = {cid: cm.train_count for cid, cm in m.classes.items()}
        plan = plan_reduction(m, k_new=0, budget=6)
        apply_reduction(m, plan, mode="cluster", seed=0)
        assert {cid: cm.train_count for cid, cm in m.classes.items()} == counts_before


class TestKMeans:
    def test_k_equals_point_count(self):
        points = np.array([[0.0], [3.0], [9.0]])
        result = kmeans(points, 3, seed=0)
        assert sorted(result.centers[:, 0]) == [0.0, 3.0, 9.0]
        assert result.inertia == 0.0

    def test_identical_points_single_cluster(self):
        points = np.array([[2.0, 2.0], [2.0, 2.0]])
        result = kmeans(points, 1, seed=0)
        assert np.allclose(result.centers[0], [2.0, 2.0])
        assert result.inertia == 0.0
        assert result.n_iter <= 2

    def test_two_clear_clusters_in_1d(self):
        points = np.array([[0.0], [1.0], [9.0], [10.0]])
        result = kmeans(points, 2, seed=5)
        assert sorted(result.centers[:, 0]) == pytest.approx([0.5, 9.5])
        assert result.inertia == pytest.approx(exhaustive_sse(points, 2))

    def test_seeded_determinism(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(40, 3))
        a = kmeans(points, 5, seed=77)
        b = kmeans(points, 5, seed=77)
        assert np.array_equal(a.centers, b.centers)
        assert np.array_equal(a.labels, b.labels)

    def test_objective_history_non_increasing(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            points = rng.normal(size=(int(rng.integers(5, 40)), int(rng.integers(1, 5))))
            result = kmeans(points, int(rng.integers(1, 5)), seed=int(rng.integers(1 << 31)))
            history = result.inertia_history
            assert all(b <= a * (1 + 1e-12) + 1e-12 for a, b in zip(history, history[1:]))

    def test_every_cluster_non_empty(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(4, 25))
            k = int(rng.integers(2, min(n, 6)))
            points = rng.normal(size=(n, 2))
            result = kmeans(points, k, seed=int(rng.integers(1 << 31)))
            assert set(result.labels) == set(range(k))

    def test_k_too_large_rejected(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((3, 2)), 4, seed=0)
