"""Tests for forest likelihoods, baselines, F1 scoring and feature importance."""

import numpy as np
import pandas as pd
import pytest

from models.forest import ForestModel, ForestParams, ForestTarget, TreeArrays
from models.network import ModeCategory
from services.likelihood_tools import (
    Dataset,
    baseline_predict,
    category_probs,
    f1_scores,
    gini_importance,
    load_dataset,
    load_forest,
    predict_labels,
    predict_proba,
    save_forest,
    synthesize_dataset,
    train_forest,
)
from utils.errors import EmptyDataset, LengthMismatch, SchemaMismatch


def _leaf(counts):
    return TreeArrays(
        children_left=(-1,),
        children_right=(-1,),
        feature=(-2,),
        threshold=(-2.0,),
        impurity=(0.0,),
        n_samples=(float(sum(counts)),),
        counts=(tuple(float(c) for c in counts),),
    )


def _split_on_x():
    """Root splits x <= 5 into a pure 'd' leaf and a pure 'w' leaf."""
    return TreeArrays(
        children_left=(1, -1, -1),
        children_right=(2, -1, -1),
        feature=(0, -2, -2),
        threshold=(5.0, -2.0, -2.0),
        impurity=(0.5, 0.0, 0.0),
        n_samples=(4.0, 2.0, 2.0),
        counts=((2.0, 2.0), (2.0, 0.0), (0.0, 2.0)),
    )


def _model(*trees, features=("x", "y")):
    return ForestModel(
        target=ForestTarget.MODE,
        labels=("d", "w"),
        feature_names=features,
        medians={f: 0.0 for f in features},
        params=ForestParams(n_trees=len(trees)),
        seed=0,
        trees=trees,
    )


def _gini(labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(1.0 - np.sum(p * p))


def test_pure_leaf_gives_one_hot():
    assert predict_proba(_model(_leaf((0, 3))), {"x": 1.0, "y": 2.0}) == pytest.approx([0.0, 1.0])


def test_trees_are_averaged():
    model = _model(_leaf((1, 0)), _leaf((0, 1)))

    assert predict_proba(model, {"x": 0.0, "y": 0.0}) == pytest.approx([0.5, 0.5])


def test_unused_feature_does_not_change_output():
    model = _model(_split_on_x())

    low = predict_proba(model, {"x": 1.0, "y": 5.0})
    moved = predict_proba(model, {"x": 1.0, "y": -100.0})

    assert low == pytest.approx([1.0, 0.0])
    assert moved == pytest.approx(low)
    assert predict_proba(model, {"x": 9.0, "y": 5.0}) == pytest.approx([0.0, 1.0])


def test_missing_feature_value_uses_median():
    model = _model(_split_on_x())

    assert predict_proba(model, {"x": float("nan"), "y": 0.0}) == pytest.approx([1.0, 0.0])


def test_absent_feature_column_is_a_schema_mismatch():
    with pytest.raises(SchemaMismatch):
        predict_proba(_model(_split_on_x()), {"x": 1.0})


def test_perfect_split_gets_all_importance():
    importance = gini_importance(_model(_split_on_x()))

    assert importance == {"x": pytest.approx(1.0), "y": 0.0}
    assert sum(importance.values()) == pytest.approx(1.0, abs=1e-9)


def test_threshold_separable_data_is_learned_exactly():
    rng = np.random.default_rng(2)
    x = np.concatenate([rng.uniform(0, 1, 50), rng.uniform(10, 11, 50)])
    labels = np.array(["d"] * 50 + ["w"] * 50, dtype=object)
    dataset = Dataset(features=pd.DataFrame({"x": x}), labels=labels, target=ForestTarget.MODE)

    model = train_forest(dataset, ForestParams(n_trees=5), seed=1)

    assert (predict_labels(model, dataset.features) == labels).all()


def test_training_is_deterministic_per_seed():
    dataset = synthesize_dataset(300, seed=4)

    first = train_forest(dataset, ForestParams(n_trees=5), seed=9)
    second = train_forest(dataset, ForestParams(n_trees=5), seed=9)

    assert first == second
    assert first.n_trees == 5
    assert all(tree.depth() <= first.max_depth for tree in first.trees)


def test_probabilities_sum_to_one_on_random_inputs():
    model = train_forest(synthesize_dataset(500, seed=6), ForestParams(n_trees=5), seed=3)
    rng = np.random.default_rng(12)
    inputs = synthesize_dataset(10_000, seed=7).features
    inputs = inputs * rng.uniform(0.0, 3.0, size=inputs.shape)
    inputs = inputs.mask(rng.random(inputs.shape) < 0.1)

    proba = predict_proba(model, inputs)

    assert proba.shape == (10_000, len(model.labels))
    assert (proba >= 0).all()
    assert np.abs(proba.sum(axis=1) - 1.0).max() < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_stump_split_maximizes_gini_gain(seed):
    rng = np.random.default_rng(seed)
    n = 60
    frame = pd.DataFrame({"a": rng.integers(0, 20, n), "b": rng.integers(0, 20, n)}).astype(float)
    score = frame["a"] + rng.normal(0, 4, n)
    labels = np.where(score > 10, "w", "d").astype(object)
    dataset = Dataset(features=frame, labels=labels, target=ForestTarget.MODE)

    stump = train_forest(dataset, ForestParams(n_trees=1, max_depth=1, max_features=2, bootstrap=False), seed=seed).trees[0]

    best = 0.0
    for name in frame.columns:
        values = np.unique(frame[name])
        for lo, hi in zip(values, values[1:]):
            left = labels[(frame[name] <= (lo + hi) / 2).to_numpy()]
            right = labels[(frame[name] > (lo + hi) / 2).to_numpy()]
            best = max(best, n * _gini(labels) - len(left) * _gini(left) - len(right) * _gini(right))
    l, r = stump.children_left[0], stump.children_right[0]
    gain = (
        stump.n_samples[0] * stump.impurity[0]
        - stump.n_samples[l] * stump.impurity[l]
        - stump.n_samples[r] * stump.impurity[r]
    )
    assert stump.depth() == 1
    assert gain == pytest.approx(best, rel=1e-9, abs=1e-9)


def test_most_frequent_baseline():
    assert list(baseline_predict(np.array(["d", "d", "d", "w"]), "most_frequent")) == ["d"] * 4


def test_weighted_random_baseline_follows_frequencies():
    labels = np.array(["d", "d", "d", "w"])

    draws = baseline_predict(labels, "weighted_random", seed=3, n=20_000)

    assert np.mean(draws == "d") == pytest.approx(0.75, abs=0.02)
    assert (baseline_predict(labels, "weighted_random", seed=3, n=20_000) == draws).all()


def test_baseline_needs_labels():
    with pytest.raises(EmptyDataset):
        baseline_predict(np.array([]), "most_frequent")


def test_perfect_predictions_score_one():
    truth = np.array(["d", "w", "b", "d"])

    report = f1_scores(truth, truth)

    assert report.per_class == {"b": 1.0, "d": 1.0, "w": 1.0}
    assert report.weighted == pytest.approx(1.0)


def test_predicting_majority_class():
    report = f1_scores(np.array(["d"] * 4), np.array(["d", "d", "d", "w"]))

    assert report.per_class["d"] == pytest.approx(2 * 0.75 / 1.75)
    assert report.per_class["w"] == 0.0
    assert report.weighted == pytest.approx(3 * (2 * 0.75 / 1.75) / 4)
    assert set(report.per_class) == {"d", "w"}
    assert report.support == {"d": 3, "w": 1}


def test_f1_requires_equal_lengths():
    with pytest.raises(LengthMismatch):
        f1_scores(np.array(["d"]), np.array(["d", "w"]))


def test_category_probs_sum_modes():
    probs = category_probs({"w": 0.1, "c": 0.1, "b": 0.2, "s": 0.1, "d": 0.4, "r": 0.05, "m": 0.05})

    assert probs[ModeCategory.NON_MOTORIZED] == pytest.approx(0.2)
    assert probs[ModeCategory.PUBLIC_TRANSIT] == pytest.approx(0.3)
    assert probs[ModeCategory.MOTORIZED] == pytest.approx(0.5)
    assert sum(probs.values()) == pytest.approx(1.0)


def test_category_probs_of_one_hot_walk():
    probs = category_probs({"w": 1.0})

    assert list(probs.values()) == [1.0, 0.0, 0.0]


def test_category_probs_pass_through_category_labels():
    probs = category_probs({"non-motorized": 0.6, "public-transit": 0.3, "motorized": 0.1})

    assert probs[ModeCategory.NON_MOTORIZED] == pytest.approx(0.6)


def test_dataset_requires_feature_columns(tmp_path):
    path = tmp_path / "train.csv"
    path.write_text("trip_distance_m,label\n1000,d\n", encoding="utf-8")

    with pytest.raises(SchemaMismatch):
        load_dataset(path)


def test_category_target_aggregates_mode_labels(tmp_path):
    path = tmp_path / "train.csv"
    dataset = synthesize_dataset(50, seed=0)
    frame = dataset.features.copy()
    frame["label"] = dataset.labels
    frame.to_csv(path, index=False)

    loaded = load_dataset(path, ForestTarget.CATEGORY)

    assert set(loaded.labels) <= {c.value for c in ModeCategory}
    assert len(loaded) == 50


def test_forest_file_rejects_other_versions(tmp_path):
    model = _model(_leaf((1, 1)))
    path = tmp_path / "forest.json"
    save_forest(model, path)
    path.write_text(path.read_text(encoding="utf-8").replace('"format_version": 1', '"format_version": 99'), encoding="utf-8")

    with pytest.raises(SchemaMismatch):
        load_forest(path)


@pytest.mark.slow
@pytest.mark.parametrize("target", [ForestTarget.MODE, ForestTarget.CATEGORY])
def test_forest_beats_both_baselines(target):
    train = synthesize_dataset(3000, seed=1, target=target)
    test = synthesize_dataset(2000, seed=2, target=target)

    model = train_forest(train, ForestParams(), seed=1)
    forest = f1_scores(predict_labels(model, test.features), test.labels)
    frequent = f1_scores(baseline_predict(train.labels, "most_frequent", n=len(test)), test.labels)
    weighted = f1_scores(baseline_predict(train.labels, "weighted_random", seed=1, n=len(test)), test.labels)

    assert forest.weighted > frequent.weighted
    assert forest.weighted > weighted.weighted
    assert sum(gini_importance(model).values()) == pytest.approx(1.0, abs=1e-9)
