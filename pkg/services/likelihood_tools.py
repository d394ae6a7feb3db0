"""Mode and mode-category likelihoods from population trip data.

Forests are trained with scikit-learn and exported to plain node arrays so the
model file is versioned JSON and prediction does not depend on pickles.
"""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from sklearn.dummy import DummyClassifier
from sklearn.ensemble import RandomForestClassifier
from sklearn.metrics import precision_recall_fscore_support

from models.forest import FOREST_FORMAT_VERSION, F1Report, ForestModel, ForestParams, ForestTarget, TreeArrays
from models.network import ALPHABET, CATEGORY_ORDER, MODE_CATEGORIES, ModeCategory, ModeLabel
from models.traveler import FEATURE_COLUMNS, ORDINAL_RANGES
from utils.errors import EmptyDataset, LengthMismatch, ParseError, SchemaMismatch
from utils.helpers import METERS_PER_MILE, read_json, write_json

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"

BaselineKind = Literal["most_frequent", "weighted_random"]


@dataclass(frozen=True)
class Dataset:
    """Feature rows (missing values as NaN) with one label per row."""
    features: pd.DataFrame
    labels: np.ndarray
    target: ForestTarget

    def __len__(self) -> int:
        return len(self.labels)


def _label_space(target: ForestTarget) -> tuple[str, ...]:
    if target is ForestTarget.MODE:
        return tuple(m.value for m in ALPHABET)
    return tuple(c.value for c in CATEGORY_ORDER)


def to_target(labels: np.ndarray, target: ForestTarget) -> np.ndarray:
    """Map mode labels onto categories when training a category model."""
    if target is ForestTarget.CATEGORY:
        modes = {m.value for m in ModeLabel}
        return np.array([MODE_CATEGORIES[ModeLabel(x)].value if x in modes else x for x in labels], dtype=object)
    return np.asarray(labels, dtype=object)


def load_dataset(source: Path | str, target: ForestTarget = ForestTarget.MODE) -> Dataset:
    """Read training data: the traveler feature columns plus `label`.

    Empty cells are missing values. Mode labels are accepted for a category
    target and aggregated.
    """
    try:
        frame = pd.read_csv(source, encoding="utf-8", dtype={LABEL_COLUMN: str})
    except pd.errors.EmptyDataError as e:
        raise ParseError(1, "missing header row", str(source)) from e
    missing = [c for c in (*FEATURE_COLUMNS, LABEL_COLUMN) if c not in frame.columns]
    if missing:
        raise SchemaMismatch(f"{source}: missing columns {missing}")
    if frame.empty:
        raise EmptyDataset(f"{source} has no rows")

    labels = to_target(frame[LABEL_COLUMN].fillna("").str.strip().to_numpy(), target)
    allowed = set(_label_space(target))
    for i, label in enumerate(labels):
        if label not in allowed:
            raise ParseError(i + 2, f"label {label!r} is not one of {sorted(allowed)}", str(source))
    try:
        features = frame[list(FEATURE_COLUMNS)].apply(pd.to_numeric, errors="raise").astype(float)
    except (ValueError, TypeError) as e:
        raise SchemaMismatch(f"{source}: non-numeric feature value: {e}") from e
    logger.info(f"Loaded {len(frame)} training rows from {source} ({target.value} target)")
    return Dataset(features=features.reset_index(drop=True), labels=labels, target=target)


def sample_profiles(
    rng: np.random.Generator,
    n: int,
    distance_log_mean: float = 8.0,
    distance_log_sd: float = 0.7,
    bicycle_share: float = 0.35,
    transit_pass_share: float = 0.1,
) -> pd.DataFrame:
    """Traveler features drawn from simple independent marginals."""
    lo_edu, hi_edu = ORDINAL_RANGES["education_level"]
    lo_inc, hi_inc = ORDINAL_RANGES["income_bracket"]
    lo_flex, hi_flex = ORDINAL_RANGES["work_flexibility"]
    household = rng.integers(1, 7, size=n)
    workers = np.minimum(rng.integers(0, 3, size=n), household)
    has_bike = rng.random(n) < bicycle_share
    return pd.DataFrame({
        "trip_distance_m": np.maximum(rng.lognormal(distance_log_mean, distance_log_sd, size=n), 50.0),
        "education_level": rng.integers(lo_edu, hi_edu + 1, size=n),
        "household_size": household,
        "students": np.minimum(rng.integers(0, 3, size=n), household - workers),
        "workers": workers,
        "hours_per_week": np.clip(rng.normal(38.0, 10.0, size=n), 0.0, 80.0).round(),
        "income_bracket": rng.integers(lo_inc, hi_inc + 1, size=n),
        "n_jobs": rng.integers(0, 3, size=n),
        "work_flexibility": rng.integers(lo_flex, hi_flex + 1, size=n),
        "n_autos": rng.choice([0, 1, 2, 3], size=n, p=[0.15, 0.4, 0.35, 0.1]),
        "n_bicycles": np.where(has_bike, rng.integers(1, 4, size=n), 0),
        "has_license": (rng.random(n) < 0.88).astype(int),
        "has_transit_pass": (rng.random(n) < transit_pass_share).astype(int),
        "transit_trips_last_week": rng.poisson(1.0, size=n),
        "bike_trips_last_week": np.where(has_bike, rng.poisson(1.5, size=n), 0),
        "walk_trips_last_week": rng.poisson(3.0, size=n),
    }, columns=list(FEATURE_COLUMNS))


def _rule_label(row: Mapping[str, float]) -> str:
    distance = row["trip_distance_m"]
    if distance < METERS_PER_MILE:
        return ModeLabel.CYCLE.value if row["n_bicycles"] > 0 and distance > 800 else ModeLabel.WALK.value
    if row["n_autos"] == 0:
        return ModeLabel.BUS.value if distance < 8000 else ModeLabel.SUBWAY.value
    if row["has_license"] == 0:
        return ModeLabel.RIDE.value
    return ModeLabel.DRIVE.value


def synthesize_dataset(n: int, seed: int, target: ForestTarget = ForestTarget.MODE, noise: float = 0.1) -> Dataset:
    """Survey-like data whose labels follow thresholds on distance, car and bike ownership.

    A `noise` share of labels is replaced by a uniform draw over all modes.
    """
    if n <= 0:
        raise EmptyDataset("synthetic dataset size must be positive")
    rng = np.random.default_rng(seed)
    features = sample_profiles(rng, n)
    labels = np.array([_rule_label(row) for row in features.to_dict("records")], dtype=object)
    flip = rng.random(n) < noise
    labels[flip] = rng.choice([m.value for m in ALPHABET], size=int(flip.sum()))
    return Dataset(features=features.astype(float), labels=to_target(labels, target), target=target)


def write_dataset(dataset: Dataset, path: Path) -> None:
    frame = dataset.features.copy()
    frame[LABEL_COLUMN] = dataset.labels
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)


# ===== FOREST =====

def _export_tree(tree) -> TreeArrays:
    raw = tree.value[:, 0, :]
    totals = raw.sum(axis=1, keepdims=True)
    fractions = np.divide(raw, totals, out=np.zeros_like(raw), where=totals > 0)
    counts = fractions * tree.weighted_n_node_samples[:, None]
    return TreeArrays(
        children_left=tuple(int(x) for x in tree.children_left),
        children_right=tuple(int(x) for x in tree.children_right),
        feature=tuple(int(x) for x in tree.feature),
        threshold=tuple(float(x) for x in tree.threshold),
        impurity=tuple(float(x) for x in tree.impurity),
        n_samples=tuple(float(x) for x in tree.weighted_n_node_samples),
        counts=tuple(tuple(float(c) for c in row) for row in counts),
    )


def _medians(features: pd.DataFrame) -> dict[str, float]:
    medians = {}
    for name in features.columns:
        m = features[name].median(skipna=True)
        medians[name] = 0.0 if pd.isna(m) else float(m)
    return medians


def train_forest(dataset: Dataset, params: ForestParams | None = None, seed: int = 0) -> ForestModel:
    """Bootstrap ensemble of Gini CART trees, deterministic given the seed."""
    params = params or ForestParams()
    if len(dataset) == 0:
        raise EmptyDataset("cannot train a forest on an empty dataset")
    feature_names = tuple(dataset.features.columns)
    medians = _medians(dataset.features)
    X = dataset.features.fillna(medians).to_numpy(dtype=float)
    max_features = params.max_features or math.ceil(math.sqrt(len(feature_names)))

    classifier = RandomForestClassifier(
        n_estimators=params.n_trees,
        criterion="gini",
        max_depth=params.max_depth,
        max_features=min(max_features, len(feature_names)),
        min_samples_split=params.min_samples_split,
        bootstrap=params.bootstrap,
        random_state=seed,
    )
    try:
        classifier.fit(X, dataset.labels.astype(str))
    except Exception as e:
        logger.error(f"Forest training failed: {e}")
        raise

    model = ForestModel(
        target=dataset.target,
        labels=tuple(str(c) for c in classifier.classes_),
        feature_names=feature_names,
        medians=medians,
        params=params,
        seed=seed,
        trees=tuple(_export_tree(est.tree_) for est in classifier.estimators_),
    )
    logger.info(f"Trained {model.n_trees} trees on {len(dataset)} rows, labels {list(model.labels)}")
    return model


def _feature_matrix(model: ForestModel, features: Mapping[str, float] | pd.DataFrame) -> np.ndarray:
    frame = pd.DataFrame([dict(features)]) if isinstance(features, Mapping) else features
    missing = [f for f in model.feature_names if f not in frame.columns]
    if missing:
        raise SchemaMismatch(f"features missing {missing}")
    values = frame[list(model.feature_names)].apply(pd.to_numeric, errors="coerce").astype(float)
    return values.fillna(model.medians).to_numpy(dtype=float)


def _tree_leaves(tree: TreeArrays, X: np.ndarray) -> np.ndarray:
    left = np.asarray(tree.children_left)
    right = np.asarray(tree.children_right)
    feature = np.asarray(tree.feature)
    threshold = np.asarray(tree.threshold)
    # Trees compare single-precision inputs.
    X32 = X.astype(np.float32).astype(np.float64)
    node = np.zeros(len(X), dtype=int)
    rows = np.arange(len(X))
    active = left[node] != -1
    while active.any():
        idx = rows[active]
        current = node[idx]
        goes_left = X32[idx, feature[current]] <= threshold[current]
        node[idx] = np.where(goes_left, left[current], right[current])
        active = left[node] != -1
    return node


def predict_proba(model: ForestModel, features: Mapping[str, float] | pd.DataFrame) -> np.ndarray:
    """Mean of per-tree leaf class frequencies; one row per input, or a vector for a single mapping."""
    X = _feature_matrix(model, features)
    total = np.zeros((len(X), len(model.labels)))
    for tree in model.trees:
        counts = np.asarray(tree.counts)
        n = np.asarray(tree.n_samples)
        leaves = _tree_leaves(tree, X)
        total += counts[leaves] / n[leaves][:, None]
    proba = total / model.n_trees
    proba /= proba.sum(axis=1, keepdims=True)
    return proba[0] if isinstance(features, Mapping) else proba


def label_probs(model: ForestModel, features: Mapping[str, float]) -> dict[str, float]:
    return dict(zip(model.labels, (float(p) for p in predict_proba(model, features))))


def predict_labels(model: ForestModel, features: pd.DataFrame) -> np.ndarray:
    proba = predict_proba(model, features)
    return np.asarray(model.labels, dtype=object)[np.argmax(proba, axis=1)]


def gini_importance(model: ForestModel) -> dict[str, float]:
    """Weighted impurity decrease per feature, averaged over trees and normalized to 1."""
    totals = np.zeros(len(model.feature_names))
    for tree in model.trees:
        left = np.asarray(tree.children_left)
        right = np.asarray(tree.children_right)
        impurity = np.asarray(tree.impurity)
        n = np.asarray(tree.n_samples)
        per_tree = np.zeros(len(model.feature_names))
        for node in np.flatnonzero(left != -1):
            l, r = left[node], right[node]
            per_tree[tree.feature[node]] += n[node] * impurity[node] - n[l] * impurity[l] - n[r] * impurity[r]
        totals += per_tree / n[0]
    totals /= model.n_trees
    if totals.sum() > 0:
        totals /= totals.sum()
    return dict(zip(model.feature_names, (float(v) for v in totals)))


def category_probs(probs: Mapping[str, float]) -> dict[ModeCategory, float]:
    """Probabilities over the three categories from mode or category probabilities."""
    result = {c: 0.0 for c in CATEGORY_ORDER}
    modes = {m.value for m in ModeLabel}
    for label, p in probs.items():
        if label in modes:
            result[MODE_CATEGORIES[ModeLabel(label)]] += p
        else:
            result[ModeCategory(label)] += p
    return result


# ===== BASELINES AND EVALUATION =====

def baseline_predict(labels: np.ndarray, kind: BaselineKind, seed: int = 0, n: int | None = None) -> np.ndarray:
    """Most-frequent (ties to the lexicographically smallest) or frequency-weighted random labels."""
    labels = np.asarray(labels, dtype=object).astype(str)
    if len(labels) == 0:
        raise EmptyDataset("baseline needs at least one label")
    strategies = {"most_frequent": "most_frequent", "weighted_random": "stratified"}
    if kind not in strategies:
        raise ValueError(f"unknown baseline {kind!r}; choose from {sorted(strategies)}")
    n = len(labels) if n is None else n
    dummy = DummyClassifier(strategy=strategies[kind], random_state=seed)
    dummy.fit(np.zeros((len(labels), 1)), labels)
    return dummy.predict(np.zeros((n, 1))).astype(object)


def f1_scores(predictions: np.ndarray, truth: np.ndarray) -> F1Report:
    """Per-class F1 over classes present in either input, plus the support-weighted total."""
    predictions = np.asarray(predictions, dtype=object).astype(str)
    truth = np.asarray(truth, dtype=object).astype(str)
    if len(predictions) != len(truth):
        raise LengthMismatch(f"{len(predictions)} predictions for {len(truth)} truth labels")
    if len(truth) == 0:
        raise EmptyDataset("no labels to score")
    classes = sorted(set(truth) | set(predictions))
    _, _, f1, support = precision_recall_fscore_support(truth, predictions, labels=classes, zero_division=0)
    weighted = float(np.dot(f1, support) / support.sum())
    return F1Report(
        per_class={c: float(v) for c, v in zip(classes, f1)},
        support={c: int(s) for c, s in zip(classes, support)},
        weighted=min(max(weighted, 0.0), 1.0),
    )


# ===== PERSISTENCE =====

def save_forest(model: ForestModel, path: Path) -> None:
    write_json(path, model.model_dump(mode="json"))


def load_forest(path: Path) -> ForestModel:
    payload = read_json(path)
    version = payload.get("format_version")
    if version != FOREST_FORMAT_VERSION:
        raise SchemaMismatch(f"{path}: forest format {version} is not supported (expected {FOREST_FORMAT_VERSION})")
    model = ForestModel.model_validate(payload)
    allowed = set(_label_space(model.target))
    if not set(model.labels) <= allowed:
        raise SchemaMismatch(f"{path}: labels {list(model.labels)} do not fit a {model.target.value} model")
    logger.info(f"Loaded forest of {model.n_trees} trees from {path}")
    return model
