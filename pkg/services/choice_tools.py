"""Multinomial logit choice: utilities, probabilities, fitting and acceptability."""

import logging
import math
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy.optimize import minimize
from scipy.special import softmax

from models.choice import (
    CHOICE_FORMAT_VERSION,
    Acceptability,
    ChoiceAlternative,
    ChoiceModel,
    ChoiceRecord,
    ChoiceSchema,
)
from utils.errors import Degenerate, EmptyDataset, ParseError, SchemaMismatch
from utils.helpers import read_json, write_json

logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-6
MAX_PARAMETER = 1e3
GRADIENT_TOLERANCE = 1e-6
MAX_ITERATIONS = 500


def _check_inputs(model: ChoiceModel, attributes: Mapping[str, float], features: Mapping[str, float], alternative: str) -> None:
    schema = model.choice_schema
    if alternative not in schema.alternatives:
        raise SchemaMismatch(f"alternative {alternative!r} not in {list(schema.alternatives)}")
    missing = [a for a in schema.attributes if a not in attributes]
    extra = [a for a in attributes if a not in schema.attributes]
    if missing or extra:
        raise SchemaMismatch(f"attributes for {alternative!r}: missing {missing}, undeclared {extra}")
    missing = [f for f in schema.features if f not in features]
    if missing:
        raise SchemaMismatch(f"person features missing {missing}")
    values = [attributes[a] for a in schema.attributes] + [features[f] for f in schema.features]
    if not all(math.isfinite(v) for v in values):
        raise SchemaMismatch("attributes and features must be finite")


def value(model: ChoiceModel, attributes: Mapping[str, float], features: Mapping[str, float], alternative: str) -> float:
    """Observable utility γ·x + λ_a·f_p + constant_a."""
    _check_inputs(model, attributes, features, alternative)
    weights = model.lambdas.get(alternative, {})
    terms = [model.gamma.get(a, 0.0) * attributes[a] for a in model.choice_schema.attributes]
    terms += [weights.get(f, 0.0) * features[f] for f in model.choice_schema.features]
    terms.append(model.constants.get(alternative, 0.0))
    return math.fsum(terms)


def probabilities(model: ChoiceModel, alternatives: Sequence[ChoiceAlternative], features: Mapping[str, float]) -> np.ndarray:
    """Logit probabilities of each alternative, in the given order."""
    if not alternatives:
        raise ValueError("at least one alternative is required")
    values = np.array([value(model, alt.attributes, features, alt.name) for alt in alternatives])
    return softmax(values)


def acceptability(pr_r: float, pr_u: float) -> Acceptability:
    """Switching gain ln(Pr(r)/Pr(u)), its odds and Pr(r), with probabilities floored at 1e-6."""
    for name, p in (("pr_r", pr_r), ("pr_u", pr_u)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be a probability, got {p}")
    delta = math.log(max(pr_r, PROBABILITY_FLOOR) / max(pr_u, PROBABILITY_FLOOR))
    return Acceptability(delta=delta, odds=math.exp(delta), prob=pr_r)


# ===== FITTING =====

class _Design:
    """Stacked design matrix of every (record, alternative) row.

    Parameter layout: γ over attributes, then per non-reference alternative
    its constant followed by λ over features.
    """

    def __init__(self, records: Sequence[ChoiceRecord], schema: ChoiceSchema, reference: str):
        self.schema = schema
        self.reference = reference
        self.free_alternatives = [a for a in schema.alternatives if a != reference]
        n_attr = len(schema.attributes)
        block = 1 + len(schema.features)
        self.n_params = n_attr + block * len(self.free_alternatives)
        offsets = {alt: n_attr + i * block for i, alt in enumerate(self.free_alternatives)}

        rows = []
        chosen = []
        starts = []
        for record in records:
            starts.append(len(rows))
            for alt in record.alternatives:
                if alt.name not in schema.alternatives:
                    raise SchemaMismatch(f"alternative {alt.name!r} not in {list(schema.alternatives)}")
                missing = [a for a in schema.attributes if a not in alt.attributes]
                if missing:
                    raise SchemaMismatch(f"alternative {alt.name!r} lacks attributes {missing}")
                row = np.zeros(self.n_params)
                row[:n_attr] = [alt.attributes[a] for a in schema.attributes]
                if alt.name in offsets:
                    start = offsets[alt.name]
                    row[start] = 1.0
                    try:
                        row[start + 1:start + block] = [record.features[f] for f in schema.features]
                    except KeyError as e:
                        raise SchemaMismatch(f"record lacks person feature {e.args[0]!r}") from e
                chosen.append(alt.name == record.chosen)
                rows.append(row)
        self.matrix = np.vstack(rows)
        if not np.all(np.isfinite(self.matrix)):
            raise SchemaMismatch("attributes and features must be finite")
        self.chosen = np.array(chosen)
        self.starts = np.array(starts)
        self.record_of_row = np.repeat(np.arange(len(starts)), np.diff(np.append(self.starts, len(rows))))
        self.n_records = len(starts)

    def log_likelihood_and_gradient(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        v = self.matrix @ theta
        peak = np.maximum.reduceat(v, self.starts)
        e = np.exp(v - peak[self.record_of_row])
        total = np.add.reduceat(e, self.starts)
        p = e / total[self.record_of_row]
        ll = float(np.sum(v[self.chosen]) - np.sum(peak + np.log(total)))
        grad = self.matrix[self.chosen].sum(axis=0) - (p[:, None] * self.matrix).sum(axis=0)
        return ll, grad

    def to_model(self, theta: np.ndarray, ll: float, iterations: int) -> ChoiceModel:
        n_attr = len(self.schema.attributes)
        block = 1 + len(self.schema.features)
        constants = {self.reference: 0.0}
        lambdas = {self.reference: {f: 0.0 for f in self.schema.features}}
        for i, alt in enumerate(self.free_alternatives):
            start = n_attr + i * block
            constants[alt] = float(theta[start])
            lambdas[alt] = {f: float(theta[start + 1 + j]) for j, f in enumerate(self.schema.features)}
        return ChoiceModel(
            schema=self.schema,
            gamma={a: float(theta[i]) for i, a in enumerate(self.schema.attributes)},
            lambdas=lambdas,
            constants=constants,
            reference=self.reference,
            log_likelihood=ll,
            iterations=iterations,
        )


def infer_schema(records: Sequence[ChoiceRecord]) -> ChoiceSchema:
    """Schema from the sorted union of attribute, feature and alternative names."""
    attributes = sorted({a for r in records for alt in r.alternatives for a in alt.attributes})
    features = sorted({f for r in records for f in r.features})
    alternatives = sorted({alt.name for r in records for alt in r.alternatives})
    return ChoiceSchema(attributes=tuple(attributes), features=tuple(features), alternatives=tuple(alternatives))


def fit_mnl(
    records: Sequence[ChoiceRecord],
    schema: ChoiceSchema | None = None,
    reference: str | None = None,
    history: list[float] | None = None,
) -> ChoiceModel:
    """Maximum-likelihood MNL parameters via BFGS with a Wolfe line search.

    Converges when the gradient of the mean log-likelihood has ∞-norm below
    1e-6, or after 500 iterations. When `history` is given, the log-likelihood
    after every iteration is appended to it.
    """
    if not records:
        raise EmptyDataset("choice dataset has no records")
    schema = schema or infer_schema(records)
    if len(schema.alternatives) < 2:
        raise Degenerate(f"need at least 2 alternatives overall, got {list(schema.alternatives)}")
    if all(len(r.alternatives) < 2 for r in records):
        raise Degenerate("every record offers a single alternative; nothing is identified")
    if reference is None:
        reference = "d" if "d" in schema.alternatives else schema.alternatives[0]
    if reference not in schema.alternatives:
        raise SchemaMismatch(f"reference alternative {reference!r} not in {list(schema.alternatives)}")

    design = _Design(records, schema, reference)
    n = design.n_records

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        ll, grad = design.log_likelihood_and_gradient(theta)
        return -ll / n, -grad / n

    trace: list[float] = []

    def record_iteration(theta: np.ndarray) -> None:
        if np.max(np.abs(theta), initial=0.0) > MAX_PARAMETER:
            raise Degenerate(f"parameters exceed {MAX_PARAMETER:g}: the data are perfectly separated")
        trace.append(design.log_likelihood_and_gradient(theta)[0])

    theta0 = np.zeros(design.n_params)
    trace.append(design.log_likelihood_and_gradient(theta0)[0])
    result = minimize(
        objective,
        theta0,
        jac=True,
        method="BFGS",
        callback=record_iteration,
        options={"gtol": GRADIENT_TOLERANCE, "maxiter": MAX_ITERATIONS},
    )
    theta = result.x
    if np.max(np.abs(theta), initial=0.0) > MAX_PARAMETER:
        raise Degenerate(f"parameters exceed {MAX_PARAMETER:g}: the data are perfectly separated")
    ll = design.log_likelihood_and_gradient(theta)[0]
    # A finite maximum exists only if moving further along theta lowers the likelihood.
    if design.log_likelihood_and_gradient(2.0 * theta)[0] > ll:
        raise Degenerate("the likelihood keeps rising along the fitted direction: the data are perfectly separated")
    if not result.success:
        logger.warning(f"MNL fit stopped after {result.nit} iterations: {result.message}")

    if history is not None:
        history.extend(trace)
    logger.info(f"Fitted MNL on {n} records ({design.n_params} parameters): log-likelihood {ll:.4f} after {result.nit} iterations")
    return design.to_model(theta, ll, int(result.nit))


def log_likelihood_and_gradient(
    records: Sequence[ChoiceRecord], schema: ChoiceSchema, reference: str, theta: np.ndarray
) -> tuple[float, np.ndarray]:
    """Total log-likelihood and its analytic gradient at a flat parameter vector."""
    return _Design(records, schema, reference).log_likelihood_and_gradient(np.asarray(theta, dtype=float))


# ===== PERSISTENCE =====

def load_choice_data(source: Path | str) -> list[ChoiceRecord]:
    """Read long-format choice data.

    Columns: record_id, alternative, chosen (0/1), attribute columns prefixed
    `x_` and person-feature columns prefixed `f_`. Feature values are taken
    from the first row of each record.
    """
    try:
        frame = pd.read_csv(source, dtype={"record_id": str, "alternative": str}, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise ParseError(1, "missing header row", str(source)) from e
    for column in ("record_id", "alternative", "chosen"):
        if column not in frame.columns:
            raise ParseError(1, f"missing column {column!r}", str(source))
    if frame.empty:
        raise EmptyDataset(f"{source} has no choice rows")
    attribute_columns = [c for c in frame.columns if c.startswith("x_")]
    feature_columns = [c for c in frame.columns if c.startswith("f_")]

    grouped: dict[str, list[int]] = {}
    for i, record_id in enumerate(frame["record_id"]):
        grouped.setdefault(record_id, []).append(i)

    records = []
    for record_id, rows in grouped.items():
        chunk = frame.iloc[rows]
        chosen = chunk.loc[chunk["chosen"] == 1, "alternative"].tolist()
        if len(chosen) != 1:
            raise ParseError(rows[0] + 2, f"record {record_id!r} must have exactly one chosen alternative, found {len(chosen)}", str(source))
        alternatives = tuple(
            ChoiceAlternative(name=row["alternative"], attributes={c[2:]: float(row[c]) for c in attribute_columns})
            for row in chunk.to_dict("records")
        )
        first = chunk.iloc[0]
        try:
            records.append(ChoiceRecord(
                chosen=chosen[0],
                alternatives=alternatives,
                features={c[2:]: float(first[c]) for c in feature_columns},
            ))
        except ValidationError as e:
            raise ParseError(rows[0] + 2, e.errors()[0]["msg"], str(source)) from e
    logger.info(f"Loaded {len(records)} choice records from {source}")
    return records


def save_choice_model(model: ChoiceModel, path: Path) -> None:
    write_json(path, model.model_dump(mode="json", by_alias=True))


def load_choice_model(path: Path) -> ChoiceModel:
    payload = read_json(path)
    version = payload.get("format_version", CHOICE_FORMAT_VERSION)
    if version != CHOICE_FORMAT_VERSION:
        raise SchemaMismatch(f"{path}: choice model format {version} is not supported (expected {CHOICE_FORMAT_VERSION})")
    return ChoiceModel.model_validate(payload)
