"""Working model of adoption: a logistic function of acceptability with a per-person intercept."""

import logging
from collections.abc import Sequence

import numpy as np
from scipy.special import expit, log_expit

from models.adoption import AcceptabilityDefinition, AdoptionModel, LogisticFit, PersonIntercept
from models.choice import Acceptability
from utils.errors import AllSameOutcome, Degenerate, Separable

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-8
MAX_ITERATIONS = 100
MAX_PARAMETER = 1e3


def sample_intercept(model: AdoptionModel, rng: np.random.Generator) -> PersonIntercept:
    """Draw a person's random intercept from Normal(intercept_mean, intercept_sd)."""
    if model.intercept_sd == 0:
        return PersonIntercept(value=model.intercept_mean)
    return PersonIntercept(value=float(rng.normal(model.intercept_mean, model.intercept_sd)))


def adoption_probability(model: AdoptionModel, intercept: PersonIntercept | float, covariate: float) -> float:
    """σ(intercept + beta · covariate); odds covariates are capped at the model's odds cap."""
    value = intercept.value if isinstance(intercept, PersonIntercept) else intercept
    if model.definition is AcceptabilityDefinition.ODDS:
        if covariate < 0:
            raise ValueError(f"odds must be non-negative, got {covariate}")
        covariate = min(covariate, model.odds_cap)
    return float(expit(value + model.beta_odds * covariate))


def adoption_for(model: AdoptionModel, intercept: PersonIntercept | float, acceptability: Acceptability) -> float:
    """Adoption probability using the acceptability form the model was fitted on."""
    return adoption_probability(model, intercept, model.covariate(acceptability))


def _log_likelihood(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    z = params[0] + params[1] * x
    return float(np.sum(y * log_expit(z) + (1 - y) * log_expit(-z)))


def logistic_gradient(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of the total log-likelihood in (intercept, beta)."""
    residual = y - expit(params[0] + params[1] * x)
    return np.array([residual.sum(), (residual * x).sum()])


def fit_logistic(records: Sequence[tuple[float, int]], history: list[float] | None = None) -> LogisticFit:
    """Maximum-likelihood (intercept, beta) by Newton's method with step halving.

    Converges when the total gradient has ∞-norm below 1e-8. When `history`
    is given, the log-likelihood of every iterate is appended to it.
    """
    if not records:
        raise AllSameOutcome("no adoption records")
    x = np.array([float(r[0]) for r in records])
    y = np.array([int(r[1]) for r in records], dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("adoption outcomes must be 0 or 1")
    if y.min() == y.max():
        raise AllSameOutcome(f"all {len(y)} records have outcome {int(y[0])}")
    if x.min() == x.max():
        raise Degenerate("the covariate is constant; its coefficient is not identified")
    x0, x1 = x[y == 0], x[y == 1]
    if x0.max() <= x1.min() or x1.max() <= x0.min():
        raise Separable("outcomes are perfectly separated by the covariate; the fit would grow without bound")

    n = len(y)
    design = np.column_stack([np.ones(n), x])
    params = np.zeros(2)
    ll = _log_likelihood(params, x, y)
    trace = [ll]
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        grad = logistic_gradient(params, x, y)
        if np.max(np.abs(grad)) < GRADIENT_TOLERANCE:
            iterations -= 1
            break
        p = expit(design @ params)
        hessian = design.T @ (design * (p * (1 - p))[:, None])
        step = np.linalg.solve(hessian, grad)
        scale = 1.0
        while True:
            candidate = params + scale * step
            candidate_ll = _log_likelihood(candidate, x, y)
            if candidate_ll >= ll or scale < 1e-10:
                break
            scale /= 2
        if candidate_ll < ll:
            logger.warning(f"Logistic fit stalled after {iterations} iterations")
            break
        params, ll = candidate, candidate_ll
        trace.append(ll)
        if np.max(np.abs(params)) > MAX_PARAMETER:
            raise Separable(f"coefficients exceed {MAX_PARAMETER:g}; outcomes are separable")
    else:
        logger.warning(f"Logistic fit reached {MAX_ITERATIONS} iterations without converging")

    if history is not None:
        history.extend(trace)
    logger.info(f"Fitted adoption logit on {n} records: intercept {params[0]:.4f}, beta {params[1]:.4f}")
    return LogisticFit(
        intercept=float(params[0]),
        beta=float(params[1]),
        log_likelihood=ll,
        iterations=iterations,
        n_records=n,
    )
