"""Multinomial logistic regression with balanced class weights and no intercept.

The model is a bare class-by-feature weight matrix. Leaving the intercept
out means an empty feature vector always scores uniformly across classes,
which keeps varying segment length from leaking into the decision. The
training contract is the objective (class-weighted multinomial cross
entropy plus an L2 penalty), not the optimizer; any convergent convex
optimizer may sit behind it, and we use L-BFGS over our own analytic
gradient.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize
import scipy.sparse

from .features import FeatureVector, NGramVocabulary
from .labels import ClassLabel, TRAIN_CLASSES, parse_label


class ClassifierError(ValueError):
    pass


@dataclass
class TrainConfig:
    """Training knobs. ``l2_strength`` has inverse-regularization semantics:
    the penalty term is ||W||^2 / (2 * l2_strength), so larger means weaker
    regularization (1.0 matches the conventional default)."""

    l2_strength: float = 1.0
    max_iterations: int = 1000
    convergence_tolerance: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.l2_strength <= 0 or self.max_iterations <= 0 or self.convergence_tolerance <= 0:
            raise ClassifierError("all TrainConfig values must be strictly positive")


@dataclass
class Prediction:
    probabilities: dict[ClassLabel, float]
    argmax: ClassLabel


@dataclass
class LinearModel:
    """K x D weight matrix bound to a vocabulary by hash. No intercept."""

    weights: np.ndarray
    classes: list[ClassLabel]
    vocab_hash: str = ""
    rules_hash: str = ""
    converged: bool = True
    vocab: NGramVocabulary | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] != len(self.classes):
            raise ClassifierError(
                f"weights shape {self.weights.shape} does not match {len(self.classes)} classes"
            )
        if len(set(self.classes)) != len(self.classes):
            raise ClassifierError("duplicate class in model")

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    def bind_vocab(self, vocab: NGramVocabulary) -> None:
        if self.vocab_hash and vocab.content_hash() != self.vocab_hash:
            raise ClassifierError("vocabulary hash does not match the one the model was trained on")
        self.vocab = vocab


def class_weights_balanced(class_counts: dict[ClassLabel, int]) -> dict[ClassLabel, float]:
    """w_c = N / (K * N_c): every class exerts equal total pull on the loss."""
    if any(count < 1 for count in class_counts.values()):
        raise ClassifierError(f"every class needs a positive count, got {class_counts}")
    total = sum(class_counts.values())
    k = len(class_counts)
    return {label: total / (k * count) for label, count in class_counts.items()}


def vectors_to_csr(vectors: list[FeatureVector]) -> scipy.sparse.csr_matrix:
    if not vectors:
        raise ClassifierError("no feature vectors")
    dim = vectors[0].dimension
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in vectors:
        if vec.dimension != dim:
            raise ClassifierError("feature vectors disagree on dimension")
        for idx in sorted(vec.counts):
            indices.append(idx)
            data.append(float(vec.counts[idx]))
        indptr.append(len(indices))
    return scipy.sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(vectors), dim),
    )


def softmax(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def objective_and_grad(
    weights: np.ndarray,
    x: scipy.sparse.csr_matrix,
    y_index: np.ndarray,
    sample_weights: np.ndarray,
    l2_strength: float,
) -> tuple[float, np.ndarray]:
    """Weighted multinomial cross entropy plus L2, with its analytic gradient.

    The objective is sum_i w_i * CE_i + ||W||^2 / (2 * l2_strength); no
    intercept term exists anywhere.
    """
    n, _ = x.shape
    scores = np.asarray(x @ weights.T)
    log_probs = _log_softmax(scores)
    loss = -float(np.sum(sample_weights * log_probs[np.arange(n), y_index]))
    loss += float(np.sum(weights * weights)) / (2.0 * l2_strength)

    probs = np.exp(log_probs)
    residual = probs
    residual[np.arange(n), y_index] -= 1.0
    residual *= sample_weights[:, None]
    grad = (x.T @ residual).T + weights / l2_strength
    return loss, np.asarray(grad)


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def train_logreg(
    x: list[FeatureVector] | scipy.sparse.csr_matrix,
    y: list[ClassLabel],
    weights: dict[ClassLabel, float] | None = None,
    config: TrainConfig | None = None,
    vocab: NGramVocabulary | None = None,
    rules_hash: str = "",
) -> LinearModel:
    """Fit the regularized objective to its unique optimum, deterministically.

    Optimization starts from the zero matrix and uses full-batch L-BFGS, so
    identical inputs yield bit-identical weights. If the gradient norm has
    not reached the tolerance within ``max_iterations`` the model is still
    returned, flagged non-converged, with a warning.
    """
    config = config or TrainConfig()
    matrix = x if scipy.sparse.issparse(x) else vectors_to_csr(x)
    if matrix.shape[0] != len(y):
        raise ClassifierError(f"{matrix.shape[0]} rows but {len(y)} labels")
    classes = [label for label in TRAIN_CLASSES if label in set(y)]
    leftover = set(y) - set(classes)
    if leftover:
        raise ClassifierError(f"labels outside the trainable classes: {sorted(l.value for l in leftover)}")
    if len(classes) < 2:
        raise ClassifierError("need at least two classes to train")
    if matrix.shape[0] < len(classes):
        raise ClassifierError("fewer samples than classes")
    if weights is None:
        weights = {c: 1.0 for c in classes}
    missing = [c for c in classes if c not in weights]
    if missing:
        raise ClassifierError(f"class weights missing for: {[c.value for c in missing]}")

    class_index = {label: i for i, label in enumerate(classes)}
    y_index = np.array([class_index[label] for label in y], dtype=np.int64)
    sample_weights = np.array([weights[label] for label in y], dtype=np.float64)

    k, d = len(classes), matrix.shape[1]

    def fun(flat: np.ndarray) -> tuple[float, np.ndarray]:
        loss, grad = objective_and_grad(
            flat.reshape(k, d), matrix, y_index, sample_weights, config.l2_strength
        )
        return loss, grad.ravel()

    result = scipy.optimize.minimize(
        fun,
        np.zeros(k * d),
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": config.max_iterations,
            "gtol": config.convergence_tolerance,
            "ftol": 0.0,
            "maxfun": 10 * config.max_iterations,
        },
    )
    final_weights = result.x.reshape(k, d)
    _, final_grad = objective_and_grad(
        final_weights, matrix, y_index, sample_weights, config.l2_strength
    )
    converged = bool(np.max(np.abs(final_grad)) <= config.convergence_tolerance)
    if not converged:
        warnings.warn(
            f"training stopped after {result.nit} iterations with gradient sup-norm "
            f"{np.max(np.abs(final_grad)):.3g} > {config.convergence_tolerance:g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return LinearModel(
        weights=final_weights,
        classes=classes,
        vocab_hash=vocab.content_hash() if vocab is not None else "",
        rules_hash=rules_hash,
        converged=converged,
        vocab=vocab,
    )


def _scores(model: LinearModel, x: FeatureVector) -> np.ndarray:
    if x.dimension != model.dimension:
        raise ClassifierError(
            f"feature vector dimension {x.dimension} does not match model dimension {model.dimension}"
        )
    scores = np.zeros(len(model.classes))
    for idx, count in x.counts.items():
        scores += model.weights[:, idx] * count
    return scores


def predict_proba(model: LinearModel, x: FeatureVector) -> Prediction:
    probs = softmax(_scores(model, x))
    argmax = model.classes[int(np.argmax(probs))]
    return Prediction(
        probabilities={label: float(p) for label, p in zip(model.classes, probs)},
        argmax=argmax,
    )


def predict(model: LinearModel, x: FeatureVector) -> ClassLabel:
    return predict_proba(model, x).argmax


def predict_proba_batch(model: LinearModel, matrix: scipy.sparse.csr_matrix) -> np.ndarray:
    if matrix.shape[1] != model.dimension:
        raise ClassifierError(
            f"matrix dimension {matrix.shape[1]} does not match model dimension {model.dimension}"
        )
    return softmax(np.asarray(matrix @ model.weights.T))


def top_features(model: LinearModel, label: ClassLabel, k: int) -> list[tuple[tuple[str, ...], float]]:
    """The k n-grams whose weights contribute most to this class's score."""
    if model.vocab is None:
        raise ClassifierError("model has no vocabulary bound; call bind_vocab first")
    if label not in model.classes:
        raise ClassifierError(f"model has no class {label}")
    if k <= 0:
        return []
    row = model.weights[model.classes.index(label)]
    order = sorted(range(len(row)), key=lambda j: (-row[j], model.vocab.by_id[j]))
    return [(model.vocab.by_id[j], float(row[j])) for j in order[: min(k, len(row))]]


def save_model(model: LinearModel, path: str | Path) -> None:
    payload = {
        "classes": [c.value for c in model.classes],
        "vocab_hash": model.vocab_hash,
        "rules_hash": model.rules_hash,
        "converged": model.converged,
        "weights": [[float(w) for w in row] for row in model.weights],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path, vocab: NGramVocabulary | None = None) -> LinearModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    model = LinearModel(
        weights=np.array(payload["weights"], dtype=np.float64),
        classes=[parse_label(c) for c in payload["classes"]],
        vocab_hash=payload.get("vocab_hash", ""),
        rules_hash=payload.get("rules_hash", ""),
        converged=payload.get("converged", True),
    )
    if vocab is not None:
        model.bind_vocab(vocab)
    return model
