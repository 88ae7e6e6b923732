"""Linear SVM with squared hinge loss, trained by seeded mini-batch SGD.

Objective: J(w, b) = 0.5*||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))^2
with y = +1 for legitimate and -1 for bogus. Training starts from the zero
model and keeps the parameters with the lowest full objective seen at any
epoch checkpoint, so the recorded objective trace is non-increasing and the
returned model is never worse than the zero model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import Folksonomy, Label, Vocabulary
from .naive_bayes import TrainingError
from .tfidf import TfidfVectorizer, tfidf_fit, tfidf_transform, tfidf_transform_many

LEGIT_Y = +1
BOGUS_Y = -1


@dataclass
class SvmModel:
    kind = "svm"

    w: np.ndarray
    b: float
    c_reg: float
    objective_history: list[float] = field(default_factory=list, repr=False)
    vectorizer: TfidfVectorizer | None = field(default=None, repr=False)
    vocab_fingerprint: str | None = field(default=None, repr=False)

    def decision(self, x: np.ndarray) -> float:
        return svm_decision(self, x)

    def predict_label(self, f: Folksonomy) -> Label:
        if self.vectorizer is None:
            raise TrainingError("model has no vectorizer attached; cannot classify folksonomies")
        margin = svm_decision(self, tfidf_transform(self.vectorizer, f))
        return Label.LEGITIMATE if margin > 0 else Label.BOGUS

    def predict_labels(self, fs: Sequence[Folksonomy]) -> list[Label]:
        if self.vectorizer is None:
            raise TrainingError("model has no vectorizer attached; cannot classify folksonomies")
        margins = tfidf_transform_many(self.vectorizer, fs) @ self.w + self.b
        return [Label.LEGITIMATE if m > 0 else Label.BOGUS for m in margins]


def svm_objective(w: np.ndarray, b: float, xs: np.ndarray, ys: np.ndarray, c_reg: float) -> float:
    margins = np.maximum(0.0, 1.0 - ys * (xs @ w + b))
    return float(0.5 * w @ w + c_reg * np.sum(margins**2))


def svm_decision(m: SvmModel, x: np.ndarray) -> float:
    """Signed margin w.x + b; positive means legitimate, ties go to bogus."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != m.w.shape:
        raise TrainingError(f"feature dimension mismatch: model {m.w.shape}, input {x.shape}")
    return float(m.w @ x + m.b)


def svm_train(
    xs: np.ndarray,
    ys: np.ndarray,
    c_reg: float = 1.0,
    epochs: int = 200,
    learning_rate: float = 0.5,
    lr_decay: float = 0.02,
    batch_size: int = 32,
    seed: int = 0,
) -> SvmModel:
    """Minimize the squared-hinge objective with seeded mini-batch SGD.

    Steps follow the per-example-scaled subgradient (objective / N), which
    keeps sensible learning rates independent of the training set size.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] != ys.shape[0]:
        raise TrainingError(f"bad training shapes: X {xs.shape}, y {ys.shape}")
    if not ((ys == LEGIT_Y).any() and (ys == BOGUS_Y).any()):
        raise TrainingError("training set must contain both classes")

    n, dim = xs.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    best_obj = svm_objective(w, b, xs, ys, c_reg)
    best_w, best_b = w.copy(), b
    history = [best_obj]

    for epoch in range(epochs):
        lr = learning_rate / (1.0 + lr_decay * epoch)
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb, yb = xs[idx], ys[idx]
            m = 1.0 - yb * (xb @ w + b)
            coef = -2.0 * c_reg * np.where(m > 0, m, 0.0) * yb
            w -= lr * (w / n + (xb.T @ coef) / len(idx))
            b -= lr * float(coef.mean())
        obj = svm_objective(w, b, xs, ys, c_reg)
        if obj < best_obj:
            best_obj, best_w, best_b = obj, w.copy(), b
        history.append(best_obj)

    return SvmModel(w=best_w, b=best_b, c_reg=c_reg, objective_history=history)


def label_to_y(label: Label) -> int:
    if label is Label.LEGITIMATE:
        return LEGIT_Y
    if label is Label.BOGUS:
        return BOGUS_Y
    raise TrainingError("cannot train on unlabeled folksonomies")


def train_svm_classifier(
    train: Sequence[Folksonomy],
    v: Vocabulary,
    c_reg: float = 1.0,
    epochs: int = 200,
    learning_rate: float = 0.5,
    batch_size: int = 32,
    seed: int = 0,
) -> SvmModel:
    """Fit TF-IDF on the training folksonomies and train the linear SVM."""
    vz = tfidf_fit(train, v)
    xs = tfidf_transform_many(vz, train)
    ys = np.array([label_to_y(f.label) for f in train], dtype=np.float64)
    model = svm_train(
        xs, ys, c_reg=c_reg, epochs=epochs, learning_rate=learning_rate,
        batch_size=batch_size, seed=seed,
    )
    model.vectorizer = vz
    model.vocab_fingerprint = v.fingerprint()
    return model
