"""Bogus/legitimate folksonomy classifiers behind one train/classify surface.

Three trainable models (Naive Bayes, TF-IDF linear SVM, LSTM network) plus
two fixed reference classifiers used by the evaluation harness (ground-truth
oracle and constant-legitimate). Every model exposes predict_labels() over
folksonomies; classify_corpus() partitions a corpus by predicted label while
preserving ground-truth labels for metric computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import Corpus, Folksonomy, Label, Vocabulary
from .naive_bayes import NaiveBayesModel, TrainingError, nb_train
from .neural import NeuralModel, encode_dataset, nn_train, train_nn_classifier
from .svm import SvmModel, svm_decision, svm_objective, svm_train, train_svm_classifier
from .tfidf import TfidfVectorizer, tfidf_fit, tfidf_transform, tfidf_transform_many

CLASSIFIER_KINDS = ("nb", "svm", "nn")
REFERENCE_KINDS = ("oracle", "constant-legit")


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters shared across the three classifiers."""

    seed: int = 0
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 100
    early_stop_tolerance: float = 0.01
    validation_split: float = 0.1
    svm_c: float = 1.0
    svm_iterations: int = 200
    svm_learning_rate: float = 0.5
    nb_smoothing: float = 1.0
    nn_embed_dim: int = 25
    nn_hidden_dim: int = 200
    nn_dense_dim: int = 50
    sequence_length: int = 50
    nn_dtype: str = "float32"

    def __post_init__(self):
        positives = (
            self.learning_rate, self.batch_size, self.max_epochs, self.svm_c,
            self.svm_iterations, self.svm_learning_rate, self.nb_smoothing,
            self.nn_embed_dim, self.nn_hidden_dim, self.nn_dense_dim,
            self.sequence_length,
        )
        if any(v <= 0 for v in positives):
            raise TrainingError("all training hyperparameters must be positive")
        if not 0 <= self.early_stop_tolerance < 1:
            raise TrainingError("early-stop tolerance must lie in [0, 1)")
        if not 0 < self.validation_split < 1:
            raise TrainingError("validation split must lie in (0, 1)")


class OracleClassifier:
    """Predicts the ground-truth label; upper bound for countermeasures."""

    kind = "oracle"
    vocab_fingerprint = None

    def predict_labels(self, fs: Sequence[Folksonomy]) -> list[Label]:
        return [f.label for f in fs]


class ConstantClassifier:
    """Predicts one fixed label; `constant-legit` reproduces the no-filter baseline."""

    kind = "constant-legit"
    vocab_fingerprint = None

    def __init__(self, label: Label = Label.LEGITIMATE):
        self.label = label

    def predict_labels(self, fs: Sequence[Folksonomy]) -> list[Label]:
        return [self.label] * len(fs)


def train_classifier(kind: str, train: Sequence[Folksonomy], v: Vocabulary, cfg: TrainConfig):
    """Train (or construct) a classifier of the given kind."""
    if kind == "nb":
        model = nb_train(train, smoothing=cfg.nb_smoothing)
        model.vocab_fingerprint = v.fingerprint()
        return model
    if kind == "svm":
        return train_svm_classifier(
            train, v, c_reg=cfg.svm_c, epochs=cfg.svm_iterations,
            learning_rate=cfg.svm_learning_rate, batch_size=cfg.batch_size, seed=cfg.seed,
        )
    if kind == "nn":
        return train_nn_classifier(
            train, v, embed_dim=cfg.nn_embed_dim, hidden_dim=cfg.nn_hidden_dim,
            dense_dim=cfg.nn_dense_dim, seq_len=cfg.sequence_length, seed=cfg.seed,
            learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
            max_epochs=cfg.max_epochs, early_stop_tolerance=cfg.early_stop_tolerance,
            validation_split=cfg.validation_split, dtype=np.dtype(cfg.nn_dtype),
        )
    if kind == "oracle":
        return OracleClassifier()
    if kind == "constant-legit":
        return ConstantClassifier(Label.LEGITIMATE)
    raise TrainingError(f"unknown classifier kind {kind!r}")


def classify_corpus(model, s: Corpus, vocabulary: Vocabulary | None = None) -> tuple[Corpus, Corpus]:
    """Partition a corpus into (predicted-legitimate, predicted-bogus).

    Ground-truth labels are preserved on both sides. When a vocabulary is
    supplied, its fingerprint must match the one the model was trained with.
    """
    if vocabulary is not None and model.vocab_fingerprint is not None:
        if vocabulary.fingerprint() != model.vocab_fingerprint:
            raise TrainingError("vocabulary fingerprint does not match the model's training vocabulary")
    predicted = model.predict_labels(s.folksonomies)
    keep_legit, keep_bogus = [], []
    for f, lab in zip(s.folksonomies, predicted):
        (keep_legit if lab is Label.LEGITIMATE else keep_bogus).append(f)
    return Corpus(keep_legit), Corpus(keep_bogus)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

MODEL_FORMAT_VERSION = 1


def _model_payload(model) -> dict:
    if isinstance(model, NaiveBayesModel):
        return {"spamicity": model.spamicity, "default_spamicity": model.default_spamicity}
    if isinstance(model, SvmModel):
        if model.vectorizer is None:
            raise TrainingError("cannot save an SVM model without its vectorizer")
        return {
            "w": model.w.tolist(),
            "b": model.b,
            "c_reg": model.c_reg,
            "idf": model.vectorizer.idf.tolist(),
            "n_documents": model.vectorizer.n_documents,
            "vocabulary": list(model.vectorizer.vocabulary.tags),
        }
    if isinstance(model, NeuralModel):
        if model.vocabulary is None:
            raise TrainingError("cannot save a neural model without its vocabulary")
        return {
            "dims": {
                "vocab_size": model.vocab_size,
                "embed_dim": model.embed_dim,
                "hidden_dim": model.hidden_dim,
                "dense_dim": model.dense_dim,
                "seq_len": model.seq_len,
            },
            "dtype": model.dtype.name,
            "params": {k: v.tolist() for k, v in model.params.items()},
            "vocabulary": list(model.vocabulary.tags),
        }
    raise TrainingError(f"model kind {getattr(model, 'kind', type(model).__name__)!r} is not persistable")


def save_model(model, path) -> None:
    """Write a versioned JSON container with a vocabulary fingerprint."""
    container = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "vocab_fingerprint": model.vocab_fingerprint,
        "payload": _model_payload(model),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(container, fh, sort_keys=True)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        container = json.load(fh)
    version = container.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise TrainingError(f"unsupported model format version {version!r}")
    kind = container.get("kind")
    payload = container["payload"]
    if kind == "nb":
        model = NaiveBayesModel(
            spamicity=dict(payload["spamicity"]),
            default_spamicity=payload["default_spamicity"],
        )
    elif kind == "svm":
        vocab = Vocabulary.from_ranked_tags(payload["vocabulary"])
        vz = TfidfVectorizer(
            vocabulary=vocab,
            idf=np.asarray(payload["idf"], dtype=np.float64),
            n_documents=payload["n_documents"],
        )
        model = SvmModel(
            w=np.asarray(payload["w"], dtype=np.float64),
            b=payload["b"], c_reg=payload["c_reg"], vectorizer=vz,
        )
    elif kind == "nn":
        dims = payload["dims"]
        model = NeuralModel(
            dims["vocab_size"], embed_dim=dims["embed_dim"], hidden_dim=dims["hidden_dim"],
            dense_dim=dims["dense_dim"], seq_len=dims["seq_len"], dtype=np.dtype(payload["dtype"]),
        )
        for k, values in payload["params"].items():
            model.params[k] = np.asarray(values, dtype=model.dtype)
        model.vocabulary = Vocabulary.from_ranked_tags(payload["vocabulary"])
    else:
        raise TrainingError(f"unknown model kind {kind!r} in container")
    model.vocab_fingerprint = container.get("vocab_fingerprint")
    return model
