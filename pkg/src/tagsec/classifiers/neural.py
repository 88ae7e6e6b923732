"""LSTM sequence classifier over tag-index sequences, implemented in numpy.

Layer stack: trainable embedding (padding row frozen at zero) -> single
LSTM with zero-masking (padded steps do not update the state, so the
readout is the state at each sequence's last real token) -> dense ReLU ->
2-way softmax giving (p_legitimate, p_bogus). Training is mini-batch Adam
on categorical cross-entropy with an accuracy-based checkpoint rule: the
kept parameters are those of the epoch with the best validation accuracy
among epochs whose validation loss stayed within a tolerance of the
running minimum.

Backpropagation is written out by hand (full BPTT) so analytic gradients
can be verified against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import Folksonomy, Label, Vocabulary, encode_sequence
from .naive_bayes import TrainingError

# gate slices within the fused 4H dimension
_I, _F, _O, _G = 0, 1, 2, 3


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class NeuralModel:
    """Embedding + LSTM + dense ReLU + softmax, with hand-rolled gradients."""

    kind = "nn"

    def __init__(
        self,
        vocab_size: int,
        embed_dim: int = 25,
        hidden_dim: int = 200,
        dense_dim: int = 50,
        seq_len: int = 50,
        seed: int = 0,
        dtype=np.float32,
    ):
        self.vocab_size = vocab_size
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.dense_dim = dense_dim
        self.seq_len = seq_len
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)

        def u(*shape):
            return rng.uniform(-0.05, 0.05, shape).astype(self.dtype)

        h = hidden_dim
        self.params: dict[str, np.ndarray] = {
            "embedding": u(vocab_size + 1, embed_dim),
            "w_x": u(embed_dim, 4 * h),
            "w_h": u(h, 4 * h),
            "b_g": np.zeros(4 * h, dtype=self.dtype),
            "w_d": u(h, dense_dim),
            "b_d": np.zeros(dense_dim, dtype=self.dtype),
            "w_o": u(dense_dim, 2),
            "b_o": np.zeros(2, dtype=self.dtype),
        }
        self.params["embedding"][0] = 0.0  # padding row, frozen
        self.params["b_g"][_F * h : (_F + 1) * h] = 1.0  # forget-gate bias
        self.history: dict[str, list[float]] = {}
        self.vocabulary: Vocabulary | None = None
        self.vocab_fingerprint: str | None = None

    # -- forward ----------------------------------------------------------

    def _check_indices(self, seqs: np.ndarray) -> np.ndarray:
        seqs = np.asarray(seqs)
        if seqs.ndim == 1:
            seqs = seqs[None, :]
        if seqs.min(initial=0) < 0 or seqs.max(initial=0) > self.vocab_size:
            raise TrainingError(
                f"sequence index out of range 0..{self.vocab_size} "
                f"(got min={seqs.min()}, max={seqs.max()})"
            )
        return seqs

    def _forward(self, seqs: np.ndarray, keep_cache: bool):
        p = self.params
        big, t_len = seqs.shape
        h_dim = self.hidden_dim
        lengths = (seqs != 0).sum(axis=1)  # index 0 is padding; real tags come first
        t_max = int(lengths.max(initial=0))
        emb = p["embedding"][seqs[:, :t_max]]  # (B, T', E)
        xz = emb @ p["w_x"] + p["b_g"]  # (B, T', 4H)
        h = np.zeros((big, h_dim), dtype=self.dtype)
        c = np.zeros((big, h_dim), dtype=self.dtype)
        cache = None
        if keep_cache:
            cache = {
                "seqs": seqs,
                "lengths": lengths,
                "t_max": t_max,
                "emb": emb,
                "hs": np.zeros((t_max + 1, big, h_dim), dtype=self.dtype),
                "cs": np.zeros((t_max + 1, big, h_dim), dtype=self.dtype),
                "gates": np.zeros((t_max, big, 4 * h_dim), dtype=self.dtype),
                "tanh_c": np.zeros((t_max, big, h_dim), dtype=self.dtype),
            }
        for t in range(t_max):
            active = (lengths > t)[:, None]
            z = xz[:, t, :] + h @ p["w_h"]
            i = _sigmoid(z[:, : h_dim])
            f = _sigmoid(z[:, h_dim : 2 * h_dim])
            o = _sigmoid(z[:, 2 * h_dim : 3 * h_dim])
            g = np.tanh(z[:, 3 * h_dim :])
            c = np.where(active, f * c + i * g, c)
            tc = np.tanh(c)
            h = np.where(active, o * tc, h)
            if keep_cache:
                cache["gates"][t] = np.concatenate([i, f, o, g], axis=1)
                cache["cs"][t + 1] = c
                cache["hs"][t + 1] = h
                cache["tanh_c"][t] = tc
        dense_pre = h @ p["w_d"] + p["b_d"]
        dense = np.maximum(dense_pre, 0.0)
        logits = dense @ p["w_o"] + p["b_o"]
        if keep_cache:
            cache["dense_pre"] = dense_pre
            cache["dense"] = dense
            cache["h_final"] = h
        return logits, cache

    def forward_probs(self, seqs: np.ndarray, chunk: int = 2048) -> np.ndarray:
        """Class probabilities (p_legitimate, p_bogus) for each sequence."""
        seqs = self._check_indices(seqs)
        out = np.empty((len(seqs), 2), dtype=np.float64)
        for start in range(0, len(seqs), chunk):
            logits, _ = self._forward(seqs[start : start + chunk], keep_cache=False)
            out[start : start + chunk] = np.exp(_log_softmax(logits.astype(np.float64)))
        return out

    def forward_single(self, seq: np.ndarray) -> tuple[float, float]:
        probs = self.forward_probs(np.asarray(seq)[None, :])
        return float(probs[0, 0]), float(probs[0, 1])

    # -- loss and gradients -------------------------------------------------

    def loss(self, seqs: np.ndarray, labels: np.ndarray) -> float:
        """Mean categorical cross-entropy over the batch."""
        seqs = self._check_indices(seqs)
        logits, _ = self._forward(seqs, keep_cache=False)
        logp = _log_softmax(logits.astype(np.float64))
        return float(-logp[np.arange(len(labels)), labels].mean())

    def loss_and_gradients(self, seqs: np.ndarray, labels: np.ndarray):
        seqs = self._check_indices(seqs)
        logits, cache = self._forward(seqs, keep_cache=True)
        logp = _log_softmax(logits.astype(np.float64))
        loss = float(-logp[np.arange(len(labels)), labels].mean())
        probs = np.exp(logp)
        d_logits = probs
        d_logits[np.arange(len(labels)), labels] -= 1.0
        d_logits /= len(labels)
        return loss, self._backward(d_logits.astype(self.dtype), cache)

    def _backward(self, d_logits: np.ndarray, cache: dict) -> dict[str, np.ndarray]:
        p = self.params
        h_dim = self.hidden_dim
        seqs = cache["seqs"]
        lengths = cache["lengths"]
        t_max = cache["t_max"]
        big = seqs.shape[0]

        grads = {k: np.zeros_like(v) for k, v in p.items()}
        grads["w_o"] = cache["dense"].T @ d_logits
        grads["b_o"] = d_logits.sum(axis=0)
        d_dense = d_logits @ p["w_o"].T
        d_dense[cache["dense_pre"] <= 0] = 0.0
        grads["w_d"] = cache["h_final"].T @ d_dense
        grads["b_d"] = d_dense.sum(axis=0)

        dh = d_dense @ p["w_d"].T
        dc = np.zeros((big, h_dim), dtype=self.dtype)
        dz_all = np.zeros((big, t_max, 4 * h_dim), dtype=self.dtype)
        for t in range(t_max - 1, -1, -1):
            active = (lengths > t)[:, None]
            gates = cache["gates"][t]
            i = gates[:, : h_dim]
            f = gates[:, h_dim : 2 * h_dim]
            o = gates[:, 2 * h_dim : 3 * h_dim]
            g = gates[:, 3 * h_dim :]
            tc = cache["tanh_c"][t]
            c_prev = cache["cs"][t]

            # frozen (padded) steps pass their gradients straight through
            dh_act = np.where(active, dh, 0.0)
            dc_act = np.where(active, dc, 0.0)
            do = dh_act * tc
            dc_total = dc_act + dh_act * o * (1.0 - tc * tc)
            di = dc_total * g
            df = dc_total * c_prev
            dg = dc_total * i

            dz = dz_all[:, t, :]
            dz[:, : h_dim] = di * i * (1.0 - i)
            dz[:, h_dim : 2 * h_dim] = df * f * (1.0 - f)
            dz[:, 2 * h_dim : 3 * h_dim] = do * o * (1.0 - o)
            dz[:, 3 * h_dim :] = dg * (1.0 - g * g)

            grads["w_h"] += cache["hs"][t].T @ dz
            dh = np.where(active, dz @ p["w_h"].T, dh)
            dc = np.where(active, dc_total * f, dc)

        flat_dz = dz_all.reshape(big * t_max, 4 * h_dim)
        grads["w_x"] = cache["emb"].reshape(big * t_max, self.embed_dim).T @ flat_dz
        grads["b_g"] = flat_dz.sum(axis=0)
        d_emb_rows = flat_dz @ p["w_x"].T
        np.add.at(grads["embedding"], seqs[:, :t_max].ravel(), d_emb_rows)
        grads["embedding"][0] = 0.0  # padding row stays frozen
        return grads

    # -- prediction over folksonomies ---------------------------------------

    def predict_labels(self, fs: Sequence[Folksonomy]) -> list[Label]:
        if self.vocabulary is None:
            raise TrainingError("model has no vocabulary attached; cannot classify folksonomies")
        x = encode_dataset(fs, self.vocabulary, self.seq_len)
        probs = self.forward_probs(x)
        return [Label.BOGUS if pb >= pl else Label.LEGITIMATE for pl, pb in probs]

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def restore(self, snap: dict[str, np.ndarray]) -> None:
        for k, v in snap.items():
            self.params[k] = v.copy()


def encode_dataset(fs: Sequence[Folksonomy], v: Vocabulary, seq_len: int) -> np.ndarray:
    """Stacked index sequences for a batch of folksonomies."""
    out = np.zeros((len(fs), seq_len), dtype=np.int64)
    for row, f in enumerate(fs):
        out[row] = encode_sequence(f, v, seq_len)
    return out


@dataclass
class _Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[k] / b1c
            v_hat = self.v[k] / b2c
            params[k] -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(params[k].dtype)


def _stratified_split(y: np.ndarray, val_fraction: float, rng: np.random.Generator):
    train_idx, val_idx = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) == 0:
            raise TrainingError("training data must contain both classes")
        idx = idx[rng.permutation(len(idx))]
        n_val = int(round(val_fraction * len(idx)))
        if n_val >= len(idx):
            raise TrainingError("validation split leaves no training data for one class")
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    val = np.concatenate(val_idx)
    if len(val) == 0:
        raise TrainingError("validation split is empty")
    return np.concatenate(train_idx), val


def nn_train(
    x: np.ndarray,
    y: np.ndarray,
    vocab_size: int,
    embed_dim: int = 25,
    hidden_dim: int = 200,
    dense_dim: int = 50,
    seq_len: int = 50,
    seed: int = 0,
    learning_rate: float = 0.001,
    batch_size: int = 32,
    max_epochs: int = 100,
    early_stop_tolerance: float = 0.01,
    validation_split: float = 0.1,
    dtype=np.float32,
) -> NeuralModel:
    """Train the LSTM classifier with Adam on categorical cross-entropy.

    Keeps the checkpoint with the best validation accuracy among epochs
    whose validation loss is within `early_stop_tolerance` of the running
    minimum; training short-circuits once an eligible epoch reaches perfect
    validation accuracy (no later epoch could replace it). Deterministic
    for a fixed seed.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y):
        raise TrainingError(f"bad training shapes: X {x.shape}, y {y.shape}")
    if not 0 < validation_split < 1:
        raise TrainingError("validation split must lie in (0, 1)")

    model = NeuralModel(
        vocab_size, embed_dim=embed_dim, hidden_dim=hidden_dim, dense_dim=dense_dim,
        seq_len=seq_len, seed=seed, dtype=dtype,
    )
    split_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    train_idx, val_idx = _stratified_split(y, validation_split, split_rng)
    x_train, y_train = x[train_idx], y[train_idx]
    x_val, y_val = x[val_idx], y[val_idx]

    adam = _Adam(lr=learning_rate)
    best_acc = -1.0
    best_snapshot = None
    min_val_loss = np.inf
    train_losses: list[float] = []
    val_losses: list[float] = []
    val_accs: list[float] = []

    for _epoch in range(max_epochs):
        order = shuffle_rng.permutation(len(x_train))
        epoch_loss = 0.0
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            loss, grads = model.loss_and_gradients(x_train[idx], y_train[idx])
            adam.step(model.params, grads)
            epoch_loss += loss * len(idx)
        train_losses.append(epoch_loss / len(order))

        probs = model.forward_probs(x_val)
        val_loss = float(-np.log(np.maximum(probs[np.arange(len(y_val)), y_val], 1e-300)).mean())
        val_acc = float((probs.argmax(axis=1) == y_val).mean())
        val_losses.append(val_loss)
        val_accs.append(val_acc)

        min_val_loss = min(min_val_loss, val_loss)
        eligible = val_loss <= min_val_loss * (1.0 + early_stop_tolerance)
        if eligible and val_acc > best_acc:
            best_acc = val_acc
            best_snapshot = model.snapshot()
            if best_acc == 1.0:
                break

    if best_snapshot is not None:
        model.restore(best_snapshot)
    model.history = {
        "train_loss": train_losses,
        "val_loss": val_losses,
        "val_accuracy": val_accs,
    }
    return model


def train_nn_classifier(
    train: Sequence[Folksonomy],
    v: Vocabulary,
    **kwargs,
) -> NeuralModel:
    """Encode folksonomies against the vocabulary and train the classifier."""
    for f in train:
        if f.label is Label.UNLABELED:
            raise TrainingError("cannot train on unlabeled folksonomies")
    seq_len = kwargs.get("seq_len", 50)
    x = encode_dataset(train, v, seq_len)
    y = np.array([1 if f.label is Label.BOGUS else 0 for f in train], dtype=np.int64)
    model = nn_train(x, y, vocab_size=len(v), **kwargs)
    model.vocabulary = v
    model.vocab_fingerprint = v.fingerprint()
    return model
