"""Naive Bayes folksonomy filter built on per-tag spamicity.

A folksonomy with tags 1..N scores p = 1/(1+e^n) with
n = sum_i [ln(1-p_i) - ln(p_i)], where p_i is the probability that a
folksonomy is fake given that it contains tag i. Spamicities are estimated
from labeled folksonomy counts with Laplace smoothing so they stay strictly
inside (0, 1).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..corpus import Folksonomy, Label


class TrainingError(ValueError):
    """Training set cannot support the requested estimation."""


@dataclass
class NaiveBayesModel:
    kind = "nb"

    spamicity: dict[str, float]
    default_spamicity: float = 0.5
    vocab_fingerprint: str | None = field(default=None, repr=False)

    def score(self, f: Folksonomy) -> float:
        """Probability that the folksonomy is bogus."""
        n = 0.0
        for t in f.tags:
            p_i = self.spamicity.get(t, self.default_spamicity)
            n += math.log(1.0 - p_i) - math.log(p_i)
        if n > 700.0:  # e^n would overflow; score is indistinguishable from 0
            return 0.0
        return 1.0 / (1.0 + math.exp(n))

    def predict_label(self, f: Folksonomy) -> Label:
        return Label.BOGUS if self.score(f) > 0.5 else Label.LEGITIMATE

    def predict_labels(self, fs: Sequence[Folksonomy]) -> list[Label]:
        return [self.predict_label(f) for f in fs]


def nb_train(train: Iterable[Folksonomy], smoothing: float = 1.0) -> NaiveBayesModel:
    """Estimate per-tag spamicity p_i = (b_t + a) / (b_t + l_t + 2a).

    b_t and l_t count bogus / legitimate training folksonomies containing
    tag t; a is the smoothing constant. Unseen tags score the neutral
    default a/(2a) = 0.5.
    """
    if smoothing <= 0:
        raise TrainingError("smoothing constant must be positive")
    bogus_counts: Counter[str] = Counter()
    legit_counts: Counter[str] = Counter()
    n_bogus = n_legit = 0
    for f in train:
        if f.label is Label.BOGUS:
            bogus_counts.update(f.tags)
            n_bogus += 1
        else:
            legit_counts.update(f.tags)
            n_legit += 1
    if n_bogus == 0 or n_legit == 0:
        raise TrainingError("training set must contain both bogus and legitimate folksonomies")
    spamicity = {}
    for t in bogus_counts.keys() | legit_counts.keys():
        b_t, l_t = bogus_counts[t], legit_counts[t]
        spamicity[t] = (b_t + smoothing) / (b_t + l_t + 2.0 * smoothing)
    return NaiveBayesModel(spamicity=spamicity)
