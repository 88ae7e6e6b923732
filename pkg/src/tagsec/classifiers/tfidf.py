"""TF-IDF vectorization of folksonomies over a fixed vocabulary.

tfidf(t, d) = tf(t, d) * idf(t) with tf = |d_t| / |d| and idf = ln(D / D_t).
Tag presence is binary after deduplication, so |d_t| is 0 or 1 and |d| is
the folksonomy's tag count.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..corpus import Folksonomy, Vocabulary


@dataclass
class TfidfVectorizer:
    vocabulary: Vocabulary
    idf: np.ndarray = field(repr=False)  # aligned with vocabulary indices 1..V
    n_documents: int = 0

    def dimension(self) -> int:
        return len(self.vocabulary)


def tfidf_fit(train: Iterable[Folksonomy], v: Vocabulary) -> TfidfVectorizer:
    """Compute idf over the training folksonomies.

    Vocabulary tags absent from the training set get idf = ln(D + 1); they
    carry no signal but keep the transform defined for every tag.
    """
    docs = list(train)
    if not docs:
        raise ValueError("cannot fit a TF-IDF vectorizer on an empty training set")
    df: Counter[str] = Counter()
    for f in docs:
        df.update(f.tags)
    d_total = len(docs)
    idf = np.empty(len(v), dtype=np.float64)
    for i, t in enumerate(v.tags):
        d_t = df.get(t, 0)
        idf[i] = np.log(d_total / d_t) if d_t else np.log(d_total + 1.0)
    return TfidfVectorizer(vocabulary=v, idf=idf, n_documents=d_total)


def tfidf_transform(vz: TfidfVectorizer, f: Folksonomy) -> np.ndarray:
    """Dense TF-IDF vector over the vocabulary; OOV tags contribute nothing."""
    x = np.zeros(len(vz.vocabulary), dtype=np.float64)
    size = f.size()
    for t in f.tags:
        idx = vz.vocabulary.index_of(t)
        if idx:
            x[idx - 1] = vz.idf[idx - 1] / size
    return x


def tfidf_transform_many(vz: TfidfVectorizer, fs: Sequence[Folksonomy]) -> np.ndarray:
    """Stacked TF-IDF matrix of shape (len(fs), V)."""
    out = np.zeros((len(fs), len(vz.vocabulary)), dtype=np.float64)
    for row, f in enumerate(fs):
        size = f.size()
        for t in f.tags:
            idx = vz.vocabulary.index_of(t)
            if idx:
                out[row, idx - 1] = vz.idf[idx - 1] / size
    return out
