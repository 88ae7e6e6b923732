"""Seeded synthetic folksonomy corpora with Zipf-like tag popularity.

Used by the evaluation harness, demos and tests as a stand-in for a real
annotation dataset: a few hundred users, a few thousand folksonomies, a
long-tailed tag distribution, and resources with skewed annotation counts.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Folksonomy, Label


def make_synthetic_corpus(
    n_users: int = 300,
    mean_folksonomies_per_user: float = 10.0,
    n_tags: int = 8000,
    n_resources: int = 400,
    tag_zipf_exponent: float = 0.7,
    resource_zipf_exponent: float = 0.5,
    topic_pool_size: int = 60,
    topic_band: tuple[int, int] = (75, 2500),
    topic_mix: float = 0.5,
    mean_size: float = 4.0,
    max_size: int = 12,
    seed: int = 0,
) -> Corpus:
    """Generate an all-legitimate corpus; deterministic for a fixed seed.

    Tag draws mix a global Zipf head (shared popular tags) with a small
    per-resource topic pool from the mid-frequency band, so each resource
    carries a coherent signature on top of the common popular tags.
    """
    rng = np.random.default_rng(seed)
    tag_names = [f"tag{i:04d}" for i in range(1, n_tags + 1)]
    tag_p = 1.0 / np.arange(1, n_tags + 1) ** tag_zipf_exponent
    tag_p /= tag_p.sum()
    res_names = [f"res{i:04d}" for i in range(1, n_resources + 1)]
    res_p = 1.0 / np.arange(1, n_resources + 1) ** resource_zipf_exponent
    res_p /= res_p.sum()

    band = np.arange(*topic_band)
    pool_size = min(topic_pool_size, len(band))
    topic_pools = [rng.choice(band, size=pool_size, replace=False) for _ in range(n_resources)]
    base_weights = (1.0 - topic_mix) * tag_p

    folks = []
    for u in range(1, n_users + 1):
        user = f"user{u:04d}"
        n_folk = max(1, int(rng.poisson(mean_folksonomies_per_user)))
        n_folk = min(n_folk, n_resources)  # one folksonomy per (user, resource)
        chosen = rng.choice(n_resources, size=n_folk, replace=False, p=res_p)
        for r in chosen:
            weights = base_weights.copy()
            weights[topic_pools[r]] += topic_mix / pool_size
            size = min(int(rng.geometric(1.0 / mean_size)), max_size)
            tags = rng.choice(n_tags, size=size, replace=False, p=weights)
            folks.append(
                Folksonomy(
                    user=user,
                    resource=res_names[r],
                    tags=tuple(tag_names[t] for t in tags),
                    label=Label.LEGITIMATE,
                )
            )
    return Corpus(folks)


def make_desk_corpus(seed: int = 7) -> Corpus:
    """The default desk-scale corpus: 300 users, roughly 3k folksonomies."""
    return make_synthetic_corpus(seed=seed)
