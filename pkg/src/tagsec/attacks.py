"""Synthesis of Overload and Piggyback bogus folksonomy batches.

Both attacks promote a single bogus resource through fresh fake user
profiles. Overload annotates it with popular tags drawn from the head of
the tag frequency distribution; Piggyback replicates the tags of a highly
annotated target resource. Batch sizes follow the legitimate folksonomy
size distribution, and tag draws are frequency-weighted so that the
generated tag distribution stays close to the legitimate one (measured
here with KL divergence).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .corpus import (
    Corpus,
    CorpusError,
    Folksonomy,
    Label,
    Vocabulary,
    folksonomy_size_distribution,
    top_annotated_resources,
)


class AttackError(ValueError):
    """Invalid attack parameters for the given corpus."""


class AttackKind(enum.Enum):
    OVERLOAD = "overload"
    PIGGYBACK = "piggyback"


@dataclass(frozen=True)
class AttackSpec:
    """Parameters of one synthetic attack batch.

    injection_ratio is a fraction of the legitimate folksonomy count;
    target_resource only applies to Piggyback and defaults to the single
    most annotated resource.
    """

    kind: AttackKind
    injection_ratio: float
    popular_tag_pool: int = 75
    popular_resource_pool: int = 100
    max_size: int = 50
    bogus_resource: str = "bogus-resource"
    target_resource: str | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.injection_ratio <= 1:
            raise AttackError(f"injection_ratio must be in (0, 1], got {self.injection_ratio}")
        if self.max_size < 1:
            raise AttackError("max_size must be at least 1")
        if self.popular_tag_pool < 1 or self.popular_resource_pool < 1:
            raise AttackError("tag and resource pools must be at least 1")


@dataclass(frozen=True)
class BogusBatch:
    """Generated bogus folksonomies, one fresh fake user per folksonomy."""

    spec: AttackSpec
    folksonomies: tuple[Folksonomy, ...]
    target_resource: str | None = None

    def __len__(self) -> int:
        return len(self.folksonomies)

    @property
    def fake_users(self) -> tuple[str, ...]:
        return tuple(f.user for f in self.folksonomies)


def batch_count(n_legitimate: int, injection_ratio: float) -> int:
    """round(ratio * legitimate count), but at least one profile."""
    return max(1, round(injection_ratio * n_legitimate))


def _legitimate_view(c: Corpus) -> Corpus:
    legit = c.legitimate()
    if not legit:
        raise AttackError("corpus has no legitimate folksonomies to model the attack on")
    if len(legit) == len(c):
        return c
    return Corpus(legit)


def _fake_users(c: Corpus, seed: int, count: int) -> list[str]:
    existing = set(c.users)
    users, i = [], 0
    while len(users) < count:
        name = f"fake-{seed}-{i:06d}"
        if name not in existing:
            users.append(name)
        i += 1
    return users


def _sample_sizes(rng: np.random.Generator, dist: np.ndarray, count: int, cap: int) -> np.ndarray:
    sizes = rng.choice(len(dist), size=count, p=dist)
    return np.clip(sizes, 1, cap)


def _weighted_draw(rng: np.random.Generator, tags: list[str], weights: np.ndarray, size: int) -> list[str]:
    p = weights / weights.sum()
    picked = rng.choice(len(tags), size=size, replace=False, p=p)
    return [tags[i] for i in picked]


def generate_overload(c: Corpus, spec: AttackSpec) -> BogusBatch:
    """Overload batch: bogus resource annotated with popular tags.

    The tag pool is the `popular_tag_pool` most frequent tags restricted to
    tags appearing on the `popular_resource_pool` most annotated resources,
    backfilled by global frequency when the restriction comes up short.
    Draws within the pool are frequency-weighted without replacement.
    """
    if spec.kind is not AttackKind.OVERLOAD:
        raise AttackError(f"overload generator called with kind={spec.kind.value}")
    legit = _legitimate_view(c)
    freq = legit.tag_frequency
    if len(freq) < spec.popular_tag_pool:
        raise AttackError(
            f"corpus has {len(freq)} distinct tags, fewer than the {spec.popular_tag_pool}-tag pool"
        )
    if spec.bogus_resource in set(c.resources):
        raise AttackError(f"bogus resource {spec.bogus_resource!r} already exists in the corpus")

    ranked = [t for t, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))]
    n_resources = min(spec.popular_resource_pool, len(legit.resources))
    on_popular: set[str] = set()
    for r in top_annotated_resources(legit, n_resources):
        for f in legit.of_resource(r):
            on_popular.update(f.tags)
    pool = [t for t in ranked[: spec.popular_tag_pool] if t in on_popular]
    if len(pool) < spec.popular_tag_pool:
        in_pool = set(pool)
        backfill = (t for t in ranked if t not in in_pool)
        while len(pool) < spec.popular_tag_pool:
            pool.append(next(backfill))

    weights = np.array([freq[t] for t in pool], dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    count = batch_count(len(legit), spec.injection_ratio)
    cap = min(spec.max_size, len(pool))
    sizes = _sample_sizes(rng, folksonomy_size_distribution(legit), count, cap)
    users = _fake_users(c, spec.seed, count)
    folks = tuple(
        Folksonomy(
            user=users[i],
            resource=spec.bogus_resource,
            tags=tuple(_weighted_draw(rng, pool, weights, int(sizes[i]))),
            label=Label.BOGUS,
        )
        for i in range(count)
    )
    return BogusBatch(spec=spec, folksonomies=folks)


def generate_piggyback(c: Corpus, spec: AttackSpec) -> BogusBatch:
    """Piggyback batch: bogus resource replicates a target resource's tags.

    Each bogus folksonomy draws from the target resource's tags first and
    falls back to the wider pool (tags on the most annotated resources)
    only when its sampled size exceeds the target's tag count.
    """
    if spec.kind is not AttackKind.PIGGYBACK:
        raise AttackError(f"piggyback generator called with kind={spec.kind.value}")
    legit = _legitimate_view(c)
    if spec.bogus_resource in set(c.resources):
        raise AttackError(f"bogus resource {spec.bogus_resource!r} already exists in the corpus")

    n_resources = min(spec.popular_resource_pool, len(legit.resources))
    popular = top_annotated_resources(legit, n_resources)
    target = spec.target_resource if spec.target_resource is not None else popular[0]
    if target not in set(legit.resources):
        raise AttackError(f"target resource {target!r} does not exist in the corpus")

    freq = legit.tag_frequency
    target_counts: dict[str, int] = {}
    for f in legit.of_resource(target):
        for t in f.tags:
            target_counts[t] = target_counts.get(t, 0) + 1
    wider_set: set[str] = set()
    for r in popular:
        for f in legit.of_resource(r):
            wider_set.update(f.tags)
    wider_set -= target_counts.keys()

    # replication mimics the target's own annotation profile
    target_tags = sorted(target_counts, key=lambda t: (-target_counts[t], t))
    wider = sorted(wider_set, key=lambda t: (-freq[t], t))
    pool_size = len(target_tags) + len(wider)
    if pool_size == 0:
        raise AttackError("piggyback tag pool is empty")

    w_target = np.array([target_counts[t] for t in target_tags], dtype=np.float64)
    w_wider = np.array([freq[t] for t in wider], dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    count = batch_count(len(legit), spec.injection_ratio)
    cap = min(spec.max_size, pool_size)
    sizes = _sample_sizes(rng, folksonomy_size_distribution(legit), count, cap)
    users = _fake_users(c, spec.seed, count)

    folks = []
    for i in range(count):
        s = int(sizes[i])
        if s <= len(target_tags):
            tags = _weighted_draw(rng, target_tags, w_target, s)
        else:
            tags = list(target_tags) + _weighted_draw(rng, wider, w_wider, s - len(target_tags))
        folks.append(
            Folksonomy(user=users[i], resource=spec.bogus_resource, tags=tuple(tags), label=Label.BOGUS)
        )
    return BogusBatch(spec=spec, folksonomies=tuple(folks), target_resource=target)


def generate(c: Corpus, spec: AttackSpec) -> BogusBatch:
    if spec.kind is AttackKind.OVERLOAD:
        return generate_overload(c, spec)
    return generate_piggyback(c, spec)


def inject(c: Corpus, b: BogusBatch) -> Corpus:
    """Merge a bogus batch into a host corpus, preserving labels."""
    collisions = set(c.users) & set(b.fake_users)
    if collisions:
        raise AttackError(f"fake users collide with existing users: {sorted(collisions)[:5]}")
    return Corpus(tuple(c.folksonomies) + b.folksonomies)


# ---------------------------------------------------------------------------
# distribution diagnostics
# ---------------------------------------------------------------------------

def tag_class_distribution(fs, v: Vocabulary) -> np.ndarray:
    """Normalized tag assignment frequencies over the vocabulary.

    Entry i-1 holds the probability of the tag with vocabulary index i.
    Out-of-vocabulary tags are ignored.
    """
    counts = np.zeros(len(v), dtype=np.float64)
    for f in fs:
        for t in f.tags:
            idx = v.index_of(t)
            if idx:
                counts[idx - 1] += 1
    total = counts.sum()
    if total == 0:
        raise AttackError("no in-vocabulary tag assignments to build a distribution from")
    return counts / total


def kl_divergence(p: np.ndarray, q: np.ndarray, eps: float = 1e-10) -> float:
    """D_KL(p || q) in nats after additive eps-smoothing and renormalization.

    Both inputs must already be probability vectors of equal length; the
    smoothing only guards against empty bins in q (or p). Non-negative.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise AttackError(f"distribution length mismatch: {p.shape} vs {q.shape}")
    for name, vec in (("p", p), ("q", q)):
        if abs(vec.sum() - 1.0) > 1e-9:
            raise AttackError(f"{name} is not normalized (sums to {vec.sum()!r})")
        if (vec < 0).any():
            raise AttackError(f"{name} has negative entries")
    ps = (p + eps) / (p + eps).sum()
    qs = (q + eps) / (q + eps).sum()
    return max(float(np.sum(ps * np.log(ps / qs))), 0.0)
