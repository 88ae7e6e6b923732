"""Folksonomy data model: ingestion, vocabulary, frequency statistics, encoding.

A folksonomy here is one user's tag set on one resource. A corpus is an
immutable collection of folksonomies with derived per-user / per-resource
indices and a tag frequency table. Everything downstream (attack synthesis,
classification, recommendation) is built on these two types.
"""

from __future__ import annotations

import enum
import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

# Legitimate folksonomies larger than this are binned, not rejected, when
# building the size distribution (fake folksonomies are capped at 50 tags).
SIZE_DISTRIBUTION_CAP = 50


class CorpusError(ValueError):
    """Malformed dataset input or an operation precondition violation."""


class Label(enum.Enum):
    LEGITIMATE = "legitimate"
    BOGUS = "bogus"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class Folksonomy:
    """One user's ordered, duplicate-free tag list on one resource."""

    user: str
    resource: str
    tags: tuple[str, ...]
    label: Label = Label.LEGITIMATE

    def __post_init__(self):
        deduped = tuple(dict.fromkeys(self.tags))
        if not deduped:
            raise CorpusError("folksonomy must carry at least one tag")
        object.__setattr__(self, "tags", deduped)

    def size(self) -> int:
        return len(self.tags)


class Corpus:
    """Immutable folksonomy collection with consistent derived indices.

    Invariants: one folksonomy per (user, resource) pair; the tag frequency
    table counts, for every tag, the number of folksonomies containing it.
    """

    def __init__(self, folksonomies: Iterable[Folksonomy]):
        self.folksonomies: tuple[Folksonomy, ...] = tuple(folksonomies)
        self._by_user: dict[str, list[Folksonomy]] = {}
        self._by_resource: dict[str, list[Folksonomy]] = {}
        self._tag_freq: Counter[str] = Counter()
        seen: set[tuple[str, str]] = set()
        for f in self.folksonomies:
            key = (f.user, f.resource)
            if key in seen:
                raise CorpusError(f"duplicate folksonomy for user={f.user!r} resource={f.resource!r}")
            seen.add(key)
            self._by_user.setdefault(f.user, []).append(f)
            self._by_resource.setdefault(f.resource, []).append(f)
            self._tag_freq.update(f.tags)

    def __len__(self) -> int:
        return len(self.folksonomies)

    def __iter__(self) -> Iterator[Folksonomy]:
        return iter(self.folksonomies)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return sorted(self.folksonomies, key=lambda f: (f.user, f.resource)) == sorted(
            other.folksonomies, key=lambda f: (f.user, f.resource)
        )

    @property
    def users(self) -> tuple[str, ...]:
        return tuple(self._by_user)

    @property
    def resources(self) -> tuple[str, ...]:
        return tuple(self._by_resource)

    @property
    def tag_frequency(self) -> Counter[str]:
        return Counter(self._tag_freq)

    def of_user(self, user: str) -> tuple[Folksonomy, ...]:
        return tuple(self._by_user.get(user, ()))

    def of_resource(self, resource: str) -> tuple[Folksonomy, ...]:
        return tuple(self._by_resource.get(resource, ()))

    def with_label(self, label: Label) -> tuple[Folksonomy, ...]:
        return tuple(f for f in self.folksonomies if f.label is label)

    def legitimate(self) -> tuple[Folksonomy, ...]:
        return self.with_label(Label.LEGITIMATE)

    def bogus(self) -> tuple[Folksonomy, ...]:
        return self.with_label(Label.BOGUS)


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between tags and 1..V, ranked by descending corpus frequency.

    Index 0 is reserved for sequence padding. Ties in frequency break
    lexicographically so that the mapping is deterministic.
    """

    tags: tuple[str, ...]
    index: dict[str, int] = field(repr=False)

    @staticmethod
    def from_ranked_tags(tags: Iterable[str]) -> "Vocabulary":
        ranked = tuple(tags)
        return Vocabulary(tags=ranked, index={t: i + 1 for i, t in enumerate(ranked)})

    def __len__(self) -> int:
        return len(self.tags)

    def __contains__(self, tag: str) -> bool:
        return tag in self.index

    def index_of(self, tag: str) -> int:
        """Rank index of `tag` (1-based), or 0 when out of vocabulary."""
        return self.index.get(tag, 0)

    def tag_of(self, idx: int) -> str:
        if not 1 <= idx <= len(self.tags):
            raise CorpusError(f"vocabulary index {idx} out of range 1..{len(self.tags)}")
        return self.tags[idx - 1]

    def fingerprint(self) -> str:
        """Stable hash of the ranked tag list, used for model compatibility checks."""
        h = hashlib.sha256()
        for t in self.tags:
            h.update(t.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()


# ---------------------------------------------------------------------------
# ingestion / serialization
# ---------------------------------------------------------------------------

def parse_dataset(lines: Iterable[str], label: Label = Label.LEGITIMATE) -> Corpus:
    """Parse `user<TAB>resource<TAB>tag1,tag2,...` lines into a Corpus.

    `#`-prefixed lines are comments; blank lines are ignored. Repeated
    (user, resource) lines merge their tag sets in order of appearance.
    Raises CorpusError (naming the line number) on malformed lines and on
    datasets with no folksonomies at all.
    """
    merged: dict[tuple[str, str], list[str]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise CorpusError(f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}")
        user, resource, tag_field = fields
        if not user or not resource:
            raise CorpusError(f"line {lineno}: empty user or resource identifier")
        tags = [t.strip() for t in tag_field.split(",")]
        tags = [t for t in tags if t]
        if not tags:
            raise CorpusError(f"line {lineno}: empty tag list")
        bucket = merged.setdefault((user, resource), [])
        for t in tags:
            if t not in bucket:
                bucket.append(t)
    if not merged:
        raise CorpusError("dataset contains no folksonomies")
    return Corpus(
        Folksonomy(user=u, resource=r, tags=tuple(ts), label=label) for (u, r), ts in merged.items()
    )


def parse_dataset_file(path, label: Label = Label.LEGITIMATE) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh, label=label)


def serialize_corpus(c: Corpus | Iterable[Folksonomy]) -> str:
    """Render folksonomies in the dataset wire format (labels are not stored)."""
    out = []
    for f in c:
        for part in (f.user, f.resource, *f.tags):
            if "\t" in part or "\n" in part or "," in part:
                raise CorpusError(f"identifier or tag {part!r} contains a delimiter character")
        out.append(f"{f.user}\t{f.resource}\t{','.join(f.tags)}")
    return "\n".join(out) + "\n" if out else ""


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def tag_frequencies(c: Corpus) -> Counter[str]:
    """Number of folksonomies containing each tag."""
    return c.tag_frequency


def build_vocabulary(c: Corpus) -> Vocabulary:
    """Frequency-ranked vocabulary; ties break lexicographically."""
    if len(c) == 0:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(c.tag_frequency.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary.from_ranked_tags(t for t, _ in ranked)


def top_popular_tags(c: Corpus, n: int) -> list[str]:
    """The n most frequent tags, descending, lexicographic tie-break."""
    freq = c.tag_frequency
    if n > len(freq):
        raise CorpusError(f"requested {n} tags but corpus has only {len(freq)} distinct tags")
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return [t for t, _ in ranked[:n]]


def top_annotated_resources(c: Corpus, n: int) -> list[str]:
    """The n resources with the largest total tag-assignment count."""
    totals: Counter[str] = Counter()
    for f in c:
        totals[f.resource] += f.size()
    if n > len(totals):
        raise CorpusError(f"requested {n} resources but corpus has only {len(totals)}")
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return [r for r, _ in ranked[:n]]


def sample_users(c: Corpus, n: int, seed: int) -> Corpus:
    """Uniform sample of n users without replacement; deterministic per seed."""
    users = sorted(c._by_user)
    if n > len(users):
        raise CorpusError(f"requested {n} users but corpus has only {len(users)}")
    rng = np.random.default_rng(seed)
    chosen = set(rng.choice(len(users), size=n, replace=False).tolist())
    keep = {users[i] for i in chosen}
    return Corpus(f for f in c if f.user in keep)


def folksonomy_size_distribution(c: Corpus) -> np.ndarray:
    """Empirical distribution of legitimate folksonomy sizes over 1..50.

    Returned array has length 51 and is indexed by size (entry 0 is unused
    and zero); sizes above 50 are clamped into the 50 bucket. Probabilities
    sum to 1.
    """
    sizes = [min(f.size(), SIZE_DISTRIBUTION_CAP) for f in c.legitimate()]
    if not sizes:
        raise CorpusError("corpus has no legitimate folksonomies")
    hist = np.bincount(sizes, minlength=SIZE_DISTRIBUTION_CAP + 1).astype(np.float64)
    return hist / hist.sum()


def encode_sequence(f: Folksonomy, v: Vocabulary, length: int) -> np.ndarray:
    """Vocabulary indices of the folksonomy's tags, truncated/zero-padded to `length`."""
    if length < 1:
        raise CorpusError("sequence length must be at least 1")
    idx = [v.index[t] for t in f.tags if t in v.index][:length]
    out = np.zeros(length, dtype=np.int64)
    out[: len(idx)] = idx
    return out


def corpus_stats(c: Corpus) -> dict:
    """Summary statistics in the shape emitted by the stats CLI subcommand."""
    sizes = Counter(f.size() for f in c)
    return {
        "folksonomies": len(c),
        "users": len(c.users),
        "unique_tags": len(c.tag_frequency),
        "size_histogram": {str(s): sizes[s] for s in sorted(sizes)},
    }
