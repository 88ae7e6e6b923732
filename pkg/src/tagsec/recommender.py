"""Similarity-based top-k resource recommendation from averaged tag embeddings.

Each folksonomy is the mean of its tags' embedding vectors; user and
resource profiles are means over their folksonomies' vectors. Rankings use
cosine similarity, descending, with lexicographic resource tie-breaks.
Owners whose folksonomies have no in-table tags get no profile at all and
take no part in recommendation (cold-start exclusion).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, Folksonomy


class EmbeddingError(ValueError):
    """Malformed embedding input."""


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    vectors: Mapping[str, np.ndarray]

    def __contains__(self, tag: str) -> bool:
        return tag in self.vectors

    def get(self, tag: str):
        return self.vectors.get(tag)


@dataclass(frozen=True)
class ProfileVector:
    owner: str
    vector: np.ndarray
    support: int  # folksonomies averaged; always >= 1


@dataclass(frozen=True)
class TopKList:
    user: str
    entries: tuple[tuple[str, float], ...]  # (resource, similarity), similarity desc

    def __len__(self) -> int:
        return len(self.entries)

    def resources(self) -> tuple[str, ...]:
        return tuple(r for r, _ in self.entries)


def load_embeddings(lines: Iterable[str]) -> EmbeddingTable:
    """Parse `tag v1 v2 ... vd` lines with a consistent dimension."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise EmbeddingError(f"line {lineno}: expected a tag and at least one component")
        tag = parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingError(f"line {lineno}: non-numeric vector component") from exc
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise EmbeddingError(f"line {lineno}: dimension {len(vec)} != expected {dim}")
        vectors[tag] = vec
    if dim is None:
        raise EmbeddingError("embedding input contains no vectors")
    return EmbeddingTable(dimension=dim, vectors=vectors)


def load_embeddings_file(path) -> EmbeddingTable:
    with open(path, "r", encoding="utf-8") as fh:
        return load_embeddings(fh)


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def deterministic_embeddings(tags: Iterable[str], dimension: int = 50, seed: int = 0) -> EmbeddingTable:
    """Seeded per-tag embeddings, identical across processes and platforms.

    Each tag's vector comes from a PCG64 generator keyed by the FNV-1a hash
    of the seed (8 little-endian bytes) followed by the tag's UTF-8 bytes;
    components are uniform in [-1, 1].
    """
    if dimension < 1:
        raise EmbeddingError("embedding dimension must be at least 1")
    seed_bytes = (seed & _MASK64).to_bytes(8, "little")
    vectors = {}
    for tag in tags:
        key = _fnv1a64(seed_bytes + tag.encode("utf-8"))
        rng = np.random.Generator(np.random.PCG64(key))
        vectors[tag] = rng.uniform(-1.0, 1.0, dimension)
    return EmbeddingTable(dimension=dimension, vectors=vectors)


def folksonomy_vector(f: Folksonomy, e: EmbeddingTable):
    """Mean embedding of the folksonomy's in-table tags; None when none are."""
    rows = [e.vectors[t] for t in f.tags if t in e.vectors]
    if not rows:
        return None
    return np.mean(rows, axis=0)


def _profile(owner: str, fs: Sequence[Folksonomy], e: EmbeddingTable):
    vecs = [v for v in (folksonomy_vector(f, e) for f in fs) if v is not None]
    if not vecs:
        return None
    return ProfileVector(owner=owner, vector=np.mean(vecs, axis=0), support=len(vecs))


def user_vector(user: str, fs: Sequence[Folksonomy], e: EmbeddingTable):
    return _profile(user, fs, e)


def resource_vector(resource: str, fs: Sequence[Folksonomy], e: EmbeddingTable):
    return _profile(resource, fs, e)


def build_profiles(c: Corpus, e: EmbeddingTable) -> tuple[dict[str, ProfileVector], dict[str, ProfileVector]]:
    """User and resource profiles for a whole corpus in one pass."""
    user_sums: dict[str, np.ndarray] = {}
    user_counts: dict[str, int] = {}
    res_sums: dict[str, np.ndarray] = {}
    res_counts: dict[str, int] = {}
    for f in c:
        v = folksonomy_vector(f, e)
        if v is None:
            continue
        for sums, counts, key in ((user_sums, user_counts, f.user), (res_sums, res_counts, f.resource)):
            if key in sums:
                sums[key] = sums[key] + v
                counts[key] += 1
            else:
                sums[key] = v
                counts[key] = 1
    users = {u: ProfileVector(u, user_sums[u] / user_counts[u], user_counts[u]) for u in user_sums}
    resources = {r: ProfileVector(r, res_sums[r] / res_counts[r], res_counts[r]) for r in res_sums}
    return users, resources


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector is numerically zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise EmbeddingError(f"vector dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(a @ b / (na * nb))


def top_k(u: ProfileVector, resource_profiles: Mapping[str, ProfileVector], k: int) -> TopKList:
    """The k most cosine-similar resources, ties broken by resource id."""
    if k < 1:
        raise EmbeddingError("k must be at least 1")
    names = sorted(resource_profiles)
    if not names:
        return TopKList(user=u.owner, entries=())
    mat = np.stack([resource_profiles[r].vector for r in names])
    norms = np.linalg.norm(mat, axis=1)
    un = np.linalg.norm(u.vector)
    sims = np.zeros(len(names), dtype=np.float64)
    if un >= 1e-12:
        ok = norms >= 1e-12
        sims[ok] = (mat[ok] @ u.vector) / (norms[ok] * un)
    order = np.argsort(-sims, kind="stable")[:k]  # stable keeps id-ascending ties
    return TopKList(user=u.owner, entries=tuple((names[i], float(sims[i])) for i in order))


def compute_top_k_lists(
    user_profiles: Mapping[str, ProfileVector],
    resource_profiles: Mapping[str, ProfileVector],
    k: int,
) -> dict[str, TopKList]:
    return {u: top_k(p, resource_profiles, k) for u, p in sorted(user_profiles.items())}


def rank_of(resource: str, lst: TopKList):
    """1-based rank of the resource in the list, or None when absent."""
    for pos, (r, _) in enumerate(lst.entries, start=1):
        if r == resource:
            return pos
    return None
