"""Two-stage recommendation: coarse candidate generation by a convex
combination of per-view cosines, task-similar subset refinement via four
weighted signals, and final top-N ranking.

All ordering is deterministic: scores sort descending with ties broken by
ascending paper_id, and the query never appears in its own list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .embedding import VectorSet

COARSE_VIEWS = ("g", "t", "m", "d")


@dataclass(frozen=True)
class WeightProfile:
    """Two simplex weight blocks: w over the four coarse views (g, t, m, d)
    and alpha over the four refinement signals."""

    w: tuple[float, float, float, float]
    alpha: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        for name, block in (("w", self.w), ("alpha", self.alpha)):
            arr = np.asarray(block, dtype=float)
            if arr.shape != (4,):
                raise ValueError(f"{name} must have 4 entries")
            if (arr < -1e-12).any() or abs(arr.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} is not on the simplex: {block}")

    @staticmethod
    def uniform() -> "WeightProfile":
        q = (0.25, 0.25, 0.25, 0.25)
        return WeightProfile(w=q, alpha=q)

    @staticmethod
    def heuristic() -> "WeightProfile":
        # default initialization for weight search
        return WeightProfile(w=(0.4, 0.3, 0.2, 0.1), alpha=(0.4, 0.3, 0.2, 0.1))

    def to_dict(self) -> dict:
        return {"w": list(self.w), "alpha": list(self.alpha)}

    @staticmethod
    def from_dict(d: Mapping) -> "WeightProfile":
        return WeightProfile(w=tuple(d["w"]), alpha=tuple(d["alpha"]))


@dataclass
class ScoredCandidate:
    paper_id: str
    per_view_cos: tuple[float, float, float, float]
    coarse_score: float
    signals: Optional[tuple[float, float, float, float]] = None
    refined_score: Optional[float] = None
    padded: bool = False


@dataclass
class CandidatePool:
    query_id: str
    items: list[ScoredCandidate]
    truncated: bool = False  # True when K exceeded the corpus size


@dataclass
class RankedList:
    query_id: str
    items: list[ScoredCandidate]
    k: int
    mode: str = "coarse"
    flags: list[str] = field(default_factory=list)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; a zero vector on either side yields 0.0 ("no
    evidence") rather than an error."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def score_coarse(q: VectorSet, p: VectorSet, w: Sequence[float]) -> ScoredCandidate:
    """Per-view cosines over (g, t, m, d) and their w-weighted sum."""
    cos = tuple(cosine(q.view(v), p.view(v)) for v in COARSE_VIEWS)
    return ScoredCandidate(
        paper_id=p.paper_id,
        per_view_cos=cos,
        coarse_score=float(sum(wi * ci for wi, ci in zip(w, cos))),
    )


def _sorted_desc(items: list[ScoredCandidate], key: str) -> list[ScoredCandidate]:
    return sorted(items, key=lambda c: (-getattr(c, key), c.paper_id))


def generate_candidates(
    q: VectorSet,
    corpus: Sequence[VectorSet],
    w: Sequence[float],
    k: int,
) -> CandidatePool:
    """Exact top-K scan by coarse score; the query is excluded from its own
    pool."""
    if k < 1:
        raise ValueError("K must be >= 1")
    scored = [score_coarse(q, p, w) for p in corpus if p.paper_id != q.paper_id]
    ranked = _sorted_desc(scored, "coarse_score")
    truncated = k > len(ranked)
    return CandidatePool(query_id=q.paper_id, items=ranked[:k], truncated=truncated)


def task_subset(
    q: VectorSet, pool: CandidatePool, vectors: Mapping[str, VectorSet]
) -> CandidatePool:
    """Candidates whose task-view cosine to the query is at least the pool
    mean."""
    if not pool.items:
        raise ValueError("empty candidate pool")
    task_cos = {
        c.paper_id: cosine(q.p_t, vectors[c.paper_id].p_t) for c in pool.items
    }
    mean = sum(task_cos.values()) / len(task_cos)
    kept = [c for c in pool.items if task_cos[c.paper_id] >= mean]
    return CandidatePool(query_id=pool.query_id, items=kept, truncated=pool.truncated)


def compute_signals(q: VectorSet, p: VectorSet) -> tuple[float, float, float, float]:
    """The four refinement signals: joint task+method cosine, task-minus-
    method difference, task-minus-material/metric difference, joint
    task+material/metric cosine."""
    cos_t = cosine(q.p_t, p.p_t)
    cos_m = cosine(q.p_m, p.p_m)
    cos_d = cosine(q.p_d, p.p_d)
    return (
        cosine(q.p_tm, p.p_tm),
        cos_t - cos_m,
        cos_t - cos_d,
        cosine(q.p_td, p.p_td),
    )


def refine(
    q: VectorSet,
    subset: CandidatePool,
    alpha: Sequence[float],
    vectors: Mapping[str, VectorSet],
) -> RankedList:
    """Re-rank a task-similar subset by the alpha-weighted signal sum."""
    items: list[ScoredCandidate] = []
    for c in subset.items:
        s = compute_signals(q, vectors[c.paper_id])
        c.signals = s
        c.refined_score = float(sum(aj * sj for aj, sj in zip(alpha, s)))
        items.append(c)
    ordered = _sorted_desc(items, "refined_score")
    return RankedList(
        query_id=subset.query_id, items=ordered, k=len(ordered), mode="refined"
    )


def recommend(
    q: VectorSet,
    corpus: Sequence[VectorSet],
    profile: WeightProfile,
    k: int,
    n: int,
    mode: str = "coarse",
) -> RankedList:
    """Full pipeline: coarse candidate generation, then (in refined mode)
    task-subset refinement, padded back from the coarse order when the
    subset is shorter than N. Padded items are flagged."""
    if n > k:
        raise ValueError("N must not exceed K")
    if not corpus or all(p.paper_id == q.paper_id for p in corpus):
        raise ValueError("empty corpus")
    vectors = {p.paper_id: p for p in corpus}
    pool = generate_candidates(q, corpus, profile.w, k)
    flags = ["pool-truncated"] if pool.truncated else []

    if mode == "coarse":
        return RankedList(
            query_id=q.paper_id, items=pool.items[:n], k=n, mode="coarse", flags=flags
        )
    if mode != "refined":
        raise ValueError(f"unknown mode {mode!r}")

    subset = task_subset(q, pool, vectors)
    ranked = refine(q, subset, profile.alpha, vectors)
    items = ranked.items[:n]
    if len(items) < n:
        flags = flags + ["padded-from-coarse"]
        chosen = {c.paper_id for c in items}
        for c in pool.items:
            if len(items) >= n:
                break
            if c.paper_id not in chosen:
                c.padded = True
                items.append(c)
    return RankedList(query_id=q.paper_id, items=items, k=n, mode="refined", flags=flags)
