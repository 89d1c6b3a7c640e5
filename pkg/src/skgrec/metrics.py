"""Accuracy metrics (AP, MAP, nDCG), diversity metrics (intra-list
diversity, bucket coverage), paired significance testing, and the
evaluation context that ties judgments, vectors, and bucket assignments
together.

Relevance is binary (citation-derived). Queries with empty relevant sets
are skipped and counted, never averaged in.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .embedding import VectorSet
from .graph import EdgeKind, KnowledgeGraph, TopType
from .ranking import RankedList, WeightProfile, cosine, generate_candidates, recommend


class EvaluationError(Exception):
    pass


def precision_at_k(ranked: Sequence[str], relevant: frozenset | set, k: int) -> float:
    """|top-k hits| / k. A list shorter than k is treated as-is with
    denominator k (missing tail counts as misses)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for pid in ranked[:k] if pid in relevant)
    return hits / k


def ap_at_n(ranked: Sequence[str], relevant: frozenset | set, n: int) -> float:
    """Average precision over the top-N, normalized by the total number of
    relevant documents for the query (not min(N, |relevant|))."""
    if not relevant:
        raise EvaluationError("AP undefined for an empty relevant set")
    total = 0.0
    for k in range(1, min(n, len(ranked)) + 1):
        if ranked[k - 1] in relevant:
            total += precision_at_k(ranked, relevant, k)
    return total / len(relevant)


def map_at_k(
    per_query: Mapping[str, tuple[Sequence[str], frozenset | set]], k: int
) -> tuple[float, int]:
    """Mean AP over queries with nonempty relevant sets.

    Returns (mean, skipped_count); raises if every query is skipped.
    """
    aps = []
    skipped = 0
    for qid in sorted(per_query):
        ranked, relevant = per_query[qid]
        if not relevant:
            skipped += 1
            continue
        aps.append(ap_at_n(ranked, relevant, k))
    if not aps:
        raise EvaluationError("all queries skipped (no relevance judgments)")
    return float(np.mean(aps)), skipped


def ndcg_at_k(ranked: Sequence[str], relevant: frozenset | set, k: int) -> float:
    """Binary-gain nDCG with ideal normalization over min(|relevant|, k)
    leading ones."""
    if not relevant:
        raise EvaluationError("nDCG undefined for an empty relevant set")
    dcg = 0.0
    for i, pid in enumerate(ranked[:k], start=1):
        if pid in relevant:
            dcg += 1.0 / math.log2(i + 1)
    ideal = sum(
        1.0 / math.log2(i + 1) for i in range(1, min(len(relevant), k) + 1)
    )
    return dcg / ideal


def ild_at_k(
    ranked: Sequence[str],
    vectors: Mapping[str, np.ndarray],
    k: int,
) -> float:
    """Mean pairwise dissimilarity (1 - cosine) of the top-k list under the
    diversity embedding; range [0, 2]."""
    if k < 2:
        raise ValueError("ILD requires k >= 2")
    ids = list(ranked[:k])
    n = len(ids)
    if n < 2:
        raise ValueError("list too short for ILD")
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += 1.0 - cosine(vectors[ids[i]], vectors[ids[j]])
    return total * 2.0 / (n * (n - 1))


def coverage_at_k(
    per_query_lists: Mapping[str, Sequence[str]],
    bucket_map: Mapping[str, str],
    per_query_candidates: Mapping[str, Sequence[str]],
    k: int,
) -> float:
    """Per query: distinct buckets of the top-k over distinct buckets of the
    candidate pool; averaged over queries."""
    scores = []
    for qid in sorted(per_query_lists):
        pool_buckets = {bucket_map[pid] for pid in per_query_candidates[qid]}
        if not pool_buckets:
            raise EvaluationError(f"query {qid!r}: candidate pool spans zero buckets")
        top_buckets = {bucket_map[pid] for pid in per_query_lists[qid][:k]}
        scores.append(len(top_buckets) / len(pool_buckets))
    if not scores:
        raise EvaluationError("no queries to evaluate")
    return float(np.mean(scores))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided paired t-test p-value. Identical samples (all differences
    zero) return p = 1.0 by convention."""
    if len(a) != len(b) or len(a) < 2:
        raise ValueError("paired t-test needs equal-length samples of size >= 2")
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if np.all(diff == 0.0):
        return 1.0
    sd = diff.std(ddof=1)
    if sd == 0.0:
        # constant nonzero shift: t statistic diverges
        return 0.0
    t = diff.mean() / (sd / math.sqrt(len(diff)))
    return float(2.0 * stats.t.sf(abs(t), df=len(diff) - 1))


# ---------------------------------------------------------------------------
# Semantic buckets
# ---------------------------------------------------------------------------

_WS = re.compile(r"\s+")


def _normalize_surface(s: str) -> str:
    return _WS.sub(" ", s.strip().lower())


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic: smaller id becomes the root
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


def compute_buckets(g: KnowledgeGraph) -> dict[str, str]:
    """Assign each paper a semantic bucket id.

    Task entities connected by `related` edges collapse into one bucket
    class; a paper's bucket is the hash of the sorted normalized surfaces of
    its task-entity classes. Papers without task entities fall back to a
    singleton bucket.
    """
    uf = _UnionFind()
    task_ids = {
        eid for eid, e in g.entities.items() if e.top_type == TopType.TASK
    }
    for eid in sorted(task_ids):
        uf.find(eid)
    for e in g.edges:
        if (
            e.kind == EdgeKind.RELATED
            and e.source in task_ids
            and e.target in task_ids
        ):
            uf.union(e.source, e.target)

    # representative surface per class: lexicographically smallest member surface
    class_surface: dict[str, str] = {}
    for eid in sorted(task_ids):
        root = uf.find(eid)
        surf = _normalize_surface(g.entities[eid].surface)
        if root not in class_surface or surf < class_surface[root]:
            class_surface[root] = surf

    buckets: dict[str, str] = {}
    for pid in sorted(g.papers):
        tasks = [
            e for e in g.entities_of(pid, TopType.TASK)
        ]
        if not tasks:
            buckets[pid] = f"paper:{pid}"
            continue
        reps = sorted({class_surface[uf.find(e.entity_id)] for e in tasks})
        buckets[pid] = hashlib.sha1("\x1f".join(reps).encode("utf-8")).hexdigest()[:16]
    return buckets


# ---------------------------------------------------------------------------
# Evaluation context and profile evaluation
# ---------------------------------------------------------------------------


def diversity_vector(vs: VectorSet, view: str = "tmd") -> np.ndarray:
    """Embedding used for ILD: by default the task + method +
    material/metric pooled concatenation, otherwise any composed view."""
    if view == "tmd":
        return np.concatenate([vs.c_t, vs.c_m, vs.c_d])
    return vs.view(view)


@dataclass
class EvalContext:
    """Everything needed to score a weight profile on a query set."""

    queries: dict[str, frozenset]  # query_id -> relevant paper ids
    vectors: dict[str, VectorSet]
    k: int = 50  # candidate pool size
    eval_k: int = 50
    bucket_map: dict[str, str] = field(default_factory=dict)
    diversity_view: str = "tmd"

    def __post_init__(self) -> None:
        for qid, rel in self.queries.items():
            if qid in rel:
                raise EvaluationError(f"query {qid!r} appears in its own relevant set")

    def subsample(self, fraction: float, seed: int) -> "EvalContext":
        """Deterministic query subsample (used for per-seed runs)."""
        import random

        qids = sorted(self.queries)
        n = max(1, round(fraction * len(qids)))
        rng = random.Random(seed)
        chosen = sorted(rng.sample(qids, n))
        return EvalContext(
            queries={q: self.queries[q] for q in chosen},
            vectors=self.vectors,
            k=self.k,
            eval_k=self.eval_k,
            bucket_map=self.bucket_map,
            diversity_view=self.diversity_view,
        )


def run_queries(
    ctx: EvalContext, profile: WeightProfile, mode: str, n: Optional[int] = None
) -> dict[str, RankedList]:
    corpus = [ctx.vectors[pid] for pid in sorted(ctx.vectors)]
    n = n or ctx.eval_k
    out = {}
    for qid in sorted(ctx.queries):
        out[qid] = recommend(ctx.vectors[qid], corpus, profile, ctx.k, n, mode=mode)
    return out


def evaluate_profile(
    ctx: EvalContext, profile: WeightProfile, mode: str = "coarse"
) -> dict[str, float]:
    """MAP, nDCG, ILD and Coverage at ctx.eval_k for one weight profile."""
    ranked = run_queries(ctx, profile, mode)
    per_query = {
        qid: ([c.paper_id for c in rl.items], ctx.queries[qid])
        for qid, rl in ranked.items()
    }
    mean_ap, skipped = map_at_k(per_query, ctx.eval_k)
    ndcgs = [
        ndcg_at_k(ids, rel, ctx.eval_k) for ids, rel in per_query.values() if rel
    ]
    div_vecs = {
        pid: diversity_vector(vs, ctx.diversity_view) for pid, vs in ctx.vectors.items()
    }
    ilds = []
    for qid, (ids, _rel) in per_query.items():
        if len(ids) >= 2:
            ilds.append(ild_at_k(ids, div_vecs, min(ctx.eval_k, len(ids))))
    result = {
        "map": mean_ap,
        "ndcg": float(np.mean(ndcgs)),
        "ild": float(np.mean(ilds)) if ilds else 0.0,
        "skipped_queries": float(skipped),
    }
    if ctx.bucket_map:
        corpus = [ctx.vectors[pid] for pid in sorted(ctx.vectors)]
        pools = {}
        for qid in sorted(ctx.queries):
            pool = generate_candidates(ctx.vectors[qid], corpus, profile.w, ctx.k)
            pools[qid] = [c.paper_id for c in pool.items]
        lists = {qid: ids for qid, (ids, _r) in per_query.items()}
        result["coverage"] = coverage_at_k(lists, ctx.bucket_map, pools, ctx.eval_k)
    return result


def load_judgments(path: str) -> dict[str, frozenset]:
    """JSON-lines judgments: {"query_id": ..., "relevant": [...]} per line."""
    out: dict[str, frozenset] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out[rec["query_id"]] = frozenset(rec["relevant"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise EvaluationError(f"{path}:{lineno}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    """Rows of (metric, k, mode, seed, value) plus free-form aggregates."""

    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def add(self, metric: str, k: int, mode: str, seed: int, value: float) -> None:
        _check_range(metric, value)
        self.rows.append(
            {"metric": metric, "k": k, "mode": mode, "seed": seed, "value": value}
        )

    def aggregate(self) -> None:
        """Mean and std per (metric, k, mode) over seeds."""
        groups: dict[tuple, list[float]] = {}
        for r in self.rows:
            groups.setdefault((r["metric"], r["k"], r["mode"]), []).append(r["value"])
        self.aggregates = {
            f"{m}@{k}/{mode}": {
                "mean": float(np.mean(vals)),
                "std": float(np.std(vals)),
                "n": len(vals),
            }
            for (m, k, mode), vals in sorted(groups.items())
        }

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"rows": self.rows, "aggregates": self.aggregates},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")

    def to_csv(self, path: str) -> None:
        fieldnames = ["metric", "k", "mode", "seed", "value"]
        for r in self.rows:
            for key in r:
                if key not in fieldnames:
                    fieldnames.append(key)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            for r in self.rows:
                writer.writerow(r)


_RANGES = {
    "map": (0.0, 1.0),
    "ndcg": (0.0, 1.0),
    "coverage": (0.0, 1.0),
    "ild": (0.0, 2.0),
}


def _check_range(metric: str, value: float) -> None:
    lo_hi = _RANGES.get(metric)
    if lo_hi is not None:
        lo, hi = lo_hi
        if not (lo - 1e-9 <= value <= hi + 1e-9):
            raise EvaluationError(f"{metric} value {value} outside [{lo}, {hi}]")
