"""Ablation and robustness reporting: entity-view ablations, citation
ablation, per-relation removal, and the relation retention sweep.

All modes share the candidate pools of the full system: candidate sets are
fixed from the unablated run and each mode only re-ranks within them.
"""

from __future__ import annotations

import re
from typing import Mapping, Optional, Sequence

import numpy as np

from . import metrics as M
from .embedding import compose_corpus
from .graph import ALL_SEMANTIC, EdgeKind, KnowledgeGraph, TopType, drop_relations
from .ranking import WeightProfile, generate_candidates, recommend

VIEW_TYPES = {
    "t": TopType.TASK,
    "m": TopType.METHOD,
    "d": None,  # material/metric view drops both types
}

_MODE_RE = re.compile(
    r"^(full|drop-view:[tmd]|drop-citations|drop-relation:\w+|retain-fraction:[0-9.]+)$"
)


class AblationError(Exception):
    pass


def _ablated_inputs(
    mode: str,
    g: KnowledgeGraph,
    doc_vectors: Mapping[str, np.ndarray],
    entity_vectors: Mapping[str, np.ndarray],
    entity_dim: int,
    seed: int,
):
    """Vector sets and graph for one ablation mode."""
    if not _MODE_RE.match(mode):
        raise AblationError(f"unknown ablation mode {mode!r}")
    include = {TopType.TASK, TopType.METHOD, TopType.MATERIAL, TopType.METRIC}
    zero_doc = False
    graph = g
    if mode.startswith("drop-view:"):
        key = mode.split(":", 1)[1]
        if key == "d":
            include -= {TopType.MATERIAL, TopType.METRIC}
        else:
            include -= {VIEW_TYPES[key]}
    elif mode == "drop-citations":
        zero_doc = True
    elif mode.startswith("drop-relation:"):
        kind = EdgeKind(mode.split(":", 1)[1])
        graph = drop_relations(g, kind, 0.0, seed)
    elif mode.startswith("retain-fraction:"):
        r = float(mode.split(":", 1)[1])
        graph = drop_relations(g, ALL_SEMANTIC, r, seed)
    vectors = compose_corpus(
        graph,
        doc_vectors,
        entity_vectors,
        entity_dim,
        include_types=include,
        zero_doc=zero_doc,
    )
    return graph, vectors


def ablation_report(
    g: KnowledgeGraph,
    doc_vectors: Mapping[str, np.ndarray],
    entity_vectors: Mapping[str, np.ndarray],
    entity_dim: int,
    judgments: Mapping[str, frozenset],
    profile: WeightProfile,
    modes: Sequence[str],
    k: int = 50,
    eval_k: int = 10,
    rank_mode: str = "coarse",
    seeds: Sequence[int] = (0,),
    subsample_fraction: float = 1.0,
) -> M.EvalReport:
    """Per-mode metric table with deltas against the full system.

    Candidate pools come from the full system and are held fixed; each
    ablated configuration re-ranks within its query's shared pool.
    """
    report = M.EvalReport()
    base_vectors = compose_corpus(g, doc_vectors, entity_vectors, entity_dim)
    base_buckets = M.compute_buckets(g)

    full_queries = {q: rel for q, rel in judgments.items() if q in base_vectors}
    baseline_by_seed: dict[int, dict[str, float]] = {}

    for seed in seeds:
        ctx = M.EvalContext(
            queries=dict(full_queries),
            vectors=base_vectors,
            k=k,
            eval_k=eval_k,
            bucket_map=base_buckets,
        )
        if subsample_fraction < 1.0:
            ctx = ctx.subsample(subsample_fraction, seed)

        # shared candidate pools from the unablated system
        corpus = [base_vectors[pid] for pid in sorted(base_vectors)]
        pools = {
            qid: [
                c.paper_id
                for c in generate_candidates(base_vectors[qid], corpus, profile.w, k).items
            ]
            for qid in sorted(ctx.queries)
        }

        for mode in ["full"] + [m for m in modes if m != "full"]:
            if mode == "full":
                graph_m, vectors_m = g, base_vectors
            else:
                graph_m, vectors_m = _ablated_inputs(
                    mode, g, doc_vectors, entity_vectors, entity_dim, seed
                )
            buckets_m = base_buckets if graph_m is g else M.compute_buckets(graph_m)
            values = _evaluate_within_pools(
                ctx, vectors_m, buckets_m, pools, profile, eval_k, rank_mode
            )
            if mode == "full":
                baseline_by_seed[seed] = values
            for metric, value in values.items():
                report.add(metric, eval_k, mode, seed, value)
                report.rows[-1]["delta"] = value - baseline_by_seed[seed][metric]

    report.aggregate()
    return report


def _evaluate_within_pools(
    ctx: M.EvalContext,
    vectors: Mapping[str, "object"],
    bucket_map: Mapping[str, str],
    pools: Mapping[str, Sequence[str]],
    profile: WeightProfile,
    eval_k: int,
    rank_mode: str,
) -> dict[str, float]:
    per_query: dict[str, tuple[list[str], frozenset]] = {}
    lists: dict[str, list[str]] = {}
    for qid in sorted(ctx.queries):
        pool_ids = pools[qid]
        restricted = [vectors[pid] for pid in pool_ids] + [vectors[qid]]
        ranked = recommend(
            vectors[qid],
            restricted,
            profile,
            k=max(1, len(pool_ids)),
            n=min(eval_k, max(1, len(pool_ids))),
            mode=rank_mode,
        )
        ids = [c.paper_id for c in ranked.items]
        per_query[qid] = (ids, ctx.queries[qid])
        lists[qid] = ids

    mean_ap, _ = M.map_at_k(per_query, eval_k)
    ndcgs = [
        M.ndcg_at_k(ids, rel, eval_k) for ids, rel in per_query.values() if rel
    ]
    div_vecs = {
        pid: M.diversity_vector(vs, ctx.diversity_view) for pid, vs in vectors.items()
    }
    ilds = [
        M.ild_at_k(ids, div_vecs, min(eval_k, len(ids)))
        for ids, _rel in per_query.values()
        if len(ids) >= 2
    ]
    coverage = M.coverage_at_k(lists, bucket_map, pools, eval_k)
    return {
        "map": mean_ap,
        "ndcg": float(np.mean(ndcgs)),
        "ild": float(np.mean(ilds)) if ilds else 0.0,
        "coverage": coverage,
    }
