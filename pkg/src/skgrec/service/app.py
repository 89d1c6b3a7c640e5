"""FastAPI service wrapping the core package.

The service holds one loaded workspace (graph + composed vector sets) in
process state; any number of concurrent readers may query it. Loading a
new workspace replaces the snapshot atomically.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..embedding import VectorSet, compose_corpus, load_vectors
from ..graph import GraphError, KnowledgeGraph, load_graph
from ..metrics import EvalContext, compute_buckets, evaluate_profile
from ..ranking import WeightProfile, recommend
from .schemas import (
    EvaluateRequest,
    EvaluateResponse,
    GraphStats,
    LoadWorkspaceRequest,
    RecommendRequest,
    RecommendResponse,
    RecommendationItem,
    WorkspaceInfo,
)

app = FastAPI(title="skgrec", version=__version__)


class Workspace:
    def __init__(self, graph: KnowledgeGraph, vectors: dict[str, VectorSet]):
        self.graph = graph
        self.vectors = vectors
        self.corpus = [vectors[pid] for pid in sorted(vectors)]
        self.buckets = compute_buckets(graph)


def _workspace() -> Workspace:
    ws: Optional[Workspace] = getattr(app.state, "workspace", None)
    if ws is None:
        raise HTTPException(status_code=409, detail="no workspace loaded")
    return ws


def _profile(model) -> WeightProfile:
    if model is None:
        return WeightProfile.uniform()
    try:
        return WeightProfile(w=tuple(model.w), alpha=tuple(model.alpha))
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/workspace", response_model=WorkspaceInfo)
def load_workspace(req: LoadWorkspaceRequest) -> WorkspaceInfo:
    try:
        graph = load_graph(req.graph_path)
        docs = load_vectors(req.doc_vectors_path)
        ents = load_vectors(req.entity_vectors_path)
        vectors = compose_corpus(graph, docs, ents, req.entity_dim)
    except (GraphError, KeyError, OSError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    app.state.workspace = Workspace(graph, vectors)
    return WorkspaceInfo(
        papers=len(graph.papers), entities=len(graph.entities), edges=len(graph.edges)
    )


@app.get("/graph/stats", response_model=GraphStats)
def graph_stats() -> GraphStats:
    return GraphStats(**_workspace().graph.stats())


@app.post("/recommend", response_model=RecommendResponse)
def recommend_endpoint(req: RecommendRequest) -> RecommendResponse:
    ws = _workspace()
    if req.query_id not in ws.vectors:
        raise HTTPException(status_code=404, detail=f"unknown query {req.query_id!r}")
    if req.mode not in ("coarse", "refined"):
        raise HTTPException(status_code=422, detail=f"unknown mode {req.mode!r}")
    if req.n > req.k:
        raise HTTPException(status_code=422, detail="n must not exceed k")
    profile = _profile(req.profile)
    ranked = recommend(
        ws.vectors[req.query_id], ws.corpus, profile, req.k, req.n, mode=req.mode
    )
    return RecommendResponse(
        query_id=ranked.query_id,
        mode=ranked.mode,
        flags=ranked.flags,
        items=[
            RecommendationItem(
                paper_id=c.paper_id,
                coarse_score=c.coarse_score,
                per_view_cos=list(c.per_view_cos),
                refined_score=c.refined_score,
                signals=list(c.signals) if c.signals else None,
                padded=c.padded,
            )
            for c in ranked.items
        ],
    )


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate_endpoint(req: EvaluateRequest) -> EvaluateResponse:
    ws = _workspace()
    queries = {
        qid: frozenset(rel) for qid, rel in req.judgments.items() if qid in ws.vectors
    }
    if not queries:
        raise HTTPException(status_code=422, detail="no judged queries in workspace")
    ctx = EvalContext(
        queries=queries,
        vectors=ws.vectors,
        k=req.k,
        eval_k=req.eval_k,
        bucket_map=ws.buckets,
    )
    values = evaluate_profile(ctx, _profile(req.profile), mode=req.mode)
    return EvaluateResponse(
        map=values["map"],
        ndcg=values["ndcg"],
        ild=values["ild"],
        coverage=values.get("coverage"),
        skipped_queries=int(values["skipped_queries"]),
    )
