"""Command-line entry point wiring the full pipeline: build the knowledge
graph, embed, recommend, learn weights, evaluate, ablate, run sensitivity,
and serve the HTTP API.

Every subcommand is deterministic under a fixed seed and writes
byte-stable output files (sorted keys, no timestamps)."""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__
from .ablation import ablation_report
from .embedding import (
    DOC_DIM_DEFAULT,
    ENTITY_DIM_DEFAULT,
    EncoderSource,
    compose_corpus,
    load_vectors,
    save_vectors,
    stub_corpus_vectors,
)
from .graph import GraphError, IntegrityError, load_graph, save_graph
from .metrics import EvalContext, EvalReport, compute_buckets, evaluate_profile, load_judgments
from .ranking import WeightProfile, recommend
from .relations import default_rules, induce_relations, load_rules, load_sentences
from .weights import SearchConfig, learn, sensitivity

EXIT_CONFIG = 1
EXIT_DATA = 2


def _fail(code: int, kind: str, message: str, **extra) -> None:
    record = {"error": kind, "message": message, **extra}
    click.echo(json.dumps(record, sort_keys=True), err=True)
    sys.exit(code)


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_profile(path: str) -> WeightProfile:
    with open(path, encoding="utf-8") as fh:
        return WeightProfile.from_dict(json.load(fh))


def _load_workspace(graph_path, doc_vec_path, entity_vec_path, entity_dim):
    g = load_graph(graph_path)
    docs = load_vectors(doc_vec_path)
    ents = load_vectors(entity_vec_path)
    vectors = compose_corpus(g, docs, ents, entity_dim)
    return g, docs, ents, vectors


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Entity-aware multi-vector paper recommendation toolkit."""


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--sentences", type=click.Path(exists=True), default=None)
@click.option("--rules", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
def build(corpus, sentences, rules, out):
    """Load a corpus file, optionally induce semantic relations, validate,
    and save the graph."""
    try:
        g = load_graph(corpus)
    except IntegrityError as exc:
        _fail(EXIT_DATA, "integrity", str(exc))
    except GraphError as exc:
        _fail(EXIT_DATA, "format", str(exc))
    before = g.stats()
    if sentences:
        rule_set = load_rules(rules) if rules else default_rules()
        g = induce_relations(g, load_sentences(sentences), rule_set)
    save_graph(g, out)
    click.echo(json.dumps({"before": before, "after": g.stats()}, sort_keys=True))


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--doc-dim", default=DOC_DIM_DEFAULT, show_default=True)
@click.option("--entity-dim", default=ENTITY_DIM_DEFAULT, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def embed(corpus, doc_dim, entity_dim, seed, out):
    """Embed papers and entities with the deterministic stub encoder and
    write the two vector stores."""
    g = load_graph(corpus)
    source = EncoderSource(kind="StubHash", doc_dim=doc_dim, entity_dim=entity_dim)
    docs, ents = stub_corpus_vectors(g, source, seed=seed)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_vectors(docs, str(out_dir / "doc.evec"), doc_dim)
    save_vectors(ents, str(out_dir / "entity.evec"), entity_dim)
    click.echo(
        json.dumps(
            {"papers": len(docs), "entities": len(ents), "doc_dim": doc_dim,
             "entity_dim": entity_dim},
            sort_keys=True,
        )
    )


@main.command("recommend")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--doc-vectors", required=True, type=click.Path(exists=True))
@click.option("--entity-vectors", required=True, type=click.Path(exists=True))
@click.option("--entity-dim", default=ENTITY_DIM_DEFAULT, show_default=True)
@click.option("--profile", "profile_path", type=click.Path(exists=True), default=None)
@click.option("--query", required=True)
@click.option("-k", "--pool-size", "k", default=50, show_default=True)
@click.option("-n", "--top-n", "n", default=10, show_default=True)
@click.option("--mode", type=click.Choice(["coarse", "refined"]), default="coarse")
@click.option("--out", required=True, type=click.Path())
def cmd_recommend(graph_path, doc_vectors, entity_vectors, entity_dim, profile_path,
                  query, k, n, mode, out):
    """Rank the corpus for one query paper and write the ranked list."""
    if n > k:
        _fail(EXIT_CONFIG, "config", f"N ({n}) must not exceed K ({k})")
    profile = _load_profile(profile_path) if profile_path else WeightProfile.uniform()
    try:
        g, _docs, _ents, vectors = _load_workspace(
            graph_path, doc_vectors, entity_vectors, entity_dim
        )
    except (GraphError, KeyError) as exc:
        _fail(EXIT_DATA, "data", str(exc))
    if query not in vectors:
        _fail(EXIT_DATA, "query", f"unknown query paper {query!r}")
    corpus = [vectors[pid] for pid in sorted(vectors)]
    ranked = recommend(vectors[query], corpus, profile, k, n, mode=mode)
    doc = {
        "query_id": ranked.query_id,
        "mode": ranked.mode,
        "k": k,
        "n": n,
        "flags": ranked.flags,
        "items": [
            {
                "paper_id": c.paper_id,
                "coarse_score": c.coarse_score,
                "per_view_cos": list(c.per_view_cos),
                "refined_score": c.refined_score,
                "signals": list(c.signals) if c.signals else None,
                "padded": c.padded,
            }
            for c in ranked.items
        ],
    }
    _write_json(Path(out), doc)
    click.echo(f"query {query}  mode={mode}  top-{n}:")
    for rank, c in enumerate(ranked.items, start=1):
        score = c.refined_score if c.refined_score is not None else c.coarse_score
        pad = "  (padded)" if c.padded else ""
        click.echo(f"  {rank:3d}. {c.paper_id}  {score:+.6f}{pad}")


def _context_from_options(graph_path, doc_vectors, entity_vectors, entity_dim,
                          judgments_path, k, eval_k):
    g, _d, _e, vectors = _load_workspace(
        graph_path, doc_vectors, entity_vectors, entity_dim
    )
    judgments = load_judgments(judgments_path)
    queries = {q: rel for q, rel in judgments.items() if q in vectors}
    return g, vectors, EvalContext(
        queries=queries,
        vectors=vectors,
        k=k,
        eval_k=eval_k,
        bucket_map=compute_buckets(g),
    )


_workspace_options = [
    click.option("--graph", "graph_path", required=True, type=click.Path(exists=True)),
    click.option("--doc-vectors", required=True, type=click.Path(exists=True)),
    click.option("--entity-vectors", required=True, type=click.Path(exists=True)),
    click.option("--entity-dim", default=ENTITY_DIM_DEFAULT, show_default=True),
    click.option("--judgments", "judgments_path", required=True,
                 type=click.Path(exists=True)),
]


def workspace_options(fn):
    for opt in reversed(_workspace_options):
        fn = opt(fn)
    return fn


@main.command("learn")
@workspace_options
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("-k", "--pool-size", "k", default=50, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_learn(graph_path, doc_vectors, entity_vectors, entity_dim, judgments_path,
              config_path, k, out):
    """Learn w and alpha on the judged queries and write the best profile
    per seed."""
    cfg_doc = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            cfg_doc = json.load(fh)
    try:
        cfg = SearchConfig(**cfg_doc)
    except (TypeError, ValueError) as exc:
        _fail(EXIT_CONFIG, "config", str(exc))
    _g, _vectors, ctx = _context_from_options(
        graph_path, doc_vectors, entity_vectors, entity_dim, judgments_path, k,
        cfg.eval_k,
    )
    results = learn(ctx, cfg)
    chash = _config_hash({"cfg": cfg_doc, "k": k})
    doc = {
        "config_hash": chash,
        "runs": [
            {
                "seed": r.seed,
                "objective": r.dev_objective,
                "w": list(r.profile.w),
                "alpha": list(r.profile.alpha),
                "trajectory": r.trajectory,
            }
            for r in results
        ],
    }
    best = max(results, key=lambda r: (r.dev_objective, -r.seed))
    doc.update(
        {"w": list(best.profile.w), "alpha": list(best.profile.alpha),
         "objective": best.dev_objective, "seed": best.seed}
    )
    _write_json(Path(out), doc)
    click.echo(json.dumps({"best_objective": best.dev_objective, "seed": best.seed},
                          sort_keys=True))


@main.command("eval")
@workspace_options
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("-k", "--pool-size", "k", default=50, show_default=True)
@click.option("--eval-k", default=50, show_default=True)
@click.option("--mode", type=click.Choice(["coarse", "refined"]), default="coarse")
@click.option("--seed", "seeds", multiple=True, type=int, default=(0,))
@click.option("--out", required=True, type=click.Path())
def cmd_eval(graph_path, doc_vectors, entity_vectors, entity_dim, judgments_path,
             profile_path, k, eval_k, mode, seeds, out):
    """Evaluate a stored profile: MAP/nDCG/ILD/Coverage at eval-k."""
    profile = _load_profile(profile_path)
    _g, _vectors, ctx = _context_from_options(
        graph_path, doc_vectors, entity_vectors, entity_dim, judgments_path, k, eval_k
    )
    report = EvalReport()
    for seed in seeds:
        sub = ctx.subsample(1.0, seed) if len(seeds) == 1 else ctx.subsample(0.8, seed)
        values = evaluate_profile(sub, profile, mode=mode)
        for metric in ("map", "ndcg", "ild", "coverage"):
            if metric in values:
                report.add(metric, eval_k, mode, seed, values[metric])
    report.aggregate()
    out_path = Path(out)
    report.to_json(str(out_path.with_suffix(".json")))
    report.to_csv(str(out_path.with_suffix(".csv")))
    click.echo(json.dumps(report.aggregates, sort_keys=True))


@main.command("ablate")
@workspace_options
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("--mode", "modes", multiple=True, required=True,
              help="e.g. drop-view:t, drop-citations, drop-relation:achievedBy, "
                   "retain-fraction:0.5")
@click.option("-k", "--pool-size", "k", default=50, show_default=True)
@click.option("--eval-k", default=10, show_default=True)
@click.option("--seed", "seeds", multiple=True, type=int, default=(0,))
@click.option("--out", required=True, type=click.Path())
def cmd_ablate(graph_path, doc_vectors, entity_vectors, entity_dim, judgments_path,
               profile_path, modes, k, eval_k, seeds, out):
    """Re-run the system under ablation modes and tabulate deltas against
    the full configuration."""
    profile = _load_profile(profile_path)
    g = load_graph(graph_path)
    docs = load_vectors(doc_vectors)
    ents = load_vectors(entity_vectors)
    judgments = load_judgments(judgments_path)
    try:
        report = ablation_report(
            g, docs, ents, entity_dim, judgments, profile, list(modes),
            k=k, eval_k=eval_k, seeds=seeds,
        )
    except Exception as exc:  # noqa: BLE001 - surfaced as a machine-readable record
        _fail(EXIT_CONFIG, "ablation", str(exc))
    out_path = Path(out)
    report.to_json(str(out_path.with_suffix(".json")))
    report.to_csv(str(out_path.with_suffix(".csv")))
    click.echo(json.dumps(report.aggregates, sort_keys=True))


@main.command("sensitivity")
@workspace_options
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("--delta", "deltas", multiple=True, type=float,
              default=(-0.2, -0.1, 0.1, 0.2), show_default=True)
@click.option("-k", "--pool-size", "k", default=50, show_default=True)
@click.option("--eval-k", default=50, show_default=True)
@click.option("--out", required=True, type=click.Path())
def cmd_sensitivity(graph_path, doc_vectors, entity_vectors, entity_dim,
                    judgments_path, profile_path, deltas, k, eval_k, out):
    """One-coordinate weight perturbation table (scaled, renormalized)."""
    profile = _load_profile(profile_path)
    _g, _vectors, ctx = _context_from_options(
        graph_path, doc_vectors, entity_vectors, entity_dim, judgments_path, k, eval_k
    )
    rows = sensitivity(profile, ctx, deltas=tuple(deltas))
    _write_json(Path(out), {"rows": rows, "config_hash": _config_hash(
        {"deltas": list(deltas), "k": k, "eval_k": eval_k})})
    click.echo(f"{len(rows)} sensitivity rows written to {out}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP recommendation service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
