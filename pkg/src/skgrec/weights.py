"""Weight learning on the probability simplex: coarse grid search followed
by coordinate ascent with Euclidean simplex projection and early stopping,
plus the one-coordinate perturbation sensitivity protocol.

Objectives are evaluated on a development split through a vectorized
evaluator that reproduces the ranking pipeline's ordering rules exactly
(descending score, ties by ascending paper_id, query self-excluded).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .metrics import EvalContext
from .ranking import WeightProfile

IMPROVEMENT_EPS = 1e-9  # strict-improvement threshold against float noise

W_COORDS = ("w_g", "w_t", "w_m", "w_d")
ALPHA_COORDS = ("alpha_1", "alpha_2", "alpha_3", "alpha_4")


@dataclass
class SearchConfig:
    coarse_step: float = 0.05
    fine_step: float = 0.01
    patience: int = 5
    objective: str = "MAP50"  # "MAP50" | "Jdiv"
    lambda_: float = 0.0
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    eval_k: int = 50
    subsample_fraction: float = 0.8

    def __post_init__(self) -> None:
        if not (0.0 < self.coarse_step < 1.0 and 0.0 < self.fine_step < 1.0):
            raise ValueError("grid steps must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.objective not in ("MAP50", "Jdiv"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.lambda_ < 0:
            raise ValueError("lambda must be >= 0")


@dataclass
class LearnedProfile:
    profile: WeightProfile
    dev_objective: float
    trajectory: list[tuple[int, float]]
    seed: int


def simplex_project(v: Sequence[float]) -> tuple[float, ...]:
    """Euclidean projection onto {x >= 0, sum x = 1} by sort-and-threshold,
    renormalized so the sum is exactly 1 within 1e-12."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = 0
    for j in range(len(v)):
        if u[j] + (1.0 - css[j]) / (j + 1) > 0:
            rho = j
    theta = (css[rho] - 1.0) / (rho + 1)
    x = np.maximum(v - theta, 0.0)
    s = x.sum()
    if abs(s - 1.0) > 1e-12:
        x = x / s
    return tuple(float(xi) for xi in x)


def simplex_lattice(step: float, dims: int = 4) -> Iterator[tuple[float, ...]]:
    """All simplex points with coordinates in multiples of `step`, in
    lexicographic order."""
    m = round(1.0 / step)
    if abs(m * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1 evenly")
    for parts in _compositions(m, dims):
        yield tuple(p * step for p in parts)


def _compositions(total: int, dims: int) -> Iterator[tuple[int, ...]]:
    if dims == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, dims - 1):
            yield (head,) + tail


# ---------------------------------------------------------------------------
# Vectorized profile evaluator
# ---------------------------------------------------------------------------


class ProfileEvaluator:
    """Precomputed per-query cosine tables over an evaluation context.

    Reproduces the pipeline's coarse and refined rankings as pure array
    operations so grid search stays tractable.
    """

    def __init__(self, ctx: EvalContext):
        self.ctx = ctx
        ids = sorted(ctx.vectors)
        self.ids = ids
        idx_of = {pid: i for i, pid in enumerate(ids)}

        def normalized(view: str) -> np.ndarray:
            mat = np.stack(
                [np.asarray(ctx.vectors[pid].view(view), dtype=np.float64) for pid in ids]
            )
            norms = np.linalg.norm(mat, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            return mat / norms

        mats = {v: normalized(v) for v in ("g", "t", "m", "d", "tm", "td")}

        div = np.stack(
            [
                np.concatenate(
                    [
                        np.asarray(ctx.vectors[pid].c_t, dtype=np.float64),
                        np.asarray(ctx.vectors[pid].c_m, dtype=np.float64),
                        np.asarray(ctx.vectors[pid].c_d, dtype=np.float64),
                    ]
                )
                if ctx.diversity_view == "tmd"
                else np.asarray(ctx.vectors[pid].view(ctx.diversity_view), dtype=np.float64)
                for pid in ids
            ]
        )
        dnorm = np.linalg.norm(div, axis=1, keepdims=True)
        dnorm[dnorm == 0.0] = 1.0
        self.div = div / dnorm

        self.per_query: dict[str, dict] = {}
        for qid in sorted(ctx.queries):
            qi = idx_of[qid]
            cand = np.array([i for i in range(len(ids)) if i != qi], dtype=int)
            cos = {v: mats[v][cand] @ mats[v][qi] for v in mats}
            coarse = np.column_stack([cos["g"], cos["t"], cos["m"], cos["d"]])
            signals = np.column_stack(
                [
                    cos["tm"],
                    cos["t"] - cos["m"],
                    cos["t"] - cos["d"],
                    cos["td"],
                ]
            )
            rel = np.array(
                [ids[i] in ctx.queries[qid] for i in cand], dtype=bool
            )
            self.per_query[qid] = {
                "cand": cand,
                "coarse": coarse,
                "signals": signals,
                "rel": rel,
            }

    def _rank(self, qid: str, w: np.ndarray, alpha: np.ndarray, mode: str) -> np.ndarray:
        """Ranked candidate-array positions for one query (top eval_k)."""
        q = self.per_query[qid]
        scores = q["coarse"] @ w
        order = np.argsort(-scores, kind="stable")
        k = min(self.ctx.k, len(order))
        pool = order[:k]
        n = min(self.ctx.eval_k, len(order))
        if mode == "coarse":
            return pool[:n]
        task_cos = q["coarse"][pool, 1]
        keep = pool[task_cos >= task_cos.mean()]
        keep = np.sort(keep)  # refined ties break by ascending paper_id
        rscores = q["signals"][keep] @ alpha
        ranked = keep[np.argsort(-rscores, kind="stable")][:n]
        if len(ranked) < n:
            chosen = set(ranked.tolist())
            pad = [i for i in pool if i not in chosen][: n - len(ranked)]
            ranked = np.concatenate([ranked, np.array(pad, dtype=int)])
        return ranked

    def metrics(self, profile: WeightProfile, mode: str) -> dict[str, float]:
        w = np.asarray(profile.w)
        alpha = np.asarray(profile.alpha)
        aps, ndcgs, ilds = [], [], []
        for qid in sorted(self.per_query):
            q = self.per_query[qid]
            if not q["rel"].any():
                continue
            ranked = self._rank(qid, w, alpha, mode)
            hits = q["rel"][ranked]
            total_rel = int(q["rel"].sum())
            positions = np.nonzero(hits)[0]
            ap = float(
                sum((i + 1) / (pos + 1) for i, pos in enumerate(positions)) / total_rel
            )
            aps.append(ap)
            dcg = float(np.sum(1.0 / np.log2(np.arange(2, len(hits) + 2))[hits]))
            ideal = sum(
                1.0 / math.log2(i + 1)
                for i in range(1, min(total_rel, self.ctx.eval_k) + 1)
            )
            ndcgs.append(dcg / ideal)
            if len(ranked) >= 2:
                cand_idx = q["cand"][ranked]
                sub = self.div[cand_idx]
                gram = sub @ sub.T
                kk = len(ranked)
                iu = np.triu_indices(kk, k=1)
                ilds.append(float(np.mean(1.0 - gram[iu])))
        return {
            "map": float(np.mean(aps)),
            "ndcg": float(np.mean(ndcgs)),
            "ild": float(np.mean(ilds)) if ilds else 0.0,
        }

    def objective(self, profile: WeightProfile, mode: str, cfg: SearchConfig) -> float:
        m = self.metrics(profile, mode)
        if cfg.objective == "Jdiv":
            return m["map"] + cfg.lambda_ * m["ild"]
        return m["map"]


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def coarse_grid(
    dev: EvalContext,
    cfg: SearchConfig,
    start: Optional[WeightProfile] = None,
    evaluator: Optional[ProfileEvaluator] = None,
) -> WeightProfile:
    """Best lattice profile (coordinates in multiples of coarse_step), w
    searched on the coarse objective first, then alpha on the refined
    objective with w fixed. Ties go to the lexicographically smallest
    point."""
    if not any(dev.queries.values()):
        raise ValueError("dev split has no query with a nonempty relevant set")
    ev = evaluator or ProfileEvaluator(dev)
    start = start or WeightProfile.heuristic()

    best_w, best_obj = start.w, ev.objective(start, "coarse", cfg)
    for point in simplex_lattice(cfg.coarse_step):
        obj = ev.objective(WeightProfile(w=point, alpha=start.alpha), "coarse", cfg)
        if obj > best_obj + IMPROVEMENT_EPS or (
            obj > best_obj - IMPROVEMENT_EPS and point < best_w
        ):
            best_w, best_obj = point, obj

    best_alpha, best_obj = start.alpha, ev.objective(
        WeightProfile(w=best_w, alpha=start.alpha), "refined", cfg
    )
    for point in simplex_lattice(cfg.coarse_step):
        obj = ev.objective(WeightProfile(w=best_w, alpha=point), "refined", cfg)
        if obj > best_obj + IMPROVEMENT_EPS or (
            obj > best_obj - IMPROVEMENT_EPS and point < best_alpha
        ):
            best_alpha, best_obj = point, obj

    return WeightProfile(w=best_w, alpha=best_alpha)


def _ascend_block(
    profile: WeightProfile,
    block: str,
    mode: str,
    ev: ProfileEvaluator,
    cfg: SearchConfig,
    trajectory: list[tuple[int, float]],
) -> WeightProfile:
    current = profile
    best = ev.objective(current, mode, cfg)
    trajectory.append((len(trajectory), best))
    stale_sweeps = 0
    while stale_sweeps < cfg.patience:
        improved = False
        for coord in range(4):
            for delta in (cfg.fine_step, -cfg.fine_step):
                vals = list(getattr(current, block))
                vals[coord] += delta
                moved = simplex_project(vals)
                cand = (
                    WeightProfile(w=moved, alpha=current.alpha)
                    if block == "w"
                    else WeightProfile(w=current.w, alpha=moved)
                )
                obj = ev.objective(cand, mode, cfg)
                if obj > best + IMPROVEMENT_EPS:
                    current, best = cand, obj
                    trajectory.append((len(trajectory), best))
                    improved = True
        stale_sweeps = 0 if improved else stale_sweeps + 1
    return current


def coordinate_ascent(
    start: WeightProfile,
    dev: EvalContext,
    cfg: SearchConfig,
    seed: int = 0,
    evaluator: Optional[ProfileEvaluator] = None,
) -> LearnedProfile:
    """Round-robin +/- fine_step moves with simplex projection, accepting
    strict improvements only; stops after `patience` non-improving full
    sweeps per block. w ascends on the coarse objective, then alpha on the
    refined objective."""
    ev = evaluator or ProfileEvaluator(dev)
    trajectory: list[tuple[int, float]] = []
    current = _ascend_block(start, "w", "coarse", ev, cfg, trajectory)
    current = _ascend_block(current, "alpha", "refined", ev, cfg, trajectory)
    return LearnedProfile(
        profile=current,
        dev_objective=trajectory[-1][1],
        trajectory=trajectory,
        seed=seed,
    )


def learn(
    dev: EvalContext,
    cfg: SearchConfig,
    start: Optional[WeightProfile] = None,
) -> list[LearnedProfile]:
    """Full two-stage search, one run per configured seed. Seeds control
    the dev-query subsample; the search itself is deterministic."""
    out = []
    for seed in cfg.seeds:
        ctx = (
            dev.subsample(cfg.subsample_fraction, seed)
            if cfg.subsample_fraction < 1.0
            else dev
        )
        ev = ProfileEvaluator(ctx)
        grid = coarse_grid(ctx, cfg, start=start, evaluator=ev)
        learned = coordinate_ascent(grid, ctx, cfg, seed=seed, evaluator=ev)
        out.append(learned)
    return out


def renormalize_perturbation(
    block: Sequence[float], coord: int, delta: float
) -> tuple[float, ...]:
    """Scale one coordinate by (1 + delta) and renormalize the block to sum
    to 1."""
    vals = np.asarray(block, dtype=float).copy()
    vals[coord] *= 1.0 + delta
    total = vals.sum()
    if total <= 0:
        raise ValueError("degenerate perturbation: block sums to zero")
    return tuple(float(v) for v in vals / total)


def sensitivity(
    profile: WeightProfile,
    test: EvalContext,
    deltas: Sequence[float] = (-0.2, -0.1, 0.1, 0.2),
    eval_k: Optional[int] = None,
) -> list[dict]:
    """One-coordinate perturbation table: for every w and alpha coordinate
    and every delta, the perturbed-profile MAP/nDCG and their deltas
    against baseline. w rows evaluate the coarse pipeline, alpha rows the
    refined one."""
    ev = ProfileEvaluator(test)
    rows: list[dict] = []
    for block, coords, mode in (("w", W_COORDS, "coarse"), ("alpha", ALPHA_COORDS, "refined")):
        base = ev.metrics(profile, mode)
        for ci, cname in enumerate(coords):
            for delta in deltas:
                if delta == 0.0:
                    perturbed = profile
                else:
                    moved = renormalize_perturbation(getattr(profile, block), ci, delta)
                    perturbed = (
                        WeightProfile(w=moved, alpha=profile.alpha)
                        if block == "w"
                        else WeightProfile(w=profile.w, alpha=moved)
                    )
                m = ev.metrics(perturbed, mode)
                rows.append(
                    {
                        "block": block,
                        "coordinate": cname,
                        "delta": delta,
                        "map": m["map"],
                        "ndcg": m["ndcg"],
                        "map_delta": m["map"] - base["map"],
                        "ndcg_delta": m["ndcg"] - base["ndcg"],
                    }
                )
    return rows
