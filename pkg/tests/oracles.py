"""Independent brute-force reference implementations used to check the
package. Everything here is written straight-line in plain Python on
purpose and must stay independent of the code paths it verifies."""

from __future__ import annotations

import math


def o_cosine(a, b) -> float:
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) * float(x) for x in a))
    nb = math.sqrt(sum(float(y) * float(y) for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def o_precision_at_k(ranked, relevant, k) -> float:
    return sum(1 for pid in ranked[:k] if pid in relevant) / k


def o_ap_at_n(ranked, relevant, n) -> float:
    total = 0.0
    for k in range(1, min(n, len(ranked)) + 1):
        if ranked[k - 1] in relevant:
            total += o_precision_at_k(ranked, relevant, k)
    return total / len(relevant)


def o_map_at_k(per_query, k) -> float:
    aps = [
        o_ap_at_n(ranked, relevant, k)
        for ranked, relevant in per_query.values()
        if relevant
    ]
    return sum(aps) / len(aps)


def o_ndcg_at_k(ranked, relevant, k) -> float:
    dcg = 0.0
    for i, pid in enumerate(ranked[:k], start=1):
        rel = 1 if pid in relevant else 0
        dcg += (2**rel - 1) / math.log2(i + 1)
    ideal = sum(
        (2**1 - 1) / math.log2(i + 1) for i in range(1, min(len(relevant), k) + 1)
    )
    return dcg / ideal


def o_ild_at_k(ranked, vec_of, k) -> float:
    ids = list(ranked[:k])
    total = 0.0
    pairs = 0
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            total += 1.0 - o_cosine(vec_of[ids[i]], vec_of[ids[j]])
            pairs += 1
    return (2.0 / (len(ids) * (len(ids) - 1))) * total if pairs else 0.0


def o_coverage_at_k(lists, bucket_of, pools, k) -> float:
    vals = []
    for qid in lists:
        top = {bucket_of[pid] for pid in lists[qid][:k]}
        pool = {bucket_of[pid] for pid in pools[qid]}
        vals.append(len(top) / len(pool))
    return sum(vals) / len(vals)


# ---------------------------------------------------------------------------
# Straight-line recommendation pipeline (no staging, no shared helpers)
# ---------------------------------------------------------------------------


def oracle_recommend(query_id, vector_sets, w, alpha, k, n, mode):
    """Recompute the full two-stage ranking directly from the raw view
    vectors of each paper. Returns the ordered list of paper ids."""
    q = vector_sets[query_id]
    cands = sorted(pid for pid in vector_sets if pid != query_id)

    def views(vs):
        return {
            "g": vs.p_g, "t": vs.p_t, "m": vs.p_m, "d": vs.p_d,
            "tm": vs.p_tm, "td": vs.p_td,
        }

    qv = views(q)
    coarse = {}
    for pid in cands:
        pv = views(vector_sets[pid])
        coarse[pid] = sum(
            wi * o_cosine(qv[v], pv[v]) for wi, v in zip(w, ("g", "t", "m", "d"))
        )
    pool = sorted(cands, key=lambda p: (-coarse[p], p))[:k]
    if mode == "coarse":
        return pool[:n]

    tcos = {pid: o_cosine(qv["t"], views(vector_sets[pid])["t"]) for pid in pool}
    mean = sum(tcos.values()) / len(tcos)
    subset = [pid for pid in pool if tcos[pid] >= mean]

    refined = {}
    for pid in subset:
        pv = views(vector_sets[pid])
        s1 = o_cosine(qv["tm"], pv["tm"])
        ct = o_cosine(qv["t"], pv["t"])
        cm = o_cosine(qv["m"], pv["m"])
        cd = o_cosine(qv["d"], pv["d"])
        s2 = ct - cm
        s3 = ct - cd
        s4 = o_cosine(qv["td"], pv["td"])
        refined[pid] = sum(aj * sj for aj, sj in zip(alpha, (s1, s2, s3, s4)))
    ordered = sorted(subset, key=lambda p: (-refined[p], p))[:n]
    if len(ordered) < n:
        for pid in pool:
            if len(ordered) >= n:
                break
            if pid not in ordered:
                ordered.append(pid)
    return ordered
