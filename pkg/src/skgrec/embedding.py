"""Per-paper vector views: document vector, sum-pooled entity vectors for
the task / method / material-metric types, and their concatenations.

All vectors are float32. The binary vector store format ("EVEC") is the
bridge to external embedding exporters.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .graph import KnowledgeGraph, TopType

DOC_DIM_DEFAULT = 768
ENTITY_DIM_DEFAULT = 1536

# Composed view names, in canonical order.
VIEWS = ("g", "t", "m", "d", "tm", "td")

EVEC_MAGIC = b"EVEC"
EVEC_VERSION = 1


class VectorStoreError(Exception):
    """Malformed or inconsistent vector store file."""


@dataclass(frozen=True)
class EncoderSource:
    kind: str = "StubHash"  # "FileStore" | "StubHash"
    doc_dim: int = DOC_DIM_DEFAULT
    entity_dim: int = ENTITY_DIM_DEFAULT


@dataclass(frozen=True)
class VectorSet:
    """All vector views of one paper.

    Composed views concatenate pooled entity vectors with the document
    vector: g = [t, m, d, doc], tm = [t, m, doc], td = [t, d, doc],
    singles = [x, doc].
    """

    paper_id: str
    s_p: np.ndarray
    c_t: np.ndarray
    c_m: np.ndarray
    c_d: np.ndarray
    p_g: np.ndarray
    p_t: np.ndarray
    p_m: np.ndarray
    p_d: np.ndarray
    p_tm: np.ndarray
    p_td: np.ndarray

    def view(self, name: str) -> np.ndarray:
        return getattr(self, f"p_{name}")


def sum_pool(vecs: Sequence[np.ndarray], dim: Optional[int] = None) -> np.ndarray:
    """Elementwise sum of a set of same-dimension vectors.

    An empty set pools to the zero vector; `dim` is required in that case.
    """
    if len(vecs) == 0:
        if dim is None:
            raise ValueError("dim required to pool an empty set")
        return np.zeros(dim, dtype=np.float32)
    dims = {len(v) for v in vecs}
    if len(dims) != 1:
        raise ValueError(f"mixed vector dimensions in pool: {sorted(dims)}")
    # accumulate in float64 so the result is insensitive to input order
    out = np.zeros(len(vecs[0]), dtype=np.float64)
    for v in vecs:
        out += np.asarray(v, dtype=np.float64)
    return out.astype(np.float32)


def compose(
    paper_id: str,
    s_p: np.ndarray,
    entity_vectors_by_type: Mapping[TopType, Sequence[np.ndarray]],
    entity_dim: Optional[int] = None,
) -> VectorSet:
    """Build the full VectorSet for one paper.

    Material and Metric entity vectors pool together into the single
    material/metric view; Task/Method sub-entities are expected to already
    carry their parent top_type.
    """
    s_p = np.asarray(s_p, dtype=np.float32)
    if entity_dim is None:
        for vs in entity_vectors_by_type.values():
            if len(vs):
                entity_dim = len(vs[0])
                break
    if entity_dim is None:
        raise ValueError("entity_dim required when no entity vectors are given")

    tasks = list(entity_vectors_by_type.get(TopType.TASK, []))
    methods = list(entity_vectors_by_type.get(TopType.METHOD, []))
    datas = list(entity_vectors_by_type.get(TopType.MATERIAL, [])) + list(
        entity_vectors_by_type.get(TopType.METRIC, [])
    )
    c_t = sum_pool(tasks, entity_dim)
    c_m = sum_pool(methods, entity_dim)
    c_d = sum_pool(datas, entity_dim)
    for name, c in (("task", c_t), ("method", c_m), ("material/metric", c_d)):
        if len(c) != entity_dim:
            raise ValueError(
                f"{paper_id}: {name} pool has dim {len(c)}, expected {entity_dim}"
            )
    cat = lambda *parts: np.concatenate(parts).astype(np.float32)  # noqa: E731
    return VectorSet(
        paper_id=paper_id,
        s_p=s_p,
        c_t=c_t,
        c_m=c_m,
        c_d=c_d,
        p_g=cat(c_t, c_m, c_d, s_p),
        p_t=cat(c_t, s_p),
        p_m=cat(c_m, s_p),
        p_d=cat(c_d, s_p),
        p_tm=cat(c_t, c_m, s_p),
        p_td=cat(c_t, c_d, s_p),
    )


def compose_corpus(
    g: KnowledgeGraph,
    doc_vectors: Mapping[str, np.ndarray],
    entity_vectors: Mapping[str, np.ndarray],
    entity_dim: int,
    include_types: Optional[set[TopType]] = None,
    zero_doc: bool = False,
) -> dict[str, VectorSet]:
    """Compose VectorSets for every paper in the graph.

    `include_types` restricts which entity types contribute to their pools
    (others pool to zero); `zero_doc` replaces the document vector with
    zeros. Both exist for ablation runs.
    """
    out: dict[str, VectorSet] = {}
    for pid in sorted(g.papers):
        if pid not in doc_vectors:
            raise KeyError(f"missing document vector for paper {pid!r}")
        s_p = doc_vectors[pid]
        if zero_doc:
            s_p = np.zeros_like(np.asarray(s_p, dtype=np.float32))
        by_type: dict[TopType, list[np.ndarray]] = {}
        for ent in sorted(g.entities_of(pid), key=lambda e: e.entity_id):
            if include_types is not None and ent.top_type not in include_types:
                continue
            if ent.entity_id not in entity_vectors:
                raise KeyError(f"missing entity vector for {ent.entity_id!r}")
            by_type.setdefault(ent.top_type, []).append(entity_vectors[ent.entity_id])
        out[pid] = compose(pid, s_p, by_type, entity_dim=entity_dim)
    return out


def stub_encode(text: str, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit-norm pseudorandom vector for a text.

    Stands in for external encoders in tests and offline runs: a pure
    function of (text, dim, seed) with distinct texts mapping to
    near-orthogonal directions at moderate dims.
    """
    if dim <= 0:
        raise ValueError("dim must be positive")
    digest = hashlib.sha256(f"{seed}\x00{text}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim).astype(np.float32)
    v /= np.linalg.norm(v)
    return v.astype(np.float32)


def save_vectors(vectors: Mapping[str, np.ndarray], path: str, dim: int) -> None:
    """Write an id -> vector map in the EVEC binary format.

    Layout: magic "EVEC", version u16, dim u32, count u64 (little-endian),
    then per record [id_len u16][id UTF-8][dim * float32 LE]. Records are
    written in sorted id order.
    """
    ids = sorted(vectors)
    with open(path, "wb") as fh:
        fh.write(EVEC_MAGIC)
        fh.write(struct.pack("<HIQ", EVEC_VERSION, dim, len(ids)))
        for key in ids:
            v = np.asarray(vectors[key], dtype="<f4")
            if v.shape != (dim,):
                raise VectorStoreError(
                    f"vector for {key!r} has shape {v.shape}, expected ({dim},)"
                )
            raw = key.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(v.tobytes())


def load_vectors(path: str) -> dict[str, np.ndarray]:
    """Read an EVEC file back into an id -> float32 vector map."""
    with open(path, "rb") as fh:
        head = fh.read(4 + 2 + 4 + 8)
        if len(head) < 18 or head[:4] != EVEC_MAGIC:
            raise VectorStoreError(f"{path}: bad magic/header")
        version, dim, count = struct.unpack("<HIQ", head[4:])
        if version != EVEC_VERSION:
            raise VectorStoreError(f"{path}: unsupported version {version}")
        out: dict[str, np.ndarray] = {}
        for i in range(count):
            lenraw = fh.read(2)
            if len(lenraw) < 2:
                raise VectorStoreError(f"{path}: truncated at record {i}")
            (id_len,) = struct.unpack("<H", lenraw)
            raw = fh.read(id_len)
            if len(raw) < id_len:
                raise VectorStoreError(f"{path}: truncated id at record {i}")
            body = fh.read(4 * dim)
            if len(body) < 4 * dim:
                raise VectorStoreError(f"{path}: truncated vector at record {i}")
            out[raw.decode("utf-8")] = np.frombuffer(body, dtype="<f4").copy()
        if fh.read(1):
            raise VectorStoreError(f"{path}: trailing bytes after {count} records")
    return out


def stub_corpus_vectors(
    g: KnowledgeGraph, source: EncoderSource, seed: int = 0
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Deterministically embed every paper (title + abstract) and entity
    surface with the stub encoder."""
    docs = {
        pid: stub_encode(f"{p.title}\n{p.abstract}", source.doc_dim, seed)
        for pid, p in g.papers.items()
    }
    ents = {
        eid: stub_encode(e.surface, source.entity_dim, seed)
        for eid, e in g.entities.items()
    }
    return docs, ents
