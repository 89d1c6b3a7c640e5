"""Dependency-template relation induction: turns pre-parsed sentences with
entity mentions into typed semantic edges.

A candidate edge is emitted only when the ordered entity type pair is
admissible for a rule AND the shortest dependency path between the two
mention head tokens matches one of the rule's path patterns exactly.
Non-matching pairs are silently skipped (precision-first design).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

from .graph import (
    EdgeKind,
    EdgeRecord,
    KnowledgeGraph,
    SEMANTIC_TYPE_PAIRS,
    SubType,
    TopType,
)

# Same-sentence pairing is only trusted up to this many dependency arcs.
MAX_PATH_ARCS = 3


class ParseError(Exception):
    """Structurally invalid parsed sentence."""


@dataclass(frozen=True)
class Mention:
    entity_id: str
    top_type: TopType
    span: tuple[int, int]  # token range [start, end)
    sub_type: Optional[SubType] = None


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    lemma: str


@dataclass(frozen=True)
class Arc:
    head_index: int  # -1 for the root arc
    dependent_index: int
    label: str


@dataclass
class ParsedSentence:
    tokens: list[Token]
    arcs: list[Arc]
    mentions: list[Mention]

    def __post_init__(self) -> None:
        n = len(self.tokens)
        head: dict[int, int] = {}
        roots = 0
        for arc in self.arcs:
            if not (0 <= arc.dependent_index < n):
                raise ParseError(f"arc dependent {arc.dependent_index} out of bounds")
            if arc.dependent_index in head:
                raise ParseError(f"token {arc.dependent_index} has two heads")
            if arc.head_index == -1:
                roots += 1
            elif not (0 <= arc.head_index < n):
                raise ParseError(f"arc head {arc.head_index} out of bounds")
            head[arc.dependent_index] = arc.head_index
        if len(head) != n or roots != 1:
            raise ParseError("arcs must form a single-rooted tree over all tokens")
        for m in self.mentions:
            s, e = m.span
            if not (0 <= s < e <= n):
                raise ParseError(f"mention {m.entity_id}: span {m.span} out of bounds")
        spans = sorted((m.span, m.entity_id) for m in self.mentions)
        for (s1, e1), (s2, e2) in zip(
            (sp for sp, _ in spans), (sp for sp, _ in spans[1:])
        ):
            if s2 < e1 and e2 <= e1 and (s1, e1) != (s2, e2):
                raise ParseError("nested mention spans are not allowed")
        self._head = head

    def head_of(self, index: int) -> int:
        return self._head[index]


@dataclass(frozen=True)
class TypeSpec:
    """One side of a rule's type pair: a top type plus an optional set of
    required sub types (None = any)."""

    top_type: TopType
    sub_types: Optional[frozenset[SubType]] = None

    def matches(self, m: Mention) -> bool:
        if m.top_type != self.top_type:
            return False
        if self.sub_types is None:
            return True
        return m.sub_type in self.sub_types


@dataclass(frozen=True)
class TemplateRule:
    source: TypeSpec
    target: TypeSpec
    relation: EdgeKind
    path_patterns: tuple[str, ...]
    precision_prior: float

    def __post_init__(self) -> None:
        pair = (self.source.top_type, self.target.top_type)
        if pair not in SEMANTIC_TYPE_PAIRS[self.relation]:
            raise ValueError(
                f"rule {self.relation.value}: type pair "
                f"({pair[0].value}, {pair[1].value}) not admissible"
            )
        if not self.path_patterns:
            raise ValueError("rule needs at least one path pattern")


def mention_head_token(s: ParsedSentence, m: Mention) -> int:
    """Anchor token of a span: the token whose syntactic head lies outside
    the span, else the last span token."""
    start, end = m.span
    for i in range(start, end):
        h = s.head_of(i)
        if h == -1 or not (start <= h < end):
            return i
    return end - 1


def shortest_dep_path(s: ParsedSentence, a: Mention, b: Mention) -> list[str]:
    """Arc-label sequence along the unique tree path between two mentions'
    head tokens. Empty when both anchor to the same token."""
    ta, tb = mention_head_token(s, a), mention_head_token(s, b)
    label_of = {arc.dependent_index: arc.label for arc in s.arcs}

    def chain(t: int) -> list[int]:
        out = [t]
        seen = {t}
        while True:
            h = s.head_of(t)
            if h == -1:
                return out
            if h in seen:
                raise ParseError("cycle in dependency arcs")
            out.append(h)
            seen.add(h)
            t = h

    ca, cb = chain(ta), chain(tb)
    common = set(ca) & set(cb)
    if not common:
        raise ParseError("disconnected parse: mentions share no ancestor")
    # lowest common ancestor = first shared node on a's root chain
    lca = next(t for t in ca if t in common)
    up = [label_of[t] for t in ca[: ca.index(lca)]]
    down = [label_of[t] for t in cb[: cb.index(lca)]]
    return up + list(reversed(down))


def path_matches(path: list[str], pattern: str) -> bool:
    """Pattern semantics: "x+y" matches a two-arc path with exactly those
    labels in either order; a single label matches a one-arc path with that
    label. "acl" also accepts "acl:relcl" style subtyped labels."""

    def label_ok(got: str, want: str) -> bool:
        return got == want or got.startswith(want + ":")

    wanted = pattern.split("+")
    if len(path) != len(wanted):
        return False
    if len(wanted) == 1:
        return label_ok(path[0], wanted[0])
    remaining = list(path)
    for w in wanted:
        for i, got in enumerate(remaining):
            if label_ok(got, w):
                del remaining[i]
                break
        else:
            return False
    return True


def match_templates(
    s: ParsedSentence, rules: Iterable[TemplateRule]
) -> list[tuple[Mention, Mention, EdgeKind, float]]:
    """All rule firings over ordered mention pairs of one sentence."""
    out: list[tuple[Mention, Mention, EdgeKind, float]] = []
    mentions = sorted(s.mentions, key=lambda m: (m.span, m.entity_id))
    for rule in rules:
        for a in mentions:
            if not rule.source.matches(a):
                continue
            for b in mentions:
                if b is a or not rule.target.matches(b):
                    continue
                if a.entity_id == b.entity_id:
                    continue
                path = shortest_dep_path(s, a, b)
                if len(path) > MAX_PATH_ARCS:
                    continue
                if any(path_matches(path, pat) for pat in rule.path_patterns):
                    out.append((a, b, rule.relation, rule.precision_prior))
    return out


def induce_relations(
    g: KnowledgeGraph,
    sentences: Iterable[ParsedSentence],
    rules: Iterable[TemplateRule],
) -> KnowledgeGraph:
    """New graph snapshot with template-matched edges added (deduplicated
    against existing edges, keeping max confidence)."""
    rules = list(rules)
    new_edges: list[EdgeRecord] = list(g.edges)
    for s in sentences:
        for m in s.mentions:
            if m.entity_id not in g.entities:
                raise KeyError(f"mention references unknown entity {m.entity_id!r}")
        for a, b, kind, conf in match_templates(s, rules):
            new_edges.append(
                EdgeRecord(source=a.entity_id, target=b.entity_id, kind=kind, confidence=conf)
            )
    return g.with_edges(new_edges)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def sentence_from_dict(d: dict) -> ParsedSentence:
    return ParsedSentence(
        tokens=[
            Token(index=t["index"], surface=t["surface"], lemma=t.get("lemma", t["surface"]))
            for t in d["tokens"]
        ],
        arcs=[
            Arc(
                head_index=a["head_index"],
                dependent_index=a["dependent_index"],
                label=a["label"],
            )
            for a in d["arcs"]
        ],
        mentions=[
            Mention(
                entity_id=m["entity_id"],
                top_type=TopType(m["top_type"]),
                sub_type=SubType(m["sub_type"]) if m.get("sub_type") else None,
                span=(m["token_span"][0], m["token_span"][1]),
            )
            for m in d["mentions"]
        ],
    )


def load_sentences(path: str) -> list[ParsedSentence]:
    """JSON-lines, one ParsedSentence per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(sentence_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return out


def _spec_from_dict(d: dict) -> TypeSpec:
    subs = d.get("sub_types")
    return TypeSpec(
        top_type=TopType(d["top_type"]),
        sub_types=frozenset(SubType(s) for s in subs) if subs else None,
    )


def rules_from_config(doc: dict) -> list[TemplateRule]:
    return [
        TemplateRule(
            source=_spec_from_dict(r["source"]),
            target=_spec_from_dict(r["target"]),
            relation=EdgeKind(r["relation"]),
            path_patterns=tuple(r["path_patterns"]),
            precision_prior=float(r["precision_prior"]),
        )
        for r in doc["rules"]
    ]


def load_rules(path: str) -> list[TemplateRule]:
    with open(path, encoding="utf-8") as fh:
        return rules_from_config(json.load(fh))


def default_rules() -> list[TemplateRule]:
    """The five bundled template rules (typed pairs, typical dependency
    paths, and per-template precision priors)."""
    doc = json.loads(
        resources.files("skgrec.data").joinpath("default_rules.json").read_text("utf-8")
    )
    return rules_from_config(doc)
