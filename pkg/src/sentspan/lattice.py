"""Tag lattices over sentiment spans.

Every way of partitioning a sentence into non-overlapping sentiment
spans (each span containing exactly one target phrase) corresponds to
one start-to-end path. Per position a span contributes:

  B<p>   before-target region, polarity p (includes nothing of the target)
  E<e,p> target token; the sub-tag e in {B,M,E,S} marks its position
         inside the target phrase (begin / middle / end / singleton)
  A<p>   after-target region

A single-word target stacks B, E[S] and A at its position; the B->E and
E->A hops are same-position edges. The A->B edge is where one span ends
and the next begins, which is exactly the freedom the latent variable
ranges over. Paths start at a B tag on token 1 and end at an A tag on
the last token, so every path contains at least one target.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .corpus import POLARITIES, SpanLabel

SUBTAGS = ("B", "M", "E", "S")

# edge score rules; which scoring head feeds an edge (see model.score_edges)
TARGET_CONT = "TARGET_CONT"
TARGET_END = "TARGET_END"
SENT_BB = "SENT_BB"
SENT_AA = "SENT_AA"
SENT_AB = "SENT_AB"
ATTN_BEGIN = "ATTN_BEGIN"


class Tag(NamedTuple):
    kind: str  # "B", "E" or "A"
    polarity: str
    sub: str | None = None  # BMES position inside the target, E tags only

    def __str__(self):
        return f"{self.kind}{self.sub or ''}{self.polarity}"


class Node(NamedTuple):
    pos: int  # 1-based token index
    tag: Tag


class Edge(NamedTuple):
    src: int  # node index
    dst: int
    rule: str


_POL_ORDER = {p: i for i, p in enumerate(POLARITIES)}
_SUB_ORDER = {s: i for i, s in enumerate(SUBTAGS)}


def tag_order(tag):
    """Deterministic tag preference: B < E[B] < E[M] < E[E] < E[S] < A,
    polarity + < - < 0. Used for node ordering and Viterbi tie-breaks."""
    if tag.kind == "B":
        major = 0
    elif tag.kind == "E":
        major = 1 + _SUB_ORDER[tag.sub]
    else:
        major = 5
    return (major, _POL_ORDER[tag.polarity])


def _build_transitions():
    """The valid tag-to-tag moves: (successor tag, position delta, rule)."""
    moves = {}
    for p in POLARITIES:
        b, a = Tag("B", p), Tag("A", p)
        eb, em, ee, es = (Tag("E", p, s) for s in SUBTAGS)
        moves[b] = (
            (b, 1, SENT_BB),
            (eb, 0, ATTN_BEGIN),
            (es, 0, ATTN_BEGIN),
        )
        moves[eb] = ((em, 1, TARGET_CONT), (ee, 1, TARGET_CONT))
        moves[em] = ((em, 1, TARGET_CONT), (ee, 1, TARGET_CONT))
        moves[ee] = ((a, 0, TARGET_END),)
        moves[es] = ((a, 0, TARGET_END),)
        moves[a] = ((a, 1, SENT_AA),) + tuple(
            (Tag("B", p2), 1, SENT_AB) for p2 in POLARITIES
        )
    return moves


TRANSITIONS = _build_transitions()

ALL_TAGS = sorted(TRANSITIONS, key=tag_order)


class EmptySpansError(ValueError):
    """Raised when clamping to a span-free output: every lattice path
    contains at least one target, so such outputs are unsupported."""


@dataclass
class Lattice:
    """An edge-scored DAG; immutable after construction.

    Nodes are sorted by (position, tag_order), which is a topological
    order: same-position edges only run B -> E -> A.
    """

    n: int
    nodes: list[Node]
    edges: list[Edge]
    start_ids: list[int]
    end_ids: list[int]
    in_edges: list[list[int]] = field(repr=False)
    out_edges: list[list[int]] = field(repr=False)
    edge_ids: dict[tuple[int, int], int] = field(repr=False)

    def __len__(self):
        return len(self.nodes)


def _finalize(n, raw_edges):
    """Index nodes and edges, pruning anything off a start-to-end path."""
    adjacency = {}
    for u, v, rule in raw_edges:
        adjacency.setdefault(u, []).append((v, rule))
        adjacency.setdefault(v, [])

    starts = [nd for nd in adjacency if nd.pos == 1 and nd.tag.kind == "B"]
    ends = {nd for nd in adjacency if nd.pos == n and nd.tag.kind == "A"}

    fwd = set()
    stack = list(starts)
    while stack:
        node = stack.pop()
        if node in fwd:
            continue
        fwd.add(node)
        stack.extend(nd for nd, _ in adjacency[node])

    preds = {node: [] for node in adjacency}
    for node, succs in adjacency.items():
        for node2, _ in succs:
            preds[node2].append(node)
    bwd = set()
    stack = [nd for nd in ends]
    while stack:
        node = stack.pop()
        if node in bwd:
            continue
        bwd.add(node)
        stack.extend(preds[node])

    keep = sorted(fwd & bwd, key=lambda nd: (nd.pos, tag_order(nd.tag)))
    index = {node: i for i, node in enumerate(keep)}

    edges = []
    for node in keep:
        for node2, rule in adjacency[node]:
            if node2 in index:
                edges.append(Edge(index[node], index[node2], rule))
    edges.sort()

    in_edges = [[] for _ in keep]
    out_edges = [[] for _ in keep]
    edge_ids = {}
    for eid, edge in enumerate(edges):
        out_edges[edge.src].append(eid)
        in_edges[edge.dst].append(eid)
        edge_ids[(edge.src, edge.dst)] = eid

    return Lattice(
        n=n,
        nodes=keep,
        edges=edges,
        start_ids=[index[nd] for nd in keep if nd.pos == 1 and nd.tag.kind == "B"],
        end_ids=[index[nd] for nd in keep if nd.pos == n and nd.tag.kind == "A"],
        in_edges=in_edges,
        out_edges=out_edges,
        edge_ids=edge_ids,
    )


def build_unconstrained(n, rules=None):
    """The lattice of every valid label sequence for an n-token sentence."""
    if n < 1:
        raise ValueError("sentence length must be at least 1")
    rules = TRANSITIONS if rules is None else rules
    raw_edges = []
    for k in range(1, n + 1):
        for tag in rules:
            for tag2, delta, rule in rules[tag]:
                if k + delta <= n:
                    raw_edges.append((Node(k, tag), Node(k + delta, tag2), rule))
    return _finalize(n, raw_edges)


def _target_sub(k, span):
    if span.start == span.end:
        return "S"
    if k == span.start:
        return "B"
    if k == span.end:
        return "E"
    return "M"


def build_clamped(n, spans):
    """The lattice of label sequences that decode exactly to the given spans.

    Target positions and their BMES sub-tags are fully determined; only
    the span boundary between consecutive targets floats, one A->B hop
    anywhere in the gap. Edges are wired region by region rather than
    from the transition table: when adjacent targets share a polarity
    the table alone would let a path slide from one span's B run into
    the next one's and skip the first target entirely.
    """
    if n < 1:
        raise ValueError("sentence length must be at least 1")
    spans = sorted(spans)
    if not spans:
        raise EmptySpansError("cannot clamp to an output without targets")
    _validate_clamp_spans(n, spans)

    raw_edges = []
    for i, span in enumerate(spans):
        p = span.polarity
        b, a = Tag("B", p), Tag("A", p)
        # the before-target run reaches back through the gap (or the lead)
        b_start = 1 if i == 0 else spans[i - 1].end + 1
        a_end = n if i + 1 == len(spans) else spans[i + 1].start - 1
        for k in range(b_start, span.start):
            raw_edges.append((Node(k, b), Node(k + 1, b), SENT_BB))
        first = Tag("E", p, _target_sub(span.start, span))
        raw_edges.append((Node(span.start, b), Node(span.start, first), ATTN_BEGIN))
        for k in range(span.start, span.end):
            raw_edges.append(
                (Node(k, Tag("E", p, _target_sub(k, span))),
                 Node(k + 1, Tag("E", p, _target_sub(k + 1, span))),
                 TARGET_CONT)
            )
        last = Tag("E", p, _target_sub(span.end, span))
        raw_edges.append((Node(span.end, last), Node(span.end, a), TARGET_END))
        for k in range(span.end, a_end):
            raw_edges.append((Node(k, a), Node(k + 1, a), SENT_AA))
        if i + 1 < len(spans):
            nxt = Tag("B", spans[i + 1].polarity)
            for k in range(span.end, spans[i + 1].start):
                raw_edges.append((Node(k, a), Node(k + 1, nxt), SENT_AB))
    return _finalize(n, raw_edges)


def _validate_clamp_spans(n, spans):
    prev_end = 0
    for span in spans:
        if not isinstance(span, SpanLabel):
            raise TypeError(f"expected SpanLabel, got {type(span).__name__}")
        if span.end > n:
            raise ValueError(f"span {span} exceeds sentence length {n}")
        if span.start <= prev_end:
            raise ValueError(f"span {span} overlaps its predecessor")
        prev_end = span.end


def count_paths(lattice):
    """Number of distinct start-to-end paths (exact, by DP)."""
    ways = [0] * len(lattice.nodes)
    for sid in lattice.start_ids:
        ways[sid] = 1
    for v in range(len(lattice.nodes)):
        for eid in lattice.in_edges[v]:
            ways[v] += ways[lattice.edges[eid].src]
    return sum(ways[t] for t in lattice.end_ids)


def decode_spans(lattice, path):
    """Read the target spans off a start-to-end path of node indices."""
    if not path:
        raise ValueError("empty path")
    if path[0] not in lattice.start_ids:
        raise ValueError("path does not begin at a start node")
    if path[-1] not in lattice.end_ids:
        raise ValueError("path does not end at an end node")
    for u, v in zip(path, path[1:]):
        if (u, v) not in lattice.edge_ids:
            raise ValueError(f"no edge between nodes {u} and {v}")

    spans = []
    run = []  # current maximal run of E nodes
    for vid in path:
        node = lattice.nodes[vid]
        if node.tag.kind == "E":
            run.append(node)
        elif run:
            spans.append(_run_to_span(run))
            run = []
    if run:
        raise ValueError("target run not closed by an A tag")
    return spans


def _run_to_span(run):
    polarity = run[0].tag.polarity
    if any(nd.tag.polarity != polarity for nd in run):
        raise ValueError("polarity changes inside a target run")
    subs = [nd.tag.sub for nd in run]
    if len(run) == 1:
        expect = ["S"]
    else:
        expect = ["B"] + ["M"] * (len(run) - 2) + ["E"]
    if subs != expect:
        raise ValueError(f"inconsistent BMES sub-tags {subs} in a target run")
    return SpanLabel(run[0].pos, run[-1].pos, polarity)


def dump_lattice(lattice):
    """Plain-text edge listing, one "k:tag -> k':tag' rule" line each."""
    lines = []
    for edge in lattice.edges:
        u, v = lattice.nodes[edge.src], lattice.nodes[edge.dst]
        lines.append(f"{u.pos}:{u.tag} -> {v.pos}:{v.tag} {edge.rule}")
    return "\n".join(lines) + "\n"
