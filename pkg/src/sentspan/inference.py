"""Exact inference over a scored lattice.

All quantities live in the natural-log domain at double precision. The
forward pass is a single left-to-right sweep: nodes are already stored
in topological order (same-position edges run B -> E -> A), so scanning
them by index is enough.

Scores are a 1-D tensor aligned with lattice.edges. log_partition is
differentiable through torch, which is how training obtains gradients;
edge_marginals and viterbi are numeric-only.
"""

from __future__ import annotations

import math

import torch

NEG_INF = float("-inf")


def as_scores(lattice, scores):
    """Validate and coerce edge scores to a float64 tensor."""
    scores = torch.as_tensor(scores, dtype=torch.float64)
    if scores.shape != (len(lattice.edges),):
        raise ValueError(
            f"expected {len(lattice.edges)} edge scores, got shape {tuple(scores.shape)}"
        )
    if not bool(torch.isfinite(scores).all()):
        raise ValueError("edge scores must be finite")
    return scores


def path_score(lattice, path, scores):
    """Sum of edge scores along a path of node indices."""
    scores = as_scores(lattice, scores)
    total = scores.new_zeros(())
    for u, v in zip(path, path[1:]):
        eid = lattice.edge_ids.get((u, v))
        if eid is None:
            raise ValueError(f"no scored edge between nodes {u} and {v}")
        total = total + scores[eid]
    return total


def _forward_log(lattice, scores):
    """Per-node log-sums of all path prefixes ending at the node."""
    alphas = [None] * len(lattice.nodes)
    start = set(lattice.start_ids)
    for v in range(len(lattice.nodes)):
        terms = []
        if v in start:
            terms.append(scores.new_zeros(()))
        for eid in lattice.in_edges[v]:
            terms.append(alphas[lattice.edges[eid].src] + scores[eid])
        alphas[v] = torch.logsumexp(torch.stack(terms), dim=0)
    return alphas


def _backward_log(lattice, scores):
    """Per-node log-sums of all path suffixes starting at the node."""
    betas = [None] * len(lattice.nodes)
    end = set(lattice.end_ids)
    for v in range(len(lattice.nodes) - 1, -1, -1):
        terms = []
        if v in end:
            terms.append(scores.new_zeros(()))
        for eid in lattice.out_edges[v]:
            terms.append(scores[eid] + betas[lattice.edges[eid].dst])
        betas[v] = torch.logsumexp(torch.stack(terms), dim=0)
    return betas


def log_partition(lattice, scores):
    """log of the sum over all paths of exp(path score).

    Returns a 0-dim tensor; gradients flow back into the scores.
    """
    scores = as_scores(lattice, scores)
    alphas = _forward_log(lattice, scores)
    return torch.logsumexp(torch.stack([alphas[t] for t in lattice.end_ids]), dim=0)


def edge_marginals(lattice, scores):
    """Probability mass of paths through each edge; equals dlogZ/dscore."""
    scores = as_scores(lattice, scores).detach()
    with torch.no_grad():
        alphas = _forward_log(lattice, scores)
        betas = _backward_log(lattice, scores)
        logz = torch.logsumexp(torch.stack([alphas[t] for t in lattice.end_ids]), dim=0)
        out = torch.empty(len(lattice.edges), dtype=torch.float64)
        for eid, edge in enumerate(lattice.edges):
            out[eid] = torch.exp(alphas[edge.src] + scores[eid] + betas[edge.dst] - logz)
    return out


def viterbi(lattice, scores):
    """Highest-scoring path and its score.

    Ties break toward the node earlier in the lattice ordering, i.e. the
    documented tag preference B < E[B] < E[M] < E[E] < E[S] < A with
    polarity + < - < 0.
    """
    svals = as_scores(lattice, scores).tolist()
    n_nodes = len(lattice.nodes)
    best = [NEG_INF] * n_nodes
    back = [-1] * n_nodes
    for sid in lattice.start_ids:
        best[sid] = 0.0
    for v in range(n_nodes):
        for eid in lattice.in_edges[v]:  # sorted by predecessor index
            u = lattice.edges[eid].src
            cand = best[u] + svals[eid]
            if cand > best[v]:
                best[v] = cand
                back[v] = u

    top, top_score = None, NEG_INF
    for t in lattice.end_ids:
        if best[t] > top_score:
            top, top_score = t, best[t]
    if top is None or not math.isfinite(top_score):
        raise ValueError("lattice has no start-to-end path")

    path = [top]
    while back[path[-1]] != -1:
        path.append(back[path[-1]])
    path.reverse()
    return path, top_score
