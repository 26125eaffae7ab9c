"""Numeric self-verification at desk scale.

Cross-checks the dynamic programming against brute-force path
enumeration on small random lattices, validates clamped path counts
against the closed-form product of (gap + 1) factors, and runs the
end-to-end gradient check for every ablation. The CLI exposes this as
the selfcheck subcommand.
"""

from __future__ import annotations

import math

import numpy as np
import torch

from .corpus import POLARITIES, Dataset, Sentence, SpanLabel
from .inference import edge_marginals, log_partition, viterbi
from .lattice import build_clamped, build_unconstrained, count_paths, decode_spans
from .model import ModelConfig, NeuralEdgeScorer
from .training import Vocabulary, gradient_check

GRAD_TOLERANCE = 1e-4
DP_TOLERANCE = 1e-8


def enumerate_paths(lattice):
    """All start-to-end paths, by depth-first search over out-edges."""
    paths = []
    ends = set(lattice.end_ids)

    def walk(v, acc):
        if v in ends:
            paths.append(list(acc))
            return
        for eid in lattice.out_edges[v]:
            w = lattice.edges[eid].dst
            acc.append(w)
            walk(w, acc)
            acc.pop()

    for s in lattice.start_ids:
        walk(s, [s])
    return paths


def brute_path_sum(lattice, path, scores):
    return sum(float(scores[lattice.edge_ids[(u, v)]]) for u, v in zip(path, path[1:]))


def brute_force(lattice, scores):
    """(logZ, best score, per-edge marginals) via explicit enumeration."""
    paths = enumerate_paths(lattice)
    sums = [brute_path_sum(lattice, p, scores) for p in paths]
    top = max(sums)
    logz = top + math.log(sum(math.exp(s - top) for s in sums))
    marginals = np.zeros(len(lattice.edges))
    for path, s in zip(paths, sums):
        weight = math.exp(s - logz)
        for u, v in zip(path, path[1:]):
            marginals[lattice.edge_ids[(u, v)]] += weight
    return logz, top, marginals


def random_spans(rng, n):
    """A random valid non-empty span configuration over n tokens."""
    while True:
        spans = []
        k = 1
        while k <= n:
            if rng.random() < 0.5:
                length = int(rng.integers(1, min(3, n - k + 1) + 1))
                polarity = POLARITIES[int(rng.integers(0, 3))]
                spans.append(SpanLabel(k, k + length - 1, polarity))
                k += length
            else:
                k += 1
        if spans:
            return spans


def gap_product(spans):
    """Closed-form clamped path count: one boundary choice per gap."""
    total = 1
    for a, b in zip(spans, spans[1:]):
        total *= b.start - a.end
    return total


def expected_unconstrained_count(n):
    """Independent count of all label sequences: sum over every span
    configuration of 3^spans (polarities) times the gap product."""

    def configs(k):
        yield []
        for s in range(k, n + 1):
            for e in range(s, n + 1):
                for rest in configs(e + 1):
                    yield [(s, e)] + rest

    total = 0
    for config in configs(1):
        if not config:
            continue
        ways = 3 ** len(config)
        for (_, e1), (s2, _) in zip(config, config[1:]):
            ways *= s2 - e1
        total += ways
    return total


def check_inference(rules=None, cases=60, max_len=4, seed=7):
    """DP vs enumeration on random lattices; returns (ok, report lines)."""
    rng = np.random.default_rng(seed)
    worst_logz = worst_best = worst_marg = 0.0
    structural = []
    for case in range(cases):
        n = int(rng.integers(1, max_len + 1))
        if case % 2 == 0:
            lattice = build_unconstrained(n, rules=rules)
            spans = None
        else:
            spans = random_spans(rng, n)
            lattice = build_clamped(n, spans)
        scores = torch.tensor(rng.normal(scale=2.0, size=len(lattice.edges)))

        paths = enumerate_paths(lattice)
        if count_paths(lattice) != len(paths):
            structural.append(f"case {case}: DP path count disagrees with enumeration")
        if spans is not None:
            if len(paths) != gap_product(spans):
                structural.append(f"case {case}: clamped count breaks the gap product law")
            for path in paths:
                try:
                    decoded = decode_spans(lattice, path)
                except ValueError as exc:
                    structural.append(f"case {case}: undecodable clamped path ({exc})")
                    break
                if decoded != spans:
                    structural.append(f"case {case}: clamped path decodes to wrong spans")
                    break
        else:
            if len(paths) != expected_unconstrained_count(n):
                structural.append(f"case {case}: unconstrained count breaks the closed form")
            for path in paths:
                try:
                    decode_spans(lattice, path)
                except ValueError as exc:
                    structural.append(f"case {case}: undecodable path ({exc})")
                    break

        logz_ref, best_ref, marg_ref = brute_force(lattice, scores)
        worst_logz = max(worst_logz, abs(float(log_partition(lattice, scores)) - logz_ref))
        worst_best = max(worst_best, abs(viterbi(lattice, scores)[1] - best_ref))
        marg = edge_marginals(lattice, scores).numpy()
        worst_marg = max(worst_marg, float(np.abs(marg - marg_ref).max()))

    ok = not structural and max(worst_logz, worst_best, worst_marg) <= DP_TOLERANCE
    lines = [
        f"enumeration: {cases} random lattices, n <= {max_len}",
        f"  log-partition max abs error {worst_logz:.3e} (limit {DP_TOLERANCE:.0e})",
        f"  best-path score max abs error {worst_best:.3e} (limit {DP_TOLERANCE:.0e})",
        f"  edge-marginal max abs error {worst_marg:.3e} (limit {DP_TOLERANCE:.0e})",
    ]
    lines.extend("  FAIL " + s for s in structural[:5])
    return ok, lines


def tiny_fixture(seed=3):
    """A 3-sentence toy dataset plus a matching tiny model factory."""
    items = [
        (Sentence(("we", "love", "oz", "magic")), (SpanLabel(3, 3, "+"),)),
        (Sentence(("agt", "was", "fine")), (SpanLabel(1, 1, "0"),)),
        (Sentence(("bad", "show",)), (SpanLabel(2, 2, "-"),)),
    ]
    dataset = Dataset(items)
    vocab = Vocabulary.from_dataset(dataset)

    def make_model(ablation):
        config = ModelConfig(
            word_dim=3,
            char_dim=2,
            char_emb_dim=2,
            hidden_dim=2,
            attn_dim=3,
            lstm_layers=2,
            dropout=0.0,
            ablation=ablation,
        )
        model = NeuralEdgeScorer(vocab, config)
        model.initialize(torch.Generator().manual_seed(seed))
        return model

    return dataset, make_model


def check_gradients(seed=3):
    """End-to-end gradient fidelity for the full model and both ablations."""
    dataset, make_model = tiny_fixture(seed)
    sentence, spans = dataset[0]
    worst = {}
    for ablation in ("full", "no-attention", "no-bmes"):
        model = make_model(ablation)
        worst[ablation] = gradient_check(model, sentence, list(spans))
    ok = all(err <= GRAD_TOLERANCE for err in worst.values())
    lines = [
        f"gradient check ({name}): max relative error {err:.3e} (limit {GRAD_TOLERANCE:.0e})"
        for name, err in worst.items()
    ]
    return ok, lines


def run_selfcheck(rules=None, cases=60, seed=7):
    """Full suite; returns (ok, printable lines). rules is a test hook
    for injecting a corrupted transition table."""
    ok_inf, lines = check_inference(rules=rules, cases=cases, seed=seed)
    ok_grad, grad_lines = check_gradients()
    lines.extend(grad_lines)
    lines.append("selfcheck " + ("PASSED" if ok_inf and ok_grad else "FAILED"))
    return ok_inf and ok_grad, lines
