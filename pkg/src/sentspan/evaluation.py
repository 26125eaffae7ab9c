"""Span-level precision / recall / F1 and related diagnostics.

All functions take per-sentence aligned lists of predicted and gold
spans. A target prediction is correct when its boundary matches a gold
span exactly; a targeted-sentiment prediction additionally needs the
right polarity. Scores are percentages.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import NEGATIVE, NEUTRAL, POSITIVE

MODES = ("target", "targeted")


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    gold: int

    @classmethod
    def from_counts(cls, matched, predicted, gold):
        p = 100.0 * matched / predicted if predicted else 0.0
        r = 100.0 * matched / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, matched, predicted, gold)


def _check_aligned(preds, golds):
    if len(preds) != len(golds):
        raise ValueError(f"corpora differ in size: {len(preds)} predictions vs {len(golds)} golds")


def _key(span, mode):
    if mode == "target":
        return (span.start, span.end)
    if mode == "targeted":
        return (span.start, span.end, span.polarity)
    raise ValueError(f"mode must be one of {MODES}")


def exact_prf(preds, golds, mode):
    """Exact-boundary matching, one-to-one per sentence."""
    _check_aligned(preds, golds)
    matched = predicted = gold = 0
    for ps, gs in zip(preds, golds):
        pc = Counter(_key(s, mode) for s in ps)
        gc = Counter(_key(s, mode) for s in gs)
        matched += sum((pc & gc).values())
        predicted += len(ps)
        gold += len(gs)
    return PRF.from_counts(matched, predicted, gold)


def _overlaps(a, b):
    return a.start <= b.end and b.start <= a.end


def partial_prf(preds, golds, mode):
    """Relaxed matching: one token of overlap counts, greedy one-to-one
    in sentence order (polarity must still agree in targeted mode)."""
    _check_aligned(preds, golds)
    matched = predicted = gold = 0
    for ps, gs in zip(preds, golds):
        taken = [False] * len(gs)
        ps = sorted(ps)
        gs = sorted(gs)
        for p in ps:
            for i, g in enumerate(gs):
                if taken[i] or not _overlaps(p, g):
                    continue
                if mode == "targeted" and p.polarity != g.polarity:
                    continue
                taken[i] = True
                matched += 1
                break
        predicted += len(ps)
        gold += len(gs)
    return PRF.from_counts(matched, predicted, gold)


def subjectivity_prf(preds, golds, mode):
    """Polarity-collapsed scores.

    subjectivity: polarities collapse to subjective (+ or -) vs neutral;
    a correct prediction needs the boundary and the collapsed class.
    nonneutral: both sides are first restricted to + and - spans, then
    scored like exact targeted matching.
    """
    _check_aligned(preds, golds)
    if mode == "subjectivity":
        collapse = {POSITIVE: "subjective", NEGATIVE: "subjective", NEUTRAL: "neutral"}
        matched = predicted = gold = 0
        for ps, gs in zip(preds, golds):
            pc = Counter((s.start, s.end, collapse[s.polarity]) for s in ps)
            gc = Counter((s.start, s.end, collapse[s.polarity]) for s in gs)
            matched += sum((pc & gc).values())
            predicted += len(ps)
            gold += len(gs)
        return PRF.from_counts(matched, predicted, gold)
    if mode == "nonneutral":
        keep = lambda spans: [s for s in spans if s.polarity in (POSITIVE, NEGATIVE)]
        return exact_prf([keep(ps) for ps in preds], [keep(gs) for gs in golds], "targeted")
    raise ValueError("mode must be 'subjectivity' or 'nonneutral'")


LENGTH_BUCKETS = ("1", "2", "3", ">=4")


def _bucket(span):
    return LENGTH_BUCKETS[min(len(span), 4) - 1]


def length_breakdown(preds, golds):
    """Targeted-sentiment PRF split by target length (1, 2, 3, >=4).

    An exact match always pairs spans of equal length, so each bucket
    simply scores the spans of that length; a false positive lands in
    the bucket of its own length.
    """
    _check_aligned(preds, golds)
    counts = {b: [0, 0, 0] for b in LENGTH_BUCKETS}  # matched, predicted, gold
    for ps, gs in zip(preds, golds):
        pc = Counter((_bucket(s), _key(s, "targeted")) for s in ps)
        gc = Counter((_bucket(s), _key(s, "targeted")) for s in gs)
        for (bucket, _), c in (pc & gc).items():
            counts[bucket][0] += c
        for s in ps:
            counts[_bucket(s)][1] += 1
        for s in gs:
            counts[_bucket(s)][2] += 1
    return {b: PRF.from_counts(*counts[b]) for b in LENGTH_BUCKETS}


def bootstrap_significance(preds_a, preds_b, golds, resamples=1000, seed=0):
    """Bootstrap comparison of two systems on targeted-sentiment F1.

    Sentences are resampled with replacement; the returned p-value is
    the fraction of resamples where system B scores at least as high as
    system A (so identical systems give p = 1).
    """
    _check_aligned(preds_a, golds)
    _check_aligned(preds_b, golds)
    if resamples < 100:
        raise ValueError("need at least 100 resamples")

    def sentence_counts(preds):
        rows = []
        for ps, gs in zip(preds, golds):
            pc = Counter(_key(s, "targeted") for s in ps)
            gc = Counter(_key(s, "targeted") for s in gs)
            rows.append((sum((pc & gc).values()), len(ps), len(gs)))
        return np.array(rows, dtype=np.int64)

    counts_a = sentence_counts(preds_a)
    counts_b = sentence_counts(preds_b)

    def f1(counts, idx):
        matched, predicted, gold = counts[idx].sum(axis=0)
        p = matched / predicted if predicted else 0.0
        r = matched / gold if gold else 0.0
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    rng = np.random.default_rng(seed)
    n = len(golds)
    wins = 0
    for _ in range(resamples):
        idx = rng.integers(0, n, size=n)
        if f1(counts_b, idx) >= f1(counts_a, idx):
            wins += 1
    return wins / resamples


def metrics_report(preds, golds, porcelain=False):
    """Full report: exact / partial / subjectivity / nonneutral PRF plus
    the per-length breakdown. porcelain gives line-parseable key=value."""
    rows = [
        ("target", exact_prf(preds, golds, "target")),
        ("targeted", exact_prf(preds, golds, "targeted")),
        ("partial_target", partial_prf(preds, golds, "target")),
        ("partial_targeted", partial_prf(preds, golds, "targeted")),
        ("subjectivity", subjectivity_prf(preds, golds, "subjectivity")),
        ("nonneutral", subjectivity_prf(preds, golds, "nonneutral")),
    ]
    buckets = length_breakdown(preds, golds)

    if porcelain:
        lines = []
        for name, prf in rows:
            lines.append(f"{name}_p={prf.precision:.2f}")
            lines.append(f"{name}_r={prf.recall:.2f}")
            lines.append(f"{name}_f1={prf.f1:.2f}")
        for bucket, prf in buckets.items():
            tag = bucket.replace(">=", "ge")
            lines.append(f"length_{tag}_f1={prf.f1:.2f}")
        return "\n".join(lines) + "\n"

    width = max(len(name) for name, _ in rows)
    lines = [f"{'':{width}}       P       R      F1  matched predicted gold"]
    for name, prf in rows:
        lines.append(
            f"{name:{width}}  {prf.precision:6.2f}  {prf.recall:6.2f}  {prf.f1:6.2f}"
            f"  {prf.matched:7d} {prf.predicted:9d} {prf.gold:4d}"
        )
    lines.append("targeted F1 by target length:")
    for bucket, prf in buckets.items():
        lines.append(
            f"  {bucket:>3}  f1 {prf.f1:6.2f}  matched {prf.matched} predicted"
            f" {prf.predicted} gold {prf.gold}"
        )
    return "\n".join(lines) + "\n"


def length_breakdown_rows(preds, golds, sep="\t"):
    """Machine-readable per-length rows for external plotting."""
    buckets = length_breakdown(preds, golds)
    lines = [sep.join(["length", "precision", "recall", "f1", "matched", "predicted", "gold"])]
    for bucket, prf in buckets.items():
        lines.append(
            sep.join(
                [
                    bucket,
                    f"{prf.precision:.2f}",
                    f"{prf.recall:.2f}",
                    f"{prf.f1:.2f}",
                    str(prf.matched),
                    str(prf.predicted),
                    str(prf.gold),
                ]
            )
        )
    return "\n".join(lines) + "\n"
