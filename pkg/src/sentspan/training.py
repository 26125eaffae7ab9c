"""Training by exact marginal likelihood.

The per-sentence loss is the difference of two log-partitions: the
unconstrained lattice (all outputs, all span boundaries) minus the
lattice clamped to the gold targets (all span boundaries consistent
with them). Optimization is Adam at batch size 1 with per-epoch
reshuffling; after every epoch the model is scored on the dev split and
the best snapshot is kept.
"""

from __future__ import annotations

import copy
import logging
import random
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np
import torch

from .corpus import Dataset, EmbeddingTable, Vocabulary, load_embeddings
from .evaluation import PRF, exact_prf
from .inference import log_partition, viterbi
from .lattice import EmptySpansError, build_clamped, build_unconstrained, decode_spans
from .model import ModelConfig, NeuralEdgeScorer

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 6
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    dropout: float = 0.5
    recurrent_dropout: float = 0.0
    grad_clip: float = 0.0  # 0 disables clipping
    seed: int = 1
    dev_fraction: float = 0.1
    folds: int = 10
    word_dim: int = 100  # ignored when a pretrained file sets the dimension
    char_dim: int = 50
    char_emb_dim: int = 30
    hidden_dim: int = 500
    attn_dim: int = 300
    lstm_layers: int = 2
    ablation: str = "full"  # full | no-attention | no-bmes
    attention_fallback: str = "hidden"  # hidden | zero
    dev_metric: str = "targeted"  # targeted | target
    embeddings: str = ""  # pretrained embedding file, optional

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.dev_metric not in ("targeted", "target"):
            raise ValueError("dev_metric must be 'targeted' or 'target'")


def parse_config(text):
    """Flat "key = value" lines into a TrainConfig; # starts a comment."""
    types = {f.name: f.type for f in fields(TrainConfig)}
    casts = {"int": int, "float": float, "str": str}
    values = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = casts[types[key]](value)
    return TrainConfig(**values)


def load_config(path):
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read())


class LatticeCache:
    """Memoized lattices; training revisits the same sentences each epoch."""

    def __init__(self):
        self._full = {}
        self._clamped = {}

    def full(self, n):
        lat = self._full.get(n)
        if lat is None:
            lat = self._full[n] = build_unconstrained(n)
        return lat

    def clamped(self, n, spans):
        key = (n, tuple(spans))
        lat = self._clamped.get(key)
        if lat is None:
            lat = self._clamped[key] = build_clamped(n, list(spans))
        return lat


def nll(model, sentence, spans, mode="eval", cache=None):
    """Negative log-likelihood of the gold spans under the model.

    Equals logZ(unconstrained) - logZ(clamped), hence never negative.
    mode "train" applies dropout, "eval" does not. Raises
    EmptySpansError for span-free sentences (no lattice path exists).
    """
    if not spans:
        raise EmptySpansError("sentence has no target spans")
    if mode not in ("train", "eval"):
        raise ValueError("mode must be 'train' or 'eval'")
    cache = cache if cache is not None else LatticeCache()
    lat_full = cache.full(len(sentence))
    lat_gold = cache.clamped(len(sentence), spans)
    was_training = model.training
    model.train(mode == "train")
    try:
        full_scores, gold_scores = model(sentence, [lat_full, lat_gold])
    finally:
        model.train(was_training)
    return log_partition(lat_full, full_scores) - log_partition(lat_gold, gold_scores)


def predict_spans(model, sentence, cache=None):
    """MAP decoding: the spans of the best unconstrained-lattice path."""
    cache = cache if cache is not None else LatticeCache()
    lat = cache.full(len(sentence))
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            scores = model(sentence, [lat])[0]
    finally:
        model.train(was_training)
    path, _ = viterbi(lat, scores)
    return decode_spans(lat, path)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    dev_f1_target: float
    dev_f1_targeted: float
    seconds: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    selected_epoch: int = 0
    skipped_sentences: int = 0

    def lines(self):
        out = [
            "epoch %d loss %.6f devF1_target %.2f devF1_sent %.2f"
            % (e.epoch, e.loss, e.dev_f1_target, e.dev_f1_targeted)
            for e in self.epochs
        ]
        out.append(f"selected_epoch {self.selected_epoch}")
        return out

    def __str__(self):
        return "\n".join(self.lines()) + "\n"


def _carve_dev(dataset, fraction, seed):
    rng = np.random.default_rng([seed, 0xDE])
    perm = rng.permutation(len(dataset))
    n_dev = max(1, int(round(fraction * len(dataset))))
    if n_dev >= len(dataset):
        raise ValueError("dataset too small to carve a dev split")
    dev_idx = sorted(int(i) for i in perm[:n_dev])
    train_idx = sorted(int(i) for i in perm[n_dev:])
    return dataset.subset(train_idx), dataset.subset(dev_idx)


def _dev_scores(model, dev, cache):
    preds = [predict_spans(model, sentence, cache) for sentence, _ in dev]
    golds = [list(spans) for _, spans in dev]
    target = exact_prf(preds, golds, "target")
    targeted = exact_prf(preds, golds, "targeted")
    return target.f1, targeted.f1


def train(dataset, config, dev=None, embeddings=None):
    """Fit a model; returns (model, report).

    dev defaults to a dev_fraction carve-out of the dataset (seeded); an
    explicit Dataset overrides that. embeddings may be a prebuilt
    EmbeddingTable, otherwise config.embeddings is loaded when set and a
    seeded random table is used when not.
    """
    torch.manual_seed(config.seed)  # covers torch-internal RNG (stacked-LSTM dropout)
    if dev is None:
        if config.dev_fraction > 0 and len(dataset) >= 2:
            dataset, dev = _carve_dev(dataset, config.dev_fraction, config.seed)
        else:
            dev = dataset

    trainable = [(s, list(spans)) for s, spans in dataset if spans]
    skipped = len(dataset) - len(trainable)
    if skipped:
        log.info("skipping %d training sentences without targets", skipped)
    if not trainable:
        raise ValueError("no trainable sentences: every training sentence lacks targets")

    vocab = Vocabulary.from_dataset(Dataset([(s, tuple(sp)) for s, sp in trainable]))
    if embeddings is None:
        if config.embeddings:
            embeddings = load_embeddings(config.embeddings, vocab, seed=config.seed)
        else:
            log.warning("no pretrained embeddings configured; using random init")
            embeddings = EmbeddingTable.random(vocab, config.word_dim, seed=config.seed)
    if config.embeddings and embeddings.dim != config.word_dim:
        log.info("word_dim %d overridden by embedding file dimension %d",
                 config.word_dim, embeddings.dim)

    generator = torch.Generator().manual_seed(config.seed)
    model = NeuralEdgeScorer(
        vocab,
        ModelConfig(
            word_dim=embeddings.dim,
            char_dim=config.char_dim,
            char_emb_dim=config.char_emb_dim,
            hidden_dim=config.hidden_dim,
            attn_dim=config.attn_dim,
            lstm_layers=config.lstm_layers,
            dropout=config.dropout,
            recurrent_dropout=config.recurrent_dropout,
            ablation=config.ablation,
            attention_fallback=config.attention_fallback,
        ),
    )
    model.initialize(generator, embeddings.vectors)
    model.dropout_generator = generator

    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=config.learning_rate,
        betas=(config.adam_beta1, config.adam_beta2),
        eps=config.adam_epsilon,
    )

    cache = LatticeCache()
    shuffle_rng = random.Random(config.seed)
    report = TrainReport(skipped_sentences=skipped)
    best_f1, best_state, best_epoch = -1.0, None, 0

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = list(range(len(trainable)))
        shuffle_rng.shuffle(order)
        model.train()
        total = 0.0
        for i in order:
            sentence, spans = trainable[i]
            optimizer.zero_grad()
            loss = nll(model, sentence, spans, mode="train", cache=cache)
            loss.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            total += loss.item()

        f1_target, f1_targeted = _dev_scores(model, dev, cache)
        report.epochs.append(
            EpochStats(
                epoch,
                total / len(trainable),
                f1_target,
                f1_targeted,
                time.perf_counter() - started,
            )
        )
        selection = f1_targeted if config.dev_metric == "targeted" else f1_target
        if selection > best_f1:
            best_f1 = selection
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
        log.info("epoch %d: loss %.4f dev target F1 %.2f targeted F1 %.2f",
                 epoch, total / len(trainable), f1_target, f1_targeted)

    model.load_state_dict(best_state)
    model.eval()
    report.selected_epoch = best_epoch
    return model, report


@dataclass
class FoldResult:
    fold: int
    target: PRF
    targeted: PRF


@dataclass
class CrossValReport:
    folds: list[FoldResult]

    def _mean(self, pick):
        vals = [pick(f) for f in self.folds]
        return sum(vals) / len(vals)

    def summary(self):
        lines = [
            "fold %d target_f1 %.2f targeted_f1 %.2f" % (f.fold, f.target.f1, f.targeted.f1)
            for f in self.folds
        ]
        lines.append(
            "mean target P %.2f R %.2f F1 %.2f"
            % (
                self._mean(lambda f: f.target.precision),
                self._mean(lambda f: f.target.recall),
                self._mean(lambda f: f.target.f1),
            )
        )
        lines.append(
            "mean targeted P %.2f R %.2f F1 %.2f"
            % (
                self._mean(lambda f: f.targeted.precision),
                self._mean(lambda f: f.targeted.recall),
                self._mean(lambda f: f.targeted.f1),
            )
        )
        return "\n".join(lines) + "\n"


def cross_validate(dataset, config, folds=None):
    """k-fold cross-validation; per-fold scores plus unweighted means.

    Fold f trains with seed config.seed + f on its train split, selects
    on its dev split, and is scored on its test split.
    """
    from .corpus import make_folds

    if folds is None:
        folds = make_folds(dataset, config.folds, config.dev_fraction, config.seed)
    results = []
    for f, (train_idx, dev_idx, test_idx) in enumerate(folds):
        fold_config = replace(config, seed=config.seed + f)
        dev = dataset.subset(dev_idx) if dev_idx else None
        model, _ = train(dataset.subset(train_idx), fold_config, dev=dev)
        cache = LatticeCache()
        test = dataset.subset(test_idx)
        preds = [predict_spans(model, sentence, cache) for sentence, _ in test]
        golds = [list(spans) for _, spans in test]
        results.append(
            FoldResult(f, exact_prf(preds, golds, "target"), exact_prf(preds, golds, "targeted"))
        )
        log.info("fold %d: targeted F1 %.2f", f, results[-1].targeted.f1)
    return CrossValReport(results)


def gradient_check(model, sentence, spans, delta=1e-4):
    """Max relative error between autograd and central differences.

    Checked per scalar parameter at double precision with dropout off.
    The denominator is floored at 1e-3 so that parameters with near-zero
    gradient compare absolutely (finite differences carry ~1e-8 noise).
    """
    cache = LatticeCache()
    model.eval()
    model.zero_grad()
    loss = nll(model, sentence, spans, mode="eval", cache=cache)
    loss.backward()

    def loss_value():
        with torch.no_grad():
            return float(nll(model, sentence, spans, mode="eval", cache=cache))

    worst = 0.0
    for param in model.parameters():
        grad = param.grad
        analytic = torch.zeros_like(param) if grad is None else grad
        flat = param.data.view(-1)
        aflat = analytic.view(-1)
        for j in range(flat.numel()):
            orig = float(flat[j])
            flat[j] = orig + delta
            plus = loss_value()
            flat[j] = orig - delta
            minus = loss_value()
            flat[j] = orig
            numeric = (plus - minus) / (2 * delta)
            a = float(aflat[j])
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-3)
            if err > worst:
                worst = err
    return worst
