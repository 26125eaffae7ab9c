"""Scikit-learn style front end.

X is a list of token sequences, y a list of span lists given as
(start, end, polarity) triples with 1-based inclusive bounds. The
estimator wraps the training engine so it composes with sklearn
utilities (clone, parameter search, pipelines operating on lists).
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .corpus import Dataset, Sentence, SpanLabel
from .evaluation import exact_prf
from .training import LatticeCache, TrainConfig, predict_spans, train


def check_token_sequences(X):
    """Validate a list of token sequences; returns them as tuples."""
    if not isinstance(X, (list, tuple)):
        raise ValueError("X must be a list of token sequences")
    out = []
    for i, tokens in enumerate(X):
        if isinstance(tokens, str) or not isinstance(tokens, (list, tuple)):
            raise ValueError(f"X[{i}] must be a sequence of tokens, not {type(tokens).__name__}")
        if len(tokens) == 0 or any(not isinstance(t, str) or t == "" for t in tokens):
            raise ValueError(f"X[{i}] must hold non-empty strings")
        out.append(tuple(tokens))
    return out


def check_span_lists(y, X):
    """Validate per-sentence span triples against the token sequences."""
    if len(y) != len(X):
        raise ValueError(f"X and y differ in length: {len(X)} vs {len(y)}")
    out = []
    for i, spans in enumerate(y):
        labels = []
        for span in spans:
            if isinstance(span, SpanLabel):
                labels.append(span)
            else:
                start, end, polarity = span
                labels.append(SpanLabel(int(start), int(end), polarity))
        labels.sort()
        for label in labels:
            if label.end > len(X[i]):
                raise ValueError(f"y[{i}]: span {label} exceeds sentence length {len(X[i])}")
        out.append(tuple(labels))
    return out


class SpanSentimentTagger(BaseEstimator):
    """Joint target + polarity tagger with a fit/predict interface.

    Parameters mirror TrainConfig; see that class for semantics. fit
    trains from scratch, predict returns per-sentence lists of
    (start, end, polarity) triples, and score is targeted-sentiment F1
    scaled to [0, 1].
    """

    def __init__(
        self,
        epochs=6,
        learning_rate=1e-3,
        dropout=0.5,
        grad_clip=0.0,
        seed=1,
        dev_fraction=0.1,
        word_dim=100,
        char_dim=50,
        char_emb_dim=30,
        hidden_dim=500,
        attn_dim=300,
        lstm_layers=2,
        ablation="full",
        attention_fallback="hidden",
        dev_metric="targeted",
        embeddings="",
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.grad_clip = grad_clip
        self.seed = seed
        self.dev_fraction = dev_fraction
        self.word_dim = word_dim
        self.char_dim = char_dim
        self.char_emb_dim = char_emb_dim
        self.hidden_dim = hidden_dim
        self.attn_dim = attn_dim
        self.lstm_layers = lstm_layers
        self.ablation = ablation
        self.attention_fallback = attention_fallback
        self.dev_metric = dev_metric
        self.embeddings = embeddings

    def _config(self):
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            dropout=self.dropout,
            grad_clip=self.grad_clip,
            seed=self.seed,
            dev_fraction=self.dev_fraction,
            word_dim=self.word_dim,
            char_dim=self.char_dim,
            char_emb_dim=self.char_emb_dim,
            hidden_dim=self.hidden_dim,
            attn_dim=self.attn_dim,
            lstm_layers=self.lstm_layers,
            ablation=self.ablation,
            attention_fallback=self.attention_fallback,
            dev_metric=self.dev_metric,
            embeddings=self.embeddings,
        )

    def fit(self, X, y):
        tokens = check_token_sequences(X)
        spans = check_span_lists(y, tokens)
        dataset = Dataset([(Sentence(t), s) for t, s in zip(tokens, spans)])
        self.model_, self.report_ = train(dataset, self._config())
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted; call fit first")
        tokens = check_token_sequences(X)
        cache = LatticeCache()
        return [
            [(s.start, s.end, s.polarity) for s in predict_spans(self.model_, Sentence(t), cache)]
            for t in tokens
        ]

    def score(self, X, y):
        tokens = check_token_sequences(X)
        golds = [list(spans) for spans in check_span_lists(y, tokens)]
        preds = [
            [SpanLabel(*triple) for triple in row] for row in self.predict(X)
        ]
        return exact_prf(preds, golds, "targeted").f1 / 100.0
