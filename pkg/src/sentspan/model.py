"""Neural scoring of lattice edges.

Per token k the network produces three small score tables:

  target table   t(h_k)  one score per BMES sub-tag (length 4, or 1 when
                         the sub-tags are ablated away)
  context table  s(h_k)  one score per polarity, from the BiLSTM state
  span table     g(a_k)  one score per polarity, from the self-attention
                         summary (or from h_k / dropped entirely when
                         attention is ablated)

h_k comes from a stacked bidirectional LSTM over the concatenated
word+char embeddings; a_k is an additive self-attention average of the
embeddings. Edge scores are plain lookups into these tables, so the
whole per-sentence computation stays linear in sentence length:

  E[e]@k -> E@k+1      t(h_k)[e]
  E[e]@k -> A@k        t(h_k)[e] + g(a_k)[p]
  B@k -> B@k+1         s(h_k)[p]
  A@k -> A@k+1         s(h_k)[p]
  A[p]@k -> B[p']@k+1  s(h_k)[p]
  B@k -> E@k           g(a_k)[p]

Everything is float64; gradients flow through every step via torch.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import torch
from torch import nn

from .corpus import POLARITIES, Vocabulary
from .lattice import ATTN_BEGIN, SENT_AA, SENT_AB, SENT_BB, SUBTAGS, TARGET_CONT, TARGET_END

log = logging.getLogger(__name__)

ABLATIONS = ("full", "no-attention", "no-bmes")
ATTENTION_FALLBACKS = ("hidden", "zero")

_POL_INDEX = {p: i for i, p in enumerate(POLARITIES)}
_SUB_INDEX = {s: i for i, s in enumerate(SUBTAGS)}


@dataclass
class ModelConfig:
    word_dim: int
    char_dim: int = 50  # char-encoder output, split over the two directions
    char_emb_dim: int = 30
    hidden_dim: int = 500  # LSTM size per direction
    attn_dim: int = 300
    lstm_layers: int = 2
    dropout: float = 0.5
    recurrent_dropout: float = 0.0  # between stacked LSTM layers only
    ablation: str = "full"
    attention_fallback: str = "hidden"  # score source for no-attention mode

    def __post_init__(self):
        if self.char_dim < 2 or self.char_dim % 2:
            raise ValueError("char_dim must be even and at least 2")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}")
        if self.attention_fallback not in ATTENTION_FALLBACKS:
            raise ValueError(f"attention_fallback must be one of {ATTENTION_FALLBACKS}")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")


class CharEncoder(nn.Module):
    """Token vector from the two end states of a char-level BiLSTM."""

    def __init__(self, n_chars, emb_dim, out_dim):
        super().__init__()
        self.emb = nn.Embedding(n_chars, emb_dim)
        self.lstm = nn.LSTM(emb_dim, out_dim // 2, bidirectional=True)

    def forward(self, char_ids):
        x = self.emb(char_ids).unsqueeze(1)  # (chars, batch=1, emb)
        _, (h_n, _) = self.lstm(x)
        return torch.cat([h_n[0, 0], h_n[1, 0]])


class AdditiveSelfAttention(nn.Module):
    """Pairwise additive attention over token embeddings.

    raw[k, j] = u . relu(W [e_k; e_j] + b), weights are the row-softmax
    of raw, and the summary a_k is the weighted mean of the embeddings
    (j ranges over every position, k itself included).
    """

    def __init__(self, input_dim, attn_dim):
        super().__init__()
        self.pair = nn.Linear(2 * input_dim, attn_dim)
        self.score = nn.Linear(attn_dim, 1, bias=False)

    def forward(self, emb):
        n = emb.shape[0]
        left = emb.unsqueeze(1).expand(n, n, -1)
        right = emb.unsqueeze(0).expand(n, n, -1)
        raw = self.score(torch.relu(self.pair(torch.cat([left, right], dim=2))))
        raw = raw.squeeze(-1)  # (n, n), row k scores position k against all j
        weights = torch.softmax(raw, dim=1)
        return weights @ emb, weights, raw


class NeuralEdgeScorer(nn.Module):
    """Embeddings, context encoder, self-attention and the three heads."""

    def __init__(self, vocab: Vocabulary, config: ModelConfig):
        super().__init__()
        self.vocab = vocab
        self.config = config
        token_dim = config.word_dim + config.char_dim

        self.word_emb = nn.Embedding(len(vocab.words), config.word_dim)
        self.char_encoder = CharEncoder(len(vocab.chars), config.char_emb_dim, config.char_dim)
        self.context = nn.LSTM(
            token_dim,
            config.hidden_dim,
            num_layers=config.lstm_layers,
            bidirectional=True,
            dropout=config.recurrent_dropout if config.lstm_layers > 1 else 0.0,
        )

        self.attention = None
        if config.ablation != "no-attention":
            self.attention = AdditiveSelfAttention(token_dim, config.attn_dim)

        n_sub = 1 if config.ablation == "no-bmes" else 4
        self.target_head = nn.Linear(2 * config.hidden_dim, n_sub)
        self.sentiment_head = nn.Linear(2 * config.hidden_dim, 3)
        if config.ablation == "no-attention" and config.attention_fallback == "zero":
            self.span_head = None
        else:
            span_in = 2 * config.hidden_dim if config.ablation == "no-attention" else token_dim
            self.span_head = nn.Linear(span_in, 3)

        # seeded dropout; None falls back to torch's global RNG
        self.dropout_generator: torch.Generator | None = None
        self.double()

    # ------------------------------------------------------------------
    # forward pieces

    def _dropout(self, x):
        p = self.config.dropout
        if not self.training or p <= 0:
            return x
        keep = 1.0 - p
        mask = torch.rand(x.shape, generator=self.dropout_generator, dtype=x.dtype)
        return x * (mask < keep).to(x.dtype) / keep

    def embed(self, sentence):
        """Concatenated word+char vectors, one row per token."""
        word_ids = torch.tensor([self.vocab.word_id(t) for t in sentence.tokens])
        words = self.word_emb(word_ids)
        chars = torch.stack(
            [
                self.char_encoder(torch.tensor([self.vocab.char_id(c) for c in token]))
                for token in sentence.tokens
            ]
        )
        return torch.cat([words, chars], dim=1)

    def encode_context(self, emb):
        """Stacked BiLSTM states, one row of size 2*hidden_dim per token."""
        out, _ = self.context(self._dropout(emb).unsqueeze(1))
        return out.squeeze(1)

    def self_attend(self, emb):
        """Attention summaries (a, weights, raw scores); needs attention on."""
        if self.attention is None:
            raise RuntimeError("self-attention is disabled in this configuration")
        return self.attention(emb)

    def head_tables(self, h, a):
        """The three per-position score tables feeding edge scores."""
        hd = self._dropout(h)
        target = self.target_head(hd)
        sentiment = self.sentiment_head(hd)
        if self.span_head is None:
            span = None
        elif self.config.ablation == "no-attention":
            span = self.span_head(hd)
        else:
            span = self.span_head(a)
        return target, sentiment, span

    def score_edges(self, lat, target, sentiment, span):
        """Assemble the per-edge score vector for one lattice."""
        if lat.n > target.shape[0]:
            raise ValueError(f"lattice spans {lat.n} positions, tables only {target.shape[0]}")
        no_bmes = self.config.ablation == "no-bmes"
        t_idx, s_idx, g_idx = ([], [], []), ([], [], []), ([], [], [])
        for eid, edge in enumerate(lat.edges):
            src = lat.nodes[edge.src]
            row = src.pos - 1
            if edge.rule in (TARGET_CONT, TARGET_END):
                t_idx[0].append(eid)
                t_idx[1].append(row)
                t_idx[2].append(0 if no_bmes else _SUB_INDEX[src.tag.sub])
                if edge.rule == TARGET_END and span is not None:
                    g_idx[0].append(eid)
                    g_idx[1].append(row)
                    g_idx[2].append(_POL_INDEX[src.tag.polarity])
            elif edge.rule in (SENT_BB, SENT_AA, SENT_AB):
                s_idx[0].append(eid)
                s_idx[1].append(row)
                s_idx[2].append(_POL_INDEX[src.tag.polarity])
            elif edge.rule == ATTN_BEGIN:
                if span is not None:
                    g_idx[0].append(eid)
                    g_idx[1].append(row)
                    g_idx[2].append(_POL_INDEX[src.tag.polarity])
            else:
                raise ValueError(f"unknown edge rule {edge.rule}")

        scores = target.new_zeros(len(lat.edges))
        for idx, table in ((t_idx, target), (s_idx, sentiment), (g_idx, span)):
            if idx[0]:
                eids = torch.tensor(idx[0])
                scores = scores.index_add(
                    0, eids, table[torch.tensor(idx[1]), torch.tensor(idx[2])]
                )
        return scores

    def forward(self, sentence, lattices):
        """Edge-score tensors for several lattices over one sentence."""
        emb = self.embed(sentence)
        h = self.encode_context(emb)
        a = self.self_attend(emb)[0] if self.attention is not None else None
        target, sentiment, span = self.head_tables(h, a)
        return [self.score_edges(lat, target, sentiment, span) for lat in lattices]

    # ------------------------------------------------------------------
    # parameter handling

    def initialize(self, generator, word_vectors=None):
        """Xavier-uniform matrices, zero biases, uniform embedding tables.

        word_vectors, when given, overwrite the word embedding rows
        (shape must match the vocabulary and word_dim).
        """
        with torch.no_grad():
            for param in self.parameters():
                if param.dim() >= 2:
                    _xavier_uniform(param, generator)
                else:
                    param.zero_()
            _embedding_uniform(self.word_emb.weight, generator)
            _embedding_uniform(self.char_encoder.emb.weight, generator)
            if word_vectors is not None:
                vectors = torch.as_tensor(word_vectors, dtype=torch.float64)
                if vectors.shape != self.word_emb.weight.shape:
                    raise ValueError(
                        f"word vectors shape {tuple(vectors.shape)} does not match "
                        f"embedding shape {tuple(self.word_emb.weight.shape)}"
                    )
                self.word_emb.weight.copy_(vectors)

    def zero_parameters(self):
        with torch.no_grad():
            for param in self.parameters():
                param.zero_()


def _xavier_uniform(param, generator):
    fan_in, fan_out = nn.init._calculate_fan_in_and_fan_out(param)
    bound = (6.0 / (fan_in + fan_out)) ** 0.5
    param.copy_((torch.rand(param.shape, generator=generator, dtype=param.dtype) * 2 - 1) * bound)


def _embedding_uniform(weight, generator):
    bound = (3.0 / weight.shape[1]) ** 0.5
    weight.copy_((torch.rand(weight.shape, generator=generator, dtype=weight.dtype) * 2 - 1) * bound)


CHECKPOINT_FORMAT = "sentspan-checkpoint-v1"


def save_checkpoint(model, path):
    """Write dims, vocabularies and all parameters; load is bit-exact."""
    torch.save(
        {
            "format": CHECKPOINT_FORMAT,
            "model_config": asdict(model.config),
            "words": model.vocab.words,
            "chars": model.vocab.chars,
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path):
    payload = torch.load(path, weights_only=True)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    vocab = Vocabulary(payload["words"], payload["chars"])
    model = NeuralEdgeScorer(vocab, ModelConfig(**payload["model_config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
