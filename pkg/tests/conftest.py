import pytest
import torch

from sentspan import Dataset, ModelConfig, NeuralEdgeScorer, Sentence, SpanLabel, Vocabulary

# tiny models; a single thread is faster and keeps timings steady
torch.set_num_threads(1)


POS_CUES = ["love", "adore", "enjoy", "like"]
NEG_CUES = ["hate", "despise", "dislike", "loathe"]
NEU_CUES = ["saw", "met", "watched", "noted"]
NAMES = [
    "alpha", "bravo", "carbon", "delta", "echo", "fuel", "golf", "hotel",
    "india", "jazz", "kilo", "lima", "metro", "nova", "oscar", "papa",
    "quartz", "romeo", "sierra", "tango",
]


def cue_corpus(size=20, two_word_every=5):
    """Synthetic sentences with unambiguous lexical sentiment cues.

    Pattern "we CUE NAME today" with the name as the target; every
    two_word_every-th sentence uses a two-word target "NAME fest" to
    exercise multi-token spans.
    """
    items = []
    for i in range(size):
        name = NAMES[i % len(NAMES)]
        polarity, cues = [("+", POS_CUES), ("-", NEG_CUES), ("0", NEU_CUES)][i % 3]
        cue = cues[i % len(cues)]
        if two_word_every and i % two_word_every == two_word_every - 1:
            tokens = ("we", cue, name, "fest", "today")
            span = SpanLabel(3, 4, polarity)
        else:
            tokens = ("we", cue, name, "today")
            span = SpanLabel(3, 3, polarity)
        items.append((Sentence(tokens), (span,)))
    return Dataset(items)


TINY_DIMS = dict(word_dim=3, char_dim=2, char_emb_dim=2, hidden_dim=2, attn_dim=3)


def tiny_model(vocab=None, seed=0, ablation="full", **overrides):
    """A deterministic double-precision model at the spec's tiny dims."""
    if vocab is None:
        vocab = Vocabulary.from_dataset(cue_corpus(6))
    params = dict(TINY_DIMS, dropout=0.0, ablation=ablation)
    params.update(overrides)
    model = NeuralEdgeScorer(vocab, ModelConfig(**params))
    model.initialize(torch.Generator().manual_seed(seed))
    model.eval()
    return model


@pytest.fixture
def corpus20():
    return cue_corpus(20)
