import numpy as np
import pytest

from sentspan import (
    AnnotationError,
    Dataset,
    EmbeddingFormatError,
    Sentence,
    SpanLabel,
    Vocabulary,
    emit_annotations,
    load_embeddings,
    make_folds,
    parse_annotations,
)
from sentspan.corpus import fold_manifest, spans_to_tags, tags_to_spans

from oracles import random_span_triples

FIGURE_SENTENCE = "\n".join(
    [
        "OZ\tB-POS",
        "and\tO",
        "Shim\tB-POS",
        "Lim\tI-POS",
        "perform\tO",
        "amazing\tO",
        "magic\tO",
        "on\tO",
        "AGT\tB-NEU",
        "2018\tO",
        "",
    ]
)


def test_parse_single_token_sentence():
    data = parse_annotations("OZ\tB-POS\n")
    assert len(data) == 1
    sentence, spans = data[0]
    assert sentence.tokens == ("OZ",)
    assert spans == (SpanLabel(1, 1, "+"),)


def test_parse_ten_token_example():
    data = parse_annotations(FIGURE_SENTENCE)
    sentence, spans = data[0]
    assert len(sentence) == 10
    assert spans == (SpanLabel(1, 1, "+"), SpanLabel(3, 4, "+"), SpanLabel(9, 9, "0"))


def test_parse_orphan_continuation_is_error():
    with pytest.raises(AnnotationError):
        parse_annotations("good\tI-POS\n")


def test_continuation_must_match_polarity():
    with pytest.raises(AnnotationError):
        parse_annotations("a\tB-POS\nb\tI-NEG\n")


def test_parse_reports_line_numbers():
    with pytest.raises(AnnotationError) as err:
        parse_annotations("ok\tO\n\nbad\tO\textra\n")
    assert err.value.line == 3
    assert "line 3" in str(err.value)


def test_parse_rejects_unknown_tags():
    with pytest.raises(AnnotationError):
        parse_annotations("x\tB-GOOD\n")


def test_untagged_lines_only_with_flag():
    with pytest.raises(AnnotationError):
        parse_annotations("hello\nthere\n")
    data = parse_annotations("hello\nthere\n", allow_untagged=True)
    assert data[0][0].tokens == ("hello", "there")
    assert data[0][1] == ()


def test_emit_empty_dataset():
    assert emit_annotations(Dataset([])) == ""


def test_emit_single_span():
    data = Dataset([(Sentence(("OZ",)), (SpanLabel(1, 1, "+"),))])
    assert emit_annotations(data) == "OZ\tB-POS\n\n"


def _random_dataset(rng, sentences=8):
    items = []
    for _ in range(sentences):
        n = int(rng.integers(1, 9))
        tokens = tuple(f"w{rng.integers(0, 50)}" for _ in range(n))
        if rng.random() < 0.25:
            spans = ()
        else:
            spans = tuple(SpanLabel(*t) for t in random_span_triples(rng, n))
        items.append((Sentence(tokens), spans))
    return Dataset(items)


def test_parse_emit_roundtrip_property():
    rng = np.random.default_rng(11)
    for _ in range(50):
        data = _random_dataset(rng)
        text = emit_annotations(data)
        back = parse_annotations(text)
        assert [(s.tokens, sp) for s, sp in back] == [(s.tokens, sp) for s, sp in data]
        # emit . parse is the identity on canonical text
        assert emit_annotations(back) == text


def test_tags_spans_inverse():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        spans = [SpanLabel(*t) for t in random_span_triples(rng, n)]
        assert tags_to_spans(spans_to_tags(n, spans)) == spans


def test_zero_target_sentences_are_kept():
    data = parse_annotations("just\tO\nwords\tO\n")
    assert len(data) == 1
    assert data[0][1] == ()


def test_sentence_rejects_format_breaking_tokens():
    with pytest.raises(ValueError):
        Sentence(("a\tb",))
    with pytest.raises(ValueError):
        Sentence(("a\nb",))


def test_dataset_rejects_overlap():
    with pytest.raises(ValueError):
        Dataset([(Sentence(("a", "b")), (SpanLabel(1, 2, "+"), SpanLabel(2, 2, "0")))])


def test_dataset_rejects_out_of_bounds():
    with pytest.raises(ValueError):
        Dataset([(Sentence(("a",)), (SpanLabel(1, 2, "+"),))])


# ---------------------------------------------------------------------------
# vocabulary


def test_vocabulary_lookup_is_total():
    vocab = Vocabulary.from_dataset(parse_annotations(FIGURE_SENTENCE))
    assert vocab.word_id("never-seen") == vocab.unk_id
    assert vocab.char_id("☃") == vocab.unk_id
    assert vocab.word_id("magic") > 0


def test_vocabulary_lowercase_fallback():
    vocab = Vocabulary(["Magic"], list("Magic"))
    assert vocab.word_id("Magic") != vocab.unk_id
    assert vocab.word_id("MAGIC") == vocab.unk_id  # only exact, then .lower()
    vocab2 = Vocabulary(["magic"], list("magic"))
    assert vocab2.word_id("MAGIC") == vocab2.word_id("magic")
    assert vocab2.word_id("Magic") == vocab2.word_id("magic")


# ---------------------------------------------------------------------------
# embeddings


def test_load_embeddings_basic(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 0.5 0.5\n", encoding="utf-8")
    vocab = Vocabulary(["a"], ["a"])
    table = load_embeddings(path, vocab)
    assert table.dim == 2
    assert np.allclose(table.vectors[vocab.word_id("a")], [0.5, 0.5])


def test_load_embeddings_dimension_mismatch(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("a 0.1 0.2\nb 0.1 0.2 0.3\n", encoding="utf-8")
    with pytest.raises(EmbeddingFormatError):
        load_embeddings(path, Vocabulary(["a", "b"], ["a"]))


def test_load_embeddings_missing_words_seeded(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("known 1.0 2.0\n", encoding="utf-8")
    vocab = Vocabulary(["known", "missing"], ["k"])
    t1 = load_embeddings(path, vocab, seed=9)
    t2 = load_embeddings(path, vocab, seed=9)
    assert (t1.vectors == t2.vectors).all()  # bitwise reproducible
    missing = t1.vectors[vocab.word_id("missing")]
    bound = np.sqrt(3.0 / 2.0)
    assert (np.abs(missing) <= bound).all()
    t3 = load_embeddings(path, vocab, seed=10)
    assert not (t3.vectors[vocab.word_id("missing")] == missing).all()


def test_load_embeddings_lowercase_fallback(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("oz 7.0\n", encoding="utf-8")
    vocab = Vocabulary(["OZ"], ["O", "Z"])
    table = load_embeddings(path, vocab)
    assert float(table.vectors[vocab.word_id("OZ")][0]) == 7.0


# ---------------------------------------------------------------------------
# folds


def _toy_dataset(n):
    return Dataset([(Sentence((f"tok{i}",)), (SpanLabel(1, 1, "+"),)) for i in range(n)])


def test_folds_ten_by_ten():
    folds = make_folds(_toy_dataset(10), k=10, dev_fraction=0.1, seed=4)
    assert len(folds) == 10
    assert all(len(test) == 1 for _, _, test in folds)


def test_folds_deterministic():
    a = make_folds(_toy_dataset(23), 5, 0.1, seed=42)
    b = make_folds(_toy_dataset(23), 5, 0.1, seed=42)
    assert a == b
    c = make_folds(_toy_dataset(23), 5, 0.1, seed=43)
    assert a != c


def test_folds_sizes_100():
    folds = make_folds(_toy_dataset(100), k=10, dev_fraction=0.1, seed=0)
    for train, dev, test in folds:
        assert (len(train), len(dev), len(test)) == (81, 9, 10)


def test_folds_partition_properties():
    data = _toy_dataset(37)
    folds = make_folds(data, k=5, dev_fraction=0.15, seed=8)
    seen = []
    for train, dev, test in folds:
        assert set(train) | set(dev) | set(test) == set(range(37))
        assert not (set(train) & set(dev) or set(train) & set(test) or set(dev) & set(test))
        seen.extend(test)
    assert sorted(seen) == list(range(37))  # test partitions cover exactly once


def test_folds_k_larger_than_dataset():
    with pytest.raises(ValueError):
        make_folds(_toy_dataset(3), k=4, dev_fraction=0.1, seed=0)


def test_fold_manifest_format():
    folds = make_folds(_toy_dataset(6), k=3, dev_fraction=0.2, seed=1)
    text = fold_manifest(folds)
    lines = text.strip().split("\n")
    assert len(lines) == 3
    assert lines[0].startswith("fold 0 train ")
    assert " dev " in lines[0] and " test " in lines[0]
