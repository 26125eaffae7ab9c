import numpy as np

import pytest

from sentspan import emit_annotations, parse_annotations
from sentspan.cli import main
from sentspan.selfcheck import run_selfcheck

from conftest import cue_corpus

TINY_CONFIG = """\
epochs = 4
learning_rate = 0.02
dropout = 0.1
seed = 11
dev_fraction = 0.2
word_dim = 8
char_dim = 4
char_emb_dim = 4
hidden_dim = 6
attn_dim = 4
folds = 2
"""


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "config.txt").write_text(TINY_CONFIG, encoding="utf-8")
    (tmp_path / "train.txt").write_text(emit_annotations(cue_corpus(10)), encoding="utf-8")
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def test_train_writes_checkpoint_and_report(workdir):
    model = workdir / "model.pt"
    status = run("train", workdir / "train.txt", model, "--config", workdir / "config.txt")
    assert status == 0
    assert model.exists()
    report = (workdir / "model.pt.report").read_text(encoding="utf-8")
    lines = report.strip().split("\n")
    assert len(lines) == 4 + 1  # one per epoch plus the selection line
    assert lines[0].startswith("epoch 1 loss ")


def test_train_same_seed_byte_identical_reports(workdir):
    run("train", workdir / "train.txt", workdir / "a.pt", "--config", workdir / "config.txt")
    run("train", workdir / "train.txt", workdir / "b.pt", "--config", workdir / "config.txt")
    report_a = (workdir / "a.pt.report").read_bytes()
    report_b = (workdir / "b.pt.report").read_bytes()
    assert report_a == report_b


def test_train_seed_flag_overrides_config(workdir):
    run("train", workdir / "train.txt", workdir / "a.pt",
        "--config", workdir / "config.txt", "--seed", "99")
    run("train", workdir / "train.txt", workdir / "b.pt", "--config", workdir / "config.txt")
    assert (workdir / "a.pt.report").read_bytes() != (workdir / "b.pt.report").read_bytes()


def test_train_unreadable_file_is_data_error(workdir):
    assert run("train", workdir / "missing.txt", workdir / "m.pt") == 2


def test_train_all_span_free_is_error(workdir):
    (workdir / "untagged.txt").write_text("a\tO\nb\tO\n\n", encoding="utf-8")
    status = run("train", workdir / "untagged.txt", workdir / "m.pt",
                 "--config", workdir / "config.txt")
    assert status == 2


def test_predict_roundtrip_and_spans(workdir):
    model = workdir / "model.pt"
    run("train", workdir / "train.txt", model, "--config", workdir / "config.txt")
    out = workdir / "pred.txt"
    status = run("predict", model, workdir / "train.txt", out)
    assert status == 0
    data = parse_annotations(out.read_text(encoding="utf-8"))
    assert len(data) == 10
    for _, spans in data:
        assert len(spans) >= 1  # every sentence gets at least one target


def test_predict_reproduces_gold_after_overfit(workdir):
    (workdir / "overfit.cfg").write_text(
        TINY_CONFIG.replace("epochs = 4", "epochs = 14").replace(
            "dev_fraction = 0.2", "dev_fraction = 0.0"
        ),
        encoding="utf-8",
    )
    model = workdir / "model.pt"
    run("train", workdir / "train.txt", model, "--config", workdir / "overfit.cfg",
        "--dev", workdir / "train.txt")
    run("predict", model, workdir / "train.txt", workdir / "pred.txt")
    assert (workdir / "pred.txt").read_text(encoding="utf-8") == (
        workdir / "train.txt"
    ).read_text(encoding="utf-8")


def test_predict_untagged_input(workdir):
    model = workdir / "model.pt"
    run("train", workdir / "train.txt", model, "--config", workdir / "config.txt")
    (workdir / "raw.txt").write_text("we\nlove\nalpha\ntoday\n\n", encoding="utf-8")
    assert run("predict", model, workdir / "raw.txt", workdir / "out.txt") == 0
    data = parse_annotations((workdir / "out.txt").read_text(encoding="utf-8"))
    assert data[0][0].tokens == ("we", "love", "alpha", "today")


def test_predict_empty_input(workdir):
    model = workdir / "model.pt"
    run("train", workdir / "train.txt", model, "--config", workdir / "config.txt")
    (workdir / "empty.txt").write_text("", encoding="utf-8")
    assert run("predict", model, workdir / "empty.txt", workdir / "out.txt") == 0
    assert (workdir / "out.txt").read_text(encoding="utf-8") == ""


def test_predict_is_deterministic(workdir):
    model = workdir / "model.pt"
    run("train", workdir / "train.txt", model, "--config", workdir / "config.txt")
    run("predict", model, workdir / "train.txt", workdir / "p1.txt")
    run("predict", model, workdir / "train.txt", workdir / "p2.txt")
    assert (workdir / "p1.txt").read_bytes() == (workdir / "p2.txt").read_bytes()


def test_predict_dimension_mismatch(workdir):
    model = workdir / "model.pt"
    run("train", workdir / "train.txt", model, "--config", workdir / "config.txt")
    (workdir / "other.txt").write_text(TINY_CONFIG.replace("hidden_dim = 6", "hidden_dim = 7"),
                                       encoding="utf-8")
    status = run("predict", model, workdir / "train.txt", workdir / "out.txt",
                 "--config", workdir / "other.txt")
    assert status == 2


def test_evaluate_identical_files(workdir, capsys):
    assert run("evaluate", workdir / "train.txt", workdir / "train.txt") == 0
    out = capsys.readouterr().out
    assert "100.00" in out


def test_evaluate_porcelain(workdir, capsys):
    assert run("evaluate", workdir / "train.txt", workdir / "train.txt", "--porcelain") == 0
    out = capsys.readouterr().out
    for line in out.strip().split("\n"):
        key, eq, value = line.partition("=")
        assert eq == "=" and float(value) >= 0.0
    assert "target_f1=100.00" in out


def test_evaluate_lengths_out(workdir):
    before = (workdir / "train.txt").read_bytes()
    assert run("evaluate", workdir / "train.txt", workdir / "train.txt",
               "--lengths-out", workdir / "lengths.tsv") == 0
    rows = (workdir / "lengths.tsv").read_text(encoding="utf-8").strip().split("\n")
    assert len(rows) == 5 and rows[0].startswith("length\t")
    assert (workdir / "train.txt").read_bytes() == before  # inputs never mutated


def test_evaluate_alignment_error(workdir):
    (workdir / "short.txt").write_text("we\tO\n\n", encoding="utf-8")
    assert run("evaluate", workdir / "train.txt", workdir / "short.txt") == 2


def test_evaluate_hand_computed(workdir, capsys):
    (workdir / "gold.txt").write_text("a\tB-POS\nb\tO\nc\tB-NEG\n\n", encoding="utf-8")
    (workdir / "pred.txt").write_text("a\tB-POS\nb\tO\nc\tB-NEU\n\n", encoding="utf-8")
    run("evaluate", workdir / "gold.txt", workdir / "pred.txt", "--porcelain")
    out = dict(line.split("=") for line in capsys.readouterr().out.strip().split("\n"))
    assert float(out["target_f1"]) == 100.0
    assert float(out["targeted_f1"]) == 50.0
    assert float(out["subjectivity_f1"]) == 50.0
    # the neutral prediction drops out, the positive one still matches
    assert float(out["nonneutral_p"]) == 100.0
    assert float(out["nonneutral_r"]) == 50.0
    assert round(float(out["nonneutral_f1"]), 2) == 66.67


def test_xval_runs_and_writes_manifest(workdir, capsys):
    status = run("xval", workdir / "train.txt", "--config", workdir / "config.txt",
                 "--manifest-out", workdir / "folds.txt")
    assert status == 0
    out = capsys.readouterr().out
    assert out.count("fold ") == 2
    assert "mean targeted P " in out
    manifest = (workdir / "folds.txt").read_text(encoding="utf-8")
    assert manifest.startswith("fold 0 train ")


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as err:
        main(["train"])  # missing required arguments
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["no-such-command"])
    assert err.value.code == 1


def test_selfcheck_negative_control():
    # corrupting the transition table must trip the structural checks
    from sentspan.lattice import TRANSITIONS, Tag

    corrupted = dict(TRANSITIONS)
    corrupted[Tag("B", "+")] = corrupted[Tag("B", "+")] + (
        (Tag("A", "+"), 1, "SENT_AA"),  # B may never hop straight to A
    )
    ok, lines = run_selfcheck(rules=corrupted, cases=16)
    assert not ok
    assert any("FAIL" in line for line in lines)


def test_selfcheck_cli_passes(capsys):
    assert main(["selfcheck"]) == 0
    out = capsys.readouterr().out
    assert "selfcheck PASSED" in out
    assert "gradient check (full)" in out
