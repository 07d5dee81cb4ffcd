import io
import json
import subprocess
import sys

import pytest
import yaml

from cardgauge.cli import main

from conftest import CORPUS, GOLDEN, VACUOUS, WORKED, taxonomy_text

W_TAX = str(WORKED / "taxonomy.yaml")
W_STATS = str(WORKED / "stats.json")
W_CARD = str(WORKED / "card.yaml")


@pytest.fixture(autouse=True)
def pinned_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    monkeypatch.delenv("CARDGAUGE_TAXONOMY", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def feed_stdin(monkeypatch, data: bytes):
    monkeypatch.setattr(sys, "stdin", io.TextIOWrapper(io.BytesIO(data)))


def test_score_goldens(capsys):
    for fmt, golden in (("text", "worked_score.txt"), ("json", "worked_score.json"),
                        ("markdown", "worked_score.md")):
        code, out, _ = run(capsys, "score", W_CARD, "--stats", W_STATS, "--taxonomy", W_TAX,
                           "--format", fmt)
        assert code == 0
        assert out == (GOLDEN / golden).read_text()


def test_score_to_file(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "score", W_CARD, "--stats", W_STATS, "--taxonomy", W_TAX,
                       "--format", "json", "-o", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["overall"]["pass"] is False


def test_fill_plan_golden_and_json(capsys):
    code, out, _ = run(capsys, "fill-plan", W_CARD, "--stats", W_STATS, "--taxonomy", W_TAX,
                       "--module", "performance_limitations")
    assert code == 0 and out == (GOLDEN / "worked_fill_plan.txt").read_text()
    code, out, _ = run(capsys, "fill-plan", W_CARD, "--stats", W_STATS, "--taxonomy", W_TAX,
                       "--module", "performance_limitations", "--format", "json")
    doc = json.loads(out)
    assert doc[0]["reaches_baseline_at"] == 2
    assert doc[0]["steps"][0]["parameter_id"] == "perf_fairness_evaluation"


@pytest.mark.parametrize("card, stats, tax, policy, expected", [
    (W_CARD, W_STATS, W_TAX, "strict", 1),
    (str(WORKED / "card_filled.yaml"), W_STATS, W_TAX, "strict", 0),
    (str(VACUOUS / "card.yaml"), str(VACUOUS / "stats.json"), str(VACUOUS / "taxonomy.yaml"), "strict", 3),
    (str(VACUOUS / "card.yaml"), str(VACUOUS / "stats.json"), str(VACUOUS / "taxonomy.yaml"),
     "allow-vacuous", 0),
])
def test_gate_exit_codes(capsys, card, stats, tax, policy, expected):
    code, out, err = run(capsys, "gate", card, "--stats", stats, "--taxonomy", tax, "--policy", policy)
    assert code == expected
    assert out == ""
    assert f"exit {expected}" in err


def test_gate_module_filter_and_quiet(capsys):
    code, _, err = run(capsys, "gate", W_CARD, "--stats", W_STATS, "--taxonomy", W_TAX,
                       "--module", "model_details", "-q")
    assert code == 0 and err == ""
    code, _, err = run(capsys, "gate", W_CARD, "--stats", W_STATS, "--taxonomy", W_TAX,
                       "--module", "nope")
    assert code == 2 and "nope" in err


def test_stats_command(capsys, tmp_path):
    code, out, err = run(capsys, "stats", str(CORPUS / "manifest.yaml"))
    assert code == 0
    assert out == (GOLDEN / "corpus_stats.json").read_text()
    assert "N = 17" in err
    target = tmp_path / "s.json"
    code, out, _ = run(capsys, "stats", str(CORPUS / "cards"), "-o", str(target), "--workers", "3")
    assert code == 0 and "N = 17" in out
    assert json.loads(target.read_text())["freq"] == json.loads(
        (GOLDEN / "corpus_stats.json").read_text())["freq"]


def test_coverage_command(capsys, tmp_path):
    code, out, _ = run(capsys, "coverage", str(CORPUS / "manifest.yaml"))
    assert code == 0 and out == (GOLDEN / "corpus_coverage.csv").read_text()
    code, out, _ = run(capsys, "coverage", str(CORPUS / "manifest.yaml"), "--grid", "mean")
    assert out == (GOLDEN / "corpus_coverage_mean.csv").read_text()
    j = tmp_path / "c.json"
    code, out, _ = run(capsys, "coverage", str(CORPUS / "manifest.yaml"), "--json", str(j))
    assert code == 0 and out == ""
    assert j.read_text() == (GOLDEN / "corpus_coverage.json").read_text()
    code, _, err = run(capsys, "coverage", str(CORPUS / "manifest.yaml"), "--csv", "-", "--json", "-")
    assert code == 2 and "stdout" in err


def test_template_command(capsys, tmp_path):
    code, out, _ = run(capsys, "template")
    assert code == 0 and out.startswith("---")
    card = tmp_path / "blank.yaml"
    card.write_text(out)
    code, out, _ = run(capsys, "score", str(card), "--stats", str(GOLDEN / "corpus_stats.json"))
    assert code == 0 and "FAIL: 8 insufficient" in out
    code, out, _ = run(capsys, "template", "--module", "feedback")
    assert "feedback:" in out and "model_details:" not in out


def test_validate_command(capsys, tmp_path):
    code, out, _ = run(capsys, "validate")
    assert code == 0 and out.startswith("ok: taxonomy 1.0.0, 8 modules")
    nine = tmp_path / "nine.yaml"
    nine.write_text(taxonomy_text({f"m{i}": [f"m{i}_a"] for i in range(1, 10)}))
    code, _, err = run(capsys, "validate", str(nine))
    assert code == 2 and "9" in err
    code, out, err = run(capsys, "validate", str(nine), "--allow-extra-modules")
    assert code == 0 and "9 modules" in out and "warning" in err
    bad = tmp_path / "bad.yaml"
    doc = yaml.safe_load(taxonomy_text({f"m{i}": [f"m{i}_a"] for i in range(1, 9)}))
    doc["modules"][1]["children"][0]["id"] = "m1_a"
    bad.write_text(yaml.safe_dump(doc))
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 2 and "m1_a" in err


def test_taxonomy_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("CARDGAUGE_TAXONOMY", W_TAX)
    code, out, _ = run(capsys, "validate")
    assert code == 0 and "worked-1" in out


def test_card_from_stdin(capsys, monkeypatch):
    feed_stdin(monkeypatch, (WORKED / "card.yaml").read_bytes())
    code, out, _ = run(capsys, "score", "-", "--stats", W_STATS, "--taxonomy", W_TAX)
    assert code == 0
    assert out == (GOLDEN / "worked_score.txt").read_text()


def test_two_stdin_inputs_is_usage_error(capsys, monkeypatch):
    feed_stdin(monkeypatch, b"")
    code, _, err = run(capsys, "score", "-", "--stats", "-", "--taxonomy", W_TAX)
    assert code == 2 and "stdin" in err


@pytest.mark.parametrize("argv", [
    ["score", "missing.yaml", "--stats", W_STATS, "--taxonomy", W_TAX],
    ["score", W_CARD, "--stats", str(GOLDEN / "corpus_stats.json"), "--taxonomy", W_TAX],
    ["score", W_CARD, "--stats", W_STATS],
])
def test_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("cardgauge: error:")


def test_parse_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model_name: ok\nlicense: [oops\n")
    code, _, err = run(capsys, "score", str(bad), "--stats", str(GOLDEN / "corpus_stats.json"))
    assert code == 2 and "line" in err


def test_empty_corpus_dir_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "stats", str(tmp_path))
    assert code == 2 and "no card files" in err


def test_single_card_corpus(capsys, tmp_path):
    (tmp_path / "only.yaml").write_text("model_name: Solo model\nlicense: MIT\n")
    code, out, _ = run(capsys, "stats", str(tmp_path))
    doc = json.loads(out)
    assert code == 0 and doc["n_projects"] == 1
    assert doc["freq"]["model_name"] == 1 and doc["freq"]["license"] == 1


def test_placeholder_tokens_file(capsys, tmp_path):
    tokens = tmp_path / "tokens.txt"
    tokens.write_text("# custom\npending review\n")
    card = tmp_path / "c.yaml"
    card.write_text("model_name: pending review\nlicense: TODO\n")
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "c.yaml").write_text(card.read_text())
    code, out, _ = run(capsys, "stats", str(corpus), "--placeholder-tokens", str(tokens))
    freq = json.loads(out)["freq"]
    assert freq["model_name"] == 0 and freq["license"] == 1


def test_usage_errors_from_argparse(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["score"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["gate", W_CARD, "--stats", W_STATS, "--policy", "lenient"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cardgauge", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("cardgauge ")
