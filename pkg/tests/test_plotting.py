import pytest

pytest.importorskip("matplotlib")

from cardgauge.cli import main  # noqa: E402

from conftest import CORPUS, WORKED  # noqa: E402

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def test_score_plot(tmp_path, capsys):
    target = tmp_path / "scores.png"
    code = main(["score", str(WORKED / "card.yaml"), "--stats", str(WORKED / "stats.json"),
                 "--taxonomy", str(WORKED / "taxonomy.yaml"), "--plot", str(target)])
    capsys.readouterr()
    assert code == 0
    assert target.read_bytes()[:8] == PNG_MAGIC


@pytest.mark.parametrize("grid", ["union", "mean"])
def test_coverage_heatmap(tmp_path, capsys, grid):
    target = tmp_path / f"coverage-{grid}.png"
    code = main(["coverage", str(CORPUS / "manifest.yaml"), "--grid", grid, "--plot", str(target)])
    out, _ = capsys.readouterr()
    assert code == 0 and out.startswith("task,")
    assert target.read_bytes()[:8] == PNG_MAGIC
