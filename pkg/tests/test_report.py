import re

import pytest

from fisrg.report import (
    CSV_HEADER,
    dice_lesion_series,
    emit_chart,
    format_summary,
    read_csv,
    render_chart,
    results_to_csv,
    write_csv,
)
from fisrg.tuner import ParamPoint, SliceResult, summarize


@pytest.fixture
def results():
    return [
        SliceResult(0, ParamPoint(0.3, 4, 1.0, 5), 0.91, 2.5, 12.0),
        SliceResult(1, ParamPoint(0.2, 6, 1.0, 5), 0.85, 4.0, 10.0),
        SliceResult(2, ParamPoint(0.4, 3, 1.0, 5), 0.95, 1.25, 11.0),
    ]


def test_empty_chart_has_axes_only():
    svg = render_chart([[], []], ["Dice", "Lesion %"])
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "<polyline" not in svg
    assert svg.count('class="axis"') == 3


def test_two_point_chart():
    svg = render_chart([[(0, 0.5), (1, 0.9)], [(0, 3.0), (1, 12.0)]], ["Dice", "Lesion %"])
    assert svg.count("<polyline") == 2
    pts = re.findall(r'points="([^"]*)"', svg)
    assert all(len(p.split()) == 2 for p in pts)


def test_chart_byte_identical(tmp_path, results):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_chart(dice_lesion_series(results), ["Dice", "Lesion %"], a, "t")
    emit_chart(dice_lesion_series(results), ["Dice", "Lesion %"], b, "t")
    assert a.read_bytes() == b.read_bytes()


def test_title_escaped():
    svg = render_chart([[(0, 1)]], ["a<b"], title="x & y")
    assert "x &amp; y" in svg and "a&lt;b" in svg


def test_csv(tmp_path, results):
    text = results_to_csv(results)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 4
    assert lines[1].startswith("0,2.500000,0.300000,4,1.000000,5,0.910000,")
    write_csv(results, tmp_path / "r.csv")
    rows = read_csv(tmp_path / "r.csv")
    assert [r["n_seeds"] for r in rows] == ["4", "6", "3"]
    assert float(rows[2]["dice"]) == 0.95


def test_summary_table(results):
    summary = summarize(results, 1, 0.5)
    text = format_summary(summary, ("fuzzy_threshold", "n_seeds"))
    lines = text.splitlines()
    assert lines[0] == "Statistical Summary of Parameters for Experiment 1"
    assert "Fuzzy Threshold" in lines[1] and "Seeds" in lines[1] and "Dice Score" in lines[1]
    assert "Sigma" not in lines[1]
    assert [ln.split()[0] for ln in lines[2:6]] == ["mean", "std", "min", "max"]
    mean_row = lines[2].split()
    assert float(mean_row[1]) == pytest.approx(0.3, abs=1e-3)
    assert float(mean_row[3]) == pytest.approx(0.9033, abs=1e-3)
    assert "slices: 3" in text and "computational time: 0.50 min" in text
