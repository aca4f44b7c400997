"""CSV, plain-text summary and SVG chart output for tuning runs."""
import csv
import io
import json
import math
import os
from xml.sax.saxutils import escape

from .tuner import PARAM_ORDER

CSV_HEADER = (
    "slice_index",
    "lesion_pct",
    "fuzzy_threshold",
    "n_seeds",
    "denoise_sigma",
    "dilate_size",
    "dice",
    "elapsed_ms",
)

COLUMN_TITLES = {
    "fuzzy_threshold": "Fuzzy Threshold",
    "n_seeds": "Seeds",
    "denoise_sigma": "Sigma",
    "dilate_size": "Dilation",
    "dice": "Dice Score",
}

SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _num(v):
    return format(float(v), ".6f")


def results_to_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        w.writerow([
            r.slice_index,
            _num(r.lesion_pct),
            _num(r.best.fuzzy_threshold),
            int(r.best.n_seeds),
            _num(r.best.denoise_sigma),
            int(r.best.dilate_size),
            _num(r.dice),
            format(r.elapsed_ms, ".3f"),
        ])
    return buf.getvalue()


def write_csv(results, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(results_to_csv(results))


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def format_summary(summary, free_params=None, title=None):
    """Render the mean/std/min/max table for one experiment.

    Columns are the searched parameters followed by the Dice score.
    """
    free = list(free_params) if free_params else ["fuzzy_threshold", "n_seeds"]
    cols = [c for c in PARAM_ORDER if c in free] + ["dice"]
    title = title or f"Statistical Summary of Parameters for Experiment {summary.experiment_id}"
    width = max(len(COLUMN_TITLES[c]) for c in cols) + 2
    lines = [title, " " * 6 + "".join(COLUMN_TITLES[c].rjust(width) for c in cols)]
    for row in ("mean", "std", "min", "max"):
        cells = "".join(
            format(getattr(summary.stats[c], row), ".3f").rjust(width) for c in cols
        )
        lines.append(row.ljust(6) + cells)
    lines.append(f"slices: {summary.n_slices}")
    lines.append(f"computational time: {summary.total_elapsed_min:.2f} min")
    return "\n".join(lines) + "\n"


def write_text(text, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _nice_max(values):
    top = max(values, default=0.0)
    if top <= 1.0:
        return 1.0
    step = 10.0 ** math.floor(math.log10(top))
    return math.ceil(top / step) * step


def _fmt(v):
    return format(v, ".2f")


def render_chart(series, labels, title="", width=640, height=360):
    """Return SVG markup plotting two series on separate y axes.

    The first series is scaled to the left axis, the second to the right.
    Each non-empty series becomes exactly one ``<polyline>``.
    """
    series = [list(s) for s in series]
    labels = list(labels)
    left, right, top, bottom = 60, 60, 40, 50
    pw, ph = width - left - right, height - top - bottom

    xs = [x for s in series for x, _ in s]
    xmin, xmax = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if xmax == xmin:
        xmax = xmin + 1.0
    scales = [_nice_max([y for _, y in s]) for s in series]

    def px(x):
        return left + (x - xmin) / (xmax - xmin) * pw

    def py(y, scale):
        return top + ph - (y / scale) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
        f'<line class="axis" x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<line class="axis" x1="{left + pw}" y1="{top}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
    ]
    for i in range(6):
        frac = i / 5
        y = top + ph - frac * ph
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end" '
                   f'font-size="10">{_fmt(frac * (scales[0] if scales else 1.0))}</text>')
        if len(scales) > 1:
            out.append(f'<text x="{left + pw + 6}" y="{y + 4:.2f}" font-size="10">'
                       f"{_fmt(frac * scales[1])}</text>")
        xv = xmin + frac * (xmax - xmin)
        out.append(f'<text x="{px(xv):.2f}" y="{top + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{_fmt(xv)}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" '
               f'font-size="12">slice</text>')
    for i, label in enumerate(labels[:2]):
        x = 16 if i == 0 else width - 16
        out.append(f'<text x="{x}" y="{top + ph / 2:.2f}" text-anchor="middle" font-size="12" '
                   f'transform="rotate(-90 {x} {top + ph / 2:.2f})">{escape(label)}</text>')

    for i, s in enumerate(series):
        if not s:
            continue
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        scale = scales[i] if i < 2 else scales[0]
        pts = " ".join(f"{px(x):.2f},{py(y, scale):.2f}" for x, y in s)
        name = escape(labels[i]) if i < len(labels) else f"series {i}"
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'data-series="{name}" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(series, labels, path, title=""):
    """Write :func:`render_chart` output to ``path``."""
    svg = render_chart(series, labels, title)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(svg)
    os.replace(tmp, path)


def dice_lesion_series(results):
    """The (Dice, lesion %) per-slice series used for the tuning chart."""
    dice = [(r.slice_index, r.dice) for r in results]
    pct = [(r.slice_index, r.lesion_pct) for r in results]
    return [dice, pct]
