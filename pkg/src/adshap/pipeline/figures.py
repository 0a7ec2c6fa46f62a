"""Dendrogram leaf ordering and SVG heatmaps for similarity matrices."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

_TIE = 1e-12
# viridis anchors, low -> high
_RAMP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)


def cluster_order(S) -> list[int]:
    """Leaf order of average-linkage clustering on ``1 - S``.

    Ties merge the pair whose smallest member indices are lowest, and the
    cluster holding the smaller index is placed first, so identical rows keep
    their input order.
    """
    values = np.asarray(getattr(S, "values", S), dtype=float)
    m = values.shape[0]
    D = 1.0 - values
    clusters = [[i] for i in range(m)]
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                dist = D[np.ix_(clusters[a], clusters[b])].mean()
                key = (min(clusters[a]), min(clusters[b]))
                if best is None or dist < best[0] - _TIE or (abs(dist - best[0]) <= _TIE and key < best[1]):
                    best = (dist, key, a, b)
        _, _, a, b = best
        left, right = sorted((clusters[a], clusters[b]), key=min)
        clusters = [c for i, c in enumerate(clusters) if i not in (a, b)] + [left + right]
        clusters.sort(key=min)
    return clusters[0]


def _color(t):
    t = min(1.0, max(0.0, t)) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    rgb = _RAMP[i] + (t - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def emit_heatmap(S, order, path, title=None) -> Path:
    """Write an ``m x m`` colour grid with labels and a printed value range."""
    values = np.asarray(getattr(S, "values", S), dtype=float)
    labels = list(getattr(S, "model_ids", [str(i) for i in range(values.shape[0])]))
    order = list(order)
    if sorted(order) != list(range(values.shape[0])):
        raise ValueError(f"order {order} is not a permutation of {values.shape[0]} models")
    if title is None:
        title = f"{getattr(S, 'kind', '')} {getattr(S, 'dataset_id', '')}".strip()
    V = values[np.ix_(order, order)]
    names = [labels[i] for i in order]
    lo, hi = float(V.min()), float(V.max())
    span = hi - lo

    cell, margin_l, margin_t = 44, 90, 110
    m = len(order)
    width = margin_l + m * cell + 20
    height = margin_t + m * cell + 50
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{margin_l}" y="20" font-size="14">{escape(title)}</text>',
    ]
    for i, name in enumerate(names):
        y = margin_t + i * cell + cell / 2 + 4
        x = margin_l + i * cell + cell / 2
        out.append(f'<text x="{margin_l - 6}" y="{y:.1f}" text-anchor="end">{escape(name)}</text>')
        out.append(f'<text x="{x:.1f}" y="{margin_t - 6}" transform="rotate(-60 {x:.1f} {margin_t - 6})">{escape(name)}</text>')
    for i in range(m):
        for j in range(m):
            t = (V[i, j] - lo) / span if span > 0 else 1.0
            x, y = margin_l + j * cell, margin_t + i * cell
            ink = "#000000" if t > 0.6 else "#ffffff"
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_color(t)}"/>')
            out.append(f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" text-anchor="middle" fill="{ink}" font-size="10">{V[i, j]:.2f}</text>')
    out.append(f'<text x="{margin_l}" y="{margin_t + m * cell + 25}">scale: min {lo:.4f} ({_color(0.0)}) to max {hi:.4f} ({_color(1.0)}), linear</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
