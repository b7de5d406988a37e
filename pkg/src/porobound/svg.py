"""Small deterministic SVG 1.1 writers for region maps, sweeps and laminate sketches."""
from __future__ import annotations

from xml.sax.saxutils import escape

from .laminate import Layer, Leaf, Node, SGCell, average
from .regions import ALL_REGIONS, Region
from .tensor import to_cartesian

REGION_COLORS = {
    Region.A1: "#1f77b4", Region.A2: "#6baed6", Region.B: "#2ca02c", Region.C: "#98df8a",
    Region.D: "#ff7f0e", Region.E: "#d62728",
    Region.A1p: "#9467bd", Region.A2p: "#c5b0d5", Region.Bp: "#8c564b", Region.Cp: "#c49c94",
    Region.Dp: "#e377c2",
}
PHASE_COLORS = {1: "#4c78a8", 2: "#f58518", 3: "#ffffff"}


def _f(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _doc(width: float, height: float, body: list[str]) -> str:
    head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(width)}" '
            f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">\n')
    return head + "\n".join(body) + "\n</svg>\n"


def region_map(rhos: list[float], m1s: list[float], labels: list[list[Region]],
               polylines: dict[str, list[tuple[float, float]]], m1_max: float,
               size: float = 600.0) -> str:
    """Raster of ``labels[i][j]`` (rho index i, m1 index j) with boundary curves on top.

    rho runs left to right over [-1, 1], m1 bottom to top over [0, m1_max].
    """
    pad = 40.0
    w = h = size
    nx, ny = len(rhos), len(m1s)
    cw, ch = w / nx, h / ny

    def X(rho):
        return pad + (rho + 1.0) / 2.0 * w

    def Y(m1):
        return pad + h - m1 / m1_max * h

    body = []
    for i in range(nx):
        j = 0
        while j < ny:
            k = j
            while k + 1 < ny and labels[i][k + 1] is labels[i][j]:
                k += 1
            body.append(f'<rect x="{_f(pad + i * cw)}" y="{_f(pad + h - (k + 1) * ch)}" '
                        f'width="{_f(cw)}" height="{_f((k - j + 1) * ch)}" '
                        f'fill="{REGION_COLORS[labels[i][j]]}" stroke="none"/>')
            j = k + 1
    for name in sorted(polylines):
        pts = " ".join(f"{_f(X(r))},{_f(Y(m))}" for r, m in polylines[name])
        body.append(f'<polyline points="{pts}" fill="none" stroke="#000000" stroke-width="1">'
                    f"<title>{escape(name)}</title></polyline>")
    body.append(f'<rect x="{_f(pad)}" y="{_f(pad)}" width="{_f(w)}" height="{_f(h)}" '
                'fill="none" stroke="#000000"/>')
    body.append(f'<text x="{_f(pad + w / 2)}" y="{_f(pad + h + 28)}" text-anchor="middle" '
                'font-size="14">rho</text>')
    body.append(f'<text x="12" y="{_f(pad + h / 2)}" font-size="14">m1</text>')
    present = {lab for col in labels for lab in col}
    ly = pad
    for reg in ALL_REGIONS:
        if reg in present:
            body.append(f'<rect x="{_f(pad + w + 10)}" y="{_f(ly)}" width="12" height="12" '
                        f'fill="{REGION_COLORS[reg]}"/>')
            body.append(f'<text x="{_f(pad + w + 28)}" y="{_f(ly + 11)}" font-size="12">'
                        f"{escape(str(reg))}</text>")
            ly += 18
    return _doc(w + 2 * pad + 60, h + 2 * pad, body)


def sweep_plot(rows: list[dict], series: tuple[str, ...] = ("K_star", "L_star", "K_HS", "L_HS"),
               width: float = 640.0, height: float = 400.0) -> str:
    """Line plot of the chosen columns against rho; missing values break the line."""
    pad = 48.0
    vals = [r[k] for r in rows for k in series if r.get(k) is not None]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0

    def X(rho):
        return pad + (rho + 1.0) / 2.0 * width

    def Y(v):
        return pad + height - (v - lo) / (hi - lo) * height

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")
    body = [f'<rect x="{_f(pad)}" y="{_f(pad)}" width="{_f(width)}" height="{_f(height)}" '
            'fill="none" stroke="#000000"/>']
    for n, key in enumerate(series):
        runs, cur = [], []
        for r in rows:
            if r.get(key) is None:
                if cur:
                    runs.append(cur)
                cur = []
            else:
                cur.append(f"{_f(X(r['rho']))},{_f(Y(r[key]))}")
        if cur:
            runs.append(cur)
        for run in runs:
            body.append(f'<polyline points="{" ".join(run)}" fill="none" '
                        f'stroke="{colors[n % len(colors)]}" stroke-width="1.5"/>')
        body.append(f'<text x="{_f(pad + width + 8)}" y="{_f(pad + 14 + 16 * n)}" font-size="12" '
                    f'fill="{colors[n % len(colors)]}">{escape(key)}</text>')
    body.append(f'<text x="{_f(pad)}" y="{_f(pad + height + 20)}" font-size="12">-1</text>')
    body.append(f'<text x="{_f(pad + width)}" y="{_f(pad + height + 20)}" font-size="12" '
                'text-anchor="end">1</text>')
    body.append(f'<text x="{_f(pad - 6)}" y="{_f(pad + 4)}" font-size="12" text-anchor="end">{_f(hi)}</text>')
    body.append(f'<text x="{_f(pad - 6)}" y="{_f(pad + height)}" font-size="12" '
                f'text-anchor="end">{_f(lo)}</text>')
    return _doc(width + 2 * pad + 60, height + 2 * pad, body)


def _sketch(node: Node, x: float, y: float, w: float, h: float, out: list[str], depth: int) -> None:
    if isinstance(node, Leaf):
        s11, s22, _ = to_cartesian(node.stress)
        out.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                   f'fill="{PHASE_COLORS[node.phase]}" stroke="#333333" stroke-width="0.5">'
                   f"<title>phase {node.phase}: s11={s11:.6g} s22={s22:.6g}</title></rect>")
        return
    # normal e1 stacks layers along x, normal e2 along y; nested levels are drawn finer
    if node.normal == "e1":
        wa = w * node.fraction
        _sketch(node.a, x, y, wa, h, out, depth + 1)
        _sketch(node.b, x + wa, y, w - wa, h, out, depth + 1)
    else:
        ha = h * node.fraction
        _sketch(node.a, x, y, w, ha, out, depth + 1)
        _sketch(node.b, x, y + ha, w, h - ha, out, depth + 1)


def laminate_sketch(structure: Node | SGCell, size: float = 400.0) -> str:
    """Nested-rectangle picture: each layer node splits its box across its normal."""
    out: list[str] = []
    if isinstance(structure, SGCell):
        b1, b2 = structure.beta1, structure.beta2
        (_, p2), (_, hs), (_, vs), (_, void) = structure.parts()
        _sketch(p2, 0, size * (1 - b2), size * b1, size * b2, out, 0)
        _sketch(hs, size * b1, size * (1 - b2), size * (1 - b1), size * b2, out, 0)
        _sketch(vs, 0, 0, size * b1, size * (1 - b2), out, 0)
        _sketch(void, size * b1, 0, size * (1 - b1), size * (1 - b2), out, 0)
    else:
        _sketch(structure, 0, 0, size, size, out, 0)
        s11, s22, _ = to_cartesian(average(structure))
        out.append(f"<title>average s11={s11:.6g} s22={s22:.6g}</title>")
    return _doc(size, size, out)
