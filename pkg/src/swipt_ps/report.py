"""Region reports and their CSV, JSON and SVG renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .algorithm import RegionPoint

__all__ = ["CSV_COLUMNS", "RegionReport", "to_csv", "to_json", "from_json", "to_svg"]

CSV_COLUMNS = ("method", "psi", "rate_exact", "rate_constraint", "energy_watts", "iters",
               "converged")


def _fmt(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.9g}"


@dataclass
class RegionReport:
    metadata: dict
    rows: list = field(default_factory=list)

    def methods(self) -> list[str]:
        seen = []
        for row in self.rows:
            if row.method not in seen:
                seen.append(row.method)
        return seen

    def by_method(self, method: str) -> list[RegionPoint]:
        return [r for r in self.rows if r.method == method]


def to_csv(report: RegionReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        writer.writerow([r.method, _fmt(r.psi), _fmt(r.rate_exact), _fmt(r.rate_constraint),
                         _fmt(r.energy), r.outer_iters, "true" if r.converged else "false"])
    return buf.getvalue()


def _num(x):
    return None if x is None or math.isnan(x) else float(x)


def _unnum(x):
    return float("nan") if x is None else float(x)


def _row_dict(r: RegionPoint) -> dict:
    return {
        "method": r.method,
        "psi": _num(r.psi),
        "rate_exact": _num(r.rate_exact),
        "rate_constraint": _num(r.rate_constraint),
        "energy_watts": _num(r.energy),
        "iters": r.outer_iters,
        "converged": r.converged,
        "lambda": None if r.lam is None else [float(v) for v in r.lam],
        "message": r.message,
        "trace": [
            {"iteration": t.iteration, "a": [float(v) for v in t.a],
             "eps": [float(v) for v in t.eps], "sdr_objective": _num(t.sdr_objective),
             "sdr_status": t.sdr_status, "energy": _num(t.energy), "n_feasible": t.n_feasible}
            for t in r.trace
        ],
    }


def to_json(report: RegionReport) -> str:
    doc = {"metadata": report.metadata, "rows": [_row_dict(r) for r in report.rows]}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def from_json(text: str) -> RegionReport:
    from .algorithm import IterRecord

    doc = json.loads(text)
    rows = []
    for d in doc["rows"]:
        trace = [IterRecord(t["iteration"], np.array(t["a"]), np.array(t["eps"]),
                            _unnum(t["sdr_objective"]), t["sdr_status"], _unnum(t["energy"]),
                            t["n_feasible"]) for t in d.get("trace", [])]
        rows.append(RegionPoint(
            psi=_unnum(d["psi"]), rate_exact=_unnum(d["rate_exact"]),
            rate_constraint=_unnum(d["rate_constraint"]), energy=_unnum(d["energy_watts"]),
            lam=None if d["lambda"] is None else np.array(d["lambda"]),
            outer_iters=d["iters"], converged=d["converged"], method=d["method"],
            trace=trace, message=d.get("message", "")))
    return RegionReport(doc["metadata"], rows)


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------

_STYLE = {
    "ps": ("#1f77b4", ""),
    "oracle": ("#000000", "4 3"),
    "as-hull": ("#d62728", ""),
    "multichain": ("#2ca02c", "6 2 2 2"),
}
_LABEL = {
    "ps": "power splitting (algorithm)",
    "oracle": "power splitting (grid search)",
    "as-hull": "antenna switching (time sharing)",
    "multichain": "one chain per antenna",
}
W, H, PAD_L, PAD_R, PAD_T, PAD_B = 640, 440, 70, 20, 20, 60


def _nice_ticks(hi: float, n: int = 5) -> list[float]:
    if hi <= 0:
        return [0.0]
    step = 10 ** math.floor(math.log10(hi / n))
    for mult in (1, 2, 2.5, 5, 10):
        if hi / (step * mult) <= n:
            step *= mult
            break
    return [i * step for i in range(int(math.floor(hi / step + 1e-9)) + 1)]


def to_svg(report: RegionReport, title: str = "rate-energy region") -> str:
    """Render each method's boundary as a polyline (rate on x, energy on y).

    Algorithm and grid-search rows are placed at their rate demand, baseline
    rows at their exact rate. Discrete antenna-switching points become dots.
    """
    series = {}
    for m in report.methods():
        pts = []
        for r in report.by_method(m):
            x = r.psi if m in ("ps", "oracle", "multichain") else r.rate_exact
            if not (math.isnan(x) or math.isnan(r.energy)):
                pts.append((x, r.energy))
        series[m] = sorted(pts)
    all_pts = [p for pts in series.values() for p in pts]
    xmax = max([p[0] for p in all_pts] + [1e-9]) * 1.05
    ymax = max([p[1] for p in all_pts] + [1e-9]) * 1.05

    def sx(x):
        return PAD_L + (W - PAD_L - PAD_R) * x / xmax

    def sy(y):
        return H - PAD_B - (H - PAD_T - PAD_B) * y / ymax

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f"<title>{escape(title)}</title>",
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
           f'<line x1="{PAD_L}" y1="{H - PAD_B}" x2="{W - PAD_R}" y2="{H - PAD_B}" stroke="#000"/>',
           f'<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{H - PAD_B}" stroke="#000"/>']
    for t in _nice_ticks(xmax):
        out.append(f'<line x1="{sx(t):.2f}" y1="{H - PAD_B}" x2="{sx(t):.2f}" '
                   f'y2="{H - PAD_B + 5}" stroke="#000"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{H - PAD_B + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(ymax):
        out.append(f'<line x1="{PAD_L - 5}" y1="{sy(t):.2f}" x2="{PAD_L}" y2="{sy(t):.2f}" '
                   f'stroke="#000"/>')
        out.append(f'<text x="{PAD_L - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{(PAD_L + W - PAD_R) / 2:.1f}" y="{H - 15}" '
               f'text-anchor="middle">rate [bits/channel use]</text>')
    out.append(f'<text x="18" y="{(PAD_T + H - PAD_B) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(PAD_T + H - PAD_B) / 2:.1f})">energy [W]</text>')

    legend_y = PAD_T + 12
    for m, pts in series.items():
        if not pts:
            continue
        if m == "as":
            for x, y in pts:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3.5" fill="none" '
                           f'stroke="#d62728"/>')
            continue
        color, dash = _STYLE.get(m, ("#7f7f7f", ""))
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline data-method="{escape(m)}" points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="1.8"{dash_attr}/>')
        lx = W - PAD_R - 230
        out.append(f'<line x1="{lx}" y1="{legend_y - 4}" x2="{lx + 24}" y2="{legend_y - 4}" '
                   f'stroke="{color}" stroke-width="1.8"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{legend_y}">{escape(_LABEL.get(m, m))}</text>')
        legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"
