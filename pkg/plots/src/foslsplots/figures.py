"""Figure regeneration from solver CSV output.

Everything here re-plots numbers that already live in CSV files written by
the solver harness; nothing is recomputed.  Each figure writes a sidecar
JSON next to the image with the exact numeric series drawn, so results are
auditable without image diffing.

Expected CSV contracts:

    results.csv   k,p_plus_1,n,h,kh_over_p,ndof,rel_err_u,rel_err_phi,residual,iters,time_s,status
    trace.csv     x,re_u,im_u,re_u_exact,im_u_exact
    surface.csv   x,y,re_u,im_u,re_u_exact,im_u_exact
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "plot_loglog", "plot_pollution", "plot_surface", "plot_trace"]

KINDS = ("loglog", "pollution", "surface", "trace")


@dataclass
class FigureSpec:
    """What to plot: input CSV, figure kind, slope annotations, output path."""

    csv_path: str
    kind: str
    out_path: str
    #: reference-slope exponents for the (u, phi) panels of the loglog figure
    ref_exponents: tuple = (2.0, 1.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not all(math.isfinite(e) for e in self.ref_exponents):
            raise ValueError("reference slope exponents must be finite")


def _read_csv(path, required):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ValueError(f"CSV {path} is missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"CSV {path} has no data rows")
    return rows


def _ok_rows(rows):
    return [r for r in rows if r.get("status", "ok") == "ok"]


def _sidecar(spec, payload):
    path = spec.out_path + ".json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _series_by_order(rows, xcol, ycol):
    series = {}
    for r in rows:
        q = int(r["p_plus_1"])
        series.setdefault(q, []).append((float(r[xcol]), float(r[ycol])))
    for q in series:
        series[q].sort()
    return series


def _fit_slope(points):
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def plot_loglog(spec: FigureSpec) -> str:
    """Error-versus-h panels with dotted reference slopes.

    Left panel: scalar error with an O(h^s_u) dotted guide; right panel:
    flux error with O(h^s_phi); one series per polynomial order, labeled
    RT1P1..RT4P4.
    """
    rows = _ok_rows(_read_csv(spec.csv_path, ["p_plus_1", "h", "rel_err_u", "rel_err_phi"]))
    if not rows:
        raise ValueError(f"CSV {spec.csv_path} has no successful rows")
    panels = [("rel_err_u", "relative error of u", spec.ref_exponents[0]),
              ("rel_err_phi", "relative error of phi", spec.ref_exponents[1])]
    fig, axes = plt.subplots(1, 2, figsize=(10.5, 4.4))
    meta = {"kind": "loglog", "csv": spec.csv_path, "panels": {}}
    for ax, (col, title, slope) in zip(axes, panels):
        series = _series_by_order(rows, "h", col)
        panel_meta = {"series": {}, "reference_slope": slope, "fitted_slopes": {}}
        for q in sorted(series):
            pts = series[q]
            ax.loglog(*zip(*pts), marker="o", label=f"RT{q}P{q}")
            panel_meta["series"][f"RT{q}P{q}"] = pts
            panel_meta["fitted_slopes"][f"RT{q}P{q}"] = _fit_slope(pts)
        # a single dotted guide line, parallel for every order, anchored at
        # the coarsest point of the lowest-order series
        q0 = min(series)
        x0, y0 = series[q0][-1]
        hs = np.array(sorted({p[0] for pts in series.values() for p in pts}))
        ax.loglog(hs, y0 * (hs / x0) ** slope, "k:", label=f"O(h^{slope:g})")
        panel_meta["reference_anchor"] = [x0, y0]
        ax.set_xlabel("h")
        ax.set_title(title)
        ax.legend(fontsize=8)
        meta["panels"][col] = panel_meta
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return _sidecar(spec, meta)


def plot_pollution(spec: FigureSpec) -> str:
    """Error-versus-wavenumber panels at a fixed mesh condition.

    The sidecar records, per order, whether the error grows monotonically
    with k (the pollution signature for low orders).
    """
    rows = _ok_rows(_read_csv(spec.csv_path, ["k", "p_plus_1", "rel_err_u", "rel_err_phi"]))
    if not rows:
        raise ValueError(f"CSV {spec.csv_path} has no successful rows")
    fig, axes = plt.subplots(1, 2, figsize=(10.5, 4.4))
    meta = {"kind": "pollution", "csv": spec.csv_path, "panels": {}}
    for ax, col, title in zip(axes, ("rel_err_u", "rel_err_phi"),
                              ("relative error of u", "relative error of phi")):
        series = _series_by_order(rows, "k", col)
        panel_meta = {"series": {}, "monotone_increasing": {}}
        for q in sorted(series):
            pts = series[q]
            ax.loglog(*zip(*pts), marker="s", label=f"RT{q}P{q}")
            ys = [p[1] for p in pts]
            panel_meta["series"][f"RT{q}P{q}"] = pts
            panel_meta["monotone_increasing"][f"RT{q}P{q}"] = bool(
                all(a < b for a, b in zip(ys, ys[1:]))
            )
        ax.set_xlabel("k")
        ax.set_title(title)
        ax.legend(fontsize=8)
        meta["panels"][col] = panel_meta
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return _sidecar(spec, meta)


def plot_surface(spec: FigureSpec) -> str:
    """Surface plot of Im(u_h) over the square from grid samples."""
    rows = _read_csv(spec.csv_path, ["x", "y", "im_u"])
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    z = np.array([float(r["im_u"]) for r in rows])
    m = int(round(math.sqrt(len(rows))))
    if m * m != len(rows):
        raise ValueError(f"surface CSV rows ({len(rows)}) do not form a square grid")
    X, Y, Z = (a.reshape(m, m) for a in (x, y, z))
    fig = plt.figure(figsize=(6.0, 4.8))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(X, Y, Z, cmap="viridis", linewidth=0, antialiased=True)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("Im(u_h)")
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    meta = {
        "kind": "surface",
        "csv": spec.csv_path,
        "grid": m,
        "extent": [float(x.min()), float(x.max()), float(y.min()), float(y.max())],
        "im_u_min": float(z.min()),
        "im_u_max": float(z.max()),
    }
    return _sidecar(spec, meta)


def plot_trace(spec: FigureSpec) -> str:
    """Overlay of the discrete and exact Im(u) along a line.

    The exact curve is drawn as a separate green line; the sidecar reports
    the maximum pointwise gap between the two curves.
    """
    rows = _read_csv(spec.csv_path, ["x", "im_u", "im_u_exact"])
    x = np.array([float(r["x"]) for r in rows])
    uh = np.array([float(r["im_u"]) for r in rows])
    ue = np.array([float(r["im_u_exact"]) for r in rows])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(x, uh, "b-", lw=1.0, label="Im(u_h)")
    ax.plot(x, ue, "g-", lw=1.0, label="Im(u) exact")
    ax.set_xlabel("x")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    meta = {
        "kind": "trace",
        "csv": spec.csv_path,
        "x": x.tolist(),
        "im_u": uh.tolist(),
        "im_u_exact": ue.tolist(),
        "max_gap": float(np.abs(uh - ue).max()),
    }
    return _sidecar(spec, meta)


PLOTTERS = {
    "loglog": plot_loglog,
    "pollution": plot_pollution,
    "surface": plot_surface,
    "trace": plot_trace,
}
