import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

from foslsplots.cli import main
from foslsplots.figures import (
    FigureSpec,
    plot_loglog,
    plot_pollution,
    plot_surface,
    plot_trace,
)

RESULT_COLUMNS = [
    "k", "p_plus_1", "n", "h", "kh_over_p", "ndof",
    "rel_err_u", "rel_err_phi", "residual", "iters", "time_s", "status",
]


def write_results_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def synthetic_row(k, q, n, err_u, err_phi, status="ok"):
    h = np.sqrt(2) / n
    return {
        "k": k, "p_plus_1": q, "n": n, "h": repr(float(h)), "kh_over_p": repr(float(k * h / q)),
        "ndof": 100, "rel_err_u": repr(float(err_u)), "rel_err_phi": repr(float(err_phi)),
        "residual": 0.0, "iters": 0, "time_s": 0.1, "status": status,
    }


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        FigureSpec(csv_path="x.csv", kind="pie", out_path="x.png")
    with pytest.raises(ValueError):
        FigureSpec(csv_path="x.csv", kind="loglog", out_path="x.png",
                   ref_exponents=(float("inf"), 1.0))


def test_loglog_synthetic_slope_two(tmp_path):
    """A 2-row series with exact slope 2 fits slope 2 in the sidecar."""
    csv_path = tmp_path / "conv.csv"
    write_results_csv(
        csv_path,
        [synthetic_row(5.0, 1, 4, 1e-1, 2e-1), synthetic_row(5.0, 1, 8, 2.5e-2, 1e-1)],
    )
    out = tmp_path / "fig1.png"
    spec = FigureSpec(str(csv_path), "loglog", str(out))
    sidecar = plot_loglog(spec)
    assert out.exists()
    meta = json.loads(open(sidecar).read())
    fitted = meta["panels"]["rel_err_u"]["fitted_slopes"]["RT1P1"]
    assert fitted == pytest.approx(2.0, abs=1e-12)
    assert meta["panels"]["rel_err_u"]["reference_slope"] == 2.0
    # the series in the sidecar is exactly the CSV content
    assert meta["panels"]["rel_err_u"]["series"]["RT1P1"] == [
        [pytest.approx(np.sqrt(2) / 8), pytest.approx(2.5e-2)],
        [pytest.approx(np.sqrt(2) / 4), pytest.approx(1e-1)],
    ]


def test_loglog_empty_csv_errors(tmp_path):
    csv_path = tmp_path / "empty.csv"
    write_results_csv(csv_path, [])
    with pytest.raises(ValueError, match="no data rows"):
        plot_loglog(FigureSpec(str(csv_path), "loglog", str(tmp_path / "f.png")))


def test_missing_columns_named(tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("k,p_plus_1\n1.0,1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="rel_err_u"):
        plot_loglog(FigureSpec(str(csv_path), "loglog", str(tmp_path / "f.png")))


def test_loglog_skips_failed_rows(tmp_path):
    csv_path = tmp_path / "conv.csv"
    write_results_csv(
        csv_path,
        [
            synthetic_row(5.0, 1, 4, 1e-1, 2e-1),
            synthetic_row(5.0, 1, 8, 2.5e-2, 1e-1),
            synthetic_row(5.0, 1, 16, 1.0, 1.0, status="error: solver blew up"),
        ],
    )
    sidecar = plot_loglog(FigureSpec(str(csv_path), "loglog", str(tmp_path / "f.png")))
    meta = json.loads(open(sidecar).read())
    assert len(meta["panels"]["rel_err_u"]["series"]["RT1P1"]) == 2


def test_pollution_monotonicity_flags(tmp_path):
    """Increasing errors for order 1, flat for order 4: flags match."""
    csv_path = tmp_path / "poll.csv"
    rows = []
    for k, e in [(10.0, 0.2), (20.0, 0.5), (40.0, 0.8)]:
        rows.append(synthetic_row(k, 1, int(np.sqrt(2) * k / 0.5) + 1, e, e))
    for k in (10.0, 20.0, 40.0):
        rows.append(synthetic_row(k, 4, int(np.sqrt(2) * k / 2.0) + 1, 1e-4, 1e-4))
    write_results_csv(csv_path, rows)
    out = tmp_path / "fig2.png"
    sidecar = plot_pollution(FigureSpec(str(csv_path), "pollution", str(out)))
    assert out.exists()
    meta = json.loads(open(sidecar).read())
    flags = meta["panels"]["rel_err_u"]["monotone_increasing"]
    assert flags["RT1P1"] is True
    assert flags["RT4P4"] is False


def write_trace_csv(path, x, uh, ue):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "re_u", "im_u", "re_u_exact", "im_u_exact"])
        for xi, a, b in zip(x, uh, ue):
            writer.writerow([repr(float(xi)), 0.0, repr(float(a)), 0.0, repr(float(b))])


def test_trace_coincident_curves_zero_gap(tmp_path):
    x = np.linspace(-0.5, 0.5, 33)
    u = np.sin(2 * np.pi * x)
    csv_path = tmp_path / "trace.csv"
    write_trace_csv(csv_path, x, u, u)
    out = tmp_path / "fig4.png"
    sidecar = plot_trace(FigureSpec(str(csv_path), "trace", str(out)))
    assert out.exists()
    meta = json.loads(open(sidecar).read())
    assert meta["max_gap"] == 0.0
    assert meta["im_u"] == meta["im_u_exact"]


def test_trace_gap_reported(tmp_path):
    x = np.linspace(-0.5, 0.5, 17)
    csv_path = tmp_path / "trace.csv"
    write_trace_csv(csv_path, x, np.zeros_like(x), np.full_like(x, 0.25))
    sidecar = plot_trace(FigureSpec(str(csv_path), "trace", str(tmp_path / "f.png")))
    meta = json.loads(open(sidecar).read())
    assert meta["max_gap"] == pytest.approx(0.25)


def test_surface_grid_extent(tmp_path):
    m = 64
    xs = np.linspace(-0.5, 0.5, m)
    csv_path = tmp_path / "surface.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "re_u", "im_u", "re_u_exact", "im_u_exact"])
        for y in xs:
            for x in xs:
                writer.writerow([repr(float(x)), repr(float(y)), 0.0, repr(float(np.sin(x) * y)), 0.0, 0.0])
    out = tmp_path / "fig3.png"
    sidecar = plot_surface(FigureSpec(str(csv_path), "surface", str(out)))
    assert out.exists()
    meta = json.loads(open(sidecar).read())
    assert meta["grid"] == 64
    assert meta["extent"] == [-0.5, 0.5, -0.5, 0.5]


def test_surface_rejects_ragged_grid(tmp_path):
    csv_path = tmp_path / "surface.csv"
    csv_path.write_text("x,y,im_u\n0,0,1\n1,0,2\n0,1,3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="square grid"):
        plot_surface(FigureSpec(str(csv_path), "surface", str(tmp_path / "f.png")))


def test_cli_roundtrip(tmp_path):
    csv_path = tmp_path / "conv.csv"
    write_results_csv(
        csv_path,
        [synthetic_row(5.0, 2, 4, 1e-2, 2e-2), synthetic_row(5.0, 2, 8, 1.25e-3, 5e-3)],
    )
    out = tmp_path / "fig.png"
    rc = main(["loglog", "--csv", str(csv_path), "--out", str(out)])
    assert rc == 0
    assert out.exists() and (tmp_path / "fig.png.json").exists()
    rc = main(["loglog", "--csv", str(tmp_path / "missing.csv"), "--out", str(out)])
    assert rc == 2


@pytest.mark.skipif(shutil.which("fosls2d") is None, reason="solver CLI not installed")
def test_end_to_end_with_solver_cli(tmp_path):
    """Full pipeline: the solver harness produces CSVs, this package plots
    them; the sidecar series must match the CSV exactly."""
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {"experiment": "convergence", "k": 5.0, "p_plus_1": [1, 2], "n": [4, 8], "sigma": -1}
        ),
        encoding="utf-8",
    )
    out = tmp_path / "run"
    subprocess.run(
        ["fosls2d", "convergence", "--config", str(cfg), "--out", str(out)], check=True
    )
    fig = tmp_path / "fig1.png"
    rc = main(["loglog", "--csv", str(out / "results.csv"), "--out", str(fig)])
    assert rc == 0
    meta = json.loads((tmp_path / "fig1.png.json").read_text())
    with open(out / "results.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for q in (1, 2):
        expected = sorted(
            (float(r["h"]), float(r["rel_err_u"])) for r in rows if int(r["p_plus_1"]) == q
        )
        got = [tuple(p) for p in meta["panels"]["rel_err_u"]["series"][f"RT{q}P{q}"]]
        assert got == expected


@pytest.mark.skipif(shutil.which("fosls2d") is None, reason="solver CLI not installed")
def test_end_to_end_pollution_figure(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {"experiment": "pollution", "k": [5.0, 10.0], "p_plus_1": [1, 2],
             "ratio": 0.5, "sigma": -1}
        ),
        encoding="utf-8",
    )
    out = tmp_path / "run"
    subprocess.run(
        ["fosls2d", "pollution", "--config", str(cfg), "--out", str(out)], check=True
    )
    fig = tmp_path / "fig2.png"
    rc = main(["pollution", "--csv", str(out / "results.csv"), "--out", str(fig)])
    assert rc == 0
    meta = json.loads((tmp_path / "fig2.png.json").read_text())
    with open(out / "results.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for q in (1, 2):
        expected = sorted(
            (float(r["k"]), float(r["rel_err_u"])) for r in rows if int(r["p_plus_1"]) == q
        )
        got = [tuple(p) for p in meta["panels"]["rel_err_u"]["series"][f"RT{q}P{q}"]]
        assert got == expected


@pytest.mark.skipif(shutil.which("fosls2d") is None, reason="solver CLI not installed")
def test_end_to_end_trace_overlay(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {"experiment": "trace", "k": 5.0, "p_plus_1": 2, "n": 8, "sigma": -1,
             "trace_y": 0.0, "samples": 128}
        ),
        encoding="utf-8",
    )
    out = tmp_path / "run"
    subprocess.run(
        ["fosls2d", "trace", "--config", str(cfg), "--out", str(out)], check=True
    )
    fig = tmp_path / "fig4.png"
    rc = main(["trace", "--csv", str(out / "trace.csv"), "--out", str(fig)])
    assert rc == 0
    meta = json.loads((tmp_path / "fig4.png.json").read_text())
    assert len(meta["x"]) == 128
    # the discrete solution is accurate at this resolution, so the overlay
    # gap is small but nonzero
    assert 0.0 < meta["max_gap"] < 1e-2
