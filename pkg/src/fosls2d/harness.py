"""Experiment drivers and command-line front end.

Subcommands: ``solve``, ``convergence``, ``pollution``, ``trace``,
``surface``, ``coercivity``, ``selftest``.  Each reads a strict JSON
config (unknown keys are rejected by name), writes CSV results plus a
metadata JSON (config hash, code version, timings) into the output
directory, and is bitwise reproducible except for the ``time_s`` column.

CSV contract for solve/convergence/pollution rows:

    k,p_plus_1,n,h,kh_over_p,ndof,rel_err_u,rel_err_phi,residual,iters,time_s,status

Trace/surface sample files carry ``x[,y],re_u,im_u,re_u_exact,im_u_exact``;
the coercivity scan writes ``k,p_plus_1,n,h,ndof,lambda_min,time_s,status``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .assembly import ProblemSpec, assemble, residual_functional
from .estimator import FoslsHelmholtz
from .manufactured import bessel_exact, polynomial_exact
from .mesh import DomainBox, build_uniform_mesh, mesh_for_condition
from .metrics import compute_errors, coercivity_probe, sample_grid, sample_trace
from .solve import solve_system
from .space import build_spaces

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "emit_csv",
    "emit_meta",
    "run_solve",
    "run_convergence",
    "run_pollution",
    "run_trace",
    "run_surface",
    "run_coercivity",
    "main",
]

RESULT_COLUMNS = [
    "k", "p_plus_1", "n", "h", "kh_over_p", "ndof",
    "rel_err_u", "rel_err_phi", "residual", "iters", "time_s", "status",
]
COERCIVITY_COLUMNS = ["k", "p_plus_1", "n", "h", "ndof", "lambda_min", "time_s", "status"]

#: default resource cap; --override-caps lifts it
MAX_DOFS = 500_000


class ConfigError(ValueError):
    pass


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


@dataclass
class RunConfig:
    """Validated experiment configuration."""

    experiment: str | None = None
    k: object = 10.0
    p_plus_1: object = 1
    n: object = None
    ratio: float | None = None
    sigma: int = -1
    benchmark: str = "bessel"
    solver: str = "auto"
    tol: float = 1e-10
    maxit: int = 10_000
    trace_y: float = 0.0
    samples: int = 1024
    grid_samples: int = 64
    max_dofs: int = MAX_DOFS
    max_cells_per_side: int = 4096
    out: str | None = None

    def k_list(self):
        return [float(v) for v in _as_list(self.k)]

    def p_list(self):
        return [int(v) for v in _as_list(self.p_plus_1)]

    def n_list(self):
        return None if self.n is None else [int(v) for v in _as_list(self.n)]

    def exact(self, k: float):
        maker = bessel_exact if self.benchmark == "bessel" else polynomial_exact
        return maker(k, self.sigma)

    def validate(self):
        ks = self.k_list()
        if not ks or any(v <= 0 for v in ks):
            raise ConfigError("config key 'k' must be positive (or a nonempty list)")
        ps = self.p_list()
        if not ps or any(not 1 <= v <= 4 for v in ps):
            raise ConfigError("config key 'p_plus_1' must lie in 1..4")
        ns = self.n_list()
        if ns is not None and (not ns or any(v < 1 for v in ns)):
            raise ConfigError("config key 'n' must be >= 1 (or a nonempty list)")
        if self.ratio is not None and self.ratio <= 0:
            raise ConfigError("config key 'ratio' must be positive")
        if self.n is None and self.ratio is None:
            raise ConfigError("one of config keys 'n' or 'ratio' is required")
        if self.sigma not in (-1, 1):
            raise ConfigError("config key 'sigma' must be -1 or +1")
        if self.benchmark not in ("bessel", "polynomial"):
            raise ConfigError("config key 'benchmark' must be 'bessel' or 'polynomial'")
        if self.solver not in ("auto", "direct", "cg"):
            raise ConfigError("config key 'solver' must be 'auto', 'direct' or 'cg'")
        if self.tol <= 0:
            raise ConfigError("config key 'tol' must be positive")
        for key in ("maxit", "samples", "grid_samples", "max_dofs", "max_cells_per_side"):
            if int(getattr(self, key)) < 1:
                raise ConfigError(f"config key '{key}' must be >= 1")
        return self


def load_config(path) -> RunConfig:
    """Strict JSON config parse: unknown keys are an error, named."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")
    cfg = RunConfig(**raw)
    return cfg.validate()


def config_dict(cfg: RunConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(RunConfig)}


def config_hash(cfg: RunConfig) -> str:
    canon = json.dumps(config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):  # includes numpy scalars; repr round-trips
        return repr(float(value))
    return str(value)


def emit_csv(rows, path, columns=None):
    """Write rows (dicts) in the stable column order; floats via repr."""
    columns = columns or RESULT_COLUMNS
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])


def emit_meta(meta: dict, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- single solve ----------------------------------------------------------------


def _estimated_ndof(n: int, q: int) -> int:
    nt = 2 * n * n
    ne = 3 * n * n + 2 * n
    nv = (n + 1) ** 2
    n_v = ne * (q + 1) + nt * q * (q + 1)
    n_w = nv + ne * (q - 1) + nt * (q - 1) * (q - 2) // 2
    return n_v + n_w


def _choose_n(cfg: RunConfig, k: float, q: int, n: int | None) -> int:
    if n is not None:
        return n
    box = DomainBox.centered_unit_square()
    return mesh_for_condition(box, k, q, cfg.ratio, cfg.max_cells_per_side).n


def run_single(cfg: RunConfig, k: float, q: int, n: int | None, override_caps=False) -> dict:
    """One solve -> one result row.  Failures land in the status column."""
    row = {c: None for c in RESULT_COLUMNS}
    row.update(k=k, p_plus_1=q, status="ok")
    start = time.perf_counter()
    try:
        n = _choose_n(cfg, k, q, n)
        row["n"] = n
        ndof = _estimated_ndof(n, q)
        if ndof > cfg.max_dofs and not override_caps:
            row["status"] = f"skipped: {ndof} DOFs above cap {cfg.max_dofs}"
            return row
        exact = cfg.exact(k)
        est = FoslsHelmholtz(
            k=k, order=q, n=n, sigma=cfg.sigma, solver=cfg.solver,
            tol=cfg.tol, maxit=cfg.maxit, max_cells_per_side=cfg.max_cells_per_side,
        ).fit(exact)
        report = est.error_report(exact)
        row.update(
            h=report.h,
            kh_over_p=report.kh_over_p,
            ndof=report.ndof,
            rel_err_u=report.rel_err_u,
            rel_err_phi=report.rel_err_phi,
            residual=report.fosls_residual,
            iters=est.report_.iterations,
        )
    except Exception as exc:  # keep sweeping; the row records the failure
        row["status"] = "error: " + str(exc).replace(",", ";").replace("\n", " ")
    row["time_s"] = time.perf_counter() - start
    return row


# -- experiments -------------------------------------------------------------------


def run_solve(cfg: RunConfig, out_dir, override_caps=False):
    ks, ps = cfg.k_list(), cfg.p_list()
    ns = cfg.n_list() or [None]
    if len(ks) != 1 or len(ps) != 1 or len(ns) != 1:
        raise ConfigError("solve expects scalar 'k', 'p_plus_1' and 'n' (or 'ratio')")
    rows = [run_single(cfg, ks[0], ps[0], ns[0], override_caps)]
    emit_csv(rows, out_dir / "results.csv")
    return rows, {}


def run_convergence(cfg: RunConfig, out_dir, override_caps=False):
    """Fixed-k refinement sweep over (p_plus_1, n) with observed orders."""
    ks = cfg.k_list()
    if len(ks) != 1:
        raise ConfigError("convergence expects a single 'k'")
    ns = cfg.n_list()
    if not ns or len(ns) < 2:
        raise ConfigError("convergence expects a list 'n' with at least two entries")
    k = ks[0]
    rows, orders = [], []
    for q in cfg.p_list():
        series = [run_single(cfg, k, q, n, override_caps) for n in ns]
        rows.extend(series)
        for a, b in zip(series, series[1:]):
            if a["status"] != "ok" or b["status"] != "ok":
                continue
            ratio = np.log(a["h"] / b["h"])
            orders.append(
                {
                    "p_plus_1": q,
                    "n_coarse": a["n"],
                    "n_fine": b["n"],
                    "order_u": float(np.log(a["rel_err_u"] / b["rel_err_u"]) / ratio),
                    "order_phi": float(np.log(a["rel_err_phi"] / b["rel_err_phi"]) / ratio),
                }
            )
    emit_csv(rows, out_dir / "results.csv")
    return rows, {"observed_orders": orders}


def run_pollution(cfg: RunConfig, out_dir, override_caps=False):
    """Wave-number scan at fixed kh/p: the pollution experiment."""
    if cfg.ratio is None:
        raise ConfigError("pollution expects config key 'ratio'")
    rows = []
    for q in cfg.p_list():
        for k in cfg.k_list():
            rows.append(run_single(cfg, k, q, None, override_caps))
    emit_csv(rows, out_dir / "results.csv")
    return rows, {}


def _sampled_run(cfg: RunConfig, out_dir, override_caps, kind):
    ks, ps = cfg.k_list(), cfg.p_list()
    ns = cfg.n_list() or [None]
    if len(ks) != 1 or len(ps) != 1 or len(ns) != 1:
        raise ConfigError(f"{kind} expects scalar 'k', 'p_plus_1' and 'n' (or 'ratio')")
    k, q = ks[0], ps[0]
    n = _choose_n(cfg, k, q, ns[0])
    ndof = _estimated_ndof(n, q)
    if ndof > cfg.max_dofs and not override_caps:
        raise ConfigError(
            f"{kind} configuration needs {ndof} DOFs, above cap {cfg.max_dofs}; "
            "pass --override-caps to run it anyway"
        )
    exact = cfg.exact(k)
    est = FoslsHelmholtz(
        k=k, order=q, n=n, sigma=cfg.sigma, solver=cfg.solver,
        tol=cfg.tol, maxit=cfg.maxit, max_cells_per_side=cfg.max_cells_per_side,
    ).fit(exact)
    rows = [run_single(cfg, k, q, n, override_caps)]
    emit_csv(rows, out_dir / "results.csv")

    if kind == "trace":
        samples = sample_trace(est.mesh_, est.spaces_, est.coeff_, cfg.trace_y, cfg.samples)
        pts = np.stack([samples[:, 0], np.full(len(samples), cfg.trace_y)], axis=1)
        ue = exact.u(pts)
        header = ["x", "re_u", "im_u", "re_u_exact", "im_u_exact"]
        data = np.column_stack([samples, ue.real, ue.imag])
        name = "trace.csv"
    else:
        samples = sample_grid(est.mesh_, est.spaces_, est.coeff_, cfg.grid_samples)
        ue = exact.u(samples[:, :2])
        header = ["x", "y", "re_u", "im_u", "re_u_exact", "im_u_exact"]
        data = np.column_stack([samples, ue.real, ue.imag])
        name = "surface.csv"
    with open(out_dir / name, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for line in data:
            writer.writerow([repr(float(v)) for v in line])
    return rows, {"samples_file": name, "sample_count": len(data)}


def run_trace(cfg, out_dir, override_caps=False):
    return _sampled_run(cfg, out_dir, override_caps, "trace")


def run_surface(cfg, out_dir, override_caps=False):
    return _sampled_run(cfg, out_dir, override_caps, "surface")


def run_coercivity(cfg: RunConfig, out_dir, override_caps=False):
    """Smallest pencil eigenvalue scan over the wave numbers."""
    ps = cfg.p_list()
    if len(ps) != 1:
        raise ConfigError("coercivity expects a single 'p_plus_1'")
    q = ps[0]
    box = DomainBox.centered_unit_square()
    rows = []
    for k in cfg.k_list():
        row = {c: None for c in COERCIVITY_COLUMNS}
        row.update(k=k, p_plus_1=q, status="ok")
        start = time.perf_counter()
        try:
            n = _choose_n(cfg, k, q, None if cfg.n is None else cfg.n_list()[0])
            mesh = build_uniform_mesh(box, n)
            spaces = build_spaces(mesh, q)
            cap = cfg.max_dofs if not override_caps else 10 * cfg.max_dofs
            lam = coercivity_probe(mesh, spaces, k, cfg.sigma, max_dofs=cap)
            row.update(n=n, h=mesh.h, ndof=spaces.n_dof, lambda_min=lam)
        except Exception as exc:
            row["status"] = "error: " + str(exc).replace(",", ";").replace("\n", " ")
        row["time_s"] = time.perf_counter() - start
        rows.append(row)
    emit_csv(rows, out_dir / "coercivity.csv", COERCIVITY_COLUMNS)
    return rows, {}


def run_selftest(out_dir=None):
    """Fast built-in sanity checks; returns the number of failures."""
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"[selftest] {name}: {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    from .manufactured import bessel_j0, bessel_j1

    check("J0(0) = 1", abs(bessel_j0(0.0) - 1.0) < 1e-15)
    check("J1(0) = 0", abs(bessel_j1(0.0)) < 1e-15)

    box = DomainBox.centered_unit_square()
    mesh = build_uniform_mesh(box, 2)
    check("mesh tiling", abs(mesh.areas().sum() - box.area) < 1e-12)
    spaces = build_spaces(mesh, 1)
    exact = polynomial_exact(3.0, 1)
    system = assemble(mesh, spaces, ProblemSpec.from_exact(exact))
    H = system.matrix - system.matrix.getH()
    check("Hermitian matrix", abs(H).max() <= 1e-12 * abs(system.matrix).max())
    coeff, _ = solve_system(system, "direct")
    report = compute_errors(mesh, spaces, coeff, exact)
    check("in-space exactness", report.rel_err_u < 1e-8 and report.rel_err_phi < 1e-8)
    check("zero residual", residual_functional(system, coeff, ProblemSpec.from_exact(exact)) < 1e-16)
    return failures


# -- CLI ---------------------------------------------------------------------------

_EXPERIMENTS = {
    "solve": run_solve,
    "convergence": run_convergence,
    "pollution": run_pollution,
    "trace": run_trace,
    "surface": run_surface,
    "coercivity": run_coercivity,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fosls2d",
        description="Least-squares Helmholtz solver: experiments and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*_EXPERIMENTS, "selftest"):
        p = sub.add_parser(name)
        if name != "selftest":
            p.add_argument("--config", required=True, help="JSON config path")
            p.add_argument("--out", default=None, help="output directory")
            p.add_argument(
                "--override-caps",
                action="store_true",
                help="lift the DOF resource cap for this run",
            )
    args = parser.parse_args(argv)

    if args.command == "selftest":
        return 1 if run_selftest() else 0

    from pathlib import Path

    try:
        cfg = load_config(args.config)
        if cfg.experiment is not None and cfg.experiment != args.command:
            raise ConfigError(
                f"config is for experiment '{cfg.experiment}', not '{args.command}'"
            )
        out_dir = Path(args.out or cfg.out or "out")
        out_dir.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        rows, extra = _EXPERIMENTS[args.command](cfg, out_dir, args.override_caps)
        meta = {
            "experiment": args.command,
            "config": config_dict(cfg),
            "config_sha256": config_hash(cfg),
            "version": __version__,
            "rows": len(rows),
            "wall_time_s": time.perf_counter() - start,
            **extra,
        }
        emit_meta(meta, out_dir / "meta.json")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    bad = [r for r in rows if r.get("status") not in ("ok",) and "skipped" not in str(r.get("status"))]
    print(f"{args.command}: {len(rows)} rows -> {out_dir}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
