"""Acceptance suite: one test per headline criterion, each printing a
pass/fail line.  Tolerances are pinned here and nowhere else."""

import csv
import json

import numpy as np
import scipy.special

from fosls2d.assembly import ProblemSpec, assemble
from fosls2d.estimator import FoslsHelmholtz
from fosls2d.harness import RESULT_COLUMNS, main
from fosls2d.manufactured import bessel_exact, bessel_j0, bessel_j1, polynomial_exact
from fosls2d.mesh import DomainBox, build_uniform_mesh, mesh_for_condition
from fosls2d.metrics import compute_errors, coercivity_probe
from fosls2d.solve import CholeskyFactor, solve_direct
from fosls2d.space import build_spaces, interpolate_v, interpolate_w

BOX = DomainBox.centered_unit_square()


def _report(name, ok):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, name


def _zero_problem(k, sigma=-1):
    zf = lambda p: np.zeros(np.asarray(p).shape[:-1], dtype=complex)
    zg = lambda p, n: np.zeros(np.asarray(p).shape[:-1], dtype=complex)
    return ProblemSpec(k=k, sigma=sigma, f=zf, g=zg)


def test_hermitian_positive_definite_structure():
    """max |B - B^H| <= 1e-12 max|B| and Cholesky succeeds on the full grid
    of (k, p+1, n) in {1,10,50} x {1,2} x {4,8}."""
    ok = True
    for k in (1.0, 10.0, 50.0):
        for q in (1, 2):
            for n in (4, 8):
                mesh = build_uniform_mesh(BOX, n)
                spaces = build_spaces(mesh, q)
                sys = assemble(mesh, spaces, _zero_problem(k))
                herm = abs(sys.matrix - sys.matrix.getH()).max()
                ok &= herm <= 1e-12 * abs(sys.matrix).max()
                CholeskyFactor(sys.matrix)  # raises if not HPD
    _report("Hermitian positive definite structure", ok)


def test_consistency_exactness():
    """The in-space polynomial solution is reproduced to 1e-8."""
    mesh = build_uniform_mesh(BOX, 2)
    spaces = build_spaces(mesh, 1)
    exact = polynomial_exact(3.0, -1)
    sys = assemble(mesh, spaces, ProblemSpec.from_exact(exact))
    x, _ = solve_direct(sys)
    c = np.concatenate([interpolate_v(spaces, exact.phi), interpolate_w(spaces, exact.u)])
    coeff_err = np.linalg.norm(x - c) / np.linalg.norm(c)
    report = compute_errors(mesh, spaces, x, exact)
    ok = coeff_err <= 1e-8 and report.rel_err_u <= 1e-8 and report.rel_err_phi <= 1e-8
    _report("consistency/exactness (zero-residual minimizer)", ok)


def test_commuting_diagram_and_piola_invariants():
    """Element-level invariants at their module tolerances: DOF duality at
    1e-10, commuting diagram at 1e-10, flux-moment invariance at 1e-12,
    quadrature exactness at 1e-13."""
    import math

    from fosls2d.mesh import AffineMap
    from fosls2d.refelem import (
        REF_EDGE_LENGTHS,
        REF_EDGE_NORMALS,
        REF_EDGE_VERTICES,
        edge_points,
        edge_quadrature,
        rt_basis,
        rt_interpolate,
        shifted_legendre,
        triangle_quadrature,
    )

    ok = True
    # quadrature exactness against the closed-form monomial integrals
    for degree in (2, 6, 10):
        rule = triangle_quadrature(degree)
        for total in range(degree + 1):
            for a in range(total + 1):
                b = total - a
                val = np.sum(rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b)
                exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
                ok &= abs(val - exact) <= 1e-13 * max(1.0, exact)

    # DOF/basis duality
    for q in (1, 2, 3, 4):
        basis = rt_basis(q)
        M = basis._functional_matrix()
        ok &= np.abs(M @ basis._coeff - np.eye(basis.dim)).max() <= 1e-10

    rng = np.random.default_rng(1)

    def random_map():
        while True:
            B = rng.uniform(-1, 1, (2, 2))
            det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
            if det > 0.2:
                inv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]]) / det
                return AffineMap(B=B, b=rng.uniform(-1, 1, 2), detB=det, invB=inv)

    # commuting diagram: div of the canonical interpolant equals the L2
    # projection of the divergence, per element
    def field(p):
        return np.stack(
            [np.sin(p[..., 0] + 2 * p[..., 1]), np.cos(3 * p[..., 0] - p[..., 1])], axis=-1
        )

    def field_div(p):
        return np.cos(p[..., 0] + 2 * p[..., 1]) + np.sin(3 * p[..., 0] - p[..., 1])

    rule = triangle_quadrature(24)
    for q in (1, 2, 3):
        basis = rt_basis(q)
        exps = [(a, t - a) for t in range(q + 1) for a in range(t + 1)]
        V = np.stack(
            [rule.points[:, 0] ** a * rule.points[:, 1] ** b for a, b in exps], axis=1
        )
        G = (V * rule.weights[:, None]).T @ V
        for _ in range(3):
            amap = random_map()
            coeff = rt_interpolate(field, amap, basis)
            div_interp = np.einsum("j,jp->p", coeff, basis.div(rule.points)) / amap.detB
            ref_div = amap.detB * field_div(rule.points @ amap.B.T + amap.b)
            proj = V @ np.linalg.solve(G, (V * rule.weights[:, None]).T @ ref_div) / amap.detB
            err = np.sqrt(np.sum(rule.weights * (div_interp - proj) ** 2) * amap.detB)
            scale = np.abs(ref_div / amap.detB).max()
            ok &= err <= 1e-10 * max(scale, 1.0)

    # Piola flux-moment invariance on random maps
    q = 2
    basis = rt_basis(q)
    erule = edge_quadrature(40)
    t, wt = erule.points, erule.weights
    for _ in range(5):
        amap = random_map()
        coeff = rng.standard_normal(basis.dim)
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]) @ amap.B.T + amap.b
        for e, (i0, i1) in enumerate(REF_EDGE_VERTICES):
            ref_pts = edge_points(e, t)
            vals = np.einsum("j,jpd->pd", coeff, basis.eval(ref_pts))
            ref_flux = vals @ REF_EDGE_NORMALS[e]
            a, b = verts[i0], verts[i1]
            d = b - a
            length = np.hypot(*d)
            n_out = np.array([d[1], -d[0]]) / length
            phys_flux = (vals @ (amap.B.T / amap.detB)) @ n_out
            for m in range(q + 2):
                leg = shifted_legendre(m, t)
                lhs = length * np.sum(wt * leg * phys_flux)
                rhs = REF_EDGE_LENGTHS[e] * np.sum(wt * leg * ref_flux)
                ok &= abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1.0)

    _report("commuting diagram and Piola invariants", ok)


def test_convergence_order_desk_scale():
    """Bessel benchmark at k=5, sigma=-1: the last-interval L2(u) order over
    n in {8,16,32} lies in [p+1.5, p+2.5] and the L2(phi) order is at least
    p+1.5, for p+1 in {1,2}."""
    exact = bessel_exact(5.0, -1)
    ok = True
    details = []
    for q in (1, 2):
        errs_u, errs_phi = [], []
        for n in (8, 16, 32):
            est = FoslsHelmholtz(k=5.0, order=q, n=n, sigma=-1, solver="direct").fit(exact)
            report = est.error_report(exact)
            errs_u.append(report.rel_err_u)
            errs_phi.append(report.rel_err_phi)
        order_u = np.log2(errs_u[-2] / errs_u[-1])
        order_phi = np.log2(errs_phi[-2] / errs_phi[-1])
        lo, hi = (q - 1) + 1.5, (q - 1) + 2.5
        ok &= lo <= order_u <= hi
        ok &= order_phi >= lo
        details.append(f"p+1={q}: order_u={order_u:.2f} order_phi={order_phi:.2f}")
    _report("convergence order at k=5 (" + "; ".join(details) + ")", ok)


def test_pollution_behavior():
    """At kh/p ~ 0.5 the order-1 error grows with k by >= 1.5x from k=10 to
    k=40 while the order-4 error stays below it at every k and below 0.1."""
    errs = {}
    for q in (1, 4):
        for k in (10.0, 20.0, 40.0):
            exact = bessel_exact(k, -1)
            est = FoslsHelmholtz(
                k=k, order=q, n=None, target_ratio=0.5, sigma=-1, solver="direct"
            ).fit(exact)
            errs[q, k] = est.error_report(exact).rel_err_u
    growth = errs[1, 40.0] / errs[1, 10.0]
    ok = growth >= 1.5
    for k in (10.0, 20.0, 40.0):
        ok &= errs[4, k] < errs[1, k]
        ok &= errs[4, k] < 0.1
    _report(
        f"pollution behavior (order-1 growth {growth:.2f}x; "
        f"order-4 max err {max(errs[4, k] for k in (10.0, 20.0, 40.0)):.2e})",
        ok,
    )


def test_coercivity_probe_uniform_in_k():
    """lambda_min > 0 on all probe configurations and varies by less than a
    factor of 5 across k in {10,20,40} at p+1 = 2 with kh/p ~ 0.5."""
    ok = True
    for k in (1.0, 10.0, 40.0):
        mesh = build_uniform_mesh(BOX, 4)
        spaces = build_spaces(mesh, 1)
        ok &= coercivity_probe(mesh, spaces, k, -1) > 0.0
    lams = []
    for k in (10.0, 20.0, 40.0):
        mesh = mesh_for_condition(BOX, k, 2, 0.5)
        spaces = build_spaces(mesh, 2)
        lam = coercivity_probe(mesh, spaces, k, -1)
        ok &= lam > 0.0
        lams.append(lam)
    variation = max(lams) / min(lams)
    ok &= variation < 5.0
    _report(f"coercivity probe (variation factor {variation:.2f} across k)", ok)


def test_bessel_accuracy():
    """Max deviation <= 1e-12 on [0, 500] against the independent oracle and
    the first J0 zero to 1e-10."""
    x = np.linspace(0.0, 500.0, 10_000)
    dev = max(
        np.abs(bessel_j0(x) - scipy.special.j0(x)).max(),
        np.abs(bessel_j1(x) - scipy.special.j1(x)).max(),
    )
    lo, hi = 2.0, 3.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if bessel_j0(lo) * bessel_j0(mid) <= 0:
            hi = mid
        else:
            lo = mid
    zero_err = abs(0.5 * (lo + hi) - 2.404825557695773)
    ok = dev <= 1e-12 and zero_err <= 1e-10
    _report(f"Bessel accuracy (max dev {dev:.2e}, zero err {zero_err:.1e})", ok)


def test_reproducibility(tmp_path):
    """Identical config produces bitwise-identical CSV modulo time_s."""
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {"experiment": "convergence", "k": 5.0, "p_plus_1": [1, 2], "n": [4, 8], "sigma": -1}
        ),
        encoding="utf-8",
    )
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["convergence", "--config", str(cfg_path), "--out", str(out)]) == 0
        with open(out / "results.csv", encoding="utf-8") as fh:
            outs.append(list(csv.reader(fh)))
    idx = RESULT_COLUMNS.index("time_s")
    stripped = [[[v for i, v in enumerate(row) if i != idx] for row in rows] for rows in outs]
    ok = stripped[0] == stripped[1]
    _report("reproducibility (bitwise CSV modulo time_s)", ok)
