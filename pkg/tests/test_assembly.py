import numpy as np
import pytest
from types import SimpleNamespace

from fosls2d.assembly import (
    ProblemSpec,
    assemble,
    assemble_gram,
    b_form_value,
    boundary_tables,
    discrete_fields,
    dump_system,
    element_tables,
    exact_fields,
    residual_functional,
)
from fosls2d.manufactured import bessel_exact, polynomial_exact
from fosls2d.mesh import DomainBox, build_uniform_mesh
from fosls2d.solve import solve_direct
from fosls2d.space import build_spaces, interpolate_v, interpolate_w

BOX = DomainBox.centered_unit_square()


def zero_problem(k=10.0, sigma=-1):
    zf = lambda p: np.zeros(np.asarray(p).shape[:-1], dtype=complex)
    zg = lambda p, n: np.zeros(np.asarray(p).shape[:-1], dtype=complex)
    return ProblemSpec(k=k, sigma=sigma, f=zf, g=zg)


def interpolant(spaces, exact):
    return np.concatenate(
        [interpolate_v(spaces, exact.phi), interpolate_w(spaces, exact.u)]
    )


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        zero_problem(k=-1.0)
    with pytest.raises(ValueError):
        zero_problem(sigma=2)


def test_zero_data_gives_zero_rhs():
    mesh = build_uniform_mesh(BOX, 2)
    spaces = build_spaces(mesh, 2)
    sys = assemble(mesh, spaces, zero_problem())
    assert np.all(sys.rhs == 0)


def test_hermiticity_reference_configuration():
    mesh = build_uniform_mesh(BOX, 2)
    spaces = build_spaces(mesh, 1)
    sys = assemble(mesh, spaces, zero_problem(k=10.0, sigma=-1))
    H = sys.matrix - sys.matrix.getH()
    assert abs(H).max() <= 1e-12 * abs(sys.matrix).max()


@pytest.mark.parametrize("q,sigma", [(1, 1), (2, -1), (3, -1), (4, 1)])
def test_hermiticity_sweep(q, sigma):
    mesh = build_uniform_mesh(BOX, 2)
    spaces = build_spaces(mesh, q)
    sys = assemble(mesh, spaces, zero_problem(k=7.5, sigma=sigma))
    H = sys.matrix - sys.matrix.getH()
    assert abs(H).max() <= 1e-12 * abs(sys.matrix).max()


@pytest.mark.parametrize("sigma", [1, -1])
def test_consistency_polynomial_solution(sigma):
    """The exact in-space pair satisfies the discrete equations exactly."""
    mesh = build_uniform_mesh(BOX, 2)
    for q in (1, 2, 3, 4):
        spaces = build_spaces(mesh, q)
        exact = polynomial_exact(3.0, sigma)
        sys = assemble(mesh, spaces, ProblemSpec.from_exact(exact))
        c = interpolant(spaces, exact)
        res = np.linalg.norm(sys.matrix @ c - sys.rhs) / np.linalg.norm(sys.rhs)
        assert res < 1e-9


def test_quadratic_form_matches_functional_seminorms():
    """c^H B c equals the quadrature value of the zero-data residual norms."""
    rng = np.random.default_rng(8)
    mesh = build_uniform_mesh(BOX, 2)
    for q in (1, 3):
        spaces = build_spaces(mesh, q)
        prob = zero_problem(k=6.0, sigma=-1)
        sys = assemble(mesh, spaces, prob)
        for _ in range(5):
            c = rng.standard_normal(spaces.n_dof) + 1j * rng.standard_normal(spaces.n_dof)
            quad = residual_functional(sys, c, prob)
            mat = np.vdot(c, sys.matrix @ c).real
            assert abs(quad - mat) <= 1e-9 * abs(mat)


def test_residual_identity_with_data():
    """R(c) = c^H B c - 2 Re(c^H rhs) + ||f/k||^2 + ||g||^2/k."""
    mesh = build_uniform_mesh(BOX, 3)
    spaces = build_spaces(mesh, 2)
    exact = bessel_exact(9.0, -1)
    prob = ProblemSpec.from_exact(exact)
    sys = assemble(mesh, spaces, prob)
    tables = element_tables(mesh, spaces)
    btables = boundary_tables(mesh, spaces)
    fq = exact.f(tables.xq)
    nrm = np.broadcast_to(btables.normals[:, None, :], btables.xq.shape)
    gq = exact.g(btables.xq, nrm)
    const = np.sum(np.abs(fq / prob.k) ** 2 * tables.wq) + np.sum(
        np.abs(gq) ** 2 * btables.wq
    ) / prob.k
    rng = np.random.default_rng(21)
    for _ in range(5):
        c = rng.standard_normal(spaces.n_dof) + 1j * rng.standard_normal(spaces.n_dof)
        lhs = residual_functional(sys, c, prob)
        rhs = np.vdot(c, sys.matrix @ c).real - 2 * np.vdot(c, sys.rhs).real + const
        assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


def test_residual_zero_cases():
    mesh = build_uniform_mesh(BOX, 2)
    spaces = build_spaces(mesh, 1)
    prob = zero_problem(k=4.0)
    sys = assemble(mesh, spaces, prob)
    assert residual_functional(sys, np.zeros(spaces.n_dof, dtype=complex), prob) == 0.0
    rng = np.random.default_rng(2)
    c = rng.standard_normal(spaces.n_dof) + 0j
    assert residual_functional(sys, c, prob) > 0.0


def test_residual_of_in_space_exact_solution_vanishes():
    mesh = build_uniform_mesh(BOX, 2)
    spaces = build_spaces(mesh, 2)
    exact = polynomial_exact(5.0, -1)
    prob = ProblemSpec.from_exact(exact)
    sys = assemble(mesh, spaces, prob)
    c = interpolant(spaces, exact)
    scale = np.sum(np.abs(exact.f(element_tables(mesh, spaces).xq)) ** 2)
    assert residual_functional(sys, c, prob) <= 1e-16 * scale


def test_galerkin_orthogonality_bessel():
    """b(exact - discrete, test) vanishes for all discrete test pairs."""
    mesh = build_uniform_mesh(BOX, 8)
    spaces = build_spaces(mesh, 2)
    exact = bessel_exact(5.0, -1)
    sys = assemble(mesh, spaces, ProblemSpec.from_exact(exact))
    x, _ = solve_direct(sys)
    tables = element_tables(mesh, spaces)
    btables = boundary_tables(mesh, spaces)
    fe = exact_fields(mesh, spaces, exact, tables, btables)
    fh = discrete_fields(mesh, spaces, x, tables, btables)
    err = SimpleNamespace(
        **{k: getattr(fe, k) - getattr(fh, k) for k in ("u", "gu", "phi", "dphi", "ub", "phin")}
    )
    scale_err = np.sqrt(b_form_value(mesh, spaces, err, err, exact.k, exact.sigma).real)
    rng = np.random.default_rng(5)
    for _ in range(10):
        y = rng.standard_normal(spaces.n_dof) + 1j * rng.standard_normal(spaces.n_dof)
        ft = discrete_fields(mesh, spaces, y, tables, btables)
        scale_t = np.sqrt(b_form_value(mesh, spaces, ft, ft, exact.k, exact.sigma).real)
        val = abs(b_form_value(mesh, spaces, err, ft, exact.k, exact.sigma))
        assert val <= 1e-8 * scale_err * scale_t


def test_assembly_determinism():
    mesh = build_uniform_mesh(BOX, 3)
    spaces = build_spaces(mesh, 2)
    exact = bessel_exact(7.0, -1)
    prob = ProblemSpec.from_exact(exact)
    s1 = assemble(mesh, spaces, prob)
    s2 = assemble(mesh, spaces, prob)
    assert np.array_equal(s1.matrix.data, s2.matrix.data)
    assert np.array_equal(s1.matrix.indices, s2.matrix.indices)
    assert np.array_equal(s1.rhs, s2.rhs)


def test_nonfinite_data_rejected():
    mesh = build_uniform_mesh(BOX, 1)
    spaces = build_spaces(mesh, 1)
    bad_f = lambda p: np.full(np.asarray(p).shape[:-1], np.nan, dtype=complex)
    zg = lambda p, n: np.zeros(np.asarray(p).shape[:-1], dtype=complex)
    with pytest.raises(ValueError, match="f"):
        assemble(mesh, spaces, ProblemSpec(k=1.0, sigma=1, f=bad_f, g=zg))


def test_gram_matrix_is_hermitian_pd():
    from fosls2d.solve import CholeskyFactor

    mesh = build_uniform_mesh(BOX, 2)
    spaces = build_spaces(mesh, 2)
    M = assemble_gram(mesh, spaces, 10.0, -1)
    assert abs(M - M.getH()).max() <= 1e-12 * abs(M).max()
    CholeskyFactor(M)  # raises if not positive definite


def test_dump_system(tmp_path):
    mesh = build_uniform_mesh(BOX, 1)
    spaces = build_spaces(mesh, 1)
    exact = polynomial_exact(2.0, 1)
    sys = assemble(mesh, spaces, ProblemSpec.from_exact(exact))
    mpath, rpath = tmp_path / "B.txt", tmp_path / "rhs.txt"
    dump_system(sys, mpath, rpath)
    lines = mpath.read_text().strip().splitlines()
    assert len(lines) == sys.matrix.nnz
    r, c, re, im = lines[0].split()
    int(r), int(c), float(re), float(im)
    rhs_lines = rpath.read_text().strip().splitlines()
    assert len(rhs_lines) == spaces.n_dof
