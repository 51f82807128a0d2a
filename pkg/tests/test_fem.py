import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cellhom.elastic_tensor import IsotropicModuli, moduli_from_engineering
from cellhom.errors import MeshError, SolverError
from cellhom.fem import (CellProblem, MaterialField, SolverOptions, element_stiffness, energy_bilinear,
                         flux_line_integral, pcg, solve_cell, stress_field)
from cellhom.geometry import CellGeometry, clear_line, paper_cell
from cellhom.mesh import generate

HALF = IsotropicModuli(0.5, 0.5)
SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
NU03 = moduli_from_engineering(1.0, 0.3)


@pytest.fixture(scope="module")
def paper16():
    mesh = generate(paper_cell(), 16)
    return mesh, CellProblem(mesh, NU03)


@pytest.fixture(scope="module")
def homog():
    return generate(CellGeometry(2, 1), 8)


def rigid_modes(xy):
    t1 = np.tile([1.0, 0.0], len(xy))
    t2 = np.tile([0.0, 1.0], len(xy))
    rot = np.column_stack([-xy[:, 1], xy[:, 0]]).ravel()
    return t1, t2, rot


@pytest.mark.parametrize("xy", [SQUARE, np.array([[0, 0], [2, 0.2], [1.7, 1.3], [0.1, 0.9]]),
                                np.array([[0, 0], [1, 0.1], [0.3, 0.8]])])
def test_element_kernel_is_rigid(xy):
    k = element_stiffness(xy, IsotropicModuli(1.3, 0.4))
    np.testing.assert_allclose(k, k.T, atol=1e-14)
    for mode in rigid_modes(xy):
        np.testing.assert_allclose(k @ mode, 0, atol=1e-13)
    eig = np.linalg.eigvalsh(k)
    assert np.sum(eig < 1e-10 * eig.max()) == 3
    assert eig.min() > -1e-12


def test_element_affine_energy():
    k = element_stiffness(SQUARE, HALF)
    u = np.column_stack([SQUARE[:, 0], np.zeros(4)]).ravel()
    assert 0.5 * u @ k @ u == pytest.approx(0.5 * (HALF.K + HALF.G))


def test_element_inverted():
    with pytest.raises(MeshError):
        element_stiffness(SQUARE[::-1], HALF)
    with pytest.raises(MeshError):
        element_stiffness(SQUARE[:2], HALF)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(0.1, 5), st.floats(0.1, 5))
def test_patch_test(xi, K, G):
    mesh = generate(CellGeometry(2, 1), 4)
    m = IsotropicModuli(K, G)
    for bc in ("periodic", "dirichlet_affine"):
        sol = solve_cell(mesh, m, xi, bc)
        scale = 1 + np.abs(xi).max()
        assert np.abs(sol.fluctuation).max() <= 1e-10 * scale
        np.testing.assert_allclose(sol.avg_stress, m.stiffness() @ xi, atol=1e-10 * scale * (K + G))


def test_homogeneous_stress_and_energy(homog):
    sol = solve_cell(homog, HALF, (1, 0, 0))
    np.testing.assert_allclose(stress_field(sol, homog, HALF).nodal, np.tile([1.0, 0, 0], (homog.n_nodes, 1)),
                               atol=1e-12)
    assert energy_bilinear(sol, sol, homog, HALF) == pytest.approx(1.0)


def test_homogeneous_flux(homog):
    sol = solve_cell(homog, HALF, (1, 0, 0))
    flux = flux_line_integral(sol, homog, HALF, 2, 0.5)
    np.testing.assert_allclose(flux, [1.0 * homog.l2, 0.0], atol=1e-12)
    assert homog.l1 * flux[0] == pytest.approx(homog.l1 * homog.l2)


def test_pinned_node_and_pairs(paper16):
    mesh, prob = paper16
    xi = np.array([0.3, -0.2, 0.5])
    sol = prob.solve(xi)
    rep = np.arange(mesh.n_nodes)
    rep[mesh.pairs[:, 0]] = mesh.pairs[:, 1]
    assert np.all(sol.fluctuation[rep[0]] == 0)
    X = np.array([[xi[0], xi[2] / 2], [xi[2] / 2, xi[1]]])
    jump = sol.u[mesh.pairs[:, 0]] - sol.u[mesh.pairs[:, 1]]
    np.testing.assert_allclose(jump, mesh.offsets @ X.T, atol=1e-14)


def kkt_oracle(mesh, moduli, xi):
    """Independent dense solve: loop assembly plus Lagrange multipliers."""
    N = mesh.n_nodes
    K = np.zeros((2 * N, 2 * N))
    for conn in list(mesh.quads) + list(mesh.tris):
        dofs = np.column_stack([2 * conn, 2 * conn + 1]).ravel()
        K[np.ix_(dofs, dofs)] += element_stiffness(mesh.nodes[conn], moduli)
    X = np.array([[xi[0], xi[2] / 2], [xi[2] / 2, xi[1]]])
    rows, rhs = [], []
    for (s, m), off in zip(mesh.pairs, mesh.offsets):
        for d in range(2):
            r = np.zeros(2 * N)
            r[2 * s + d], r[2 * m + d] = 1, -1
            rows.append(r)
            rhs.append(X[d] @ off)
    rep = np.arange(N)
    rep[mesh.pairs[:, 0]] = mesh.pairs[:, 1]
    p = rep[0]
    for d in range(2):
        r = np.zeros(2 * N)
        r[2 * p + d] = 1
        rows.append(r)
        rhs.append(X[d] @ mesh.nodes[p])
    C = np.array(rows)
    A = np.block([[K, C.T], [C, np.zeros((len(C), len(C)))]])
    sol = np.linalg.solve(A, np.r_[np.zeros(2 * N), rhs])
    return sol[:2 * N].reshape(-1, 2), K


@pytest.mark.parametrize("method", ["cg", "direct", "dense"])
def test_dense_oracle(method):
    mesh = generate(paper_cell(), 8)
    prob = CellProblem(mesh, NU03, SolverOptions(method))
    for xi in np.eye(3):
        u_ref, K = kkt_oracle(mesh, NU03, xi)
        u = prob.solve(xi).u
        d = (u - u_ref).ravel()
        assert np.sqrt(d @ K @ d) <= 1e-8 * np.sqrt(u_ref.ravel() @ K @ u_ref.ravel())
        np.testing.assert_allclose(prob.K.toarray(), K, atol=1e-13)


def test_reduced_matrix_spd(paper16):
    _, prob = paper16
    for bc in ("periodic", "dirichlet_affine"):
        Kr = prob.reduced(bc)[1].toarray()
        np.testing.assert_allclose(Kr, Kr.T, atol=1e-14)
        assert np.linalg.eigvalsh(Kr).min() > 0


def test_galerkin_identity(paper16):
    mesh, prob = paper16
    sols = prob.solve_many(np.eye(3))
    B = np.column_stack([s.avg_stress for s in sols])
    for i in range(3):
        for j in range(3):
            E = energy_bilinear(sols[i], sols[j], mesh, NU03, prob)
            assert E == pytest.approx(B[i, j], rel=1e-8, abs=1e-12)
    assert energy_bilinear(sols[0], sols[1], mesh, NU03, prob) == pytest.approx(
        energy_bilinear(sols[1], sols[0], mesh, NU03, prob), abs=1e-12)


def test_dirichlet_energy_dominates(paper16):
    mesh, prob = paper16
    rng = np.random.default_rng(3)
    for xi in rng.normal(size=(4, 3)):
        ep = prob.solve(xi).avg_stress @ xi
        ed = prob.solve(xi, "dirichlet_affine").avg_stress @ xi
        assert ed >= ep - 1e-12


def test_paper_b1_fine():
    mesh = generate(paper_cell(), 128)
    sol = solve_cell(mesh, NU03, (1, 0, 0))
    assert sol.avg_stress[0] == pytest.approx(0.970, abs=2e-3)
    assert sol.residual <= 1e-10


def test_line_flux_identities():
    mesh = generate(paper_cell(), 64)
    prob = CellProblem(mesh, NU03)
    Y = mesh.cell_area
    s1 = prob.solve((1, 0, 0))
    f = prob.flux_line_integral(s1, 2, 0.25)
    assert mesh.l1 * f[0] == pytest.approx(Y * s1.avg_stress[0], rel=1e-2)
    s3 = prob.solve((0, 0, 1))
    c = clear_line(paper_cell(), 1, prefer=0.125)
    f = prob.flux_line_integral(s3, 1, c)
    assert mesh.l2 * f[0] == pytest.approx(Y * s3.avg_stress[2], rel=1e-2)


def test_line_through_hole(paper16):
    mesh, prob = paper16
    sol = prob.solve((1, 0, 0))
    with pytest.raises(MeshError):
        prob.flux_line_integral(sol, 2, 1.0)


def test_mesh_mismatch(paper16, homog):
    mesh, prob = paper16
    other = solve_cell(homog, HALF, (1, 0, 0))
    with pytest.raises(MeshError):
        energy_bilinear(other, other, mesh, NU03)
    with pytest.raises(MeshError):
        prob.flux_line_integral(other, 2, 0.25)


def test_region_moduli():
    from cellhom.homog import two_phase_paper_cell
    g = two_phase_paper_cell()
    mesh = generate(g, 16)
    field = MaterialField(HALF, {"ring": IsotropicModuli(1.5, 1.5)})
    K, G = field.element_moduli(mesh)
    assert set(np.unique(K)) == {0.5, 1.5}
    assert not field.is_uniform and MaterialField(HALF).is_uniform


def test_pcg_nonconvergence():
    A = np.diag(np.linspace(1, 1e6, 50))
    with pytest.raises(SolverError) as info:
        pcg(A, np.ones(50), rtol=1e-14, maxiter=1, M_diag=np.ones(50))
    assert len(info.value.residuals) == 2


def test_pcg_solves_spd():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(30, 30))
    A = a @ a.T + 30 * np.eye(30)
    b = rng.normal(size=30)
    x, hist = pcg(A, b, rtol=1e-12, M_diag=np.diag(A))
    np.testing.assert_allclose(A @ x, b, atol=1e-9)
    assert hist[-1] <= 1e-12 * hist[0] * 10


def test_bad_bc_and_method(paper16):
    _, prob = paper16
    with pytest.raises(ValueError):
        prob.solve((1, 0, 0), "neumann")
    with pytest.raises(ValueError):
        SolverOptions("gmres")
