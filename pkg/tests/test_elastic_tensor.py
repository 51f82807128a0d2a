import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from cellhom import elastic_tensor as et
from cellhom.elastic_tensor import E_MAT, HOMOGENEOUS_D, IsotropicModuli, VoigtMatrix
from cellhom.errors import DefinitenessError, DomainError, SingularMatrixError, SymmetryError

pos = st.floats(min_value=0.05, max_value=20.0)


def test_moduli_plane_strain_example():
    m = et.moduli_from_engineering(1.0, 0.3, "plane_strain")
    assert m.K == pytest.approx(1 / (2 * 1.3 * 0.4), rel=1e-14)
    assert m.G == pytest.approx(1 / 2.6, rel=1e-14)
    assert m.K == pytest.approx(0.961538, abs=1e-6)


@pytest.mark.parametrize("model", ["plane_strain", "plane_stress"])
def test_moduli_zero_poisson(model):
    m = et.moduli_from_engineering(1.0, 0.0, model)
    assert (m.K, m.G) == pytest.approx((0.5, 0.5))


def test_moduli_plane_stress_example():
    m = et.moduli_from_engineering(2.0, 0.25, "plane_stress")
    assert m.K == pytest.approx(4 / 3)
    assert m.G == pytest.approx(0.8)


def test_companion_moduli():
    m = IsotropicModuli(1.0, 0.6)
    assert m.bulk_3d == pytest.approx(0.8)
    mu, lam = m.lame
    assert (mu, lam) == pytest.approx((0.6, 0.4))


@pytest.mark.parametrize("E, nu, model", [(1.0, 0.5, "plane_strain"), (1.0, -1.0, "plane_stress"),
                                          (0.0, 0.3, "plane_strain"), (1.0, 1.0, "plane_stress")])
def test_moduli_domain_errors(E, nu, model):
    with pytest.raises(DomainError):
        et.moduli_from_engineering(E, nu, model)


def test_invalid_moduli():
    with pytest.raises(DomainError):
        IsotropicModuli(0.0, 1.0)
    with pytest.raises(DomainError):
        IsotropicModuli(1.0, -1.0)


def test_isotropic_stiffness_examples():
    np.testing.assert_allclose(et.isotropic_stiffness(IsotropicModuli(0.5, 0.5)).array, np.diag([1, 1, 0.5]))
    np.testing.assert_allclose(et.isotropic_stiffness(IsotropicModuli(1, 0.5)).array,
                               [[1.5, 0.5, 0], [0.5, 1.5, 0], [0, 0, 0.5]])
    np.testing.assert_allclose(et.invert(et.isotropic_stiffness(IsotropicModuli(0.5, 0.5))).array,
                               np.diag([1, 1, 2]))


def test_invert_examples():
    np.testing.assert_allclose(et.invert(np.eye(3)).array, np.eye(3))
    np.testing.assert_allclose(et.invert(np.diag([2, 2, 4])).array, np.diag([0.5, 0.5, 0.25]))
    m = IsotropicModuli(1, 0.5)
    np.testing.assert_allclose(et.invert(m.stiffness()).array, m.compliance(), rtol=1e-14)


def test_invert_singular_carries_det():
    with pytest.raises(SingularMatrixError) as info:
        et.invert([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert info.value.det == pytest.approx(0.0, abs=1e-15)


@given(pos, pos)
def test_compliance_closed_form(K, G):
    m = IsotropicModuli(K, G)
    C = et.invert(et.isotropic_stiffness(m))
    s = 1 / K + 1 / G
    np.testing.assert_allclose([C[1], C[4], C[2], C[6]], [s / 4, s / 4, s / 4 - 1 / (2 * G), 1 / G], rtol=1e-12)
    assert C[3] == pytest.approx(0, abs=1e-12 * s) and C[5] == pytest.approx(0, abs=1e-12 * s)


@settings(max_examples=50)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_invert_roundtrip(vals):
    a = np.reshape(vals, (3, 3))
    M = a @ a.T + 0.3 * np.eye(3)
    back = et.invert(et.invert(M)).array
    np.testing.assert_allclose(back, M, rtol=1e-9, atol=1e-9 * np.abs(M).max())


def test_positive_definite_examples():
    assert et.is_positive_definite(np.eye(3))
    assert not et.is_positive_definite([[1, 2, 0], [2, 1, 0], [0, 0, 1]])
    assert not et.is_positive_definite(E_MAT)


def test_classify_examples():
    assert et.classify_symmetry(et.isotropic_stiffness(IsotropicModuli(1, 0.5))) == "isotropic"
    assert et.classify_symmetry([[2, 1, 0], [1, 2, 0], [0, 0, 0.3]]) == "square"
    assert et.classify_symmetry([[2, 1, 0.1], [1, 2, 0], [0.1, 0, 0.3]], tol=1e-6) == "triclinic"
    assert et.classify_symmetry([[2, 1, 0], [1, 3, 0], [0, 0, 0.3]]) == "orthotropic"
    compliance = IsotropicModuli(1, 0.5).compliance()
    assert et.classify_symmetry(compliance, form="compliance") == "isotropic"


def test_voigt_matrix_accessors():
    M = VoigtMatrix((1, 2, 3, 4, 5, 6))
    np.testing.assert_array_equal(M.array, [[1, 2, 3], [2, 4, 5], [3, 5, 6]])
    assert M[6] == 6
    with pytest.raises(SymmetryError):
        VoigtMatrix.from_array([[1, 2, 0], [0, 1, 0], [0, 0, 1]], sym_tol=1e-8)


def test_decomposition_against_symbolic_oracle():
    K, G = sp.symbols("K G", positive=True)
    D = sp.Matrix(3, 3, lambda i, j: sp.Symbol(f"d{min(i, j)}{max(i, j)}"))
    E = sp.Matrix([[0, -sp.Rational(1, 2), 0], [-sp.Rational(1, 2), 0, 0], [0, 0, 1]])
    C = (1 / K + 1 / G) * D + E / G
    # homogeneous case: D solving C = local compliance
    s = 1 / K + 1 / G
    local = sp.Matrix([[s / 4, s / 4 - 1 / (2 * G), 0], [s / 4 - 1 / (2 * G), s / 4, 0], [0, 0, 1 / G]])
    sol = sp.solve(list(C - local), list(D.free_symbols - {K, G}), dict=True)[0]
    Dh = np.array(D.subs(sol), dtype=float)
    np.testing.assert_allclose(Dh, HOMOGENEOUS_D.array, atol=1e-15)
    for m in (IsotropicModuli(0.5, 0.5), IsotropicModuli(3.0, 0.2)):
        np.testing.assert_allclose(et.extract_D(m.compliance(), m).array, Dh, atol=1e-14)


def test_extract_D_table1_column():
    # published effective stiffness at nu = 0.3 and the published D values
    B = np.array([[0.970, 0.382, 0], [0.382, 1.034, 0], [0, 0, 0.268]])
    m = et.moduli_from_engineering(1.0, 0.3)
    D = et.extract_D(et.invert(B), m)
    assert D[1] == pytest.approx(0.331, abs=2e-3)
    assert D[2] == pytest.approx(0.235, abs=2e-3)
    assert D[4] == pytest.approx(0.311, abs=2e-3)
    # three-digit rounding of B6 moves D6 by a few thousandths
    assert D[6] == pytest.approx(0.308, abs=4e-3)


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), pos, pos)
def test_extract_reconstruct_roundtrip(entries, K, G):
    m = IsotropicModuli(K, G)
    D = et.GeometricModulus(VoigtMatrix(tuple(entries)))
    back = et.extract_D(et.reconstruct_Cstar(D, m), m)
    np.testing.assert_allclose(back.array, D.array, atol=1e-12 * (1 + K / G + G / K))


def test_tensor_components():
    d = et.GeometricModulus(VoigtMatrix((0.3, 0.2, 0.1, 0.35, 0.05, 0.25))).tensor_components()
    assert d == pytest.approx({"d1111": 1.2, "d2222": 1.4, "d1122": 0.8, "d1112": 0.2, "d2212": 0.1, "d1212": 0.25})


def test_inequalities_homogeneous_boundary_cases():
    rep = et.check_d_inequalities(HOMOGENEOUS_D)
    assert rep.ok
    assert "d1111 - 2 d1122 + d2222 >= 0" in rep.at_equality()
    assert "d1212 >= 0" in rep.at_equality()


def test_inequalities_table2_and_violation():
    D = VoigtMatrix((0.33123, 0.23466, 0.0, 0.31078, 0.0, 0.30835))
    rep = et.check_d_inequalities(D)
    assert rep.ok
    assert not any("4 d1112" in k or "4 d2212" in k for k in rep.at_equality())
    bad = et.check_d_inequalities(VoigtMatrix((-0.1, 0.0, 0.0, 0.3, 0.0, 0.2)))
    assert "d1111 > 0" in bad.violations


def test_vigdergauz_homogeneous():
    for m in (IsotropicModuli(0.5, 0.5), IsotropicModuli(2.0, 0.3)):
        assert et.vigdergauz_constants(m.compliance(), m) == pytest.approx((0, 0, 0), abs=1e-12)


def test_vigdergauz_example_frozen():
    # frozen after a symbolic solve of the three square-symmetry relations
    m = IsotropicModuli(0.5, 0.5)
    D = VoigtMatrix((0.3, 0.2, 0.0, 0.3, 0.0, 0.25))
    A = et.vigdergauz_constants(et.reconstruct_Cstar(D, m), m)
    assert A == pytest.approx((0.0, 0.2, 0.25), abs=1e-14)


def test_vigdergauz_errors():
    m = IsotropicModuli(0.5, 0.5)
    with pytest.raises(SymmetryError):
        et.vigdergauz_constants([[1, 0.2, 0], [0.2, 2, 0], [0, 0, 1]], m)
    with pytest.raises(DefinitenessError):
        et.vigdergauz_constants([[1, 2, 0], [2, 1, 0], [0, 0, 1]], m)


def test_isotropic_effective_case():
    m = IsotropicModuli(1.0, 0.4)
    D = VoigtMatrix((0.35, 0.25, 0.0, 0.35, 0.0, 0.2))  # D6 = 2 (D1 - D2)
    A = et.vigdergauz_constants(et.reconstruct_Cstar(D, m), m)
    assert A.A3 == pytest.approx(A.A2, abs=1e-12)


def test_dna_examples():
    np.testing.assert_allclose(et.dna_relations(0, 0, 0).array, HOMOGENEOUS_D.array)
    np.testing.assert_allclose(et.dna_relations(0.2, 0.2, 0.25).array,
                               [[0.35, 0.25, 0], [0.25, 0.35, 0], [0, 0, 0.25]], atol=1e-15)


@given(st.floats(0, 2), st.floats(0, 2), st.floats(0, 2), pos, pos)
def test_dna_vigdergauz_roundtrip(A1, A2, A3, K, G):
    m = IsotropicModuli(K, G)
    C = et.reconstruct_Cstar(et.dna_relations(A1, A2, A3), m)
    assert et.vigdergauz_constants(C, m, tol=1e-6) == pytest.approx((A1, A2, A3), abs=1e-10)


def test_dna_table2_roundtrip():
    m = IsotropicModuli(0.5, 0.5)
    D = VoigtMatrix((0.33123, 0.23466, 0.0, 0.33123, 0.0, 0.30835))
    A = et.vigdergauz_constants(et.reconstruct_Cstar(D, m), m)
    np.testing.assert_allclose(et.dna_relations(*A).array, D.array, atol=1e-12)


def test_clm_shift_examples():
    assert et.clm_shift(IsotropicModuli(1, 1), 0.0) == IsotropicModuli(1, 1)
    s = et.clm_shift(IsotropicModuli(1, 1), 0.5)
    assert (s.K, s.G) == pytest.approx((2 / 3, 2))
    for rho in (-1.0, 1.0, 5.0):
        with pytest.raises(DomainError):
            et.clm_shift(IsotropicModuli(1, 1), rho)


@given(pos, pos, st.floats(-0.99, 0.99))
def test_clm_shift_invariant(K, G, frac):
    m = IsotropicModuli(K, G)
    rho = frac / K if frac < 0 else frac / G
    s = et.clm_shift(m, rho)
    assert s.compliance_sum == pytest.approx(m.compliance_sum, rel=1e-12)
    # the shift changes the local compliance by -rho E
    np.testing.assert_allclose(s.compliance() - m.compliance(), -rho * E_MAT,
                               atol=1e-9 * m.compliance_sum)


def test_gradients_trivial():
    m = IsotropicModuli(0.7, 1.3)
    g = et.effective_gradients(0, 0, 0, m)
    np.testing.assert_allclose(g.K_star, [1, 0], atol=1e-15)
    np.testing.assert_allclose(g.G_star, [0, 1], atol=1e-15)


def test_gradient_example_frozen():
    # frozen after symbolic differentiation: (30/49, 5/49)
    g = et.effective_gradients(0.2, 0.0, 0.0, IsotropicModuli(1, 1))
    np.testing.assert_allclose(g.K_star, [30 / 49, 5 / 49], rtol=1e-14)


@settings(max_examples=30)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0.2, 5), st.floats(0.2, 5))
def test_gradients_match_finite_differences(A1, A2, A3, K, G):
    def moduli(K, G):
        s = 1 / K + 1 / G
        return np.array([1 / (1 / K + A1 * s), 1 / (1 / G + A2 * s), 1 / (1 / G + A3 * s)])

    h = 1e-5
    fdK = (moduli(K * (1 + h), G) - moduli(K * (1 - h), G)) / (2 * h * K)
    fdG = (moduli(K, G * (1 + h)) - moduli(K, G * (1 - h))) / (2 * h * G)
    g = et.effective_gradients(A1, A2, A3, IsotropicModuli(K, G))
    exact = np.array([g.K_star, g.G_star, g.G45_star])
    np.testing.assert_allclose(exact, np.column_stack([fdK, fdG]), rtol=1e-6, atol=1e-9)
    assert np.all(exact >= 0)
