"""Planar elasticity tensor algebra in contracted (Voigt) notation.

Conventions used throughout the package:

* stress vector ``(s11, s22, s12)``, strain vector ``(e11, e22, 2*e12)``;
* a stiffness matrix maps strain vectors to stress vectors, a compliance
  matrix is its inverse;
* contracted compliance entries relate to tensor components by
  ``C1 = c1111, C2 = c1122, C3 = 2 c1112, C4 = c2222, C5 = 2 c2212,
  C6 = 4 c1212``.

For a locally isotropic material with planar bulk modulus ``K`` and shear
modulus ``G`` the effective compliance splits as

    C* = (1/K + 1/G) D + (1/G) E_MAT

where ``D`` (the geometric modulus) depends only on the cell geometry.

The tensor-form shift ``e`` is normalised as ``e1122 = -2, e1212 = 1`` so
that ``c1212 * e`` contracts exactly to ``E_MAT / G``. The alternative
reading ``e1212 = -2 e1122 = 1`` (``e1122 = -1/2``) does not reproduce
``E_MAT`` under the contraction above and is not used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DefinitenessError, DomainError, SingularMatrixError, SymmetryError

__all__ = [
    "E_MAT",
    "IsotropicModuli",
    "VoigtMatrix",
    "GeometricModulus",
    "InequalityReport",
    "VigdergauzConstants",
    "EffectiveGradients",
    "moduli_from_engineering",
    "isotropic_stiffness",
    "isotropic_compliance",
    "invert",
    "is_positive_definite",
    "classify_symmetry",
    "extract_D",
    "reconstruct_Cstar",
    "check_d_inequalities",
    "square_effective_moduli",
    "vigdergauz_constants",
    "dna_relations",
    "clm_shift",
    "effective_gradients",
    "HOMOGENEOUS_D",
]

E_MAT = np.array([[0.0, -0.5, 0.0], [-0.5, 0.0, 0.0], [0.0, 0.0, 1.0]])
E_MAT.setflags(write=False)

_SYM_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass(frozen=True)
class IsotropicModuli:
    """Planar bulk modulus ``K`` and shear modulus ``G``."""

    K: float
    G: float

    def __post_init__(self):
        K, G = float(self.K), float(self.G)
        if not (np.isfinite(K) and K > 0):
            raise DomainError(f"planar bulk modulus must satisfy K > 0, got K={K!r}")
        if not (np.isfinite(G) and G > 0):
            raise DomainError(f"shear modulus must satisfy G > 0, got G={G!r}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "G", G)

    @property
    def compliance_sum(self) -> float:
        """``1/K + 1/G``, the factor multiplying ``D``."""
        return 1.0 / self.K + 1.0 / self.G

    @property
    def bulk_3d(self) -> float:
        """Three-dimensional bulk modulus ``k = K - G/3``."""
        return self.K - self.G / 3.0

    @property
    def lame(self) -> tuple[float, float]:
        """Lamé pair ``(mu, lambda) = (G, K - G)``."""
        return self.G, self.K - self.G

    @property
    def c1111(self) -> float:
        return 0.25 * self.compliance_sum

    @property
    def c1212(self) -> float:
        return 0.25 / self.G

    def stiffness(self) -> np.ndarray:
        return isotropic_stiffness(self).array

    def compliance(self) -> np.ndarray:
        return isotropic_compliance(self).array


def moduli_from_engineering(E: float, nu: float, model: str = "plane_strain") -> IsotropicModuli:
    """Convert Young's modulus and Poisson's ratio to ``(K, G)``.

    ``model`` is ``"plane_stress"`` or ``"plane_strain"``; ``G = E / (2(1+nu))``
    in both cases.
    """
    if not (np.isfinite(E) and E > 0):
        raise DomainError(f"Young modulus must satisfy E > 0, got E={E!r}")
    if model == "plane_stress":
        if not -1.0 < nu < 1.0:
            raise DomainError(f"plane stress requires -1 < nu < 1, got nu={nu!r}")
        K = E / (2.0 * (1.0 - nu))
    elif model == "plane_strain":
        if not -1.0 < nu < 0.5:
            raise DomainError(f"plane strain requires -1 < nu < 1/2, got nu={nu!r}")
        K = E / (2.0 * (1.0 + nu) * (1.0 - 2.0 * nu))
    else:
        raise DomainError(f"unknown planar model {model!r}; expected 'plane_stress' or 'plane_strain'")
    return IsotropicModuli(K, E / (2.0 * (1.0 + nu)))


@dataclass(frozen=True)
class VoigtMatrix:
    """Symmetric 3x3 matrix stored by its six independent entries.

    Entry order is ``(M1, M2, M3, M4, M5, M6)`` for
    ``[[M1, M2, M3], [M2, M4, M5], [M3, M5, M6]]``.
    """

    entries: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        e = tuple(float(x) for x in self.entries)
        if len(e) != 6:
            raise ValueError(f"a VoigtMatrix needs 6 entries, got {len(e)}")
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_array(cls, a, sym_tol: float | None = None) -> "VoigtMatrix":
        """Build from a 3x3 array, averaging the off-diagonal pairs.

        With ``sym_tol`` set, an asymmetry larger than ``sym_tol * max|a|``
        raises :class:`SymmetryError`.
        """
        a = np.asarray(a, dtype=float)
        if a.shape != (3, 3):
            raise ValueError(f"expected a 3x3 array, got shape {a.shape}")
        if sym_tol is not None:
            scale = max(np.abs(a).max(), np.finfo(float).tiny)
            asym = np.abs(a - a.T).max()
            if asym > sym_tol * scale:
                raise SymmetryError(f"matrix asymmetry {asym:.3e} exceeds {sym_tol:g} relative")
        s = 0.5 * (a + a.T)
        return cls(tuple(s[i, j] for i, j in _SYM_INDEX))

    @property
    def array(self) -> np.ndarray:
        m1, m2, m3, m4, m5, m6 = self.entries
        return np.array([[m1, m2, m3], [m2, m4, m5], [m3, m5, m6]])

    def __getitem__(self, k: int) -> float:
        """One-based contracted index, ``M[1] .. M[6]``."""
        if not 1 <= k <= 6:
            raise IndexError("contracted indices run from 1 to 6")
        return self.entries[k - 1]

    def __array__(self, dtype=None, copy=None):
        a = self.array
        return a if dtype is None else a.astype(dtype)

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def __add__(self, other):
        return VoigtMatrix.from_array(self.array + _as_array(other))

    def __sub__(self, other):
        return VoigtMatrix.from_array(self.array - _as_array(other))

    def __mul__(self, s):
        return VoigtMatrix(tuple(s * x for x in self.entries))

    __rmul__ = __mul__


def _as_array(M) -> np.ndarray:
    if isinstance(M, VoigtMatrix):
        return M.array
    if isinstance(M, GeometricModulus):
        return M.D.array
    a = np.asarray(M, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {a.shape}")
    return a


def _as_voigt(M) -> VoigtMatrix:
    if isinstance(M, VoigtMatrix):
        return M
    return VoigtMatrix.from_array(_as_array(M))


HOMOGENEOUS_D = VoigtMatrix((0.25, 0.25, 0.0, 0.25, 0.0, 0.0))


def isotropic_stiffness(m: IsotropicModuli) -> VoigtMatrix:
    K, G = m.K, m.G
    return VoigtMatrix((K + G, K - G, 0.0, K + G, 0.0, G))


def isotropic_compliance(m: IsotropicModuli) -> VoigtMatrix:
    """Closed-form inverse of :func:`isotropic_stiffness`."""
    c1 = 0.25 * m.compliance_sum
    return VoigtMatrix((c1, c1 - 0.5 / m.G, 0.0, c1, 0.0, 1.0 / m.G))


def invert(M, tol: float = 1e-12) -> VoigtMatrix:
    """Exact inverse of a symmetric 3x3 matrix via the adjugate.

    Raises :class:`SingularMatrixError` when ``|det| <= tol * ||M||_F**3``.
    """
    a = _as_array(M)
    a = 0.5 * (a + a.T)
    adj = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = a[r[0], c[0]] * a[r[1], c[1]] - a[r[0], c[1]] * a[r[1], c[0]]
            adj[i, j] = (-1) ** (i + j) * minor
    det = float(a[0] @ adj[:, 0])
    scale = float(np.linalg.norm(a)) ** 3
    if not np.isfinite(det) or abs(det) <= tol * scale:
        raise SingularMatrixError(det)
    return VoigtMatrix.from_array(adj / det)


def is_positive_definite(M, tol: float = 1e-12) -> bool:
    """Sylvester test: every leading principal minor exceeds ``tol * ||M||**k``."""
    a = _as_array(M)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return False
    minors = (a[0, 0], a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0], np.linalg.det(a))
    return all(mk > tol * scale ** (k + 1) for k, mk in enumerate(minors))


def classify_symmetry(M, tol: float = 1e-8, form: str = "stiffness") -> str:
    """Most specific of ``isotropic``, ``square``, ``orthotropic``, ``triclinic``.

    Equalities are tested to ``tol`` relative to the largest entry. The
    isotropy test depends on ``form``: ``M1 = M2 + 2 M6`` for a stiffness
    matrix, ``M6 = 2 (M1 - M2)`` for a compliance matrix.
    """
    v = _as_voigt(M)
    m1, m2, m3, m4, m5, m6 = v.entries
    scale = max(abs(x) for x in v.entries) or 1.0
    eps = tol * scale
    ortho = abs(m3) <= eps and abs(m5) <= eps
    if not ortho:
        return "triclinic"
    if abs(m1 - m4) > eps:
        return "orthotropic"
    m1 = 0.5 * (m1 + m4)
    if form == "stiffness":
        iso = abs(m1 - m2 - 2.0 * m6) <= eps
    elif form == "compliance":
        iso = abs(m6 - 2.0 * (m1 - m2)) <= eps
    else:
        raise ValueError(f"form must be 'stiffness' or 'compliance', got {form!r}")
    return "isotropic" if iso else "square"


@dataclass(frozen=True)
class GeometricModulus:
    """The moduli-independent matrix ``D`` of the compliance decomposition."""

    D: VoigtMatrix

    def __post_init__(self):
        object.__setattr__(self, "D", _as_voigt(self.D))

    @property
    def array(self) -> np.ndarray:
        return self.D.array

    def __getitem__(self, k: int) -> float:
        return self.D[k]

    def tensor_components(self) -> dict[str, float]:
        """Tensor-form components ``d_ijkl`` (``d1111 = 4 D1`` etc.)."""
        D1, D2, D3, D4, D5, D6 = self.D.entries
        return {
            "d1111": 4.0 * D1,
            "d2222": 4.0 * D4,
            "d1122": 4.0 * D2,
            "d1112": 2.0 * D3,
            "d2212": 2.0 * D5,
            "d1212": D6,
        }


def extract_D(C_star, m: IsotropicModuli) -> GeometricModulus:
    """``D = KG/(K+G) * (C* - E_MAT/G)``."""
    C = _as_array(C_star)
    return GeometricModulus(VoigtMatrix.from_array((C - E_MAT / m.G) / m.compliance_sum))


def reconstruct_Cstar(D, m: IsotropicModuli) -> VoigtMatrix:
    """``C* = (1/K + 1/G) D + E_MAT / G``."""
    return VoigtMatrix.from_array(m.compliance_sum * _as_array(D) + E_MAT / m.G)


@dataclass
class InequalityReport:
    """Margins of the sign conditions on ``d``; positive means satisfied."""

    margins: dict[str, float]
    strict: dict[str, bool]
    tol: float
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def at_equality(self) -> list[str]:
        return [k for k, v in self.margins.items() if abs(v) <= self.tol]


def check_d_inequalities(D, tol: float = 1e-10) -> InequalityReport:
    """Evaluate the positivity conditions on ``d`` implied by a positive
    definite effective tensor, plus ``D >= 0`` and ``D + E_MAT >= 0``.

    Strict conditions need ``margin > tol``, the others ``margin >= -tol``.
    """
    gm = D if isinstance(D, GeometricModulus) else GeometricModulus(_as_voigt(D))
    d = gm.tensor_components()
    d1111, d2222, d1122 = d["d1111"], d["d2222"], d["d1122"]
    d1112, d2212, d1212 = d["d1112"], d["d2212"], d["d1212"]
    rows = [
        ("d1111 > 0", d1111, True),
        ("d2222 > 0", d2222, True),
        ("d1212 >= 0", d1212, False),
        ("d1111 + 2 d1122 + d2222 > 0", d1111 + 2 * d1122 + d2222, True),
        ("d1111 - 2 d1122 + d2222 >= 0", d1111 - 2 * d1122 + d2222, False),
        ("d2222 + 4 d2212 + 4 d1212 >= 0", d2222 + 4 * d2212 + 4 * d1212, False),
        ("d2222 - 4 d2212 + 4 d1212 >= 0", d2222 - 4 * d2212 + 4 * d1212, False),
        ("d1111 + 4 d1112 + 4 d1212 >= 0", d1111 + 4 * d1112 + 4 * d1212, False),
        ("d1111 - 4 d1112 + 4 d1212 >= 0", d1111 - 4 * d1112 + 4 * d1212, False),
        ("D psd", float(np.linalg.eigvalsh(gm.array).min()), False),
        ("D + E psd", float(np.linalg.eigvalsh(gm.array + E_MAT).min()), False),
    ]
    margins = {name: float(val) for name, val, _ in rows}
    strict = {name: s for name, _, s in rows}
    bad = [name for name, val, s in rows if (val <= tol if s else val < -tol)]
    return InequalityReport(margins, strict, tol, bad)


class VigdergauzConstants(NamedTuple):
    A1: float
    A2: float
    A3: float


def square_effective_moduli(C_star, tol: float = 1e-8) -> tuple[float, float, float]:
    """``(K*, G*, G*_45)`` of a square-symmetric compliance matrix."""
    v = _as_voigt(C_star)
    cls = classify_symmetry(v, tol, form="compliance")
    if cls not in ("square", "isotropic"):
        raise SymmetryError(f"compliance matrix is {cls}, not square-symmetric")
    c1 = 0.5 * (v[1] + v[4])
    c2, c6 = v[2], v[6]
    denom = (2.0 * (c1 + c2), 2.0 * (c1 - c2), c6)
    if min(denom) <= 0:
        raise DefinitenessError(
            "effective moduli K*, G*, G*_45 are not all positive "
            f"(2(C1+C2), 2(C1-C2), C6 = {denom[0]:.4g}, {denom[1]:.4g}, {denom[2]:.4g})"
        )
    return tuple(1.0 / x for x in denom)


def vigdergauz_constants(C_star, m: IsotropicModuli, tol: float = 1e-8) -> VigdergauzConstants:
    """Geometric constants ``A1, A2, A3`` with

        1/K*    = 1/K + A1 (1/K + 1/G)
        1/G*    = 1/G + A2 (1/K + 1/G)
        1/G*_45 = 1/G + A3 (1/K + 1/G)
    """
    Ks, Gs, G45 = square_effective_moduli(C_star, tol)
    s = m.compliance_sum
    return VigdergauzConstants(
        (1.0 / Ks - 1.0 / m.K) / s,
        (1.0 / Gs - 1.0 / m.G) / s,
        (1.0 / G45 - 1.0 / m.G) / s,
    )


def dna_relations(A1: float, A2: float, A3: float) -> GeometricModulus:
    d1 = (1.0 + A1 + A2) / 4.0
    d2 = (1.0 + A1 - A2) / 4.0
    return GeometricModulus(VoigtMatrix((d1, d2, 0.0, d1, 0.0, A3)))


def clm_shift(m: IsotropicModuli, rho: float) -> IsotropicModuli:
    """Shift ``(1/K, 1/G) -> (1/K + rho, 1/G - rho)``; needs ``-1/K < rho < 1/G``."""
    lo, hi = -1.0 / m.K, 1.0 / m.G
    if not lo < rho < hi:
        raise DomainError(f"shift rho={rho!r} outside the admissible interval ({lo:.6g}, {hi:.6g})")
    return IsotropicModuli(1.0 / (1.0 / m.K + rho), 1.0 / (1.0 / m.G - rho))


class EffectiveGradients(NamedTuple):
    """Gradients with respect to ``(K, G)``."""

    K_star: np.ndarray
    G_star: np.ndarray
    G45_star: np.ndarray


def _g(p: float, q: float, m: IsotropicModuli) -> np.ndarray:
    K, G = m.K, m.G
    return np.array([p * G**2, q * K**2]) / (q * K + p * G) ** 2


def effective_gradients(A1: float, A2: float, A3: float, m: IsotropicModuli) -> EffectiveGradients:
    return EffectiveGradients(
        _g(1.0 + A1, A1, m),
        _g(A2, 1.0 + A2, m),
        _g(A3, 1.0 + A3, m),
    )
