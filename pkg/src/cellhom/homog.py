"""Effective tensors of periodicity cells and the invariance experiments.

Every routine here builds on the three strain-basis cell problems. Stress
averages give ``B*`` directly; the energy route and the closed forms for
``K = G = 1/2`` are kept as cross-checks.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .elastic_tensor import (
    E_MAT,
    EffectiveGradients,
    GeometricModulus,
    IsotropicModuli,
    VigdergauzConstants,
    VoigtMatrix,
    check_d_inequalities,
    classify_symmetry,
    dna_relations,
    effective_gradients,
    extract_D,
    invert,
    is_positive_definite,
    square_effective_moduli,
    vigdergauz_constants,
)
from .errors import DomainError, GeometryError, SingularMatrixError, SymmetryError
from .fem import CellProblem, CellSolution, MaterialField, SolverOptions
from .geometry import CellGeometry, Circle, Region, clear_line, paper_cell
from .mesh import Mesh, generate, quality_report

__all__ = [
    "EffectiveResult",
    "effective_stiffness",
    "GeomreprResult",
    "geomrepr_D",
    "extract_D_geomrepr",
    "SweepResult",
    "moduli_sweep",
    "relative_spread",
    "ShiftReport",
    "clm_shift_check",
    "two_phase_paper_cell",
    "MichellReport",
    "michell_invariance_check",
    "PathReport",
    "quasiperiod_path_diagnostic",
    "LineIdentityReport",
    "line_identity_check",
    "SquareSymmetryReport",
    "square_symmetry_report",
    "LoewnerReport",
    "bc_mode_comparison",
    "default_workers",
]

log = logging.getLogger(__name__)

BASIS = np.eye(3)
UNIT_MODULI = IsotropicModuli(0.5, 0.5)


def default_workers() -> int:
    env = os.environ.get("CELLHOM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _mesh_for(geometry: CellGeometry, n: int, mesh: Mesh | None) -> Mesh:
    return mesh if mesh is not None else generate(geometry, n)


def _stress_route(sols: Sequence[CellSolution]) -> np.ndarray:
    return np.column_stack([s.avg_stress for s in sols])


def _energy_route(problem: CellProblem, sols: Sequence[CellSolution]) -> np.ndarray:
    """``B*`` from the six diagonal energies of the basis and paired loadings."""
    u1, u2, u3 = (s.u for s in sols)
    E = problem.energy
    e11, e22, e33 = E(u1, u1), E(u2, u2), E(u3, u3)
    e44 = E(u1 + u2, u1 + u2)
    e55 = E(u2 + u3, u2 + u3)
    e66 = E(u1 + u3, u1 + u3)
    b2 = 0.5 * (e44 - e11 - e22)
    b5 = 0.5 * (e55 - e22 - e33)
    b3 = 0.5 * (e66 - e11 - e33)
    return np.array([[e11, b2, b3], [b2, e22, b5], [b3, b5, e33]])


@dataclass
class EffectiveResult:
    """Effective tensors of one cell, mesh and material."""

    B_star: VoigtMatrix
    C_star: VoigtMatrix
    D: GeometricModulus | None
    D_routes: dict[str, GeometricModulus]
    B_energy: np.ndarray
    symmetry: str
    positive_definite: bool
    vigdergauz: VigdergauzConstants | None
    diagnostics: dict
    moduli: IsotropicModuli | None
    bc_mode: str
    n: int
    mesh_stats: dict
    solutions: list[CellSolution] = field(default_factory=list, repr=False)
    problem: CellProblem | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "B_star": self.B_star.array.tolist(),
            "C_star": self.C_star.array.tolist(),
            "B_star_energy": self.B_energy.tolist(),
            "symmetry": self.symmetry,
            "positive_definite": self.positive_definite,
            "bc_mode": self.bc_mode,
            "n": self.n,
            "mesh": self.mesh_stats,
            "diagnostics": self.diagnostics,
        }
        if self.moduli is not None:
            out["moduli"] = {"K": self.moduli.K, "G": self.moduli.G}
        if self.D is not None:
            out["D"] = self.D.array.tolist()
            out["D_routes"] = {k: v.array.tolist() for k, v in self.D_routes.items()}
        if self.vigdergauz is not None:
            out["A"] = list(self.vigdergauz)
            Ks, Gs, G45 = square_effective_moduli(self.C_star, tol=1e-6)
            out["square_moduli"] = {"K_star": Ks, "G_star": Gs, "G45_star": G45}
        return out


def effective_stiffness(geometry: CellGeometry, material, n: int = 64, bc_mode: str = "periodic",
                        solver: SolverOptions | None = None, mesh: Mesh | None = None,
                        geomrepr: bool = False, keep_fields: bool = True, sym_tol: float = 1e-8) -> EffectiveResult:
    """Solve the strain-basis cell problems and assemble ``B*``, ``C*`` and ``D``.

    ``D`` is only formed for uniform isotropic material. ``geomrepr=True``
    adds the closed-form route, which needs extra solves unless the moduli
    are already ``K = G = 1/2``.
    """
    t0 = time.perf_counter()
    material = MaterialField.coerce(material)
    mesh = _mesh_for(geometry, n, mesh)
    problem = CellProblem(mesh, material, solver)
    sols = problem.solve_many(BASIS, bc_mode)
    B = _stress_route(sols)
    scale = np.linalg.norm(B)
    asym = float(np.linalg.norm(B - B.T) / scale)
    B_energy = _energy_route(problem, sols)
    galerkin = float(np.max(np.abs(B_energy - 0.5 * (B + B.T))) / scale)
    B_star = VoigtMatrix.from_array(B)
    C_star = invert(B_star)
    pd = is_positive_definite(B_star)
    if not pd:
        log.warning("effective stiffness is not positive definite; D is reported but the theory does not apply")
    sym = classify_symmetry(B_star, tol=sym_tol, form="stiffness")

    D = None
    routes: dict[str, GeometricModulus] = {}
    vig = None
    moduli = material.default if material.is_uniform else None
    diagnostics = {
        "galerkin_residual": galerkin,
        "B_asymmetry": asym,
        "solver_residuals": [s.residual for s in sols],
        "solver_iterations": [s.iterations for s in sols],
    }
    if moduli is not None:
        D = extract_D(C_star, moduli)
        routes["direct"] = D
        try:
            routes["energy"] = extract_D(invert(VoigtMatrix.from_array(B_energy)), moduli)
        except SingularMatrixError:
            log.warning("energy-route B* is singular")
        if geomrepr:
            gr = extract_D_geomrepr(geometry, n, bc_mode, mesh=mesh, solver=solver,
                                    solutions=sols if moduli == UNIT_MODULI else None)
            routes["geomrepr"] = gr.D
            diagnostics["geomrepr"] = gr.summary()
        if len(routes) > 1:
            diagnostics["route_discrepancy"] = {
                k: float(np.max(np.abs(v.array - D.array))) for k, v in routes.items() if k != "direct"
            }
        ineq = check_d_inequalities(D)
        diagnostics["d_inequalities_ok"] = bool(ineq.ok)
        if sym in ("square", "isotropic"):
            vig = vigdergauz_constants(C_star, moduli, tol=sym_tol)
            if pd and min(vig) < -1e-8:
                log.warning("negative Vigdergauz constant %s", tuple(vig))
    diagnostics["runtime_s"] = time.perf_counter() - t0
    q = quality_report(mesh)
    stats = {"nodes": mesh.n_nodes, "quads": len(mesh.quads), "triangles": len(mesh.tris),
             "h": mesh.h, "material_area": mesh.area(), "min_angle_deg": q.min_angle}
    return EffectiveResult(
        B_star=B_star, C_star=C_star, D=D, D_routes=routes, B_energy=B_energy, symmetry=sym,
        positive_definite=pd, vigdergauz=vig, diagnostics=diagnostics, moduli=moduli, bc_mode=bc_mode,
        n=n, mesh_stats=stats, solutions=sols if keep_fields else [], problem=problem if keep_fields else None,
    )


@dataclass
class GeomreprResult:
    D: GeometricModulus
    D6_printed: float
    mu: float
    D_direct: GeometricModulus
    discrepancy: np.ndarray

    def summary(self) -> dict:
        return {"mu": self.mu, "D6_printed": self.D6_printed, "D6_resolved": self.D[6],
                "max_discrepancy": float(np.max(np.abs(self.discrepancy)))}


def geomrepr_D(B) -> tuple[GeometricModulus, float, float]:
    """Closed-form ``D`` from stress averages at ``K = G = 1/2``.

    ``B`` holds the averages column-wise: column ``j`` is the average stress
    for the unit strain ``e_j``. Returns ``(D, D6_printed, mu)``. The
    printed ``D6`` carries ``-2 a11 c12 b22`` where consistency with the
    compliance decomposition needs ``+2``; the resolved form is
    ``(a22**2 - a11 b22 - mu/2) / mu``.
    """
    B = np.asarray(B, dtype=float)
    a11, a22, a12 = B[:, 0]
    b22, b12 = B[1, 1], B[2, 1]
    c12 = B[2, 2]
    quarter_mu = (a11 * b12 ** 2 - a11 * c12 * b22 + a22 ** 2 * c12 + b22 * a12 ** 2 - 2 * a12 * a22 * b12)
    mu = 4.0 * quarter_mu
    if abs(mu) < 1e-12:
        raise GeometryError(f"degenerate geometry: mu = {mu:.3e}")
    D1 = (b12 ** 2 - c12 * b22) / mu
    D2 = (a22 * c12 - a12 * b12 - a11 * c12 * b22 + a11 * b12 ** 2 + a22 ** 2 * c12
          + b22 * a12 ** 2 - 2 * a12 * a22 * b12) / mu
    D3 = (a12 * b22 - b12 * a22) / mu
    D4 = (a12 ** 2 - c12 * a11) / mu
    D5 = (b12 * a11 - a12 * a22) / mu
    D6_printed = (a22 ** 2 - b22 * a11 - 2 * a11 * c12 * b22 - 2 * a11 * b12 ** 2 - 2 * a22 ** 2 * c12
                  - 2 * b22 * a12 ** 2 + 4 * a12 * a22 * b12) / mu
    D6 = (a22 ** 2 - b22 * a11 - 2 * quarter_mu) / mu
    return GeometricModulus(VoigtMatrix((D1, D2, D3, D4, D5, D6))), float(D6_printed), float(mu)


def extract_D_geomrepr(geometry: CellGeometry, n: int = 64, bc_mode: str = "periodic", mesh: Mesh | None = None,
                       solver: SolverOptions | None = None,
                       solutions: Sequence[CellSolution] | None = None) -> GeomreprResult:
    """``D`` by the closed forms, compared with direct extraction on the same solves."""
    if solutions is None:
        mesh = _mesh_for(geometry, n, mesh)
        solutions = CellProblem(mesh, UNIT_MODULI, solver).solve_many(BASIS, bc_mode)
    B = _stress_route(solutions)
    D, D6p, mu = geomrepr_D(B)
    D_direct = extract_D(invert(VoigtMatrix.from_array(B)), UNIT_MODULI)
    log.info("geomrepr: mu=%.6g, printed D6=%.6g, resolved D6=%.6g, direct D6=%.6g", mu, D6p, D[6], D_direct[6])
    return GeomreprResult(D, D6p, mu, D_direct, D.array - D_direct.array)


def relative_spread(values, abs_floor: float = 1e-6) -> np.ndarray:
    """Per-entry ``(max - min) / mean |value|``; absolute range where the
    entries are all below ``abs_floor`` in magnitude."""
    v = np.asarray(values, dtype=float)
    rng = v.max(0) - v.min(0)
    mag = np.abs(v).max(0)
    mean = np.abs(v.mean(0))
    return np.where(mag < abs_floor, rng, rng / np.where(mean > 0, mean, 1.0))


@dataclass
class SweepResult:
    moduli: list[IsotropicModuli]
    labels: list
    results: list[EffectiveResult]
    B_table: np.ndarray
    D_table: np.ndarray
    spread: np.ndarray
    n: int

    @property
    def max_spread(self) -> float:
        return float(self.spread.max())

    def table1(self) -> dict[str, list[float]]:
        """``B*`` rows keyed like the published table."""
        idx = {"B1": (0, 0), "B4": (1, 1), "B2": (0, 1), "B6": (2, 2)}
        return {k: [float(B[i, j]) for B in self.B_table] for k, (i, j) in idx.items()}

    def table2(self) -> dict[str, list[float]]:
        return {f"D{k + 1}": self.D_table[:, k].tolist() for k in range(6)}


def moduli_sweep(geometry: CellGeometry, n: int, moduli: Sequence[IsotropicModuli], labels: Sequence | None = None,
                 bc_mode: str = "periodic", mesh: Mesh | None = None, solver: SolverOptions | None = None,
                 workers: int | None = None) -> SweepResult:
    """Effective tensors for each moduli on one shared mesh."""
    if len(moduli) < 2:
        log.info("sweep with a single moduli entry; spread is zero")
    if not moduli:
        raise DomainError("moduli sweep needs at least one entry")
    mesh = _mesh_for(geometry, n, mesh)
    workers = min(workers or default_workers(), len(moduli))

    def run(m):
        return effective_stiffness(geometry, m, n, bc_mode, solver=solver, mesh=mesh, keep_fields=False)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, moduli))
    else:
        results = [run(m) for m in moduli]
    B = np.array([r.B_star.array for r in results])
    D = np.array([[r.D[k] for k in range(1, 7)] for r in results])
    return SweepResult(list(moduli), list(labels) if labels is not None else list(range(len(moduli))),
                       results, B, D, relative_spread(D), n)


@dataclass
class ShiftReport:
    rho: float
    C_before: np.ndarray
    C_after: np.ndarray
    deviation: float

    @property
    def delta(self) -> np.ndarray:
        return self.C_after - self.C_before


def clm_shift_check(geometry: CellGeometry, material, n: int, rho: float, bc_mode: str = "periodic",
                    mesh: Mesh | None = None, solver: SolverOptions | None = None) -> ShiftReport:
    """Compare the change of ``C*`` under a uniform compliance shift with ``-rho E``.

    The relative deviation is ``|dC* + rho E| / |C*|`` in the Frobenius norm.
    """
    material = MaterialField.coerce(material)
    shifted = material.shifted(rho)
    mesh = _mesh_for(geometry, n, mesh)
    before = effective_stiffness(geometry, material, n, bc_mode, solver, mesh, keep_fields=False)
    after = effective_stiffness(geometry, shifted, n, bc_mode, solver, mesh, keep_fields=False)
    C0, C1 = before.C_star.array, after.C_star.array
    dev = float(np.linalg.norm(C1 - C0 + rho * E_MAT) / np.linalg.norm(C0))
    return ShiftReport(rho, C0, C1, dev)


def two_phase_paper_cell(ring_radius: float = 0.35) -> CellGeometry:
    """The 2x1 cell whose hole is wrapped in a tagged annulus ``"ring"``."""
    g = paper_cell()
    hole = g.holes[0]
    return CellGeometry(g.l1, g.l2, g.holes, [Region(Circle(hole.center, ring_radius), "ring")])


@dataclass
class MichellReport:
    deviations: np.ndarray
    moduli: tuple[IsotropicModuli, IsotropicModuli]

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max())


def _stress_at_points(problem: CellProblem, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return problem.quad_stresses(u), problem.tri_stresses(u)


def michell_invariance_check(geometry: CellGeometry, n: int, m1: IsotropicModuli, m2: IsotropicModuli,
                             bc_mode: str = "periodic", mesh: Mesh | None = None,
                             solver: SolverOptions | None = None) -> MichellReport:
    """Relative L2 difference of the stress fields with average stress ``f_i``.

    The field for ``f_i`` is the superposition of the basis solutions with
    coefficients ``C* f_i``. The norm weights the shear component twice.
    """
    mesh = _mesh_for(geometry, n, mesh)
    fields = []
    for m in (m1, m2):
        problem = CellProblem(mesh, m, solver)
        sols = problem.solve_many(BASIS, bc_mode)
        C = invert(VoigtMatrix.from_array(_stress_route(sols))).array
        per_basis = [_stress_at_points(problem, s.u) for s in sols]
        wq, wt = problem.wq, problem.wt
        out = []
        for f in BASIS:
            coef = C @ f
            sq = sum(c * pb[0] for c, pb in zip(coef, per_basis))
            st = sum(c * pb[1] for c, pb in zip(coef, per_basis))
            out.append((sq, st))
        fields.append(out)
    w = np.array([1.0, 1.0, 2.0])
    devs = []
    for (q1, t1), (q2, t2) in zip(*fields):
        num = np.einsum("eg,egi,i->", wq, (q1 - q2) ** 2, w) + np.einsum("e,ei,i->", wt, (t1 - t2) ** 2, w)
        den = np.einsum("eg,egi,i->", wq, q1 ** 2, w) + np.einsum("e,ei,i->", wt, t1 ** 2, w)
        devs.append(np.sqrt(num / den))
    return MichellReport(np.array(devs), (m1, m2))


@dataclass
class PathReport:
    xi: np.ndarray
    predicted: np.ndarray
    errors: np.ndarray
    lines: tuple[float, float]
    tol: float

    @property
    def max_error(self) -> float:
        return float(self.errors.max())

    @property
    def ok(self) -> bool:
        return self.max_error <= self.tol


def quasiperiod_path_diagnostic(geometry: CellGeometry, material: IsotropicModuli, n: int, xi,
                                bc_mode: str = "periodic", mesh: Mesh | None = None,
                                lines: tuple[float, float] | None = None, tol: float = 0.05,
                                solver: SolverOptions | None = None) -> PathReport:
    """Recover the quasiperiod from average stress and trace line integrals.

    ``lines = (c1, c2)`` are the heights of the horizontal line and the
    abscissa of the vertical one; by default the widest clear lines. The
    shear component uses the two shifted paths starting at ``(c2, c1)``.
    ``predicted`` and ``errors`` are in Voigt strain form; errors are relative
    to the largest prescribed component.
    """
    if not isinstance(material, IsotropicModuli):
        raise DomainError("path diagnostic needs uniform isotropic moduli")
    xi = np.asarray(xi, dtype=float)
    mesh = _mesh_for(geometry, n, mesh)
    c1, c2 = lines if lines is not None else (clear_line(geometry, 1), clear_line(geometry, 2))
    problem = CellProblem(mesh, material, solver)
    sol = problem.solve(xi, bc_mode)
    tr = problem.nodal_stress(sol.u)[:, :2].sum(1)
    l1, l2 = mesh.l1, mesh.l2
    c1111, c1212 = material.c1111, material.c1212
    s = sol.avg_stress

    def integrate(direction, c, start=None):
        kind, elem, pts, w, t = problem.line_points(direction, c, start)
        val, grad = problem.point_field(tr, kind, elem, pts)
        return w, t, val, grad

    w, t, val, grad = integrate(1, c1)
    i1 = w @ (val - c1 * grad[:, 1])
    w, t, val, grad = integrate(2, c2)
    i2 = w @ (val - c2 * grad[:, 0])
    w, t, val, grad = integrate(1, c1, start=c2)
    i3 = w @ (t * grad[:, 1])
    w, t, val, grad = integrate(2, c2, start=c1)
    i4 = w @ (t * grad[:, 0])
    x11 = -2 * c1212 * s[1] + c1111 / l1 * i1
    x22 = -2 * c1212 * s[0] + c1111 / l2 * i2
    x12 = 2 * c1212 * s[2] + c1111 / (2 * l1) * i3 + c1111 / (2 * l2) * i4
    pred = np.array([x11, x22, 2 * x12])
    errors = np.abs(pred - xi) / np.abs(xi).max()
    return PathReport(xi, pred, errors, (c1, c2), tol)


@dataclass
class LineIdentityReport:
    names: tuple[str, ...]
    lhs: np.ndarray
    rhs: np.ndarray
    lines: tuple[float, float]

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.rhs - self.lhs) / np.abs(self.lhs)

    @property
    def max_error(self) -> float:
        return float(self.errors.max())


def line_identity_check(geometry: CellGeometry, material, n: int, bc_mode: str = "periodic",
                        mesh: Mesh | None = None, lines: tuple[float, float] | None = None,
                        solver: SolverOptions | None = None) -> LineIdentityReport:
    """Compare stress integrals over the material with scaled line fluxes.

    Pairings: ``s11`` with the vertical line (load ``e1``), ``s22`` with the
    horizontal line (load ``e2``), and ``s12`` with both lines (load ``e3``).
    """
    mesh = _mesh_for(geometry, n, mesh)
    c1, c2 = lines if lines is not None else (clear_line(geometry, 1), clear_line(geometry, 2))
    problem = CellProblem(mesh, material, solver)
    s1, s2, s3 = problem.solve_many(BASIS, bc_mode)
    Y, l1, l2 = mesh.cell_area, mesh.l1, mesh.l2
    lhs = np.array([Y * s1.avg_stress[0], Y * s2.avg_stress[1], Y * s3.avg_stress[2], Y * s3.avg_stress[2]])
    rhs = np.array([
        l1 * problem.flux_line_integral(s1, 2, c2)[0],
        l2 * problem.flux_line_integral(s2, 1, c1)[1],
        l2 * problem.flux_line_integral(s3, 1, c1)[0],
        l1 * problem.flux_line_integral(s3, 2, c2)[1],
    ])
    return LineIdentityReport(("s11|vertical", "s22|horizontal", "s12|horizontal", "s12|vertical"), lhs, rhs, (c1, c2))


@dataclass
class SquareSymmetryReport:
    K_star: float
    G_star: float
    G45_star: float
    A: tuple[float, float, float]
    dna_residual: float
    isotropic: bool
    gradients: EffectiveGradients


def square_symmetry_report(result: EffectiveResult, m: IsotropicModuli | None = None,
                           tol: float = 1e-6) -> SquareSymmetryReport:
    """Square-symmetric summary; declines orthotropic or triclinic cells."""
    if result.symmetry not in ("square", "isotropic"):
        raise SymmetryError(f"effective tensor is {result.symmetry}, not square-symmetric")
    m = m or result.moduli
    if m is None:
        raise DomainError("square symmetry report needs uniform moduli")
    Ks, Gs, G45 = square_effective_moduli(result.C_star, tol=tol)
    vig = vigdergauz_constants(result.C_star, m, tol=tol)
    A = (vig.A1, vig.A2, vig.A3)
    D = extract_D(result.C_star, m).array
    rebuilt = dna_relations(*A).array
    resid = float(np.max(np.abs(rebuilt - D)))
    iso = abs(D[2, 2] - 2 * (D[0, 0] - D[0, 1])) <= tol * max(1.0, abs(D[2, 2]))
    return SquareSymmetryReport(Ks, Gs, G45, A, resid, bool(iso), effective_gradients(*A, m))


@dataclass
class LoewnerReport:
    B_periodic: np.ndarray
    B_dirichlet: np.ndarray
    min_eigenvalue: float

    @property
    def dominates(self) -> bool:
        return self.min_eigenvalue >= -1e-8 * np.linalg.norm(self.B_periodic)


def bc_mode_comparison(geometry: CellGeometry, material, n: int, mesh: Mesh | None = None,
                       solver: SolverOptions | None = None) -> LoewnerReport:
    """Smallest eigenvalue of ``B*(dirichlet_affine) - B*(periodic)``."""
    mesh = _mesh_for(geometry, n, mesh)
    problem = CellProblem(mesh, material, solver)
    Bp = _stress_route(problem.solve_many(BASIS, "periodic"))
    Bd = _stress_route(problem.solve_many(BASIS, "dirichlet_affine"))
    diff = 0.5 * ((Bd - Bp) + (Bd - Bp).T)
    return LoewnerReport(Bp, Bd, float(np.linalg.eigvalsh(diff).min()))
