"""Finite element cell problems for planar linear elasticity.

Displacements are written ``u = xi x + v`` with ``xi`` the prescribed
average strain. In ``periodic`` mode ``v`` is periodic: slave dofs are
eliminated by their masters and one node is pinned to remove the
translations. In ``dirichlet_affine`` mode ``v`` vanishes on the outer
boundary of the cell. Hole boundaries are traction free in both modes.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elastic_tensor import IsotropicModuli, clm_shift
from .errors import DomainError, MeshError, SolverError
from .mesh import Mesh

__all__ = [
    "MaterialField",
    "CellSolution",
    "SolverOptions",
    "CellProblem",
    "element_stiffness",
    "solve_cell",
    "energy_bilinear",
    "stress_field",
    "flux_line_integral",
    "pcg",
    "BC_MODES",
]

log = logging.getLogger(__name__)

BC_MODES = ("periodic", "dirichlet_affine")
_G = 1.0 / math.sqrt(3.0)
_GAUSS_Q4 = [(xi, eta) for eta, xi in itertools.product((-_G, _G), repeat=2)]
_GL3_PTS = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GL3_WTS = np.array([5.0, 8.0, 5.0]) / 9.0


@dataclass(frozen=True)
class MaterialField:
    """Piecewise constant isotropic moduli.

    ``regions`` maps mesh region tags to moduli; untagged material uses
    ``default``. ``function`` (optional) maps centroid arrays ``(x, y)`` to
    ``(K, G)`` arrays and overrides both for a smoothly varying field.
    """

    default: IsotropicModuli
    regions: Mapping[str, IsotropicModuli] = field(default_factory=dict)
    function: Callable | None = None

    @classmethod
    def coerce(cls, material) -> "MaterialField":
        if isinstance(material, MaterialField):
            return material
        if isinstance(material, IsotropicModuli):
            return cls(material)
        raise TypeError(f"cannot use {type(material).__name__} as a material")

    @property
    def is_uniform(self) -> bool:
        return self.function is None and all(m == self.default for m in self.regions.values())

    def shifted(self, rho: float) -> "MaterialField":
        if self.function is not None:
            raise DomainError("shifting a functional material field is not supported")
        return MaterialField(clm_shift(self.default, rho), {k: clm_shift(m, rho) for k, m in self.regions.items()})

    def all_moduli(self) -> list[IsotropicModuli]:
        return [self.default, *self.regions.values()]

    def element_moduli(self, mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
        """``(K, G)`` per element, quads first then triangles."""
        tags = np.r_[mesh.quad_tags, mesh.tri_tags]
        K = np.full(len(tags), self.default.K)
        G = np.full(len(tags), self.default.G)
        for name, m in self.regions.items():
            if name not in mesh.tag_names:
                continue
            sel = tags == mesh.tag_names.index(name)
            K[sel], G[sel] = m.K, m.G
        if self.function is not None:
            qc, tc = mesh.centroids()
            c = np.vstack([qc, tc])
            K, G = (np.asarray(a, dtype=float) for a in self.function(c[:, 0], c[:, 1]))
            if np.any(K <= 0) or np.any(G <= 0):
                raise DomainError("material function produced non-positive moduli")
        return K, G


def _stiffness_matrices(K: np.ndarray, G: np.ndarray) -> np.ndarray:
    D = np.zeros((len(K), 3, 3))
    D[:, 0, 0] = D[:, 1, 1] = K + G
    D[:, 0, 1] = D[:, 1, 0] = K - G
    D[:, 2, 2] = G
    return D


def _q4_shape(xi, eta):
    N = 0.25 * np.stack([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta), (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)], -1)
    dxi = 0.25 * np.stack([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)], -1)
    deta = 0.25 * np.stack([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)], -1)
    return N, dxi, deta


def _q4_gradients(xy: np.ndarray, xi, eta) -> tuple[np.ndarray, np.ndarray]:
    """Physical shape gradients ``(m, 2, 4)`` and ``det J`` at one point per element."""
    _, dxi, deta = _q4_shape(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))
    dxi = np.broadcast_to(dxi, (len(xy), 4))
    deta = np.broadcast_to(deta, (len(xy), 4))
    J11 = np.sum(xy[..., 0] * dxi, -1)
    J12 = np.sum(xy[..., 1] * dxi, -1)
    J21 = np.sum(xy[..., 0] * deta, -1)
    J22 = np.sum(xy[..., 1] * deta, -1)
    det = J11 * J22 - J12 * J21
    dNdx = (J22[:, None] * dxi - J12[:, None] * deta) / det[:, None]
    dNdy = (-J21[:, None] * dxi + J11[:, None] * deta) / det[:, None]
    return np.stack([dNdx, dNdy], 1), det


def _tri_gradients(xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, y = xy[..., 0], xy[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    dNdx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], -1) / det[:, None]
    dNdy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], -1) / det[:, None]
    return np.stack([dNdx, dNdy], 1), det


def _strain_matrix(grad: np.ndarray) -> np.ndarray:
    """``B`` of shape ``(m, 3, 2*nen)`` from gradients ``(m, 2, nen)``."""
    m, _, nen = grad.shape
    B = np.zeros((m, 3, 2 * nen))
    B[:, 0, 0::2] = grad[:, 0]
    B[:, 1, 1::2] = grad[:, 1]
    B[:, 2, 0::2] = grad[:, 1]
    B[:, 2, 1::2] = grad[:, 0]
    return B


def element_stiffness(xy, moduli: IsotropicModuli) -> np.ndarray:
    """Stiffness of one Q4 (2x2 Gauss) or T3 element with CCW nodes ``xy``."""
    xy = np.asarray(xy, dtype=float)[None]
    D = _stiffness_matrices(np.array([moduli.K]), np.array([moduli.G]))[0]
    if xy.shape[1] == 4:
        Ke = np.zeros((8, 8))
        for xi, eta in _GAUSS_Q4:
            grad, det = _q4_gradients(xy, xi, eta)
            if det[0] <= 0:
                raise MeshError("element 0 is inverted (non-positive Jacobian)")
            B = _strain_matrix(grad)[0]
            Ke += det[0] * B.T @ D @ B
        return Ke
    if xy.shape[1] == 3:
        grad, det = _tri_gradients(xy)
        if det[0] <= 0:
            raise MeshError("element 0 is inverted (non-positive Jacobian)")
        B = _strain_matrix(grad)[0]
        return 0.5 * det[0] * B.T @ D @ B
    raise MeshError("only 3- and 4-node elements are supported")


@dataclass
class SolverOptions:
    """``method`` is ``"direct"`` (sparse LU), ``"cg"`` (Jacobi PCG) or
    ``"dense"`` (Cholesky on the dense reduced matrix, oracle use)."""

    method: str = "cg"
    rtol: float = 1e-10
    maxiter: int | None = None
    dense_limit: int = 2000

    def __post_init__(self):
        if self.method not in ("direct", "cg", "dense"):
            raise ValueError(f"unknown solver method {self.method!r}")


@dataclass
class CellSolution:
    """Solution of one cell problem. ``u`` and ``fluctuation`` are ``(N, 2)``."""

    xi: np.ndarray
    u: np.ndarray
    fluctuation: np.ndarray
    avg_stress: np.ndarray
    residual: float
    bc_mode: str
    mesh_key: tuple
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)


def pcg(A, b: np.ndarray, rtol: float = 1e-10, maxiter: int | None = None, M_diag: np.ndarray | None = None):
    """Conjugate gradients with a diagonal preconditioner.

    Returns ``(x, history)`` with relative residual norms per iteration;
    raises :class:`SolverError` when ``rtol`` is not met in ``maxiter``.
    """
    n = len(b)
    maxiter = maxiter or int(50 * math.sqrt(n)) + 1
    inv_d = 1.0 / (A.diagonal() if M_diag is None else M_diag)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n)
    if bnorm == 0:
        return x, [0.0]
    r = b.copy()
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    history = [1.0]
    for _ in range(maxiter):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        history.append(res)
        if res <= rtol:
            return x, history
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"PCG did not reach rtol={rtol:g} in {maxiter} iterations (residual {history[-1]:.3e})", history)


def _mesh_key(mesh: Mesh) -> tuple:
    key = mesh.meta.get("_key")
    if key is None:
        key = (mesh.n_nodes, len(mesh.quads), len(mesh.tris), hash(mesh.nodes.tobytes()))
        mesh.meta["_key"] = key
    return key


class CellProblem:
    """Assembled stiffness of one mesh and material, with cached reductions.

    Distinct loadings reuse the assembled matrix and, for the direct solver,
    the factorization.
    """

    def __init__(self, mesh: Mesh, material, solver: SolverOptions | None = None):
        self.mesh = mesh
        self.material = MaterialField.coerce(material)
        self.solver = solver or SolverOptions()
        self.key = _mesh_key(mesh)
        K, G = self.material.element_moduli(mesh)
        nq = len(mesh.quads)
        self.Dq = _stiffness_matrices(K[:nq], G[:nq])
        self.Dt = _stiffness_matrices(K[nq:], G[nq:])
        self.Kq_el, self.Gq_el = K[:nq], G[:nq]
        self.Kt_el, self.Gt_el = K[nq:], G[nq:]
        self._element_data()
        self.K = self._assemble()
        self._reduced: dict[str, tuple] = {}

    # -- element level -------------------------------------------------
    def _element_data(self):
        m = self.mesh
        qxy = m.nodes[m.quads]
        Bq, wq = [], []
        for xi, eta in _GAUSS_Q4:
            grad, det = _q4_gradients(qxy, xi, eta)
            if len(det) and det.min() <= 0:
                raise MeshError(f"quadrilateral {int(np.argmin(det))} has a non-positive Jacobian")
            Bq.append(_strain_matrix(grad))
            wq.append(det)
        self.Bq = np.stack(Bq, 1) if Bq and len(qxy) else np.zeros((0, 4, 3, 8))
        self.wq = np.stack(wq, 1) if wq and len(qxy) else np.zeros((0, 4))
        txy = m.nodes[m.tris]
        if len(txy):
            grad, det = _tri_gradients(txy)
            if det.min() <= 0:
                raise MeshError(f"triangle {int(np.argmin(det))} has a non-positive Jacobian")
            self.Bt = _strain_matrix(grad)
            self.wt = 0.5 * det
        else:
            self.Bt = np.zeros((0, 3, 6))
            self.wt = np.zeros(0)
        self.dofs_q = np.stack([2 * m.quads, 2 * m.quads + 1], -1).reshape(len(m.quads), 8)
        self.dofs_t = np.stack([2 * m.tris, 2 * m.tris + 1], -1).reshape(len(m.tris), 6)

    def _assemble(self) -> sp.csr_matrix:
        ndof = 2 * self.mesh.n_nodes
        Kq = np.einsum("eg,egia,eij,egjb->eab", self.wq, self.Bq, self.Dq, self.Bq, optimize=True)
        Kt = np.einsum("e,eia,eij,ejb->eab", self.wt, self.Bt, self.Dt, self.Bt, optimize=True)
        rows = np.r_[np.repeat(self.dofs_q, 8, axis=1).ravel(), np.repeat(self.dofs_t, 6, axis=1).ravel()]
        cols = np.r_[np.tile(self.dofs_q, (1, 8)).ravel(), np.tile(self.dofs_t, (1, 6)).ravel()]
        vals = np.r_[Kq.ravel(), Kt.ravel()]
        K = sp.coo_matrix((vals, (rows, cols)), shape=(ndof, ndof)).tocsr()
        K.sum_duplicates()
        return K

    # -- constraints ---------------------------------------------------
    def _prolongation(self, bc_mode: str) -> sp.csr_matrix:
        m = self.mesh
        N = m.n_nodes
        if bc_mode == "periodic":
            if len(m.pairs) == 0:
                raise SolverError("periodic mode needs periodic node pairs")
            rep = np.arange(N)
            rep[m.pairs[:, 0]] = m.pairs[:, 1]
            pinned = rep[0]
            free_nodes = np.setdiff1d(np.unique(rep), [pinned])
        elif bc_mode == "dirichlet_affine":
            rep = np.arange(N)
            free_nodes = np.setdiff1d(np.arange(N), m.outer_boundary)
        else:
            raise ValueError(f"bc_mode must be one of {BC_MODES}, got {bc_mode!r}")
        col_of = -np.ones(N, dtype=np.int64)
        col_of[free_nodes] = np.arange(len(free_nodes))
        node_col = col_of[rep]
        keep = np.flatnonzero(node_col >= 0)
        rows = np.r_[2 * keep, 2 * keep + 1]
        cols = np.r_[2 * node_col[keep], 2 * node_col[keep] + 1]
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(2 * N, 2 * len(free_nodes)))

    def reduced(self, bc_mode: str):
        """``(P, K_red, solve)`` for the given boundary condition mode."""
        if bc_mode not in self._reduced:
            P = self._prolongation(bc_mode)
            Kr = (P.T @ self.K @ P).tocsc()
            Kr = 0.5 * (Kr + Kr.T)
            self._reduced[bc_mode] = (P, Kr.tocsc(), self._make_solver(Kr.tocsc()))
        return self._reduced[bc_mode]

    def _make_solver(self, Kr):
        opts = self.solver
        if opts.method == "dense":
            if Kr.shape[0] > opts.dense_limit:
                raise SolverError(f"dense solver limited to {opts.dense_limit} dofs, got {Kr.shape[0]}")
            try:
                cf = scipy.linalg.cho_factor(Kr.toarray())
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"reduced matrix is not positive definite: {exc}") from exc
            return lambda b: (scipy.linalg.cho_solve(cf, b), [])
        if opts.method == "direct":
            try:
                lu = spla.splu(Kr, permc_spec="COLAMD")
            except RuntimeError as exc:
                raise SolverError(f"singular reduced system, check the constraint setup: {exc}") from exc
            return lambda b: (lu.solve(b), [])
        diag = Kr.diagonal()
        if diag.min() <= 0:
            raise SolverError("reduced matrix has a non-positive diagonal; constraint setup is singular")
        Kcsr = Kr.tocsr()
        return lambda b: pcg(Kcsr, b, opts.rtol, opts.maxiter, diag)

    # -- solves --------------------------------------------------------
    def affine(self, xi) -> np.ndarray:
        """Nodal displacement ``xi x`` for the Voigt strain ``xi``, shape ``(N, 2)``."""
        e11, e22, g12 = np.asarray(xi, dtype=float)
        x, y = self.mesh.nodes[:, 0], self.mesh.nodes[:, 1]
        return np.column_stack([e11 * x + 0.5 * g12 * y, 0.5 * g12 * x + e22 * y])

    def solve(self, xi, bc_mode: str = "periodic") -> CellSolution:
        return self.solve_many([xi], bc_mode)[0]

    def solve_many(self, xis: Sequence, bc_mode: str = "periodic") -> list[CellSolution]:
        P, Kr, solve = self.reduced(bc_mode)
        out = []
        for xi in xis:
            xi = np.asarray(xi, dtype=float)
            ua = self.affine(xi).ravel()
            b = -(P.T @ (self.K @ ua))
            x, hist = solve(b)
            bn = np.linalg.norm(b)
            res = float(np.linalg.norm(Kr @ x - b) / bn) if bn > 0 else 0.0
            if not np.isfinite(res) or res > max(self.solver.rtol, 1e-8):
                raise SolverError(f"reduced system residual {res:.3e} exceeds tolerance", hist or [res])
            v = (P @ x).reshape(-1, 2)
            u = ua.reshape(-1, 2) + v
            out.append(CellSolution(
                xi=xi, u=u, fluctuation=v, avg_stress=self.average_stress(u), residual=res,
                bc_mode=bc_mode, mesh_key=self.key, iterations=max(len(hist) - 1, 0), residual_history=hist,
            ))
        return out

    # -- post-processing -----------------------------------------------
    def _check(self, sol: CellSolution):
        if sol.mesh_key != self.key:
            raise MeshError("solution was computed on a different mesh")

    def quad_stresses(self, u: np.ndarray) -> np.ndarray:
        """Stresses at the 2x2 Gauss points, ``(n_quads, 4, 3)``."""
        ue = u.ravel()[self.dofs_q]
        return np.einsum("eij,egjk,ek->egi", self.Dq, self.Bq, ue, optimize=True)

    def tri_stresses(self, u: np.ndarray) -> np.ndarray:
        ue = u.ravel()[self.dofs_t]
        return np.einsum("eij,ejk,ek->ei", self.Dt, self.Bt, ue, optimize=True)

    def element_mean_stress(self, u: np.ndarray) -> np.ndarray:
        """Area-averaged stress per element, quads first, ``(n_elements, 3)``."""
        sq = self.quad_stresses(u)
        mean_q = np.einsum("eg,egi->ei", self.wq, sq) / self.wq.sum(1)[:, None]
        return np.vstack([mean_q, self.tri_stresses(u)])

    def average_stress(self, u: np.ndarray) -> np.ndarray:
        """``(1/|Y|) * integral of stress over the material``."""
        sq = self.quad_stresses(u)
        st = self.tri_stresses(u)
        total = np.einsum("eg,egi->i", self.wq, sq) + self.wt @ st
        return total / self.mesh.cell_area

    def energy(self, u_i: np.ndarray, u_j: np.ndarray) -> float:
        """``(1/|Y|) * integral of eps(u_i) . B eps(u_j)``."""
        return float(u_i.ravel() @ (self.K @ u_j.ravel())) / self.mesh.cell_area

    def nodal_stress(self, u: np.ndarray) -> np.ndarray:
        """Area-weighted average of element-mean stresses at the nodes."""
        m = self.mesh
        sq = self.quad_stresses(u)
        aq = self.wq.sum(1)
        mean_q = np.einsum("eg,egi->ei", self.wq, sq) / aq[:, None]
        acc = np.zeros((m.n_nodes, 3))
        wsum = np.zeros(m.n_nodes)
        for conn, mean, area in ((m.quads, mean_q, aq), (m.tris, self.tri_stresses(u), self.wt)):
            for k in range(conn.shape[1]):
                np.add.at(acc, conn[:, k], area[:, None] * mean)
                np.add.at(wsum, conn[:, k], area)
        return acc / wsum[:, None]

    # -- line integrals ------------------------------------------------
    def line_points(self, direction: int, c: float, start: float | None = None):
        """Quadrature points on the full periodic line ``x2 = c``
        (direction 1) or ``x1 = c`` (direction 2).

        Returns ``(kind, elem, pts, w, t)`` where ``kind`` is 0 for quads and
        1 for triangles, ``w`` the line weights and ``t`` the coordinate
        along the line, unwrapped to ``[start, start + length)`` when
        ``start`` is given. Segments on an element edge get half weight from
        each neighbour; lines on the cell edge are integrated on both copies.
        """
        m = self.mesh
        length, span = (m.l2, m.l1) if direction == 1 else (m.l1, m.l2)
        c = float(c) % length
        tol = 1e-9 * m.h
        coords = [c]
        if c < tol or length - c < tol:
            coords = [0.0, length]
        out = []
        for cc in coords:
            for kind, conn in ((0, m.quads), (1, m.tris)):
                if len(conn) == 0:
                    continue
                xy = m.nodes[conn]
                s = (xy[..., 1] if direction == 1 else xy[..., 0]) - cc
                tt = xy[..., 0] if direction == 1 else xy[..., 1]
                s[np.abs(s) < tol] = 0.0
                cand = np.flatnonzero((s.min(1) <= 0) & (s.max(1) >= 0))
                for e in cand:
                    se, te = s[e], tt[e]
                    zeros = np.flatnonzero(se == 0)
                    if se.min() < 0 < se.max():
                        weight = 1.0
                        hits = list(te[zeros])
                        nv = len(se)
                        for a in range(nv):
                            b = (a + 1) % nv
                            if se[a] * se[b] < 0:
                                hits.append(te[a] + se[a] / (se[a] - se[b]) * (te[b] - te[a]))
                    elif len(zeros) == 2:
                        weight = 0.5
                        hits = list(te[zeros])
                    else:
                        continue
                    t0, t1 = min(hits), max(hits)
                    pieces = [(t0, t1)]
                    if start is not None:
                        sw = start % span
                        if t0 < sw < t1:
                            pieces = [(t0, sw), (sw, t1)]
                    for a, b in pieces:
                        if b - a <= tol:
                            continue
                        tq = 0.5 * (a + b) + 0.5 * (b - a) * _GL3_PTS
                        wq = 0.5 * (b - a) * _GL3_WTS * weight
                        pts = np.column_stack([tq, np.full(3, cc)]) if direction == 1 else np.column_stack([np.full(3, cc), tq])
                        tun = tq if start is None else np.where(tq < start % span, tq + span, tq) + (start - start % span)
                        out.append((kind, e, pts, wq, tun))
        if not out:
            raise MeshError(f"line {direction} at {c} does not cross the mesh")
        kind = np.concatenate([np.full(3, o[0]) for o in out])
        elem = np.concatenate([np.full(3, o[1]) for o in out])
        pts = np.vstack([o[2] for o in out])
        w = np.concatenate([o[3] for o in out])
        t = np.concatenate([o[4] for o in out])
        covered = w.sum()
        if abs(covered - span) > 1e-6 * span:
            raise MeshError(
                f"line {direction} at {c:.6g} is not fully inside the material "
                f"(covered length {covered:.6g} of {span:.6g}); it crosses a hole"
            )
        return kind, elem, pts, w, t

    def _q4_local(self, elem: np.ndarray, pts: np.ndarray) -> np.ndarray:
        xy = self.mesh.nodes[self.mesh.quads[elem]]
        loc = np.zeros((len(elem), 2))
        for _ in range(20):
            N, dxi, deta = _q4_shape(loc[:, 0], loc[:, 1])
            r = np.einsum("ek,ekd->ed", N, xy) - pts
            J = np.stack([np.einsum("ek,ekd->ed", dxi, xy), np.einsum("ek,ekd->ed", deta, xy)], -1)
            step = np.linalg.solve(J, r[..., None])[..., 0]
            loc -= step
            if np.abs(step).max() < 1e-14:
                break
        return loc

    def point_stresses(self, u: np.ndarray, kind: np.ndarray, elem: np.ndarray, pts: np.ndarray) -> np.ndarray:
        sig = np.zeros((len(elem), 3))
        qsel = kind == 0
        if qsel.any():
            eq = elem[qsel]
            loc = self._q4_local(eq, pts[qsel])
            xy = self.mesh.nodes[self.mesh.quads[eq]]
            grad = np.stack([_q4_gradients(xy[k:k + 1], loc[k, 0], loc[k, 1])[0][0] for k in range(len(eq))])
            B = _strain_matrix(grad)
            ue = u.ravel()[self.dofs_q[eq]]
            sig[qsel] = np.einsum("eij,ejk,ek->ei", self.Dq[eq], B, ue)
        if (~qsel).any():
            sig[~qsel] = self.tri_stresses(u)[elem[~qsel]]
        return sig

    def point_field(self, nodal: np.ndarray, kind, elem, pts) -> tuple[np.ndarray, np.ndarray]:
        """Interpolated scalar nodal field and its gradient at points."""
        val = np.zeros(len(elem))
        grad = np.zeros((len(elem), 2))
        qsel = kind == 0
        if qsel.any():
            eq = elem[qsel]
            loc = self._q4_local(eq, pts[qsel])
            conn = self.mesh.quads[eq]
            xy = self.mesh.nodes[conn]
            N, _, _ = _q4_shape(loc[:, 0], loc[:, 1])
            g = np.stack([_q4_gradients(xy[k:k + 1], loc[k, 0], loc[k, 1])[0][0] for k in range(len(eq))])
            f = nodal[conn]
            val[qsel] = np.sum(N * f, 1)
            grad[qsel] = np.einsum("edk,ek->ed", g, f)
        if (~qsel).any():
            et = elem[~qsel]
            conn = self.mesh.tris[et]
            xy = self.mesh.nodes[conn]
            g, det = _tri_gradients(xy)
            f = nodal[conn]
            p = pts[~qsel]
            lam1 = ((xy[:, 2, 0] - xy[:, 1, 0]) * (p[:, 1] - xy[:, 1, 1])
                    - (p[:, 0] - xy[:, 1, 0]) * (xy[:, 2, 1] - xy[:, 1, 1])) / det
            lam2 = ((xy[:, 0, 0] - xy[:, 2, 0]) * (p[:, 1] - xy[:, 2, 1])
                    - (p[:, 0] - xy[:, 2, 0]) * (xy[:, 0, 1] - xy[:, 2, 1])) / det
            lam = np.column_stack([lam1, lam2, 1 - lam1 - lam2])
            val[~qsel] = np.sum(lam * f, 1)
            grad[~qsel] = np.einsum("edk,ek->ed", g, f)
        return val, grad

    def flux_line_integral(self, sol: CellSolution, direction: int, c: float) -> np.ndarray:
        """Integral of ``sigma nu`` over a full periodic line.

        ``nu = (0, 1)`` for a horizontal line (direction 1) and ``(1, 0)``
        for a vertical one (direction 2).
        """
        self._check(sol)
        kind, elem, pts, w, _ = self.line_points(direction, c)
        sig = self.point_stresses(sol.u, kind, elem, pts)
        if direction == 1:
            flux = np.column_stack([sig[:, 2], sig[:, 1]])
        else:
            flux = np.column_stack([sig[:, 0], sig[:, 2]])
        return w @ flux


def solve_cell(mesh: Mesh, material, xi, bc_mode: str = "periodic",
               solver: SolverOptions | None = None) -> CellSolution:
    return CellProblem(mesh, material, solver).solve(xi, bc_mode)


def energy_bilinear(sol_i: CellSolution, sol_j: CellSolution, mesh: Mesh, material,
                    problem: CellProblem | None = None) -> float:
    if sol_i.mesh_key != sol_j.mesh_key or sol_i.mesh_key != _mesh_key(mesh):
        raise MeshError("solutions belong to different meshes")
    problem = problem or CellProblem(mesh, material)
    return problem.energy(sol_i.u, sol_j.u)


@dataclass
class StressField:
    quad_points: np.ndarray
    tri: np.ndarray
    nodal: np.ndarray


def stress_field(sol: CellSolution, mesh: Mesh, material, problem: CellProblem | None = None) -> StressField:
    problem = problem or CellProblem(mesh, material)
    problem._check(sol)
    return StressField(problem.quad_stresses(sol.u), problem.tri_stresses(sol.u), problem.nodal_stress(sol.u))


def flux_line_integral(sol: CellSolution, mesh: Mesh, material, direction: int, c: float,
                       problem: CellProblem | None = None) -> np.ndarray:
    problem = problem or CellProblem(mesh, material)
    return problem.flux_line_integral(sol, direction, c)
