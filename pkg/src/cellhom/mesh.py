"""Structured cut-cell meshes of the periodicity cell.

The cell is covered by a uniform grid of square cells of side ``h = l2/n``.
Each hole boundary is replaced by a polygon with ``4 n`` segments. Grid
nodes closer than ``0.3 h`` to that polygon are projected onto it, grid
edges whose end points lie on opposite sides receive an intersection node,
and every cut cell is split into triangles along the chords joining those
boundary nodes. Cells entirely in the material stay bilinear quadrilaterals.
Intersection nodes are keyed by grid edge, so neighbouring cells always
share them and the mesh is conforming.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError
from .geometry import CellGeometry, _points_in_polygon, validate

__all__ = ["Mesh", "QualityReport", "generate", "quality_report", "SNAP_FACTOR"]

SNAP_FACTOR = 0.3
AREA_FLOOR = 1e-4


@dataclass
class Mesh:
    """Conforming Q4/T3 mesh with periodic node pairing.

    ``pairs`` rows are ``(slave, master)`` with ``nodes[slave] = nodes[master]
    + offsets[row]``; ``tags`` index into ``tag_names`` for quads then
    triangles.
    """

    nodes: np.ndarray
    quads: np.ndarray
    tris: np.ndarray
    quad_tags: np.ndarray
    tri_tags: np.ndarray
    tag_names: list[str]
    h: float
    l1: float
    l2: float
    n: int
    pairs: np.ndarray
    offsets: np.ndarray
    hole_boundary: np.ndarray
    outer_boundary: np.ndarray
    snapped: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("nodes", "quads", "tris", "quad_tags", "tri_tags", "pairs", "offsets",
                     "hole_boundary", "outer_boundary"):
            getattr(self, name).setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.quads) + len(self.tris)

    @property
    def cell_area(self) -> float:
        return self.l1 * self.l2

    def element_areas(self) -> tuple[np.ndarray, np.ndarray]:
        return _quad_areas(self.nodes[self.quads]), _tri_areas(self.nodes[self.tris])

    def area(self) -> float:
        qa, ta = self.element_areas()
        return float(qa.sum() + ta.sum())

    def centroids(self) -> tuple[np.ndarray, np.ndarray]:
        return self.nodes[self.quads].mean(axis=1), self.nodes[self.tris].mean(axis=1)


def _tri_areas(xy: np.ndarray) -> np.ndarray:
    a, b, c = xy[:, 0], xy[:, 1], xy[:, 2]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def _quad_areas(xy: np.ndarray) -> np.ndarray:
    x, y = xy[..., 0], xy[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)


def _closest_on_polygon(p: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distance from each point to the closed polygon and the closest point."""
    a = v[None, :, :]
    ab = np.roll(v, -1, axis=0)[None, :, :] - a
    q = p[:, None, :]
    t = np.clip(np.sum((q - a) * ab, axis=2) / np.sum(ab * ab, axis=2), 0.0, 1.0)
    proj = a + t[..., None] * ab
    d2 = np.sum((q - proj) ** 2, axis=2)
    k = np.argmin(d2, axis=1)
    rows = np.arange(len(p))
    return np.sqrt(d2[rows, k]), proj[rows, k]


def _segment_polygon_hit(a: np.ndarray, b: np.ndarray, v: np.ndarray) -> np.ndarray | None:
    """Intersection of segment ``a -> b`` with the polygon closest to ``a``."""
    p0 = v
    p1 = np.roll(v, -1, axis=0)
    r = b - a
    s = p1 - p0
    denom = r[0] * s[:, 1] - r[1] * s[:, 0]
    qa = p0 - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qa[:, 0] * s[:, 1] - qa[:, 1] * s[:, 0]) / denom
        u = (qa[:, 0] * r[1] - qa[:, 1] * r[0]) / denom
    ok = (np.abs(denom) > 0) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
    if not ok.any():
        return None
    tt = t[ok].min()
    return a + tt * r


def _triangle_quality(p: np.ndarray) -> float:
    """Smallest interior angle in degrees, negative for inverted triangles."""
    a, b, c = p
    area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    if area2 <= 0:
        return -1.0
    return float(min(_angles(p)))


def _angles(p: np.ndarray) -> list[float]:
    out = []
    for k in range(len(p)):
        u = p[k - 1] - p[k]
        w = p[(k + 1) % len(p)] - p[k]
        cosang = np.dot(u, w) / (np.linalg.norm(u) * np.linalg.norm(w))
        out.append(math.degrees(math.acos(np.clip(cosang, -1.0, 1.0))))
    return out


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def _triangulate_polygon(pts: np.ndarray) -> list[tuple[int, int, int]]:
    """Max-min-angle triangulation of a small simple CCW polygon (DP)."""
    k = len(pts)
    if k == 3:
        return [(0, 1, 2)]

    def diagonal_ok(i, j):
        if (j - i) % k in (1, k - 1):
            return True
        mid = 0.5 * (pts[i] + pts[j])
        if not _points_in_polygon(mid[None, :], pts)[0]:
            return False
        for e in range(k):
            f = (e + 1) % k
            if len({e, f, i, j}) < 4:
                continue
            if _segments_cross(pts[i], pts[j], pts[e], pts[f]):
                return False
        return True

    best: dict[tuple[int, int], tuple[float, list]] = {}
    for gap in range(2, k):
        for i in range(0, k - gap):
            j = i + gap
            if not diagonal_ok(i, j):
                continue
            cand = (-np.inf, None)
            for m in range(i + 1, j):
                q = _triangle_quality(pts[[i, m, j]])
                if q <= 0:
                    continue
                left = best.get((i, m), (np.inf, [])) if m - i > 1 else (np.inf, [])
                right = best.get((m, j), (np.inf, [])) if j - m > 1 else (np.inf, [])
                if (m - i > 1 and (i, m) not in best) or (j - m > 1 and (m, j) not in best):
                    continue
                score = min(q, left[0], right[0])
                if score > cand[0]:
                    cand = (score, left[1] + right[1] + [(i, m, j)])
            if cand[1] is not None:
                best[(i, j)] = cand
    if (0, k - 1) not in best:
        raise MeshError("cannot triangulate cut cell polygon")
    return best[(0, k - 1)][1]


def generate(g: CellGeometry, n: int, segments_per_hole: int | None = None,
             snap: float = SNAP_FACTOR, check: bool = True) -> Mesh:
    """Mesh the material part of the cell with ``n`` grid cells across ``l2``.

    ``n * l1 / l2`` must be an integer and ``n >= 8`` when there are holes. Holes are approximated by polygons
    with ``segments_per_hole`` sides (default ``4 n``).
    """
    if n < (8 if g.holes else 1):
        raise MeshError(f"n must be at least 8 for a cell with holes, got {n}")
    if check:
        validate(g).raise_if_invalid()
    ratio = n * g.l1 / g.l2
    nx = int(round(ratio))
    if abs(ratio - nx) > 1e-9 * max(1.0, ratio):
        raise MeshError(
            f"n * l1 / l2 = {ratio:.6g} is not an integer; rescale the cell so l1/l2 is a "
            "rational number with a small denominator"
        )
    ny = n
    h = g.l2 / ny
    nseg = segments_per_hole or 4 * n

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    ii, jj = ii.ravel(), jj.ravel()
    xy = np.column_stack([ii * (g.l1 / nx), jj * h])
    xy[ii == nx, 0] = g.l1
    xy[jj == ny, 1] = g.l2
    ngrid = len(xy)
    on_outer = (ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)

    polys = [hole.boundary_polygon(nseg) for hole in g.holes]
    phi = np.full(ngrid, np.inf)
    owner = np.full(ngrid, -1)
    for k, v in enumerate(polys):
        lo = v.min(axis=0) - 2 * h
        hi = v.max(axis=0) + 2 * h
        near = np.flatnonzero(np.all((xy >= lo) & (xy <= hi), axis=1))
        if len(near) == 0:
            continue
        d, _ = _closest_on_polygon(xy[near], v)
        sd = np.where(_points_in_polygon(xy[near], v), -d, d)
        better = sd < phi[near]
        phi[near[better]] = sd[better]
        owner[near[better]] = k

    snap_idx = np.flatnonzero((np.abs(phi) < snap * h) & ~on_outer)
    for k, v in enumerate(polys):
        sel = snap_idx[owner[snap_idx] == k]
        if len(sel):
            _, proj = _closest_on_polygon(xy[sel], v)
            xy[sel] = proj
    phi[snap_idx] = 0.0
    on_hole = np.zeros(ngrid, dtype=bool)
    on_hole[snap_idx] = True

    def gid(i, j):
        return j * (nx + 1) + i

    new_pts: list[np.ndarray] = []
    edge_node: dict[tuple[int, int], int] = {}

    def cut_node(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key in edge_node:
            return edge_node[key]
        pa, pb = (a, b) if phi[a] > 0 else (b, a)
        v = polys[owner[pb]] if owner[pb] >= 0 else polys[owner[pa]]
        hit = _segment_polygon_hit(xy[pa], xy[pb], v)
        if hit is None:
            t = phi[pa] / (phi[pa] - phi[pb])
            hit = xy[pa] + t * (xy[pb] - xy[pa])
        idx = ngrid + len(new_pts)
        new_pts.append(hit)
        edge_node[key] = idx
        return idx

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()
    corners = np.column_stack([gid(ci, cj), gid(ci + 1, cj), gid(ci + 1, cj + 1), gid(ci, cj + 1)])
    cphi = phi[corners]
    full = cphi.min(axis=1) >= 0
    empty = cphi.max(axis=1) <= 0
    degenerate = full & empty
    if degenerate.any():
        centers = xy[corners[degenerate]].mean(axis=1)
        inside = np.zeros(len(centers), dtype=bool)
        for v in polys:
            inside |= _points_in_polygon(centers, v)
        idx = np.flatnonzero(degenerate)
        full[idx[inside]] = False
        empty[idx[~inside]] = False
    quads = corners[full]
    tris: list[tuple[int, int, int]] = []
    for c in np.flatnonzero(~full & ~empty):
        cn = corners[c]
        poly: list[int] = []
        for a, b in zip(cn, np.roll(cn, -1)):
            if phi[a] >= 0:
                poly.append(int(a))
            if phi[a] * phi[b] < 0:
                poly.append(cut_node(int(a), int(b)))
        if len(poly) < 3:
            continue
        coords = np.array([xy[p] if p < ngrid else new_pts[p - ngrid] for p in poly])
        keep = [0]
        for q in range(1, len(poly)):
            if np.linalg.norm(coords[q] - coords[keep[-1]]) > 1e-12 * h:
                keep.append(q)
        if len(keep) > 1 and np.linalg.norm(coords[keep[-1]] - coords[keep[0]]) <= 1e-12 * h:
            keep.pop()
        poly = [poly[q] for q in keep]
        coords = coords[keep]
        if len(poly) < 3:
            continue
        for t in _triangulate_polygon(coords):
            tris.append(tuple(poly[q] for q in t))

    all_xy = np.vstack([xy, np.array(new_pts).reshape(-1, 2)])
    is_hole_node = np.r_[on_hole, np.ones(len(new_pts), dtype=bool)]
    tris_arr = np.array(tris, dtype=np.int64).reshape(-1, 3)

    used = np.zeros(len(all_xy), dtype=bool)
    used[quads.ravel()] = True
    used[tris_arr.ravel()] = True
    renum = -np.ones(len(all_xy), dtype=np.int64)
    renum[used] = np.arange(used.sum())
    nodes = all_xy[used]
    quads = renum[quads]
    tris_arr = renum[tris_arr]

    grid_ii = np.r_[ii, -np.ones(len(new_pts), dtype=int)][used]
    grid_jj = np.r_[jj, -np.ones(len(new_pts), dtype=int)][used]
    g2n = renum[:ngrid]
    slaves, masters, offsets = [], [], []
    for node in np.flatnonzero((grid_ii == nx) | (grid_jj == ny)):
        i, j = grid_ii[node], grid_jj[node]
        mi = 0 if i == nx else i
        mj = 0 if j == ny else j
        master = g2n[gid(mi, mj)]
        if master < 0:
            raise MeshError(f"periodic master of node {node} is not in the material")
        slaves.append(node)
        masters.append(master)
        offsets.append((g.l1 if i == nx else 0.0, g.l2 if j == ny else 0.0))
    pairs = np.column_stack([slaves, masters]).astype(np.int64)
    offsets = np.array(offsets, dtype=float).reshape(-1, 2)
    outer = np.flatnonzero((grid_ii == 0) | (grid_ii == nx) | (grid_jj == 0) | (grid_jj == ny))

    tags = g.region_tags()
    qc = nodes[quads].mean(axis=1)
    tc = nodes[tris_arr].mean(axis=1) if len(tris_arr) else np.zeros((0, 2))

    def tag_of(cent):
        out = np.zeros(len(cent), dtype=np.int64)
        done = np.zeros(len(cent), dtype=bool)
        for reg in g.regions:
            hit = reg.shape.contains(cent) & ~done if len(cent) else np.zeros(0, dtype=bool)
            out[hit] = tags.index(reg.tag)
            done |= hit
        return out

    mesh = Mesh(
        nodes=nodes,
        quads=quads.astype(np.int64),
        tris=tris_arr,
        quad_tags=tag_of(qc),
        tri_tags=tag_of(tc),
        tag_names=tags,
        h=h,
        l1=g.l1,
        l2=g.l2,
        n=n,
        pairs=pairs,
        offsets=offsets,
        hole_boundary=np.flatnonzero(is_hole_node[used]),
        outer_boundary=outer,
        snapped=len(snap_idx),
        meta={"nx": nx, "ny": ny, "segments_per_hole": nseg, "snap_factor": snap},
    )
    qa, ta = mesh.element_areas()
    if len(qa) and qa.min() <= 0:
        raise MeshError(f"inverted quadrilateral {int(np.argmin(qa))}")
    if len(ta) and ta.min() <= AREA_FLOOR * h * h:
        raise MeshError(f"triangle {int(np.argmin(ta))} below the area floor {AREA_FLOOR} h^2")
    return mesh


@dataclass
class QualityReport:
    n_quads: int
    n_tris: int
    n_nodes: int
    min_angle: float
    max_angle: float
    min_angle_tri: float
    max_aspect: float
    min_jacobian: float
    min_scaled_jacobian: float
    min_tri_area_h2: float
    snapped_nodes: int
    snap_factor: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _quad_jacobians(xy: np.ndarray) -> np.ndarray:
    g = 1.0 / math.sqrt(3.0)
    dets = []
    for xi, eta in itertools.product((-g, g), repeat=2):
        dN_dxi = 0.25 * np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)])
        dN_deta = 0.25 * np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)])
        J11 = xy[..., 0] @ dN_dxi
        J12 = xy[..., 1] @ dN_dxi
        J21 = xy[..., 0] @ dN_deta
        J22 = xy[..., 1] @ dN_deta
        dets.append(J11 * J22 - J12 * J21)
    return np.array(dets).T


def _element_angles(xy: np.ndarray) -> np.ndarray:
    u = np.roll(xy, 1, axis=1) - xy
    w = np.roll(xy, -1, axis=1) - xy
    cosang = np.sum(u * w, axis=2) / (np.linalg.norm(u, axis=2) * np.linalg.norm(w, axis=2))
    return np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))


def _aspect(xy: np.ndarray) -> np.ndarray:
    e = np.linalg.norm(np.roll(xy, -1, axis=1) - xy, axis=2)
    return e.max(axis=1) / e.min(axis=1)


def quality_report(m: Mesh) -> QualityReport:
    qxy, txy = m.nodes[m.quads], m.nodes[m.tris]
    angles = [a.ravel() for a in (_element_angles(qxy), _element_angles(txy)) if a.size]
    allang = np.concatenate(angles)
    tang = _element_angles(txy) if len(txy) else np.array([90.0])
    aspects = np.concatenate([a for a in (_aspect(qxy), _aspect(txy)) if a.size])
    jq = _quad_jacobians(qxy) if len(qxy) else np.zeros((0, 4))
    tri_det = 2.0 * _tri_areas(txy) if len(txy) else np.zeros(0)
    qa = _quad_areas(qxy) if len(qxy) else np.zeros(0)
    scaled = np.concatenate([(jq * 4.0 / qa[:, None]).ravel(), np.ones_like(tri_det)])
    dets = np.concatenate([jq.ravel(), tri_det])
    return QualityReport(
        n_quads=len(m.quads),
        n_tris=len(m.tris),
        n_nodes=m.n_nodes,
        min_angle=float(allang.min()),
        max_angle=float(allang.max()),
        min_angle_tri=float(tang.min()),
        max_aspect=float(aspects.max()),
        min_jacobian=float(dets.min()),
        min_scaled_jacobian=float(scaled.min()),
        min_tri_area_h2=float(tri_det.min() / 2.0 / m.h**2) if len(tri_det) else float("nan"),
        snapped_nodes=m.snapped,
        snap_factor=float(m.meta.get("snap_factor", SNAP_FACTOR)),
    )
