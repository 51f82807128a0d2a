"""Periodicity cell description: rectangle, holes and material regions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import ndimage
from shapely.geometry import Polygon as _ShapelyPolygon

from .errors import GeometryError

__all__ = [
    "Circle",
    "Ellipse",
    "Polygon",
    "Region",
    "CellGeometry",
    "ValidationReport",
    "contains_material",
    "material_area",
    "validate",
    "clear_line",
    "paper_cell",
]


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise GeometryError(f"circle radius must be positive, got {self.radius!r}")

    def contains(self, pts) -> np.ndarray:
        """Strict interior test; boundary points are outside."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        d2 = (p[:, 0] - self.center[0]) ** 2 + (p[:, 1] - self.center[1]) ** 2
        return d2 < self.radius**2

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return cx - r, cy - r, cx + r, cy + r

    def boundary_polygon(self, nseg: int) -> np.ndarray:
        t = 2 * np.pi * np.arange(nseg) / nseg
        return np.column_stack([self.center[0] + self.radius * np.cos(t), self.center[1] + self.radius * np.sin(t)])


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(a) for a in self.semi_axes))
        if min(self.semi_axes) <= 0:
            raise GeometryError(f"ellipse semi-axes must be positive, got {self.semi_axes!r}")

    def _local(self, p):
        c, s = math.cos(self.angle), math.sin(self.angle)
        dx = p[:, 0] - self.center[0]
        dy = p[:, 1] - self.center[1]
        return c * dx + s * dy, -s * dx + c * dy

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = self._local(p)
        a, b = self.semi_axes
        return (x / a) ** 2 + (y / b) ** 2 < 1.0

    @property
    def area(self) -> float:
        return math.pi * self.semi_axes[0] * self.semi_axes[1]

    def bbox(self):
        a, b = self.semi_axes
        c, s = math.cos(self.angle), math.sin(self.angle)
        hw = math.hypot(a * c, b * s)
        hh = math.hypot(a * s, b * c)
        cx, cy = self.center
        return cx - hw, cy - hh, cx + hw, cy + hh

    def boundary_polygon(self, nseg: int) -> np.ndarray:
        t = 2 * np.pi * np.arange(nseg) / nseg
        a, b = self.semi_axes
        c, s = math.cos(self.angle), math.sin(self.angle)
        x, y = a * np.cos(t), b * np.sin(t)
        return np.column_stack([self.center[0] + c * x - s * y, self.center[1] + s * x + c * y])


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by counterclockwise vertices."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        v = tuple(tuple(float(c) for c in p) for p in self.vertices)
        object.__setattr__(self, "vertices", v)
        if len(v) < 3:
            raise GeometryError("a polygon needs at least 3 vertices")
        poly = _ShapelyPolygon(v)
        if not poly.is_valid or poly.area <= 0:
            raise GeometryError("polygon is not simple or is degenerate")
        if _signed_area(np.asarray(v)) <= 0:
            raise GeometryError("polygon vertices must be counterclockwise")

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        return _points_in_polygon(p, np.asarray(self.vertices)) & (_polygon_distance(p, np.asarray(self.vertices)) > 0)

    @property
    def area(self) -> float:
        return _signed_area(np.asarray(self.vertices))

    def bbox(self):
        v = np.asarray(self.vertices)
        return v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max()

    def boundary_polygon(self, nseg: int | None = None) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)


Hole = Union[Circle, Ellipse, Polygon]


@dataclass(frozen=True)
class Region:
    """Material phase: elements whose centroid lies in ``shape`` get ``tag``."""

    shape: Hole
    tag: str


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _points_in_polygon(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Even-odd rule, vectorised over points."""
    inside = np.zeros(len(p), dtype=bool)
    x, y = p[:, 0], p[:, 1]
    for (x0, y0), (x1, y1) in zip(v, np.roll(v, -1, axis=0)):
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xint)
    return inside


def _polygon_distance(p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unsigned distance from points to the closed polyline ``v``."""
    a = v[None, :, :]
    b = np.roll(v, -1, axis=0)[None, :, :]
    q = p[:, None, :]
    ab = b - a
    t = np.clip(np.sum((q - a) * ab, axis=2) / np.sum(ab * ab, axis=2), 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.sqrt(np.min(np.sum((q - proj) ** 2, axis=2), axis=1))


@dataclass(frozen=True)
class CellGeometry:
    """Rectangular cell ``(0, l1) x (0, l2)`` with holes and material regions.

    ``clearance`` is the minimal distance between a hole and the cell edges
    (default ``l2 / 64``). Holes may not cross the cell edges.
    """

    l1: float
    l2: float
    holes: tuple[Hole, ...] = ()
    regions: tuple[Region, ...] = ()
    clearance: float | None = None

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise GeometryError(f"cell sides must be positive, got l1={self.l1!r}, l2={self.l2!r}")
        object.__setattr__(self, "l1", float(self.l1))
        object.__setattr__(self, "l2", float(self.l2))
        object.__setattr__(self, "holes", tuple(self.holes))
        object.__setattr__(self, "regions", tuple(self.regions))
        if self.clearance is None:
            object.__setattr__(self, "clearance", self.l2 / 64.0)

    @property
    def cell_area(self) -> float:
        return self.l1 * self.l2

    def region_tags(self) -> list[str]:
        tags = ["matrix"]
        for r in self.regions:
            if r.tag not in tags:
                tags.append(r.tag)
        return tags


def paper_cell(clearance: float | None = None) -> CellGeometry:
    """2 x 1 cell with a centred circular hole of radius 1/4."""
    return CellGeometry(2.0, 1.0, (Circle((1.0, 0.5), 0.25),), clearance=clearance)


def contains_material(g: CellGeometry, p) -> np.ndarray | bool:
    """True where ``p`` is outside every hole (hole boundaries are material)."""
    pts = np.asarray(p, dtype=float)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    hit = np.zeros(len(pts), dtype=bool)
    for hole in g.holes:
        hit |= hole.contains(pts)
    out = ~hit
    return bool(out[0]) if scalar else out


def _shapely(hole: Hole, nseg: int = 512) -> _ShapelyPolygon:
    return _ShapelyPolygon(hole.boundary_polygon(nseg))


def _overlapping_pairs(g: CellGeometry) -> list[tuple[int, int]]:
    pairs = []
    for i in range(len(g.holes)):
        for j in range(i + 1, len(g.holes)):
            a, b = g.holes[i], g.holes[j]
            if isinstance(a, Circle) and isinstance(b, Circle):
                d = math.dist(a.center, b.center)
                if d < a.radius + b.radius:
                    pairs.append((i, j))
            elif _shapely(a).intersection(_shapely(b)).area > 0:
                pairs.append((i, j))
    return pairs


def material_area(g: CellGeometry) -> float:
    """Cell area minus the (analytic) hole areas."""
    pairs = _overlapping_pairs(g)
    if pairs:
        raise GeometryError(f"holes overlap: {pairs}")
    return g.cell_area - sum(h.area for h in g.holes)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    n_components: int | None = None
    n_periodic_components: int | None = None

    @property
    def valid(self) -> bool:
        return not self.violations

    def raise_if_invalid(self):
        if self.violations:
            raise GeometryError("invalid cell geometry: " + "; ".join(self.violations))


def _pixel_mask(g: CellGeometry, pixel_n: int) -> np.ndarray:
    ny = pixel_n
    nx = max(1, int(round(pixel_n * g.l1 / g.l2)))
    xs = (np.arange(nx) + 0.5) * g.l1 / nx
    ys = (np.arange(ny) + 0.5) * g.l2 / ny
    X, Y = np.meshgrid(xs, ys)
    return contains_material(g, np.column_stack([X.ravel(), Y.ravel()])).reshape(ny, nx)


def _periodic_components(labels: np.ndarray, count: int) -> int:
    parent = list(range(count + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in zip(np.r_[labels[:, 0], labels[0, :]], np.r_[labels[:, -1], labels[-1, :]]):
        if a and b:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    return len({find(k) for k in range(1, count + 1)})


def validate(g: CellGeometry, pixel_n: int = 256) -> ValidationReport:
    """Check clearance, hole disjointness and connectivity of the material.

    Connectivity is tested by labelling a ``pixel_n x pixel_n * l1/l2``
    pixel image, once inside the cell and once with periodic wrap-around.
    """
    rep = ValidationReport()
    c = g.clearance
    for k, hole in enumerate(g.holes):
        x0, y0, x1, y1 = hole.bbox()
        if x0 < c or y0 < c or x1 > g.l1 - c or y1 > g.l2 - c:
            rep.violations.append(f"hole {k} closer than clearance {c:.4g} to the cell boundary")
    for i, j in _overlapping_pairs(g):
        rep.violations.append(f"holes {i} and {j} overlap")
    mask = _pixel_mask(g, pixel_n)
    if not mask.any():
        rep.violations.append("no material in the cell")
        return rep
    labels, count = ndimage.label(mask)
    rep.n_components = int(count)
    rep.n_periodic_components = _periodic_components(labels, count)
    if count != 1:
        rep.violations.append(f"material region is disconnected ({count} components)")
    if rep.n_periodic_components != 1:
        rep.violations.append(
            f"periodic extension of the material is disconnected ({rep.n_periodic_components} components)"
        )
    return rep


def _free_gaps(intervals: Sequence[tuple[float, float]], length: float) -> list[tuple[float, float]]:
    gaps, pos = [], 0.0
    for lo, hi in sorted(intervals):
        if lo > pos:
            gaps.append((pos, lo))
        pos = max(pos, hi)
    if pos < length:
        gaps.append((pos, length))
    return gaps


def clear_line(g: CellGeometry, direction: int, prefer: float | None = None) -> float:
    """Coordinate of a straight periodic line that keeps ``clearance`` from
    every hole.

    ``direction=1`` gives a horizontal line ``x2 = c``, ``direction=2`` a
    vertical line ``x1 = c``. ``prefer`` is returned when it is clear;
    otherwise the midpoint of the widest free band is used.
    """
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    axis = 1 if direction == 1 else 0
    length = g.l2 if direction == 1 else g.l1
    blocked = []
    for hole in g.holes:
        bb = hole.bbox()
        blocked.append((bb[axis] - g.clearance, bb[axis + 2] + g.clearance))
    if prefer is not None:
        if all(not lo <= prefer % length <= hi for lo, hi in blocked):
            return float(prefer)
    gaps = [(a, b) for a, b in _free_gaps(blocked, length) if b > a]
    if not gaps:
        raise GeometryError(
            f"no straight line in direction {direction} avoids the holes; "
            "supply a user-defined polyline path instead"
        )
    a, b = max(gaps, key=lambda ab: ab[1] - ab[0])
    return 0.5 * (a + b)
