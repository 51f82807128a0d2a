"""Run configuration files.

A configuration is a JSON object with a ``schema`` field equal to
``SCHEMA``. Every section rejects unknown keys. Example::

    {
      "schema": "cellhom-run/1",
      "geometry": {"l1": 2.0, "l2": 1.0,
                   "holes": [{"type": "circle", "center": [1.0, 0.5], "radius": 0.25}]},
      "material": {"model": "plane_strain", "E": 1.0, "nu": 0.3},
      "mesh": {"n": 64},
      "bc_mode": "periodic"
    }

Optional sections: ``material.regions`` (tag to material spec), ``solver``
(``method``, ``rtol``, ``maxiter``), ``sweep`` (``nu_list``, ``kg_grid``),
``output`` (``json``, ``csv``, ``vtk``) and ``verify`` (suite options).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .elastic_tensor import IsotropicModuli, moduli_from_engineering
from .errors import CellhomError, ConfigError
from .fem import BC_MODES, MaterialField, SolverOptions
from .geometry import CellGeometry, Circle, Ellipse, Polygon, Region, validate

__all__ = ["SCHEMA", "RunConfig", "parse_config", "load_config", "config_hash", "paper_config"]

SCHEMA = "cellhom-run/1"

_TOP = {"schema", "geometry", "material", "mesh", "bc_mode", "solver", "sweep", "output", "verify"}
_HOLE_KEYS = {"circle": {"type", "center", "radius"},
              "ellipse": {"type", "center", "semi_axes", "angle"},
              "polygon": {"type", "vertices"}}


def _keys(d: Any, allowed: set[str], path: str, required: set[str] = frozenset()):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object, got {type(d).__name__}")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError("; ".join(f"{path}.{k}: missing required field" for k in sorted(missing)))


def _num(d: dict, key: str, path: str, default=None) -> float:
    if key not in d:
        if default is None:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _point(v, path: str) -> tuple[float, float]:
    if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)):
        raise ConfigError(f"{path}: expected a pair of numbers, got {v!r}")
    return float(v[0]), float(v[1])


def _shape(d: dict, path: str):
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError(f"{path}.type: missing required field")
    kind = d["type"]
    if kind not in _HOLE_KEYS:
        raise ConfigError(f"{path}.type: unknown shape {kind!r}, expected one of {sorted(_HOLE_KEYS)}")
    _keys(d, _HOLE_KEYS[kind], path, {k for k in _HOLE_KEYS[kind] if k != "angle"})
    try:
        if kind == "circle":
            return Circle(_point(d["center"], f"{path}.center"), _num(d, "radius", path))
        if kind == "ellipse":
            return Ellipse(_point(d["center"], f"{path}.center"), _point(d["semi_axes"], f"{path}.semi_axes"),
                           _num(d, "angle", path, 0.0))
        return Polygon(tuple(_point(p, f"{path}.vertices[{i}]") for i, p in enumerate(d["vertices"])))
    except ConfigError:
        raise
    except (CellhomError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _geometry(d: dict) -> CellGeometry:
    _keys(d, {"l1", "l2", "holes", "regions", "clearance"}, "geometry", {"l1", "l2"})
    holes = [_shape(h, f"geometry.holes[{i}]") for i, h in enumerate(d.get("holes", []))]
    regions = []
    for i, r in enumerate(d.get("regions", [])):
        p = f"geometry.regions[{i}]"
        _keys(r, {"tag", "shape"}, p, {"tag", "shape"})
        if not isinstance(r["tag"], str) or r["tag"] == "matrix":
            raise ConfigError(f"{p}.tag: must be a string other than 'matrix'")
        regions.append(Region(_shape(r["shape"], f"{p}.shape"), r["tag"]))
    clearance = d.get("clearance")
    try:
        g = CellGeometry(_num(d, "l1", "geometry"), _num(d, "l2", "geometry"), holes, regions,
                         None if clearance is None else _num(d, "clearance", "geometry"))
    except CellhomError as exc:
        raise ConfigError(f"geometry: {exc}") from exc
    rep = validate(g)
    if not rep.valid:
        raise ConfigError("geometry: " + "; ".join(rep.violations))
    return g


def _moduli(d: dict, path: str) -> IsotropicModuli:
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    model = d.get("model", "plane_strain")
    try:
        if model in ("plane_strain", "plane_stress"):
            _keys(d, {"model", "E", "nu", "regions"}, path, {"E", "nu"})
            return moduli_from_engineering(_num(d, "E", path), _num(d, "nu", path), model)
        if model == "direct_KG":
            _keys(d, {"model", "K", "G", "regions"}, path, {"K", "G"})
            return IsotropicModuli(_num(d, "K", path), _num(d, "G", path))
    except ConfigError:
        raise
    except CellhomError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.model: unknown model {model!r}, expected plane_strain, plane_stress or direct_KG")


@dataclass
class RunConfig:
    geometry: CellGeometry
    material: MaterialField
    material_spec: dict
    n: int = 64
    bc_mode: str = "periodic"
    solver: SolverOptions = field(default_factory=SolverOptions)
    nu_list: list[float] | None = None
    kg_grid: dict | None = None
    output: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def model(self) -> str:
        return self.material_spec.get("model", "plane_strain")

    def echo(self) -> dict:
        """The parsed configuration as a JSON-ready dict that re-parses equal."""
        return json.loads(json.dumps(self.raw))

    def moduli_for_nu(self, nu: float) -> IsotropicModuli:
        if self.model not in ("plane_strain", "plane_stress"):
            raise ConfigError("material.model: a Poisson ratio sweep needs plane_strain or plane_stress")
        return moduli_from_engineering(float(self.material_spec["E"]), nu, self.model)


def parse_config(d: dict) -> RunConfig:
    _keys(d, _TOP, "config", {"schema", "geometry", "material"})
    if d["schema"] != SCHEMA:
        raise ConfigError(f"schema: expected {SCHEMA!r}, got {d['schema']!r}")
    g = _geometry(d["geometry"])
    mat_spec = d["material"]
    default = _moduli(mat_spec, "material")
    regions = {}
    for tag, spec in (mat_spec.get("regions") or {}).items():
        if tag not in g.region_tags():
            raise ConfigError(f"material.regions.{tag}: no geometry region with this tag")
        if isinstance(spec, dict) and "regions" in spec:
            raise ConfigError(f"material.regions.{tag}: nested regions are not allowed")
        regions[tag] = _moduli(spec, f"material.regions.{tag}")
    mesh = d.get("mesh", {})
    _keys(mesh, {"n"}, "mesh")
    n = mesh.get("n", 64)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError(f"mesh.n: expected a positive integer, got {n!r}")
    bc = d.get("bc_mode", "periodic")
    if bc not in BC_MODES:
        raise ConfigError(f"bc_mode: expected one of {list(BC_MODES)}, got {bc!r}")
    s = d.get("solver", {})
    _keys(s, {"method", "rtol", "maxiter"}, "solver")
    try:
        solver = SolverOptions(s.get("method", "cg"), _num(s, "rtol", "solver", 1e-10), s.get("maxiter"))
    except ValueError as exc:
        raise ConfigError(f"solver.method: {exc}") from exc
    sweep = d.get("sweep", {})
    _keys(sweep, {"nu_list", "kg_grid"}, "sweep")
    nu_list = sweep.get("nu_list")
    if nu_list is not None and not (isinstance(nu_list, list) and nu_list
                                    and all(isinstance(x, (int, float)) for x in nu_list)):
        raise ConfigError("sweep.nu_list: expected a non-empty list of numbers")
    kg = sweep.get("kg_grid")
    if kg is not None:
        _keys(kg, {"K", "G"}, "sweep.kg_grid", {"K", "G"})
    out = d.get("output", {})
    _keys(out, {"json", "csv", "vtk"}, "output")
    ver = d.get("verify", {})
    if not isinstance(ver, dict):
        raise ConfigError("verify: expected an object")
    return RunConfig(g, MaterialField(default, regions), mat_spec, n, bc, solver,
                     nu_list, kg, out, ver, raw=d)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_hash(d: dict) -> str:
    return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def paper_config(n: int = 192, nu: float = 0.3) -> dict:
    return {
        "schema": SCHEMA,
        "geometry": {"l1": 2.0, "l2": 1.0, "holes": [{"type": "circle", "center": [1.0, 0.5], "radius": 0.25}]},
        "material": {"model": "plane_strain", "E": 1.0, "nu": nu},
        "mesh": {"n": n},
        "bc_mode": "periodic",
    }
