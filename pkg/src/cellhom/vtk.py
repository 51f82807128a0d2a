"""Legacy ASCII VTK export of cell fields."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .mesh import Mesh

__all__ = ["write_vtk", "atomic_write_text", "VTK_TRIANGLE", "VTK_QUAD"]

VTK_TRIANGLE = 5
VTK_QUAD = 9


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(a: np.ndarray) -> str:
    return "\n".join(" ".join(f"{v:.10g}" for v in row) for row in np.atleast_2d(a))


def write_vtk(path: str | Path, mesh: Mesh, displacement: np.ndarray | None = None,
              cell_stress: np.ndarray | None = None, title: str = "cellhom field") -> None:
    """Unstructured grid with optional nodal displacement and cell stresses.

    ``cell_stress`` rows are Voigt stresses ``(s11, s22, s12)`` per element,
    quads first, written as symmetric 3x3 tensors.
    """
    N = mesh.n_nodes
    pts = np.column_stack([mesh.nodes, np.zeros(N)])
    cells = [(4, q) for q in mesh.quads] + [(3, t) for t in mesh.tris]
    ncell = len(cells)
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {N} double", _fmt(pts),
             f"CELLS {ncell} {sum(k + 1 for k, _ in cells)}"]
    lines += [" ".join(map(str, (k, *c))) for k, c in cells]
    lines += [f"CELL_TYPES {ncell}"]
    lines += [str(VTK_QUAD)] * len(mesh.quads) + [str(VTK_TRIANGLE)] * len(mesh.tris)
    tags = np.r_[mesh.quad_tags, mesh.tri_tags]
    lines += [f"CELL_DATA {ncell}", "SCALARS region int 1", "LOOKUP_TABLE default", *map(str, tags)]
    if cell_stress is not None:
        s = np.asarray(cell_stress, dtype=float)
        if s.shape != (ncell, 3):
            raise ValueError(f"cell_stress must have shape ({ncell}, 3), got {s.shape}")
        lines.append("TENSORS stress double")
        for s11, s22, s12 in s:
            lines.append(f"{s11:.10g} {s12:.10g} 0\n{s12:.10g} {s22:.10g} 0\n0 0 0")
    if displacement is not None:
        u = np.asarray(displacement, dtype=float).reshape(N, 2)
        lines += [f"POINT_DATA {N}", "VECTORS displacement double", _fmt(np.column_stack([u, np.zeros(N)]))]
    atomic_write_text(path, "\n".join(lines) + "\n")
