"""Command line interface: ``cellhom homogenize|sweep|verify|paper-example|mesh-info``."""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import RunConfig, config_hash, load_config, paper_config, parse_config
from .elastic_tensor import E_MAT, IsotropicModuli
from .errors import CellhomError, ConfigError
from .homog import effective_stiffness, moduli_sweep
from .mesh import generate, quality_report
from .verify import TABLE1, TABLE1_NU, TABLE2, SuiteConfig, run_suite
from .vtk import atomic_write_text, write_vtk

__all__ = ["main", "dumps17", "build_parser"]

log = logging.getLogger("cellhom")

RESULT_SCHEMA = "cellhom-result/1"
RECOMMENDED_N = 64


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _dump(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
        return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
    if not obj:
        return "[]"
    return "[\n" + ",\n".join(inner + _dump(v, indent, level + 1) for v in obj) + "\n" + pad + "]"


def dumps17(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _dump(_plain(obj), indent, 0) + "\n"


def _csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    for row in rows:
        w.writerow([format(v, ".6g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _decomposition(C: np.ndarray, D: np.ndarray, m: IsotropicModuli) -> str:
    """Side-by-side ``C*``, ``D`` and ``E`` of the compliance decomposition."""
    lines = [f"C* = s D + t E   with s = 1/K + 1/G = {m.compliance_sum:.6g}, t = 1/G = {1 / m.G:.6g}",
             f"{'C*':<33}{'D':<33}E"]
    for i in range(3):
        lines.append("  ".join(" ".join(f"{M[i, j]:10.6f}" for j in range(3)) for M in (C, D, E_MAT)))
    return "\n".join(lines)


def _effective_config(cfg: RunConfig, n: int | None, bc: str | None) -> RunConfig:
    raw = copy.deepcopy(cfg.raw)
    if n is not None:
        raw.setdefault("mesh", {})["n"] = n
    if bc is not None:
        raw["bc_mode"] = bc
    return parse_config(raw)


def _result_document(cfg: RunConfig, payload: dict) -> dict:
    echo = cfg.echo()
    return {
        "schema": RESULT_SCHEMA,
        "tool": {"name": "cellhom", "version": __version__},
        "config_hash": config_hash(echo),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": echo,
        **payload,
    }


def cmd_homogenize(args) -> int:
    cfg = _effective_config(load_config(args.config), args.n, args.bc)
    if cfg.n < RECOMMENDED_N:
        log.warning("n=%d is below the recommended resolution %d", cfg.n, RECOMMENDED_N)
    mesh = generate(cfg.geometry, cfg.n)
    r = effective_stiffness(cfg.geometry, cfg.material, cfg.n, cfg.bc_mode, cfg.solver, mesh=mesh,
                            geomrepr=args.geomrepr)
    res = r.to_dict()
    res["diagnostics"].pop("runtime_s", None)
    doc = _result_document(cfg, {"result": res})
    out = args.out or cfg.output.get("json")
    text = dumps17(doc)
    if out:
        atomic_write_text(out, text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    vtk = args.vtk or cfg.output.get("vtk")
    if vtk:
        for k, sol in enumerate(r.solutions, 1):
            path = f"{vtk}_e{k}.vtk"
            write_vtk(path, mesh, sol.u, r.problem.element_mean_stress(sol.u), title=f"unit strain e{k}")
            print(f"wrote {path}")
    B = r.B_star.array
    print(f"B* ({r.symmetry}, n={cfg.n}, {cfg.bc_mode}):", file=sys.stderr)
    print(np.array2string(B, precision=6, suppress_small=True), file=sys.stderr)
    if r.D is not None:
        print(_decomposition(r.C_star.array, r.D.array, r.moduli), file=sys.stderr)
    return 0


def _parse_list(text: str, name: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    if not vals:
        raise ConfigError(f"{name}: empty list")
    return vals


def _write_or_print(path: str | None, text: str, label: str):
    if path:
        atomic_write_text(path, text)
        print(f"wrote {path}")
    else:
        print(f"# {label}")
        sys.stdout.write(text)


def _nu_tables(sw, nus) -> tuple[str, str]:
    head = ["entry", *(format(nu, "g") for nu in nus)]
    t1 = [head] + [[k, *v] for k, v in sw.table1().items()]
    t2 = [head + ["spread"]] + [[k, *v, float(sw.spread[i])] for i, (k, v) in enumerate(sw.table2().items())]
    return _csv_text(t1), _csv_text(t2)


def cmd_sweep(args) -> int:
    cfg = _effective_config(load_config(args.config), args.n, None)
    if args.kg_grid:
        vals = _parse_list(args.kg_grid, "--kg-grid")
        moduli = [IsotropicModuli(K, G) for K in vals for G in vals]
        labels = [(m.K, m.G) for m in moduli]
    elif cfg.kg_grid and not (args.nu_list or cfg.nu_list):
        moduli = [IsotropicModuli(float(K), float(G)) for K in cfg.kg_grid["K"] for G in cfg.kg_grid["G"]]
        labels = [(m.K, m.G) for m in moduli]
    else:
        nus = _parse_list(args.nu_list, "--nu-list") if args.nu_list else (cfg.nu_list or list(TABLE1_NU))
        moduli = [cfg.moduli_for_nu(nu) for nu in nus]
        labels = None
    if not cfg.material.is_uniform:
        raise ConfigError("sweep: material regions are not supported, D needs uniform moduli")
    sw = moduli_sweep(cfg.geometry, cfg.n, moduli, labels, cfg.bc_mode, solver=cfg.solver)
    prefix = args.out or cfg.output.get("csv")
    if labels is None:
        t1, t2 = _nu_tables(sw, nus)
        _write_or_print(f"{prefix}_table1.csv" if prefix else None, t1, "effective stiffness")
        _write_or_print(f"{prefix}_table2.csv" if prefix else None, t2, "geometric modulus D")
    else:
        rows = [["K", "G", "B1", "B4", "B2", "B6", "D1", "D2", "D3", "D4", "D5", "D6"]]
        for (K, G), B, D in zip(labels, sw.B_table, sw.D_table):
            rows.append([K, G, B[0, 0], B[1, 1], B[0, 1], B[2, 2], *map(float, D)])
        rows.append(["spread", "", "", "", "", "", *map(float, sw.spread)])
        _write_or_print(f"{prefix}_grid.csv" if prefix else None, _csv_text(rows), "moduli grid")
    print(f"max relative spread of D: {sw.max_spread:.3e}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    opts = {}
    if args.config:
        opts = load_config(args.config).verify
    try:
        suite = SuiteConfig.from_dict(opts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"verify: {exc}") from exc
    if args.n:
        suite.n = args.n
        suite.n_coarse = max(8, args.n // 2)
    report = run_suite(suite, args.level)
    print(report.table())
    if args.out:
        atomic_write_text(args.out, dumps17(report.to_dict()))
        print(f"wrote {args.out}")
    return 0 if report.passed else 1


def cmd_paper_example(args) -> int:
    n = args.n
    if n < RECOMMENDED_N:
        log.warning("n=%d is below the recommended resolution %d; expect errors above the table tolerance",
                    n, RECOMMENDED_N)
    cfg = parse_config(paper_config(n))
    moduli = [cfg.moduli_for_nu(nu) for nu in TABLE1_NU]
    sw = moduli_sweep(cfg.geometry, n, moduli, list(TABLE1_NU), solver=cfg.solver)
    print(f"2x1 cell, centred hole r=1/4, E=1, plane strain, n={n}, periodic")
    print("\nEffective stiffness: computed / published (relative error)")
    print(f"{'nu':>8} " + " ".join(f"{k:>26}" for k in TABLE1))
    t1 = sw.table1()
    for j, nu in enumerate(TABLE1_NU):
        cells = []
        for k in TABLE1:
            v, ref = t1[k][j], TABLE1[k][j]
            cells.append(f"{v:8.4f} / {ref:6.3f} ({(v - ref) / ref:+6.2%})")
        print(f"{nu:8.0e} " + " ".join(f"{c:>26}" for c in cells))
    print("\nGeometric modulus D: computed / published (relative error)")
    t2 = sw.table2()
    for k, ref in TABLE2.items():
        vals = t2[k]
        errs = [(v - ref) / ref for v in vals]
        worst = max(errs, key=abs)
        print(f"{k}: {min(vals):.5f}..{max(vals):.5f} vs {ref:.5f}  worst {worst:+.3%}")
    print(f"\nmax relative spread of D over nu: {sw.max_spread:.3e}")
    if args.out:
        a, b = _nu_tables(sw, TABLE1_NU)
        atomic_write_text(f"{args.out}_table1.csv", a)
        atomic_write_text(f"{args.out}_table2.csv", b)
        print(f"wrote {args.out}_table1.csv, {args.out}_table2.csv")
    return 0


def cmd_mesh_info(args) -> int:
    cfg = _effective_config(load_config(args.config), args.n, None)
    m = generate(cfg.geometry, cfg.n)
    q = quality_report(m)
    info = {"n": cfg.n, "h": m.h, "nodes": m.n_nodes, "quads": len(m.quads), "triangles": len(m.tris),
            "periodic_pairs": len(m.pairs), "material_area": m.area(), "snapped_nodes": m.snapped,
            "quality": q.as_dict()}
    sys.stdout.write(dumps17(info))
    if args.vtk:
        write_vtk(args.vtk, m, title="cellhom mesh")
        print(f"wrote {args.vtk}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cellhom", description="Periodic homogenization of planar elastic cells.")
    p.add_argument("--version", action="version", version=f"cellhom {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    h = sub.add_parser("homogenize", help="effective tensors of one configuration")
    h.add_argument("config", help="run configuration (JSON)")
    h.add_argument("--n", type=int, help="mesh resolution (cells along the shorter side)")
    h.add_argument("--bc", choices=("periodic", "dirichlet_affine"), help="boundary condition mode")
    h.add_argument("--out", help="result JSON path (default: stdout)")
    h.add_argument("--vtk", help="write basis solution fields to PREFIX_e{1,2,3}.vtk")
    h.add_argument("--geomrepr", action="store_true", help="add the closed-form D route")
    h.set_defaults(func=cmd_homogenize)

    s = sub.add_parser("sweep", help="effective tensors over Poisson ratios or a moduli grid")
    s.add_argument("config")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--nu-list", help="comma separated Poisson ratios")
    g.add_argument("--kg-grid", help="comma separated values used for both K and G")
    s.add_argument("--n", type=int)
    s.add_argument("--out", help="CSV path prefix (default: stdout)")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("config", nargs="?", help="optional run configuration with a 'verify' section")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--n", type=int, help="acceptance resolution (coarse level is n/2)")
    v.add_argument("--out", help="JSON report path")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("paper-example", help="reproduce the published tables")
    e.add_argument("--n", type=int, default=192)
    e.add_argument("--out", help="CSV path prefix")
    e.set_defaults(func=cmd_paper_example)

    m = sub.add_parser("mesh-info", help="mesh statistics and quality")
    m.add_argument("config")
    m.add_argument("--n", type=int)
    m.add_argument("--vtk", help="write the mesh to a VTK file")
    m.set_defaults(func=cmd_mesh_info)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"cellhom: configuration error: {exc}", file=sys.stderr)
        return 2
    except (CellhomError, OSError) as exc:
        print(f"cellhom: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
