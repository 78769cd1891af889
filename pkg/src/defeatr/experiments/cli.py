"""Command line front end: run experiments, verify invariants, inspect meshes."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from ..errors import ConfigError, MeshError, MshParseError, SolveError, TraceError
from ..mesh import parse_msh, triangle_quality, validate
from .catalog import run_experiment, svg_kinds
from .checks import format_report, verify
from .config import load_config
from .report import emit_csv, emit_svg


def _cmd_run(config_path: str, out: str | None) -> int:
    config = load_config(config_path)
    out_dir = Path(out) if out is not None else Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rows = run_experiment(config)
    elapsed = time.perf_counter() - t0
    csv_path = out_dir / f"{config.experiment}.csv"
    emit_csv(rows, csv_path)
    written = [csv_path]
    for kind in svg_kinds(config.experiment):
        svg_path = out_dir / f"{config.experiment}_{kind}.svg"
        emit_svg(rows, svg_path, kind)
        written.append(svg_path)
    print(f"{config.experiment}: {len(rows)} rows in {elapsed:.1f}s")
    for p in written:
        print(f"  wrote {p}")
    return 0


def _cmd_verify() -> int:
    results = verify()
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


def _cmd_mesh_info(path: str) -> int:
    mesh = parse_msh(Path(path).read_text())
    validate(mesh)
    angles, _ = triangle_quality(mesh)
    tri = mesh.triangles
    lens = np.hypot(
        *(mesh.nodes[tri[:, [1, 2, 0]]] - mesh.nodes[tri]).transpose(2, 0, 1)
    )
    print(f"{path}")
    print(f"  nodes      {mesh.num_nodes}")
    print(f"  triangles  {mesh.num_triangles}")
    print(f"  min angle  {np.degrees(angles.min()):.2f} deg")
    print(f"  edge range [{lens.min():.4g}, {lens.max():.4g}]")
    for name in sorted(mesh.facet_tags):
        print(f"  facet tag  {name}: {mesh.facet_tags[name].shape[0]} edges")
    for name in sorted(mesh.element_tags):
        print(f"  region     {name}: {mesh.element_tags[name].size} triangles")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="defeatr",
        description="Defeaturing error estimation experiments for 2D Poisson problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a configured experiment sweep")
    p_run.add_argument("--config", required=True, help="path to a key = value config file")
    p_run.add_argument("--out", default=None, help="output directory (default: from config)")
    sub.add_parser("verify", help="run the built-in verification suites")
    p_info = sub.add_parser("mesh-info", help="summarize a .msh mesh file")
    p_info.add_argument("path", help="path to an MSH 2.x ASCII file")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "run":
            return _cmd_run(args.config, args.out)
        if args.command == "verify":
            return _cmd_verify()
        return _cmd_mesh_info(args.path)
    except (ConfigError, MshParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MeshError, SolveError, TraceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
