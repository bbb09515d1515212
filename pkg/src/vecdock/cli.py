"""Command-line interface: grid, dock, screen, bench subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import scoring
from .bench import PhaseLog, emit_csv, load_scenario, run_benchmark
from .ga import DockingResult, GaConfig, dock
from .grids import (
    DEFAULT_SPACING,
    GridSpec,
    build_grid_maps,
    read_grid_set,
    write_grid_set,
)
from .io_formats import (
    LigandBatch,
    default_parameter_table,
    load_parameter_table,
    parse_ligand_pdbqt,
    parse_protein_pdbqt,
)
from .screening import ScreenConfig, screen_batch, write_screen_csv


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _backend_arg(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--backend",
        choices=["reference", "scalar", "simd"],
        default=None,
        help="compute backend (default: $VECDOCK_BACKEND or simd)",
    )


def _load_table(path: str | None):
    if path is None:
        return default_parameter_table()
    return load_parameter_table(Path(path).read_text())


def cmd_grid(args) -> int:
    table = _load_table(args.params)
    protein = parse_protein_pdbqt(Path(args.receptor).read_text(), table)
    spec = GridSpec.centered(args.center, args.size, args.spacing)
    types = list(args.types) if args.types else table.labels
    grid_set = build_grid_maps(protein, spec, probe_types=types, table=table)
    write_grid_set(grid_set, args.out)
    print(f"wrote {len(grid_set.maps)} maps ({'x'.join(map(str, spec.dims))}) to {args.out}")
    return 0


def _result_json(result: DockingResult, backend_name: str) -> dict:
    s = result.best_score
    return {
        "genotype": result.best_genotype.tolist(),
        "inter": s.inter,
        "intra": s.intra,
        "torsional": s.torsional,
        "total": s.total,
        "trace": [float(v) for v in result.trace],
        "n_evaluations": result.n_evaluations,
        "seed": list(result.seed_key),
        "backend": backend_name,
    }


def cmd_dock(args) -> int:
    table = _load_table(args.params)
    topo = parse_ligand_pdbqt(Path(args.ligand).read_text(), table)
    grid_set = read_grid_set(args.maps)
    backend = scoring.get_backend(args.backend)
    config = GaConfig(
        population_size=args.population,
        generations=args.generations,
        seed=args.seed,
    )
    result = dock(topo, grid_set, config, backend=backend, table=table)
    payload = _result_json(result, backend.name)
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    print(f"best total {result.best_score.total:.4f} kcal/mol "
          f"({result.n_evaluations} evaluations)", file=sys.stderr)
    return 0


def _load_ligand_batch(path: str, table) -> LigandBatch:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.pdbqt"))
        if not files:
            raise SystemExit(f"no .pdbqt files in {path}")
        entries = tuple((f.stem, parse_ligand_pdbqt(f.read_text(), table)) for f in files)
    else:
        entries = ((p.stem, parse_ligand_pdbqt(p.read_text(), table)),)
    return LigandBatch(entries=entries, provenance="file")


def cmd_screen(args) -> int:
    table = _load_table(args.params)
    batch = _load_ligand_batch(args.ligands, table)
    grid_set = read_grid_set(args.maps)
    backend = scoring.get_backend(args.backend)
    config = ScreenConfig(
        worker_count=args.threads,
        pin_workers=args.pin,
        pin_map=_csv_ints(args.pin_map) if args.pin_map else None,
        ga=GaConfig(
            population_size=args.population,
            generations=args.generations,
        ),
        backend=backend.name,
        global_seed=args.seed,
    )
    entries = screen_batch(batch, grid_set, config, table=table)
    write_screen_csv(entries, args.out)
    failed = sum(1 for e in entries if e.error)
    print(f"screened {len(entries)} ligands ({failed} failed) -> {args.out}")
    return 1 if failed == len(entries) else 0


def cmd_bench(args) -> int:
    scenario = load_scenario(Path(args.scenario).read_text())
    log = PhaseLog()
    records = run_benchmark(scenario, log)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    for r in records:
        if r.status == "ok":
            print(
                f"  {r.scenario} {r.backend} t={r.threads}: {r.mean_ms:.2f} ms "
                f"(cv {r.cv:.3f}), speedup {r.speedup_vs_reference:.2f}x"
            )
        else:
            print(f"  {r.scenario} {r.backend}: {r.status}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vecdock",
        description="Molecular docking kernel lab: grid maps, GA search, "
        "swappable scoring backends, benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grid", help="precompute receptor grid maps")
    g.add_argument("--receptor", required=True, help="receptor PDBQT file")
    g.add_argument("--center", type=_csv_floats, required=True, metavar="x,y,z")
    g.add_argument("--size", type=_csv_ints, required=True, metavar="nx,ny,nz")
    g.add_argument("--spacing", type=float, default=DEFAULT_SPACING)
    g.add_argument("--types", type=lambda s: s.split(","), default=None,
                   metavar="C,OA,...", help="probe types (default: whole table)")
    g.add_argument("--params", default=None, help="parameter table file")
    g.add_argument("--out", required=True, help="output .mugd path")
    g.set_defaults(fn=cmd_grid)

    d = sub.add_parser("dock", help="dock one ligand")
    d.add_argument("--ligand", required=True)
    d.add_argument("--maps", required=True)
    d.add_argument("--generations", type=int, default=1000)
    d.add_argument("--population", type=int, default=100)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--params", default=None)
    d.add_argument("--out", default=None, help="result JSON path (default: stdout)")
    _backend_arg(d)
    d.set_defaults(fn=cmd_dock)

    s = sub.add_parser("screen", help="screen a ligand batch")
    s.add_argument("--ligands", required=True, help="directory or single .pdbqt file")
    s.add_argument("--maps", required=True)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--pin", action="store_true", help="pin workers to cores (best effort)")
    s.add_argument("--pin-map", default=None, metavar="0,2,...",
                   help="explicit core ids for pinning")
    s.add_argument("--generations", type=int, default=1000)
    s.add_argument("--population", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--params", default=None)
    s.add_argument("--out", required=True, help="results CSV path")
    _backend_arg(s)
    s.set_defaults(fn=cmd_screen)

    b = sub.add_parser("bench", help="run a benchmark scenario")
    b.add_argument("--scenario", required=True, help="scenario TOML file")
    b.add_argument("--out", required=True, help="bench CSV path")
    b.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
