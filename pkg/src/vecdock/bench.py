"""Benchmark harness: repetition protocol, kernel-scoped timing, modeled
flop/byte counts for roofline points, CSV emission.

Timing covers only the docking + scoring kernels: ligand parsing/generation
and grid construction happen in separate phases before the timed region, and
every phase is recorded so tests can assert the separation. Each (backend,
threads) cell runs `repetitions` times and statistics are computed over the
runs left after dropping the first `warmup_discard`.
"""

from __future__ import annotations

import csv
import io
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields

import numpy as np

from . import scoring
from .ga import GaConfig
from .grids import GridSpec, build_grid_maps, read_grid_set
from .io_formats import (
    LigandBatch,
    default_parameter_table,
    generate_synthetic_ligand,
    make_replicated_batch,
    make_synthetic_batch,
    parse_ligand_pdbqt,
    parse_protein_pdbqt,
)
from .model import Protein, build_nonbond_pairlist
from .screening import ScreenConfig, screen_batch

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class PhaseLog:
    """Named (phase, start, stop) spans; the kernel timer must not overlap
    any parse/grid phase."""

    spans: list[tuple[str, float, float]] = field(default_factory=list)

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.spans.append((name, t0, time.perf_counter()))

    def overlapping(self, name_a: str, name_b: str) -> bool:
        a = [(s, e) for n, s, e in self.spans if n == name_a]
        b = [(s, e) for n, s, e in self.spans if n == name_b]
        return any(s1 < e2 and s2 < e1 for s1, e1 in a for s2, e2 in b)


@dataclass(frozen=True)
class LigandSource:
    """Where the benchmark ligands come from: a file, a synthetic spec, or a
    replicated base molecule."""

    kind: str                      # file | synthetic | replicated
    path: str | None = None
    seed: int = 7
    n_atoms: int = 24
    n_torsions: int = 4
    count: int = 1

    def load(self) -> LigandBatch:
        if self.kind == "file":
            with open(self.path) as fh:
                topo = parse_ligand_pdbqt(fh.read())
            if self.count > 1:
                return make_replicated_batch(topo, self.count)
            return LigandBatch(entries=((self.path, topo),), provenance="file")
        if self.kind == "synthetic":
            return make_synthetic_batch(self.seed, self.count, self.n_atoms, self.n_torsions)
        if self.kind == "replicated":
            base = generate_synthetic_ligand(self.seed, self.n_atoms, self.n_torsions)
            return make_replicated_batch(base, self.count)
        raise ValueError(f"unknown ligand source kind {self.kind!r}")


@dataclass(frozen=True)
class BenchScenario:
    name: str
    ligands: LigandSource
    backends: tuple[str, ...] = ("reference", "scalar", "simd")
    thread_counts: tuple[int, ...] = (1,)
    repetitions: int = 10
    warmup_discard: int = 3
    ga: GaConfig = field(default_factory=lambda: GaConfig(population_size=30, generations=5))
    # receptor + grid (synthetic receptor unless maps/receptor file given)
    receptor_path: str | None = None
    maps_path: str | None = None
    receptor_seed: int = 11
    receptor_atoms: int = 24
    grid_center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    grid_dims: tuple[int, int, int] = (17, 17, 17)
    grid_spacing: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (self.repetitions > self.warmup_discard >= 0):
            raise ValueError(
                f"need repetitions > warmup_discard >= 0, got "
                f"{self.repetitions}/{self.warmup_discard}"
            )


@dataclass
class BenchRecord:
    scenario: str
    backend: str
    threads: int
    mean_ms: float
    stddev_ms: float
    cv: float
    ligands_per_s: float
    modeled_flops: float
    modeled_bytes: float
    modeled_ai: float
    speedup_vs_reference: float
    n_samples: int
    lane_utilization: float   # modeled proxy, not a hardware counter
    status: str = "ok"


BENCH_CSV_COLUMNS = [f.name for f in fields(BenchRecord)]


# Modeled flop/byte constants per canonical kernel step (see scoring/reference
# for the sequences). exp/sqrt/div are counted as 1 flop each; this is a
# stated model, not a measurement.
PAIR_FLOPS = {
    "distance": 8,        # 3 sub, 3 mul, 2 add
    "clamp": 1,
    "well": 9,            # inv, i2, i3, i6, sel-mul, 2 coef mul, sub
    "elec": 7,            # sqrt, exp-arg mul+neg, exp, 1+k*e, div, r*eps, div
    "desolv": 4,          # r2/denom, neg, exp, mul
    "combine": 3,
}
PAIR_FLOP_COUNT = sum(PAIR_FLOPS.values())

ATOM_FLOPS = {
    "bounds": 6,
    "cell": 12,           # 3 * (sub, div, floor, frac)
    "trilerp": 84,        # 3 maps * 7 lerps * 4 flops
    "scale_combine": 5,
}
ATOM_FLOP_COUNT = sum(ATOM_FLOPS.values())

PAIR_BYTES = {
    "coords": 24,         # 2 atoms * 3 coords * 4 B
    "params": 22,         # a, b, qq, desolv (f32), index pair (i32*2)... modeled
}
PAIR_BYTE_COUNT = 46

ATOM_BYTES = {
    "coords": 12,
    "atom_params": 12,    # slot + charge + desolv factor
    "grid_corners": 96,   # 8 corners * 3 maps * 4 B
}
ATOM_BYTE_COUNT = 120


def estimate_flops(topology, ga_config: GaConfig, table=None) -> tuple[float, float]:
    """Analytic (flops, bytes) model of one docking run's kernel work.

    evaluations = population * generations (per-generation kernel passes; the
    initial-population evaluation is excluded so the model is exactly linear
    in `generations`).
    """
    table = table or default_parameter_table()
    pairs = build_nonbond_pairlist(topology, table).n_pairs
    evaluations = ga_config.population_size * ga_config.generations
    flops = float(evaluations) * (PAIR_FLOP_COUNT * pairs + ATOM_FLOP_COUNT * topology.n_atoms)
    nbytes = float(evaluations) * (PAIR_BYTE_COUNT * pairs + ATOM_BYTE_COUNT * topology.n_atoms)
    return flops, nbytes


def _modeled_lane_utilization(backend_name: str, n_pairs: int) -> float:
    """Lanes-used / lane-width proxy (modeled, no hardware counters)."""
    if backend_name == "reference":
        return 1.0 / 8.0
    if n_pairs == 0:
        return 1.0
    lane = 8
    blocks = -(-n_pairs // lane)
    return n_pairs / (blocks * lane)


def _build_inputs(scenario: BenchScenario, log: PhaseLog):
    with log.phase("parse"):
        batch = scenario.ligands.load()
        table = default_parameter_table()
        if scenario.receptor_path:
            with open(scenario.receptor_path) as fh:
                protein = parse_protein_pdbqt(fh.read())
        else:
            rng = np.random.default_rng(scenario.receptor_seed)
            protein = Protein(
                coords=rng.uniform(-5.0, 5.0, (3, scenario.receptor_atoms)).astype(np.float32),
                type_index=rng.integers(0, len(table), scenario.receptor_atoms).astype(np.int32),
                charge=rng.uniform(-0.4, 0.4, scenario.receptor_atoms).astype(np.float32),
            )
    with log.phase("grid"):
        if scenario.maps_path:
            grid_set = read_grid_set(scenario.maps_path)
        else:
            spec = GridSpec.centered(scenario.grid_center, scenario.grid_dims, scenario.grid_spacing)
            labels = sorted(
                {
                    table[int(t)].type_label
                    for _, topo in batch.entries
                    for t in topo.type_index
                }
            )
            grid_set = build_grid_maps(protein, spec, probe_types=labels, table=table)
    return batch, grid_set


def run_benchmark(scenario: BenchScenario, log: PhaseLog | None = None) -> list[BenchRecord]:
    """Execute the scenario: per (backend, threads), `repetitions` timed runs
    of the docking kernels; statistics over the kept samples; speedups against
    the reference backend at equal thread count."""
    log = log if log is not None else PhaseLog()
    batch, grid_set = _build_inputs(scenario, log)

    records: list[BenchRecord] = []
    kept = scenario.repetitions - scenario.warmup_discard
    flops, nbytes = estimate_flops(batch.entries[0][1], scenario.ga)
    flops *= len(batch)
    nbytes *= len(batch)

    for backend_name in scenario.backends:
        try:
            backend = scoring.get_backend(backend_name)
            if hasattr(backend, "warmup"):
                backend.warmup()
        except (scoring.BackendUnavailable, ValueError) as exc:
            records.append(
                BenchRecord(
                    scenario=scenario.name, backend=backend_name, threads=0,
                    mean_ms=float("nan"), stddev_ms=float("nan"), cv=float("nan"),
                    ligands_per_s=float("nan"), modeled_flops=flops, modeled_bytes=nbytes,
                    modeled_ai=flops / nbytes, speedup_vs_reference=float("nan"),
                    n_samples=0, lane_utilization=float("nan"), status=f"skipped: {exc}",
                )
            )
            continue
        for threads in scenario.thread_counts:
            samples_ms = []
            for rep in range(scenario.repetitions):
                cfg = ScreenConfig(
                    worker_count=threads,
                    ga=scenario.ga,
                    backend=backend_name,
                    global_seed=scenario.seed,
                )
                with log.phase("kernel"):
                    t0 = time.perf_counter()
                    entries = screen_batch(batch, grid_set, cfg)
                    elapsed_ms = (time.perf_counter() - t0) * 1e3
                failures = [e for e in entries if e.error]
                if failures:
                    raise RuntimeError(
                        f"{len(failures)} ligand(s) failed during benchmark: "
                        f"{failures[0].error}"
                    )
                samples_ms.append(elapsed_ms)
            kept_ms = np.array(samples_ms[scenario.warmup_discard:], dtype=np.float64)
            mean = float(kept_ms.mean())
            std = float(kept_ms.std(ddof=1)) if kept > 1 else 0.0
            n_pairs = build_nonbond_pairlist(
                batch.entries[0][1], default_parameter_table()
            ).n_pairs
            records.append(
                BenchRecord(
                    scenario=scenario.name,
                    backend=backend_name,
                    threads=threads,
                    mean_ms=mean,
                    stddev_ms=std,
                    cv=std / mean if mean else float("nan"),
                    ligands_per_s=len(batch) / (mean / 1e3),
                    modeled_flops=flops,
                    modeled_bytes=nbytes,
                    modeled_ai=flops / nbytes,
                    speedup_vs_reference=float("nan"),
                    n_samples=int(kept_ms.size),
                    lane_utilization=_modeled_lane_utilization(backend_name, n_pairs),
                )
            )

    by_key = {(r.backend, r.threads): r for r in records if r.status == "ok"}
    for r in records:
        if r.status != "ok":
            continue
        if r.backend == "reference":
            r.speedup_vs_reference = 1.0
        else:
            ref = by_key.get(("reference", r.threads))
            if ref is not None:
                r.speedup_vs_reference = ref.mean_ms / r.mean_ms
    return records


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(records: list[BenchRecord], sink=None) -> str:
    """Records as CSV: fixed column order (BenchRecord fields), rows ordered
    by (scenario, backend, threads); byte-stable for a given record set."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(BENCH_CSV_COLUMNS)
    for r in sorted(records, key=lambda r: (r.scenario, r.backend, r.threads)):
        w.writerow([_fmt(getattr(r, name)) for name in BENCH_CSV_COLUMNS])
    text = out.getvalue()
    if sink is not None:
        close = False
        if isinstance(sink, str) or hasattr(sink, "__fspath__"):
            sink = open(sink, "w", newline="")
            close = True
        try:
            sink.write(text)
        finally:
            if close:
                sink.close()
    return text


def parse_csv(text: str) -> list[BenchRecord]:
    """Inverse of emit_csv (round-trip exact for repr-formatted floats)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != BENCH_CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    for row in reader:
        kwargs = {}
        for name, value in zip(BENCH_CSV_COLUMNS, row):
            ftype = BenchRecord.__dataclass_fields__[name].type
            if ftype == "int":
                kwargs[name] = int(value)
            elif ftype == "float":
                kwargs[name] = float(value)
            else:
                kwargs[name] = value
        out.append(BenchRecord(**kwargs))
    return out


def load_scenario(text: str) -> BenchScenario:
    """Parse the TOML scenario format (see README for the schema)."""
    data = tomllib.loads(text)
    lig = data.get("ligands", {})
    source = LigandSource(
        kind=lig.get("source", "synthetic"),
        path=lig.get("file"),
        seed=int(lig.get("seed", 7)),
        n_atoms=int(lig.get("n_atoms", 24)),
        n_torsions=int(lig.get("n_torsions", 4)),
        count=int(lig.get("count", 1)),
    )
    ga_data = data.get("ga", {})
    ga = GaConfig(
        population_size=int(ga_data.get("population", 30)),
        generations=int(ga_data.get("generations", 5)),
        seed=int(ga_data.get("seed", 0)),
    )
    run = data.get("run", {})
    rec = data.get("receptor", {})
    grid = data.get("grid", {})
    return BenchScenario(
        name=data.get("name", "scenario"),
        ligands=source,
        backends=tuple(run.get("backends", ["reference", "scalar", "simd"])),
        thread_counts=tuple(int(t) for t in run.get("threads", [1])),
        repetitions=int(run.get("repetitions", 10)),
        warmup_discard=int(run.get("warmup_discard", 3)),
        ga=ga,
        receptor_path=rec.get("file"),
        maps_path=data.get("maps", {}).get("file") if "maps" in data else None,
        receptor_seed=int(rec.get("seed", 11)),
        receptor_atoms=int(rec.get("n_atoms", 24)),
        grid_center=tuple(float(v) for v in grid.get("center", (0.0, 0.0, 0.0))),
        grid_dims=tuple(int(v) for v in grid.get("dims", (17, 17, 17))),
        grid_spacing=float(grid.get("spacing", 0.5)),
        seed=int(run.get("seed", 0)),
    )
