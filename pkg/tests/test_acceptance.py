"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line printed in the pytest terminal summary
(run with `pytest tests/test_acceptance.py -v` and see the "acceptance
criteria" section at the end).
"""

import io
import math
import os
import time

import networkx as nx
import numpy as np
import pytest

from vecdock import energy, grids, io_formats, model, scoring
from vecdock.bench import BenchScenario, LigandSource, emit_csv, run_benchmark
from vecdock.ga import GaConfig, dock
from vecdock.pose import apply_pose
from vecdock.screening import ScreenConfig, screen_batch

from conftest import make_pocket_protein, record_acceptance

import test_grids  # reuses the independent per-node / trilinear oracles


def _check(name: str, cond: bool, detail: str = ""):
    record_acceptance(name, bool(cond), detail)
    assert cond, f"{name}: {detail}"


def _random_case(rng, max_atoms=40, max_torsions=6):
    n_at = int(rng.integers(5, max_atoms + 1))
    n_tor = int(rng.integers(0, min(max_torsions, n_at - 2) + 1))
    return n_at, n_tor


@pytest.fixture(scope="module")
def pocket(table):
    protein = make_pocket_protein(31, 20, radius=6.5, table=table)
    spec = grids.GridSpec.centered((0.0, 0.0, 0.0), (17, 17, 17), 0.5)
    return grids.build_grid_maps(protein, spec, probe_types=table.labels, table=table)


def test_backend_equivalence_1000_cases(pocket, table):
    """Relative |total(simd) - total(reference)| <= 2e-6 (the relaxed-math
    regression bound, 0.0002%) over >= 1000 random cases in < 1 min."""
    rng = np.random.default_rng(2024)
    ligands = [
        io_formats.generate_synthetic_ligand(1000 + k, *_random_case(rng))
        for k in range(25)
    ]
    t0 = time.perf_counter()
    worst = 0.0
    n_cases = 0
    for lig in ligands:
        ctx = scoring.prepare_context(lig, pocket, table=table)
        for _ in range(40):
            genes = np.concatenate(
                [
                    rng.uniform(-4.5, 4.5, 3),
                    rng.normal(size=4),
                    rng.uniform(-math.pi, math.pi, lig.n_torsions),
                ]
            )
            ref = scoring.score_pose(
                lig, genes, pocket, backend="reference", table=table, context=ctx
            )
            for other in ("simd", "scalar"):
                got = scoring.score_pose(
                    lig, genes, pocket, backend=other, table=table, context=ctx
                )
                rel = abs(got.total - ref.total) / max(1.0, abs(ref.total))
                worst = max(worst, rel)
            n_cases += 1
    elapsed = time.perf_counter() - t0
    _check(
        "backend-equivalence",
        n_cases >= 1000 and worst <= 2e-6 and elapsed < 60.0,
        f"{n_cases} cases, worst rel {worst:.2e} (bound 2e-6 = 0.0002%), {elapsed:.1f}s",
    )


def test_oracle_suite_trilinear():
    """Trilinear lookup vs independent double-precision oracle (1e-6)."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        spec = grids.GridSpec(origin=tuple(rng.uniform(-2, 0, 3)), spacing=0.625, dims=(4, 4, 4))
        m = rng.uniform(-4, 4, spec.dims).astype(np.float32)
        for _ in range(60):
            p = np.asarray(spec.origin) + rng.uniform(0, 3 * spec.spacing, 3)
            got = grids.trilinear_lookup(m, spec, p)
            want = test_grids._trilerp_oracle(m, spec, p)
            worst = max(worst, abs(got - want))
    _check("oracle-trilinear", worst <= 1e-6, f"worst abs diff {worst:.2e}")


def test_oracle_suite_grid_build(table):
    """Grid build vs per-node brute-force sum (rel 1e-4, 16^3, 50 atoms)."""
    protein = make_pocket_protein(41, 50, radius=5.5, table=table)
    spec = grids.GridSpec.centered((0.0, 0.0, 0.0), (16, 16, 16), 0.55)
    weights = energy.TermWeights()
    probes = ["C", "OA", "HD"]
    gset = grids.build_grid_maps(protein, spec, probes, weights, table)
    oracle_maps, oracle_elec, oracle_desolv = test_grids._brute_force_maps(
        protein, spec, probes, weights, table
    )
    worst = 0.0
    for label in probes:
        got = gset.maps[label].astype(np.float64)
        rel = np.abs(got - oracle_maps[label]) / np.maximum(np.abs(oracle_maps[label]), 1e-4)
        worst = max(worst, float(rel.max()))
    for got, want in ((gset.elec_map, oracle_elec), (gset.desolv_map, oracle_desolv)):
        rel = np.abs(got.astype(np.float64) - want) / np.maximum(np.abs(want), 1e-4)
        worst = max(worst, float(rel.max()))
    _check("oracle-grid-build", worst <= 1e-4, f"worst rel {worst:.2e} (16^3 grid, 50 atoms)")


def test_oracle_suite_pairlist_and_masks(table):
    """Pair list vs BFS-separation oracle and fragment masks vs reachability
    oracle, exact, on random trees up to 20 atoms."""
    rng = np.random.default_rng(6)
    pair_ok = True
    mask_ok = True
    for trial in range(60):
        n = int(rng.integers(2, 21))
        parents = [int(rng.integers(0, k)) for k in range(1, n)]
        bonds = np.array([[p, k + 1] for k, p in enumerate(parents)], dtype=np.int32)
        topo = model.LigandTopology(
            coords0=rng.uniform(-4, 4, (3, n)).astype(np.float32),
            type_index=rng.integers(0, len(table), n).astype(np.int32),
            charge=rng.uniform(-0.5, 0.5, n).astype(np.float32),
            bonds=bonds,
            rotatable_bonds=tuple(
                model.RotatableBond(int(a), int(b), np.empty(0, dtype=np.int32))
                for a, b in bonds.tolist()
            ),
        )
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(map(tuple, bonds.tolist()))
        spl = dict(nx.all_pairs_shortest_path_length(g))
        want_pairs = sorted(
            (i, j) for i in range(n) for j in range(i + 1, n) if spl[i][j] >= 4
        )
        got_pairs = model.build_nonbond_pairlist(topo, table).pairs()
        pair_ok &= got_pairs == want_pairs
        masks = model.build_fragment_masks(topo)
        for rb, mask in zip(topo.rotatable_bonds, masks):
            g2 = g.copy()
            g2.remove_edge(rb.axis_a, rb.axis_b)
            want = sorted(nx.node_connected_component(g2, rb.axis_b))
            mask_ok &= mask.tolist() == want
    _check("oracle-pairlist-and-masks", pair_ok and mask_ok,
           "exact match over 60 random trees (<= 20 atoms)")


def test_geometry_invariants(pocket, table):
    """Rigid distance preservation (1e-5), torsion bond-length preservation
    (1e-5), intra invariance under rigid-only genotype change (1e-4)."""
    rng = np.random.default_rng(7)
    worst_rigid = worst_bond = worst_intra = 0.0
    for case in range(25):
        n_at, n_tor = _random_case(rng, max_atoms=30)
        lig = io_formats.generate_synthetic_ligand(2000 + case, n_at, n_tor)
        tors = rng.uniform(-math.pi, math.pi, n_tor)
        rigid_a = np.concatenate([rng.uniform(-2, 2, 3), rng.normal(size=4)])
        rigid_b = np.concatenate([rng.uniform(-2, 2, 3), rng.normal(size=4)])

        # rigid-only pose: all pairwise distances preserved
        pose = apply_pose(lig, np.concatenate([rigid_a, np.zeros(n_tor)]))
        d0 = np.linalg.norm(
            lig.coords0.astype(np.float64).T[:, None] - lig.coords0.astype(np.float64).T[None],
            axis=-1,
        )
        d1 = np.linalg.norm(
            pose.astype(np.float64).T[:, None] - pose.astype(np.float64).T[None], axis=-1
        )
        sel = d0 > 1e-9
        worst_rigid = max(worst_rigid, float(np.max(np.abs(d1[sel] - d0[sel]) / d0[sel])))

        # full pose: bond lengths preserved
        full = apply_pose(lig, np.concatenate([rigid_a, tors]))
        xyz0 = lig.coords0.astype(np.float64)
        xyz1 = full.astype(np.float64)
        for a, b in lig.bonds.tolist():
            l0 = np.linalg.norm(xyz0[:, a] - xyz0[:, b])
            l1 = np.linalg.norm(xyz1[:, a] - xyz1[:, b])
            worst_bond = max(worst_bond, abs(l1 - l0) / l0)

        # same torsions, different rigid placement: intra unchanged
        bd_a = scoring.score_pose(
            lig, np.concatenate([rigid_a, tors]), pocket, table=table, backend="simd"
        )
        bd_b = scoring.score_pose(
            lig, np.concatenate([rigid_b, tors]), pocket, table=table, backend="simd"
        )
        worst_intra = max(
            worst_intra, abs(bd_a.intra - bd_b.intra) / max(1.0, abs(bd_a.intra))
        )
    _check(
        "geometry-invariants",
        worst_rigid <= 1e-5 and worst_bond <= 1e-5 and worst_intra <= 1e-4,
        f"rigid {worst_rigid:.2e} (<=1e-5), bonds {worst_bond:.2e} (<=1e-5), "
        f"intra {worst_intra:.2e} (<=1e-4)",
    )


def test_ga_contract_default_run_and_worker_determinism(big_grid_set):
    """Monotone elitism trace on the default 100x1000 run; bitwise-identical
    DockingResult across worker counts 1, 2, 8."""
    lig = io_formats.generate_synthetic_ligand(seed=77, n_atoms=10, n_torsions=2)
    cfg = GaConfig(seed=12)  # stock run: 100 individuals over 1000 generations
    result = dock(lig, big_grid_set, cfg, backend="simd")
    monotone = bool(np.all(np.diff(result.trace) <= 0))
    right_shape = len(result.trace) == cfg.generations + 1
    evals = result.n_evaluations == cfg.population_size * (cfg.generations + 1)

    batch = io_formats.make_replicated_batch(lig, 4)
    runs = {}
    for wc in (1, 2, 8):
        runs[wc] = screen_batch(
            batch,
            big_grid_set,
            ScreenConfig(
                worker_count=wc,
                ga=GaConfig(population_size=100, generations=120),
                backend="simd",
                global_seed=3,
            ),
        )
    deterministic = True
    for wc in (2, 8):
        for a, b in zip(runs[1], runs[wc]):
            deterministic &= a.error is None and b.error is None
            deterministic &= np.array_equal(a.result.best_genotype, b.result.best_genotype)
            deterministic &= np.array_equal(
                a.result.trace.view(np.uint32), b.result.trace.view(np.uint32)
            )
            deterministic &= a.result.best_score == b.result.best_score
    _check(
        "ga-contract",
        monotone and right_shape and evals and deterministic,
        f"trace monotone={monotone}, evals=100*1001={evals}, "
        f"bitwise across workers 1/2/8={deterministic}",
    )


def test_vectorization_speedup():
    """simd >= 1.5x over reference on the intra-dominated 40-atom scenario,
    repetitions 10 / discard 3, single worker, < 5 min. The interpreted
    baseline leaves far more headroom than compiled-vs-compiled setups."""
    t0 = time.perf_counter()
    scenario = BenchScenario(
        name="intra40",
        ligands=LigandSource(kind="replicated", seed=9, n_atoms=40, n_torsions=6, count=2),
        backends=("reference", "simd"),
        thread_counts=(1,),
        repetitions=10,
        warmup_discard=3,
        ga=GaConfig(population_size=20, generations=3),
        receptor_seed=31,
        receptor_atoms=20,
        grid_dims=(17, 17, 17),
        grid_spacing=0.5,
    )
    records = run_benchmark(scenario)
    elapsed = time.perf_counter() - t0
    by = {r.backend: r for r in records if r.status == "ok"}
    speedup = by["simd"].speedup_vs_reference
    _check(
        "vectorization-speedup",
        speedup >= 1.5 and elapsed < 300.0,
        f"simd {speedup:.1f}x over reference (gate 1.5x), "
        f"ref {by['reference'].mean_ms:.1f} ms vs simd {by['simd'].mean_ms:.2f} ms, "
        f"{elapsed:.0f}s",
    )


def test_parallel_efficiency(big_grid_set):
    """256-ligand synthetic screen: bitwise equality across worker counts
    always; 4-worker vs 1-worker wall ratio <= 0.5 asserted on >= 4 cores."""
    batch = io_formats.make_synthetic_batch(seed=60, count=256, n_atoms=36, n_torsions=5)
    ga = GaConfig(population_size=100, generations=6)
    times = {}
    runs = {}
    for wc in (1, 2, 4):
        cfg = ScreenConfig(worker_count=wc, ga=ga, backend="simd", global_seed=8)
        t0 = time.perf_counter()
        runs[wc] = screen_batch(batch, big_grid_set, cfg)
        times[wc] = time.perf_counter() - t0
    bitwise = True
    for wc in (2, 4):
        for a, b in zip(runs[1], runs[wc]):
            bitwise &= a.error is None and b.error is None
            bitwise &= np.array_equal(a.result.best_genotype, b.result.best_genotype)
            bitwise &= a.result.best_score == b.result.best_score
    ratio4 = times[4] / times[1]
    ratio2 = times[2] / times[1]
    cores = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    if cores >= 4:
        _check(
            "parallel-efficiency",
            bitwise and ratio4 <= 0.5,
            f"4v1 ratio {ratio4:.2f} (gate 0.5), 2v1 {ratio2:.2f}, bitwise={bitwise}",
        )
    else:
        _check(
            "parallel-efficiency(bitwise only)",
            bitwise,
            f"measured 2v1 {ratio2:.2f}, 4v1 {ratio4:.2f}, bitwise={bitwise}",
        )
        record_acceptance(
            "parallel-efficiency(ratio)", "SKIP",
            f"only {cores} cores here; the 4v1 <= 0.5 gate requires >= 4 cores",
        )
        pytest.skip(f"wall-ratio gate needs >= 4 cores, found {cores}")


def test_protocol_fidelity(grid_set):
    """Bench stats over exactly repetitions - discard samples; CSV byte
    stability; MUGD bitwise round trip."""
    scenario = BenchScenario(
        name="fidelity",
        ligands=LigandSource(kind="replicated", seed=3, n_atoms=8, n_torsions=1, count=2),
        backends=("simd",),
        thread_counts=(1,),
        repetitions=10,
        warmup_discard=3,
        ga=GaConfig(population_size=6, generations=2),
        grid_dims=(9, 9, 9),
    )
    records = run_benchmark(scenario)
    ok = [r for r in records if r.status == "ok"]
    samples_ok = bool(ok) and all(r.n_samples == 7 for r in ok)

    csv_a = emit_csv(records)
    csv_b = emit_csv(list(reversed(records)))
    csv_stable = csv_a == csv_b and csv_a.encode() == csv_b.encode()

    buf = io.BytesIO()
    grids.write_grid_set(grid_set, buf)
    back = grids.read_grid_set(buf.getvalue())
    mugd_ok = list(back.maps) == list(grid_set.maps) and all(
        np.array_equal(back.maps[k].view(np.uint32), grid_set.maps[k].view(np.uint32))
        for k in grid_set.maps
    )
    _check(
        "protocol-fidelity",
        samples_ok and csv_stable and mugd_ok,
        f"7-of-10 samples={samples_ok}, csv byte-stable={csv_stable}, "
        f"mugd bitwise={mugd_ok}",
    )
