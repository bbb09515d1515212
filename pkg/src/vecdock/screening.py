"""Batch virtual screening on a work-stealing thread pool.

Each job is one whole ligand (inputs are evaluated independently; the
parallelism is across inputs, not inside one docking run). Workers own a
deque each; an idle worker steals from a random victim's opposite end.
Results land in per-index slots, so output order always matches input order
and is bitwise independent of worker count and scheduling: ligand i's RNG is
keyed (global_seed, i), never shared.

Worker pinning is best effort: if the platform refuses the affinity call the
pool warns once and continues unpinned.
"""

from __future__ import annotations

import collections
import os
import random
import threading
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import scoring
from .energy import TermWeights
from .ga import DockingResult, GaConfig, dock, make_rng
from .grids import GridMapSet
from .io_formats import LigandBatch, ParameterTable

_IDLE_SLEEP = 0.0005


@dataclass(frozen=True)
class ScreenConfig:
    worker_count: int = 1
    pin_workers: bool = False
    pin_map: tuple[int, ...] | None = None  # compact sequential ids when None
    ga: GaConfig = field(default_factory=GaConfig)
    backend: str | None = None
    global_seed: int = 0

    def __post_init__(self):
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


@dataclass
class ScreenEntry:
    """Per-ligand outcome; `error` is set (and result None) on failure."""

    name: str
    result: DockingResult | None
    error: str | None
    wall_ms: float
    seed_key: tuple[int, int]


@dataclass
class PoolStats:
    steals: int = 0
    idle_while_work_available: int = 0
    idle_sweeps: int = 0


class WorkStealingPool:
    """Fixed set of indexed jobs on per-worker deques with random stealing.

    Jobs are distributed round-robin up front. A worker pops from its own
    deque's back (LIFO) and steals from victims' fronts (FIFO). The
    instrumented counter `idle_while_work_available` increments only when a
    full steal sweep found nothing but some deque was non-empty right after
    (a bounded race window).
    """

    def __init__(self, worker_count: int, pin: bool = False, pin_map=None):
        self.worker_count = worker_count
        self.pin = pin
        self.pin_map = pin_map
        self.stats = PoolStats()
        self._stats_lock = threading.Lock()
        self._pin_warned = False

    def _maybe_pin(self, worker_id: int):
        if not self.pin:
            return
        try:
            cpus = sorted(os.sched_getaffinity(0))
            if self.pin_map is not None:
                core = self.pin_map[worker_id % len(self.pin_map)]
            else:
                core = cpus[worker_id % len(cpus)]
            os.sched_setaffinity(0, {core})
        except (AttributeError, OSError, ValueError) as exc:
            if not self._pin_warned:
                self._pin_warned = True
                warnings.warn(f"worker pinning unavailable ({exc}); continuing unpinned",
                              stacklevel=2)

    def run(self, jobs: list, job_fn) -> list:
        """Execute job_fn(index, job) for every job; returns results in input
        order. Exceptions propagate through the result slot as the raised
        exception object (callers decide how to record failures)."""
        n = len(jobs)
        results: list = [None] * n
        deques = [collections.deque() for _ in range(self.worker_count)]
        for idx in range(n):
            deques[idx % self.worker_count].append(idx)
        remaining = [n]
        remaining_lock = threading.Lock()
        done = threading.Event()
        if n == 0:
            return results

        def worker(worker_id: int):
            self._maybe_pin(worker_id)
            my = deques[worker_id]
            steal_rng = random.Random(worker_id)
            victims = [v for v in range(self.worker_count) if v != worker_id]
            while not done.is_set():
                idx = None
                try:
                    idx = my.pop()
                except IndexError:
                    order = victims[:]
                    steal_rng.shuffle(order)
                    for v in order:
                        try:
                            idx = deques[v].popleft()
                            with self._stats_lock:
                                self.stats.steals += 1
                            break
                        except IndexError:
                            continue
                if idx is None:
                    with self._stats_lock:
                        self.stats.idle_sweeps += 1
                        if any(deques):
                            self.stats.idle_while_work_available += 1
                    if done.is_set():
                        return
                    time.sleep(_IDLE_SLEEP)
                    continue
                try:
                    results[idx] = job_fn(idx, jobs[idx])
                except Exception as exc:  # recorded, batch continues
                    results[idx] = exc
                with remaining_lock:
                    remaining[0] -= 1
                    if remaining[0] == 0:
                        done.set()

        threads = [
            threading.Thread(target=worker, args=(w,), name=f"screen-worker-{w}")
            for w in range(self.worker_count)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        return results


def screen_batch(
    batch: LigandBatch,
    grid_set: GridMapSet,
    config: ScreenConfig,
    weights: TermWeights | None = None,
    table: ParameterTable | None = None,
) -> list[ScreenEntry]:
    """Dock every ligand in the batch; one ScreenEntry per ligand, input order.

    Ligand i's generator is keyed (global_seed, i), so results are identical
    for any worker count or schedule. Per-ligand failures are recorded
    in-place without aborting the batch.
    """
    if len(batch) == 0:
        raise ValueError("batch is empty")
    backend = scoring.get_backend(config.backend)
    if hasattr(backend, "warmup"):
        backend.warmup()  # compile outside the workers

    ga_base = config.ga
    if ga_base.translation_bounds is None:
        from dataclasses import replace

        ga_base = replace(
            ga_base, translation_bounds=(grid_set.spec.origin, grid_set.spec.upper)
        )

    # one context per unique topology, built before the workers start
    # (replicated batches share a single topology object); a failed build is
    # kept as the exception so only that ligand's entries fail
    contexts: dict[int, object] = {}
    for _, topo in batch.entries:
        if id(topo) not in contexts:
            try:
                contexts[id(topo)] = scoring.prepare_context(
                    topo, grid_set, weights=weights, table=table
                )
            except Exception as exc:
                contexts[id(topo)] = exc

    def job(idx: int, entry) -> ScreenEntry:
        name, topo = entry
        ctx = contexts[id(topo)]
        if isinstance(ctx, Exception):
            raise ctx
        seed_key = (config.global_seed, idx)
        t0 = time.perf_counter()
        result = dock(
            topo,
            grid_set,
            ga_base,
            backend=backend,
            weights=weights,
            table=table,
            rng=make_rng(*seed_key),
            seed_key=seed_key,
            context=ctx,
        )
        wall_ms = (time.perf_counter() - t0) * 1e3
        return ScreenEntry(name=name, result=result, error=None, wall_ms=wall_ms, seed_key=seed_key)

    pool = WorkStealingPool(config.worker_count, pin=config.pin_workers, pin_map=config.pin_map)
    raw = pool.run(list(batch.entries), job)

    entries: list[ScreenEntry] = []
    for idx, (name, _) in enumerate(batch.entries):
        out = raw[idx]
        if isinstance(out, ScreenEntry):
            entries.append(out)
        else:
            entries.append(
                ScreenEntry(
                    name=name,
                    result=None,
                    error=f"{type(out).__name__}: {out}",
                    wall_ms=float("nan"),
                    seed_key=(config.global_seed, idx),
                )
            )
    return entries


SCREEN_CSV_COLUMNS = [
    "name", "best_total", "inter", "intra", "torsional", "generations", "wall_ms", "seed",
]


def write_screen_csv(entries: list[ScreenEntry], sink) -> None:
    """Screening results as CSV (spec columns; NaNs for failed ligands)."""
    import csv

    close = False
    if isinstance(sink, str) or hasattr(sink, "__fspath__"):
        sink = open(sink, "w", newline="")
        close = True
    try:
        w = csv.writer(sink)
        w.writerow(SCREEN_CSV_COLUMNS)
        for e in entries:
            if e.result is None:
                row = [e.name, "nan", "nan", "nan", "nan", 0, f"{e.wall_ms:.3f}",
                       f"{e.seed_key[0]}:{e.seed_key[1]}"]
            else:
                s = e.result.best_score
                row = [
                    e.name,
                    repr(s.total),
                    repr(s.inter),
                    repr(s.intra),
                    repr(s.torsional),
                    len(e.result.trace) - 1,
                    f"{e.wall_ms:.3f}",
                    f"{e.seed_key[0]}:{e.seed_key[1]}",
                ]
            w.writerow(row)
    finally:
        if close:
            sink.close()
