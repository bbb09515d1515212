"""Shared fixtures and the acceptance-line reporter."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vecdock import grids, io_formats, model

settings.register_profile(
    "vecdock",
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("vecdock")

# collected (name, status, detail) rows, printed in the terminal summary
ACCEPTANCE_LINES: list[tuple[str, str, str]] = []


def record_acceptance(name: str, passed: bool | str, detail: str = ""):
    if isinstance(passed, str):
        status = passed
    else:
        status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append((name, status, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in ACCEPTANCE_LINES:
        line = f"{status}  {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table():
    return io_formats.default_parameter_table()


def make_protein(seed: int, n_atoms: int, extent: float = 5.0, table=None) -> model.Protein:
    """Uniformly scattered receptor atoms (dense; expect steep map values)."""
    table = table or io_formats.default_parameter_table()
    rng = np.random.default_rng(seed)
    return model.Protein(
        coords=rng.uniform(-extent, extent, (3, n_atoms)).astype(np.float32),
        type_index=rng.integers(0, len(table), n_atoms).astype(np.int32),
        charge=rng.uniform(-0.4, 0.4, n_atoms).astype(np.float32),
    )


def make_pocket_protein(seed: int, n_atoms: int, radius: float, table=None) -> model.Protein:
    """Receptor atoms on a jittered shell: the box interior is a cavity, so
    in-box lookups stay in a chemically sane range."""
    table = table or io_formats.default_parameter_table()
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((n_atoms, 3))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    radii = radius + rng.uniform(-0.5, 0.5, n_atoms)
    coords = (directions * radii[:, None]).T.astype(np.float32)
    return model.Protein(
        coords=coords,
        type_index=rng.integers(0, len(table), n_atoms).astype(np.int32),
        charge=rng.uniform(-0.4, 0.4, n_atoms).astype(np.float32),
    )


@pytest.fixture(scope="session")
def small_protein(table):
    return make_pocket_protein(11, 16, radius=6.0, table=table)


@pytest.fixture(scope="session")
def grid_set(small_protein, table):
    """17^3 node grid, 0.5 A spacing (dyadic, so node coordinates are exact
    in float32) inside a 6 A pocket, all default probe types."""
    spec = grids.GridSpec.centered((0.0, 0.0, 0.0), (17, 17, 17), 0.5)
    return grids.build_grid_maps(small_protein, spec, probe_types=table.labels, table=table)


@pytest.fixture(scope="session")
def big_grid_set(table):
    """Roomier 16 A box inside an 11 A pocket for docking runs."""
    protein = make_pocket_protein(23, 48, radius=11.0, table=table)
    spec = grids.GridSpec.centered((0.0, 0.0, 0.0), (33, 33, 33), 0.5)
    return grids.build_grid_maps(protein, spec, probe_types=table.labels, table=table)


def chain_topology(n_atoms: int, rotatable: list[tuple[int, int]] = (), spacing: float = 1.5):
    """Straight-chain ligand along x with optional rotatable bonds."""
    coords = np.zeros((3, n_atoms), dtype=np.float32)
    coords[0] = np.arange(n_atoms, dtype=np.float32) * spacing
    bonds = np.array([[k, k + 1] for k in range(n_atoms - 1)], dtype=np.int32)
    probe = model.LigandTopology(
        coords0=coords,
        type_index=np.zeros(n_atoms, dtype=np.int32),
        charge=np.zeros(n_atoms, dtype=np.float32),
        bonds=bonds,
        rotatable_bonds=tuple(
            model.RotatableBond(a, b, np.empty(0, dtype=np.int32)) for a, b in rotatable
        ),
    )
    if rotatable:
        masks = model.build_fragment_masks(probe)
        probe = model.LigandTopology(
            coords0=coords,
            type_index=probe.type_index,
            charge=probe.charge,
            bonds=bonds,
            rotatable_bonds=tuple(
                model.RotatableBond(rb.axis_a, rb.axis_b, m)
                for rb, m in zip(probe.rotatable_bonds, masks)
            ),
        )
    return probe
