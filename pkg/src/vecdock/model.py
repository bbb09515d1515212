"""Domain types for ligands, receptors, and topology-derived structures.

Per-atom data is kept in structure-of-arrays layout: coordinates are (3, n)
float32 arrays (x/y/z rows are contiguous lanes), scalar per-atom fields are
flat arrays. Everything is immutable after construction and safe to share
across workers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .energy import desolvation_coefficient, hb_coefficients, lj_coefficients


@dataclass(frozen=True)
class AtomParams:
    """Force-field parameters for one atom type."""

    type_label: str
    r_eq: float          # pair equilibrium distance for a like pair, A
    eps: float           # well depth, kcal/mol
    volume: float        # atomic volume, A^3
    solpar: float        # atomic solvation parameter, kcal/(mol*A^3)
    hbond_acceptor: bool = False
    hbond_donor: bool = False

    def __post_init__(self):
        if not self.type_label:
            raise ValueError("atom type label must be non-empty")
        if not (self.r_eq > 0):
            raise ValueError(f"type {self.type_label!r}: r_eq must be > 0, got {self.r_eq}")
        if self.eps < 0:
            raise ValueError(f"type {self.type_label!r}: eps must be >= 0, got {self.eps}")
        if self.volume < 0:
            raise ValueError(f"type {self.type_label!r}: volume must be >= 0, got {self.volume}")


@dataclass(frozen=True)
class RotatableBond:
    """A rotatable bond (axis_a, axis_b) and the atom set that moves with it.

    `fragment` holds the atoms reachable from axis_b once the bond is removed
    (axis_b included; it lies on the rotation axis so rotating it is the
    identity). Atoms on axis_a's side never move.
    """

    axis_a: int
    axis_b: int
    fragment: np.ndarray  # sorted int32 atom indices


def _as_coords(coords) -> np.ndarray:
    arr = np.asarray(coords, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] != 3:
        raise ValueError(f"coords must have shape (3, n_atoms), got {arr.shape}")
    return arr


@dataclass(frozen=True)
class LigandTopology:
    """A small molecule: reference conformation, types, charges, bond graph."""

    coords0: np.ndarray                 # (3, n) float32, reference conformation
    type_index: np.ndarray              # (n,) int32 into a ParameterTable
    charge: np.ndarray                  # (n,) float32, elementary charges
    bonds: np.ndarray                   # (B, 2) int32, i < j
    rotatable_bonds: tuple[RotatableBond, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coords0", _as_coords(self.coords0))
        object.__setattr__(self, "type_index", np.asarray(self.type_index, dtype=np.int32))
        object.__setattr__(self, "charge", np.asarray(self.charge, dtype=np.float32))
        bonds = np.asarray(self.bonds, dtype=np.int32).reshape(-1, 2)
        bonds = np.sort(bonds, axis=1)
        object.__setattr__(self, "bonds", bonds)
        object.__setattr__(self, "rotatable_bonds", tuple(self.rotatable_bonds))
        n = self.n_atoms
        if n < 1:
            raise ValueError("ligand needs at least one atom")
        if self.type_index.shape != (n,) or self.charge.shape != (n,):
            raise ValueError("type_index/charge length must match atom count")
        if bonds.size and (bonds.min() < 0 or bonds.max() >= n):
            raise ValueError(f"bond index out of range for {n} atoms")
        for rb in self.rotatable_bonds:
            if not (0 <= rb.axis_a < n and 0 <= rb.axis_b < n):
                raise ValueError(f"rotatable bond ({rb.axis_a}, {rb.axis_b}) out of range")

    @property
    def n_atoms(self) -> int:
        return self.coords0.shape[1]

    @property
    def n_torsions(self) -> int:
        return len(self.rotatable_bonds)

    @property
    def centroid0(self) -> np.ndarray:
        # float64 mean for determinism, rounded once to float32
        return self.coords0.mean(axis=1, dtype=np.float64).astype(np.float32)


@dataclass(frozen=True)
class Protein:
    """Rigid receptor: coordinates, types, charges."""

    coords: np.ndarray      # (3, n) float32
    type_index: np.ndarray  # (n,) int32
    charge: np.ndarray      # (n,) float32

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_coords(self.coords))
        object.__setattr__(self, "type_index", np.asarray(self.type_index, dtype=np.int32))
        object.__setattr__(self, "charge", np.asarray(self.charge, dtype=np.float32))
        if self.n_atoms < 1:
            raise ValueError("receptor needs at least one atom")
        if not np.isfinite(self.coords).all():
            raise ValueError("receptor coordinates must be finite")

    @property
    def n_atoms(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class NonbondPairList:
    """Precomputed intra-ligand pairs (bond-graph separation >= 4) in SoA form.

    a_coef/b_coef are the 12-6 (A, B) coefficients, or the 12-10 (C, D)
    coefficients where is_hbond is set.
    """

    i: np.ndarray            # (P,) int32
    j: np.ndarray            # (P,) int32
    a_coef: np.ndarray       # (P,) float32
    b_coef: np.ndarray       # (P,) float32
    is_hbond: np.ndarray     # (P,) bool
    qq_product: np.ndarray   # (P,) float32
    desolv_coeff: np.ndarray  # (P,) float32

    @property
    def n_pairs(self) -> int:
        return self.i.shape[0]

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))


def _adjacency(n_atoms: int, bonds: np.ndarray) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n_atoms)]
    for a, b in bonds.tolist():
        adj[a].append(b)
        adj[b].append(a)
    return adj


def _reachable_without_bond(adj, start: int, skip_a: int, skip_b: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if (u == skip_a and v == skip_b) or (u == skip_b and v == skip_a):
                continue
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def build_fragment_masks(topology: LigandTopology) -> list[np.ndarray]:
    """Fragment mask per rotatable bond: atoms reachable from axis_b with the
    bond removed (axis_b included, axis_a's side excluded).

    Raises ValueError for a rotatable bond whose removal does not split the
    graph (a ring bond is not rotatable).
    """
    adj = _adjacency(topology.n_atoms, topology.bonds)
    masks = []
    for rb in topology.rotatable_bonds:
        a, b = rb.axis_a, rb.axis_b
        frag = _reachable_without_bond(adj, b, a, b)
        if a in frag:
            raise ValueError(
                f"bond ({a}, {b}) lies on a ring; removing it does not split the "
                "graph, so it is not rotatable"
            )
        masks.append(np.array(sorted(frag), dtype=np.int32))
    return masks


def bond_separation(topology: LigandTopology, max_depth: int) -> dict[tuple[int, int], int]:
    """Bond-graph separations up to max_depth as {(i, j): separation}, i < j."""
    adj = _adjacency(topology.n_atoms, topology.bonds)
    out: dict[tuple[int, int], int] = {}
    for src in range(topology.n_atoms):
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if dist[u] == max_depth:
                continue
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        for v, d in dist.items():
            if src < v:
                out[(src, v)] = min(d, out.get((src, v), d))
    return out


def build_nonbond_pairlist(topology: LigandTopology, params) -> NonbondPairList:
    """All atom pairs separated by >= 4 bonds, with mixed pair coefficients.

    Pair parameters use Lorentz-Berthelot-style mixing:
    r_eq_ij = (r_eq_i + r_eq_j)/2, eps_ij = sqrt(eps_i * eps_j). A pair is
    hydrogen-bonding when one atom is a donor hydrogen and the other an
    acceptor; those pairs get 12-10 coefficients.
    """
    n = topology.n_atoms
    table = list(params)
    for idx in range(n):
        t = int(topology.type_index[idx])
        if not (0 <= t < len(table)):
            raise ValueError(f"atom {idx} has unknown atom type index {t}")

    near = bond_separation(topology, max_depth=3)
    ii, jj = [], []
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in near:
                ii.append(a)
                jj.append(b)

    pi = np.array(ii, dtype=np.int32)
    pj = np.array(jj, dtype=np.int32)

    r_eq_t = np.array([p.r_eq for p in table])
    eps_t = np.array([p.eps for p in table])
    vol_t = np.array([p.volume for p in table])
    sol_t = np.array([p.solpar for p in table])
    don_t = np.array([p.hbond_donor for p in table])
    acc_t = np.array([p.hbond_acceptor for p in table])

    ti = topology.type_index[pi]
    tj = topology.type_index[pj]
    r_eq = 0.5 * (r_eq_t[ti] + r_eq_t[tj])
    eps = np.sqrt(eps_t[ti] * eps_t[tj])
    hb = (don_t[ti] & acc_t[tj]) | (acc_t[ti] & don_t[tj])
    lj_a, lj_b = lj_coefficients(r_eq, eps)
    hb_a, hb_b = hb_coefficients(r_eq, eps)

    q = topology.charge.astype(np.float64)
    qi, qj = q[pi], q[pj]
    dsl = desolvation_coefficient(sol_t[ti], vol_t[ti], qi, sol_t[tj], vol_t[tj], qj)

    return NonbondPairList(
        i=pi,
        j=pj,
        a_coef=np.where(hb, hb_a, lj_a).astype(np.float32),
        b_coef=np.where(hb, hb_b, lj_b).astype(np.float32),
        is_hbond=hb,
        qq_product=(qi * qj).astype(np.float32),
        desolv_coeff=dsl.astype(np.float32),
    )


@dataclass
class ValidationReport:
    """Outcome of validate_topology: a list of human-readable issues."""

    issues: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, msg: str):
        self.issues.append(msg)


def validate_topology(topology: LigandTopology) -> ValidationReport:
    """Check connectivity, index ranges, coordinate sanity, and that every
    rotatable bond actually splits the graph. Returns a report, never raises.
    """
    report = ValidationReport()
    n = topology.n_atoms

    bad = np.argwhere(~np.isfinite(topology.coords0))
    for axis, atom in bad.tolist():
        report.add(f"atom {atom}: non-finite coordinate on axis {'xyz'[axis]}")

    for a, b in topology.bonds.tolist():
        if not (0 <= a < n and 0 <= b < n):
            report.add(f"bond ({a}, {b}): atom index out of range (n_atoms={n})")
        elif a == b:
            report.add(f"bond ({a}, {b}): self-bond")

    valid_bonds = topology.bonds[
        (topology.bonds[:, 0] >= 0)
        & (topology.bonds[:, 1] < n)
        & (topology.bonds[:, 0] != topology.bonds[:, 1])
    ]
    adj = _adjacency(n, valid_bonds)
    seen = _reachable_without_bond(adj, 0, -1, -1)
    if len(seen) != n:
        missing = sorted(set(range(n)) - seen)
        report.add(f"bond graph disconnected: atoms {missing} unreachable from atom 0")

    bond_set = {tuple(sorted(b)) for b in valid_bonds.tolist()}
    for rb in topology.rotatable_bonds:
        key = tuple(sorted((rb.axis_a, rb.axis_b)))
        if key not in bond_set:
            report.add(f"rotatable bond {key} is not a bond")
            continue
        frag = _reachable_without_bond(adj, rb.axis_b, rb.axis_a, rb.axis_b)
        if rb.axis_a in frag:
            report.add(f"rotatable bond {key} lies on a ring (removal does not split the graph)")

    return report
