"""Input formats: PDBQT subset parsers, the atom-parameter table, synthetic
ligand generation, and batch replication.

The PDBQT subset covers ATOM/HETATM, ROOT/ENDROOT, BRANCH/ENDBRANCH, and
TORSDOF records. By default records are parsed whitespace-tolerantly; pass
strict_columns=True for fixed-column PDBQT field spans.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np

from .model import AtomParams, LigandTopology, Protein, RotatableBond, validate_topology

# Bond-length thresholds for inferring the bond graph from coordinates
# (PDBQT carries no bond records). Hydrogens bond short.
BOND_CUTOFF = 1.9
BOND_CUTOFF_H = 1.3


class PdbqtParseError(ValueError):
    """Parse failure; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ParameterTable:
    """Ordered atom-type parameter table, indexable by position or label."""

    def __init__(self, entries: list[AtomParams]):
        if not entries:
            raise ValueError("parameter table is empty")
        labels = [e.type_label for e in entries]
        dupes = {l for l in labels if labels.count(l) > 1}
        if dupes:
            raise ValueError(f"duplicate atom type label(s): {sorted(dupes)}")
        self._entries = list(entries)
        self._by_label = {e.type_label: idx for idx, e in enumerate(entries)}

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __getitem__(self, key) -> AtomParams:
        if isinstance(key, str):
            return self._entries[self._by_label[key]]
        return self._entries[key]

    def __contains__(self, label: str) -> bool:
        return label in self._by_label

    def index_of(self, label: str) -> int:
        if label not in self._by_label:
            raise KeyError(f"unknown atom type label {label!r}")
        return self._by_label[label]

    @property
    def labels(self) -> list[str]:
        return [e.type_label for e in self._entries]

    def solpar_array(self) -> np.ndarray:
        return np.array([e.solpar for e in self._entries], dtype=np.float32)


def load_parameter_table(text: str) -> ParameterTable:
    """Parse the whitespace-separated table format ('#' starts a comment)."""
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 6:
            raise ValueError(f"line {line_no}: expected 6 fields, got {len(fields)}")
        label, r_eq, eps, volume, solpar, hb = fields
        if hb not in ("0", "A", "D"):
            raise ValueError(f"line {line_no}: hbond flag must be 0, A, or D, got {hb!r}")
        try:
            entries.append(
                AtomParams(
                    type_label=label,
                    r_eq=float(r_eq),
                    eps=float(eps),
                    volume=float(volume),
                    solpar=float(solpar),
                    hbond_acceptor=hb == "A",
                    hbond_donor=hb == "D",
                )
            )
        except ValueError as exc:
            raise ValueError(f"line {line_no}: {exc}") from exc
    return ParameterTable(entries)


def serialize_parameter_table(table: ParameterTable) -> str:
    lines = ["# label  r_eq  eps  volume  solpar  hbond"]
    for e in table:
        hb = "A" if e.hbond_acceptor else "D" if e.hbond_donor else "0"
        lines.append(
            f"{e.type_label:<3s} {e.r_eq:.4f} {e.eps:.4f} {e.volume:.4f} {e.solpar:.5f} {hb}"
        )
    return "\n".join(lines) + "\n"


_DEFAULT_TABLE: ParameterTable | None = None


def default_parameter_table() -> ParameterTable:
    """The packaged ~10-type table (parsed once, cached)."""
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        text = importlib.resources.files("vecdock.data").joinpath("parameters.txt").read_text()
        _DEFAULT_TABLE = load_parameter_table(text)
    return _DEFAULT_TABLE


@dataclass(frozen=True)
class _AtomRecord:
    serial: int
    name: str
    xyz: tuple[float, float, float]
    charge: float
    type_label: str
    line_no: int


def _parse_atom_record(line: str, line_no: int, strict: bool) -> _AtomRecord:
    if strict:
        # Fixed PDBQT column spans (1-based): serial 7-11, name 13-16,
        # x 31-38, y 39-46, z 47-54, charge 67-76, type 78-79.
        if len(line) < 78:
            raise PdbqtParseError("record shorter than the fixed-column PDBQT layout", line_no)
        spans = {
            "serial": (6, 11),
            "name": (12, 16),
            "x": (30, 38),
            "y": (38, 46),
            "z": (46, 54),
            "charge": (66, 76),
            "type": (77, 79),
        }
        raw = {k: line[a:b].strip() for k, (a, b) in spans.items()}
        try:
            serial = int(raw["serial"])
        except ValueError:
            raise PdbqtParseError(f"bad atom serial {raw['serial']!r} in columns 7-11", line_no)
        coords = []
        for key in ("x", "y", "z"):
            a, b = spans[key]
            try:
                coords.append(float(raw[key]))
            except ValueError:
                raise PdbqtParseError(
                    f"malformed coordinate {raw[key]!r} in columns {a + 1}-{b}", line_no
                )
        try:
            charge = float(raw["charge"]) if raw["charge"] else 0.0
        except ValueError:
            raise PdbqtParseError(f"malformed charge {raw['charge']!r} in columns 67-76", line_no)
        return _AtomRecord(serial, raw["name"], tuple(coords), charge, raw["type"], line_no)

    tokens = line.split()
    # Minimal subset: REC serial name x y z charge type. Full PDB-style lines
    # carry residue/occupancy fields; those are located from the line end.
    if len(tokens) == 8:
        _, serial_s, name, xs, ys, zs, qs, type_label = tokens
    elif len(tokens) >= 11:
        serial_s, name = tokens[1], tokens[2]
        xs, ys, zs = tokens[-7], tokens[-6], tokens[-5]
        qs, type_label = tokens[-2], tokens[-1]
    else:
        raise PdbqtParseError(
            f"expected 8 (minimal) or >= 11 (full) whitespace fields, got {len(tokens)}", line_no
        )
    try:
        serial = int(serial_s)
    except ValueError:
        raise PdbqtParseError(f"bad atom serial {serial_s!r}", line_no)
    coords = []
    for label, s in (("x", xs), ("y", ys), ("z", zs)):
        try:
            coords.append(float(s))
        except ValueError:
            raise PdbqtParseError(f"malformed {label} coordinate {s!r}", line_no)
    try:
        charge = float(qs)
    except ValueError:
        raise PdbqtParseError(f"malformed charge {qs!r}", line_no)
    return _AtomRecord(serial, name, tuple(coords), charge, type_label, line_no)


def _infer_bonds(coords: np.ndarray, is_h: np.ndarray, forced: set[tuple[int, int]]) -> np.ndarray:
    n = coords.shape[1]
    xyz = coords.astype(np.float64).T
    bonds = set(forced)
    for a in range(n):
        d2 = ((xyz[a + 1 :] - xyz[a]) ** 2).sum(axis=1)
        for off in np.nonzero(d2 < BOND_CUTOFF**2)[0]:
            b = a + 1 + int(off)
            cutoff = BOND_CUTOFF_H if (is_h[a] or is_h[b]) else BOND_CUTOFF
            if d2[off] < cutoff**2:
                bonds.add((a, b))
    return np.array(sorted(bonds), dtype=np.int32).reshape(-1, 2)


def parse_ligand_pdbqt(
    text: str, table: ParameterTable | None = None, strict_columns: bool = False
) -> LigandTopology:
    """Parse a ligand. Rotatable bonds come from BRANCH nesting (declaration
    order, root-outward); fragment masks are the branch blocks' atom sets.
    """
    table = table or default_parameter_table()
    atoms: list[_AtomRecord] = []
    open_branches: list[tuple[int, int, int, set[int]]] = []  # (a, b, line_no, members)
    closed: list[tuple[int, int, set[int]]] = []
    branch_order: list[tuple[int, int]] = []
    torsdof: int | None = None
    n_lines = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        n_lines = line_no
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        record = line.split(None, 1)[0]
        if record in ("REMARK", "MODEL", "ENDMDL", "TER", "END", "USER"):
            continue
        if record in ("ATOM", "HETATM"):
            rec = _parse_atom_record(raw, line_no, strict_columns)
            idx = len(atoms)
            atoms.append(rec)
            for _, _, _, members in open_branches:
                members.add(idx)
        elif record == "ROOT":
            pass
        elif record == "ENDROOT":
            pass
        elif record == "BRANCH":
            parts = line.split()
            if len(parts) != 3:
                raise PdbqtParseError("BRANCH needs two atom serials", line_no)
            a, b = int(parts[1]), int(parts[2])
            open_branches.append((a, b, line_no, set()))
            branch_order.append((a, b))
        elif record == "ENDBRANCH":
            parts = line.split()
            if len(parts) != 3:
                raise PdbqtParseError("ENDBRANCH needs two atom serials", line_no)
            a, b = int(parts[1]), int(parts[2])
            if not open_branches:
                raise PdbqtParseError(f"ENDBRANCH {a} {b} without a matching BRANCH", line_no)
            oa, ob, _, members = open_branches.pop()
            if (oa, ob) != (a, b):
                raise PdbqtParseError(
                    f"ENDBRANCH {a} {b} does not match open BRANCH {oa} {ob}", line_no
                )
            closed.append((a, b, members))
        elif record == "TORSDOF":
            torsdof = int(line.split()[1])
        else:
            raise PdbqtParseError(f"unsupported record {record!r}", line_no)

    if open_branches:
        a, b, opened_at, _ = open_branches[-1]
        raise PdbqtParseError(
            f"BRANCH {a} {b} (opened at line {opened_at}) never closed", n_lines
        )
    if not atoms:
        raise PdbqtParseError("no atoms in ligand file")

    serial_to_idx: dict[int, int] = {}
    for idx, rec in enumerate(atoms):
        if rec.serial in serial_to_idx:
            raise PdbqtParseError(f"duplicate atom serial {rec.serial}", rec.line_no)
        serial_to_idx[rec.serial] = idx

    type_index = np.empty(len(atoms), dtype=np.int32)
    for idx, rec in enumerate(atoms):
        if rec.type_label not in table:
            raise PdbqtParseError(f"unknown atom type label {rec.type_label!r}", rec.line_no)
        type_index[idx] = table.index_of(rec.type_label)

    coords = np.array([rec.xyz for rec in atoms], dtype=np.float32).T
    charge = np.array([rec.charge for rec in atoms], dtype=np.float32)
    is_h = np.array([table[int(t)].type_label.startswith("H") for t in type_index])

    frag_by_axis = {}
    for a, b, members in closed:
        if a not in serial_to_idx or b not in serial_to_idx:
            raise PdbqtParseError(f"BRANCH {a} {b} references unknown atom serial")
        frag_by_axis[(a, b)] = members

    forced = set()
    rotatable = []
    for a, b in branch_order:
        ia, ib = serial_to_idx[a], serial_to_idx[b]
        forced.add((min(ia, ib), max(ia, ib)))
        members = frag_by_axis[(a, b)]
        rotatable.append(
            RotatableBond(axis_a=ia, axis_b=ib, fragment=np.array(sorted(members), dtype=np.int32))
        )

    if torsdof is not None and torsdof != len(rotatable):
        import warnings

        warnings.warn(
            f"TORSDOF {torsdof} disagrees with {len(rotatable)} BRANCH records; "
            "using the BRANCH count",
            stacklevel=2,
        )

    bonds = _infer_bonds(coords, is_h, forced)
    topo = LigandTopology(
        coords0=coords,
        type_index=type_index,
        charge=charge,
        bonds=bonds,
        rotatable_bonds=tuple(rotatable),
    )
    report = validate_topology(topo)
    if not report.ok:
        raise PdbqtParseError("invalid ligand topology: " + "; ".join(report.issues))
    return topo


def parse_protein_pdbqt(
    text: str, table: ParameterTable | None = None, strict_columns: bool = False
) -> Protein:
    """Parse a rigid receptor: ATOM/HETATM records only."""
    table = table or default_parameter_table()
    atoms: list[_AtomRecord] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        record = line.split(None, 1)[0]
        if record in ("REMARK", "MODEL", "ENDMDL", "TER", "END", "USER"):
            continue
        if record in ("ATOM", "HETATM"):
            atoms.append(_parse_atom_record(raw, line_no, strict_columns))
        elif record in ("BRANCH", "ENDBRANCH", "ROOT", "ENDROOT", "TORSDOF"):
            raise PdbqtParseError(
                f"{record} record in receptor file (the receptor is rigid)", line_no
            )
        else:
            raise PdbqtParseError(f"unsupported record {record!r}", line_no)
    if not atoms:
        raise PdbqtParseError("no atoms in receptor file")

    type_index = np.empty(len(atoms), dtype=np.int32)
    for idx, rec in enumerate(atoms):
        if rec.type_label not in table:
            raise PdbqtParseError(f"unknown atom type label {rec.type_label!r}", rec.line_no)
        type_index[idx] = table.index_of(rec.type_label)
    coords = np.array([rec.xyz for rec in atoms], dtype=np.float32).T
    charge = np.array([rec.charge for rec in atoms], dtype=np.float32)
    return Protein(coords=coords, type_index=type_index, charge=charge)


def serialize_ligand_pdbqt(topology: LigandTopology, table: ParameterTable | None = None) -> str:
    """Write the canonical PDBQT form of a topology: ROOT block, then BRANCH
    blocks nested by fragment containment in declaration order.

    The parser recovers the same molecule as long as every non-bonded atom
    pair sits beyond the bond-inference cutoff (PDBQT carries no bond
    records); tightly folded conformations can re-parse with extra bonds.
    """
    table = table or default_parameter_table()
    n = topology.n_atoms
    frag_sets = [set(rb.fragment.tolist()) for rb in topology.rotatable_bonds]
    root = set(range(n))
    for fs in frag_sets:
        root -= fs

    def atom_line(idx: int) -> str:
        x, y, z = topology.coords0[:, idx].astype(float).tolist()
        label = table[int(topology.type_index[idx])].type_label
        name = f"{label}{idx + 1}"
        return (
            f"ATOM {idx + 1} {name} {x:.3f} {y:.3f} {z:.3f} "
            f"{float(topology.charge[idx]):.3f} {label}"
        )

    # Branch k is nested inside branch m when its fragment is a subset.
    children: dict[int | None, list[int]] = {None: []}
    parent: dict[int, int | None] = {}
    for k, fs in enumerate(frag_sets):
        best = None
        for m, other in enumerate(frag_sets):
            if m != k and fs < other and (best is None or frag_sets[best] > other):
                best = m
        parent[k] = best
        children.setdefault(best, []).append(k)

    own_atoms: dict[int | None, list[int]] = {}
    for k, fs in enumerate(frag_sets):
        own = set(fs)
        for m, other in enumerate(frag_sets):
            if m != k and other < fs:
                own -= other
        own_atoms[k] = sorted(own)

    lines = ["ROOT"]
    lines += [atom_line(i) for i in sorted(root)]
    lines.append("ENDROOT")

    def emit(k: int):
        rb = topology.rotatable_bonds[k]
        a, b = rb.axis_a + 1, rb.axis_b + 1
        lines.append(f"BRANCH {a} {b}")
        for i in own_atoms[k]:
            lines.append(atom_line(i))
        for c in children.get(k, []):
            emit(c)
        lines.append(f"ENDBRANCH {a} {b}")

    for k in children[None]:
        emit(k)
    lines.append(f"TORSDOF {len(frag_sets)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LigandBatch:
    """A named, ordered collection of ligands plus their provenance."""

    entries: tuple[tuple[str, LigandTopology], ...]
    provenance: str  # file | synthetic | replicated

    def __post_init__(self):
        if not self.entries:
            raise ValueError("ligand batch is empty")
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("ligand names must be unique")
        if self.provenance not in ("file", "synthetic", "replicated"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]


def generate_synthetic_ligand(
    seed: int, n_atoms: int, n_torsions: int, table: ParameterTable | None = None
) -> LigandTopology:
    """Deterministic chain-with-branches ligand (a MEDIATE-molecule stand-in).

    Pure function of (seed, n_atoms, n_torsions): bond lengths ~1.5 A, charges
    uniform in [-0.5, 0.5], types drawn from the parameter table. Requires
    n_atoms >= n_torsions + 2 so enough backbone edges can carry a torsion.
    """
    if n_atoms < n_torsions + 2:
        raise ValueError(
            f"need n_atoms >= n_torsions + 2, got n_atoms={n_atoms}, n_torsions={n_torsions}"
        )
    table = table or default_parameter_table()
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))

    backbone = max(n_torsions + 2, (3 * n_atoms) // 5)
    backbone = min(backbone, n_atoms)
    parents = [-1] * n_atoms
    children = [0] * n_atoms
    for k in range(1, n_atoms):
        if k < backbone:
            parents[k] = k - 1
        else:
            # branch atoms attach anywhere with free valence (<= 3 children,
            # keeping sibling geometry placeable without contacts)
            open_slots = [a for a in range(k) if children[a] < 3]
            parents[k] = int(open_slots[rng.integers(0, len(open_slots))])
        children[parents[k]] += 1

    # Place each atom at the best of a fixed number of direction draws
    # (largest clearance to non-parent atoms), stopping early once clearance
    # beats the parser's bond-inference cutoff. Keeps the generator total and
    # deterministic while a serialize/parse round trip reconstructs exactly
    # the tree built here.
    xyz = np.zeros((n_atoms, 3), dtype=np.float64)
    for k in range(1, n_atoms):
        others = np.arange(k) != parents[k]
        best = None
        best_clearance = -1.0
        for _ in range(60):
            length = 1.5 + 0.1 * float(np.clip(rng.standard_normal(), -2.0, 2.0))
            direction = rng.standard_normal(3)
            direction /= np.linalg.norm(direction)
            candidate = xyz[parents[k]] + length * direction
            if k == 1:
                best = candidate
                break
            clearance = float(np.linalg.norm(xyz[:k][others] - candidate, axis=1).min())
            if clearance > best_clearance:
                best = candidate
                best_clearance = clearance
            if clearance >= 2.0:
                break
        xyz[k] = best

    bonds = np.array([[parents[k], k] for k in range(1, n_atoms)], dtype=np.int32)

    # Heavy-atom types only; hydrogens would demand donor/acceptor pairing care.
    heavy = [lbl for lbl in table.labels if not lbl.startswith("H")]
    type_index = np.array(
        [table.index_of(heavy[int(rng.integers(0, len(heavy)))]) for _ in range(n_atoms)],
        dtype=np.int32,
    )
    charge = rng.uniform(-0.5, 0.5, n_atoms).astype(np.float32)

    # Torsions live on backbone edges with at least two atoms beyond the axis.
    eligible = list(range(1, backbone - 1))
    chosen = sorted(rng.choice(eligible, size=n_torsions, replace=False).tolist())

    topo = LigandTopology(
        coords0=xyz.T.astype(np.float32),
        type_index=type_index,
        charge=charge,
        bonds=bonds,
        rotatable_bonds=(),
    )
    from .model import build_fragment_masks

    rbs = []
    probe = LigandTopology(
        coords0=topo.coords0,
        type_index=type_index,
        charge=charge,
        bonds=bonds,
        rotatable_bonds=tuple(
            RotatableBond(axis_a=k - 1, axis_b=k, fragment=np.empty(0, dtype=np.int32))
            for k in chosen
        ),
    )
    for rb, mask in zip(probe.rotatable_bonds, build_fragment_masks(probe)):
        rbs.append(RotatableBond(axis_a=rb.axis_a, axis_b=rb.axis_b, fragment=mask))

    return LigandTopology(
        coords0=topo.coords0,
        type_index=type_index,
        charge=charge,
        bonds=bonds,
        rotatable_bonds=tuple(rbs),
    )


def make_replicated_batch(ligand: LigandTopology, n: int, name: str = "lig") -> LigandBatch:
    """Replicate one topology n times with indexed names (shared definition)."""
    if n < 1:
        raise ValueError(f"replication count must be >= 1, got {n}")
    width = max(3, len(str(n - 1)))
    entries = tuple((f"{name}_{i:0{width}d}", ligand) for i in range(n))
    return LigandBatch(entries=entries, provenance="replicated")


def make_synthetic_batch(
    seed: int, count: int, n_atoms: int, n_torsions: int, table: ParameterTable | None = None
) -> LigandBatch:
    """Batch of distinct synthetic ligands seeded (seed, index)."""
    if count < 1:
        raise ValueError("batch count must be >= 1")
    width = max(3, len(str(count - 1)))
    entries = tuple(
        (
            f"syn{seed}_{i:0{width}d}",
            generate_synthetic_ligand(seed + i, n_atoms, n_torsions, table),
        )
        for i in range(count)
    )
    return LigandBatch(entries=entries, provenance="synthetic")
