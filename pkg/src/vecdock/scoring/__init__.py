"""Pose scoring through interchangeable compute backends.

Three backends implement one mathematical contract:

- ``reference``: straightforward per-pair/per-atom Python loops with
  branching — the deliberately vectorization-hostile speedup baseline.
- ``scalar``: branch-free NumPy whole-array kernels over SoA data — the
  auto-vectorization analogue (contiguous lanes handed to the array
  library's compiled loops).
- ``simd``: explicit lane-blocked numba kernels (nogil) with per-lane
  accumulators and a scalar tail — the explicit-vectorization analogue.

Cross-backend agreement is guaranteed by construction: every per-pair and
per-atom term is computed with one canonical float32 operation sequence
(documented in `reference.py`, mirrored op-for-op in the others; the two
exponentials are evaluated in float64 and rounded to float32), and the
float64 accumulation order is fixed within each backend. Backends therefore
differ only in float64 summation association, orders of magnitude below the
equivalence tolerance.

Backend selection: explicit argument, else the VECDOCK_BACKEND environment
variable, else ``simd``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .. import energy
from ..grids import DESOLV_LABEL, ELEC_LABEL, GridMapSet
from ..io_formats import ParameterTable, default_parameter_table
from ..model import LigandTopology, NonbondPairList, build_nonbond_pairlist
from ..pose import apply_pose, pose_population

DEFAULT_BACKEND = "simd"
BACKEND_ENV_VAR = "VECDOCK_BACKEND"

# Folded float64 constant of the dielectric exponent: eps(r) uses exp(-LAMB*r).
LAMB = energy.DIEL_LAMBDA * energy.DIEL_B

BOX_PENALTY_SCALE = 1.0e4


class BackendUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class ScoreBreakdown:
    """Score components in kcal/mol (float32 values stored as floats)."""

    inter: float
    intra: float
    torsional: float
    total: float

    @classmethod
    def from_components(cls, inter64: float, intra64: float, torsional32: float):
        inter = np.float32(inter64)
        intra = np.float32(intra64)
        tors = np.float32(torsional32)
        total = np.float32(np.float32(inter + intra) + tors)
        return cls(inter=float(inter), intra=float(intra), torsional=float(tors), total=float(total))


@dataclass(frozen=True)
class ScoringContext:
    """Precomputed, weight-folded inputs shared by all backends.

    Pair coefficients are multiplied by their term weights up front; the
    electrostatic pair factor additionally folds the Coulomb constant. The
    grid maps already carry their weights from build time, so inter lookups
    only scale by per-atom charge / solvation factor.
    """

    # inter side
    map_stack: np.ndarray     # (m, nx, ny, nz) float32; slots m-2/m-1 = elec/desolv
    atom_slot: np.ndarray     # (n,) int32 into map_stack
    charge: np.ndarray        # (n,) float32
    desolv_factor: np.ndarray  # (n,) float32: solpar + QASP*|q|
    box_lo: np.ndarray        # (3,) float32
    box_hi: np.ndarray        # (3,) float32
    spacing: np.float32
    dims: tuple[int, int, int]
    penalty_scale: np.float32
    # intra side (None for an inter-only context)
    pair_i: np.ndarray | None
    pair_j: np.ndarray | None
    pair_a: np.ndarray | None      # weight-folded A12 / C12
    pair_b: np.ndarray | None      # weight-folded B6 / D10
    pair_hb: np.ndarray | None     # bool
    pair_qq: np.ndarray | None     # weight- and Coulomb-folded q_i*q_j
    pair_desolv: np.ndarray | None  # weight-folded desolvation prefactor
    intra_cutoff2: np.float32      # inf disables the cutoff
    # torsional term
    torsional32: np.float32
    n_atoms: int
    # pose inputs for backends that fuse posing into their kernels
    pose_centered0: np.ndarray    # (3, n) float32: coords0 - centroid
    frag_index: np.ndarray        # flattened fragment atom indices, int32
    frag_start: np.ndarray        # (T+1,) int32 offsets into frag_index
    frag_axis_a: np.ndarray       # (T,) int32
    frag_axis_b: np.ndarray       # (T,) int32

    @property
    def n_pairs(self) -> int:
        return 0 if self.pair_i is None else self.pair_i.shape[0]

    @property
    def n_torsions(self) -> int:
        return self.frag_axis_a.shape[0]


def _fold_pairs(pairlist: NonbondPairList, weights: energy.TermWeights):
    wv = np.float32(weights.vdw)
    wh = np.float32(weights.hbond)
    hb = pairlist.is_hbond
    w = np.where(hb, wh, wv)
    return (
        pairlist.i,
        pairlist.j,
        (w * pairlist.a_coef).astype(np.float32),
        (w * pairlist.b_coef).astype(np.float32),
        hb,
        (np.float32(weights.elec * energy.ELEC_SCALE) * pairlist.qq_product).astype(np.float32),
        (np.float32(weights.desolv) * pairlist.desolv_coeff).astype(np.float32),
    )


def prepare_context(
    topology: LigandTopology,
    grid_set: GridMapSet,
    weights: energy.TermWeights | None = None,
    table: ParameterTable | None = None,
    pairlist: NonbondPairList | None = None,
    intra_cutoff: float | None = None,
    penalty_scale: float = BOX_PENALTY_SCALE,
) -> ScoringContext:
    """Build the scoring context for one topology against one grid set."""
    weights = weights or energy.TermWeights()
    table = table or default_parameter_table()
    if pairlist is None:
        pairlist = build_nonbond_pairlist(topology, table)

    labels = [table[int(t)].type_label for t in topology.type_index]
    needed = sorted(set(labels))
    for label in needed:
        if label not in grid_set.maps:
            raise ValueError(f"grid set has no map for ligand atom type {label!r}")
    for reserved in (ELEC_LABEL, DESOLV_LABEL):
        if reserved not in grid_set.maps:
            raise ValueError(f"grid set is missing the {reserved!r} map")

    slot_of = {label: k for k, label in enumerate(needed)}
    stack = np.stack(
        [grid_set.maps[label] for label in needed]
        + [grid_set.maps[ELEC_LABEL], grid_set.maps[DESOLV_LABEL]]
    )
    atom_slot = np.array([slot_of[l] for l in labels], dtype=np.int32)

    solpar = table.solpar_array()[topology.type_index]
    dsf = (solpar + np.float32(energy.QASP) * np.abs(topology.charge)).astype(np.float32)

    spec = grid_set.spec
    box_lo = np.asarray(spec.origin, dtype=np.float32)
    box_hi = np.asarray(spec.upper, dtype=np.float32)

    pi, pj, pa, pb, phb, pqq, pdsl = _fold_pairs(pairlist, weights)
    cut2 = np.float32(np.inf) if intra_cutoff is None else np.float32(intra_cutoff * intra_cutoff)

    frags = [rb.fragment.astype(np.int32) for rb in topology.rotatable_bonds]
    frag_start = np.zeros(len(frags) + 1, dtype=np.int32)
    if frags:
        frag_start[1:] = np.cumsum([f.size for f in frags])
        frag_index = np.concatenate(frags).astype(np.int32)
    else:
        frag_index = np.empty(0, dtype=np.int32)

    return ScoringContext(
        map_stack=np.ascontiguousarray(stack, dtype=np.float32),
        atom_slot=atom_slot,
        charge=topology.charge,
        desolv_factor=dsf,
        box_lo=box_lo,
        box_hi=box_hi,
        spacing=np.float32(spec.spacing),
        dims=spec.dims,
        penalty_scale=np.float32(penalty_scale),
        pair_i=pi,
        pair_j=pj,
        pair_a=pa,
        pair_b=pb,
        pair_hb=phb,
        pair_qq=pqq,
        pair_desolv=pdsl,
        intra_cutoff2=cut2,
        torsional32=np.float32(weights.tors * topology.n_torsions),
        n_atoms=topology.n_atoms,
        pose_centered0=(topology.coords0 - topology.centroid0[:, None]).astype(np.float32),
        frag_index=frag_index,
        frag_start=frag_start,
        frag_axis_a=np.array([rb.axis_a for rb in topology.rotatable_bonds], dtype=np.int32),
        frag_axis_b=np.array([rb.axis_b for rb in topology.rotatable_bonds], dtype=np.int32),
    )


_REGISTRY: dict[str, object] = {}


def _load_backends():
    if _REGISTRY:
        return
    from .reference import ReferenceBackend
    from .scalar import ScalarBackend

    _REGISTRY["reference"] = ReferenceBackend()
    _REGISTRY["scalar"] = ScalarBackend()
    try:
        from .simd import SimdBackend

        _REGISTRY["simd"] = SimdBackend()
    except ImportError as exc:  # numba missing / broken
        _REGISTRY["simd"] = BackendUnavailable(f"simd backend unavailable: {exc}")


def list_backends() -> list[str]:
    _load_backends()
    return [k for k, v in _REGISTRY.items() if not isinstance(v, BackendUnavailable)]


def get_backend(name: str | None = None):
    """Resolve a backend by name, the VECDOCK_BACKEND env var, or the default."""
    _load_backends()
    if name is None:
        name = os.environ.get(BACKEND_ENV_VAR) or DEFAULT_BACKEND
    if isinstance(name, str):
        key = name.lower()
        if key not in _REGISTRY:
            raise ValueError(f"unknown backend {name!r}; choose from {sorted(_REGISTRY)}")
        found = _REGISTRY[key]
        if isinstance(found, BackendUnavailable):
            raise found
        return found
    return name  # already a backend object


def inter_energy(pose, type_index, charges, grid_set, backend=None, table=None) -> float:
    """Ligand-receptor energy of one pose via grid lookups (float32 value).

    In-box atoms sum their type-map, charge-scaled electrostatic, and
    solvation-scaled desolvation lookups; out-of-box atoms contribute the
    smooth distance penalty instead.
    """
    table = table or default_parameter_table()
    topo = LigandTopology(
        coords0=pose,
        type_index=type_index,
        charge=np.asarray(charges, dtype=np.float32),
        bonds=np.empty((0, 2), dtype=np.int32),
    )
    empty = NonbondPairList(
        i=np.empty(0, np.int32),
        j=np.empty(0, np.int32),
        a_coef=np.empty(0, np.float32),
        b_coef=np.empty(0, np.float32),
        is_hbond=np.empty(0, bool),
        qq_product=np.empty(0, np.float32),
        desolv_coeff=np.empty(0, np.float32),
    )
    ctx = prepare_context(topo, grid_set, table=table, pairlist=empty)
    b = get_backend(backend)
    return float(np.float32(b.inter_one(np.asarray(pose, dtype=np.float32), ctx)))


def intra_energy(pose, pairlist: NonbondPairList, weights=None, backend=None) -> float:
    """Internal pairwise energy of one pose over the non-bonded pair list."""
    weights = weights or energy.TermWeights()
    pi, pj, pa, pb, phb, pqq, pdsl = _fold_pairs(pairlist, weights)
    ctx = ScoringContext(
        map_stack=np.zeros((2, 2, 2, 2), dtype=np.float32),
        atom_slot=np.zeros(0, dtype=np.int32),
        charge=np.zeros(0, dtype=np.float32),
        desolv_factor=np.zeros(0, dtype=np.float32),
        box_lo=np.zeros(3, dtype=np.float32),
        box_hi=np.ones(3, dtype=np.float32),
        spacing=np.float32(1.0),
        dims=(2, 2, 2),
        penalty_scale=np.float32(BOX_PENALTY_SCALE),
        pair_i=pi,
        pair_j=pj,
        pair_a=pa,
        pair_b=pb,
        pair_hb=phb,
        pair_qq=pqq,
        pair_desolv=pdsl,
        intra_cutoff2=np.float32(np.inf),
        torsional32=np.float32(0.0),
        n_atoms=int(np.asarray(pose).shape[-1]),
        pose_centered0=np.zeros((3, 1), dtype=np.float32),
        frag_index=np.empty(0, dtype=np.int32),
        frag_start=np.zeros(1, dtype=np.int32),
        frag_axis_a=np.empty(0, dtype=np.int32),
        frag_axis_b=np.empty(0, dtype=np.int32),
    )
    b = get_backend(backend)
    return float(np.float32(b.intra_one(np.asarray(pose, dtype=np.float32), ctx)))


def score_pose(
    topology: LigandTopology,
    genotype,
    grid_set: GridMapSet,
    weights: energy.TermWeights | None = None,
    backend=None,
    table: ParameterTable | None = None,
    context: ScoringContext | None = None,
) -> ScoreBreakdown:
    """Full score of one genotype: pose, then inter + intra + w_tors * T."""
    ctx = context or prepare_context(topology, grid_set, weights=weights, table=table)
    b = get_backend(backend)
    pose = apply_pose(topology, genotype)
    inter64 = b.inter_one(pose, ctx)
    intra64 = b.intra_one(pose, ctx)
    return ScoreBreakdown.from_components(inter64, intra64, ctx.torsional32)


def score_population(
    topology: LigandTopology,
    genes: np.ndarray,
    context: ScoringContext,
    backend=None,
):
    """Score a whole population: returns (inter64, intra64, total32) arrays."""
    b = get_backend(backend)
    if hasattr(b, "dock_population"):
        # fused pose+score kernel (GIL-free); poses mirror pose_population
        inter64, intra64 = b.dock_population(np.ascontiguousarray(genes, dtype=np.float64), context)
    else:
        poses = pose_population(topology, genes)
        inter64, intra64 = b.score_many(poses, context)
    # same rounding sequence as ScoreBreakdown.from_components
    tot = (inter64.astype(np.float32) + intra64.astype(np.float32)) + context.torsional32
    return inter64, intra64, tot.astype(np.float32)
