"""vecdock: a molecular docking kernel lab.

Grid-map memoization of the rigid-receptor interaction, genotype-driven pose
generation, AutoDock-style scoring through interchangeable compute backends
(reference / scalar / simd), GA search, multi-core batch screening, and a
benchmark harness with a repetition protocol and modeled roofline counts.
"""

from .energy import TermWeights
from .ga import DockingResult, GaConfig, dock
from .grids import GridMapSet, GridSpec, build_grid_maps, read_grid_set, trilinear_lookup, write_grid_set
from .io_formats import (
    LigandBatch,
    ParameterTable,
    default_parameter_table,
    generate_synthetic_ligand,
    load_parameter_table,
    make_replicated_batch,
    parse_ligand_pdbqt,
    parse_protein_pdbqt,
)
from .model import (
    AtomParams,
    LigandTopology,
    NonbondPairList,
    Protein,
    build_fragment_masks,
    build_nonbond_pairlist,
    validate_topology,
)
from .pose import apply_pose, decode_genotype, rotate_selection
from .scoring import ScoreBreakdown, get_backend, inter_energy, intra_energy, list_backends, score_pose
from .screening import ScreenConfig, screen_batch

__version__ = "0.1.0"
