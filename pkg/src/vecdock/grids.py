"""Receptor grid maps: AutoGrid-style precomputation, trilinear lookup, and
the MUGD binary on-disk format.

A GridMapSet holds one 3D float32 map per probe atom type plus an
electrostatic map (per unit probe charge) and a desolvation map (receptor
volume part). The term weights are folded into the maps at build time, so a
scoring lookup only multiplies by the per-atom charge / solvation factor.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from . import energy
from .io_formats import ParameterTable, default_parameter_table
from .model import Protein

ELEC_LABEL = "@elec"
DESOLV_LABEL = "@desolv"

MAGIC = b"MUGD"
VERSION = 1

# Node-sum cutoff for vdW / H-bond / desolvation contributions (AutoGrid
# convention); electrostatics is summed without a cutoff.
DEFAULT_CUTOFF = 8.0
DEFAULT_SPACING = 0.375


class GridFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned node lattice: origin corner, spacing, node counts."""

    origin: tuple[float, float, float]
    spacing: float
    dims: tuple[int, int, int]

    def __post_init__(self):
        if not (self.spacing > 0):
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        if any(d < 2 for d in self.dims):
            raise ValueError(f"need >= 2 nodes per axis, got dims {self.dims}")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def upper(self) -> tuple[float, float, float]:
        return tuple(o + (d - 1) * self.spacing for o, d in zip(self.origin, self.dims))

    @property
    def n_nodes(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Node coordinates along each axis, float64."""
        return tuple(
            self.origin[k] + self.spacing * np.arange(self.dims[k], dtype=np.float64)
            for k in range(3)
        )

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=np.float64)
        lo = np.asarray(self.origin)
        hi = np.asarray(self.upper)
        return bool(np.all(p >= lo) and np.all(p <= hi))

    @classmethod
    def centered(cls, center, dims, spacing: float) -> "GridSpec":
        dims = tuple(int(d) for d in dims)
        origin = tuple(float(c) - (d - 1) * spacing / 2.0 for c, d in zip(center, dims))
        return cls(origin=origin, spacing=spacing, dims=dims)


@dataclass(frozen=True)
class GridMapSet:
    """A set of same-shaped maps keyed by label.

    Probe-type maps use their type label; the electrostatic and desolvation
    maps use the reserved labels '@elec' and '@desolv'.
    """

    spec: GridSpec
    maps: dict[str, np.ndarray]

    def __post_init__(self):
        fixed = {}
        for label, arr in self.maps.items():
            arr = np.asarray(arr, dtype=np.float32)
            if arr.shape != self.spec.dims:
                raise ValueError(
                    f"map {label!r} has shape {arr.shape}, expected {self.spec.dims}"
                )
            if not np.isfinite(arr).all():
                raise ValueError(f"map {label!r} contains non-finite values")
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False  # shared read-only across workers
            fixed[label] = arr
        object.__setattr__(self, "maps", fixed)

    @property
    def elec_map(self) -> np.ndarray:
        return self.maps[ELEC_LABEL]

    @property
    def desolv_map(self) -> np.ndarray:
        return self.maps[DESOLV_LABEL]

    @property
    def type_labels(self) -> list[str]:
        return [l for l in self.maps if not l.startswith("@")]


def build_grid_maps(
    protein: Protein,
    spec: GridSpec,
    probe_types: list[str],
    weights: energy.TermWeights | None = None,
    table: ParameterTable | None = None,
    cutoff: float = DEFAULT_CUTOFF,
) -> GridMapSet:
    """Precompute per-type affinity maps plus electrostatic and desolvation
    maps by direct summation over receptor atoms (float64, fixed atom order,
    so the result is bitwise deterministic).

    Per-type node value: sum over receptor atoms within `cutoff` of
    w_vdw * vdw (w_hbond * hbond for donor/acceptor pairs) plus the
    probe-volume part of the desolvation term. The electrostatic map stores
    w_elec-weighted energy per unit probe charge (no cutoff); the desolvation
    map stores the w_desolv-weighted receptor-volume Gaussian sum.
    """
    weights = weights or energy.TermWeights()
    table = table or default_parameter_table()
    if not probe_types:
        raise ValueError("probe_types must be non-empty")
    for label in probe_types:
        if label not in table:
            raise ValueError(f"probe type {label!r} not in parameter table")
    if float(np.abs(protein.coords).max()) > 1e4:
        raise ValueError("receptor coordinate magnitude exceeds 1e4 A; refusing to grid")

    ax, ay, az = spec.axes()
    gx = ax[:, None, None]
    gy = ay[None, :, None]
    gz = az[None, None, :]

    n_types = len(probe_types)
    type_maps = [np.zeros(spec.dims, dtype=np.float64) for _ in range(n_types)]
    elec = np.zeros(spec.dims, dtype=np.float64)
    desolv = np.zeros(spec.dims, dtype=np.float64)
    cutoff2 = cutoff * cutoff

    probe_params = [table[label] for label in probe_types]
    pcoords = protein.coords.astype(np.float64)

    for j in range(protein.n_atoms):
        pj = table[int(protein.type_index[j])]
        qj = float(protein.charge[j])
        dx = gx - pcoords[0, j]
        dy = gy - pcoords[1, j]
        dz = gz - pcoords[2, j]
        r2 = dx * dx + dy * dy + dz * dz
        within = r2 <= cutoff2

        r = np.sqrt(r2)
        elec += weights.elec * energy.ELEC_SCALE * qj / (
            np.maximum(r, energy.MIN_R) * energy.distance_dielectric(np.maximum(r, energy.MIN_R))
        )

        gauss = np.exp(-r2 / energy.DESOLV_DENOM)
        desolv += np.where(within, weights.desolv * pj.volume * gauss, 0.0)

        sj = pj.solpar + energy.QASP * abs(qj)
        for t, pt in enumerate(probe_params):
            r_eq = 0.5 * (pt.r_eq + pj.r_eq)
            eps = float(np.sqrt(pt.eps * pj.eps))
            is_hb = (pt.hbond_donor and pj.hbond_acceptor) or (
                pt.hbond_acceptor and pj.hbond_donor
            )
            if is_hb:
                c12, d10 = energy.hb_coefficients(r_eq, eps)
                well = weights.hbond * energy.hbond_energy(r2, c12, d10)
            else:
                a12, b6 = energy.lj_coefficients(r_eq, eps)
                well = weights.vdw * energy.vdw_energy(r2, a12, b6)
            probe_desolv = weights.desolv * pt.volume * sj * gauss
            type_maps[t] += np.where(within, well + probe_desolv, 0.0)

    maps: dict[str, np.ndarray] = {}
    for label, m in zip(probe_types, type_maps):
        maps[label] = m.astype(np.float32)
    maps[ELEC_LABEL] = elec.astype(np.float32)
    maps[DESOLV_LABEL] = desolv.astype(np.float32)
    return GridMapSet(spec=spec, maps=maps)


def trilinear_lookup(map_array: np.ndarray, spec: GridSpec, point) -> float:
    """Standard 8-corner trilinear interpolation at an in-box point.

    Exact at nodes; callers guard the box bounds (indices are clamped, not
    checked).
    """
    p = np.asarray(point, dtype=np.float64)
    u = (p - np.asarray(spec.origin)) / spec.spacing
    cell = np.minimum(np.maximum(np.floor(u).astype(np.int64), 0),
                      np.asarray(spec.dims) - 2)
    f = u - cell
    ix, iy, iz = (int(v) for v in cell)
    fx, fy, fz = (float(v) for v in f)
    m = map_array

    def lerp(a, b, t):
        return a * (1.0 - t) + b * t

    c00 = lerp(float(m[ix, iy, iz]), float(m[ix + 1, iy, iz]), fx)
    c10 = lerp(float(m[ix, iy + 1, iz]), float(m[ix + 1, iy + 1, iz]), fx)
    c01 = lerp(float(m[ix, iy, iz + 1]), float(m[ix + 1, iy, iz + 1]), fx)
    c11 = lerp(float(m[ix, iy + 1, iz + 1]), float(m[ix + 1, iy + 1, iz + 1]), fx)
    c0 = lerp(c00, c10, fy)
    c1 = lerp(c01, c11, fy)
    return lerp(c0, c1, fz)


def write_grid_set(grid_set: GridMapSet, sink) -> None:
    """Serialize to the MUGD little-endian binary format.

    Layout: magic 'MUGD' | u32 version | u32 nx, ny, nz | f32 origin[3] |
    f32 spacing | u32 map_count | per map: u16 label length, UTF-8 label,
    nx*ny*nz f32 payload in x-fastest order.
    """
    close = False
    if isinstance(sink, str) or hasattr(sink, "__fspath__"):
        sink = open(sink, "wb")
        close = True
    try:
        spec = grid_set.spec
        sink.write(MAGIC)
        sink.write(struct.pack("<I", VERSION))
        sink.write(struct.pack("<III", *spec.dims))
        sink.write(struct.pack("<fff", *spec.origin))
        sink.write(struct.pack("<f", spec.spacing))
        sink.write(struct.pack("<I", len(grid_set.maps)))
        for label, arr in grid_set.maps.items():
            blob = label.encode("utf-8")
            sink.write(struct.pack("<H", len(blob)))
            sink.write(blob)
            payload = np.ascontiguousarray(arr.ravel(order="F"), dtype="<f4")
            sink.write(payload.tobytes())
    finally:
        if close:
            sink.close()


def _read_exact(source, n: int, what: str) -> bytes:
    data = source.read(n)
    if len(data) != n:
        raise GridFormatError(f"unexpected end of MUGD stream while reading {what}")
    return data


def read_grid_set(source) -> GridMapSet:
    """Read a MUGD stream back into a GridMapSet (exact reconstruction)."""
    close = False
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    elif isinstance(source, str) or hasattr(source, "__fspath__"):
        source = open(source, "rb")
        close = True
    try:
        magic = _read_exact(source, 4, "magic")
        if magic != MAGIC:
            raise GridFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(source, 4, "version"))
        if version != VERSION:
            raise GridFormatError(f"unsupported MUGD version {version}, expected {VERSION}")
        nx, ny, nz = struct.unpack("<III", _read_exact(source, 12, "dims"))
        origin = struct.unpack("<fff", _read_exact(source, 12, "origin"))
        (spacing,) = struct.unpack("<f", _read_exact(source, 4, "spacing"))
        (map_count,) = struct.unpack("<I", _read_exact(source, 4, "map count"))
        spec = GridSpec(origin=origin, spacing=spacing, dims=(nx, ny, nz))
        maps: dict[str, np.ndarray] = {}
        for _ in range(map_count):
            (label_len,) = struct.unpack("<H", _read_exact(source, 2, "label length"))
            label = _read_exact(source, label_len, "label").decode("utf-8")
            n_values = nx * ny * nz
            payload = _read_exact(source, 4 * n_values, f"payload of map {label!r}")
            flat = np.frombuffer(payload, dtype="<f4")
            maps[label] = np.ascontiguousarray(flat.reshape((nx, ny, nz), order="F"))
        extra = source.read(1)
        if extra:
            raise GridFormatError("trailing bytes after final map payload (size mismatch)")
        return GridMapSet(spec=spec, maps=maps)
    finally:
        if close:
            source.close()
