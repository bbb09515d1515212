"""Genotype decoding and pose generation.

A genotype is a float vector of 3 translation genes (A), 4 rotation genes
(normalized to a unit quaternion, w-first), and one torsion angle (rad) per
rotatable bond. Applying a pose: rotate the reference conformation about its
centroid, translate the centroid onto the translation genes, then rotate each
rotatable bond's fragment about the (already transformed) bond axis in
declaration order (root-outward, so nested fragments compose correctly).

All pose math is float32; the single-pose and population-batched paths use
identical operation sequences.
"""

from __future__ import annotations

import math

import numpy as np

from .model import LigandTopology

RIGID_GENES = 7


def genotype_length(topology: LigandTopology) -> int:
    return RIGID_GENES + topology.n_torsions


def decode_genotype(genes, topology: LigandTopology):
    """Split genes into (translation, unit quaternion, torsions).

    Raises ValueError on length mismatch or all-zero rotation genes (which
    encode no orientation).
    """
    g = np.asarray(genes, dtype=np.float64)
    expected = genotype_length(topology)
    if g.shape != (expected,):
        raise ValueError(
            f"genotype length {g.shape} does not match 7 + {topology.n_torsions} torsions"
        )
    if not np.isfinite(g).all():
        raise ValueError("genotype contains non-finite genes")
    quat = g[3:7]
    norm = math.sqrt(float((quat * quat).sum()))
    if norm < 1e-12:
        raise ValueError("rotation genes are all zero; orientation undefined")
    return g[:3].copy(), quat / norm, g[7:].copy()


def quaternion_matrix(q) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion (w, x, y, z), float32."""
    w, x, y, z = (float(v) for v in q)
    m = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )
    return m.astype(np.float32)


def _rotate_rows(m: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Apply a (3,3) float32 matrix to (3, n) float32 coords with explicit
    row combinations (fixed op order; no BLAS/einsum reassociation)."""
    x, y, z = coords[0], coords[1], coords[2]
    out = np.empty_like(coords)
    out[0] = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
    out[1] = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
    out[2] = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
    return out


def rotate_selection(coords, axis_origin, axis_dir, angle: float, mask) -> np.ndarray:
    """Rodrigues rotation of the masked atoms about the axis through
    axis_origin along axis_dir; unmasked atoms are untouched. Returns a new
    (3, n) float32 array.

    Raises ValueError for a degenerate (near-zero) axis.
    """
    coords = np.asarray(coords, dtype=np.float32)
    out = coords.copy()
    _rotate_selection_inplace(
        out,
        np.asarray(axis_origin, dtype=np.float32),
        np.asarray(axis_dir, dtype=np.float32),
        float(angle),
        np.asarray(mask, dtype=np.int64),
    )
    return out


def _rotate_selection_inplace(coords, origin, axis, angle, idx):
    ax, ay, az = (float(v) for v in axis)
    norm = math.sqrt(ax * ax + ay * ay + az * az)
    if norm < 1e-9:
        raise ValueError("degenerate rotation axis (coincident bond atoms?)")
    kx = np.float32(ax / norm)
    ky = np.float32(ay / norm)
    kz = np.float32(az / norm)
    c = np.float32(math.cos(angle))
    s = np.float32(math.sin(angle))

    px = coords[0, idx] - origin[0]
    py = coords[1, idx] - origin[1]
    pz = coords[2, idx] - origin[2]
    # v*cos + (k x v)*sin + k*(k.v)*(1-cos)
    dot = kx * px + ky * py + kz * pz
    cxx = ky * pz - kz * py
    cxy = kz * px - kx * pz
    cxz = kx * py - ky * px
    omc = np.float32(1.0) - c
    coords[0, idx] = (px * c + cxx * s + kx * (dot * omc)) + origin[0]
    coords[1, idx] = (py * c + cxy * s + ky * (dot * omc)) + origin[1]
    coords[2, idx] = (pz * c + cxz * s + kz * (dot * omc)) + origin[2]


def apply_pose(topology: LigandTopology, genes) -> np.ndarray:
    """Docked coordinates for one genotype: (3, n_atoms) float32."""
    translation, quat, torsions = decode_genotype(genes, topology)
    m = quaternion_matrix(quat)
    c0 = topology.centroid0
    t32 = translation.astype(np.float32)

    centered = topology.coords0 - c0[:, None]
    pos = _rotate_rows(m, centered)
    pos += t32[:, None]

    for rb, theta in zip(topology.rotatable_bonds, torsions):
        origin = pos[:, rb.axis_a].copy()
        axis = pos[:, rb.axis_b] - origin
        _rotate_selection_inplace(pos, origin, axis, float(theta), rb.fragment.astype(np.int64))
    return pos


def pose_population(topology: LigandTopology, genes: np.ndarray) -> np.ndarray:
    """Batched apply_pose: (pop, 7+T) genes -> (pop, 3, n) float32 poses.

    Mirrors apply_pose op-for-op so pose k is bitwise identical to
    apply_pose(topology, genes[k]).
    """
    g = np.asarray(genes, dtype=np.float64)
    pop = g.shape[0]
    expected = genotype_length(topology)
    if g.shape[1] != expected:
        raise ValueError(f"population gene length {g.shape[1]} != {expected}")

    quat = g[:, 3:7]
    norms = np.sqrt((quat * quat).sum(axis=1))
    if (norms < 1e-12).any():
        raise ValueError("rotation genes are all zero for some individual")
    q = quat / norms[:, None]
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    m = np.empty((pop, 3, 3), dtype=np.float64)
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - w * z)
    m[:, 0, 2] = 2 * (x * z + w * y)
    m[:, 1, 0] = 2 * (x * y + w * z)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - w * x)
    m[:, 2, 0] = 2 * (x * z - w * y)
    m[:, 2, 1] = 2 * (y * z + w * x)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    m32 = m.astype(np.float32)
    t32 = g[:, :3].astype(np.float32)

    c0 = topology.centroid0
    centered = topology.coords0 - c0[:, None]  # (3, n)
    cx, cy, cz = centered[0], centered[1], centered[2]
    pos = np.empty((pop, 3, topology.n_atoms), dtype=np.float32)
    for row in range(3):
        pos[:, row, :] = (
            m32[:, row, 0, None] * cx + m32[:, row, 1, None] * cy + m32[:, row, 2, None] * cz
        )
    pos += t32[:, :, None]

    if topology.n_torsions:
        theta = g[:, RIGID_GENES:]
        cos_t = np.cos(theta).astype(np.float32)
        sin_t = np.sin(theta).astype(np.float32)
        for k, rb in enumerate(topology.rotatable_bonds):
            idx = rb.fragment.astype(np.int64)
            origin = pos[:, :, rb.axis_a].copy()  # (pop, 3)
            axis = pos[:, :, rb.axis_b] - origin
            norm = np.sqrt((axis.astype(np.float64) ** 2).sum(axis=1))
            if (norm < 1e-9).any():
                raise ValueError("degenerate torsion axis in population")
            # Normalize per individual with the scalar-path op order.
            k3 = (axis.astype(np.float64) / norm[:, None]).astype(np.float32)
            kx, ky, kz = k3[:, 0, None], k3[:, 1, None], k3[:, 2, None]
            c = cos_t[:, k, None]
            s = sin_t[:, k, None]
            px = pos[:, 0, :][:, idx] - origin[:, 0, None]
            py = pos[:, 1, :][:, idx] - origin[:, 1, None]
            pz = pos[:, 2, :][:, idx] - origin[:, 2, None]
            dot = kx * px + ky * py + kz * pz
            cxx = ky * pz - kz * py
            cxy = kz * px - kx * pz
            cxz = kx * py - ky * px
            omc = np.float32(1.0) - c
            pos[:, 0, idx] = (px * c + cxx * s + kx * (dot * omc)) + origin[:, 0, None]
            pos[:, 1, idx] = (py * c + cxy * s + ky * (dot * omc)) + origin[:, 1, None]
            pos[:, 2, idx] = (pz * c + cxz * s + kz * (dot * omc)) + origin[:, 2, None]
    return pos
