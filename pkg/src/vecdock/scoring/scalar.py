"""Scalar backend: branch-free NumPy kernels over SoA arrays.

The whole pair/atom loop is handed to the array library in one shot —
contiguous float32 lanes, selects instead of branches — mirroring the
reference backend's canonical operation sequences exactly (see
`reference.py`). Accumulation converts terms to float64 and reduces with
np.sum (pairwise order, fixed for a given length).
"""

from __future__ import annotations

import numpy as np

from . import LAMB, ScoringContext
from .. import energy

F32 = np.float32
_ONE = F32(1.0)
_ZERO = F32(0.0)
_MIN_R2 = F32(energy.MIN_R2)


def _pair_terms(px, py, pz, ctx: ScoringContext) -> np.ndarray:
    """Float32 per-pair terms for poses stacked on the leading axes.

    px/py/pz: (..., n_atoms) float32 coordinate rows.
    """
    i = ctx.pair_i
    j = ctx.pair_j
    dx = px[..., i] - px[..., j]
    dy = py[..., i] - py[..., j]
    dz = pz[..., i] - pz[..., j]
    r2 = (dx * dx + dy * dy) + dz * dz
    r2c = np.maximum(r2, _MIN_R2)
    inv = _ONE / r2c
    i2 = inv * inv
    i3 = i2 * inv
    i6 = i3 * i3
    sel = np.where(ctx.pair_hb, i3 * i2, i3)
    well = ctx.pair_a * i6 - ctx.pair_b * sel

    r = np.sqrt(r2c)
    r64 = r.astype(np.float64)
    eps_r = energy.DIEL_A + energy.DIEL_B / (1.0 + energy.DIEL_K * np.exp(-(LAMB * r64)))
    elec = (ctx.pair_qq.astype(np.float64) / (r64 * eps_r)).astype(F32)
    desolv = (
        ctx.pair_desolv.astype(np.float64)
        * np.exp(-(r2.astype(np.float64) / energy.DESOLV_DENOM))
    ).astype(F32)

    terms = (well + elec) + desolv
    if np.isfinite(float(ctx.intra_cutoff2)):
        terms = np.where(r2 > ctx.intra_cutoff2, _ZERO, terms)
    return terms


def _lerp(a, b, t):
    return a * (_ONE - t) + b * t


def _inter_terms(px, py, pz, ctx: ScoringContext) -> np.ndarray:
    """Float32 per-atom inter terms for poses stacked on leading axes.

    Grid corners are gathered from the flattened map stack with fancy
    indexing; cell indices are clipped so out-of-box atoms gather garbage
    that the final select discards in favor of the distance penalty.
    """
    lo = ctx.box_lo
    hi = ctx.box_hi
    nx, ny, nz = ctx.dims
    n_nodes = nx * ny * nz
    sx = ny * nz
    sy = nz

    inside = (
        (px >= lo[0]) & (px <= hi[0])
        & (py >= lo[1]) & (py <= hi[1])
        & (pz >= lo[2]) & (pz <= hi[2])
    )

    ux = (px - lo[0]) / ctx.spacing
    uy = (py - lo[1]) / ctx.spacing
    uz = (pz - lo[2]) / ctx.spacing
    ix = np.clip(ux.astype(np.int64), 0, nx - 2)
    iy = np.clip(uy.astype(np.int64), 0, ny - 2)
    iz = np.clip(uz.astype(np.int64), 0, nz - 2)
    fx = ux - ix.astype(F32)
    fy = uy - iy.astype(F32)
    fz = uz - iz.astype(F32)

    flat = ctx.map_stack.reshape(-1)
    n_maps = ctx.map_stack.shape[0]
    spatial = ix * sx + iy * sy + iz
    type_base = ctx.atom_slot.astype(np.int64) * n_nodes + spatial
    elec_base = (n_maps - 2) * n_nodes + spatial
    desolv_base = (n_maps - 1) * n_nodes + spatial

    def tri(base):
        def corner(ox, oy, oz):
            return flat[base + (ox * sx + oy * sy + oz)]

        c00 = _lerp(corner(0, 0, 0), corner(1, 0, 0), fx)
        c10 = _lerp(corner(0, 1, 0), corner(1, 1, 0), fx)
        c01 = _lerp(corner(0, 0, 1), corner(1, 0, 1), fx)
        c11 = _lerp(corner(0, 1, 1), corner(1, 1, 1), fx)
        c0 = _lerp(c00, c10, fy)
        c1 = _lerp(c01, c11, fy)
        return _lerp(c0, c1, fz)

    lookup = (tri(type_base) + ctx.charge * tri(elec_base)) + ctx.desolv_factor * tri(desolv_base)

    dx = np.maximum(np.maximum(lo[0] - px, px - hi[0]), _ZERO)
    dy = np.maximum(np.maximum(lo[1] - py, py - hi[1]), _ZERO)
    dz = np.maximum(np.maximum(lo[2] - pz, pz - hi[2]), _ZERO)
    dist = np.sqrt((dx * dx + dy * dy) + dz * dz)
    penalty = ctx.penalty_scale * (dist + _ONE)

    return np.where(inside, lookup, penalty)


class ScalarBackend:
    name = "scalar"
    lane_width = 0  # whole-array: the library picks the lane width

    def intra_one(self, pose: np.ndarray, ctx: ScoringContext) -> float:
        if ctx.pair_i is None:
            raise ValueError("context has no pair list (inter-only context)")
        if ctx.pair_i.shape[0] == 0:
            return 0.0
        terms = _pair_terms(pose[0], pose[1], pose[2], ctx)
        return float(np.sum(terms, dtype=np.float64))

    def inter_one(self, pose: np.ndarray, ctx: ScoringContext) -> float:
        terms = _inter_terms(pose[0], pose[1], pose[2], ctx)
        return float(np.sum(terms, dtype=np.float64))

    def score_many(self, poses: np.ndarray, ctx: ScoringContext):
        px = np.ascontiguousarray(poses[:, 0, :])
        py = np.ascontiguousarray(poses[:, 1, :])
        pz = np.ascontiguousarray(poses[:, 2, :])
        inter = np.sum(_inter_terms(px, py, pz, ctx), axis=-1, dtype=np.float64)
        if ctx.pair_i is not None and ctx.pair_i.shape[0]:
            intra = np.sum(_pair_terms(px, py, pz, ctx), axis=-1, dtype=np.float64)
        else:
            intra = np.zeros(poses.shape[0], dtype=np.float64)
        return inter, intra
