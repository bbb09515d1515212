"""Reference backend: plain Python loops, one pair / one atom at a time.

This is the no-vectorization baseline: per-pair branching, scalar boxed
float32 arithmetic, strided element access. Deliberately slow — speedups of
the other backends are measured against it.

It also *defines* the canonical float32 operation sequences. The scalar and
simd backends replicate these sequences exactly so per-term values agree
bitwise across backends:

intra pair term::

    r2  = (dx*dx + dy*dy) + dz*dz            # float32
    r2c = max(r2, MIN_R2)
    inv = 1/r2c; i2 = inv*inv; i3 = i2*inv; i6 = i3*i3
    well = a*i6 - b*(i3*i2 if hbond else i3)  # weight-folded a, b
    r   = sqrt(r2c)                           # float32
    elec   = f32( qq64 / (r64 * (A + B/(1 + K*exp(-(LAMB*r64))))) )   # float64 inner
    desolv = f32( dsl64 * exp(-(r2_64/DESOLV_DENOM)) )                # float64 inner
    term = (well + elec) + desolv             # skipped entirely if r2 > cutoff^2
    acc64 += term                             # float64 accumulator

inter atom term (in box)::

    u  = (x - lo)/spacing                     # float32 division (exact at nodes)
    ix = min(int(floor(u)), nx-2); fx = u - ix
    v(map) = 8-corner trilinear with lerp(a,b,t) = a*(1-t) + b*t,
             collapsing x, then y, then z
    term = (v(type) + q*v(elec)) + dsf*v(desolv)

inter atom term (out of box)::

    d_axis = max(max(lo - x, x - hi), 0)      # per axis
    term   = penalty_scale * (sqrt((dx*dx + dy*dy) + dz*dz) + 1)
"""

from __future__ import annotations

import math

import numpy as np

from . import LAMB, ScoringContext
from .. import energy

F32 = np.float32
_ZERO = F32(0.0)
_ONE = F32(1.0)
_MIN_R2 = F32(energy.MIN_R2)


def _pair_term(dx, dy, dz, a, b, hb, qq, dsl, cut2):
    r2 = (dx * dx + dy * dy) + dz * dz
    if r2 > cut2:
        return _ZERO
    r2c = max(r2, _MIN_R2)
    inv = _ONE / r2c
    i2 = inv * inv
    i3 = i2 * inv
    i6 = i3 * i3
    if hb:
        well = a * i6 - b * (i3 * i2)
    else:
        well = a * i6 - b * i3
    r = np.sqrt(r2c)
    r64 = float(r)
    eps_r = energy.DIEL_A + energy.DIEL_B / (1.0 + energy.DIEL_K * math.exp(-(LAMB * r64)))
    elec = F32(float(qq) / (r64 * eps_r))
    desolv = F32(float(dsl) * math.exp(-(float(r2) / energy.DESOLV_DENOM)))
    return (well + elec) + desolv


def _lerp(a, b, t):
    return a * (_ONE - t) + b * t


def _trilerp(m, ix, iy, iz, fx, fy, fz):
    c00 = _lerp(m[ix, iy, iz], m[ix + 1, iy, iz], fx)
    c10 = _lerp(m[ix, iy + 1, iz], m[ix + 1, iy + 1, iz], fx)
    c01 = _lerp(m[ix, iy, iz + 1], m[ix + 1, iy, iz + 1], fx)
    c11 = _lerp(m[ix, iy + 1, iz + 1], m[ix + 1, iy + 1, iz + 1], fx)
    c0 = _lerp(c00, c10, fy)
    c1 = _lerp(c01, c11, fy)
    return _lerp(c0, c1, fz)


class ReferenceBackend:
    name = "reference"
    lane_width = 1

    def intra_one(self, pose: np.ndarray, ctx: ScoringContext) -> float:
        if ctx.pair_i is None:
            raise ValueError("context has no pair list (inter-only context)")
        xs, ys, zs = pose[0], pose[1], pose[2]
        acc = 0.0
        for k in range(ctx.pair_i.shape[0]):
            i = ctx.pair_i[k]
            j = ctx.pair_j[k]
            term = _pair_term(
                xs[i] - xs[j],
                ys[i] - ys[j],
                zs[i] - zs[j],
                ctx.pair_a[k],
                ctx.pair_b[k],
                ctx.pair_hb[k],
                ctx.pair_qq[k],
                ctx.pair_desolv[k],
                ctx.intra_cutoff2,
            )
            acc += float(term)
        return acc

    def inter_one(self, pose: np.ndarray, ctx: ScoringContext) -> float:
        maps = ctx.map_stack
        n_maps = maps.shape[0]
        elec_m = maps[n_maps - 2]
        desolv_m = maps[n_maps - 1]
        nx, ny, nz = ctx.dims
        lo0, lo1, lo2 = ctx.box_lo
        hi0, hi1, hi2 = ctx.box_hi
        spacing = ctx.spacing
        acc = 0.0
        for i in range(ctx.n_atoms):
            x = pose[0, i]
            y = pose[1, i]
            z = pose[2, i]
            if lo0 <= x <= hi0 and lo1 <= y <= hi1 and lo2 <= z <= hi2:
                ux = (x - lo0) / spacing
                uy = (y - lo1) / spacing
                uz = (z - lo2) / spacing
                ix = min(int(ux), nx - 2)
                iy = min(int(uy), ny - 2)
                iz = min(int(uz), nz - 2)
                fx = ux - F32(ix)
                fy = uy - F32(iy)
                fz = uz - F32(iz)
                t = _trilerp(maps[ctx.atom_slot[i]], ix, iy, iz, fx, fy, fz)
                e = ctx.charge[i] * _trilerp(elec_m, ix, iy, iz, fx, fy, fz)
                d = ctx.desolv_factor[i] * _trilerp(desolv_m, ix, iy, iz, fx, fy, fz)
                term = (t + e) + d
            else:
                dx = max(max(lo0 - x, x - hi0), _ZERO)
                dy = max(max(lo1 - y, y - hi1), _ZERO)
                dz = max(max(lo2 - z, z - hi2), _ZERO)
                dist = np.sqrt((dx * dx + dy * dy) + dz * dz)
                term = ctx.penalty_scale * (dist + _ONE)
            acc += float(term)
        return acc

    def score_many(self, poses: np.ndarray, ctx: ScoringContext):
        pop = poses.shape[0]
        inter = np.empty(pop, dtype=np.float64)
        intra = np.empty(pop, dtype=np.float64)
        for p in range(pop):
            inter[p] = self.inter_one(poses[p], ctx)
            intra[p] = self.intra_one(poses[p], ctx)
        return inter, intra
