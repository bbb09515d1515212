"""Pose engine tests: decoding, rigid motion, torsion rotations."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vecdock import io_formats
from vecdock.pose import (
    apply_pose,
    decode_genotype,
    genotype_length,
    pose_population,
    rotate_selection,
)

from conftest import chain_topology


def _pairwise_distances(coords):
    xyz = coords.astype(np.float64).T
    return np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1)


def _random_genes(rng, topology, box=3.0):
    return np.concatenate(
        [
            rng.uniform(-box, box, 3),
            rng.normal(size=4),
            rng.uniform(-math.pi, math.pi, topology.n_torsions),
        ]
    )


class TestDecodeGenotype:
    def test_normalization_to_identity(self):
        topo = chain_topology(3)
        genes = np.array([0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0])
        _, quat, _ = decode_genotype(genes, topo)
        np.testing.assert_allclose(quat, [1.0, 0.0, 0.0, 0.0])

    def test_z_flip_quaternion(self):
        topo = chain_topology(3)
        genes = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
        _, quat, _ = decode_genotype(genes, topo)
        np.testing.assert_allclose(quat, [0.0, 0.0, 0.0, 1.0])

    @given(seed=st.integers(0, 10_000))
    def test_unit_norm(self, seed):
        rng = np.random.default_rng(seed)
        topo = chain_topology(4, rotatable=[(1, 2)])
        genes = _random_genes(rng, topo)
        _, quat, _ = decode_genotype(genes, topo)
        assert abs(np.linalg.norm(quat) - 1.0) < 1e-6

    def test_all_zero_rotation_rejected(self):
        topo = chain_topology(3)
        with pytest.raises(ValueError, match="rotation genes"):
            decode_genotype(np.array([1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0]), topo)

    def test_length_mismatch_rejected(self):
        topo = chain_topology(4, rotatable=[(1, 2)])
        assert genotype_length(topo) == 8
        with pytest.raises(ValueError, match="length"):
            decode_genotype(np.zeros(7), topo)


class TestApplyPose:
    def test_identity_pipeline(self):
        topo = chain_topology(5, rotatable=[(1, 2), (2, 3)])
        c0 = topo.centroid0.astype(np.float64)
        genes = np.concatenate([c0, [1.0, 0.0, 0.0, 0.0], [0.0, 0.0]])
        pose = apply_pose(topo, genes)
        np.testing.assert_allclose(pose, topo.coords0, atol=1e-6)

    def test_pure_translation(self):
        topo = chain_topology(5)
        c0 = topo.centroid0.astype(np.float64)
        genes = np.concatenate([c0 + [1.0, 2.0, 3.0], [1.0, 0.0, 0.0, 0.0]])
        pose = apply_pose(topo, genes)
        shift = np.array([[1.0], [2.0], [3.0]])
        np.testing.assert_allclose(pose - topo.coords0, np.broadcast_to(shift, (3, 5)), atol=1e-5)

    @given(seed=st.integers(0, 10_000))
    def test_rigid_motion_preserves_distances(self, seed):
        rng = np.random.default_rng(seed)
        topo = io_formats.generate_synthetic_ligand(seed=5, n_atoms=12, n_torsions=0)
        genes = _random_genes(rng, topo)
        pose = apply_pose(topo, genes)
        d0 = _pairwise_distances(topo.coords0)
        d1 = _pairwise_distances(pose)
        mask = d0 > 1e-9
        assert np.max(np.abs(d1[mask] - d0[mask]) / d0[mask]) < 1e-5

    def test_torsion_moves_only_masked_atoms(self):
        # bent chain so fragment atoms are off the torsion axis
        coords = np.array(
            [[0.0, 1.5, 3.0, 3.0, 4.5, 6.0], [0.0, 0.0, 0.0, 1.5, 1.5, 1.5], [0.0] * 6],
            dtype=np.float32,
        )
        topo = chain_topology(6, rotatable=[(2, 3)])
        object.__setattr__(topo, "coords0", coords)
        c0 = topo.centroid0.astype(np.float64)
        base = np.concatenate([c0, [1.0, 0.0, 0.0, 0.0], [0.0]])
        twisted = base.copy()
        twisted[7] = 1.2
        p0 = apply_pose(topo, base)
        p1 = apply_pose(topo, twisted)
        fragment = set(topo.rotatable_bonds[0].fragment.tolist())
        for atom in range(6):
            delta = np.linalg.norm(p1[:, atom] - p0[:, atom])
            if atom in fragment - {3}:  # atom 3 sits on the axis
                assert delta > 0.1
            else:
                assert delta < 1e-6

    def test_torsion_rotation_matches_per_atom_oracle(self):
        # bent ligand so the torsion axis is not collinear with the fragment
        coords = np.array(
            [[0.0, 1.5, 3.0, 3.0, 4.5], [0.0, 0.0, 0.0, 1.5, 1.5], [0.0] * 5],
            dtype=np.float32,
        )
        topo = chain_topology(5, rotatable=[(1, 2)])
        object.__setattr__(topo, "coords0", coords)
        theta = 0.9
        c0 = topo.centroid0.astype(np.float64)
        genes = np.concatenate([c0, [1.0, 0.0, 0.0, 0.0], [theta]])
        pose = apply_pose(topo, genes)
        # independent Rodrigues oracle in double precision
        axis = (coords[:, 2] - coords[:, 1]).astype(np.float64)
        k = axis / np.linalg.norm(axis)
        for atom in topo.rotatable_bonds[0].fragment.tolist():
            v = (coords[:, atom] - coords[:, 1]).astype(np.float64)
            want = (
                v * math.cos(theta)
                + np.cross(k, v) * math.sin(theta)
                + k * np.dot(k, v) * (1 - math.cos(theta))
            ) + coords[:, 1].astype(np.float64)
            np.testing.assert_allclose(pose[:, atom], want, atol=1e-5)

    @given(seed=st.integers(0, 10_000))
    def test_torsions_preserve_bond_lengths(self, seed):
        rng = np.random.default_rng(seed)
        topo = io_formats.generate_synthetic_ligand(seed=8, n_atoms=14, n_torsions=4)
        genes = _random_genes(rng, topo)
        pose = apply_pose(topo, genes)
        xyz0 = topo.coords0.astype(np.float64)
        xyz1 = pose.astype(np.float64)
        for a, b in topo.bonds.tolist():
            d0 = np.linalg.norm(xyz0[:, a] - xyz0[:, b])
            d1 = np.linalg.norm(xyz1[:, a] - xyz1[:, b])
            assert abs(d1 - d0) / d0 < 1e-5

    def test_torsion_round_trip(self):
        topo = io_formats.generate_synthetic_ligand(seed=8, n_atoms=10, n_torsions=1)
        c0 = topo.centroid0.astype(np.float64)
        theta = 1.3
        fwd = np.concatenate([c0, [1.0, 0.0, 0.0, 0.0], [theta]])
        pose_f = apply_pose(topo, fwd)
        # rotate the already-posed ligand back by -theta about the same axis
        rb = topo.rotatable_bonds[0]
        back = rotate_selection(
            pose_f,
            pose_f[:, rb.axis_a],
            pose_f[:, rb.axis_b] - pose_f[:, rb.axis_a],
            -theta,
            rb.fragment,
        )
        zero = np.concatenate([c0, [1.0, 0.0, 0.0, 0.0], [0.0]])
        np.testing.assert_allclose(back, apply_pose(topo, zero), atol=1e-5)

    def test_purity_bitwise(self):
        topo = io_formats.generate_synthetic_ligand(seed=2, n_atoms=15, n_torsions=3)
        genes = _random_genes(np.random.default_rng(4), topo)
        a = apply_pose(topo, genes)
        b = apply_pose(topo, genes)
        np.testing.assert_array_equal(a.view(np.uint32), b.view(np.uint32))

    def test_population_path_matches_single(self):
        topo = io_formats.generate_synthetic_ligand(seed=2, n_atoms=15, n_torsions=3)
        rng = np.random.default_rng(4)
        genes = np.stack([_random_genes(rng, topo) for _ in range(20)])
        batch = pose_population(topo, genes)
        for k in range(20):
            single = apply_pose(topo, genes[k])
            np.testing.assert_allclose(batch[k], single, atol=1e-6)


class TestRotateSelection:
    def test_zero_angle_unchanged(self):
        coords = np.random.default_rng(0).uniform(-2, 2, (3, 6)).astype(np.float32)
        out = rotate_selection(coords, (0, 0, 0), (0, 0, 1), 0.0, np.array([1, 2, 3]))
        np.testing.assert_array_equal(out, coords)

    def test_quarter_turn_about_z(self):
        coords = np.array([[1.0], [0.0], [0.0]], dtype=np.float32)
        out = rotate_selection(coords, (0, 0, 0), (0, 0, 1), math.pi / 2, np.array([0]))
        np.testing.assert_allclose(out[:, 0], [0.0, 1.0, 0.0], atol=1e-6)

    def test_unmasked_untouched(self):
        coords = np.random.default_rng(1).uniform(-2, 2, (3, 5)).astype(np.float32)
        out = rotate_selection(coords, (0.5, 0, 0), (1, 1, 0), 0.7, np.array([3, 4]))
        np.testing.assert_array_equal(out[:, :3], coords[:, :3])

    @given(seed=st.integers(0, 10_000), angle=st.floats(-math.pi, math.pi))
    def test_distance_to_axis_endpoints_preserved(self, seed, angle):
        rng = np.random.default_rng(seed)
        coords = rng.uniform(-3, 3, (3, 8)).astype(np.float32)
        origin = coords[:, 0]
        axis = coords[:, 1] - coords[:, 0]
        if np.linalg.norm(axis) < 1e-3:
            return
        mask = np.array([4, 5, 6, 7])
        out = rotate_selection(coords, origin, axis, angle, mask)
        for endpoint in (coords[:, 0], coords[:, 1]):
            d0 = np.linalg.norm(coords[:, mask].T - endpoint.astype(np.float64), axis=1)
            d1 = np.linalg.norm(out[:, mask].T - endpoint.astype(np.float64), axis=1)
            assert np.max(np.abs(d1 - d0) / np.maximum(d0, 1e-6)) < 1e-5

    def test_degenerate_axis_rejected(self):
        coords = np.zeros((3, 3), dtype=np.float32)
        with pytest.raises(ValueError, match="degenerate"):
            rotate_selection(coords, (0, 0, 0), (0, 0, 0), 1.0, np.array([1]))
