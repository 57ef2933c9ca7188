"""Distortion and rate metrics, checked against hand-worked instances."""

import math

import numpy as np
import pytest

from tricloud import core, geom, metrics
from tricloud.errors import (
    ConsistencyError,
    EmptySetError,
    ParameterError,
    ShapeMismatchError,
)


def _frame(n_faces=2, upsample=2, seed=0, n_vertices=5):
    rng = np.random.default_rng(seed)
    vertices = rng.random((n_vertices, 3)) * 0.99
    faces = rng.integers(0, n_vertices, size=(n_faces, 3))
    colors = rng.integers(0, 256, size=(core.expected_color_count(n_faces, upsample), 3))
    return core.TriangleCloudFrame(vertices, faces, colors.astype(float), upsample)


def _vset(depth, coords, lums):
    coords = np.asarray(coords, dtype=np.int64)
    codes = geom.morton_encode(coords[:, 0], coords[:, 1], coords[:, 2], depth)
    order = np.argsort(codes)
    attrs = np.column_stack([np.asarray(lums, float)[order]] * 3)
    return core.VoxelSet(depth, codes[order], attrs)


# ---------------------------------------------------------------------------
# transform-domain PSNR
# ---------------------------------------------------------------------------

def test_psnr_transform_geometry_hand_value():
    ref = np.zeros((1, 3))
    rec = np.array([[0.1, 0.0, 0.0]])
    got = metrics.psnr_transform(ref, rec, "geometry")
    assert got == pytest.approx(24.771212547196626, abs=1e-9)


def test_psnr_transform_color_hand_value():
    got = metrics.psnr_transform(np.array([100.0]), np.array([110.0]), "color")
    assert got == pytest.approx(28.130803608679106, abs=1e-9)
    # a trailing singleton axis means the same thing
    got2 = metrics.psnr_transform(np.array([[100.0]]), np.array([[110.0]]), "color")
    assert got2 == got


def test_psnr_transform_averages_mse_over_frames():
    a = np.zeros((1, 3))
    b = np.array([[0.1, 0.0, 0.0]])
    got = metrics.psnr_transform([a, a], [b, a], "geometry")
    assert got == pytest.approx(27.781512503836435, abs=1e-9)


def test_psnr_transform_identical_is_infinite():
    a = np.random.default_rng(0).random((7, 3))
    assert metrics.psnr_transform(a, a.copy(), "geometry") == math.inf


def test_psnr_transform_validation():
    a = np.zeros((2, 3))
    with pytest.raises(ShapeMismatchError):
        metrics.psnr_transform([a], [a, a], "geometry")
    with pytest.raises(ShapeMismatchError):
        metrics.psnr_transform(np.zeros((2, 2)), np.zeros((2, 2)), "geometry")
    with pytest.raises(ShapeMismatchError):
        metrics.psnr_transform(np.zeros((2, 3)), np.zeros((2, 3)), "color")
    with pytest.raises(ParameterError):
        metrics.psnr_transform(a, a, "luma")
    with pytest.raises(EmptySetError):
        metrics.psnr_transform([], [], "geometry")


# ---------------------------------------------------------------------------
# triangle-cloud PSNR on refined clouds
# ---------------------------------------------------------------------------

def test_psnr_triangle_cloud_identical_is_infinite():
    f = _frame(seed=1)
    assert metrics.psnr_triangle_cloud([f], [f]) == (math.inf,) * 4


def test_psnr_triangle_cloud_ignores_vertex_relabeling():
    f = _frame(seed=2, n_vertices=6)
    perm = np.random.default_rng(3).permutation(f.n_vertices)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    g = core.TriangleCloudFrame(f.vertices[perm], inv[f.faces], f.colors, f.upsample)
    assert metrics.psnr_triangle_cloud([f], [g]) == (math.inf,) * 4


def test_psnr_triangle_cloud_translation_hand_value():
    f = _frame(seed=4)
    shifted = f.vertices.copy()
    shifted[:, 0] += 0.005
    g = core.TriangleCloudFrame(shifted, f.faces, f.colors, f.upsample)
    psnr_g, psnr_y, psnr_u, psnr_v = metrics.psnr_triangle_cloud([f], [g])
    # uniform x shift of d leaves MSE_G = d^2 / 3 regardless of refinement
    assert psnr_g == pytest.approx(-10 * math.log10(0.005 ** 2 / 3), abs=1e-9)
    assert (psnr_y, psnr_u, psnr_v) == (math.inf,) * 3


def test_psnr_triangle_cloud_validation():
    f = _frame(seed=5)
    other = _frame(seed=5, upsample=3)
    with pytest.raises(ShapeMismatchError):
        metrics.psnr_triangle_cloud([f], [f, f])
    with pytest.raises(ShapeMismatchError):
        metrics.psnr_triangle_cloud([f], [other])
    with pytest.raises(EmptySetError):
        metrics.psnr_triangle_cloud([], [])


def test_refined_interpolated_cloud_counts_and_validation():
    f = _frame(n_faces=2, upsample=2, seed=6)
    points, colors = metrics.refined_interpolated_cloud(f, 1)
    # each refined face contributes its three corners at factor one
    assert points.shape == (3 * 2 * 2 ** 2, 3)
    assert colors.shape == points.shape
    points2, _ = metrics.refined_interpolated_cloud(f, 2)
    assert points2.shape == (6 * 2 * 2 ** 2, 3)
    with pytest.raises(ParameterError):
        metrics.refined_interpolated_cloud(f, 0)


# ---------------------------------------------------------------------------
# six-face projection
# ---------------------------------------------------------------------------

def test_project_single_voxel_hits_all_faces():
    vs = core.VoxelSet(1, [0], np.array([[100.0, 110.0, 120.0]]))
    imgs = metrics.project_to_faces(vs)
    assert imgs.shape == (6, 2, 2, 3)
    for face in range(6):
        assert np.array_equal(imgs[face, 0, 0], [100.0, 110.0, 120.0])
    # exactly one pixel per face is painted, the rest stays neutral
    assert np.sum(imgs != 128.0) == 18


def test_project_occlusion_along_one_axis():
    a = [10.0, 20.0, 30.0]
    b = [90.0, 80.0, 70.0]
    vs = _two_voxel_set(a, b)
    imgs = metrics.project_to_faces(vs)
    # looking along x both voxels share pixel (y=0, z=0): +x sees the far one
    assert np.array_equal(imgs[0, 0, 0], b)
    assert np.array_equal(imgs[1, 0, 0], a)
    # along y the image is (z, x): both visible
    assert np.array_equal(imgs[2, 0, 0], a) and np.array_equal(imgs[2, 0, 1], b)
    assert np.array_equal(imgs[3, 0, 0], a) and np.array_equal(imgs[3, 0, 1], b)
    # along z the image is (x, y)
    assert np.array_equal(imgs[4, 0, 0], a) and np.array_equal(imgs[4, 1, 0], b)
    assert np.array_equal(imgs[5, 0, 0], a) and np.array_equal(imgs[5, 1, 0], b)


def _two_voxel_set(color_a, color_b):
    # (0,0,0) and (1,0,0) at depth 1: Morton codes 0 and 4
    return core.VoxelSet(1, [0, 4], np.array([color_a, color_b]))


def test_project_empty_set_is_all_gray():
    imgs = metrics.project_to_faces(core.VoxelSet(2, []))
    assert imgs.shape == (6, 4, 4, 3)
    assert np.all(imgs == 128.0)


def test_project_validation():
    vs = core.VoxelSet(1, [0], np.array([[1.0, 2.0, 3.0]]))
    with pytest.raises(ConsistencyError):
        metrics.project_to_faces(vs, depth=2)
    with pytest.raises(ConsistencyError):
        metrics.project_to_faces(core.VoxelSet(1, [0]))
    with pytest.raises(ConsistencyError):
        metrics.project_to_faces(core.VoxelSet(1, [0], np.array([[1.0, 2.0]])))


def test_projection_psnr_identical_is_infinite():
    f = _frame(seed=7)
    assert metrics.projection_psnr([f], [f], depth=4) == (math.inf,) * 3


def test_projection_psnr_detects_color_change():
    f = _frame(seed=8)
    colors = f.colors.copy()
    colors[:, 0] = np.clip(colors[:, 0] + 10.0, 0.0, 255.0)
    g = core.TriangleCloudFrame(f.vertices, f.faces, colors, f.upsample)
    psnr_y, psnr_u, psnr_v = metrics.projection_psnr([f], [g], depth=4)
    assert psnr_y < math.inf
    assert psnr_u == math.inf and psnr_v == math.inf


# ---------------------------------------------------------------------------
# matching distortion
# ---------------------------------------------------------------------------

def test_matching_distortion_hand_case():
    src = _vset(2, [[0, 0, 0]], [10.0])
    dst = _vset(2, [[3, 3, 3]], [20.0])
    d_g2, d_y2, psnr_g, psnr_y = metrics.matching_distortion(src, dst)
    assert d_g2 == 27 / 16
    assert d_y2 == 100.0
    assert psnr_g == pytest.approx(2.4987747321659985, abs=1e-12)
    assert psnr_y == pytest.approx(28.130803608679106, abs=1e-12)


def test_matching_distortion_is_symmetric_max():
    src = _vset(2, [[0, 0, 0]], [10.0])
    dst = _vset(2, [[3, 3, 3], [0, 0, 1]], [20.0, 10.0])
    # forward: (0,0,0) -> (0,0,1), d2 = 1/16; backward worst pairing is
    # (3,3,3) -> (0,0,0) with d2 = 27/16, so the max comes from backward
    d_g2, d_y2, _, _ = metrics.matching_distortion(src, dst)
    assert d_g2 == (27 / 16 + 1 / 16) / 2
    assert d_y2 == 50.0
    swapped = metrics.matching_distortion(dst, src)
    assert (d_g2, d_y2) == swapped[:2]


def test_matching_ties_break_to_lowest_morton():
    # source (1,1,1); both (0,1,1) and (1,0,1) sit at distance 1 but the
    # lower Morton code (0,1,1) must win, which zeroes the forward Y error
    src = _vset(1, [[1, 1, 1]], [10.0])
    dst = _vset(1, [[0, 1, 1], [1, 0, 1]], [10.0, 200.0])
    d_g2, d_y2, _, _ = metrics.matching_distortion(src, dst)
    assert d_g2 == 0.25
    assert d_y2 == (0.0 + 190.0 ** 2) / 2  # backward direction dominates


def test_matching_grid_path_matches_brute_force(monkeypatch):
    rng = np.random.default_rng(42)
    for trial in range(25):
        depth = int(rng.integers(2, 5))
        side = 1 << depth
        n_a = int(rng.integers(1, 40))
        n_b = int(rng.integers(1, 40))
        ca = np.unique(rng.integers(0, side, size=(n_a, 3)), axis=0)
        cb = np.unique(rng.integers(0, side, size=(n_b, 3)), axis=0)
        a = _vset(depth, ca, rng.integers(0, 256, size=ca.shape[0]).astype(float))
        b = _vset(depth, cb, rng.integers(0, 256, size=cb.shape[0]).astype(float))
        want = metrics.matching_distortion(a, b)
        with monkeypatch.context() as m:
            m.setattr(metrics, "_BRUTE_FORCE_PAIRS", 0)
            got = metrics.matching_distortion(a, b)
        assert got == want


def test_matching_distortion_validation():
    a = _vset(2, [[0, 0, 0]], [1.0])
    with pytest.raises(EmptySetError):
        metrics.matching_distortion(a, core.VoxelSet(2, []))
    with pytest.raises(ConsistencyError):
        metrics.matching_distortion(a, _vset(3, [[0, 0, 0]], [1.0]))
    with pytest.raises(ConsistencyError):
        metrics.matching_distortion(a, core.VoxelSet(2, [0]))


def test_matching_distortion_sequence_averages():
    a = _vset(2, [[0, 0, 0]], [0.0])
    b = _vset(2, [[3, 3, 3]], [10.0])
    d_g2, d_y2, psnr_g, psnr_y = metrics.matching_distortion_sequence([a, a], [b, a])
    assert d_g2 == 27 / 32
    assert d_y2 == 50.0
    assert psnr_g == pytest.approx(5.509074688805811, abs=1e-12)
    assert psnr_y == pytest.approx(31.141103565318918, abs=1e-12)
    with pytest.raises(ShapeMismatchError):
        metrics.matching_distortion_sequence([a], [b, b])
    with pytest.raises(EmptySetError):
        metrics.matching_distortion_sequence([], [])


# ---------------------------------------------------------------------------
# rates
# ---------------------------------------------------------------------------

def test_rates_megabit_anchor():
    assert metrics.rates(1048576, 30) == (1.0, None)


def test_rates_bits_per_voxel():
    mbps, bpv = metrics.rates(1000, 2, [100, 150])
    assert bpv == 4.0
    assert mbps == (1000.0 * 30.0) / (1048576.0 * 2.0)


def test_rates_validation():
    with pytest.raises(ParameterError):
        metrics.rates(100, 0)
    with pytest.raises(ParameterError):
        metrics.rates(100, 2, [0, 0])
