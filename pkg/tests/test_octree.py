"""Octree occupancy bytes and the standalone point-cloud baseline coder."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tricloud import octree
from tricloud.core import VoxelSet
from tricloud.errors import (
    ConsistencyError,
    CorruptStreamError,
    EmptySetError,
    TrailingBytesError,
    TruncatedStreamError,
)


def test_serialize_single_voxel_depth_one():
    # child k sets bit 7-k: child 5 -> 0x04, child 0 -> 0x80
    assert octree.octree_serialize(VoxelSet(1, np.array([5]))) == b"\x04"
    assert octree.octree_serialize(VoxelSet(1, np.array([0]))) == b"\x80"


def test_serialize_full_root():
    assert octree.octree_serialize(VoxelSet(1, np.arange(8))) == b"\xff"


def test_serialize_depth_two_preorder():
    # codes 0 (child 0 / child 0) and 9 (child 1 / child 1): root byte 0xC0,
    # then the two depth-1 nodes in start order
    data = octree.octree_serialize(VoxelSet(2, np.array([0, 9])))
    assert data == b"\xc0\x80\x40"


def test_parse_inverts_hand_case():
    back = octree.octree_parse(b"\xc0\x80\x40", 2)
    assert back.depth == 2
    assert back.codes.tolist() == [0, 9]


def test_parse_emits_sorted_codes():
    rng = np.random.default_rng(4)
    codes = np.sort(rng.choice(8 ** 4, size=300, replace=False).astype(np.int64))
    back = octree.octree_parse(octree.octree_serialize(VoxelSet(4, codes)), 4)
    assert np.array_equal(back.codes, codes)
    assert np.all(np.diff(back.codes) > 0)


def test_serialize_rejects_empty_set():
    with pytest.raises(EmptySetError):
        octree.octree_serialize(VoxelSet(3, np.zeros(0, dtype=np.int64)))


def test_parse_error_paths():
    with pytest.raises(CorruptStreamError):
        octree.octree_parse(b"\x00", 1)  # occupancy byte with no children
    with pytest.raises(TruncatedStreamError):
        octree.octree_parse(b"\xc0\x80", 2)  # missing the second child node
    with pytest.raises(TrailingBytesError):
        octree.octree_parse(b"\x04\xff", 1)  # bytes left after the last leaf
    with pytest.raises(TruncatedStreamError):
        octree.octree_parse(b"", 1)


@given(st.integers(1, 7), st.integers(0, 2 ** 31))
@settings(max_examples=80, deadline=None)
def test_octree_round_trip_random(depth, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, min(200, 8 ** depth) + 1))
    codes = np.sort(rng.choice(8 ** depth, size=n, replace=False).astype(np.int64))
    data = octree.octree_serialize(VoxelSet(depth, codes))
    back = octree.octree_parse(data, depth)
    assert np.array_equal(back.codes, codes)


def test_byte_count_matches_internal_nodes():
    # one byte per internal node: count them level by level
    codes = np.array([0, 1, 8, 65, 511], dtype=np.int64)
    depth = 3
    n_internal = sum(
        np.unique(codes >> (3 * (depth - d))).size for d in range(depth)
    )
    assert len(octree.octree_serialize(VoxelSet(depth, codes))) == n_internal


# --- whole-cloud baseline codec ---------------------------------------------

def _colored_set(depth, n, seed):
    rng = np.random.default_rng(seed)
    codes = np.sort(rng.choice(8 ** depth, size=n, replace=False).astype(np.int64))
    colors = rng.random((n, 3)) * 255
    return VoxelSet(depth, codes, colors)


def test_baseline_round_trip_geometry_exact():
    vs = _colored_set(4, 120, 7)
    geo, col = octree.baseline_encode_pointcloud(vs, 1.0)
    back = octree.baseline_decode_pointcloud(geo, col, 4, 1.0)
    assert np.array_equal(back.codes, vs.codes)
    assert back.depth == 4


def test_baseline_color_error_bounded_by_step():
    vs = _colored_set(4, 120, 8)
    step = 0.5
    geo, col = octree.baseline_encode_pointcloud(vs, step)
    back = octree.baseline_decode_pointcloud(geo, col, 4, step)
    # per-coefficient error is at most step/2; the orthonormal inverse can
    # spread it but never beyond the l2 ball
    worst = np.abs(back.attributes - vs.attributes).max()
    assert worst <= 0.5 * step * np.sqrt(len(vs))


def test_baseline_needs_attributes():
    vs = VoxelSet(3, np.array([1, 2, 3]))
    with pytest.raises(ConsistencyError):
        octree.baseline_encode_pointcloud(vs, 1.0)


def test_baseline_rejects_mismatched_stream():
    vs = _colored_set(3, 40, 9)
    geo, col = octree.baseline_encode_pointcloud(vs, 1.0)
    with pytest.raises(CorruptStreamError):
        octree.baseline_decode_pointcloud(geo[:-1] + b"\xff", col, 3, 1.0)
