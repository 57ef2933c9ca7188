"""Octree occupancy coding of voxel sets, plus the standalone point-cloud baseline.

A voxel set at depth J is described by one byte per internal octree node,
emitted in depth-first (preorder) order with children visited in increasing
3-bit Morton child index.  Bit (7-k) of a byte is set iff child k is occupied,
so a parse in stream order emits leaf codes already sorted.
"""

from __future__ import annotations

import struct

import numpy as np

from .core import VoxelSet
from .entropy import deflate, inflate, rlgr_decode, rlgr_encode
from .errors import (
    ConsistencyError,
    CorruptStreamError,
    EmptySetError,
    ParameterError,
    TrailingBytesError,
    TruncatedStreamError,
)
from .transform import (
    dequantize_indices,
    quantize_indices,
    raht_forward,
    raht_inverse,
    raht_plan,
    serialize_order,
    transform_weights,
)

# child sub-lists per occupancy byte, in increasing child index
_CHILD_LISTS = tuple(
    tuple(k for k in range(8) if byte & (0x80 >> k)) for byte in range(256)
)


def octree_serialize(voxel_set: VoxelSet) -> bytes:
    """Occupancy bytes for the voxel set, one per internal node, preorder."""
    codes = voxel_set.codes
    depth = voxel_set.depth
    if codes.size == 0:
        raise EmptySetError("cannot serialize an empty voxel set")

    starts = []
    depths = []
    occupancy = []
    for d in range(depth):
        parents = np.unique(codes >> np.int64(3 * (depth - d)))
        children = np.unique(codes >> np.int64(3 * (depth - d - 1)))
        rows = np.searchsorted(parents, children >> 3)
        bits = np.int64(0x80) >> (children & 7)
        node_bytes = np.zeros(parents.size, dtype=np.int64)
        np.bitwise_or.at(node_bytes, rows, bits)
        starts.append(parents << np.int64(3 * (depth - d)))
        depths.append(np.full(parents.size, d, dtype=np.int64))
        occupancy.append(node_bytes)

    starts = np.concatenate(starts)
    depths = np.concatenate(depths)
    occupancy = np.concatenate(occupancy)
    # preorder = ascending code range start, parents before their first child
    order = np.lexsort((depths, starts))
    return occupancy[order].astype(np.uint8).tobytes()


def octree_parse(data: bytes, depth: int) -> VoxelSet:
    """Rebuild the voxel set from occupancy bytes; exact inverse of serialize."""
    depth = int(depth)
    if not (1 <= depth <= 20):
        raise ParameterError(f"depth must be in 1..20, got {depth}")
    if len(data) == 0:
        raise TruncatedStreamError("empty occupancy stream")
    pos = 0
    out = []
    stack = [(0, 0)]  # (prefix, node depth)
    while stack:
        prefix, d = stack.pop()
        if pos >= len(data):
            raise TruncatedStreamError("occupancy stream ended mid-traversal")
        kids = _CHILD_LISTS[data[pos]]
        pos += 1
        if not kids:
            raise CorruptStreamError("occupancy byte with no children")
        base = prefix << 3
        if d == depth - 1:
            out.extend(base + k for k in kids)
        else:
            for k in reversed(kids):
                stack.append((base + k, d + 1))
    if pos != len(data):
        raise TrailingBytesError(f"{len(data) - pos} bytes after a complete traversal")
    return VoxelSet(depth, np.array(out, dtype=np.int64))


def baseline_encode_pointcloud(voxel_set: VoxelSet, step_color: float):
    """Standalone coding of one voxelized colored cloud (the comparison baseline).

    Geometry is the deflated occupancy bytes; colors go through the same
    transform/quantize/entropy path the intra codec uses.  Returns
    (geometry_bytes, color_bytes).
    """
    if voxel_set.attributes is None:
        raise ConsistencyError("baseline coding needs per-voxel attributes")
    geometry = deflate(octree_serialize(voxel_set))

    plan = raht_plan(voxel_set)
    block = raht_forward(plan, voxel_set.attributes)
    symbols = quantize_indices(block.coefficients, step_color)
    order = serialize_order(block)
    parts = []
    for k in range(symbols.shape[1]):
        payload = rlgr_encode(symbols[order, k])
        parts.append(struct.pack("<I", len(payload)))
        parts.append(payload)
    return geometry, b"".join(parts)


def baseline_decode_pointcloud(geometry: bytes, color_bytes: bytes, depth: int,
                               step_color: float) -> VoxelSet:
    """Invert :func:`baseline_encode_pointcloud` (colors up to quantization)."""
    voxel_set = octree_parse(inflate(geometry), depth)
    plan = raht_plan(voxel_set)
    order = serialize_order(transform_weights(plan))

    columns = []
    pos = 0
    while pos < len(color_bytes):
        if pos + 4 > len(color_bytes):
            raise TruncatedStreamError("color payload length field cut short")
        (length,) = struct.unpack_from("<I", color_bytes, pos)
        pos += 4
        if pos + length > len(color_bytes):
            raise TruncatedStreamError("color payload cut short")
        columns.append(rlgr_decode(color_bytes[pos:pos + length], len(voxel_set)))
        pos += length
    if not columns:
        raise TruncatedStreamError("no color payloads present")

    symbols = np.empty((len(voxel_set), len(columns)), dtype=np.int64)
    for k, ordered in enumerate(columns):
        symbols[order, k] = ordered
    attrs = raht_inverse(plan, dequantize_indices(symbols, step_color))
    return voxel_set.with_attributes(attrs)
