"""Geometry kernels: Morton codes, barycentric face refinement, voxelization.

Voxelization quantizes points to the 2^J grid, merges duplicates (averaging
their attribute rows in double precision), and orders the survivors by Morton
code.  The refinement order is normative: the (i, j) barycentric loop runs in
the outer dimension and faces in the inner one, so colors generated for the
refined vertices of one frame line up index-wise with every other frame's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import VoxelSet
from .errors import ConsistencyError, ParameterError, RangeError


def _check_depth(depth: int) -> int:
    depth = int(depth)
    if not (1 <= depth <= 20):
        raise ParameterError(f"depth must be in 1..20, got {depth}")
    return depth


def morton_encode(x, y, z, depth: int) -> np.ndarray:
    """Interleave coordinate bits into 3*depth-bit codes; x is most significant.

    Bit k of x lands at bit 3k+2 of the code, y at 3k+1, z at 3k.  Accepts
    scalars or arrays of integers in [0, 2^depth).
    """
    depth = _check_depth(depth)
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    limit = np.int64(1) << depth
    for name, c in (("x", x), ("y", y), ("z", z)):
        if c.size and (c.min() < 0 or c.max() >= limit):
            raise RangeError(f"{name} coordinate out of [0, 2^{depth})")
    code = np.zeros(np.broadcast(x, y, z).shape, dtype=np.int64)
    for k in range(depth):
        code |= ((x >> k) & 1) << (3 * k + 2)
        code |= ((y >> k) & 1) << (3 * k + 1)
        code |= ((z >> k) & 1) << (3 * k)
    if code.ndim == 0:
        return code[()]
    return code


def morton_decode(code, depth: int):
    """Invert :func:`morton_encode`; returns (x, y, z)."""
    depth = _check_depth(depth)
    code = np.asarray(code, dtype=np.int64)
    if code.size and (code.min() < 0 or code.max() >= np.int64(1) << (3 * depth)):
        raise RangeError(f"code out of [0, 2^{3 * depth})")
    x = np.zeros_like(code)
    y = np.zeros_like(code)
    z = np.zeros_like(code)
    for k in range(depth):
        x |= ((code >> (3 * k + 2)) & 1) << k
        y |= ((code >> (3 * k + 1)) & 1) << k
        z |= ((code >> (3 * k)) & 1) << k
    if code.ndim == 0:
        return x[()], y[()], z[()]
    return x, y, z


def _barycentric_refine(corner0, corner1, corner2, upsample: int) -> np.ndarray:
    """Stack corner blends for every (i, j) step of the refinement loop.

    corner0/1/2 are (N_f, K) rows.  Output rows: one block of N_f rows per
    (i, j), i = 0..U, j = 0..U-i, in that loop order.
    """
    u = float(upsample)
    blocks = []
    for i in range(upsample + 1):
        for j in range(upsample + 1 - i):
            a = i / u
            b = j / u
            blocks.append(corner0 + (corner1 - corner0) * a + (corner2 - corner0) * b)
    return np.concatenate(blocks, axis=0)


def refine(vertices, faces, upsample: int) -> np.ndarray:
    """Barycentric upsampling of every face; returns (N_f*(U+1)(U+2)/2, 3) points.

    Point for (face m, step i, j) is V1 + (V2-V1)*i/U + (V3-V1)*j/U; output is
    grouped by (i, j) step first, faces within a step.
    """
    if int(upsample) < 1:
        raise ParameterError(f"upsample factor must be >= 1, got {upsample}")
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    v1 = vertices[faces[:, 0]]
    v2 = vertices[faces[:, 1]]
    v3 = vertices[faces[:, 2]]
    return _barycentric_refine(v1, v2, v3, int(upsample))


def refined_faces(n_faces: int, upsample: int) -> np.ndarray:
    """Face triples over the output of :func:`refine`: U^2 triangles per input face.

    Row indices follow the refinement ordering, so entry (i, j) of face m is
    row offset(i, j)*N_f + m where offset counts the (i, j) loop steps.
    """
    upsample = int(upsample)
    if upsample < 1:
        raise ParameterError(f"upsample factor must be >= 1, got {upsample}")

    def offset(i, j):
        return i * (upsample + 1) - i * (i - 1) // 2 + j

    m = np.arange(int(n_faces), dtype=np.int64)
    triples = []
    for i in range(upsample):
        for j in range(upsample - i):
            a, b, c = offset(i, j), offset(i + 1, j), offset(i, j + 1)
            triples.append(np.stack([a * n_faces + m, b * n_faces + m, c * n_faces + m], axis=1))
            if i + j <= upsample - 2:
                d = offset(i + 1, j + 1)
                triples.append(
                    np.stack([b * n_faces + m, d * n_faces + m, c * n_faces + m], axis=1)
                )
    if not triples:
        return np.zeros((0, 3), dtype=np.int64)
    return np.concatenate(triples, axis=0)


def refine_interpolate(vertices_r, colors_r, faces_r, upsample: int):
    """Upsample a refined cloud again, interpolating positions *and* colors.

    Same loop order and barycentric weights as :func:`refine`, applied to both
    signals; returns (points, colors).
    """
    vertices_r = np.asarray(vertices_r, dtype=np.float64)
    colors_r = np.asarray(colors_r, dtype=np.float64)
    if vertices_r.shape[0] != colors_r.shape[0]:
        raise ConsistencyError("vertices_r and colors_r must correspond row-wise")
    faces_r = np.asarray(faces_r, dtype=np.int64)
    joined = np.concatenate([vertices_r, colors_r], axis=1)
    c1 = joined[faces_r[:, 0]]
    c2 = joined[faces_r[:, 1]]
    c3 = joined[faces_r[:, 2]]
    out = _barycentric_refine(c1, c2, c3, int(upsample))
    return out[:, :3], out[:, 3:]


@dataclass(frozen=True)
class VoxelizationResult:
    """Output of :func:`voxelize`.

    voxel_set: unique sorted codes with attribute means attached.
    centers: (N_v, 3) voxel centers, (integer coords + 0.5) * 2^-J.
    index_map: for every input point, the row of its voxel in voxel_set.
    """

    voxel_set: VoxelSet
    centers: np.ndarray
    index_map: np.ndarray


def voxelize(points, attributes, depth: int) -> VoxelizationResult:
    """Quantize points to the 2^J grid, merge duplicates, average attributes.

    Points must lie in [0, 1)^3.  Attribute rows (optional) are averaged per
    voxel in double precision with no rounding.  The index map reconstructs
    each input point's voxel row: codes[index_map[i]] == morton(point i).
    """
    depth = _check_depth(depth)
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ConsistencyError(f"points must be (N, 3), got shape {points.shape}")
    if points.size == 0:
        raise RangeError("cannot voxelize an empty point list")
    if points.min() < 0.0 or points.max() >= 1.0:
        raise RangeError("points must lie in [0, 1)^3")
    scale = float(1 << depth)
    ints = np.floor(points * scale).astype(np.int64)
    # guard against float roundoff pushing a coordinate just below 1.0 onto the
    # grid boundary
    np.minimum(ints, (1 << depth) - 1, out=ints)
    codes = morton_encode(ints[:, 0], ints[:, 1], ints[:, 2], depth)
    unique_codes, first_index, inverse = np.unique(codes, return_index=True, return_inverse=True)
    inverse = inverse.ravel()

    means = None
    if attributes is not None:
        attrs = np.asarray(attributes, dtype=np.float64)
        if attrs.ndim == 1:
            attrs = attrs.reshape(-1, 1)
        if attrs.shape[0] != points.shape[0]:
            raise ConsistencyError("attribute rows must match point count")
        counts = np.bincount(inverse, minlength=unique_codes.size).astype(np.float64)
        means = np.empty((unique_codes.size, attrs.shape[1]))
        for k in range(attrs.shape[1]):
            means[:, k] = np.bincount(inverse, weights=attrs[:, k], minlength=unique_codes.size)
        means /= counts[:, None]

    centers = (ints[first_index, :] + 0.5) * (2.0 ** -depth)
    voxel_set = VoxelSet(depth, unique_codes, means)
    return VoxelizationResult(voxel_set, centers, inverse)
