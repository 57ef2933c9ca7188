"""Domain types for dynamic triangle clouds, plus the TCF1/TCG1 file formats.

A *triangle cloud* is an unordered set of triangles: no manifold or
connectivity constraints, degenerate triangles allowed.  A frame holds
vertices in the unit cube, faces as vertex-index triples, and one YUV color
per *refined* vertex (the barycentric upsampling of every face by a factor
``U``, so there are exactly ``N_f * (U+1) * (U+2) / 2`` colors).

A group of frames (GOF) is a reference frame followed by predicted frames
that share the reference's face list and keep index-wise vertex/color
correspondence, which is what makes temporal prediction meaningful.

All types are immutable values and safe to share between threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConsistencyError,
    FormatError,
    ParameterError,
    RangeError,
    TrailingBytesError,
    TruncatedStreamError,
)

FRAME_MAGIC = b"TCF1"
GOF_MAGIC = b"TCG1"

# Full-range BT.601 RGB -> YUV (rows: Y, U, V).  Offsets of (0, 128, 128) are
# added after the matrix product.  Frozen so RGB ingestion is reproducible.
BT601_MATRIX = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168735891647856, -0.331264108352144, 0.5],
        [0.5, -0.418687589158345, -0.081312410841655],
    ]
)
BT601_OFFSET = np.array([0.0, 128.0, 128.0])


def expected_color_count(n_faces: int, upsample: int) -> int:
    """Number of refined vertices (= colors) for ``n_faces`` faces at factor U."""
    return n_faces * (upsample + 1) * (upsample + 2) // 2


def _as_array(values, dtype, name: str, cols: int = 3) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.size == 0:
        arr = arr.reshape(0, cols)
    if arr.ndim != 2 or arr.shape[1] != cols:
        raise ConsistencyError(f"{name} must be an (N, {cols}) array, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TriangleCloudFrame:
    """One frame: vertices (N_p,3) in [0,1), faces (N_f,3), colors (N_c,3) YUV."""

    vertices: np.ndarray
    faces: np.ndarray
    colors: np.ndarray
    upsample: int

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_array(self.vertices, np.float64, "vertices"))
        object.__setattr__(self, "faces", _as_array(self.faces, np.int64, "faces"))
        object.__setattr__(self, "colors", _as_array(self.colors, np.float64, "colors"))
        if int(self.upsample) < 1:
            raise ParameterError(f"upsample factor must be >= 1, got {self.upsample}")
        object.__setattr__(self, "upsample", int(self.upsample))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def n_colors(self) -> int:
        return self.colors.shape[0]


@dataclass(frozen=True)
class GroupOfFrames:
    """A reference frame plus predicted frames sharing faces and correspondence."""

    frames: tuple

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ConsistencyError("a group of frames must contain at least one frame")
        object.__setattr__(self, "frames", frames)

    @property
    def reference(self) -> TriangleCloudFrame:
        return self.frames[0]

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class CodecParams:
    """Codec configuration.

    depth J sets the voxel grid (edge 2^-J).  step_motion is in voxel units
    (vertex coordinates are scaled by 2^J before residual quantization);
    the color steps are in native 0..255 YUV units.
    """

    depth: int
    upsample: int
    step_motion: float = 1.0
    step_color_intra: float = 1.0
    step_color_inter: float = 1.0

    def __post_init__(self):
        if not (1 <= int(self.depth) <= 20):
            raise ParameterError(f"depth must be in 1..20, got {self.depth}")
        if int(self.upsample) < 1:
            raise ParameterError(f"upsample factor must be >= 1, got {self.upsample}")
        for name in ("step_motion", "step_color_intra", "step_color_inter"):
            value = float(getattr(self, name))
            if not (value > 0.0) or not np.isfinite(value):
                raise ParameterError(f"{name} must be a positive real, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "depth", int(self.depth))
        object.__setattr__(self, "upsample", int(self.upsample))


@dataclass(frozen=True)
class VoxelSet:
    """Occupied voxels at a given depth: sorted unique Morton codes + attributes.

    ``attributes`` is an optional (N, K) float matrix carrying whatever signal
    rides on the voxels (colors, coordinates, residuals...).
    """

    depth: int
    codes: np.ndarray
    attributes: np.ndarray | None = field(default=None)

    def __post_init__(self):
        depth = int(self.depth)
        if not (1 <= depth <= 20):
            raise ParameterError(f"depth must be in 1..20, got {self.depth}")
        codes = np.ascontiguousarray(np.asarray(self.codes, dtype=np.int64).ravel())
        if codes.size and (codes[0] < 0 or codes[-1] >= 1 << (3 * depth)):
            raise RangeError(f"codes must lie in [0, 2^{3 * depth})")
        if codes.size > 1 and not np.all(codes[1:] > codes[:-1]):
            raise ConsistencyError("voxel codes must be strictly increasing")
        codes.flags.writeable = False
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "codes", codes)
        if self.attributes is not None:
            attrs = np.ascontiguousarray(np.asarray(self.attributes, dtype=np.float64))
            if attrs.ndim == 1:
                attrs = attrs.reshape(-1, 1)
            if attrs.shape[0] != codes.size:
                raise ConsistencyError(
                    f"attribute rows ({attrs.shape[0]}) must match code count ({codes.size})"
                )
            attrs.flags.writeable = False
            object.__setattr__(self, "attributes", attrs)

    def __len__(self) -> int:
        return int(self.codes.size)

    def with_attributes(self, attributes) -> "VoxelSet":
        return VoxelSet(self.depth, self.codes, attributes)

    def centers(self) -> np.ndarray:
        """Voxel centers (N,3) in the unit cube: (integer coords + 0.5) * 2^-J."""
        from .geom import morton_decode  # local import to avoid a cycle

        x, y, z = morton_decode(self.codes, self.depth)
        return (np.stack([x, y, z], axis=1) + 0.5) * (2.0 ** -self.depth)


def validate_gof(gof: GroupOfFrames) -> GroupOfFrames:
    """Check every GOF invariant; return the GOF unchanged or raise ConsistencyError."""
    ref = gof.reference
    for t, frame in enumerate(gof.frames):
        label = f"frame {t + 1}"
        if frame.upsample != ref.upsample:
            raise ConsistencyError(f"{label}: upsample factor mismatch")
        if frame.faces.shape != ref.faces.shape or not np.array_equal(frame.faces, ref.faces):
            raise ConsistencyError(f"{label}: face mismatch with the reference frame")
        if frame.n_vertices != ref.n_vertices:
            raise ConsistencyError(f"{label}: vertex count mismatch with the reference frame")
        if frame.n_faces and (frame.faces.min() < 0 or frame.faces.max() >= frame.n_vertices):
            raise ConsistencyError(f"{label}: face index out of range")
        if frame.vertices.size and (frame.vertices.min() < 0.0 or frame.vertices.max() >= 1.0):
            raise ConsistencyError(f"{label}: vertex coordinate out of [0, 1)")
        expected = expected_color_count(frame.n_faces, frame.upsample)
        if frame.n_colors != expected:
            raise ConsistencyError(
                f"{label}: color count {frame.n_colors} != N_f(U+1)(U+2)/2 = {expected}"
            )
        if frame.colors.size and (frame.colors.min() < 0.0 or frame.colors.max() > 255.0):
            raise ConsistencyError(f"{label}: color component out of [0, 255]")
    return gof


def yuv_from_rgb(rgb) -> np.ndarray:
    """Full-range BT.601 RGB -> YUV on (..., 3) arrays of 0..255 reals."""
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb @ BT601_MATRIX.T + BT601_OFFSET


def rgb_from_yuv(yuv) -> np.ndarray:
    """Inverse of :func:`yuv_from_rgb` (no clipping)."""
    yuv = np.asarray(yuv, dtype=np.float64)
    return (yuv - BT601_OFFSET) @ np.linalg.inv(BT601_MATRIX).T


# ---------------------------------------------------------------------------
# TCF1 / TCG1 binary formats (little-endian; see docs/bitstream.md)
# ---------------------------------------------------------------------------

def _read_exact(fp, n: int) -> bytes:
    data = fp.read(n)
    if len(data) != n:
        raise TruncatedStreamError(f"expected {n} bytes, got {len(data)}")
    return data


def _colors_to_u8(colors: np.ndarray) -> np.ndarray:
    # round half away from zero, then clip; file colors are u8
    rounded = np.floor(np.abs(colors) + 0.5) * np.sign(colors)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def write_frame(fp, frame: TriangleCloudFrame, depth: int, include_faces: bool = True) -> None:
    """Write one TCF1 frame record to a binary file object."""
    fp.write(FRAME_MAGIC)
    fp.write(struct.pack("<IIII", depth, frame.upsample, frame.n_vertices, frame.n_faces))
    fp.write(frame.vertices.astype("<f4").tobytes())
    if include_faces:
        if frame.n_faces and frame.faces.max() >= 1 << 32:
            raise RangeError("face indices exceed u32")
        fp.write(frame.faces.astype("<u4").tobytes())
    fp.write(_colors_to_u8(frame.colors).tobytes())


def read_frame(fp, faces: np.ndarray | None = None) -> tuple[TriangleCloudFrame, int]:
    """Read one TCF1 frame record.

    If ``faces`` is given the record is expected to omit its face array (the
    layout used for frames 2..N inside a TCG1 container) and the given faces
    are attached instead.  Returns (frame, depth).
    """
    magic = _read_exact(fp, 4)
    if magic != FRAME_MAGIC:
        raise FormatError(f"bad frame magic {magic!r}, expected {FRAME_MAGIC!r}")
    depth, upsample, n_p, n_f = struct.unpack("<IIII", _read_exact(fp, 16))
    if not (1 <= depth <= 20) or upsample < 1:
        raise FormatError(f"implausible TCF1 header (depth={depth}, upsample={upsample})")
    vertices = np.frombuffer(_read_exact(fp, 12 * n_p), dtype="<f4").reshape(n_p, 3)
    if faces is None:
        faces = np.frombuffer(_read_exact(fp, 12 * n_f), dtype="<u4").reshape(n_f, 3)
    elif faces.shape[0] != n_f:
        raise ConsistencyError(f"face count {n_f} does not match the reference frame")
    n_c = expected_color_count(n_f, upsample)
    colors = np.frombuffer(_read_exact(fp, 3 * n_c), dtype=np.uint8).reshape(n_c, 3)
    frame = TriangleCloudFrame(
        vertices.astype(np.float64),
        np.asarray(faces, dtype=np.int64),
        colors.astype(np.float64),
        upsample,
    )
    return frame, int(depth)


def write_gof(fp, gof: GroupOfFrames, depth: int) -> None:
    """Write a TCG1 container (faces stored only in the first frame record)."""
    validate_gof(gof)
    fp.write(GOF_MAGIC)
    fp.write(struct.pack("<I", gof.n_frames))
    for t, frame in enumerate(gof.frames):
        write_frame(fp, frame, depth, include_faces=(t == 0))


def read_gof(fp) -> tuple[GroupOfFrames, int]:
    """Read one TCG1 container; returns (validated GOF, depth)."""
    magic = _read_exact(fp, 4)
    if magic != GOF_MAGIC:
        raise FormatError(f"bad container magic {magic!r}, expected {GOF_MAGIC!r}")
    (n_frames,) = struct.unpack("<I", _read_exact(fp, 4))
    if n_frames < 1:
        raise FormatError("TCG1 container with zero frames")
    first, depth = read_frame(fp)
    frames = [first]
    for _ in range(n_frames - 1):
        frame, frame_depth = read_frame(fp, faces=first.faces)
        if frame_depth != depth:
            raise ConsistencyError("frames within a TCG1 container disagree on depth")
        frames.append(frame)
    return validate_gof(GroupOfFrames(tuple(frames))), depth


def write_gof_file(path, gofs, depth: int) -> None:
    """Write one or more GOFs to ``path``, concatenated TCG1 containers."""
    if isinstance(gofs, GroupOfFrames):
        gofs = [gofs]
    with open(path, "wb") as fp:
        for gof in gofs:
            write_gof(fp, gof, depth)


def read_gof_file(path) -> tuple[list[GroupOfFrames], int]:
    """Read every TCG1 container in ``path``; all must agree on depth."""
    gofs = []
    depth = None
    with open(path, "rb") as fp:
        while True:
            probe = fp.read(1)
            if not probe:
                break
            fp.seek(-1, 1)
            gof, gof_depth = read_gof(fp)
            if depth is not None and gof_depth != depth:
                raise ConsistencyError("containers in one file disagree on depth")
            depth = gof_depth
            gofs.append(gof)
    if not gofs:
        raise TruncatedStreamError("no TCG1 container found in file")
    return gofs, depth
