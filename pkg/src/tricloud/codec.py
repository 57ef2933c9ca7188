"""GOF codec: intra coding of a reference frame, closed-loop predictive coding
of the rest, and the TCB1 bitstream container.

Reference frame: vertices snap to voxel centers (midrise grid quantization)
and travel as deflated octree occupancy bytes plus a duplicate-index run map;
faces travel deflated verbatim; colors are voxelized over the refined quantized
vertices and transform-coded.  Predicted frames then ride entirely on the
reference geometry: per-voxel means of the current frame are differenced
against the previous reconstruction, and the residual is transform-coded over
the *reference* voxel sets, whose pairing plans both sides already have.
Geometry residuals are scaled to voxel units (x 2^J) before quantization so
step_motion is expressed in voxels; colors stay in native 0..255 units.

Everything the decoder derives (index maps, transform plans, weight order) is
recomputed from decoded geometry, never transmitted; the encoder reconstructs
through the exact same code path, which is what makes encoder and decoder
buffers bit-identical.

The duplicate-index run coder expects the vertex list in spatial scan order
(nondecreasing voxel index), so the encoder reorders the GOF's vertices once
by the Morton code of their quantized reference positions and re-indexes the
faces to match.  Decoded frames come back in that canonical order; refined
points and colors are unaffected because they are generated per face.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import (
    CodecParams,
    GroupOfFrames,
    TriangleCloudFrame,
    VoxelSet,
    expected_color_count,
    validate_gof,
)
from .entropy import (
    deflate,
    index_runs_decode,
    index_runs_encode,
    inflate,
    rlgr_decode,
    rlgr_encode,
)
from .errors import (
    ConsistencyError,
    CorruptStreamError,
    FormatError,
    ParameterError,
    RangeError,
    TruncatedStreamError,
)
from .geom import refine, voxelize
from .octree import octree_parse, octree_serialize
from .transform import (
    MIDRISE,
    dequantize_indices,
    quantize,
    quantize_indices,
    raht_forward,
    raht_inverse,
    raht_plan,
    serialize_order,
    transform_weights,
)

BITSTREAM_MAGIC = b"TCB1"
BITSTREAM_VERSION = 1

_INTRA = 1
_PREDICTED = 2


@dataclass(frozen=True)
class IntraPayload:
    """Bitstream sections of one intra-coded frame."""

    n_voxels: int
    n_refined_voxels: int
    octree_bytes: bytes
    index_run_bytes: bytes
    face_bytes: bytes
    color_payloads: tuple

    @property
    def geometry_bits(self) -> int:
        return 8 * (len(self.octree_bytes) + len(self.index_run_bytes) + len(self.face_bytes))

    @property
    def color_bits(self) -> int:
        return 8 * sum(len(p) for p in self.color_payloads)


@dataclass(frozen=True)
class PredictedPayload:
    """Bitstream sections of one predicted frame (residual coefficients only)."""

    motion_payloads: tuple
    color_payloads: tuple

    @property
    def geometry_bits(self) -> int:
        return 8 * sum(len(p) for p in self.motion_payloads)

    @property
    def color_bits(self) -> int:
        return 8 * sum(len(p) for p in self.color_payloads)


@dataclass(frozen=True)
class EncodedGof:
    """One GOF's worth of bitstream, ready for container framing."""

    params: CodecParams
    intra_only: bool
    n_vertices: int
    n_faces: int
    frames: tuple

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def payload_bits(self) -> dict:
        """Section accounting: per-frame and total geometry/color bits."""
        per_frame = [
            {"geometry": f.geometry_bits, "color": f.color_bits} for f in self.frames
        ]
        return {
            "frames": per_frame,
            "geometry": sum(f["geometry"] for f in per_frame),
            "color": sum(f["color"] for f in per_frame),
            "total": sum(f["geometry"] + f["color"] for f in per_frame),
        }

    def refined_voxel_counts(self) -> list:
        """Occupied refined-voxel count per frame (predicted frames share the
        reference frame's voxelization)."""
        counts = []
        current = 0
        for payload in self.frames:
            if isinstance(payload, IntraPayload):
                current = payload.n_refined_voxels
            counts.append(current)
        return counts


@dataclass(frozen=True)
class ReferenceState:
    """Geometry-derived context shared by every frame of a GOF (both sides).

    vertex_permutation maps canonical (coded) vertex rows to the caller's
    original rows; on the decoder side it is the identity.  faces and
    quantized_vertices are stored in canonical order.
    """

    params: CodecParams
    vertex_permutation: np.ndarray
    faces: np.ndarray
    quantized_vertices: np.ndarray
    vertex_voxels: VoxelSet
    vertex_centers: np.ndarray
    vertex_index_map: np.ndarray
    vertex_counts: np.ndarray
    vertex_plan: object
    vertex_order: np.ndarray
    refined_voxels: VoxelSet
    refined_index_map: np.ndarray
    refined_counts: np.ndarray
    refined_plan: object
    refined_order: np.ndarray


@dataclass(frozen=True)
class FrameBuffer:
    """Previous reconstruction: voxel vertex positions and refined-voxel colors."""

    frame_index: int
    vertex_positions: np.ndarray
    refined_colors: np.ndarray


def _group_means(values: np.ndarray, index_map: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Per-group arithmetic means of rows, groups given by index_map."""
    n_groups = counts.size
    out = np.empty((n_groups, values.shape[1]))
    for k in range(values.shape[1]):
        out[:, k] = np.bincount(index_map, weights=values[:, k], minlength=n_groups)
    out /= counts[:, None]
    return out


def _code_planes(symbols: np.ndarray, order: np.ndarray) -> tuple:
    return tuple(rlgr_encode(symbols[order, k]) for k in range(symbols.shape[1]))


def _decode_planes(payloads, order: np.ndarray, count: int) -> np.ndarray:
    symbols = np.empty((count, len(payloads)), dtype=np.int64)
    for k, payload in enumerate(payloads):
        symbols[order, k] = rlgr_decode(payload, count)
    return symbols


def _build_reference_state(params: CodecParams, vertex_permutation: np.ndarray,
                           faces: np.ndarray,
                           quantized_vertices: np.ndarray) -> ReferenceState:
    """Everything derivable from the quantized reference vertices + faces.

    quantized_vertices must already be in canonical (spatial scan) order.
    """
    res_v = voxelize(quantized_vertices, None, params.depth)
    vertex_plan = raht_plan(res_v.voxel_set)
    refined = refine(quantized_vertices, faces, params.upsample)
    res_r = voxelize(refined, None, params.depth)
    refined_plan = raht_plan(res_r.voxel_set)
    return ReferenceState(
        params=params,
        vertex_permutation=vertex_permutation,
        faces=faces,
        quantized_vertices=quantized_vertices,
        vertex_voxels=res_v.voxel_set,
        vertex_centers=res_v.centers,
        vertex_index_map=res_v.index_map,
        vertex_counts=np.bincount(res_v.index_map, minlength=len(res_v.voxel_set)),
        vertex_plan=vertex_plan,
        vertex_order=serialize_order(transform_weights(vertex_plan)),
        refined_voxels=res_r.voxel_set,
        refined_index_map=res_r.index_map,
        refined_counts=np.bincount(res_r.index_map, minlength=len(res_r.voxel_set)),
        refined_plan=refined_plan,
        refined_order=serialize_order(transform_weights(refined_plan)),
    )


def encode_reference(frame: TriangleCloudFrame, params: CodecParams):
    """Intra-code one frame; returns (IntraPayload, ReferenceState, FrameBuffer)."""
    if frame.upsample != params.upsample:
        raise ParameterError(
            f"frame upsample {frame.upsample} != codec upsample {params.upsample}"
        )
    step = 2.0 ** -params.depth
    v_hat = quantize(frame.vertices, step, MIDRISE)

    # canonicalize: vertices in spatial scan order so the duplicate-index map
    # grows in unit/zero steps; faces re-indexed to the new rows
    perm = np.argsort(voxelize(v_hat, None, params.depth).index_map, kind="stable")
    inverse_perm = np.empty_like(perm)
    inverse_perm[perm] = np.arange(perm.size)
    faces = inverse_perm[frame.faces]
    state = _build_reference_state(params, perm, faces, v_hat[perm])

    # colors ride on the refined quantized vertices, averaged per voxel
    colors_v = _group_means(frame.colors, state.refined_index_map, state.refined_counts)
    block = raht_forward(state.refined_plan, colors_v)
    symbols = quantize_indices(block.coefficients, params.step_color_intra)
    recon_colors = raht_inverse(
        state.refined_plan, dequantize_indices(symbols, params.step_color_intra)
    )

    if frame.n_vertices >= 1 << 32:
        raise RangeError("face indices exceed u32")
    payload = IntraPayload(
        n_voxels=len(state.vertex_voxels),
        n_refined_voxels=len(state.refined_voxels),
        octree_bytes=deflate(octree_serialize(state.vertex_voxels)),
        index_run_bytes=index_runs_encode(state.vertex_index_map),
        face_bytes=deflate(faces.astype("<u4").tobytes()),
        color_payloads=_code_planes(symbols, state.refined_order),
    )
    buffer = FrameBuffer(1, state.vertex_centers, recon_colors)
    return payload, state, buffer


def decode_reference(payload: IntraPayload, params: CodecParams,
                     n_vertices: int, n_faces: int):
    """Invert :func:`encode_reference`; returns (frame, ReferenceState, FrameBuffer)."""
    voxels = octree_parse(inflate(payload.octree_bytes), params.depth)
    if len(voxels) != payload.n_voxels:
        raise CorruptStreamError(
            f"octree decodes to {len(voxels)} voxels, header says {payload.n_voxels}"
        )
    index_map = index_runs_decode(payload.index_run_bytes)
    if index_map.size != n_vertices:
        raise CorruptStreamError("duplicate-index map length does not match vertex count")
    if index_map.size and index_map[-1] != len(voxels) - 1:
        raise CorruptStreamError("duplicate-index map does not cover the voxel list")

    face_raw = inflate(payload.face_bytes)
    if len(face_raw) != 12 * n_faces:
        raise CorruptStreamError("face section length does not match face count")
    faces = np.frombuffer(face_raw, dtype="<u4").reshape(n_faces, 3).astype(np.int64)

    v_hat = voxels.centers()[index_map]
    state = _build_reference_state(params, np.arange(n_vertices), faces, v_hat)
    if len(state.refined_voxels) != payload.n_refined_voxels:
        raise CorruptStreamError("refined voxel count disagrees with the header")
    if not np.array_equal(state.vertex_voxels.codes, voxels.codes):
        raise CorruptStreamError("re-voxelized vertices disagree with the octree section")

    symbols = _decode_planes(payload.color_payloads, state.refined_order,
                             len(state.refined_voxels))
    recon_colors = raht_inverse(
        state.refined_plan, dequantize_indices(symbols, params.step_color_intra)
    )
    frame = TriangleCloudFrame(
        v_hat, faces, recon_colors[state.refined_index_map], params.upsample
    )
    buffer = FrameBuffer(1, state.vertex_centers, recon_colors)
    return frame, state, buffer


def _assert_reference_grouping(frame: TriangleCloudFrame, state: ReferenceState) -> bool:
    """Debug check: re-voxelizing the reference reproduces the stored groupings."""
    params = state.params
    res_v = voxelize(state.quantized_vertices,
                     frame.vertices[state.vertex_permutation], params.depth)
    assert np.array_equal(res_v.voxel_set.codes, state.vertex_voxels.codes)
    assert np.array_equal(res_v.index_map, state.vertex_index_map)
    refined = refine(state.quantized_vertices, state.faces, params.upsample)
    res_r = voxelize(refined, None, params.depth)
    assert np.array_equal(res_r.voxel_set.codes, state.refined_voxels.codes)
    assert np.array_equal(res_r.index_map, state.refined_index_map)
    return True


def encode_predicted(frame: TriangleCloudFrame, state: ReferenceState,
                     buffer: FrameBuffer):
    """Predict frame t from the buffer and code the residuals.

    Returns (PredictedPayload, FrameBuffer for frame t).
    """
    params = state.params
    if frame.n_vertices != state.vertex_index_map.size:
        raise ConsistencyError("predicted frame vertex count differs from the reference")
    if frame.n_colors != state.refined_index_map.size:
        raise ConsistencyError("predicted frame color count differs from the reference")
    if __debug__ and buffer.frame_index == 1:
        _assert_reference_grouping(frame, state)

    scale = float(1 << params.depth)
    positions = _group_means(frame.vertices[state.vertex_permutation],
                             state.vertex_index_map, state.vertex_counts)
    motion_residual = (positions - buffer.vertex_positions) * scale
    motion_block = raht_forward(state.vertex_plan, motion_residual)
    motion_symbols = quantize_indices(motion_block.coefficients, params.step_motion)
    recon_motion = raht_inverse(
        state.vertex_plan, dequantize_indices(motion_symbols, params.step_motion)
    ) / scale
    new_positions = buffer.vertex_positions + recon_motion

    colors = _group_means(frame.colors, state.refined_index_map, state.refined_counts)
    color_residual = colors - buffer.refined_colors
    color_block = raht_forward(state.refined_plan, color_residual)
    color_symbols = quantize_indices(color_block.coefficients, params.step_color_inter)
    recon_color = raht_inverse(
        state.refined_plan, dequantize_indices(color_symbols, params.step_color_inter)
    )
    new_colors = buffer.refined_colors + recon_color

    payload = PredictedPayload(
        motion_payloads=_code_planes(motion_symbols, state.vertex_order),
        color_payloads=_code_planes(color_symbols, state.refined_order),
    )
    return payload, FrameBuffer(buffer.frame_index + 1, new_positions, new_colors)


def decode_predicted(payload: PredictedPayload, state: ReferenceState,
                     buffer: FrameBuffer):
    """Invert :func:`encode_predicted`; returns (frame, FrameBuffer for frame t)."""
    params = state.params
    scale = float(1 << params.depth)
    motion_symbols = _decode_planes(payload.motion_payloads, state.vertex_order,
                                    len(state.vertex_voxels))
    recon_motion = raht_inverse(
        state.vertex_plan, dequantize_indices(motion_symbols, params.step_motion)
    ) / scale
    new_positions = buffer.vertex_positions + recon_motion

    color_symbols = _decode_planes(payload.color_payloads, state.refined_order,
                                   len(state.refined_voxels))
    recon_color = raht_inverse(
        state.refined_plan, dequantize_indices(color_symbols, params.step_color_inter)
    )
    new_colors = buffer.refined_colors + recon_color

    frame = TriangleCloudFrame(
        new_positions[state.vertex_index_map],
        state.faces,
        new_colors[state.refined_index_map],
        params.upsample,
    )
    return frame, FrameBuffer(buffer.frame_index + 1, new_positions, new_colors)


def encode_gof(gof: GroupOfFrames, params: CodecParams, intra_only: bool = False) -> EncodedGof:
    """Encode one validated GOF (hybrid by default, all-intra on request)."""
    validate_gof(gof)
    frames = []
    if intra_only:
        for frame in gof:
            payload, _, _ = encode_reference(frame, params)
            frames.append(payload)
    else:
        payload, state, buffer = encode_reference(gof.reference, params)
        frames.append(payload)
        for frame in gof.frames[1:]:
            payload, buffer = encode_predicted(frame, state, buffer)
            frames.append(payload)
    return EncodedGof(
        params=params,
        intra_only=bool(intra_only),
        n_vertices=gof.reference.n_vertices,
        n_faces=gof.reference.n_faces,
        frames=tuple(frames),
    )


def decode_gof(encoded: EncodedGof) -> GroupOfFrames:
    """Decode one GOF record back to triangle-cloud frames."""
    params = encoded.params
    frames = []
    state = None
    buffer = None
    for t, payload in enumerate(encoded.frames):
        if isinstance(payload, IntraPayload):
            frame, state, buffer = decode_reference(
                payload, params, encoded.n_vertices, encoded.n_faces
            )
        else:
            if state is None:
                raise CorruptStreamError("predicted frame before any reference frame")
            frame, buffer = decode_predicted(payload, state, buffer)
        frames.append(frame)
    return GroupOfFrames(tuple(frames))


def encode_sequence(gofs, params: CodecParams, intra_only: bool = False) -> list:
    """Encode GOFs independently (order preserved)."""
    return [encode_gof(gof, params, intra_only) for gof in gofs]


def decode_sequence(encoded_gofs) -> list:
    return [decode_gof(encoded) for encoded in encoded_gofs]


# ---------------------------------------------------------------------------
# TCB1 container framing (layout in docs/bitstream.md)
# ---------------------------------------------------------------------------

def _pack_section(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


class _RecordReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedStreamError("GOF record ended early")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def section(self) -> bytes:
        (length,) = struct.unpack("<I", self.take(4))
        return self.take(length)

    def done(self) -> bool:
        return self.pos == len(self.data)


def serialize_gof_record(encoded: EncodedGof) -> bytes:
    """The body of one length-prefixed GOF record."""
    p = encoded.params
    parts = [
        struct.pack(
            "<IIIB3dII",
            p.depth,
            p.upsample,
            encoded.n_frames,
            1 if encoded.intra_only else 0,
            p.step_motion,
            p.step_color_intra,
            p.step_color_inter,
            encoded.n_vertices,
            encoded.n_faces,
        )
    ]
    for payload in encoded.frames:
        if isinstance(payload, IntraPayload):
            parts.append(struct.pack("<BII", _INTRA, payload.n_voxels,
                                     payload.n_refined_voxels))
            parts.append(_pack_section(payload.octree_bytes))
            parts.append(_pack_section(payload.index_run_bytes))
            parts.append(_pack_section(payload.face_bytes))
            for plane in payload.color_payloads:
                parts.append(_pack_section(plane))
        else:
            parts.append(struct.pack("<B", _PREDICTED))
            for plane in payload.motion_payloads:
                parts.append(_pack_section(plane))
            for plane in payload.color_payloads:
                parts.append(_pack_section(plane))
    return b"".join(parts)


def parse_gof_record(data: bytes) -> EncodedGof:
    reader = _RecordReader(data)
    depth, upsample, n_frames, intra_flag, s_m, s_ci, s_cp, n_vertices, n_faces = (
        struct.unpack("<IIIB3dII", reader.take(45))
    )
    try:
        params = CodecParams(depth, upsample, s_m, s_ci, s_cp)
    except ParameterError as exc:
        raise CorruptStreamError(f"bad GOF header: {exc}") from exc
    frames = []
    for _ in range(n_frames):
        (kind,) = struct.unpack("<B", reader.take(1))
        if kind == _INTRA:
            n_voxels, n_refined = struct.unpack("<II", reader.take(8))
            octree_bytes = reader.section()
            runs = reader.section()
            faces = reader.section()
            planes = tuple(reader.section() for _ in range(3))
            frames.append(
                IntraPayload(n_voxels, n_refined, octree_bytes, runs, faces, planes)
            )
        elif kind == _PREDICTED:
            motion = tuple(reader.section() for _ in range(3))
            planes = tuple(reader.section() for _ in range(3))
            frames.append(PredictedPayload(motion, planes))
        else:
            raise CorruptStreamError(f"unknown frame record type {kind}")
    if not reader.done():
        raise CorruptStreamError("trailing bytes inside a GOF record")
    if not frames or not isinstance(frames[0], IntraPayload):
        raise CorruptStreamError("GOF record does not start with an intra frame")
    intra_only = bool(intra_flag)
    if intra_only and not all(isinstance(f, IntraPayload) for f in frames):
        raise CorruptStreamError("intra-only GOF contains predicted frames")
    return EncodedGof(params, intra_only, n_vertices, n_faces, tuple(frames))


def write_bitstream(fp, encoded_gofs) -> None:
    """Write a TCB1 container."""
    encoded_gofs = list(encoded_gofs)
    fp.write(BITSTREAM_MAGIC)
    fp.write(struct.pack("<HI", BITSTREAM_VERSION, len(encoded_gofs)))
    for encoded in encoded_gofs:
        record = serialize_gof_record(encoded)
        fp.write(struct.pack("<I", len(record)))
        fp.write(record)


def read_bitstream(fp) -> list:
    """Read a TCB1 container back into EncodedGof records."""
    magic = fp.read(4)
    if len(magic) < 4:
        raise TruncatedStreamError("missing container magic")
    if magic != BITSTREAM_MAGIC:
        raise FormatError(f"bad container magic {magic!r}, expected {BITSTREAM_MAGIC!r}")
    header = fp.read(6)
    if len(header) < 6:
        raise TruncatedStreamError("truncated container header")
    version, n_gofs = struct.unpack("<HI", header)
    if version != BITSTREAM_VERSION:
        raise FormatError(f"unsupported container version {version}")
    records = []
    for _ in range(n_gofs):
        length_raw = fp.read(4)
        if len(length_raw) < 4:
            raise TruncatedStreamError("missing GOF record length")
        (length,) = struct.unpack("<I", length_raw)
        body = fp.read(length)
        if len(body) < length:
            raise TruncatedStreamError("GOF record shorter than its declared length")
        records.append(parse_gof_record(body))
    trailer = fp.read(1)
    if trailer:
        raise CorruptStreamError("trailing bytes after the last GOF record")
    return records


def write_bitstream_file(path, encoded_gofs) -> None:
    with open(path, "wb") as fp:
        write_bitstream(fp, encoded_gofs)


def read_bitstream_file(path) -> list:
    with open(path, "rb") as fp:
        return read_bitstream(fp)
