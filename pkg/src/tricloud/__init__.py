"""Compression of dynamic triangle clouds.

A triangle cloud is a point cloud whose colored points lie on the faces of a
triangle mesh; a dynamic sequence groups frames that share connectivity and
index-wise correspondence.  This package voxelizes such sequences, codes
reference-frame geometry with octrees plus duplicate-index runs, transform
codes colors and per-frame motion/color residuals with a region-adaptive
hierarchical transform, and entropy codes the quantized coefficients with an
adaptive run-length Golomb-Rice coder.  Evaluation metrics, a synthetic data
generator, and a command-line front end round out the toolkit.
"""

from .codec import (
    EncodedGof,
    FrameBuffer,
    IntraPayload,
    PredictedPayload,
    ReferenceState,
    decode_gof,
    decode_predicted,
    decode_reference,
    decode_sequence,
    encode_gof,
    encode_predicted,
    encode_reference,
    encode_sequence,
    read_bitstream,
    read_bitstream_file,
    write_bitstream,
    write_bitstream_file,
)
from .core import (
    CodecParams,
    GroupOfFrames,
    TriangleCloudFrame,
    VoxelSet,
    expected_color_count,
    read_frame,
    read_gof,
    read_gof_file,
    rgb_from_yuv,
    validate_gof,
    write_frame,
    write_gof,
    write_gof_file,
    yuv_from_rgb,
)
from .datagen import gen_sequence
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
    EmptySetError,
    FormatError,
    MalformedIndexMapError,
    ParameterError,
    RangeError,
    ShapeMismatchError,
    StreamError,
    TrailingBytesError,
    TricloudError,
    TruncatedStreamError,
)
from .geom import (
    VoxelizationResult,
    morton_decode,
    morton_encode,
    refine,
    refine_interpolate,
    refined_faces,
    voxelize,
)
from .metrics import (
    matching_distortion,
    matching_distortion_sequence,
    project_to_faces,
    projection_psnr,
    psnr_transform,
    psnr_triangle_cloud,
    rates,
    refined_interpolated_cloud,
)
from .octree import (
    baseline_decode_pointcloud,
    baseline_encode_pointcloud,
    octree_parse,
    octree_serialize,
)
from .transform import (
    MIDRISE,
    MIDSTEP,
    CoefficientBlock,
    RahtPlan,
    dequantize_indices,
    quantize,
    quantize_indices,
    raht_forward,
    raht_inverse,
    raht_plan,
    serialize_order,
    transform_weights,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
