"""Command-line front end: generate, encode, decode, eval.

Exit codes: 0 success, 1 data error (corrupt or inconsistent input),
2 usage error (bad flags, unrecognized file format or version).
Set TRICLOUD_LOG=DEBUG|INFO|WARNING|ERROR to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .codec import (
    decode_gof,
    encode_gof,
    read_bitstream_file,
    write_bitstream_file,
)
from .core import (
    CodecParams,
    GroupOfFrames,
    read_gof_file,
    validate_gof,
    write_gof_file,
)
from .datagen import SHAPES, gen_sequence
from .errors import FormatError, TricloudError
from .metrics import (
    matching_distortion_sequence,
    projection_psnr,
    psnr_triangle_cloud,
    rates,
    refined_interpolated_cloud,
)

log = logging.getLogger("tricloud")

_EVAL_METRICS = ("triangle", "projection", "matching")

_CSV_COLUMNS = [
    "sequence", "n_frames", "depth", "uinterp",
    "step_motion", "step_color_intra", "step_color_inter",
    "psnr_g_triangle", "psnr_y_triangle", "psnr_u_triangle", "psnr_v_triangle",
    "psnr_y_projection", "psnr_u_projection", "psnr_v_projection",
    "d_g2_matching", "d_y2_matching", "psnr_g_matching", "psnr_y_matching",
    "rate_mbps_geometry", "rate_bpv_geometry",
    "rate_mbps_color", "rate_bpv_color",
    "rate_mbps_total", "rate_bpv_total",
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tricloud",
        description="Dynamic triangle-cloud codec and evaluation tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic TCG1 sequence")
    p.add_argument("--shape", required=True, choices=SHAPES)
    p.add_argument("--frames", required=True, type=int)
    p.add_argument("--faces", type=int, default=2000)
    p.add_argument("--upsample", type=int, default=10)
    p.add_argument("--amplitude", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gof-size", type=int, default=None,
                   help="frames per group (default: one group)")
    p.add_argument("--depth", type=int, default=10,
                   help="voxel grid depth recorded in the file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("encode", help="encode a TCG1 sequence to a TCB1 bitstream")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--depth", type=int, default=None,
                   help="voxel grid depth (default: from the input file)")
    p.add_argument("--upsample", type=int, default=None,
                   help="refinement factor (default: from the input frames)")
    p.add_argument("--step-motion", type=float, default=1.0,
                   help="motion residual stepsize, voxel units")
    p.add_argument("--step-color-intra", type=float, default=1.0)
    p.add_argument("--step-color-inter", type=float, default=1.0)
    p.add_argument("--intra-only", action="store_true",
                   help="code every frame as a reference frame")
    p.add_argument("--jobs", type=int, default=1, help="parallel GOF workers")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a TCB1 bitstream to a TCG1 sequence")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel GOF workers")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="compare two TCG1 sequences")
    p.add_argument("--original", required=True)
    p.add_argument("--reconstruction", required=True)
    p.add_argument("--metrics", default="triangle,projection,matching",
                   help="comma list from: " + ",".join(_EVAL_METRICS))
    p.add_argument("--uinterp", type=int, default=1,
                   help="extra interpolation factor for the render clouds")
    p.add_argument("--depth", type=int, default=None,
                   help="voxel depth for projection/matching (default: from file)")
    p.add_argument("--bitstream", default=None,
                   help="TCB1 file to report rates and stepsizes from")
    p.add_argument("--csv", default=None, help="write the report row to this CSV")
    p.add_argument("--json", dest="json_path", default=None,
                   help="write the report to this JSON file")
    p.add_argument("--svg", default=None,
                   help="write per-frame triangle-cloud PSNR traces to this SVG")
    p.set_defaults(func=cmd_eval)
    return parser


def cmd_generate(args) -> int:
    gofs = gen_sequence(args.shape, args.frames, n_faces=args.faces,
                        upsample=args.upsample, amplitude=args.amplitude,
                        seed=args.seed, gof_size=args.gof_size)
    for gof in gofs:
        validate_gof(gof)
    write_gof_file(args.output, gofs, args.depth)
    ref = gofs[0].reference
    n_frames = sum(g.n_frames for g in gofs)
    print(f"wrote {args.output}: {n_frames} frames in {len(gofs)} GOF(s), "
          f"{ref.n_faces} faces, {ref.n_vertices} vertices, "
          f"{ref.n_colors} colors/frame, {os.path.getsize(args.output)} bytes")
    return 0


def _encode_job(job):
    gof, params, intra_only = job
    return encode_gof(gof, params, intra_only)


def _run_jobs(worker, jobs, n_workers: int):
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(worker, jobs))
    return [worker(job) for job in jobs]


def cmd_encode(args) -> int:
    gofs, file_depth = read_gof_file(args.input)
    depth = args.depth if args.depth is not None else file_depth
    upsample = args.upsample if args.upsample is not None else gofs[0].reference.upsample
    params = CodecParams(depth, upsample, args.step_motion,
                         args.step_color_intra, args.step_color_inter)
    for gof in gofs:
        validate_gof(gof)
    log.info("encoding %d GOF(s) at depth %d", len(gofs), depth)
    encoded = _run_jobs(_encode_job, [(g, params, args.intra_only) for g in gofs],
                        args.jobs)
    write_bitstream_file(args.output, encoded)

    print("frame  type  geometry_kbit  color_kbit")
    frame_no = 0
    geom_bits = color_bits = 0
    voxel_counts = []
    for enc in encoded:
        counts = enc.refined_voxel_counts()
        for k, payload in enumerate(enc.frames):
            frame_no += 1
            kind = "I" if hasattr(payload, "octree_bytes") else "P"
            print(f"{frame_no:5d}  {kind:>4}  {payload.geometry_bits / 1000:13.3f}"
                  f"  {payload.color_bits / 1000:10.3f}")
            geom_bits += payload.geometry_bits
            color_bits += payload.color_bits
        voxel_counts.extend(counts)
    g_mbps, g_bpv = rates(geom_bits, frame_no, voxel_counts)
    c_mbps, c_bpv = rates(color_bits, frame_no, voxel_counts)
    t_mbps, t_bpv = rates(geom_bits + color_bits, frame_no, voxel_counts)
    size = os.path.getsize(args.output)
    print(f"geometry: {geom_bits} bits ({g_mbps:.4f} Mbps, {g_bpv:.4f} bpv)")
    print(f"color:    {color_bits} bits ({c_mbps:.4f} Mbps, {c_bpv:.4f} bpv)")
    print(f"total:    {geom_bits + color_bits} bits ({t_mbps:.4f} Mbps, "
          f"{t_bpv:.4f} bpv), container {size} bytes")
    return 0


def cmd_decode(args) -> int:
    encoded = read_bitstream_file(args.input)
    log.info("decoding %d GOF(s)", len(encoded))
    gofs = _run_jobs(decode_gof, encoded, args.jobs)
    out = []
    for enc, gof in zip(encoded, gofs):
        if enc.intra_only and gof.n_frames > 1:
            # all-intra frames carry no shared vertex labeling, so each gets
            # its own group in the output container
            out.extend(GroupOfFrames((frame,)) for frame in gof)
        else:
            out.append(gof)
    depth = encoded[0].params.depth if encoded else 10
    write_gof_file(args.output, out, depth)
    n_frames = sum(g.n_frames for g in gofs)
    print(f"wrote {args.output}: {n_frames} frames in {len(gofs)} GOF(s), "
          f"{os.path.getsize(args.output)} bytes")
    return 0


def _flatten(gofs):
    frames = []
    for gof in gofs:
        frames.extend(gof.frames)
    return frames


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.6f}"
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else "-inf"
    return value


def cmd_eval(args) -> int:
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    for m in wanted:
        if m not in _EVAL_METRICS:
            print(f"unknown metric {m!r}; choose from {', '.join(_EVAL_METRICS)}",
                  file=sys.stderr)
            return 2
    orig_gofs, file_depth = read_gof_file(args.original)
    recon_gofs, _ = read_gof_file(args.reconstruction)
    depth = args.depth if args.depth is not None else file_depth
    originals = _flatten(orig_gofs)
    recons = _flatten(recon_gofs)

    report = {
        "sequence": os.path.splitext(os.path.basename(args.original))[0],
        "n_frames": len(originals),
        "depth": depth,
        "uinterp": args.uinterp,
    }

    per_frame_traces = None
    if "triangle" in wanted:
        g, y, u, v = psnr_triangle_cloud(originals, recons, args.uinterp)
        report.update(psnr_g_triangle=g, psnr_y_triangle=y,
                      psnr_u_triangle=u, psnr_v_triangle=v)
        if args.svg:
            per_frame_traces = [
                psnr_triangle_cloud([a], [b], args.uinterp)
                for a, b in zip(originals, recons)
            ]
    if "projection" in wanted:
        y, u, v = projection_psnr(originals, recons, depth, args.uinterp)
        report.update(psnr_y_projection=y, psnr_u_projection=u, psnr_v_projection=v)
    if "matching" in wanted:
        def clouds(frames):
            from .geom import voxelize
            out = []
            for fr in frames:
                pts, cols = refined_interpolated_cloud(fr, args.uinterp)
                out.append(voxelize(pts, cols, depth).voxel_set)
            return out
        d_g2, d_y2, pg, py = matching_distortion_sequence(clouds(originals),
                                                          clouds(recons))
        report.update(d_g2_matching=d_g2, d_y2_matching=d_y2,
                      psnr_g_matching=pg, psnr_y_matching=py)

    if args.bitstream:
        encoded = read_bitstream_file(args.bitstream)
        params = encoded[0].params
        geom_bits = sum(e.payload_bits()["geometry"] for e in encoded)
        color_bits = sum(e.payload_bits()["color"] for e in encoded)
        counts = [c for e in encoded for c in e.refined_voxel_counts()]
        n_frames = sum(e.n_frames for e in encoded)
        g_mbps, g_bpv = rates(geom_bits, n_frames, counts)
        c_mbps, c_bpv = rates(color_bits, n_frames, counts)
        t_mbps, t_bpv = rates(geom_bits + color_bits, n_frames, counts)
        report.update(
            step_motion=params.step_motion,
            step_color_intra=params.step_color_intra,
            step_color_inter=params.step_color_inter,
            rate_mbps_geometry=g_mbps, rate_bpv_geometry=g_bpv,
            rate_mbps_color=c_mbps, rate_bpv_color=c_bpv,
            rate_mbps_total=t_mbps, rate_bpv_total=t_bpv,
        )

    for key in _CSV_COLUMNS:
        if key in report:
            print(f"{key} = {_fmt(report[key])}")

    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fp:
            writer = csv.writer(fp)
            writer.writerow(_CSV_COLUMNS)
            writer.writerow([_fmt(report.get(k)) for k in _CSV_COLUMNS])
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fp:
            json.dump({k: _json_safe(v) for k, v in report.items()}, fp, indent=2)
            fp.write("\n")
    if args.svg and per_frame_traces is not None:
        from .svgplot import write_line_plot
        xs = list(range(1, len(per_frame_traces) + 1))
        write_line_plot(
            args.svg,
            [
                ("PSNR_G", xs, [t[0] for t in per_frame_traces]),
                ("PSNR_Y", xs, [t[1] for t in per_frame_traces]),
            ],
            title="triangle-cloud PSNR per frame",
            xlabel="frame",
            ylabel="PSNR (dB)",
        )
    return 0


def main(argv=None) -> int:
    level = os.environ.get("TRICLOUD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TricloudError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
