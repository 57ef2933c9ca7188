"""Sweep color stepsizes and plot the rate-distortion trade-off.

Encodes the same wave-plane sequence at a ladder of color quantization
steps, collects color bits per frame against luma PSNR, and writes both a
CSV table and an SVG curve.  Run from the repository root:

    python3 demos/rate_distortion.py [output-dir]
"""

import csv
import pathlib
import sys

import tricloud
from tricloud.svgplot import write_line_plot


def main() -> None:
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")
    out.mkdir(parents=True, exist_ok=True)

    gof = tricloud.gen_sequence("wave-plane", 8, n_faces=600, upsample=5,
                                amplitude=0.03, seed=7)[0]
    ladder = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)

    rows = []
    for step in ladder:
        params = tricloud.CodecParams(10, 5, 2.0, step, step)
        encoded = tricloud.encode_gof(gof, params)
        decoded = tricloud.decode_gof(encoded)
        kbits = encoded.payload_bits()["color"] / gof.n_frames / 1000.0
        psnr_y = tricloud.psnr_triangle_cloud(gof.frames, decoded.frames)[1]
        rows.append((step, kbits, psnr_y))
        print(f"step {step:5.1f}: {kbits:8.2f} color kbit/frame, "
              f"PSNR_Y {psnr_y:6.2f} dB")

    with open(out / "rate_distortion.csv", "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["step_color", "color_kbit_per_frame", "psnr_y_db"])
        writer.writerows(rows)

    write_line_plot(
        out / "rate_distortion.svg",
        [("PSNR_Y", [r[1] for r in rows], [r[2] for r in rows])],
        title="color rate vs luma PSNR",
        xlabel="color kbit/frame",
        ylabel="PSNR_Y (dB)",
    )
    print(f"wrote {out / 'rate_distortion.csv'} and {out / 'rate_distortion.svg'}")


if __name__ == "__main__":
    main()
