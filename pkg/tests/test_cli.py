"""End-to-end CLI runs against temporary files."""

import csv
import json
import math

import numpy as np
import pytest

from tricloud import cli, core


def _run(argv):
    return cli.main(argv)


def _generate(tmp_path, name="orig.tcg", frames=4, gof_size=2):
    path = tmp_path / name
    rc = _run([
        "generate", "--shape", "sphere", "--frames", str(frames),
        "--faces", "60", "--upsample", "2", "--amplitude", "0.02",
        "--seed", "9", "--gof-size", str(gof_size), "--depth", "8",
        "-o", str(path),
    ])
    assert rc == 0
    return path


def test_full_pipeline(tmp_path, capsys):
    orig = _generate(tmp_path)
    bits = tmp_path / "seq.tcb"
    recon = tmp_path / "recon.tcg"
    assert _run(["encode", str(orig), "-o", str(bits),
                 "--step-motion", "1.0", "--step-color-intra", "2.0",
                 "--step-color-inter", "2.0"]) == 0
    out = capsys.readouterr().out
    assert "geometry:" in out and "color:" in out and "container" in out

    assert _run(["decode", str(bits), "-o", str(recon)]) == 0
    gofs, depth = core.read_gof_file(recon)
    assert depth == 8
    assert sum(g.n_frames for g in gofs) == 4

    csv_path = tmp_path / "report.csv"
    json_path = tmp_path / "report.json"
    svg_path = tmp_path / "trace.svg"
    rc = _run([
        "eval", "--original", str(orig), "--reconstruction", str(recon),
        "--bitstream", str(bits), "--uinterp", "1",
        "--csv", str(csv_path), "--json", str(json_path), "--svg", str(svg_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "psnr_g_triangle" in out and "rate_mbps_total" in out

    with open(csv_path, newline="") as fp:
        rows = list(csv.reader(fp))
    assert len(rows) == 2
    report = dict(zip(rows[0], rows[1]))
    assert float(report["psnr_g_triangle"]) > 30.0
    assert float(report["psnr_y_triangle"]) > 20.0
    assert float(report["rate_bpv_total"]) > 0.0
    assert report["step_motion"] == "1.000000"

    data = json.loads(json_path.read_text())
    assert data["n_frames"] == 4
    assert data["psnr_g_matching"] > 0.0
    assert math.isclose(data["psnr_g_triangle"], float(report["psnr_g_triangle"]),
                        abs_tol=1e-6)

    svg = svg_path.read_text()
    assert svg.lstrip().startswith("<svg") and "PSNR_G" in svg


def test_eval_subset_of_metrics(tmp_path, capsys):
    orig = _generate(tmp_path, frames=2, gof_size=2)
    rc = _run(["eval", "--original", str(orig), "--reconstruction", str(orig),
               "--metrics", "triangle"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "psnr_g_triangle = inf" in out
    assert "matching" not in out


def test_parallel_encode_is_deterministic(tmp_path):
    orig = _generate(tmp_path, frames=4, gof_size=2)
    one = tmp_path / "serial.tcb"
    two = tmp_path / "parallel.tcb"
    assert _run(["encode", str(orig), "-o", str(one)]) == 0
    assert _run(["encode", str(orig), "-o", str(two), "--jobs", "2"]) == 0
    assert one.read_bytes() == two.read_bytes()


def test_intra_only_encode_decodes(tmp_path):
    orig = _generate(tmp_path, frames=3, gof_size=3)
    bits = tmp_path / "intra.tcb"
    recon = tmp_path / "intra.tcg"
    assert _run(["encode", str(orig), "-o", str(bits), "--intra-only"]) == 0
    assert _run(["decode", str(bits), "-o", str(recon)]) == 0
    gofs, _ = core.read_gof_file(recon)
    # intra frames have no shared vertex labeling: one group per frame
    assert [g.n_frames for g in gofs] == [1, 1, 1]


def test_missing_input_exits_1(tmp_path, capsys):
    rc = _run(["encode", str(tmp_path / "nope.tcg"), "-o", str(tmp_path / "x.tcb")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_corrupt_magic_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.tcg"
    bad.write_bytes(b"NOPE" + bytes(64))
    rc = _run(["encode", str(bad), "-o", str(tmp_path / "x.tcb")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_metric_exits_2(tmp_path, capsys):
    orig = _generate(tmp_path, frames=2, gof_size=2)
    rc = _run(["eval", "--original", str(orig), "--reconstruction", str(orig),
               "--metrics", "triangle,hausdorff"])
    assert rc == 2
    assert "unknown metric" in capsys.readouterr().err


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        _run([])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        _run(["generate", "--shape", "cube", "--frames", "2", "-o", "x"])
    assert err.value.code == 2


def test_decoded_reference_matches_quantized_original(tmp_path):
    orig = _generate(tmp_path, frames=2, gof_size=2)
    bits = tmp_path / "seq.tcb"
    recon = tmp_path / "recon.tcg"
    assert _run(["encode", str(orig), "-o", str(bits)]) == 0
    assert _run(["decode", str(bits), "-o", str(recon)]) == 0
    (gof_in,), _ = core.read_gof_file(orig)
    (gof_out,), _ = core.read_gof_file(recon)
    a = np.sort(gof_in.reference.vertices, axis=0)
    b = np.sort(gof_out.reference.vertices, axis=0)
    # columnwise sort is order-free; reference geometry is within half a cell
    assert np.max(np.abs(a - b)) <= 0.5 * 2.0 ** -8 + 1e-6
