"""Command-line surface: snapshot format, commands, exit codes, determinism."""

from pathlib import Path

import numpy as np
import pytest

from adrom.cli import main
from adrom.snapio import MAGIC, read_matrix, write_matrix

ADVECTION_SMALL = """\
[model]
kind = advection
nx = 32
profile_width = 0.05

[time]
dt = {dt}
steps = 40

[rom]
mode = {mode}
n = {n}
{aadeim}
[output]
directory = {outdir}
probes = 0.5

[run]
label = {label}
"""


def write_cfg(tmp_path, name, mode="static", n=4, outdir=None, label="t", aadeim=""):
    outdir = outdir or str(tmp_path / name)
    text = ADVECTION_SMALL.format(dt=0.5 / 32, mode=mode, n=n, outdir=outdir, label=label, aadeim=aadeim)
    path = tmp_path / f"{name}.cfg"
    path.write_text(text)
    return path, Path(outdir)


AADEIM_SECTION = """
[aadeim]
w_init = 12
w = 5
m_s = 16
z = 3
"""


# -------------------------------------------------------------- snapio

def test_snapshot_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(26)
    M = rng.standard_normal((7, 5))
    M[0, 0] = -0.0  # signed zero survives
    path = tmp_path / "m.snap"
    write_matrix(path, M)
    back = read_matrix(path)
    assert back.shape == M.shape
    assert np.array_equal(back, M)
    assert np.signbit(back[0, 0])


def test_snapshot_format_layout(tmp_path):
    M = np.array([[1.0, 3.0], [2.0, 4.0]])
    path = tmp_path / "m.snap"
    write_matrix(path, M)
    data = path.read_bytes()
    assert data[:8] == MAGIC
    assert int.from_bytes(data[8:16], "little") == 2
    assert int.from_bytes(data[16:24], "little") == 2
    # column-major payload: 1, 2, 3, 4
    np.testing.assert_array_equal(np.frombuffer(data, dtype="<f8", offset=24), [1.0, 2.0, 3.0, 4.0])


def test_snapshot_rejects_corrupt_files(tmp_path):
    path = tmp_path / "bad.snap"
    path.write_bytes(b"NOTASNAP" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        read_matrix(path)
    path.write_bytes(MAGIC + (3).to_bytes(8, "little") + (2).to_bytes(8, "little") + b"\x00" * 8)
    with pytest.raises(ValueError, match="expected"):
        read_matrix(path)


# ------------------------------------------------------------- commands

def test_fom_run_writes_outputs(tmp_path):
    cfg, outdir = write_cfg(tmp_path, "fom")
    assert main(["fom-run", str(cfg)]) == 0
    Q = read_matrix(outdir / "fom_trajectory.snap")
    assert Q.shape == (32, 41)
    probe = (outdir / "probe_q_x0.5.csv").read_text().splitlines()
    assert probe[0] == "time,value"
    assert len(probe) == 42
    t1, v1 = probe[2].split(",")
    assert float(t1) == pytest.approx(0.5 / 32)  # plain decimal cells, no repr noise
    assert np.isfinite(float(v1))


def test_full_rank_static_rom_is_exact(tmp_path):
    # n = N: the reduced model reproduces the full model to rounding
    cfg_f, out_f = write_cfg(tmp_path, "fom32")
    assert main(["fom-run", str(cfg_f)]) == 0
    cfg_r, out_r = write_cfg(tmp_path, "rom32", mode="static", n=32, label="exact")
    assert main(["rom-static", str(cfg_r), "--snapshots", str(out_f / "fom_trajectory.snap")]) == 0
    err_line = (out_r / "error.csv").read_text().splitlines()[1]
    label, err = err_line.split(",")
    assert label == "exact"
    assert float(err) <= 1e-10


def test_rom_aadeim_and_compare(tmp_path):
    cfg_a, out_a = write_cfg(tmp_path, "ada", mode="aadeim", n=4, label="b-ada", aadeim=AADEIM_SECTION)
    assert main(["rom-aadeim", str(cfg_a)]) == 0
    for name in ("rom_trajectory.snap", "error.csv", "ledger.csv", "diagnostics.csv", "summary.csv"):
        assert (out_a / name).is_file()

    cfg_s, out_s = write_cfg(tmp_path, "sta", mode="static", n=4, label="a-sta")
    cfg_f, out_f = write_cfg(tmp_path, "fomref")
    assert main(["fom-run", str(cfg_f)]) == 0
    assert main(["rom-static", str(cfg_s), "--snapshots", str(out_f / "fom_trajectory.snap")]) == 0

    out_csv = tmp_path / "cmp.csv"
    assert main(["compare", str(out_a), str(out_s), "--out", str(out_csv)]) == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "label,n,m_s,z,error,evals_total,evals_refresh,evals_sparse,evals_rom"
    assert len(lines) == 3
    assert lines[1].startswith("a-sta,")  # deterministic ordering by label
    assert lines[2].startswith("b-ada,")
    # static rows carry zero adaptive columns
    assert lines[1].split(",")[2] == "0"


def test_reference_flag_and_shape_check(tmp_path):
    cfg_f, out_f = write_cfg(tmp_path, "fomx")
    assert main(["fom-run", str(cfg_f)]) == 0
    ref = out_f / "fom_trajectory.snap"
    cfg_a, out_a = write_cfg(tmp_path, "adax", mode="aadeim", label="x", aadeim=AADEIM_SECTION)
    assert main(["rom-aadeim", str(cfg_a), "--reference", str(ref)]) == 0
    # wrong shape refused
    bad = out_f / "bad.snap"
    write_matrix(bad, np.zeros((32, 3)))
    assert main(["rom-aadeim", str(cfg_a), "--reference", str(bad)]) == 2


def test_svd_report_window_output(tmp_path, capsys):
    cfg_f, out_f = write_cfg(tmp_path, "fomsvd")
    assert main(["fom-run", str(cfg_f)]) == 0
    assert main(["svd-report", str(out_f / "fom_trajectory.snap"), "--windows", "7"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "index,sigma_normalized,window_label"
    assert any(line.endswith(",global") for line in lines[1:])
    assert any("cols[0:7)" in line for line in lines[1:])
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[1]) == 1.0


def test_exit_codes(tmp_path):
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("[model]\nkind = advection\nnx = 64\nbogus = 1\n\n[time]\ndt = 0.005\nsteps = 5\n")
    assert main(["fom-run", str(bad_cfg)]) == 2
    assert main(["fom-run", str(tmp_path / "missing.cfg")]) == 4
    assert main(["compare", str(tmp_path / "nodir")]) == 4


def test_env_override_output_dir(tmp_path, monkeypatch):
    cfg, configured = write_cfg(tmp_path, "envtest")
    override = tmp_path / "elsewhere"
    monkeypatch.setenv("ROM_OUTPUT_DIR", str(override))
    assert main(["fom-run", str(cfg)]) == 0
    assert (override / "fom_trajectory.snap").is_file()
    assert not configured.exists()


def test_repeated_runs_bitwise_identical(tmp_path):
    cfg, outdir = write_cfg(tmp_path, "det", mode="aadeim", label="det", aadeim=AADEIM_SECTION)
    assert main(["rom-aadeim", str(cfg)]) == 0
    first = {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}
    assert main(["rom-aadeim", str(cfg)]) == 0
    second = {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], name
