"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report. Thresholds marked FROZEN were fixed from the first reference run of
this implementation and are not to be retuned casually.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest
import scipy.linalg

from adrom.adaptive import AadeimConfig, adeim_update, run_aadeim
from adrom.cli import main
from adrom.config import build_model, builtin_config_path, load_config
from adrom.diagnostics import ledger_summary, relative_error, svd_decay_report
from adrom.linalg import lstsq, pod, pivoted_qr_pivots
from adrom.models import (
    AdvectionModel,
    AdvectionParams,
    FlameModel,
    FlameParams,
    PulseProfile,
    TimeSpec,
    run_full_model,
)
from adrom.snapio import read_matrix, write_matrix
from adrom.static import VariableLayout, run_static, select_points

# FROZEN reference-run values (see notes in the test bodies).
FROZEN_AADEIM_ERROR_MAX = 1e-3        # observed 6.30e-7 on the default flame config
FROZEN_GLOBAL_S20_RATIO_MIN = 0.14    # observed 0.149181
FROZEN_WINDOW_S7_RATIO_MAX = 1e-8     # observed max 5.63e-10 over 285 windows


@contextmanager
def criterion(number: int, description: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL criterion {number}: {description}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"criterion {number} exceeded its {budget_s:.0f}s budget ({elapsed:.1f}s)"
    print(f"PASS criterion {number}: {description} ({elapsed:.2f}s)")


# ------------------------------------------------------ shared reference runs

@pytest.fixture(scope="module")
def flame_reference():
    cfg = load_config(builtin_config_path("flame_default"))
    model = build_model(cfg)
    return cfg, model, run_full_model(model, cfg.time.steps)




def als_oracle(V, F, restarts, rng):
    """Alternating least squares from random starts, iterated to 1e-12 stagnation."""
    C = V.T @ F
    R = V @ C - F
    CCt = C @ C.T
    best = float(np.sum(R * R))
    for _ in range(restarts):
        beta = rng.standard_normal(V.shape[1])
        obj_prev = np.inf
        for _ in range(1000):
            c = C.T @ beta
            denom = float(c @ c)
            if denom <= 0.0:
                break
            alpha = -(R @ c) / denom
            norm2 = float(alpha @ alpha)
            if norm2 <= 0.0:
                break
            beta = -lstsq(CCt, C @ (R.T @ alpha)) / norm2
            obj = float(np.sum((R + np.outer(alpha, C.T @ beta)) ** 2))
            if abs(obj_prev - obj) <= 1e-12 * max(1.0, obj):
                obj_prev = obj
                break
            obj_prev = obj
        best = min(best, obj_prev)
    return best


def fourier_basis(nx, freqs):
    x = 2.0 * np.pi * np.arange(nx) / nx
    cols = []
    for j in freqs:
        cols.append(np.cos(j * x))
        cols.append(np.sin(j * x))
    return np.linalg.qr(np.array(cols).T)[0]


# ------------------------------------------------------------------ criteria

def test_criterion_01_update_optimality_vs_als_oracle():
    with criterion(1, "rank-one update matches the ALS oracle on 100 seeded instances", 10.0):
        rng = np.random.default_rng(1234)
        for _ in range(100):
            V = np.linalg.qr(rng.standard_normal((20, 3)))[0]
            F = rng.standard_normal((20, 4))
            upd = adeim_update(V, F)
            assert upd.objective_after <= upd.objective_before + 1e-12
            best = als_oracle(V, F, restarts=10, rng=rng)
            assert abs(upd.objective_after - best) <= 1e-8 * max(best, 1e-300)


def test_criterion_02_hand_check_instance():
    with criterion(2, "hand-check instance reduces the objective from 1.0 to 0.5", 1.0):
        V = np.array([[1.0], [0.0], [0.0]])
        F = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 0.0]])
        upd = adeim_update(V, F)
        assert abs(upd.objective_before - 1.0) <= 1e-10
        assert abs(upd.objective_after - 0.5) <= 1e-10


def test_criterion_03_pod_and_pivot_kernels():
    with criterion(3, "Eckart-Young identity and pivot agreement with the reference QR", 10.0):
        rng = np.random.default_rng(77)
        for _ in range(50):
            N = int(rng.integers(5, 16))
            M = int(rng.integers(4, 12))
            Q = rng.standard_normal((N, M))
            n = int(rng.integers(1, min(N, M)))
            basis, sigma = pod(Q, n)
            resid = float(np.sum((Q - basis @ (basis.T @ Q)) ** 2))
            tail = float(np.sum(sigma[n:] ** 2))
            assert abs(resid - tail) <= 1e-9 * max(tail, 1e-300)
        for _ in range(50):
            V = np.linalg.qr(rng.standard_normal((40, 6)))[0]
            mine = pivoted_qr_pivots(V.T)
            _, _, ref = scipy.linalg.qr(V.T, pivoting=True)
            assert mine.tolist() == ref[:6].tolist()


def test_criterion_04_hyper_reduction_bitwise_contract():
    with criterion(4, "sparse evaluation is a bitwise slice of the full step, both models", 10.0):
        rng = np.random.default_rng(88)
        adv = AdvectionModel(AdvectionParams(nx=512), TimeSpec(dt=0.5 / 512, steps=1))
        flame = FlameModel(FlameParams(), TimeSpec(dt=2e-4, steps=1))
        for model in (adv, flame):
            for _ in range(1000):
                q = np.abs(rng.standard_normal(model.dim)) + 0.05
                size = int(rng.integers(1, 33))
                idx = rng.choice(model.dim, size=size, replace=False)
                k = int(rng.integers(1, 50))
                values, read_set = model.step_components(q, k, idx)
                assert np.array_equal(values, model.step_full(q, k)[idx])
                assert np.all(np.isin(idx, read_set))


def test_criterion_05_exact_subspace_reproduction():
    with criterion(5, "in-subspace dynamics reproduced to 1e-8 by static and adaptive runs", 10.0):
        nx, n, K = 32, 4, 100
        params = AdvectionParams(nx=nx, a=1.0)
        basis = fourier_basis(nx, (1, 3))
        q0 = basis @ np.array([1.0, 0.5, -0.25, 2.0])

        class Subspace(AdvectionModel):
            def initial_state(self):
                return q0.copy()

        model = Subspace(params, TimeSpec(dt=0.5 * params.dx, steps=K))
        reference = run_full_model(model, K)

        V, _ = pod(reference, n)
        layout = VariableLayout.from_model(model)
        points = select_points(V, layout)
        traj, _ = run_static(model, V, points, V.T @ q0, K)
        assert relative_error(V @ traj, reference) <= 1e-8

        result = run_aadeim(model, AadeimConfig(n=n, w_init=15, w=n + 1, m_s=nx, z=1))
        assert relative_error(result.trajectory, reference) <= 1e-8


def test_criterion_06_local_versus_global_singular_decay():
    with criterion(6, "windowed spectra collapse at least 1e3 times faster than the global one", 30.0):
        cfg = load_config(builtin_config_path("advection_pulse"))
        model = build_model(cfg)
        assert model.dim == 512 and cfg.time.steps == 2000
        Q = run_full_model(model, cfg.time.steps)
        width = 7
        starts = range(0, Q.shape[1] - width + 1, width)
        rows = svd_decay_report(Q, [(s, s + width) for s in starts])
        global_ratio = rows[0][1][19]  # sigma_20 / sigma_1
        window_ratios = np.array([sigma[width - 1] for _, sigma in rows[1:]])
        assert len(window_ratios) == 285
        # FROZEN: observed global 0.149181, worst window 5.63e-10
        assert global_ratio >= FROZEN_GLOBAL_S20_RATIO_MIN
        assert window_ratios.max() <= FROZEN_WINDOW_S7_RATIO_MAX
        assert np.all(global_ratio >= 1e3 * window_ratios)


def test_criterion_07_static_versus_adaptive_gap(flame_reference):
    with criterion(7, "adaptive run is 10x more accurate than the static one on the flame default", 120.0):
        cfg, model, Q = flame_reference
        V, _ = pod(Q, cfg.rom.n)
        layout = VariableLayout.from_model(model)
        points = select_points(V, layout)
        traj, _ = run_static(model, V, points, V.T @ Q[:, 0], cfg.time.steps)
        e_static = relative_error(V @ traj, Q)

        result = run_aadeim(model, cfg.aadeim)
        e_adaptive = relative_error(result.trajectory, Q)

        assert e_adaptive <= 0.1 * e_static
        # FROZEN: observed e_adaptive = 6.30e-7, e_static = 1.60e-4
        assert e_adaptive <= FROZEN_AADEIM_ERROR_MAX


def test_criterion_08_ledger_closed_form():
    with criterion(8, "evaluation ledger equals the schedule-derived closed form exactly", 5.0):
        K, w_init, z = 100, 15, 3
        params = AdvectionParams(nx=64, a=1.0, profile=PulseProfile("gaussian", 0.25, 0.05))
        model = AdvectionModel(params, TimeSpec(dt=0.5 * params.dx, steps=K))
        result = run_aadeim(model, AadeimConfig(n=4, w_init=w_init, w=5, m_s=16, z=z))
        N = model.dim

        refresh_count = 1 + len([k for k in range(w_init + 1, K + 1) if k % z == 0])
        records = result.ledger.records
        sparse_counts = [r.count for r in records if r.kind == "sparse_estimate"]
        rom_counts = [r.count for r in records if r.kind == "rom_step"]
        assert len(sparse_counts) == (K - w_init) - refresh_count
        assert len(rom_counts) == K - w_init

        summary = ledger_summary(result.ledger)
        assert summary["fom_init"] == w_init * N
        assert summary["full_refresh"] == refresh_count * N
        closed_form = w_init * N + refresh_count * N + sum(sparse_counts) + sum(rom_counts)
        assert summary["total"] == closed_form
        assert isinstance(summary["total"], int)
        # refresh steps are exactly k = w_init + 1 and multiples of z
        refresh_steps = sorted(r.step for r in records if r.kind == "full_refresh")
        assert refresh_steps == sorted({w_init + 1} | {k for k in range(w_init + 1, K + 1) if k % z == 0})


def test_criterion_09_error_metric_trivial_cases():
    with criterion(9, "relative error returns 0, 1, 2 exactly on the pinned cases", 1.0):
        rng = np.random.default_rng(9)
        Q = rng.standard_normal((6, 5))
        assert abs(relative_error(Q, Q) - 0.0) <= 1e-15
        assert abs(relative_error(np.zeros_like(Q), Q) - 1.0) <= 1e-15
        assert abs(relative_error(np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]])) - 2.0) <= 1e-15


def test_criterion_10_determinism_and_io(tmp_path):
    with criterion(10, "repeated runs give bitwise-identical outputs; snapshots round-trip", 30.0):
        rng = np.random.default_rng(10)
        M = rng.standard_normal((33, 17)) * 10.0 ** rng.integers(-12, 12, size=(33, 17))
        M[0, 0] = -0.0
        path = tmp_path / "m.snap"
        write_matrix(path, M)
        assert np.array_equal(read_matrix(path), M)

        cfg_text = (
            "[model]\nkind = flame\nnx = 96\n\n"
            "[time]\ndt = 0.0002\nsteps = 150\n\n"
            "[rom]\nmode = aadeim\nn = 4\n\n"
            "[aadeim]\nw_init = 12\nw = 5\nm_s = 48\nz = 3\n\n"
            f"[output]\ndirectory = {tmp_path / 'run'}\nprobes = 0.25 0.75\n\n"
            "[run]\nlabel = det\n"
        )
        cfg_path = tmp_path / "det.cfg"
        cfg_path.write_text(cfg_text)
        assert main(["rom-aadeim", str(cfg_path)]) == 0
        outdir = tmp_path / "run"
        first = {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}
        assert main(["rom-aadeim", str(cfg_path)]) == 0
        second = {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}
        assert first.keys() == second.keys() and len(first) >= 5
        for name in first:
            assert first[name] == second[name], f"{name} not reproducible"


def test_criterion_11_cost_error_monotonicity(flame_reference, tmp_path):
    with criterion(11, "raising m_s lowers the error and strictly raises the cost", 240.0):
        import dataclasses

        from adrom.config import serialize_config

        _, _, Q = flame_reference
        ref_path = tmp_path / "reference.snap"
        write_matrix(ref_path, Q)

        run_dirs = []
        for name in ("flame_A", "flame_B", "flame_C", "flame_D"):
            cfg = load_config(builtin_config_path(name))
            outdir = tmp_path / name
            cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, directory=str(outdir)))
            cfg_path = tmp_path / f"{name}.cfg"
            cfg_path.write_text(serialize_config(cfg))
            assert main(["rom-aadeim", str(cfg_path), "--reference", str(ref_path)]) == 0
            run_dirs.append(str(outdir))

        table_path = tmp_path / "sweep.csv"
        assert main(["compare", *run_dirs, "--out", str(table_path)]) == 0
        lines = table_path.read_text().splitlines()
        assert lines[0].startswith("label,n,m_s,z,error")
        rows = {}
        for line in lines[1:]:
            cells = line.split(",")
            rows[cells[0]] = dict(n=int(cells[1]), m_s=int(cells[2]), z=int(cells[3]),
                                  error=float(cells[4]), evals=int(cells[5]))
        assert len(rows) == 4
        # flame-A and flame-B differ only in m_s (128 vs 256) at fixed n = 6, z = 3
        small, large = rows["flame-A"], rows["flame-B"]
        assert (small["n"], small["z"], small["m_s"]) == (6, 3, 128)
        assert (large["n"], large["z"], large["m_s"]) == (6, 3, 256)
        assert large["error"] <= small["error"]
        assert large["evals"] > small["evals"]
