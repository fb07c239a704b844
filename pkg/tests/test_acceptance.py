"""Acceptance suite: one PASS/FAIL line per criterion, at full size.

The lines are printed in the "acceptance criteria" section at the end of the
pytest report.  Criteria 6 and 7 run long (minutes) on a single core.
"""
import math
import os
import time

import numpy as np

from oracles import static_min_objective
from sls_witness.cli import main as cli_main
from sls_witness.core import TwoStateWavefunction, partial_trace, pure_density, random_operator, random_state
from sls_witness.ensemble import calibrate_born, run_ensemble, timescales
from sls_witness.master import (JumpTerm, evolve_gksl, reduced_generator_A,
                                reduced_generator_bruteforce, toy_kraus_check, verify_toy_gksl)
from sls_witness.models import CSL, SUV, TrajectoryConfig, default_dt, toy_step
from sls_witness.noise import SBM, StaticOU, StaticSBM

P_MAIN = math.cos(math.pi / 6) ** 2
P_INSET = math.cos(math.pi / 8) ** 2
CALIBRATION_SET = [TwoStateWavefunction.from_p0(P_MAIN), TwoStateWavefunction.from_p0(P_INSET)]


def test_1_csl_martingale(report):
    start = time.perf_counter()
    cfg = TrajectoryConfig.uniform(TwoStateWavefunction.from_p0(0.75), 3.0, 1e-3, 200)
    w, _ = run_ensemble(CSL(1.0), cfg, 10**5, master_seed=2024)
    elapsed = time.perf_counter() - start
    z = np.abs(w.witness[1:]) / w.stderr[1:]
    ok = bool(w.witness[0] == 0.0 and np.all(z < 4.0))
    report("1", ok, f"CSL max |witness|/stderr = {z.max():.2f} (< 4), "
                    f"stderr ~ {np.median(w.stderr[1:]):.2e}, {elapsed:.0f} s")
    assert ok


def test_2_toy_exact_solution(report):
    gamma = 1.0
    dt = 1e-4 / gamma
    psi = TwoStateWavefunction.from_p0(0.5)
    err = 0.0
    for k in range(1, int(round(3.0 / (gamma * dt))) + 1):
        psi = toy_step(psi, dt, gamma)
        err = max(err, abs(psi.p0 - psi.p1 - math.tanh(2 * gamma * k * dt)))
    psi = TwoStateWavefunction.from_p0(0.75)
    for _ in range(int(round(10.0 / (gamma * dt)))):
        psi = toy_step(psi, dt, gamma)
    ok = err < 1e-8 and psi.p0 > 1 - 1e-6
    report("2", ok, f"max |s - tanh(2 gamma t)| = {err:.2e} (< 1e-8); "
                    f"p0(gamma t = 10) = {psi.p0:.12f} (> 1 - 1e-6)")
    assert ok


def test_3_toy_gksl_consistency(report):
    gamma = 1.0
    times = np.linspace(0.1 / gamma, 3.0 / gamma, 300)
    err = verify_toy_gksl(gamma, times)
    ok = err < 1e-8
    report("3", ok, f"max |Lambda_t[rho(t)] - d rho/dt| = {err:.2e} on [0.1, 3]/gamma (< 1e-8)")
    assert ok


def test_4_kraus_scaling(report):
    gamma, dt = 1.0, 1e-3
    id_ratios, map_ratios = [], []
    for t in (0.2, 1.0, 2.5):
        a, b = toy_kraus_check(t, dt, gamma), toy_kraus_check(t, dt / 2, gamma)
        id_ratios.append(a.identity_defect / b.identity_defect)
        map_ratios.append(a.map_defect / b.map_defect)
    ok = all(abs(r - 4.0) <= 0.4 for r in id_ratios + map_ratios)
    report("4", ok, "halving ratios of ||Sum K^+K - I|| = "
                    + ", ".join(f"{r:.3f}" for r in id_ratios)
                    + "; of ||Sum K rho K^+ - (rho + dt Lambda)|| = "
                    + ", ".join(f"{r:.3f}" for r in map_ratios) + " (4.0 +- 0.4)")
    assert ok


def test_5_reduced_generator_identity(report):
    rng = np.random.default_rng(55)
    worst, worst_local = 0.0, 0.0
    for _ in range(100):
        dA, dB = (int(x) for x in rng.integers(2, 4, size=2))
        psi = random_state(dA * dB, rng).reshape(dA, dB)
        LA, LB = random_operator(dA, rng), random_operator(dB, rng)
        got = reduced_generator_A(psi, LA, LB, check=False)
        worst = max(worst, float(np.max(np.abs(got - reduced_generator_bruteforce(psi, LA, LB)))))
        local = reduced_generator_A(psi, LA, np.eye(dB), check=False)
        worst_local = max(worst_local, float(np.max(np.abs(local))))
    ok = worst < 1e-12 and worst_local < 1e-14
    report("5", ok, f"closed form vs brute force max gap {worst:.1e} (< 1e-12); "
                    f"L_B = I max entry {worst_local:.1e} (< 1e-14), 100 instances")
    assert ok


def test_6_static_noise_dichotomy(report):
    start = time.perf_counter()
    sbm = calibrate_born(StaticSBM(), CALIBRATION_SET, 10.0, 10**5, master_seed=6, strict=False)
    ou = calibrate_born(StaticOU(), CALIBRATION_SET, 10.0, 10**5, master_seed=6, strict=False)
    elapsed = time.perf_counter() - start
    _, ou_floor = static_min_objective([P_MAIN, P_INSET], "ou")
    sbm_ok = sbm.objective < 0.01
    ou_ok = ou.objective > 0.02
    ok = sbm_ok and ou_ok
    report("6", ok, f"StaticSBM G/J = {sbm.ratio:.4f}, objective {sbm.objective:.4f} (< 0.01) "
                    f"[{'ok' if sbm_ok else 'fails'}]; StaticOU best G/J = {ou.ratio:.3f}, "
                    f"objective {ou.objective:.4f} (> 0.02) [{'ok' if ou_ok else 'fails'}]; "
                    f"quadrature floor for OU {ou_floor:.4f}; {elapsed / 60:.1f} min")
    assert ok


def test_7_short_time_bump(report, tmp_path):
    start = time.perf_counter()
    code = cli_main(["fig2", "--seed", "7", "--outdir", str(tmp_path)])
    assert code == 0
    rows = np.loadtxt(tmp_path / "summary.csv", delimiter=",", skiprows=1, ndmin=2)
    jtau, t_max, t_coll = rows[:, 0], rows[:, 1], rows[:, 2]
    w = np.loadtxt(tmp_path / "witness_jtau0.2.csv", delimiter=",", skiprows=1)
    bump = w[:, 1] - w[0, 1]
    k = int(np.argmax(bump))
    significance = bump[k] / w[k, 2]
    order = np.argsort(jtau)
    increasing = bool(np.all(np.diff(t_max[order]) > 0))
    below = bool(np.all(t_max < t_coll))
    ok = significance > 10 and increasing and below
    report("7", ok, f"J tau = 0.2 bump {bump[k]:.4f} = {significance:.0f} s.e. (> 10); "
                    + "; ".join(f"J tau {j:g}: t_max {a:.3f} < t_coll {b:.3f}"
                                for j, a, b in zip(jtau[order], t_max[order], t_coll[order]))
                    + f"; {(time.perf_counter() - start) / 60:.1f} min")
    assert ok


def test_8_local_jumps_no_signalling(report):
    rng = np.random.default_rng(88)
    worst = 0.0
    for _ in range(20):
        L = np.kron(random_operator(2, rng), np.eye(2))
        rho0 = pure_density(random_state(4, rng))
        _, rhos = evolve_gksl(rho0, None, [JumpTerm(1.0, L)], 2.0, 1e-2)
        rho_b = partial_trace(rhos, (2, 2), keep="B")
        worst = max(worst, float(np.max(np.abs(rho_b - rho_b[0]))))
    ok = worst < 1e-9
    report("8", ok, f"max drift of Bob's reduced state {worst:.1e} over 20 entangled states (< 1e-9)")
    assert ok


def test_9_determinism(report, tmp_path, monkeypatch):
    counts = sorted({1, 2, os.cpu_count() or 1, 4})
    args = ["witness", "--model", "suv", "--noise", "sbm", "--tau", "0.2", "--G", "2",
            "--n-traj", "3000", "--horizon", "2", "--seed", "99"]
    blobs = []
    for k in counts:
        monkeypatch.setenv("SLS_WITNESS_WORKERS", str(k))
        for rep in range(2):
            out = tmp_path / f"w{k}_{rep}.csv"
            cli_main([*args, "--output", str(out)])
            blobs.append(out.read_bytes())
    ok = all(b == blobs[0] for b in blobs)
    report("9", ok, f"CSV byte-identical across reruns and worker counts {counts} "
                    f"(max here = {os.cpu_count()})")
    assert ok
