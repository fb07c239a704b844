import math

import numpy as np
import pytest

from oracles import static_born_probability, toy_collapse_time
from sls_witness.core import TwoStateWavefunction
from sls_witness.ensemble import (CONSISTENT, DETECTED, CalibrationError, HorizonTooShortError,
                                  OffDiagonalSeries, WitnessSeries, born_deviations,
                                  bob_reduced_density, calibrate_born, compute_verdict,
                                  run_ensemble, timescales)
from sls_witness.models import CSL, SUV, Linear, ToyDeterministic, TrajectoryConfig
from sls_witness.noise import OU, SBM, StaticOU, StaticSBM

P75 = TwoStateWavefunction.from_p0(0.75)


def cfg(psi=P75, horizon=1.0, dt=0.01, points=21):
    return TrajectoryConfig.uniform(psi, horizon, dt, points)


def test_csl_flat():
    w, _ = run_ensemble(CSL(1.0), cfg(horizon=2.0, dt=1e-3), 20000, master_seed=1)
    assert np.all(np.abs(w.witness) < 4 * np.maximum(w.stderr, 1e-300))
    assert compute_verdict(w).verdict == CONSISTENT
    assert w.stderr[-1] == pytest.approx(math.sqrt(0.75 * 0.25 / 20000), rel=0.3)


@pytest.mark.parametrize("model", [CSL(1.0), SUV(1.0, 2.0, SBM(0.3)), SUV(1.0, 1.0, OU(0.2)),
                                   SUV(1.0, 1.0, StaticOU())])
def test_worker_count_invariance(model):
    c = cfg(horizon=0.5)
    runs = [run_ensemble(model, c, 1300, master_seed=5, workers=k) for k in (1, 2, 3)]
    for w, x in runs[1:]:
        np.testing.assert_array_equal(w.mean_p0, runs[0][0].mean_p0)
        np.testing.assert_array_equal(w.stderr, runs[0][0].stderr)
        np.testing.assert_array_equal(x.mean_cross, runs[0][1].mean_cross)


def test_env_worker_override(monkeypatch):
    c = cfg(horizon=0.3)
    base, _ = run_ensemble(CSL(1.0), c, 1100, 2, workers=1)
    monkeypatch.setenv("SLS_WITNESS_WORKERS", "2")
    again, _ = run_ensemble(CSL(1.0), c, 1100, 2)
    np.testing.assert_array_equal(base.mean_p0, again.mean_p0)
    monkeypatch.setenv("SLS_WITNESS_WORKERS", "0")
    with pytest.raises(ValueError):
        run_ensemble(CSL(1.0), c, 1100, 2)


def test_determinism_and_seed_dependence():
    c = cfg(horizon=0.5)
    a, _ = run_ensemble(CSL(1.0), c, 100, 9)
    b, _ = run_ensemble(CSL(1.0), c, 100, 9)
    d, _ = run_ensemble(CSL(1.0), c, 100, 10)
    np.testing.assert_array_equal(a.mean_p0, b.mean_p0)
    assert not np.array_equal(a.mean_p0, d.mean_p0)


def test_too_few_trajectories():
    with pytest.raises(ValueError):
        run_ensemble(CSL(1.0), cfg(), 99, 0)


def test_static_ou_deviates_from_born():
    # quadrature oracle: P(branch 0) = Phi(J s0 / G) at long times
    for ratio in (0.5, 1.0, 2.0):
        dev = born_deviations(StaticOU(), ratio, [P75], 10.0, 20000, master_seed=4)[0]
        expected = static_born_probability(0.5, ratio, "ou") - 0.75
        assert abs(expected) > 0.02
        assert dev == pytest.approx(expected, abs=4 * math.sqrt(0.25 / 20000) + 2e-3)


def test_static_sbm_born_at_unit_ratio():
    states = [P75, TwoStateWavefunction.from_p0(math.cos(math.pi / 8) ** 2)]
    dev = born_deviations(StaticSBM(), 1.0, states, 10.0, 20000, master_seed=4)
    assert np.all(np.abs(dev) < 4 * math.sqrt(0.25 / 20000) + 2e-3)
    off = born_deviations(StaticSBM(), 2.0, states, 10.0, 20000, master_seed=4)
    for d, psi in zip(off, states):
        expected = static_born_probability(psi.p0 - psi.p1, 2.0, "sbm") - psi.p0
        assert d == pytest.approx(expected, abs=4 * math.sqrt(0.25 / 20000) + 2e-3)


@pytest.mark.parametrize("noise", [StaticSBM(), SBM(0.2), OU(0.5), StaticOU()])
def test_symmetric_state_stays_balanced(noise):
    half = TwoStateWavefunction.from_p0(0.5)
    w, _ = run_ensemble(SUV(1.0, 1.5, noise), cfg(psi=half, horizon=3.0), 20000, 3)
    assert np.all(np.abs(w.witness) <= 4 * w.stderr + 1e-15)


def test_verdict_examples():
    toy_w, _ = run_ensemble(ToyDeterministic(1.0), cfg(), 100, 0)
    assert np.all(toy_w.stderr == 0)
    v = compute_verdict(toy_w)
    assert v.verdict == DETECTED and math.isinf(v.max_abs_z)
    flat = WitnessSeries(np.arange(3.0), np.full(3, 0.75), np.full(3, 1e-3), 100, 0.75)
    v = compute_verdict(flat)
    assert v.verdict == CONSISTENT and v.max_abs_z == 0.0
    for bump, verdict in ((0.004, CONSISTENT), (0.006, DETECTED)):
        s = WitnessSeries(np.arange(3.0), np.array([0.75, 0.75 + bump, 0.75]), np.full(3, 1e-3),
                          100, 0.75)
        v = compute_verdict(s, threshold_z=5.0)
        assert v.max_abs_z == pytest.approx(bump / 1e-3)
        assert v.verdict == verdict and v.t_max == 1.0


def test_linear_model_signals_immediately():
    w, _ = run_ensemble(Linear(1.0, StaticSBM()), cfg(horizon=2.0), 20000, 0)
    assert np.all(np.diff(w.mean_p0) < 0)
    assert compute_verdict(w).sls_detected


def test_bob_density_csl():
    w, _ = run_ensemble(CSL(1.0), cfg(horizon=1.0, dt=1e-3), 20000, 6, record_density=True)
    rho_b = bob_reduced_density(w)
    drift = np.max(np.abs(rho_b - rho_b[0]), axis=(1, 2))
    assert np.all(drift < 4 * w.stderr + 1e-15)


def test_bob_density_toy_drifts_to_branch_zero():
    half = TwoStateWavefunction.from_p0(0.5)
    w, _ = run_ensemble(ToyDeterministic(1.0), cfg(psi=half, horizon=6.0), 100, 0,
                        record_density=True)
    rho_b = bob_reduced_density(w)
    np.testing.assert_allclose(rho_b[0], np.diag([0.5, 0.5]), atol=1e-15)
    np.testing.assert_allclose(rho_b[-1], np.diag([1.0, 0.0]), atol=1e-9)


def test_bob_density_product_state_constant():
    for model in (CSL(1.0), SUV(1.0, 1.0, SBM(0.2)), ToyDeterministic(1.0)):
        w, _ = run_ensemble(model, cfg(psi=TwoStateWavefunction(1, 0)), 100, 0,
                            record_density=True)
        rho_b = bob_reduced_density(w)
        np.testing.assert_array_equal(rho_b, np.broadcast_to(np.diag([1, 0]), rho_b.shape))


def test_bob_density_requires_recording():
    w, _ = run_ensemble(CSL(1.0), cfg(), 100, 0)
    with pytest.raises(ValueError):
        bob_reduced_density(w)


def test_toy_timescales():
    gamma = 1.0
    half = TwoStateWavefunction.from_p0(0.5)
    c = TrajectoryConfig.uniform(half, 3.0, 1e-3, 3001)
    w, x = run_ensemble(ToyDeterministic(gamma), c, 100, 0)
    np.testing.assert_allclose(x.mean_cross, 0.5 / np.cosh(2 * gamma * w.times), atol=1e-12)
    t_max, t_coll = timescales(w, x)
    assert t_coll == pytest.approx(toy_collapse_time(gamma), abs=1e-3)
    assert t_max == pytest.approx(3.0)
    _, t_fit = timescales(w, x, method="fit")
    assert 0.5 < t_fit < 1.5


def test_timescales_horizon_too_short():
    w = WitnessSeries(np.arange(3.0), np.full(3, 0.75), np.full(3, 1e-3), 100, 0.75)
    x = OffDiagonalSeries(np.arange(3.0), np.array([0.43, 0.4, 0.35]))
    with pytest.raises(HorizonTooShortError, match="horizon too short"):
        timescales(w, x)


def test_calibration_static_sbm_small():
    states = [P75, TwoStateWavefunction.from_p0(math.cos(math.pi / 8) ** 2)]
    r = calibrate_born(StaticSBM(), states, 10.0, 4000, log_range=(-0.5, 0.5), grid_points=5,
                       refine_steps=6, tolerance=0.02)
    assert r.success and 0.8 < r.ratio < 1.25
    assert len(r.evaluations) >= 5


def test_calibration_failure_raises():
    with pytest.raises(CalibrationError, match="no Born-compatible ratio found") as info:
        calibrate_born(StaticOU(), [P75, TwoStateWavefunction.from_p0(0.9)], 5.0, 2000,
                       log_range=(-0.5, 0.5), grid_points=3, refine_steps=2)
    assert info.value.result.objective > 0.01
