# Signal-locality witness: does Bob's half of the pair notice Alice's collapse?
#
# For a Schmidt state a0|00> + a1|11> the only thing Bob can ever measure is
# the ensemble average of |a0|^2.  If the collapse dynamics change that
# average, a distant observer could read off whether the collapse happened.
import math

from sls_witness.core import TwoStateWavefunction
from sls_witness.ensemble import compute_verdict, run_ensemble
from sls_witness.models import CSL, SUV, ToyDeterministic, TrajectoryConfig
from sls_witness.noise import StaticOU

psi0 = TwoStateWavefunction.from_p0(math.cos(math.pi / 6) ** 2)  # |a0|^2 = 0.75
print("initial |a0|^2 =", psi0.p0)

# White-noise CSL: the Ito equation makes |a0|^2 a martingale, so the
# ensemble mean should sit at 0.75 up to sampling noise.
cfg = TrajectoryConfig.uniform(psi0, horizon=3.0, dt=1e-3, record_points=7)
w, _ = run_ensemble(CSL(gamma=1.0), cfg, n_traj=20_000, master_seed=1)
print("\nCSL  t      mean |a0|^2   stderr")
for t, m, e in zip(w.times, w.mean_p0, w.stderr):
    print(f"     {t:4.1f}   {m:.5f}      {e:.5f}")
print("verdict:", compute_verdict(w).verdict)

# The deterministic toy model pushes every state toward branch 0.
# No noise at all, so the standard error is exactly zero.
w, _ = run_ensemble(ToyDeterministic(gamma=1.0), cfg, n_traj=100, master_seed=1)
v = compute_verdict(w)
print("\ntoy model mean |a0|^2 at the end:", round(float(w.mean_p0[-1]), 6))
print("verdict:", v.verdict, "max |z| =", v.max_abs_z)

# A frozen Gaussian noise value per trajectory.  No choice of G/J makes the
# long-time average equal to 0.75 for every starting state.
cfg = TrajectoryConfig.uniform(psi0, horizon=10.0, dt=1e-2, record_points=5)
for ratio in (0.5, 1.0, 2.0):
    w, _ = run_ensemble(SUV(J=1.0, G=ratio, noise=StaticOU()), cfg, 20_000, master_seed=2)
    print(f"\nstatic OU, G/J = {ratio}: final mean |a0|^2 = {w.mean_p0[-1]:.4f}"
          f" +/- {w.stderr[-1]:.4f}  ->  {compute_verdict(w).verdict}")
