# Linear master equations can still signal.
#
# Bob's reduced state changes under a GKSL generator unless the jump
# operators act on Alice's side only.  This script walks through the
# locality audit, the explicit reduced generator and the toy model.
import numpy as np

from sls_witness.core import TAU1, TAU3, embed_logical, random_operator, random_state
from sls_witness.master import (locality_audit, reduced_generator_A, toy_gksl_weights,
                                toy_kraus_check, verify_toy_gksl)

rng = np.random.default_rng(0)
sz = np.diag([1.0, -1.0])

# Operator-Schmidt rank across the A:B cut decides the class.
for name, op in [("sigma_z (x) I", np.kron(sz, np.eye(2))),
                 ("sigma_z (x) sigma_z", np.kron(sz, sz)),
                 ("toy tau3 on |00>,|11>", embed_logical(TAU3)),
                 ("toy tau1 on |00>,|11>", embed_logical(TAU1))]:
    print(f"{name:24s} -> {locality_audit(op, (2, 2))}")

# Tr_A of the dissipator for an entangled pure state.
psi = random_state(4, rng).reshape(2, 2)
LA = random_operator(2, rng)
print("\n|Tr_A Lambda(rho)| with L_B = I      :", np.abs(reduced_generator_A(psi, LA, np.eye(2))).max())
print("|Tr_A Lambda(rho)| with L_B = sigma_z:", np.abs(reduced_generator_A(psi, LA, sz)).max().round(4))

# The deterministic toy model: rho(t) follows a GKSL equation with
# time-dependent weights, one of them negative.
for t in (0.1, 0.5, 2.0):
    g1, g2 = toy_gksl_weights(t, 1.0)
    print(f"t = {t}: Gamma1 = {g1:.4f}, Gamma2 = {g2:.4f}")
print("generator vs exact d rho/dt:", verify_toy_gksl(1.0, np.linspace(0.1, 3.0, 30)))

# Small-step Kraus form.  The identity holds to O(dt^2) only if the weights
# are squared formally; with the real adjoint the negative Gamma2 shows up.
for dt in (1e-3, 5e-4):
    r = toy_kraus_check(1.0, dt, 1.0)
    print(f"dt = {dt}: formal defect {r.identity_defect:.2e}, adjoint defect "
          f"{r.identity_defect_adjoint:.2e}, K3 weight real: {r.k3_weight_real}")
