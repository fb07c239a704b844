"""Closed-form and quadrature references used by the test-suite."""
import math

import numpy as np
from scipy import integrate, optimize, stats


def static_born_probability(s0, ratio, law):
    """Long-time P(branch 0) for SUV with frozen noise at G/J = ratio.

    With xi frozen, ds/dt = 2 (J s + G xi)(1 - s^2) has a single interior fixed
    point s* = -G xi / J, which is unstable; s runs to +1 exactly when
    xi > -s0 / ratio.  The probability is the mass of the stationary law
    above that threshold, evaluated here by quadrature.
    """
    threshold = -s0 / ratio
    if law == "ou":
        val, _ = integrate.quad(stats.norm.pdf, threshold, np.inf)
        return val
    if law == "sbm":
        lo = min(max(threshold, -1.0), 1.0)
        val, _ = integrate.quad(lambda x: 0.5, lo, 1.0)
        return val
    raise ValueError(law)


def static_objective(ratio, p0_set, law):
    return max(abs(static_born_probability(2 * p - 1, ratio, law) - p) for p in p0_set)


def static_min_objective(p0_set, law, log_range=(-2.0, 2.0)):
    grid = np.linspace(*log_range, 401)
    vals = [static_objective(10**x, p0_set, law) for x in grid]
    i = int(np.argmin(vals))
    res = optimize.minimize_scalar(lambda x: static_objective(10**x, p0_set, law),
                                   bounds=(grid[max(i - 1, 0)], grid[min(i + 1, 400)]),
                                   method="bounded", options={"xatol": 1e-10})
    return 10**res.x, res.fun


def toy_collapse_time(gamma):
    """1/e crossing of the off-diagonal (1/2) sech(2 gamma t)."""
    return math.acosh(math.e) / (2 * gamma)


def markov_dephasing(offdiag0, gamma, t):
    """-gamma [L, [L, rho]] with L = tau3 kills coherences at rate 4 gamma."""
    return offdiag0 * np.exp(-4 * gamma * t)


def exponential_kernel_dephasing(offdiag0, gamma, tau, t):
    """Coherence under the time-integrated exponential kernel.

    The effective rate at time t is gamma (1 - exp(-t/tau)); integrating it
    gives the exponent 4 gamma (t - tau (1 - exp(-t/tau))).
    """
    return offdiag0 * np.exp(-4 * gamma * (t - tau * (1 - np.exp(-t / tau))))
