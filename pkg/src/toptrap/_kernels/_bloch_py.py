"""Reference pulse integrator built on the generic adaptive stepper.

State layout: the density matrix is flattened into the first n*n complex
slots and one extra slot accumulates the integrated scattering
probability, so the embedded error control covers both.
"""

from __future__ import annotations

import numpy as np

from ..numerics import ode_integrate


def integrate_pulse(h, decay, refill, rho0, duration, rel_tol=1e-8, abs_tol=1e-12):
    """Integrate d(rho)/dt = -i[H,rho] - {D,rho}/2 + sum_k A_k rho A_k^T
    over a square pulse and accumulate epsilon = integral of sum(decay_i *
    rho_ii) dt.

    Returns (rho_final, epsilon, n_steps).
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    decay = np.asarray(decay, dtype=float)
    refill = [np.asarray(a, dtype=float) for a in refill]
    damp = 0.5 * (decay[:, None] + decay[None, :])

    def rhs(t, y):
        rho = y[: n * n].reshape(n, n)
        drho = -1j * (h @ rho - rho @ h) - damp * rho
        for a in refill:
            drho += a @ rho @ a.T
        out = np.empty(n * n + 1, dtype=complex)
        out[: n * n] = drho.ravel()
        out[n * n] = decay @ np.diagonal(rho).real
        return out

    y0 = np.empty(n * n + 1, dtype=complex)
    y0[: n * n] = np.asarray(rho0, dtype=complex).ravel()
    y0[n * n] = 0.0
    res = ode_integrate(rhs, y0, (0.0, float(duration)), rel_tol=rel_tol, abs_tol=abs_tol)
    rho = res.y_final[: n * n].reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)  # scrub roundoff asymmetry
    return rho, float(res.y_final[n * n].real), res.n_steps
