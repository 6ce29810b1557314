"""Pulse-integrator kernel selection.

The master-equation integration over one light pulse is the hot loop of
the dark-state simulator.  A Cython extension (``_bloch_cy``) provides a
compiled implementation; the numpy version in ``_bloch_py`` is the
reference and fallback, selected automatically when the extension was not
built.  Set ``TOPTRAP_PURE=1`` to force the fallback.

Both backends share the contract

    integrate_pulse(h, decay, refill, rho0, duration, rel_tol, abs_tol)
        -> (rho_final, epsilon, n_steps)

with ``h`` the rotating-frame Hamiltonian (rad/s, complex Hermitian),
``decay`` the per-state total decay rate (rad/s), ``refill`` a stack of
real jump operators feeding spontaneous-emission population back into
dark sink states, and ``epsilon`` the integrated photon-scattering
probability over the pulse.
"""

import os

from . import _bloch_py


def _want_pure() -> bool:
    return os.environ.get("TOPTRAP_PURE", "").strip() not in ("", "0")


if _want_pure():
    integrate_pulse = _bloch_py.integrate_pulse
    BACKEND = "python"
else:
    try:
        from . import _bloch_cy

        integrate_pulse = _bloch_cy.integrate_pulse
        BACKEND = "cython"
    except ImportError:
        integrate_pulse = _bloch_py.integrate_pulse
        BACKEND = "python"


def available_backends() -> dict:
    """Name -> integrate_pulse callable for every importable backend."""
    backends = {"python": _bloch_py.integrate_pulse}
    try:
        from . import _bloch_cy

        backends["cython"] = _bloch_cy.integrate_pulse
    except ImportError:
        pass
    return backends
