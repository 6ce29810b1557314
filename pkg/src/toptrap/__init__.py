"""Simulation and calibration toolkit for time-orbiting-potential traps.

Subpackages by task: ``fields`` models the rotating trap field and its
time average, ``calibrate`` synthesizes and fits the stroboscopic RF and
trap-motion measurements, ``polarization`` handles Stokes/Mueller optics,
``bloch`` runs the 13-state dark-state polarimetry simulator, and
``numerics`` carries the shared fitting and integration substrate.  The
``toptrap`` command line fronts all of it.
"""

__version__ = "0.1.0"
