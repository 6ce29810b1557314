"""Physical constants for the Rb-87 TOP-trap toolkit.

Values follow CODATA 2018 and standard Rb-87 line data.  Interface units
are gauss and centimetres (the units trap parameters are quoted in);
conversion to SI happens inside the frequency and force computations.
"""

import math

# SI fundamentals
PLANCK = 6.62607015e-34            # J s (exact)
HBAR = PLANCK / (2.0 * math.pi)    # J s
BOHR_MAGNETON = 9.2740100783e-24   # J/T
STANDARD_GRAVITY = 9.80665         # m/s^2

# Rb-87
MASS_RB87 = 86.909180531 * 1.66053906660e-27   # kg

# First-order Zeeman Lande factors, 5S1/2 F=2 / F=1 and 5P1/2 F'=2
GF_GROUND_F2 = 0.5
GF_GROUND_F1 = -0.5
GF_EXCITED_FP2 = 1.0 / 6.0

# D1 line (5S1/2 -> 5P1/2)
GAMMA_D1 = 2.0 * math.pi * 5.7500e6   # rad/s natural linewidth
ISAT_D1 = 44.876                      # W/m^2 saturation intensity

# Unit conversions
GAUSS_TO_TESLA = 1e-4
CM_TO_M = 1e-2

# Default TOP drive frequencies
OMEGA1_DEFAULT = 2.0 * math.pi * 12.8e3   # rad/s, bias rotation
OMEGA2_DEFAULT = 2.0 * math.pi * 1.0e3    # rad/s, weak-axis quadrupole
