"""Physical constants (SI) used throughout the simulator."""

import math

HBAR = 1.054571817e-34          # J s
K_B = 1.380649e-23              # J / K
C_LIGHT = 299792458.0           # m / s
BOHR_RADIUS = 5.29177210903e-11  # m
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

# Rb-87 ground-state values for the clock-state pair used here.
MASS_RB87 = 86.909180527 * ATOMIC_MASS_UNIT          # kg
SCATTERING_LENGTH_UPDOWN = 98.09 * BOHR_RADIUS        # m, inter-state s-wave

TWO_PI = 2.0 * math.pi
