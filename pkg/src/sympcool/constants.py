"""Physical constants and the reference parameter sets of the Be+/Mg+ experiment.

All frequencies in this package are angular (rad/s) unless a name ends in
``_hz``. CODATA values come from :mod:`scipy.constants`.
"""
from math import pi

from scipy import constants as _c

HBAR = _c.hbar
EPSILON_0 = _c.epsilon_0
ELEMENTARY_CHARGE = _c.e
AMU = _c.atomic_mass
ELECTRON_MASS = _c.m_e
SPEED_OF_LIGHT = _c.c

TWO_PI = 2.0 * pi
COULOMB_K = 1.0 / (4.0 * pi * EPSILON_0)

# neutral atomic masses in u; the ion mass drops one electron
BE9_ATOMIC_MASS_U = 9.0121831
MG24_ATOMIC_MASS_U = 23.985041697

BE9_WAVELENGTH = 313e-9
MG24_WAVELENGTH = 280e-9
BE9_LINEWIDTH = TWO_PI * 19.4e6
MG24_LINEWIDTH = TWO_PI * 41.3e6

# trap of the micromotion study
OMEGA_RF_PSEUDO = TWO_PI * 9.0e6
OMEGA_AXIAL = TWO_PI * 2.8e6
OMEGA_STATIC_2 = TWO_PI * 2.0e6
OMEGA_STATIC_3 = TWO_PI * 3.4e6
OMEGA_RF_DRIVE = TWO_PI * 110e6

# axial mode frequencies quoted for the cooling experiment
COM_FREQUENCY = TWO_PI * 2.05e6
STRETCH_FREQUENCY = TWO_PI * 4.3e6
COM_LAMB_DICKE = 0.3
STRETCH_LAMB_DICKE = 0.082

# Mg+ Raman cooling
RAMAN_RABI = TWO_PI * 30e6
RAMAN_DETUNING = TWO_PI * 750e6
ZEEMAN_SPLITTING = TWO_PI * 40e6
COM_PULSE = 2e-6
STRETCH_PULSE = 5e-6
COM_INITIAL_NBAR = 4.0
STRETCH_INITIAL_NBAR = 1.7
COOLING_CYCLES = 30

QUANTIZATION_ANGLE = pi / 4


def wavelength_to_angular(wavelength):
    """Optical angular frequency for a vacuum wavelength in metres."""
    return TWO_PI * SPEED_OF_LIGHT / wavelength
