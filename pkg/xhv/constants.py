"""The module contains physical constants and unit conversions.

Internal units are SI (Pa, m, kg, s, J). The boundary units quoted by vacuum
practitioners (mbar, litres, centimetres, eV) are converted here and nowhere
else.
"""

from scipy import constants

BOLTZMANN = constants.k  # J/K
BOLTZMANN_EV = constants.k / constants.e  # eV/K
ELEMENTARY_CHARGE = constants.e  # C
EPSILON_0 = constants.epsilon_0  # F/m
AMU = constants.atomic_mass  # kg
EV = constants.e  # J

# 1 mbar = 100 Pa, 1 l = 1e-3 m^3, so 1 mbar l = 0.1 Pa m^3.
MBAR = 100.0
LITRE = 1.0e-3
CM = 1.0e-2
CM2 = 1.0e-4
MBAR_LITRE = MBAR * LITRE
INCH = 0.0254

HOUR = 3600.0
DAY = 86400.0
YEAR = 365.25 * DAY

# mbar l s^-1 cm^-2 -> Pa m^3 s^-1 m^-2
SPECIFIC_OUTGASSING_SI = MBAR_LITRE / CM2

H2_MASS_AMU = 2.016
ROOM_TEMPERATURE = 293.0


def mbar_to_pa(value):
    """Convert a pressure from mbar to Pa."""
    return value * MBAR


def pa_to_mbar(value):
    """Convert a pressure from Pa to mbar."""
    return value / MBAR


def outgassing_to_si(value):
    """Convert a specific outgassing rate from mbar l s^-1 cm^-2 to Pa m s^-1."""
    return value * SPECIFIC_OUTGASSING_SI


def outgassing_from_si(value):
    """Convert a specific outgassing rate from Pa m s^-1 to mbar l s^-1 cm^-2."""
    return value / SPECIFIC_OUTGASSING_SI


def speed_to_litres(value):
    """Convert a pumping speed from m^3/s to l/s."""
    return value / LITRE


def speed_from_litres(value):
    """Convert a pumping speed from l/s to m^3/s."""
    return value * LITRE
