"""Measured and computed reference values for the 20 mm PPMgSLT source.

Used as comparison targets in CLI reports and as test fixtures; nothing in
the library is fitted to them except the degeneracy point used by
calibration.
"""

DEGENERATE_WAVELENGTH = 711.32e-9  # m
DEGENERATE_TEMPERATURE = 22.90  # C
EXTERNAL_ANGLE_DEG = 1.7

# ratio slope d(delta_lambda / bandwidth)/dT, 1/C
THEORY_RATIO_SLOPE = 9.22
MEASURED_RATIO_SLOPE = 2.55

BS_TRANSMITTANCE = 0.6094
BS_REFLECTANCE = 0.3906
MAX_VISIBILITY = 0.9087

# temperature C -> (visibility, delta_lambda m, bandwidth m)
HOM_RESULTS = {
    22.90: (0.90173, None, None),
    25.00: (0.84031, 33.01e-9, 6.16e-9),
    26.90: (0.84211, 44.72e-9, 4.39e-9),
}

# HOM run counting conditions
HOM_PUMP_POWER = 23e-6  # W
HOM_SINGLES = 24_000.0  # Hz
HOM_COINCIDENCES = 1_500.0  # Hz
COINCIDENCE_WINDOW = 19.45e-9  # s
ACCIDENTAL_FRACTION = 0.0072
