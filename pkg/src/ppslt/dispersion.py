"""Extraordinary-index dispersion of (MgO:)stoichiometric LiTaO3.

Only the extraordinary index is modelled: in type-0 interaction pump, signal
and idler share the e-polarization. Wavelengths are in meters at the public
surface; the Sellmeier forms themselves work in micrometers.

Two published temperature-dependent fits are available through ``form_id``:

``bruner2003``
    A. Bruner et al., Opt. Lett. 28, 194 (2003)::

        n^2 = A + (B + b(T))/(l^2 - (C + c(T))^2) + E/(l^2 - F^2)
                + G/(l^2 - H^2) + D l^2
        b(T) = b0 (T + 273.15)^2,  c(T) = c0 (T + 273.15)^2

    coefficients ``[A, B, C, D, E, F, G, H, b0, c0]``.

``dolev2009``
    I. Dolev et al., Appl. Phys. B 96, 423 (2009), 0.5 mol% MgO:SLT::

        f = (T - 24.5)(T + 570.82)
        n^2 = a1 + b1 f + (a2 + b2 f)/(l^2 - (a3 + b3 f)^2)
                + (a4 + b4 f)/(l^2 - (a5 + b5 f)^2) - a6 l^2

    coefficients ``[a1..a6, b1..b5]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

ZERO_CELSIUS = 273.15


def _bruner2003(lam_um, temp_c, coef):
    A, B, C, D, E, F, G, H, b0, c0 = coef
    tk2 = (temp_c + ZERO_CELSIUS) ** 2
    l2 = lam_um * lam_um
    return (A + (B + b0 * tk2) / (l2 - (C + c0 * tk2) ** 2) + E / (l2 - F * F)
            + G / (l2 - H * H) + D * l2)


def _dolev2009(lam_um, temp_c, coef):
    a1, a2, a3, a4, a5, a6, b1, b2, b3, b4, b5 = coef
    f = (temp_c - 24.5) * (temp_c + 24.5 + 2 * 273.16)
    l2 = lam_um * lam_um
    return (a1 + b1 * f + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2)
            + (a4 + b4 * f) / (l2 - (a5 + b5 * f) ** 2) - a6 * l2)


# form_id -> (n^2 evaluator, number of coefficients)
SELLMEIER_FORMS: dict[str, tuple[Callable, int]] = {
    "bruner2003": (_bruner2003, 10),
    "dolev2009": (_dolev2009, 11),
}


@dataclass(frozen=True)
class SellmeierSet:
    """Coefficients for one temperature-dependent Sellmeier fit.

    ``valid_wavelength_range`` is in micrometers, ``valid_temperature_range``
    in degrees Celsius.
    """

    form_id: str
    coefficients: tuple[float, ...]
    valid_wavelength_range: tuple[float, float]
    valid_temperature_range: tuple[float, float]
    source_note: str = ""

    def __post_init__(self):
        if self.form_id not in SELLMEIER_FORMS:
            raise DomainError(
                f"unknown Sellmeier form_id {self.form_id!r}; "
                f"known: {sorted(SELLMEIER_FORMS)}")
        n_coef = SELLMEIER_FORMS[self.form_id][1]
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if len(self.coefficients) != n_coef:
            raise DomainError(
                f"form {self.form_id} takes {n_coef} coefficients, "
                f"got {len(self.coefficients)}")
        lo, hi = self.valid_wavelength_range
        tlo, thi = self.valid_temperature_range
        if not (0 < lo < hi) or not (tlo < thi):
            raise DomainError("Sellmeier validity ranges must be increasing (and wavelengths > 0)")


@dataclass(frozen=True)
class ThermalExpansion:
    alpha: float  # 1/degC
    reference_temperature: float = 25.0


@dataclass(frozen=True)
class CrystalSpec:
    """A periodically poled crystal: geometry, poling and dispersion.

    Lengths in meters. ``temp_offset`` is added to the nominal temperature
    before every dispersion query (see
    :func:`ppslt.phasematch.calibrate_temperature_offset`).
    """

    length: float
    poling_period: float
    qpm_order: int
    sellmeier: SellmeierSet
    thermal_expansion: Optional[ThermalExpansion] = None
    temp_offset: float = 0.0
    d33: float = 13.8  # pm/V, metadata only
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError(f"crystal length must be > 0, got {self.length}")
        if not self.poling_period > 0:
            raise DomainError(f"poling period must be > 0, got {self.poling_period}")
        if int(self.qpm_order) != self.qpm_order or self.qpm_order < 1:
            raise DomainError(f"QPM order must be a positive integer, got {self.qpm_order}")
        tlo, thi = self.sellmeier.valid_temperature_range
        for t in (tlo, thi):
            if self.period_at(t) <= 0:
                raise DomainError("thermal expansion makes the poling period non-positive in range")

    def period_at(self, temperature):
        """Poling period at the nominal crystal temperature."""
        te = self.thermal_expansion
        if te is None:
            return self.poling_period
        return self.poling_period * (1.0 + te.alpha * (temperature - te.reference_temperature))

    def grating_wavevector(self, temperature):
        return 2 * math.pi * self.qpm_order / self.period_at(temperature)

    def index(self, wavelength, temperature):
        """n_e with the calibration offset applied."""
        return refractive_index(wavelength, temperature + self.temp_offset, self.sellmeier)

    def with_offset(self, temp_offset: float) -> "CrystalSpec":
        return replace(self, temp_offset=float(temp_offset))


def _check_domain(wavelength, temperature, s: SellmeierSet):
    lam_um = np.asarray(wavelength, dtype=float) * 1e6
    temp = np.asarray(temperature, dtype=float)
    lo, hi = s.valid_wavelength_range
    tlo, thi = s.valid_temperature_range
    if np.any(~np.isfinite(lam_um)) or np.any(~np.isfinite(temp)):
        raise DomainError("wavelength and temperature must be finite")
    if np.any(lam_um < lo):
        raise DomainError(f"wavelength {lam_um.min() * 1e3:.4f} nm below lower bound {lo * 1e3:.1f} nm")
    if np.any(lam_um > hi):
        raise DomainError(f"wavelength {lam_um.max() * 1e3:.4f} nm above upper bound {hi * 1e3:.1f} nm")
    if np.any(temp < tlo):
        raise DomainError(f"temperature {temp.min():.4f} C below lower bound {tlo:g} C")
    if np.any(temp > thi):
        raise DomainError(f"temperature {temp.max():.4f} C above upper bound {thi:g} C")
    return lam_um, temp


def refractive_index(wavelength, temperature, sellmeier: SellmeierSet):
    """Extraordinary index at vacuum ``wavelength`` [m] and ``temperature`` [degC].

    Accepts scalars or broadcastable arrays; raises :class:`DomainError`
    naming the violated bound when outside the set's validity ranges.
    """
    lam_um, temp = _check_domain(wavelength, temperature, sellmeier)
    func = SELLMEIER_FORMS[sellmeier.form_id][0]
    n2 = func(lam_um, temp, sellmeier.coefficients)
    n = np.sqrt(n2)
    return float(n) if np.ndim(n) == 0 else n


def wavevector(wavelength, temperature, crystal: CrystalSpec):
    """k = 2 pi n_e / lambda in rad/m."""
    return 2 * np.pi * crystal.index(wavelength, temperature) / np.asarray(wavelength, dtype=float)


def external_to_internal_angle(theta_ext, wavelength, temperature, crystal: CrystalSpec):
    """Refraction at the exit face: sin(theta_ext) = n_e sin(theta_int)."""
    if np.any(np.abs(theta_ext) >= np.pi / 2):
        raise DomainError("external angle must satisfy |theta| < pi/2")
    n = crystal.index(wavelength, temperature)
    return np.arcsin(np.sin(theta_ext) / n)


def internal_to_external_angle(theta_int, wavelength, temperature, crystal: CrystalSpec):
    n = crystal.index(wavelength, temperature)
    s = n * np.sin(theta_int)
    if np.any(np.abs(s) >= 1):
        raise DomainError("internal angle beyond total internal reflection")
    return np.arcsin(s)
