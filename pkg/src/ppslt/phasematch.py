"""Noncollinear type-0 quasi-phase matching, emission spectra and tuning curves.

Geometry: the pump travels along z; signal and idler leave on opposite sides
of it. Transverse momentum is conserved exactly
(``k_s sin(theta_s) = k_i sin(theta_i)``) and the longitudinal mismatch is

    dkz = k_p - k_s cos(theta_s) - k_i cos(theta_i) - 2 pi m / Lambda(T)

How the signal angle is tied to the collection direction is selected by
``geometry``:

``"symmetric"`` (default)
    The full opening angle between the two photons is held at ``2 theta0``,
    with ``theta0`` the internal angle of the external collection direction
    at degeneracy. The mismatch is then invariant under signal <-> idler
    exchange, so roots come in exact energy-conjugate pairs and merge at
    exactly twice the pump wavelength.
``"fixed_signal"``
    The signal arm is pinned to the external collection angle refracted at
    the signal wavelength; the idler angle follows from transverse momentum.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.optimize import brentq, minimize_scalar

from .dispersion import CrystalSpec, external_to_internal_angle, wavevector
from .errors import CalibrationError, DomainError, GeometryError, NotFoundError, ResolutionError

GEOMETRIES = ("symmetric", "fixed_signal")
DEFAULT_SEARCH_BAND = (500e-9, 1100e-9)
ROOT_TOLERANCE = 1e-3  # rad/m
MIN_POINTS_PER_LOBE = 8

# sinc^2(x) = 1/2
SINC2_HALF_MAX = brentq(lambda x: (math.sin(x) / x) ** 2 - 0.5, 1.0, 2.0, xtol=1e-15)


@dataclass(frozen=True)
class PumpSpec:
    wavelength: float = 355.66e-9
    power: float = 23e-6  # W
    linewidth: float = 1e6  # Hz, metadata; the pump is treated as monochromatic

    def __post_init__(self):
        if not self.wavelength > 0:
            raise DomainError(f"pump wavelength must be > 0, got {self.wavelength}")
        if self.power < 0:
            raise DomainError(f"pump power must be >= 0, got {self.power}")

    @property
    def omega(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.wavelength

    @property
    def degenerate_wavelength(self) -> float:
        return 2 * self.wavelength


@dataclass(frozen=True)
class PhaseMatchSolution:
    signal_wavelength: float
    idler_wavelength: float
    signal_angle: float  # internal, rad
    idler_angle: float  # internal, rad
    residual: float  # dkz at the root, rad/m
    temperature: float


def idler_wavelength(signal_wavelength, pump_wavelength):
    """Energy-conjugate wavelength: 1/l_i = 1/l_p - 1/l_s."""
    return 1.0 / (1.0 / pump_wavelength - 1.0 / np.asarray(signal_wavelength, dtype=float))


def _mismatch_terms(signal_wavelength, signal_angle, temperature, crystal, pump):
    lam_s = np.asarray(signal_wavelength, dtype=float)
    if np.any(lam_s <= pump.wavelength):
        raise DomainError("signal wavelength must exceed the pump wavelength")
    lam_i = idler_wavelength(lam_s, pump.wavelength)
    k_p = wavevector(pump.wavelength, temperature, crystal)
    k_s = wavevector(lam_s, temperature, crystal)
    k_i = wavevector(lam_i, temperature, crystal)
    transverse = k_s * np.sin(signal_angle)
    if np.any(np.abs(transverse) > k_i):
        raise GeometryError("transverse momentum of the signal exceeds the idler wavevector")
    idler_angle = np.arcsin(transverse / k_i)
    dkz = (k_p - k_s * np.cos(signal_angle) - k_i * np.cos(idler_angle)
           - crystal.grating_wavevector(temperature))
    return dkz, lam_i, idler_angle


def phase_mismatch(signal_wavelength, signal_angle, temperature, crystal: CrystalSpec,
                   pump: PumpSpec):
    """Longitudinal phase mismatch in rad/m for a given internal signal angle."""
    return _mismatch_terms(signal_wavelength, signal_angle, temperature, crystal, pump)[0]


def signal_angle(signal_wavelength, theta_ext, temperature, crystal, pump, geometry="symmetric"):
    """Internal signal angle implied by the collection geometry."""
    if geometry == "fixed_signal":
        return external_to_internal_angle(theta_ext, signal_wavelength, temperature, crystal)
    if geometry != "symmetric":
        raise DomainError(f"unknown geometry {geometry!r}; expected one of {GEOMETRIES}")
    theta0 = external_to_internal_angle(theta_ext, pump.degenerate_wavelength, temperature, crystal)
    lam_s = np.asarray(signal_wavelength, dtype=float)
    k_s = wavevector(lam_s, temperature, crystal)
    k_i = wavevector(idler_wavelength(lam_s, pump.wavelength), temperature, crystal)
    # k_s sin(t) = k_i sin(2 theta0 - t)
    return np.arctan2(k_i * np.sin(2 * theta0), k_s + k_i * np.cos(2 * theta0))


def mismatch(signal_wavelength, theta_ext, temperature, crystal, pump, geometry="symmetric"):
    """dkz(lambda_s) at a fixed external collection angle."""
    theta_s = signal_angle(signal_wavelength, theta_ext, temperature, crystal, pump, geometry)
    return phase_mismatch(signal_wavelength, theta_s, temperature, crystal, pump)


def _solution(lam, theta_ext, temperature, crystal, pump, geometry):
    theta_s = float(signal_angle(lam, theta_ext, temperature, crystal, pump, geometry))
    dkz, lam_i, theta_i = _mismatch_terms(lam, theta_s, temperature, crystal, pump)
    return PhaseMatchSolution(float(lam), float(lam_i), theta_s, float(theta_i), float(dkz),
                              float(temperature))


def solve_signal_wavelengths(theta_ext, temperature, crystal: CrystalSpec, pump: PumpSpec,
                             search_band=DEFAULT_SEARCH_BAND, n_scan=2000,
                             geometry="symmetric", tol=ROOT_TOLERANCE):
    """All roots of dkz(lambda_s) = 0 inside ``search_band``.

    Bracketing uses a uniform scan plus the refined maximum of dkz (so close
    root pairs near degeneracy are not lost between scan points); each
    bracket is then refined with Brent's method. Returns an empty list when
    there is no root, a single solution when the maximum just touches zero.
    """
    lo, hi = search_band
    if not (pump.wavelength < lo < hi):
        raise DomainError("search band must be increasing and above the pump wavelength")
    f = lambda lam: float(mismatch(lam, theta_ext, temperature, crystal, pump, geometry))

    grid = np.linspace(lo, hi, int(n_scan))
    values = mismatch(grid, theta_ext, temperature, crystal, pump, geometry)
    k = int(np.argmax(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    peak = minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                           options={"xatol": 1e-16})
    lam_peak, val_peak = float(peak.x), -float(peak.fun)
    if val_peak < values[k]:
        lam_peak, val_peak = float(grid[k]), float(values[k])
    extra = [lam_peak]
    if lo < pump.degenerate_wavelength < hi:
        extra.append(pump.degenerate_wavelength)
    for lam in extra:
        j = int(np.searchsorted(grid, lam))
        if j < len(grid) and grid[j] == lam:
            continue
        grid = np.insert(grid, j, lam)
        values = np.insert(values, j, f(lam))

    if val_peak < -tol:
        return []
    if abs(val_peak) <= tol:
        # touching root: degenerate in the symmetric geometry
        lam0 = pump.degenerate_wavelength if (
            geometry == "symmetric" and abs(f(pump.degenerate_wavelength)) <= tol) else lam_peak
        return [_solution(lam0, theta_ext, temperature, crystal, pump, geometry)]

    roots = []
    sign = np.sign(values)
    for j in np.nonzero(sign[:-1] * sign[1:] <= 0)[0]:
        x0, x1 = grid[j], grid[j + 1]
        if values[j] == 0:
            root = x0
        elif values[j + 1] == 0:
            continue
        else:
            root = brentq(f, x0, x1, xtol=1e-22, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(root)
    return [_solution(r, theta_ext, temperature, crystal, pump, geometry) for r in roots]


@dataclass(frozen=True)
class Lobe:
    center: float  # m
    fwhm: float  # m
    n_above_half: int


@dataclass(frozen=True, eq=False)
class PhotonSpectrum:
    """Single-arm spectral density sampled on a wavelength grid (meters, 1/m)."""

    wavelengths: np.ndarray
    density: np.ndarray
    shape: str = "sampled"
    lobes: tuple = ()
    temperature: Optional[float] = None

    def __post_init__(self):
        lam = np.asarray(self.wavelengths, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if lam.ndim != 1 or lam.shape != dens.shape:
            raise DomainError("wavelength grid and density must be 1-D arrays of equal length")
        if len(lam) < 16:
            raise DomainError("a spectrum needs at least 16 samples")
        if np.any(np.diff(lam) <= 0):
            raise DomainError("wavelength grid must be strictly increasing")
        if np.any(dens < 0):
            raise DomainError("spectral density must be nonnegative")
        if self.shape not in ("sinc2", "gaussian", "sampled"):
            raise DomainError(f"unknown spectrum shape {self.shape!r}")
        object.__setattr__(self, "wavelengths", lam)
        object.__setattr__(self, "density", dens)

    @property
    def bimodal(self) -> bool:
        return len(self.lobes) >= 2

    @property
    def center_wavelength(self) -> float:
        """Center of the signal (shortest-wavelength) lobe."""
        if self.lobes:
            return self.lobes[0].center
        return float(np.trapezoid(self.wavelengths * self.density, self.wavelengths)
                     / np.trapezoid(self.density, self.wavelengths))

    @property
    def fwhm(self) -> float:
        return fwhm_bandwidth(self, "signal")

    def normalized(self) -> "PhotonSpectrum":
        area = np.trapezoid(self.density, self.wavelengths)
        if not area > 0:
            raise DomainError("cannot normalize a spectrum with zero area")
        return PhotonSpectrum(self.wavelengths, self.density / area, self.shape, self.lobes,
                              self.temperature)


def _crossing(x, y, i_in, i_out, level):
    # linear interpolation of the level crossing between an inside and an outside sample
    return x[i_in] + (level - y[i_in]) * (x[i_out] - x[i_in]) / (y[i_out] - y[i_in])


def find_lobes(wavelengths, density):
    """Lobes = connected regions above half of the global maximum.

    Each lobe's FWHM is measured at half of its own peak, with linear
    interpolation between the bracketing samples.
    """
    x = np.asarray(wavelengths, dtype=float)
    y = np.asarray(density, dtype=float)
    above = y >= 0.5 * y.max()
    edges = np.diff(above.astype(int))
    starts = list(np.nonzero(edges == 1)[0] + 1)
    stops = list(np.nonzero(edges == -1)[0] + 1)
    if above[0]:
        starts.insert(0, 0)
    if above[-1]:
        stops.append(len(y))
    lobes = []
    for s, e in zip(starts, stops):
        p = s + int(np.argmax(y[s:e]))
        half = 0.5 * y[p]
        left = p
        while left > 0 and y[left - 1] >= half:
            left -= 1
        right = p
        while right < len(y) - 1 and y[right + 1] >= half:
            right += 1
        if left == 0 or right == len(y) - 1:
            raise ResolutionError("lobe is truncated by the grid edge")
        x_lo = _crossing(x, y, left, left - 1, half)
        x_hi = _crossing(x, y, right, right + 1, half)
        center = x[p]
        if 0 < p < len(y) - 1:
            denom = y[p - 1] - 2 * y[p] + y[p + 1]
            if denom < 0:
                shift = 0.5 * (y[p - 1] - y[p + 1]) / denom
                center = x[p] + shift * 0.5 * (x[p + 1] - x[p - 1])
        lobes.append(Lobe(float(center), float(x_hi - x_lo), right - left + 1))
    return tuple(lobes)


def fwhm_bandwidth(spectrum: PhotonSpectrum, lobe="signal"):
    """FWHM in meters of one lobe: ``"signal"`` (shortest wavelength),
    ``"idler"`` (longest) or an integer lobe index."""
    lobes = find_lobes(spectrum.wavelengths, spectrum.density)
    if lobe == "signal":
        chosen = lobes[0]
    elif lobe == "idler":
        chosen = lobes[-1]
    else:
        try:
            chosen = lobes[int(lobe)]
        except (IndexError, ValueError, TypeError):
            raise ResolutionError(f"lobe {lobe!r} not present ({len(lobes)} resolved)") from None
    if chosen.n_above_half < MIN_POINTS_PER_LOBE:
        raise ResolutionError(
            f"lobe at {chosen.center * 1e9:.3f} nm has only {chosen.n_above_half} samples "
            f"above half maximum (need {MIN_POINTS_PER_LOBE})")
    return chosen.fwhm


def auto_grid(theta_ext, temperature, crystal, pump, geometry="symmetric", n_points=8192,
              pad=30e-9, search_band=DEFAULT_SEARCH_BAND):
    """Wavelength grid spanning all roots plus ``pad`` on either side."""
    sols = solve_signal_wavelengths(theta_ext, temperature, crystal, pump, search_band,
                                    geometry=geometry)
    lams = [s.signal_wavelength for s in sols] or [pump.degenerate_wavelength]
    return np.linspace(min(lams) - pad, max(lams) + pad, int(n_points))


def emission_spectrum(theta_ext, temperature, crystal: CrystalSpec, pump: PumpSpec, grid=None,
                      geometry="symmetric", angular_halfwidth=0.0, n_angular=21):
    """Normalized sinc^2 phase-matching spectrum seen in the collection arm.

    ``angular_halfwidth`` (rad, external) averages the spectrum over a
    top-hat range of collection angles; 0 means a pencil direction.
    """
    if grid is None:
        grid = auto_grid(theta_ext, temperature, crystal, pump, geometry)
    else:
        grid = np.asarray(grid, dtype=float)
        sols = solve_signal_wavelengths(theta_ext, temperature, crystal, pump,
                                        (min(grid[0], DEFAULT_SEARCH_BAND[0]),
                                         max(grid[-1], DEFAULT_SEARCH_BAND[1])),
                                        geometry=geometry)
        for s in sols:
            if not grid[0] <= s.signal_wavelength <= grid[-1]:
                raise DomainError(
                    f"grid {grid[0] * 1e9:.4f}-{grid[-1] * 1e9:.4f} nm does not span the root "
                    f"at {s.signal_wavelength * 1e9:.4f} nm")
    if angular_halfwidth > 0:
        angles = theta_ext + np.linspace(-angular_halfwidth, angular_halfwidth, int(n_angular))
    else:
        angles = [theta_ext]
    half_length = 0.5 * crystal.length
    density = np.zeros_like(grid)
    for theta in angles:
        dkz = mismatch(grid, theta, temperature, crystal, pump, geometry)
        density += np.sinc(dkz * half_length / np.pi) ** 2
    density /= len(angles)
    density /= np.trapezoid(density, grid)
    lobes = find_lobes(grid, density)
    for lb in lobes:
        if lb.n_above_half < MIN_POINTS_PER_LOBE:
            raise ResolutionError(
                f"grid too coarse: lobe at {lb.center * 1e9:.3f} nm has {lb.n_above_half} "
                f"samples above half maximum (need {MIN_POINTS_PER_LOBE})")
    return PhotonSpectrum(grid, density, "sinc2", lobes, float(temperature))


def degeneracy_temperature(theta_ext, crystal: CrystalSpec, pump: PumpSpec, temperature_band,
                           geometry="symmetric", scan_step=0.25, xtol=1e-7):
    """Temperature [degC] at which dkz(2 lambda_p) = 0, i.e. where the two roots merge."""
    lam0 = pump.degenerate_wavelength
    g = lambda t: float(mismatch(lam0, theta_ext, t, crystal, pump, geometry))
    t_lo, t_hi = temperature_band
    n = max(int(math.ceil((t_hi - t_lo) / scan_step)), 1) + 1
    temps = np.linspace(t_lo, t_hi, n)
    vals = [g(t) for t in temps]
    for j in range(n):
        if abs(vals[j]) <= ROOT_TOLERANCE:
            return float(temps[j])
        if j + 1 < n and vals[j] * vals[j + 1] < 0:
            return float(brentq(g, temps[j], temps[j + 1], xtol=xtol))
    raise NotFoundError(f"degeneracy not bracketed in {t_lo:g}-{t_hi:g} C")


def calibrate_temperature_offset(crystal: CrystalSpec, pump: PumpSpec, theta_ext,
                                 target_wavelength=711.32e-9, target_temperature=22.90,
                                 geometry="symmetric", n_scan=400):
    """Offset [degC] that puts degeneracy at ``target_temperature``.

    The returned value replaces (not adds to) ``crystal.temp_offset``; apply
    it with ``crystal.with_offset(dt)``.
    """
    lam0 = pump.degenerate_wavelength
    if abs(target_wavelength - lam0) > 1e-9 * lam0:
        raise DomainError(
            f"degeneracy must occur at 2 x pump = {lam0 * 1e9:.4f} nm, "
            f"target was {target_wavelength * 1e9:.4f} nm")

    def h(offset):
        return float(mismatch(lam0, theta_ext, target_temperature, crystal.with_offset(offset),
                              pump, geometry))

    if abs(h(0.0)) <= ROOT_TOLERANCE:
        return 0.0
    tlo, thi = crystal.sellmeier.valid_temperature_range
    offsets = np.linspace(tlo - target_temperature, thi - target_temperature, int(n_scan))
    vals = np.array([h(o) for o in offsets])
    brackets = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if len(brackets) == 0:
        raise CalibrationError("no degeneracy inside the dispersion validity band")
    # prefer the smallest correction
    j = min(brackets, key=lambda i: abs(offsets[i]))
    return float(brentq(h, offsets[j], offsets[j + 1], xtol=1e-9))


@dataclass(frozen=True)
class TuningRow:
    temperature: float
    signal_wavelength: float
    idler_wavelength: float
    delta_lambda: float
    bandwidth: float
    ratio: float


@dataclass(frozen=True)
class TuningCurve:
    rows: tuple
    slope: Optional[float] = None  # ratio per degC
    degeneracy_temperature: Optional[float] = None
    slope_window: tuple = field(default=())

    @property
    def temperatures(self):
        return np.array([r.temperature for r in self.rows])

    @property
    def ratios(self):
        return np.array([r.ratio for r in self.rows])


def temperature_steps(t_start, t_stop, step):
    if not step > 0:
        raise DomainError(f"temperature step must be > 0, got {step}")
    if t_stop < t_start:
        raise DomainError("temperature range must be increasing")
    n = int(math.floor((t_stop - t_start) / step + 1e-9)) + 1
    return [round(t_start + i * step, 9) for i in range(n)]


def tuning_row(temperature, theta_ext, crystal, pump, geometry="symmetric",
               search_band=DEFAULT_SEARCH_BAND):
    sols = solve_signal_wavelengths(theta_ext, temperature, crystal, pump, search_band,
                                    geometry=geometry)
    if sols:
        first = min(sols, key=lambda s: s.signal_wavelength)
        lam_s, lam_i = first.signal_wavelength, first.idler_wavelength
    else:
        lam_s = lam_i = pump.degenerate_wavelength
    spec = emission_spectrum(theta_ext, temperature, crystal, pump, geometry=geometry)
    bandwidth = fwhm_bandwidth(spec, "signal")
    delta = abs(lam_i - lam_s)
    return TuningRow(float(temperature), lam_s, lam_i, delta, bandwidth, delta / bandwidth)


def tuning_curve(temperature_range: Sequence[float], step, theta_ext, crystal: CrystalSpec,
                 pump: PumpSpec, geometry="symmetric", slope_window=4.0, workers=1):
    """Delta-lambda / delta-lambda discreteness ratio versus crystal temperature.

    The slope is a least-squares line over ``[T_deg, T_deg + slope_window]``
    where ``T_deg`` is the degeneracy temperature (if it lies in the range).
    """
    temps = temperature_steps(temperature_range[0], temperature_range[1], step)
    work = lambda t: tuning_row(t, theta_ext, crystal, pump, geometry)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(work, temps))
    else:
        rows = tuple(work(t) for t in temps)

    t_deg = None
    if len(temps) > 1:
        try:
            t_deg = degeneracy_temperature(theta_ext, crystal, pump, (temps[0], temps[-1]),
                                           geometry, scan_step=min(0.25, step))
        except NotFoundError:
            t_deg = None
    slope = None
    window = ()
    if t_deg is not None:
        window = (t_deg, t_deg + slope_window)
        sel = [r for r in rows if window[0] <= r.temperature <= window[1] + 1e-9]
        if len(sel) >= 2:
            slope = float(np.polyfit([r.temperature for r in sel], [r.ratio for r in sel], 1)[0])
    return TuningCurve(rows, slope, t_deg, window)
