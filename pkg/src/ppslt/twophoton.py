"""Two-photon spectra, Hong-Ou-Mandel quantum-beat traces and their fitting.

Coincidence probability after the beamsplitter, normalized to the far
wings::

    P(dt) = N [1 - V f(dt) cos(d_omega dt)],   dt = dx / c

``f`` is the envelope set by the single-photon spectrum and ``d_omega`` the
beat between the two spectral lobes. :func:`hom_closed_form` evaluates this
model directly; :func:`hom_from_spectrum` obtains it from the sampled
spectrum by quadrature and serves as the physical reference.

Envelope widths are FWHM in delay (seconds). For a lobe of intensity
FWHM ``d_w`` (rad/s) the width is ``K / d_w`` with ``K = 4 ln 2`` for a
Gaussian spectrum (Gaussian ``f``) and ``K = 2 * 1.391557...`` for a sinc^2
spectrum (triangular ``f``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.optimize import least_squares

from .errors import (AliasingWarning, DomainError, FitError, IdentifiabilityWarning,
                     ResolutionError)
from .phasematch import SINC2_HALF_MAX, PhotonSpectrum, PumpSpec, find_lobes

ENVELOPE_SHAPES = ("gaussian", "triangle")
FOURIER_WIDTH = {"gaussian": 4 * math.log(2), "triangle": 2 * SINC2_HALF_MAX}
MIN_QUADRATURE_POINTS = 4096


@dataclass(frozen=True)
class BeamSplitter:
    transmittance: float = 0.5
    reflectance: float = 0.5

    def __post_init__(self):
        t, r = self.transmittance, self.reflectance
        if not (0 <= t <= 1 and 0 <= r <= 1):
            raise DomainError("beamsplitter T and R must lie in [0, 1]")
        if t + r > 1 + 1e-9:
            raise DomainError(f"T + R = {t + r:.6f} exceeds 1")


def max_visibility(bs: BeamSplitter) -> float:
    """Highest two-photon visibility an unbalanced splitter allows: 2TR/(T^2+R^2)."""
    t, r = bs.transmittance, bs.reflectance
    denom = t * t + r * r
    if denom == 0:
        raise DomainError("beamsplitter with T = R = 0 transmits nothing")
    return 2 * t * r / denom


@dataclass(frozen=True)
class Envelope:
    shape: str = "gaussian"
    width: float = 1e-13  # FWHM in delay, s

    def __post_init__(self):
        if self.shape not in ENVELOPE_SHAPES:
            raise DomainError(f"unknown envelope shape {self.shape!r}")
        if not self.width > 0:
            raise DomainError(f"envelope width must be > 0, got {self.width}")

    def __call__(self, delay):
        u = np.asarray(delay, dtype=float) / self.width
        if self.shape == "gaussian":
            return np.exp(-4 * math.log(2) * u * u)
        return np.clip(1 - np.abs(u), 0.0, None)


@dataclass(frozen=True)
class HomParams:
    N: float
    V: float
    delta_omega: float  # rad/s
    envelope_width: float  # s
    envelope_shape: str = "gaussian"


@dataclass(frozen=True, eq=False)
class HomTrace:
    """Coincidence trace versus path-length difference ``dx`` (meters)."""

    dx: np.ndarray
    values: np.ndarray
    params: Optional[HomParams] = None
    counts: Optional[np.ndarray] = None
    errors: Optional[np.ndarray] = None

    def __post_init__(self):
        dx = np.asarray(self.dx, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if dx.ndim != 1 or dx.shape != values.shape:
            raise DomainError("dx and values must be 1-D arrays of equal length")
        if len(dx) > 1 and np.any(np.diff(dx) <= 0):
            raise DomainError("dx must be strictly increasing")
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "values", values)
        for name in ("counts", "errors"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != dx.shape:
                    raise DomainError(f"{name} must match dx in length")
                object.__setattr__(self, name, arr)

    @property
    def delay(self):
        return self.dx / SPEED_OF_LIGHT


def hom_closed_form(N, V, delta_omega, envelope: Envelope, dx) -> HomTrace:
    """Evaluate the quantum-beat coincidence model on a path-difference grid."""
    if not 0 <= V <= 1:
        raise DomainError(f"visibility must lie in [0, 1], got {V}")
    dx = np.asarray(dx, dtype=float)
    delay = dx / SPEED_OF_LIGHT
    values = N * (1 - V * envelope(delay) * np.cos(delta_omega * delay))
    return HomTrace(dx, values, HomParams(N, V, delta_omega, envelope.width, envelope.shape))


@dataclass(frozen=True, eq=False)
class TwoPhotonSpectrum:
    """Marginal spectrum plus the pairing omega <-> omega_p - omega."""

    marginal: PhotonSpectrum
    pump_omega: float
    lobe_centers: tuple  # (omega_1, omega_2), rad/s
    delta_omega: float


def build_two_photon_spectrum(spec: PhotonSpectrum, pump: PumpSpec) -> TwoPhotonSpectrum:
    lam = spec.wavelengths
    if np.any((lam <= pump.wavelength) & (spec.density > 0)):
        raise DomainError("spectrum has weight at frequencies above the pump")
    omega_p = pump.omega
    omega = 2 * np.pi * SPEED_OF_LIGHT / lam[::-1]
    dens_w = (spec.density * lam ** 2 / (2 * np.pi * SPEED_OF_LIGHT))[::-1]
    lobes = find_lobes(omega, dens_w)
    if len(lobes) >= 2:
        w1 = lobes[-1].center
        centers = (w1, omega_p - w1)
    else:
        centers = (omega_p / 2, omega_p / 2)
    return TwoPhotonSpectrum(spec, omega_p, centers, abs(centers[0] - centers[1]))


def hom_from_spectrum(tps: TwoPhotonSpectrum, bs: BeamSplitter, dx, chunk=256) -> HomTrace:
    """Coincidence trace by direct quadrature over the sampled spectrum.

    P(dt) is proportional to (T^2 + R^2) - 2TR Re int S(w) exp(-i(2w - w_p) dt) dw,
    normalized so that P -> 1 far from zero delay.
    """
    spec = tps.marginal
    lam = spec.wavelengths
    if len(lam) < MIN_QUADRATURE_POINTS:
        raise ResolutionError(
            f"quadrature needs >= {MIN_QUADRATURE_POINTS} spectral samples, got {len(lam)}")
    dx = np.asarray(dx, dtype=float)
    if tps.delta_omega > 0 and len(dx) > 1:
        beat_period = 2 * np.pi * SPEED_OF_LIGHT / tps.delta_omega
        if np.max(np.diff(dx)) > beat_period / 4:
            raise ResolutionError(
                f"dx step {np.max(np.diff(dx)) * 1e6:.3f} um aliases a beat period of "
                f"{beat_period * 1e6:.3f} um (need >= 4 samples per period)")
    weight = spec.density / np.trapezoid(spec.density, lam)
    detuning = 2 * (2 * np.pi * SPEED_OF_LIGHT / lam) - tps.pump_omega
    delay = dx / SPEED_OF_LIGHT
    overlap = np.empty_like(delay)
    for start in range(0, len(delay), chunk):
        block = delay[start:start + chunk]
        phase = np.cos(np.outer(block, detuning))
        overlap[start:start + chunk] = np.trapezoid(phase * weight, lam, axis=1)
    t, r = bs.transmittance, bs.reflectance
    tr2 = t * t + r * r
    values = (tr2 - 2 * t * r * overlap) / tr2
    return HomTrace(dx, values)


class WavelengthScales(NamedTuple):
    delta_lambda: float  # m
    bandwidth: float  # m


def extract_wavelength_scales(params: Optional[HomParams], mean_wavelength=711.32e-9):
    """Beat and envelope converted to (center separation, single-photon FWHM) in meters."""
    if params is None:
        raise DomainError("no fitted parameters to convert")
    scale = mean_wavelength ** 2 / (2 * np.pi * SPEED_OF_LIGHT)
    k = FOURIER_WIDTH[params.envelope_shape]
    return WavelengthScales(scale * abs(params.delta_omega), scale * k / params.envelope_width)


def params_from_wavelength_scales(V, delta_lambda, bandwidth, mean_wavelength=711.32e-9, N=1.0,
                                  shape="gaussian") -> HomParams:
    """Inverse of :func:`extract_wavelength_scales`."""
    scale = 2 * np.pi * SPEED_OF_LIGHT / mean_wavelength ** 2
    return HomParams(N, V, scale * delta_lambda, FOURIER_WIDTH[shape] / (scale * bandwidth), shape)


def bimodal_gaussian_spectrum(pump: PumpSpec, delta_omega, bandwidth_omega, n_points=8192,
                              span_sigmas=10.0) -> PhotonSpectrum:
    """Two equal Gaussian lobes (intensity FWHM ``bandwidth_omega``) at
    omega_p/2 +- delta_omega/2, sampled on a uniform wavelength grid."""
    sigma = bandwidth_omega / (2 * math.sqrt(2 * math.log(2)))
    w0 = pump.omega / 2
    w_lo = w0 - delta_omega / 2 - span_sigmas * sigma
    w_hi = w0 + delta_omega / 2 + span_sigmas * sigma
    lam = np.linspace(2 * np.pi * SPEED_OF_LIGHT / w_hi, 2 * np.pi * SPEED_OF_LIGHT / w_lo,
                      int(n_points))
    omega = 2 * np.pi * SPEED_OF_LIGHT / lam
    dens_w = (np.exp(-0.5 * ((omega - w0 - delta_omega / 2) / sigma) ** 2)
              + np.exp(-0.5 * ((omega - w0 + delta_omega / 2) / sigma) ** 2))
    dens = dens_w * omega ** 2 / (2 * np.pi * SPEED_OF_LIGHT)
    dens /= np.trapezoid(dens, lam)
    return PhotonSpectrum(lam, dens, "gaussian", find_lobes(lam, dens))


@dataclass(frozen=True)
class HomFit:
    params: HomParams
    stderr: dict
    cost: float
    reduced_chi2: float
    nfev: int
    beat_identifiable: bool = True
    correlated: bool = False
    warnings: tuple = field(default=())

    @property
    def trace_params(self) -> HomParams:
        return self.params


def _initial_guess(x, y, shape):
    n = len(x)
    tail = max(n // 8, 2)
    n0 = float(np.mean(np.concatenate([y[:tail], y[-tail:]])))
    dev = y - n0
    v0 = float(np.clip(np.max(np.abs(dev)) / n0, 1e-3, 1.0)) if n0 != 0 else 0.5
    # dominant nonzero frequency on a uniform resampling, zero-padded
    xu = np.linspace(x[0], x[-1], n)
    du = np.interp(xu, x, dev)
    pad = 16 * n
    spectrum = np.abs(np.fft.rfft(du, pad))
    freqs = np.fft.rfftfreq(pad, xu[1] - xu[0])
    j = 1 + int(np.argmax(spectrum[1:]))
    q0 = 2 * np.pi * freqs[j]
    power = dev ** 2
    if power.sum() > 0:
        rms = math.sqrt(float(np.sum(power * x ** 2) / power.sum()))
    else:
        rms = (x[-1] - x[0]) / 8
    w0 = rms * (4 * math.sqrt(math.log(2)) if shape == "gaussian" else math.sqrt(10))
    return n0, v0, q0, max(w0, 1e-6 * (x[-1] - x[0]))


def fit_hom_trace(trace: HomTrace, init: Optional[HomParams] = None, shape="gaussian",
                  max_nfev=4000) -> HomFit:
    """Nonlinear least-squares fit of the quantum-beat model.

    Internally works in micrometers of path difference (beat wavenumber in
    rad/um, envelope width in um). Per-point ``trace.errors`` are used as
    weights and, when present, the standard errors are absolute; otherwise
    they are scaled by the residual variance.

    Raises :class:`FitError` (carrying the best point) when the iteration
    budget runs out.
    """
    if shape not in ENVELOPE_SHAPES:
        raise DomainError(f"unknown envelope shape {shape!r}")
    x = trace.dx * 1e6
    y = trace.values
    if len(x) < 8:
        raise DomainError("need at least 8 samples to fit")
    sigma = trace.errors
    if sigma is not None:
        sigma = np.where(sigma > 0, sigma, np.min(sigma[sigma > 0]) if np.any(sigma > 0) else 1.0)
    w = 1.0 / sigma if sigma is not None else np.ones_like(y)
    to_um = 1e6 * SPEED_OF_LIGHT  # seconds -> um of path

    if init is not None:
        starts = [(init.N, init.V, init.delta_omega / to_um, init.envelope_width * to_um)]
    else:
        n0, v0, q0, w0 = _initial_guess(x, y, shape)
        starts = [(n0, v0, q0, w0), (n0, v0, q0, 0.6 * w0), (n0, v0, q0, 1.6 * w0)]

    issued = []
    step = float(np.max(np.diff(x)))
    for s in starts:
        if s[2] > 0 and step > np.pi / s[2]:
            msg = f"sampling step {step:.3g} um under-samples the beat (period {2 * np.pi / s[2]:.3g} um)"
            warnings.warn(msg, AliasingWarning, stacklevel=2)
            issued.append(msg)
            break

    def model(p):
        n, v, q, wd = p
        u = x / wd
        env = np.exp(-4 * math.log(2) * u * u) if shape == "gaussian" else np.clip(1 - np.abs(u), 0, None)
        return n * (1 - v * env * np.cos(q * x))

    def resid(p):
        return (model(p) - y) * w

    best = None
    for s in starts:
        res = least_squares(resid, np.array(s, dtype=float), method="lm", xtol=1e-8, ftol=1e-15,
                            gtol=1e-15, x_scale="jac", max_nfev=max_nfev)
        if best is None or res.cost < best.cost:
            best = res
    if best.status <= 0:
        raise FitError(f"fit did not converge ({best.message})", best=best.x)

    n, v, q, wd = best.x
    q, wd = abs(q), abs(wd)
    m, npar = len(y), 4
    jac = best.jac
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj)
        if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) < 0):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov = np.full((npar, npar), np.inf)
    chi2 = 2 * best.cost
    red = chi2 / max(m - npar, 1)
    if sigma is None:
        cov = cov * red
    err = np.sqrt(np.abs(np.diag(cov)))
    params = HomParams(float(n), float(v), float(q * to_um), float(wd / to_um), shape)
    stderr = {"N": float(err[0]), "V": float(err[1]), "delta_omega": float(err[2] * to_um),
              "envelope_width": float(err[3] / to_um)}

    identifiable = bool(abs(v) > 1e-6 and (not np.isfinite(err[1]) or abs(v) > 3 * err[1]))
    if not identifiable:
        msg = "visibility consistent with zero: beat frequency and envelope width are unidentifiable"
        warnings.warn(msg, IdentifiabilityWarning, stacklevel=2)
        issued.append(msg)
    correlated = bool(identifiable and params.envelope_width * params.delta_omega < np.pi)
    if correlated:
        msg = "less than half a beat inside the envelope: beat and width are strongly correlated"
        warnings.warn(msg, IdentifiabilityWarning, stacklevel=2)
        issued.append(msg)
    return HomFit(params, stderr, float(best.cost), float(red), int(best.nfev), identifiable,
                  correlated, tuple(issued))
