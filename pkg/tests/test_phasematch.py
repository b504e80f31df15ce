import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppslt.errors import DomainError, GeometryError, NotFoundError, ResolutionError
from ppslt.phasematch import (SINC2_HALF_MAX, PhotonSpectrum, PumpSpec, calibrate_temperature_offset,
                              degeneracy_temperature, emission_spectrum, find_lobes,
                              fwhm_bandwidth, idler_wavelength, mismatch, phase_mismatch,
                              solve_signal_wavelengths, tuning_curve)
from ppslt.dispersion import wavevector

THETA = math.radians(1.7)


def test_sinc2_half_max_constant():
    assert (math.sin(SINC2_HALF_MAX) / SINC2_HALF_MAX) ** 2 == pytest.approx(0.5, abs=1e-14)
    assert SINC2_HALF_MAX == pytest.approx(1.392, abs=5e-4)


def test_idler_wavelength_example():
    assert idler_wavelength(711.32e-9, 355.66e-9) == pytest.approx(711.32e-9, rel=1e-14)


def test_phase_mismatch_definition(crystal, pump):
    lam_s, th, t = 700e-9, 0.01, 25.0
    lam_i = idler_wavelength(lam_s, pump.wavelength)
    ks, ki = wavevector(lam_s, t, crystal), wavevector(lam_i, t, crystal)
    kp = wavevector(pump.wavelength, t, crystal)
    thi = math.asin(ks * math.sin(th) / ki)
    expected = kp - ks * math.cos(th) - ki * math.cos(thi) - 2 * math.pi * 3 / crystal.period_at(t)
    assert phase_mismatch(lam_s, th, t, crystal, pump) == pytest.approx(expected, abs=1e-6)


def test_geometry_error_for_huge_angle(crystal, pump):
    # signal transverse momentum larger than the long-wavelength idler can carry
    with pytest.raises(GeometryError):
        phase_mismatch(400e-9, 1.4, 25.0, crystal, pump)


def test_unknown_geometry(crystal, pump):
    with pytest.raises(DomainError):
        mismatch(700e-9, THETA, 25.0, crystal, pump, geometry="diagonal")


def test_degenerate_point_single_root(crystal, pump):
    sols = solve_signal_wavelengths(THETA, 22.90, crystal, pump)
    assert len(sols) == 1
    assert sols[0].signal_wavelength == pytest.approx(711.32e-9, rel=1e-12)


def test_below_degeneracy_no_root(crystal, pump):
    assert solve_signal_wavelengths(THETA, 21.0, crystal, pump) == []


def test_roots_at_25C(crystal, pump, golden):
    sols = solve_signal_wavelengths(THETA, 25.00, crystal, pump)
    lam = sorted(s.signal_wavelength * 1e9 for s in sols)
    assert lam == pytest.approx(golden["roots_nm_25.00C"], abs=1e-4)
    delta = lam[1] - lam[0]
    assert 10 < delta < 100  # tens of nm, measured value 33.01 nm
    for s in sols:
        assert abs(s.residual) <= 1e-3
        assert 1 / s.signal_wavelength + 1 / s.idler_wavelength == pytest.approx(
            1 / pump.wavelength, rel=1e-12)


def test_roots_are_conjugate_pair(crystal, pump):
    a, b = solve_signal_wavelengths(THETA, 26.90, crystal, pump)
    assert a.idler_wavelength == pytest.approx(b.signal_wavelength, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(23.0, 60.0), theta_deg=st.floats(0.5, 3.0))
def test_solution_properties(crystal, pump, t, theta_deg):
    for s in solve_signal_wavelengths(math.radians(theta_deg), t, crystal, pump):
        rel = abs(1 / s.signal_wavelength + 1 / s.idler_wavelength - 1 / pump.wavelength)
        assert rel * pump.wavelength <= 1e-12
        ks = wavevector(s.signal_wavelength, t, crystal)
        ki = wavevector(s.idler_wavelength, t, crystal)
        assert abs(ks * math.sin(s.signal_angle) - ki * math.sin(s.idler_angle)) <= 1e-6
        assert abs(s.residual) <= 1e-3


def test_roots_straddle_degenerate_wavelength(crystal, pump):
    for t in np.arange(23.0, 31.0, 0.5):
        sols = solve_signal_wavelengths(THETA, t, crystal, pump)
        assert len(sols) == 2
        lo, hi = sorted(s.signal_wavelength for s in sols)
        assert lo < 2 * pump.wavelength < hi


def test_continuity(crystal, pump):
    temps = np.arange(23.0, 30.0 + 1e-9, 0.1)
    signal = [min(s.signal_wavelength for s in solve_signal_wavelengths(THETA, t, crystal, pump))
              for t in temps]
    assert np.max(np.abs(np.diff(signal))) < 10e-9
    # delta-lambda grows with temperature above degeneracy
    assert np.all(np.diff(signal) < 0)


def test_spectrum_normalized_and_consistent(crystal, pump, golden):
    spec = emission_spectrum(THETA, 25.0, crystal, pump)
    assert np.trapezoid(spec.density, spec.wavelengths) == pytest.approx(1.0, abs=1e-9)
    assert spec.bimodal
    step = spec.wavelengths[1] - spec.wavelengths[0]
    roots = sorted(s.signal_wavelength for s in solve_signal_wavelengths(THETA, 25.0, crystal, pump))
    for lobe, root in zip(spec.lobes, roots):
        assert abs(lobe.center - root) <= step
    assert fwhm_bandwidth(spec, "signal") * 1e9 == pytest.approx(golden["fwhm_nm_25.00C"], rel=1e-4)


def test_spectrum_single_lobe_at_degeneracy(crystal, pump):
    grid = np.linspace(700e-9, 722.64e-9, 4097)  # symmetric about 711.32 nm
    t_deg = degeneracy_temperature(THETA, crystal, pump, (20.0, 26.0))
    spec = emission_spectrum(THETA, t_deg, crystal, pump, grid=grid)
    assert not spec.bimodal
    assert spec.lobes[0].center == pytest.approx(711.32e-9, abs=grid[1] - grid[0])
    assert spec.density[2048 - 400] == pytest.approx(spec.density[2048 + 400], rel=1e-3)


def test_spectrum_grid_must_span_roots(crystal, pump):
    with pytest.raises(DomainError, match="does not span"):
        emission_spectrum(THETA, 25.0, crystal, pump, grid=np.linspace(700e-9, 720e-9, 2000))


def test_spectrum_coarse_grid(crystal, pump):
    with pytest.raises(ResolutionError):
        emission_spectrum(THETA, 25.0, crystal, pump, grid=np.linspace(680e-9, 740e-9, 200))


def test_pencil_width_is_narrower_than_measured(crystal, pump):
    # Pencil-direction sinc^2 lobes are ~1.5 nm, well under the measured 6.16 nm;
    # a finite collection cone broadens them.
    narrow = emission_spectrum(THETA, 25.0, crystal, pump).lobes[0].fwhm
    wide = emission_spectrum(THETA, 25.0, crystal, pump,
                             angular_halfwidth=math.radians(0.2)).lobes[0].fwhm
    assert narrow < 4e-9 < wide


def test_fwhm_synthetic_sinc2():
    slope, length = 4e11, 0.02  # rad/m per m, m
    lam = np.linspace(690e-9, 710e-9, 20001)
    x = slope * (lam - 700e-9) * length / 2
    spec = PhotonSpectrum(lam, np.sinc(x / np.pi) ** 2)
    expected = 2 * 2 * SINC2_HALF_MAX / (length * slope)
    assert fwhm_bandwidth(spec) == pytest.approx(expected, rel=5e-3)


def test_fwhm_gaussian():
    sigma = 1e-9
    lam = np.linspace(690e-9, 710e-9, 2001)
    spec = PhotonSpectrum(lam, np.exp(-0.5 * ((lam - 700e-9) / sigma) ** 2))
    assert abs(fwhm_bandwidth(spec) - 2.3548 * sigma) <= lam[1] - lam[0]


def test_fwhm_errors():
    lam = np.linspace(690e-9, 710e-9, 101)
    spec = PhotonSpectrum(lam, np.exp(-0.5 * ((lam - 700e-9) / 0.3e-9) ** 2))
    with pytest.raises(ResolutionError):
        fwhm_bandwidth(spec)
    with pytest.raises(ResolutionError):
        fwhm_bandwidth(spec, 3)
    with pytest.raises(ResolutionError, match="grid edge"):
        find_lobes(lam, np.ones_like(lam))


def test_uncalibrated_degeneracy_and_calibration(raw_crystal, crystal, pump, golden):
    t_star = degeneracy_temperature(THETA, raw_crystal, pump, (10.0, 40.0))
    assert t_star == pytest.approx(golden["uncalibrated_degeneracy_C"], abs=1e-4)
    dt = calibrate_temperature_offset(raw_crystal, pump, THETA)
    assert dt == pytest.approx(golden["temp_offset_C"], abs=1e-5)
    cal = raw_crystal.with_offset(dt)
    t_deg = degeneracy_temperature(THETA, cal, pump, (20.0, 26.0))
    assert t_deg == pytest.approx(22.90, abs=0.01)
    assert abs(mismatch(711.32e-9, THETA, t_deg, cal, pump)) <= 1e-3
    # re-calibrating a calibrated crystal returns the same stored offset
    assert calibrate_temperature_offset(crystal, pump, THETA) == pytest.approx(dt, abs=1e-5)
    # a coefficient set that already degenerates at the target needs no offset
    assert calibrate_temperature_offset(raw_crystal, pump, THETA, target_temperature=t_star) == 0.0


def test_calibration_rejects_wrong_wavelength(crystal, pump):
    with pytest.raises(DomainError, match="2 x pump"):
        calibrate_temperature_offset(crystal, pump, THETA, target_wavelength=700e-9)


def test_degeneracy_not_bracketed(crystal, pump):
    with pytest.raises(NotFoundError):
        degeneracy_temperature(THETA, crystal, pump, (30.0, 40.0))


def test_tuning_curve(crystal, pump, golden):
    curve = tuning_curve((22.90, 26.90), 0.5, THETA, crystal, pump, workers=4)
    serial = tuning_curve((22.90, 26.90), 0.5, THETA, crystal, pump)
    assert curve == serial
    assert curve.rows[0].ratio == 0.0
    assert curve.degeneracy_temperature == pytest.approx(22.90, abs=0.01)
    deltas = [r.delta_lambda for r in curve.rows]
    assert np.all(np.diff(deltas) > 0)
    assert 5 <= curve.slope <= 14


def test_tuning_curve_single_row(crystal, pump):
    curve = tuning_curve((25.0, 25.0), 0.1, THETA, crystal, pump)
    assert len(curve.rows) == 1 and curve.slope is None


def test_tuning_curve_bad_step(crystal, pump):
    with pytest.raises(DomainError):
        tuning_curve((25.0, 26.0), 0.0, THETA, crystal, pump)


def test_fixed_signal_geometry_runs(crystal, pump):
    sols = solve_signal_wavelengths(THETA, 26.0, crystal, pump, geometry="fixed_signal")
    for s in sols:
        assert abs(s.residual) <= 1e-3


def test_pump_validation():
    with pytest.raises(DomainError):
        PumpSpec(wavelength=-1.0)
