import io
import math

import numpy as np
import pytest

from ppslt.config import default_config_path, load_config, parse_coefficients, write_config
from ppslt.csvio import read_hom_trace, write_hom_trace, write_spectrum, write_tuning_curve
from ppslt.errors import ConfigError, ParseError
from ppslt.phasematch import emission_spectrum, tuning_curve
from ppslt.twophoton import HomTrace


def test_default_config(cfg):
    assert cfg.crystal.length == pytest.approx(0.02)
    assert cfg.crystal.poling_period == pytest.approx(6.07e-6)
    assert cfg.crystal.qpm_order == 3
    assert cfg.pump.wavelength == pytest.approx(355.66e-9)
    assert cfg.external_angle == pytest.approx(math.radians(1.7))
    assert cfg.bs_transmittance == 0.6094 and cfg.bs_reflectance == 0.3906
    assert cfg.counting["window_ns"] == 19.45
    assert cfg.crystal.sellmeier.form_id == "bruner2003"


def test_config_round_trip(cfg, tmp_path):
    path = tmp_path / "copy.ini"
    write_config(cfg, path)
    again = load_config(path)
    assert again.crystal == cfg.crystal
    assert again.pump == cfg.pump
    assert again.counting == cfg.counting
    assert again.geometry == cfg.geometry


def _edit(tmp_path, old, new):
    text = default_config_path().read_text(encoding="utf-8").replace(old, new)
    path = tmp_path / "edited.ini"
    path.write_text(text, encoding="utf-8")
    return path


@pytest.mark.parametrize("old, new, match", [
    ("qpm_order = 3", "qpm_order = 2.5", "integer"),
    ("length_mm = 20.0", "length_mm = -1", "length"),
    ("geometry = symmetric", "geometry = sideways", "geometry"),
    ("transmittance = 0.6094", "transmittance = 0.9", "T \\+ R"),
    ("[pump]", "[pumpp]", "unknown"),
    ("power_mW = 0.023", "power_mW = 0.023\ncolor = blue", "unknown"),
    ("length_mm = 20.0", "length_mm = twenty", "length_mm"),
    ("form_id = bruner2003", "form_id = mystery", "form"),
])
def test_config_validation(tmp_path, old, new, match):
    with pytest.raises(ConfigError, match=match):
        load_config(_edit(tmp_path, old, new))


def test_missing_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_parse_coefficients():
    assert parse_coefficients("1, 2.5,  3e-8") == (1.0, 2.5, 3e-8)
    with pytest.raises(ConfigError):
        parse_coefficients("1, x")


def test_tuning_csv_format(crystal, pump):
    curve = tuning_curve((25.0, 25.5), 0.5, math.radians(1.7), crystal, pump)
    text = write_tuning_curve(curve)
    lines = text.split("\n")
    assert lines[0] == "T_C,lambda_s_nm,lambda_i_nm,delta_lambda_nm,bandwidth_nm,ratio"
    assert "\r" not in text
    first = lines[1].split(",")
    assert first[0] == "25.00"
    assert len(first[1].split(".")[1]) == 4


def test_spectrum_csv(crystal, pump, tmp_path):
    spec = emission_spectrum(math.radians(1.7), 25.0, crystal, pump)
    path = tmp_path / "s.csv"
    write_spectrum(spec, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (len(spec.wavelengths), 2)
    assert np.trapezoid(data[:, 1], data[:, 0]) == pytest.approx(1.0, rel=1e-4)


def test_hom_csv_round_trip():
    dx = np.linspace(-10e-6, 10e-6, 11)
    trace = HomTrace(dx, np.linspace(0.5, 1.0, 11), counts=np.arange(11.0) + 100,
                     errors=np.sqrt(np.arange(11.0) + 100))
    back = read_hom_trace(io.StringIO(write_hom_trace(trace)))
    assert np.allclose(back.dx, dx, atol=1e-12)
    assert np.allclose(back.values, trace.values)
    assert np.allclose(back.counts, trace.counts)
    assert np.allclose(back.errors, trace.errors, atol=1e-6)


@pytest.mark.parametrize("text, match", [
    ("", "empty file"),
    ("dx_um,p_norm\n", "no data rows"),
    ("dx_um\n1\n", "missing column 'p_norm'"),
    ("dx_um,p_norm,extra\n1,2,3\n", "unknown columns"),
    ("dx_um,p_norm\n1,1\n2,abc\n", ":3: p_norm"),
    ("dx_um,p_norm\n1,1\n2\n", ":3: expected 2 fields"),
    ("dx_um,p_norm\n2,1\n1,1\n", "strictly increasing"),
    ("dx_um,p_norm\n1,nan\n", "not finite"),
])
def test_hom_csv_errors(text, match):
    with pytest.raises(ParseError, match=match):
        read_hom_trace(io.StringIO(text))


def test_hom_csv_missing_file(tmp_path):
    with pytest.raises(ParseError):
        read_hom_trace(tmp_path / "nope.csv")
