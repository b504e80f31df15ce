import math
import subprocess
import sys

import numpy as np
import pytest

from ppslt.cli import build_parser, main
from ppslt.config import default_config_path
from ppslt.csvio import write_tuning_curve
from ppslt.phasematch import tuning_curve


def _report_values(text):
    out = {}
    section = None
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("["):
            section = line.strip("[]")
        elif "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            out[(section, k)] = v
    return out


def test_tuning_curve_matches_library(tmp_path, capsys, cfg):
    path = tmp_path / "tc.csv"
    assert main(["tuning-curve", "--t-start", "22", "--t-stop", "30", "--step", "0.5",
                 "-o", str(path)]) == 0
    printed = capsys.readouterr().out
    curve = tuning_curve((22.0, 30.0), 0.5, cfg.external_angle, cfg.crystal, cfg.pump)
    assert path.read_bytes() == write_tuning_curve(curve).encode("utf-8")
    assert "slope" in printed
    assert f"{curve.slope:.4f}" in printed


def test_tuning_curve_single_row(capsys):
    assert main(["tuning-curve", "--t-start", "25", "--t-stop", "25"]) == 0
    captured = capsys.readouterr()
    assert len(captured.out.strip().splitlines()) == 2
    assert "slope_per_C: n/a" in captured.err


def test_out_of_range_temperature(capsys):
    assert main(["tuning-curve", "--t-start", "22", "--t-stop", "250"]) == 2
    assert "200" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[pump]\nwavelength_nm = abc\n", encoding="utf-8")
    assert main(["counts", "--config", str(bad)]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    text = default_config_path().read_text(encoding="utf-8")
    cfg = tmp_path / "off.ini"
    cfg.write_text(text.replace("poling_period_um = 6.07", "poling_period_um = 9.0"),
                   encoding="utf-8")
    assert main(["calibrate", "--config", str(cfg)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_empty_csv_exits_2(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    assert main(["fit", str(empty)]) == 2
    assert "empty" in capsys.readouterr().err


def test_parse_error_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("dx_um,p_norm\n0,1\n1,oops\n", encoding="utf-8")
    assert main(["fit", str(bad)]) == 2
    assert ":3:" in capsys.readouterr().err


def test_hom_scan_fit_round_trip(tmp_path, capsys):
    trace = tmp_path / "hom.csv"
    assert main(["hom-scan", "--temperature", "25.00", "--dx-min-um", "-200",
                 "--dx-max-um", "200", "--dx-step-um", "0.5", "-o", str(trace)]) == 0
    scan = _report_values(capsys.readouterr().out)
    fitted_v = float(scan[("fit", "V")])
    assert fitted_v <= 0.9087 + 1e-4
    assert ("fit", "ratio") in scan
    assert ("reference", "delta_lambda_nm") in scan
    separation = float(scan[(None, "lobe_separation_nm")])
    assert float(scan[("fit", "delta_lambda_nm")]) == pytest.approx(separation, rel=0.01)

    assert main(["fit", str(trace)]) == 0
    fit = _report_values(capsys.readouterr().out)
    for key in ("N", "V", "delta_omega_rad_per_s", "envelope_width_s"):
        assert float(fit[("fit", key)]) == pytest.approx(float(scan[("fit", key)]), rel=0.01)


def test_counts_report(capsys):
    assert main(["counts"]) == 0
    rep = _report_values(capsys.readouterr().out)
    assert float(rep[("counts", "accidental_rate_Hz")]) == pytest.approx(11.2032, abs=1e-4)
    assert float(rep[("counts", "car_model")]) == pytest.approx(732.6087, abs=1e-4)
    assert main(["counts", "--power-mw", "1"]) == 0
    rep = _report_values(capsys.readouterr().out)
    assert float(rep[("counts", "car_model")]) == 16.85
    assert float(rep[("counts", "heralded_g2_model")]) == 0.087


def test_calibrate_write(tmp_path, capsys, golden):
    out = tmp_path / "cal.ini"
    assert main(["calibrate", "--write", str(out)]) == 0
    rep = _report_values(capsys.readouterr().out)
    assert float(rep[(None, "temp_offset_C")]) == pytest.approx(golden["temp_offset_C"], abs=1e-6)
    assert float(rep[(None, "calibrated_degeneracy_C")]) == pytest.approx(22.90, abs=0.01)
    assert "temp_offset_C = 0.605622" in out.read_text(encoding="utf-8")


def test_spectrum_output(tmp_path, capsys):
    path = tmp_path / "s.csv"
    assert main(["spectrum", "--temperature", "26.9", "-o", str(path)]) == 0
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == 2
    assert "lobe 1" in capsys.readouterr().out


def test_byte_identical_outputs(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        assert main(["hom-scan", "--counts", "--seed", "9", "--dx-min-um", "-100",
                     "--dx-max-um", "100", "-o", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0]


def test_help_lists_units():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        for action in p._actions:
            if action.dest in ("help",) or action.help is None:
                continue
            assert "[" in action.help, (name, action.dest, action.help)


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ppslt.cli", "counts", "--help"],
                         capture_output=True, text=True, check=True)
    assert "[Hz]" in res.stdout
