"""Command-line front end.

Exit codes: 0 success, 2 validation or parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import reference as ref
from .config import load_config, write_config
from .counting import (CountingRates, SourceFigures, accidental_rate, car_model,
                       heralded_g2_model, normalized_coincidence_ratio, rates_along_trace,
                       simulate_counts, subtract_accidentals)
from .csvio import read_hom_trace, write_hom_trace, write_spectrum, write_tuning_curve
from .errors import NumericalError, ValidationError
from .phasematch import (calibrate_temperature_offset, degeneracy_temperature,
                         emission_spectrum, fwhm_bandwidth, tuning_curve)
from .twophoton import (BeamSplitter, HomTrace, build_two_photon_spectrum,
                        extract_wavelength_scales, fit_hom_trace, hom_from_spectrum,
                        max_visibility)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _check_temperature(cfg, *temps):
    tlo, thi = cfg.crystal.sellmeier.valid_temperature_range
    for t in temps:
        te = t + cfg.crystal.temp_offset
        if te < tlo:
            raise ValidationError(f"temperature {t:.2f} C (+{cfg.crystal.temp_offset:.3f} C offset) "
                                  f"below lower bound {tlo:g} C")
        if te > thi:
            raise ValidationError(f"temperature {t:.2f} C (+{cfg.crystal.temp_offset:.3f} C offset) "
                                  f"above upper bound {thi:g} C")


def _positive(name, value):
    if not value > 0:
        raise ValidationError(f"{name} must be > 0, got {value}")


def _write_or_print(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_tuning_curve(args):
    cfg = load_config(args.config)
    _positive("--step", args.step)
    if args.t_stop < args.t_start:
        raise ValidationError("--t-stop must be >= --t-start")
    _check_temperature(cfg, args.t_start, args.t_stop)
    curve = tuning_curve((args.t_start, args.t_stop), args.step, cfg.external_angle, cfg.crystal,
                         cfg.pump, cfg.geometry, args.slope_window, args.workers)
    _write_or_print(write_tuning_curve(curve), args.output)
    out = sys.stdout if args.output not in (None, "-") else sys.stderr
    print(f"rows: {len(curve.rows)}", file=out)
    if curve.degeneracy_temperature is not None:
        print(f"degeneracy_temperature_C: {curve.degeneracy_temperature:.4f}", file=out)
    if curve.slope is None:
        print("slope_per_C: n/a (need >= 2 rows above degeneracy)", file=out)
    else:
        lo, hi = curve.slope_window
        print(f"slope_per_C: {curve.slope:.4f}  (window {lo:.2f}-{hi:.2f} C; "
              f"reference theory {ref.THEORY_RATIO_SLOPE})", file=out)
    return EXIT_OK


def _spectrum(cfg, args):
    grid = None
    if args.lambda_min_nm is not None or args.lambda_max_nm is not None:
        if args.lambda_min_nm is None or args.lambda_max_nm is None:
            raise ValidationError("give both --lambda-min-nm and --lambda-max-nm")
        if not args.lambda_min_nm < args.lambda_max_nm:
            raise ValidationError("--lambda-min-nm must be below --lambda-max-nm")
        grid = np.linspace(args.lambda_min_nm, args.lambda_max_nm, args.points) * 1e-9
    elif args.points != 8192:
        from .phasematch import auto_grid
        grid = auto_grid(cfg.external_angle, args.temperature, cfg.crystal, cfg.pump,
                         cfg.geometry, n_points=args.points)
    return emission_spectrum(cfg.external_angle, args.temperature, cfg.crystal, cfg.pump, grid,
                             cfg.geometry, cfg.angular_halfwidth)


def cmd_spectrum(args):
    cfg = load_config(args.config)
    _check_temperature(cfg, args.temperature)
    if args.points < 16:
        raise ValidationError("--points must be >= 16")
    spec = _spectrum(cfg, args)
    _write_or_print(write_spectrum(spec), args.output)
    out = sys.stdout if args.output not in (None, "-") else sys.stderr
    for i, lobe in enumerate(spec.lobes):
        print(f"lobe {i}: center_nm {lobe.center * 1e9:.4f}  fwhm_nm {lobe.fwhm * 1e9:.4f}", file=out)
    return EXIT_OK


def _report(fit, mean_wavelength):
    p = fit.params
    scales = extract_wavelength_scales(p, mean_wavelength)
    ratio = scales.delta_lambda / scales.bandwidth
    lines = [
        "[fit]",
        f"N = {p.N:.8g}",
        f"V = {p.V:.8g}",
        f"delta_omega_rad_per_s = {p.delta_omega:.8g}",
        f"envelope_width_s = {p.envelope_width:.8g}",
        f"envelope_shape = {p.envelope_shape}",
        f"stderr_N = {fit.stderr['N']:.3g}",
        f"stderr_V = {fit.stderr['V']:.3g}",
        f"stderr_delta_omega_rad_per_s = {fit.stderr['delta_omega']:.3g}",
        f"stderr_envelope_width_s = {fit.stderr['envelope_width']:.3g}",
        f"reduced_chi2 = {fit.reduced_chi2:.6g}",
        f"mean_wavelength_nm = {mean_wavelength * 1e9:.4f}",
        f"delta_lambda_nm = {scales.delta_lambda * 1e9:.4f}",
        f"bandwidth_nm = {scales.bandwidth * 1e9:.4f}",
        f"ratio = {ratio:.4f}",
        f"beat_identifiable = {str(fit.beat_identifiable).lower()}",
        f"correlated = {str(fit.correlated).lower()}",
    ]
    return "\n".join(lines) + "\n"


def cmd_hom_scan(args):
    cfg = load_config(args.config)
    _check_temperature(cfg, args.temperature)
    _positive("--dx-step-um", args.dx_step_um)
    if not args.dx_max_um > args.dx_min_um:
        raise ValidationError("--dx-max-um must exceed --dx-min-um")
    if args.spectrum_points < 4096:
        raise ValidationError("--spectrum-points must be >= 4096")
    n = int(math.floor((args.dx_max_um - args.dx_min_um) / args.dx_step_um + 1e-9)) + 1
    dx = (args.dx_min_um + args.dx_step_um * np.arange(n)) * 1e-6
    bs = BeamSplitter(cfg.bs_transmittance, cfg.bs_reflectance)
    args.lambda_min_nm = args.lambda_max_nm = None
    args.points = args.spectrum_points
    spec = _spectrum(cfg, args)
    tps = build_two_photon_spectrum(spec, cfg.pump)
    trace = hom_from_spectrum(tps, bs, dx)
    if args.counts:
        _positive("--dwell-s", args.dwell_s)
        cnt = cfg.counting
        base = CountingRates(cnt.get("singles_1_hz", ref.HOM_SINGLES),
                             cnt.get("singles_2_hz", ref.HOM_SINGLES),
                             cnt.get("coincidences_hz", ref.HOM_COINCIDENCES),
                             cnt.get("window_ns", ref.COINCIDENCE_WINDOW * 1e9) * 1e-9,
                             cfg.pump.power, args.dwell_s)
        seed = args.seed if args.seed is not None else int(cnt.get("seed", 0))
        raw = simulate_counts(rates_along_trace(trace.values, base), args.dwell_s, seed)
        net, _ = subtract_accidentals(raw, base.singles_1, base.singles_2, base.window,
                                      args.dwell_s)
        scale = base.coincidences * args.dwell_s
        trace = HomTrace(dx, net / scale, counts=net, errors=np.sqrt(np.maximum(raw, 1)) / scale)
    _write_or_print(write_hom_trace(trace), args.output)
    out = sys.stdout if args.output not in (None, "-") else sys.stderr
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_hom_trace(trace, shape=args.fit_shape)
    print(f"temperature_C = {args.temperature:.2f}", file=out)
    print(f"lobe_separation_nm = {(spec.lobes[-1].center - spec.lobes[0].center) * 1e9:.4f}"
          if spec.bimodal else "lobe_separation_nm = 0.0000", file=out)
    print(f"spectrum_fwhm_nm = {fwhm_bandwidth(spec) * 1e9:.4f}", file=out)
    print(f"max_visibility = {max_visibility(bs):.4f}", file=out)
    out.write(_report(fit, cfg.pump.degenerate_wavelength))
    target = ref.HOM_RESULTS.get(round(args.temperature, 2))
    if target is not None:
        v, dl, bw = target
        print("[reference]", file=out)
        print(f"V = {v}", file=out)
        if dl is not None:
            print(f"delta_lambda_nm = {dl * 1e9:.2f}", file=out)
            print(f"bandwidth_nm = {bw * 1e9:.2f}", file=out)
        print(f"max_visibility = {ref.MAX_VISIBILITY}", file=out)
    return EXIT_OK


def cmd_fit(args):
    trace = read_hom_trace(args.trace)
    if args.mean_wavelength_nm is not None:
        _positive("--mean-wavelength-nm", args.mean_wavelength_nm)
        lam = args.mean_wavelength_nm * 1e-9
    else:
        lam = load_config(args.config).pump.degenerate_wavelength
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_hom_trace(trace, shape=args.shape)
    _write_or_print(_report(fit, lam), args.output)
    return EXIT_OK


def cmd_counts(args):
    cfg = load_config(args.config)
    cnt = cfg.counting
    n1 = args.singles_1_hz if args.singles_1_hz is not None else cnt.get("singles_1_hz", ref.HOM_SINGLES)
    n2 = args.singles_2_hz if args.singles_2_hz is not None else cnt.get("singles_2_hz", ref.HOM_SINGLES)
    nc = (args.coincidences_hz if args.coincidences_hz is not None
          else cnt.get("coincidences_hz", ref.HOM_COINCIDENCES))
    window = (args.window_ns if args.window_ns is not None
              else cnt.get("window_ns", ref.COINCIDENCE_WINDOW * 1e9)) * 1e-9
    power_mw = args.power_mw if args.power_mw is not None else cfg.pump.power * 1e3
    for name, v in (("singles_1", n1), ("singles_2", n2)):
        _positive(name, v)
    if nc < 0:
        raise ValidationError("coincidence rate must be >= 0")
    _positive("window", window)
    _positive("pump power", power_mw)
    figures = SourceFigures(car_coefficient=cnt.get("car_coefficient_mw", 16.85),
                            g2_slope=cnt.get("g2_slope_per_mw", 0.087))
    acc = accidental_rate(n1, n2, window)
    lines = [
        "[counts]",
        f"singles_1_Hz = {n1:g}",
        f"singles_2_Hz = {n2:g}",
        f"coincidences_Hz = {nc:g}",
        f"window_ns = {window * 1e9:g}",
        f"pump_power_mW = {power_mw:g}",
        f"accidental_rate_Hz = {acc:.4f}",
        f"accidental_fraction = {acc / nc:.6f}" if nc > 0 else "accidental_fraction = inf",
        f"normalized_coincidence_ratio = {normalized_coincidence_ratio(nc, n1, n2):.6f}",
        f"car_model = {car_model(power_mw, figures):.4f}",
        f"heralded_g2_model = {heralded_g2_model(power_mw, figures):.6f}",
        "",
        "[reference]",
        f"accidental_fraction = {ref.ACCIDENTAL_FRACTION}",
        f"normalized_coincidence_ratio = {figures.norm_coincidence_ratio}",
        f"car_coefficient_mW = {figures.car_coefficient}",
        f"g2_slope_per_mW = {figures.g2_slope}",
        f"pair_rate_per_mW_Hz = {figures.pair_rate_per_mW:g}",
        f"conversion_efficiency = {figures.conversion_efficiency:g}",
    ]
    _write_or_print("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_calibrate(args):
    cfg = load_config(args.config)
    lam = (args.target_wavelength_nm * 1e-9 if args.target_wavelength_nm is not None
           else cfg.pump.degenerate_wavelength)
    raw = cfg.crystal.with_offset(0.0)
    tlo, thi = raw.sellmeier.valid_temperature_range
    t_star = degeneracy_temperature(cfg.external_angle, raw, cfg.pump, (tlo, thi), cfg.geometry)
    offset = calibrate_temperature_offset(raw, cfg.pump, cfg.external_angle, lam,
                                          args.target_temperature, cfg.geometry)
    cal = raw.with_offset(offset)
    t_check = degeneracy_temperature(cfg.external_angle, cal, cfg.pump,
                                     (args.target_temperature - 2, args.target_temperature + 2),
                                     cfg.geometry)
    print(f"uncalibrated_degeneracy_C = {t_star:.4f}")
    print(f"temp_offset_C = {offset:.6f}")
    print(f"calibrated_degeneracy_C = {t_check:.4f}")
    print(f"degenerate_wavelength_nm = {cfg.pump.degenerate_wavelength * 1e9:.4f}")
    if args.write:
        write_config(replace(cfg, crystal=cal), args.write)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ppslt",
        description="Frequency-entangled photon pairs from noncollinear 3rd-order QPM in PPMgSLT.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="INI configuration [path] (default: packaged 20 mm PPMgSLT setup)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tuning-curve", parents=[common],
                       help="discreteness ratio versus crystal temperature (CSV)")
    p.add_argument("--t-start", type=float, default=22.0, help="first temperature [C]")
    p.add_argument("--t-stop", type=float, default=30.0, help="last temperature [C]")
    p.add_argument("--step", type=float, default=0.1, help="temperature step [C]")
    p.add_argument("--slope-window", type=float, default=4.0,
                   help="slope fitted over [T_deg, T_deg + window] [C]")
    p.add_argument("--workers", type=int, default=1, help="parallel rows [count]")
    p.add_argument("-o", "--output", help="CSV output [path] ('-' or omitted: stdout)")
    p.set_defaults(func=cmd_tuning_curve)

    p = sub.add_parser("spectrum", parents=[common], help="single-arm emission spectrum (CSV)")
    p.add_argument("--temperature", type=float, default=25.0, help="crystal temperature [C]")
    p.add_argument("--points", type=int, default=8192, help="grid size [count]")
    p.add_argument("--lambda-min-nm", type=float, help="grid start [nm] (default: auto)")
    p.add_argument("--lambda-max-nm", type=float, help="grid stop [nm] (default: auto)")
    p.add_argument("-o", "--output", help="CSV output [path] ('-' or omitted: stdout)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("hom-scan", parents=[common],
                       help="HOM quantum-beat trace from the computed spectrum (CSV)")
    p.add_argument("--temperature", type=float, default=25.0, help="crystal temperature [C]")
    p.add_argument("--dx-min-um", type=float, default=-400.0, help="path difference start [um]")
    p.add_argument("--dx-max-um", type=float, default=400.0, help="path difference stop [um]")
    p.add_argument("--dx-step-um", type=float, default=1.0, help="path difference step [um]")
    p.add_argument("--spectrum-points", type=int, default=8192,
                   help="spectral quadrature points [count, >= 4096]")
    p.add_argument("--counts", action="store_true",
                   help="add Poisson counts at the configured rates [Hz] and subtract accidentals")
    p.add_argument("--dwell-s", type=float, default=1.0, help="counting time per point [s]")
    p.add_argument("--seed", type=int, help="RNG seed [integer] (default: config)")
    p.add_argument("--fit-shape", choices=("gaussian", "triangle"), default="gaussian",
                   help="envelope model for the fit [-]")
    p.add_argument("-o", "--output", help="CSV output [path] ('-' or omitted: stdout)")
    p.set_defaults(func=cmd_hom_scan)

    p = sub.add_parser("fit", parents=[common], help="fit the quantum-beat model to a trace CSV")
    p.add_argument("trace", help="CSV with columns dx_um [um], p_norm [-], optional counts, err")
    p.add_argument("--shape", choices=("gaussian", "triangle"), default="gaussian",
                   help="envelope model [-]")
    p.add_argument("--mean-wavelength-nm", type=float,
                   help="mean photon wavelength for the nm conversion [nm] (default: 2 x pump)")
    p.add_argument("-o", "--output", help="report output [path] ('-' or omitted: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("counts", parents=[common], help="counting figures of merit")
    p.add_argument("--singles-1-hz", type=float, help="singles rate arm 1 [Hz]")
    p.add_argument("--singles-2-hz", type=float, help="singles rate arm 2 [Hz]")
    p.add_argument("--coincidences-hz", type=float, help="coincidence rate [Hz]")
    p.add_argument("--window-ns", type=float, help="coincidence resolving time [ns]")
    p.add_argument("--power-mw", type=float, help="pump power [mW]")
    p.add_argument("-o", "--output", help="report output [path] ('-' or omitted: stdout)")
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("calibrate", parents=[common],
                       help="temperature offset placing degeneracy at the target")
    p.add_argument("--target-temperature", type=float, default=ref.DEGENERATE_TEMPERATURE,
                   help="degeneracy temperature to reproduce [C]")
    p.add_argument("--target-wavelength-nm", type=float,
                   help="degenerate wavelength [nm] (default: 2 x pump)")
    p.add_argument("--write", metavar="FILE", help="write the calibrated config to FILE [path]")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
