"""INI configuration: one section per module, flat ``key = value`` entries.

Coefficient arrays are comma-separated. Units are spelled out in the key
names (``_mm``, ``_um``, ``_nm``, ``_deg``, ``_C``...).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .dispersion import CrystalSpec, SellmeierSet, ThermalExpansion
from .errors import ConfigError, DomainError
from .phasematch import GEOMETRIES, PumpSpec

DEFAULT_CONFIG_NAME = "ppmgslt_20mm.ini"

SECTION_KEYS = {
    "sellmeier": {"form_id", "coefficients", "wavelength_min_um", "wavelength_max_um",
                  "temperature_min_C", "temperature_max_C", "source_note"},
    "crystal": {"name", "length_mm", "poling_period_um", "qpm_order", "thermal_expansion_per_C",
                "thermal_reference_C", "temp_offset_C", "d33_pm_per_V"},
    "pump": {"wavelength_nm", "power_mW", "linewidth_Hz"},
    "geometry": {"external_angle_deg", "geometry", "angular_halfwidth_deg"},
    "beamsplitter": {"transmittance", "reflectance"},
    "counting": {"singles_1_Hz", "singles_2_Hz", "coincidences_Hz", "window_ns", "dwell_s",
                 "car_coefficient_mW", "g2_slope_per_mW", "seed"},
}


def default_config_path() -> Path:
    return Path(str(resources.files("ppslt") / "data" / DEFAULT_CONFIG_NAME))


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a configuration file."""

    crystal: CrystalSpec
    pump: PumpSpec
    external_angle: float  # rad
    geometry: str = "symmetric"
    angular_halfwidth: float = 0.0  # rad
    bs_transmittance: float = 0.6094
    bs_reflectance: float = 0.3906
    counting: dict = field(default_factory=dict)
    source: Optional[str] = None


def _float(cp, section, key, default=None):
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    raw = cp.get(section, key)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None


def parse_coefficients(raw: str):
    try:
        return tuple(float(tok) for tok in raw.replace("\n", ",").split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"bad coefficient list {raw!r}") from None


def _check_unknown(cp):
    for section in cp.sections():
        if section not in SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        extra = set(cp.options(section)) - {k.lower() for k in SECTION_KEYS[section]}
        if extra:
            raise ConfigError(f"[{section}] unknown keys: {', '.join(sorted(extra))}")


def _parser():
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str.lower
    return cp


def read_sellmeier(cp) -> SellmeierSet:
    s = "sellmeier"
    if not cp.has_section(s):
        raise ConfigError("missing [sellmeier] section")
    try:
        return SellmeierSet(
            form_id=cp.get(s, "form_id", fallback="").strip(),
            coefficients=parse_coefficients(cp.get(s, "coefficients", fallback="")),
            valid_wavelength_range=(_float(cp, s, "wavelength_min_um"),
                                    _float(cp, s, "wavelength_max_um")),
            valid_temperature_range=(_float(cp, s, "temperature_min_C".lower()),
                                     _float(cp, s, "temperature_max_C".lower())),
            source_note=cp.get(s, "source_note", fallback="").strip(),
        )
    except DomainError as exc:
        raise ConfigError(f"[sellmeier] {exc}") from None


def load_config(path=None) -> RunConfig:
    """Read and validate a configuration file (the packaged 20 mm PPMgSLT setup by default)."""
    path = Path(path) if path is not None else default_config_path()
    cp = _parser()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    _check_unknown(cp)
    sellmeier = read_sellmeier(cp)

    c = "crystal"
    if not cp.has_section(c):
        raise ConfigError("missing [crystal] section")
    alpha = _float(cp, c, "thermal_expansion_per_c", 0.0)
    thermal = None
    if cp.has_option(c, "thermal_expansion_per_c"):
        thermal = ThermalExpansion(alpha, _float(cp, c, "thermal_reference_c", 25.0))
    order = _float(cp, c, "qpm_order")
    if order != int(order):
        raise ConfigError(f"[crystal] qpm_order must be an integer, got {order}")
    try:
        crystal = CrystalSpec(
            length=_float(cp, c, "length_mm") * 1e-3,
            poling_period=_float(cp, c, "poling_period_um") * 1e-6,
            qpm_order=int(order),
            sellmeier=sellmeier,
            thermal_expansion=thermal,
            temp_offset=_float(cp, c, "temp_offset_c", 0.0),
            d33=_float(cp, c, "d33_pm_per_v", 13.8),
            name=cp.get(c, "name", fallback=""),
        )
        p = "pump"
        pump = PumpSpec(
            wavelength=_float(cp, p, "wavelength_nm", 355.66) * 1e-9,
            power=_float(cp, p, "power_mw", 0.023) * 1e-3,
            linewidth=_float(cp, p, "linewidth_hz", 1e6),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None

    g = "geometry"
    theta = _float(cp, g, "external_angle_deg", 1.7)
    if not abs(theta) < 90:
        raise ConfigError(f"[geometry] external_angle_deg must be within (-90, 90), got {theta}")
    geometry = cp.get(g, "geometry", fallback="symmetric").strip()
    if geometry not in GEOMETRIES:
        raise ConfigError(f"[geometry] geometry must be one of {GEOMETRIES}, got {geometry!r}")

    b = "beamsplitter"
    t_bs = _float(cp, b, "transmittance", 0.6094)
    r_bs = _float(cp, b, "reflectance", 0.3906)
    if not (0 <= t_bs <= 1 and 0 <= r_bs <= 1 and t_bs + r_bs <= 1 + 1e-9):
        raise ConfigError("[beamsplitter] need 0 <= T, R <= 1 and T + R <= 1")

    counting = {}
    if cp.has_section("counting"):
        for key in cp.options("counting"):
            counting[key] = _float(cp, "counting", key)
    return RunConfig(crystal, pump, math.radians(theta), geometry,
                     math.radians(_float(cp, g, "angular_halfwidth_deg", 0.0)),
                     t_bs, r_bs, counting, str(path))


def write_config(cfg: RunConfig, path) -> None:
    """Serialize ``cfg`` back to INI (used by ``calibrate --write``)."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    s = cfg.crystal.sellmeier
    cp["sellmeier"] = {
        "form_id": s.form_id,
        "coefficients": ", ".join(repr(x) for x in s.coefficients),
        "wavelength_min_um": repr(s.valid_wavelength_range[0]),
        "wavelength_max_um": repr(s.valid_wavelength_range[1]),
        "temperature_min_C": repr(s.valid_temperature_range[0]),
        "temperature_max_C": repr(s.valid_temperature_range[1]),
        "source_note": s.source_note,
    }
    cr = cfg.crystal
    crystal = {
        "name": cr.name,
        "length_mm": repr(cr.length * 1e3),
        "poling_period_um": repr(cr.poling_period * 1e6),
        "qpm_order": str(cr.qpm_order),
        "temp_offset_C": f"{cr.temp_offset:.6f}",
        "d33_pm_per_V": repr(cr.d33),
    }
    if cr.thermal_expansion is not None:
        crystal["thermal_expansion_per_C"] = repr(cr.thermal_expansion.alpha)
        crystal["thermal_reference_C"] = repr(cr.thermal_expansion.reference_temperature)
    cp["crystal"] = crystal
    cp["pump"] = {
        "wavelength_nm": repr(cfg.pump.wavelength * 1e9),
        "power_mW": repr(cfg.pump.power * 1e3),
        "linewidth_Hz": repr(cfg.pump.linewidth),
    }
    cp["geometry"] = {
        "external_angle_deg": repr(math.degrees(cfg.external_angle)),
        "geometry": cfg.geometry,
        "angular_halfwidth_deg": repr(math.degrees(cfg.angular_halfwidth)),
    }
    cp["beamsplitter"] = {"transmittance": repr(cfg.bs_transmittance),
                          "reflectance": repr(cfg.bs_reflectance)}
    if cfg.counting:
        canonical = {k.lower(): k for k in SECTION_KEYS["counting"]}
        cp["counting"] = {canonical.get(k, k): str(int(v)) if k == "seed" else repr(v)
                          for k, v in cfg.counting.items()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cp.write(fh)
