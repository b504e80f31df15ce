"""Photon-counting figures of merit and a seeded Poisson count simulator.

CAR and heralded g2 are empirical linear-in-power models. Their coefficients
come from :class:`SourceFigures`, which can be overridden from config.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class CountingRates:
    singles_1: float  # Hz
    singles_2: float  # Hz
    coincidences: float  # Hz
    window: float = 19.45e-9  # s
    pump_power: float = 23e-6  # W
    duration: float = 1.0  # s

    def __post_init__(self):
        for name in ("singles_1", "singles_2", "coincidences", "pump_power"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if not self.window > 0:
            raise DomainError("coincidence window must be > 0")
        if not self.duration > 0:
            raise DomainError("duration must be > 0")
        if self.coincidences > min(self.singles_1, self.singles_2):
            warnings.warn("coincidence rate exceeds a singles rate", RuntimeWarning, stacklevel=3)


@dataclass(frozen=True)
class SourceFigures:
    """Reported source figures (reference values; not predicted by this package)."""

    pair_rate_per_mW: float = 98_500.0  # detected coincidences, Hz/mW
    in_crystal_pair_rate_per_mW: float = 3e6  # Hz/mW
    conversion_efficiency: float = 1.66e-9
    norm_coincidence_ratio: float = 0.1860
    car_coefficient: float = 16.85  # CAR = coefficient / P[mW]
    g2_slope: float = 0.087  # g2 = slope * P[mW]

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise DomainError(f"{name} must be >= 0")


REFERENCE_FIGURES = SourceFigures()


def accidental_rate(singles_1, singles_2, window):
    """Accidental coincidence rate N1 N2 T_R in Hz."""
    if np.any(np.asarray(singles_1) < 0) or np.any(np.asarray(singles_2) < 0) or window < 0:
        raise DomainError("rates and window must be >= 0")
    return singles_1 * singles_2 * window


def normalized_coincidence_ratio(coincidences, singles_1, singles_2):
    if singles_1 <= 0 or singles_2 <= 0:
        raise DomainError("singles rates must be > 0")
    return coincidences / np.sqrt(singles_1 * singles_2)


def car_model(power_mW, figures: SourceFigures = REFERENCE_FIGURES):
    if np.any(np.asarray(power_mW) <= 0):
        raise DomainError("pump power must be > 0 for CAR")
    return figures.car_coefficient / power_mW


def heralded_g2_model(power_mW, figures: SourceFigures = REFERENCE_FIGURES):
    if np.any(np.asarray(power_mW) < 0):
        raise DomainError("pump power must be >= 0")
    return figures.g2_slope * power_mW


def _rate_arrays(rates):
    if isinstance(rates, CountingRates):
        rates = [rates]
    nc = np.array([r.coincidences for r in rates], dtype=float)
    floor = np.array([accidental_rate(r.singles_1, r.singles_2, r.window) for r in rates])
    return nc, floor


def simulate_counts(expected_rates: Union[CountingRates, Sequence[CountingRates]], duration,
                    seed=None):
    """Poisson coincidence counts per point, accidental floor included.

    Each point draws from Poisson((N_c + N1 N2 T_R) * duration). Pass an
    integer seed or a ``numpy.random.Generator`` for reproducibility.
    """
    if not duration > 0:
        raise DomainError("duration must be > 0")
    nc, floor = _rate_arrays(expected_rates)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.poisson((nc + floor) * duration)


def rates_along_trace(values, base: CountingRates):
    """One :class:`CountingRates` per trace point, coincidences scaled by ``values``."""
    return [CountingRates(base.singles_1, base.singles_2, base.coincidences * float(v),
                          base.window, base.pump_power, base.duration) for v in values]


def subtract_accidentals(raw_counts, singles_1, singles_2, window, duration):
    """Net counts ``raw - N1 N2 T_R duration`` clamped at zero.

    Returns ``(net, clamped)`` where ``clamped`` marks points that were
    below the accidental floor.
    """
    raw = np.asarray(raw_counts, dtype=float)
    net = raw - accidental_rate(singles_1, singles_2, window) * duration
    clamped = net < 0
    return np.where(clamped, 0.0, net), clamped
