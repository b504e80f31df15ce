"""Frequency-entangled photon pairs from a 3rd-order PPMgSLT SPDC source."""

__version__ = "0.1.0"
