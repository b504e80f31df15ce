"""CSV emission and parsing (UTF-8, LF, '.' decimal separator)."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .phasematch import PhotonSpectrum, TuningCurve
from .twophoton import HomTrace

TUNING_COLUMNS = ("T_C", "lambda_s_nm", "lambda_i_nm", "delta_lambda_nm", "bandwidth_nm", "ratio")
SPECTRUM_COLUMNS = ("wavelength_nm", "density_per_nm")
HOM_COLUMNS = ("dx_um", "p_norm", "counts", "err")


def _emit(rows, header, dest):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8", newline="\n")
    return text


def write_tuning_curve(curve: TuningCurve, dest=None) -> str:
    rows = [(f"{r.temperature:.2f}", f"{r.signal_wavelength * 1e9:.4f}",
             f"{r.idler_wavelength * 1e9:.4f}", f"{r.delta_lambda * 1e9:.4f}",
             f"{r.bandwidth * 1e9:.4f}", f"{r.ratio:.6f}") for r in curve.rows]
    return _emit(rows, TUNING_COLUMNS, dest)


def write_spectrum(spec: PhotonSpectrum, dest=None) -> str:
    rows = [(f"{lam * 1e9:.4f}", f"{d * 1e-9:.8e}")
            for lam, d in zip(spec.wavelengths, spec.density)]
    return _emit(rows, SPECTRUM_COLUMNS, dest)


def write_hom_trace(trace: HomTrace, dest=None) -> str:
    header = ["dx_um", "p_norm"]
    cols = [[f"{x * 1e6:.6f}" for x in trace.dx], [f"{v:.10f}" for v in trace.values]]
    if trace.counts is not None:
        header.append("counts")
        cols.append([f"{c:.6f}" for c in trace.counts])
    if trace.errors is not None:
        header.append("err")
        cols.append([f"{e:.6f}" for e in trace.errors])
    return _emit(list(zip(*cols)), header, dest)


def read_hom_trace(source) -> HomTrace:
    """Parse a HOM trace CSV (path or text stream); errors name the line number."""
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", "<stream>")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ParseError(f"cannot read {source}: {exc}") from None
        name = str(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{name}: empty file") from None
    header = [h.strip() for h in header]
    for required in ("dx_um", "p_norm"):
        if required not in header:
            raise ParseError(f"{name}:1: missing column {required!r}")
    unknown = set(header) - set(HOM_COLUMNS)
    if unknown:
        raise ParseError(f"{name}:1: unknown columns {sorted(unknown)}")
    idx = {h: i for i, h in enumerate(header)}
    data = {h: [] for h in header}
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{name}:{line}: expected {len(header)} fields, got {len(row)}")
        for h in header:
            cell = row[idx[h]].strip()
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{name}:{line}: {h} = {cell!r} is not a number") from None
            if not math.isfinite(value):
                raise ParseError(f"{name}:{line}: {h} is not finite")
            data[h].append(value)
    if not data["dx_um"]:
        raise ParseError(f"{name}: no data rows")
    dx = np.array(data["dx_um"]) * 1e-6
    if np.any(np.diff(dx) <= 0):
        raise ParseError(f"{name}: dx_um must be strictly increasing")
    return HomTrace(dx, np.array(data["p_norm"]),
                    counts=np.array(data["counts"]) if "counts" in data else None,
                    errors=np.array(data["err"]) if "err" in data else None)
