"""Glucose calibration: measurement ingestion, affine fits and conversions.

A calibration curve is the affine map ``value = slope * c + intercept`` from
concentration (mM) to either sensor current (A) or readout voltage (V).
Conversions outside the fitted concentration domain succeed but emit an
:class:`~ptia.errors.ExtrapolationWarning`.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import config
from ._stats import ols
from .chain import evaluate
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateFitError,
    DomainError,
    ExtrapolationWarning,
    NonInvertibleError,
    ParseError,
)
from .profile import Profile

TARGETS = ("current", "voltage")

# recognized CSV columns (matched case-insensitively) -> record field
COLUMNS = {"conc_mm": "conc_mM", "i_a": "i_A", "v_v": "v_V", "t_s": "t_s", "scan": "scan"}

# detection window the synthetic current curve maps 1-10 mM onto
SYNTHETIC_DOMAIN = (1.0, 10.0)
SYNTHETIC_CURRENTS = (4.2e-6, 180e-6)
# readout voltage observed at the ends of the 1-10 mM range
ENDPOINT_VOLTAGES = ((1.0, 1.19), (10.0, 1.67))


class MeasurementRecord(NamedTuple):
    """One data row. ``index`` is the 0-based row number; absent cells are None."""

    index: int
    line: int
    t_s: float | None = None
    conc_mM: float | None = None
    i_A: float | None = None
    v_V: float | None = None
    scan: int | None = None


@dataclass(frozen=True)
class CalibrationCurve:
    slope: float
    intercept: float
    r_squared: float
    c_min: float
    c_max: float
    target: str

    def __post_init__(self):
        if self.target not in TARGETS:
            raise DomainError(f"target must be 'current' or 'voltage', got {self.target!r}")
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise DomainError("slope and intercept must be finite")
        if not 0.0 <= self.r_squared <= 1.0:
            raise DomainError(f"r_squared must lie in [0, 1], got {self.r_squared}")
        if not self.c_min < self.c_max:
            raise DomainError(f"domain needs c_min < c_max, got [{self.c_min}, {self.c_max}]")

    @property
    def domain(self) -> tuple[float, float]:
        return self.c_min, self.c_max

    @property
    def unit(self) -> str:
        return "A" if self.target == "current" else "V"


# ---------------------------------------------------------------------------
# ingestion


def parse_records(source: str | Path | io.TextIOBase) -> list[MeasurementRecord]:
    """Parse a measurement CSV.

    ``source`` is a path, an open text stream, or the CSV text itself (any
    string containing a newline). Unrecognized columns are ignored.
    """
    text, name = _read_source(source)
    reader = csv.reader(io.StringIO(text))
    header = None
    for row in reader:
        if any(cell.strip() for cell in row):
            header = row
            break
    if header is None:
        raise DataFormatError(f"{name}: file is empty")
    header_line = reader.line_num
    fields = {}
    for col, cell in enumerate(header):
        key = COLUMNS.get(cell.strip().lower())
        if key is not None:
            if key in fields.values():
                raise DataFormatError(f"{name}: column {cell.strip()!r} appears twice", line=header_line)
            fields[col] = key
    if "i_A" not in fields.values() and "v_V" not in fields.values():
        raise DataFormatError(f"{name}: header needs an i_A or v_V column", line=header_line)

    records = []
    for row in reader:
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"{name}: expected {len(header)} cells, got {len(row)}", line=line)
        values = {}
        for col, key in fields.items():
            cell = row[col].strip()
            if not cell:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{name}: column {header[col].strip()!r}: {cell!r} is not a number", line=line) from None
            if not math.isfinite(value):
                raise ParseError(f"{name}: column {header[col].strip()!r}: non-finite value", line=line)
            if key == "scan":
                if value != int(value):
                    raise ParseError(f"{name}: scan number {cell!r} is not an integer", line=line)
                value = int(value)
            values[key] = value
        if "i_A" not in values and "v_V" not in values:
            raise DataFormatError(f"{name}: row has neither current nor voltage", line=line)
        if values.get("conc_mM", 0.0) < 0.0:
            raise DataFormatError(f"{name}: negative concentration", line=line)
        records.append(MeasurementRecord(len(records), line, **values))
    return records


def _read_source(source) -> tuple[str, str]:
    if isinstance(source, io.TextIOBase):
        return source.read(), getattr(source, "name", "<stream>")
    if isinstance(source, str) and "\n" in source:
        return source, "<string>"
    path = Path(source)
    try:
        return path.read_text(encoding="utf-8"), str(path)
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc


def peak_currents(records: Iterable[MeasurementRecord]) -> dict[int, MeasurementRecord]:
    """Record of largest ``|i_A|`` in each scan (records without a scan count as scan 0).

    Ties keep the first record.
    """
    peaks: dict[int, MeasurementRecord] = {}
    for rec in records:
        if rec.i_A is None:
            continue
        scan = 0 if rec.scan is None else rec.scan
        best = peaks.get(scan)
        if best is None or abs(rec.i_A) > abs(best.i_A):
            peaks[scan] = rec
    return dict(sorted(peaks.items()))


# ---------------------------------------------------------------------------
# fitting


def fit_linear(points: Sequence[tuple[float, float]], target: str = "voltage") -> CalibrationCurve:
    """Least-squares calibration line through ``(concentration, value)`` pairs."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise DegenerateFitError("need at least two points")
    c, y = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise DomainError("calibration points must be finite")
    try:
        fit = ols(c, y)
    except ZeroDivisionError:
        raise DegenerateFitError("all concentrations are identical") from None
    return CalibrationCurve(fit.slope, fit.intercept, fit.r_squared, float(c.min()), float(c.max()), target)


def fit_records(records: Iterable[MeasurementRecord], target: str = "voltage") -> CalibrationCurve:
    """Fit concentration against ``v_V`` (voltage) or ``i_A`` (current)."""
    field = {"voltage": "v_V", "current": "i_A"}.get(target)
    if field is None:
        raise DomainError(f"target must be 'current' or 'voltage', got {target!r}")
    pts = [(r.conc_mM, getattr(r, field)) for r in records if r.conc_mM is not None and getattr(r, field) is not None]
    if not pts:
        raise DataFormatError(f"no rows carry both conc_mM and {field}")
    return fit_linear(pts, target)


def two_point_curve(p1: tuple[float, float], p2: tuple[float, float], target: str = "voltage") -> CalibrationCurve:
    return fit_linear([p1, p2], target)


def endpoint_voltage_curve() -> CalibrationCurve:
    """Readout voltage line through 1.19 V at 1 mM and 1.67 V at 10 mM."""
    return two_point_curve(*ENDPOINT_VOLTAGES, target="voltage")


def synthetic_current_curve() -> CalibrationCurve:
    """Synthetic sensor-current line mapping 1-10 mM onto 4.2-180 uA.

    No published regression coefficients exist for the sensor, so this curve
    is constructed to fill the readout's detection window.
    """
    (c0, c1), (i0, i1) = SYNTHETIC_DOMAIN, SYNTHETIC_CURRENTS
    return two_point_curve((c0, i0), (c1, i1), target="current")


# ---------------------------------------------------------------------------
# conversions


def _require(curve: CalibrationCurve, target: str):
    if curve.target != target:
        raise DomainError(f"curve maps concentration to {curve.target}, not {target}")


def _flag_domain(curve: CalibrationCurve, c, what: str):
    c_arr = np.asarray(c, dtype=np.float64)
    # 1e-9 relative slack so round-off at the fitted endpoints does not warn
    slack = 1e-9 * max(abs(curve.c_min), abs(curve.c_max), 1.0)
    outside = (c_arr < curve.c_min - slack) | (c_arr > curve.c_max + slack)
    if np.any(outside):
        warnings.warn(
            f"{what} outside the calibrated domain [{curve.c_min:g}, {curve.c_max:g}] mM",
            ExtrapolationWarning,
            stacklevel=3,
        )


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def _invert(curve: CalibrationCurve, y):
    if curve.slope == 0.0:
        raise NonInvertibleError("calibration slope is zero")
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise DomainError("measured values must be finite")
    c = (y - curve.intercept) / curve.slope
    _flag_domain(curve, c, "concentration")
    return _scalar_or_array(c)


def _forward(curve: CalibrationCurve, c):
    c = np.asarray(c, dtype=np.float64)
    if not np.all(np.isfinite(c)):
        raise DomainError("concentrations must be finite")
    if np.any(c < 0.0):
        raise DomainError("concentration must be non-negative")
    _flag_domain(curve, c, "concentration")
    return _scalar_or_array(curve.slope * c + curve.intercept)


def concentration_from_voltage(curve: CalibrationCurve, v):
    """Concentration (mM) for readout voltage ``v``."""
    _require(curve, "voltage")
    return _invert(curve, v)


def concentration_from_current(curve: CalibrationCurve, i):
    """Concentration (mM) for sensor current ``i``."""
    _require(curve, "current")
    return _invert(curve, i)


def voltage_from_concentration(curve: CalibrationCurve, c):
    _require(curve, "voltage")
    return _forward(curve, c)


def sensor_current_from_concentration(curve: CalibrationCurve, c):
    _require(curve, "current")
    return _forward(curve, c)


def convert(curve: CalibrationCurve, value):
    """Concentration from a measured value of the curve's own target quantity."""
    return _invert(curve, value)


# ---------------------------------------------------------------------------
# persistence


def format_curve(curve: CalibrationCurve) -> str:
    return config.format_kv(
        [
            ("target", curve.target),
            ("slope", curve.slope),
            ("intercept", curve.intercept),
            ("r_squared", curve.r_squared),
            ("domain", (curve.c_min, curve.c_max)),
        ],
        header=f"calibration curve: {curve.target} ({curve.unit}) = slope * conc_mM + intercept",
    )


def save_curve(curve: CalibrationCurve, path: str | Path) -> None:
    Path(path).write_text(format_curve(curve), encoding="utf-8")


def parse_curve(text: str, source: str = "<string>") -> CalibrationCurve:
    entries = config.parse_kv(text, source)
    unknown = sorted(set(entries) - {"target", "slope", "intercept", "r_squared", "domain"})
    if unknown:
        raise ConfigError(f"{source}: unknown curve keys: {', '.join(unknown)}")
    domain = config.get_float_list(entries, "domain")
    if domain is None or len(domain) != 2:
        raise ConfigError(f"{source}: 'domain' needs two values 'c_min, c_max'")
    try:
        return CalibrationCurve(
            config.get_float(entries, "slope"),
            config.get_float(entries, "intercept"),
            config.get_float(entries, "r_squared", 1.0),
            domain[0],
            domain[1],
            config.get_str(entries, "target"),
        )
    except DomainError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_curve(path: str | Path) -> CalibrationCurve:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_curve(text, str(path))


# ---------------------------------------------------------------------------
# end to end through the readout chain


def chain_voltage_curve(
    profile: Profile,
    current_curve: CalibrationCurve,
    concentrations: Sequence[float] | None = None,
    j: int = 1,
) -> CalibrationCurve:
    """Voltage calibration of the readout, fitted on the chain's own outputs."""
    if concentrations is None:
        concentrations = np.linspace(current_curve.c_min, current_curve.c_max, 10)
    c = np.asarray(concentrations, dtype=np.float64)
    v = readout_voltage(profile, current_curve, c, j)
    return fit_linear(np.column_stack([c, v]), "voltage")


def readout_voltage(profile: Profile, current_curve: CalibrationCurve, c, j: int = 1):
    """Chain output for glucose concentration ``c`` via the sensor-current curve."""
    i = np.atleast_1d(sensor_current_from_concentration(current_curve, c))
    resp = evaluate(i, profile.chain, j, profile.models)
    if np.any(resp.saturated):
        raise DomainError("readout saturates inside the requested concentration range")
    return _scalar_or_array(resp.v_out if np.ndim(c) else resp.v_out[0])


def recover_concentration(
    c,
    profile: Profile,
    current_curve: CalibrationCurve,
    voltage_curve: CalibrationCurve,
    j: int = 1,
):
    """Concentration -> current -> chain voltage -> concentration."""
    return concentration_from_voltage(voltage_curve, readout_voltage(profile, current_curve, c, j))
