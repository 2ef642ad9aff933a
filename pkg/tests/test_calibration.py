import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptia import calibration as cal
from ptia.errors import (
    ConfigError,
    DataFormatError,
    DegenerateFitError,
    DomainError,
    ExtrapolationWarning,
    NonInvertibleError,
    ParseError,
)


def test_parse_ten_rows():
    text = "conc_mM,v_V\n" + "".join(f"{c},{1.1 + 0.05 * c}\n" for c in range(1, 11))
    records = cal.parse_records(text)
    assert len(records) == 10
    assert records[0].conc_mM == 1.0 and records[0].line == 2 and records[0].i_A is None


def test_parse_is_case_insensitive_and_ignores_extra_columns():
    records = cal.parse_records("T_S,Conc_MM,I_A,comment\n0.5,2,1e-5,first\n1.0,3,2e-5,\n")
    assert records[1] == cal.MeasurementRecord(1, 3, t_s=1.0, conc_mM=3.0, i_A=2e-5)


def test_parse_from_stream_and_path(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("conc_mM,i_A\n1,4.2e-6\n")
    assert len(cal.parse_records(path)) == 1
    assert len(cal.parse_records(str(path))) == 1
    assert len(cal.parse_records(io.StringIO("conc_mM,i_A\n1,4.2e-6\n"))) == 1


@pytest.mark.parametrize(
    "text,error,line",
    [
        ("\n\n", DataFormatError, None),
        ("conc_mM,t_s\n1,2\n", DataFormatError, 1),
        ("conc_mM,v_V\n1,1.2\n2,abc\n", ParseError, 3),
        ("conc_mM,v_V\n1,1.2\n2\n", DataFormatError, 3),
        ("conc_mM,v_V\n-1,1.2\n", DataFormatError, 2),
        ("conc_mM,v_V,i_A\n1,,\n", DataFormatError, 2),
        ("v_V,V_v\n1,2\n", DataFormatError, 1),
    ],
)
def test_parse_errors(text, error, line):
    with pytest.raises(error) as info:
        cal.parse_records(text if text.strip() else io.StringIO(text))
    assert info.value.line == line
    if line is not None:
        assert f"line {line}" in str(info.value)


def test_missing_file():
    with pytest.raises(DataFormatError):
        cal.parse_records("/nonexistent/measurements.csv")


# --- fitting --------------------------------------------------------------


def test_endpoint_curve():
    curve = cal.endpoint_voltage_curve()
    assert curve.slope == pytest.approx(0.05333333333, rel=1e-9)
    assert curve.intercept == pytest.approx(1.13666666667, rel=1e-9)
    assert curve.r_squared == 1.0
    assert curve.domain == (1.0, 10.0)
    assert abs(cal.concentration_from_voltage(curve, 1.67) - 10.0) <= 1e-9
    assert abs(cal.concentration_from_voltage(curve, 1.19) - 1.0) <= 1e-9
    assert cal.concentration_from_voltage(curve, 1.43) == pytest.approx(5.5, abs=1e-6)


def test_collinear_points_give_unit_r_squared():
    c = np.linspace(1.0, 10.0, 10)
    curve = cal.fit_linear(np.column_stack([c, 0.3 * c - 0.1]))
    assert abs(curve.r_squared - 1.0) < 1e-12


def test_noisy_slope_within_three_standard_errors():
    c = np.repeat(np.linspace(1.0, 10.0, 10), 2)
    eps = 0.01
    noise = np.tile([eps, -eps], 10)
    curve = cal.fit_linear(np.column_stack([c, 0.05 * c + 1.1 + noise]))
    se = eps / np.sqrt(np.sum((c - c.mean()) ** 2))
    assert abs(curve.slope - 0.05) < 3.0 * se


def test_degenerate_fit():
    with pytest.raises(DegenerateFitError):
        cal.fit_linear([(2.0, 1.0), (2.0, 1.5)])
    with pytest.raises(DegenerateFitError):
        cal.fit_linear([(2.0, 1.0)])


@given(
    st.lists(st.tuples(st.integers(0, 200).map(lambda n: n / 10.0), st.floats(-1.0, 2.0)), min_size=3, max_size=20),
    st.randoms(use_true_random=False),
    st.integers(2, 4),
)
@settings(max_examples=100)
def test_fit_invariant_to_order_and_duplication(points, rnd, k):
    if len({c for c, _ in points}) < 2:
        return
    base = cal.fit_linear(points)
    shuffled = list(points)
    rnd.shuffle(shuffled)
    for other in (cal.fit_linear(shuffled), cal.fit_linear(points * k)):
        assert other.slope == pytest.approx(base.slope, rel=1e-9, abs=1e-12)
        assert other.intercept == pytest.approx(base.intercept, rel=1e-9, abs=1e-12)


def test_fit_records_targets():
    records = cal.parse_records("conc_mM,i_A,v_V\n1,4.2e-6,1.19\n10,180e-6,1.67\n5,,1.4\n")
    assert cal.fit_records(records, "current").target == "current"
    assert cal.fit_records(records, "voltage").slope == pytest.approx(0.0533, rel=1e-2)
    with pytest.raises(DataFormatError):
        cal.fit_records(cal.parse_records("i_A\n1e-6\n"), "current")


# --- conversions ----------------------------------------------------------


def test_current_curve_evaluation():
    curve = cal.synthetic_current_curve()
    assert cal.sensor_current_from_concentration(curve, curve.c_min) == pytest.approx(4.2e-6, rel=1e-12)
    assert cal.sensor_current_from_concentration(curve, 10.0) == pytest.approx(180e-6, rel=1e-12)
    with pytest.warns(ExtrapolationWarning):
        assert cal.sensor_current_from_concentration(curve, 0.0) == curve.intercept
    with pytest.raises(DomainError):
        cal.sensor_current_from_concentration(curve, -1.0)


def test_current_round_trip():
    curve = cal.synthetic_current_curve()
    c = np.linspace(1.0, 10.0, 37)
    back = cal.concentration_from_current(curve, cal.sensor_current_from_concentration(curve, c))
    assert np.max(np.abs(back - c)) < 1e-9


@given(st.floats(1.0, 10.0))
def test_voltage_round_trip(v_rel):
    curve = cal.endpoint_voltage_curve()
    v = 1.19 + (v_rel - 1.0) * (1.67 - 1.19) / 9.0
    assert cal.voltage_from_concentration(curve, cal.concentration_from_voltage(curve, v)) == pytest.approx(v, rel=1e-9)


def test_extrapolation_warns_not_raises():
    curve = cal.endpoint_voltage_curve()
    with pytest.warns(ExtrapolationWarning):
        c = cal.concentration_from_voltage(curve, 2.0)
    assert c > 10.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cal.concentration_from_voltage(curve, 1.67)


def test_target_mismatch_and_flat_curve():
    with pytest.raises(DomainError):
        cal.concentration_from_current(cal.endpoint_voltage_curve(), 1e-6)
    flat = cal.CalibrationCurve(0.0, 1.0, 0.0, 1.0, 10.0, "voltage")
    with pytest.raises(NonInvertibleError):
        cal.concentration_from_voltage(flat, 1.0)


@pytest.mark.parametrize(
    "args",
    [(1.0, 0.0, 1.5, 1.0, 2.0, "voltage"), (1.0, 0.0, 1.0, 2.0, 1.0, "voltage"), (1.0, 0.0, 1.0, 1.0, 2.0, "charge")],
)
def test_curve_validation(args):
    with pytest.raises(DomainError):
        cal.CalibrationCurve(*args)


def test_curve_persistence(tmp_path):
    curve = cal.synthetic_current_curve()
    path = tmp_path / "curve.txt"
    cal.save_curve(curve, path)
    assert cal.load_curve(path) == curve
    text = path.read_text()
    for key in ("slope", "intercept", "r_squared", "domain", "target"):
        assert f"{key} = " in text
    with pytest.raises(ConfigError):
        cal.parse_curve("slope = 1\nintercept = 0\ntarget = voltage\n")
    with pytest.raises(ConfigError):
        cal.load_curve(tmp_path / "missing.txt")


def test_peak_currents():
    text = "scan,v_V,i_A\n1,0.1,1e-6\n1,0.2,-5e-6\n1,0.3,4e-6\n2,0.1,2e-6\n2,0.2,3e-6\n"
    peaks = cal.peak_currents(cal.parse_records(text))
    assert {s: r.i_A for s, r in peaks.items()} == {1: -5e-6, 2: 3e-6}


# --- end to end -----------------------------------------------------------


def test_end_to_end_recovery(profile):
    current_curve = cal.synthetic_current_curve()
    voltage_curve = cal.chain_voltage_curve(profile, current_curve)
    c = np.linspace(1.0, 10.0, 91)
    back = cal.recover_concentration(c, profile, current_curve, voltage_curve)
    assert np.max(np.abs(back - c)) < 0.1
