import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptia.errors import DataFormatError, DomainError, ExtrapolationError
from ptia.variation import (
    PARAMETERS,
    CornerTable,
    VariationSpec,
    corner_eval,
    evaluate_metrics,
    load_corner_table,
    parse_corner_table,
    perturb,
    physical_temperature_profile,
    run_monte_carlo,
    sample_factors,
)

PROCESS = {
    "ss": (1.03, 2.442, 9.472),
    "sf": (1.031, 2.443, 9.489),
    "tt": (1.033, 2.446, 9.486),
    "fs": (1.034, 2.449, 9.491),
    "ff": (1.037, 2.452, 9.498),
}
SUPPLY = {
    1.35: (0.896, 2.426, 13.12),
    1.425: (0.96, 2.435, 11.06),
    1.5: (1.033, 2.446, 9.486),
    1.575: (1.127, 2.458, 8.476),
    1.65: (1.237, 2.471, 7.934),
}
TEMPERATURE = {
    -40: (1.079, 2.27, 8.91),
    -20: (1.053, 2.32, 8.86),
    0: (1.04, 2.38, 8.72),
    20: (1.034, 2.43, 9.21),
    40: (1.032, 2.48, 10.12),
    60: (1.036, 2.53, 11.32),
    80: (1.05, 2.58, 12.7),
    100: (1.097, 2.63, 14.17),
}
METRIC_NAMES = ("output_voltage_V", "irn_uV", "thd_pct")


@pytest.mark.parametrize(
    "axis,rows", [("process", PROCESS), ("supply", SUPPLY), ("temperature", TEMPERATURE)]
)
def test_corner_tables_reproduce_every_anchor(axis, rows):
    table = load_corner_table(axis)
    assert len(table.points) == len(rows)
    for point, expected in rows.items():
        got = corner_eval(table, point)
        assert tuple(got[m] for m in METRIC_NAMES) == expected


def test_temperature_interpolation():
    got = corner_eval(load_corner_table("temperature"), 10.0)
    assert got["output_voltage_V"] == pytest.approx(1.037, abs=1e-9)


def test_corner_errors():
    with pytest.raises(ExtrapolationError):
        corner_eval(load_corner_table("supply"), 1.7)
    with pytest.raises(ExtrapolationError):
        corner_eval(load_corner_table("temperature"), -41.0)
    with pytest.raises(KeyError):
        corner_eval(load_corner_table("process"), "xx")


@given(
    st.lists(st.floats(-100.0, 100.0), min_size=2, max_size=8, unique=True),
    st.floats(-5.0, 5.0),
    st.floats(-5.0, 5.0),
    st.floats(0.0, 1.0),
)
@settings(max_examples=200)
def test_interpolation_exact_for_affine_tables(xs, slope, intercept, u):
    xs = sorted(xs)
    if min(np.diff(xs)) < 1e-6:
        return
    table = CornerTable("supply", tuple(xs), {"y": [slope * x + intercept for x in xs]})
    q = xs[0] + u * (xs[-1] - xs[0])
    expected = slope * q + intercept
    assert abs(corner_eval(table, q)["y"] - expected) < 1e-12 * max(1.0, abs(slope) * 100 + abs(intercept))


def test_corner_table_round_trip():
    table = load_corner_table("temperature")
    assert parse_corner_table(table.to_csv()) == table


@pytest.mark.parametrize(
    "text",
    [
        "",
        "voltage,1,2\nx,1,2\n",
        "supply_V,1.5,1.4\nx,1,2\n",
        "supply_V,1.4,1.5\nx,1,abc\n",
        "supply_V,1.4,1.5\nx,1\n",
        "supply_V,1.4,1.5\nx,1,nan\n",
    ],
)
def test_corner_table_format_errors(text):
    with pytest.raises(DataFormatError):
        parse_corner_table(text)


# --- Monte Carlo ----------------------------------------------------------


def test_zero_sigma_degeneracy(profile):
    spec = VariationSpec(20, seed=3, sigmas=dict.fromkeys(PARAMETERS, 0.0))
    result = run_monte_carlo(spec, profile, ("output_voltage_V", "gain_ohm", "irn_uV"))
    nominal = evaluate_metrics(profile, ("output_voltage_V", "gain_ohm", "irn_uV"))
    for name, stats in result.stats.items():
        assert stats.std_dev == 0.0
        assert stats.mean == nominal[name]
        assert stats.min == stats.max == nominal[name]
        assert stats.count == 20


def _r_z_ratio(nominal):
    def r_z_ratio(p):
        return p.chain.r_z / nominal

    return r_z_ratio


def test_identity_metric_std(profile):
    n = 10_000
    spec = VariationSpec(n, seed=99, sigmas={"r_z": 0.01})
    result = run_monte_carlo(spec, profile, [_r_z_ratio(profile.chain.r_z)])
    stats = result.stats["r_z_ratio"]
    se = 0.01 / math.sqrt(2.0 * (n - 1))
    assert abs(stats.std_dev - 0.01) < 3.0 * se
    assert abs(stats.mean - 1.0) < 3.0 * 0.01 / math.sqrt(n)


def test_seed_determinism_and_parallelism(profile):
    spec = VariationSpec(64, seed=2**63 + 5)
    metrics = ("output_voltage_V", "thd_pct", "irn_uV")
    ref = run_monte_carlo(spec, profile, metrics)
    for workers in (1, 4, 8):
        again = run_monte_carlo(spec, profile, metrics, workers=workers)
        assert again.stats == ref.stats
        for m in metrics:
            assert np.array_equal(again.values[m], ref.values[m], equal_nan=True)


def test_sample_order_independence(profile):
    spec = VariationSpec(40, seed=7)
    ref = run_monte_carlo(spec, profile, ("gain_ohm",))
    order = np.random.default_rng(1).permutation(40)
    shuffled = run_monte_carlo(spec, profile, ("gain_ohm",), order=order)
    assert shuffled.stats == ref.stats


def test_sample_draw_depends_only_on_seed_and_index():
    a = VariationSpec(10, seed=5)
    b = VariationSpec(1000, seed=5)
    assert sample_factors(a, 7) == sample_factors(b, 7)
    assert sample_factors(a, 7) != sample_factors(a, 8)
    assert sample_factors(a, 7) != sample_factors(VariationSpec(10, seed=6), 7)


def test_rejected_samples_are_counted(profile):
    # gm12 perturbations large enough to push gm12/gm11 past 1 in some samples
    spec = VariationSpec(200, seed=1, sigmas={"gm12": 0.2})
    result = run_monte_carlo(spec, profile, ("gain_ohm",))
    assert 0 < result.n_rejected < 200
    assert result.stats["gain_ohm"].count == 200 - result.n_rejected
    rejected_idx = [i for i, _ in result.rejected]
    assert np.all(np.isnan(result.values["gain_ohm"][rejected_idx]))
    assert all("SingularBoostError" in reason for _, reason in result.rejected)


def test_alpha_c_is_clipped(profile):
    p = perturb(profile, {"alpha_c": 1.05})
    assert p.chain.alpha_c == 1.0


def test_perturb_keeps_shared_gms_in_step(profile):
    p = perturb(profile, {"gm17": 1.1})
    assert p.noise.gm(17) == p.chain.gm17 == profile.chain.gm17 * 1.1


def test_stats_invariants(profile):
    result = run_monte_carlo(VariationSpec(50, seed=11), profile, ("thd_pct", "output_voltage_V"))
    for s in result.stats.values():
        assert s.min <= s.mean <= s.max
        assert s.std_dev >= 0.0
    assert result.summary_csv().splitlines()[0] == "metric,mean,std_dev,min,max,count"


@pytest.mark.parametrize(
    "kw",
    [dict(n_samples=0), dict(n_samples=1, seed=-1), dict(n_samples=1, seed=2**64), dict(n_samples=1, sigmas={"r_z": -0.1}),
     dict(n_samples=1, sigmas={"bogus": 0.1}), dict(n_samples=1, distribution="uniform")],
)
def test_variation_spec_validation(kw):
    with pytest.raises(DomainError):
        VariationSpec(**kw)


def test_unknown_metric(profile):
    with pytest.raises(DomainError):
        run_monte_carlo(VariationSpec(1), profile, ("nope",))


def test_physical_temperature_mode(profile):
    same = physical_temperature_profile(profile, 27.0)
    assert same.chain.gm17 == pytest.approx(profile.chain.gm17, rel=1e-12)
    hot = physical_temperature_profile(profile, 100.0)
    scale = ((100.0 + 273.15) / 300.15) ** -1.5
    assert hot.chain.k_proc == pytest.approx(profile.chain.k_proc * scale, rel=1e-12)
    assert hot.noise.gm(26) == pytest.approx(profile.noise.gm(26) * scale, rel=1e-12)
    assert hot.noise.temperature == pytest.approx(373.15)
    with pytest.raises(DomainError):
        physical_temperature_profile(profile, -300.0)
