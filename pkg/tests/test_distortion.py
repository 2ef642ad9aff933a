import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptia.chain import ChainParams, NonlinearModelSpec, large_signal_output
from ptia.distortion import (
    Stimulus,
    Waveform,
    WaveformSpec,
    analytic_thd_quadratic,
    simulate_transient,
    stimulus_samples,
    thd,
)
from ptia.errors import DomainError, SolverError, UndefinedTHDError

N, PERIODS = 256, 4
PHASE = 2.0 * np.pi * PERIODS * np.arange(N) / N
FS = N * 1e3 / PERIODS  # f0 = 1 kHz

SQUARE_ONLY = NonlinearModelSpec(iv="linear", ta="linear", ptbta="square_law", ptbta_vov=0.25)


def test_pure_sinusoid():
    assert thd(np.sin(PHASE), 1e3, fs=FS) < 1e-10


def test_constructed_second_harmonic():
    y = np.sin(PHASE) + 0.1 * np.sin(2.0 * PHASE)
    assert thd(y, 1e3, fs=FS) == pytest.approx(0.1, abs=1e-9)


@pytest.mark.parametrize("a1,a2,amp", [(1.0, 0.2, 1.0), (2.0, 0.2, 0.5), (1.0, -0.05, 3.0)])
def test_quadratic_nonlinearity_against_oracle(a1, a2, amp):
    x = amp * np.sin(PHASE)
    y = a1 * x + a2 * x * x
    assert thd(y, 1e3, fs=FS) == pytest.approx(analytic_thd_quadratic(a1, a2, amp), rel=5e-3)


def test_analytic_oracle_examples():
    assert analytic_thd_quadratic(1.0, 0.0, 1.0) == 0.0
    assert analytic_thd_quadratic(1.0, 0.2, 1.0) == pytest.approx(0.1)
    assert analytic_thd_quadratic(2.0, 0.2, 0.5) == pytest.approx(0.025)
    with pytest.raises(DomainError):
        analytic_thd_quadratic(0.0, 1.0, 1.0)


def test_undefined_thd_for_constant():
    with pytest.raises(UndefinedTHDError):
        thd(np.full(N, 0.7), 1e3, fs=FS)


def test_thd_requires_whole_periods():
    with pytest.raises(DomainError):
        thd(np.sin(PHASE), 1.1e3, fs=FS)
    with pytest.raises(DomainError):
        thd(np.sin(PHASE), 1e3, n_harmonics=1, fs=FS)
    with pytest.raises(DomainError):
        thd(np.sin(PHASE), 1e3)


@given(st.floats(1e-3, 1e3), st.floats(0.01, 0.3))
@settings(max_examples=50)
def test_thd_invariant_under_gain(scale, a2):
    x = np.sin(PHASE)
    y = x + a2 * x * x
    assert thd(scale * y, 1e3, fs=FS) == pytest.approx(thd(y, 1e3, fs=FS), rel=1e-10)


# --- chain transients -----------------------------------------------------


def test_waveform_length_and_rate(params):
    spec = WaveformSpec(5, 128)
    wave = simulate_transient(Stimulus(50e-6, 10e-6, 2e3), params, 1, spec)
    assert wave.v.size == wave.t.size == 640
    assert wave.fs == 128 * 2e3
    assert wave.t[1] == pytest.approx(1.0 / wave.fs)


def test_zero_amplitude_gives_constant(params):
    wave = simulate_transient(Stimulus(50e-6, 0.0), params)
    assert np.all(wave.v == large_signal_output(50e-6, params))


def test_linear_models_give_pure_sinusoid(params):
    wave = simulate_transient(Stimulus(92.1e-6, 87.9e-6), params, 1, models=NonlinearModelSpec.linear())
    assert thd(wave, 1e3) < 1e-10


def test_periods_are_bit_identical(params):
    wave = simulate_transient(Stimulus(92.1e-6, 87.9e-6), params)
    v = wave.v.reshape(4, 64)
    assert np.all(v == v[0])


def _square_oracle(params: ChainParams, i_dc: float, i_amp: float) -> float:
    # unit current ~ x + x^2/(2 vov) with x = alpha_c r_z i; expand about x_dc
    k = params.alpha_c * params.r_z
    vov = SQUARE_ONLY.ptbta_vov
    a1 = 1.0 + k * i_dc / vov
    a2 = 1.0 / (2.0 * vov)
    return analytic_thd_quadratic(a1, a2, k * i_amp)


def test_square_law_stage_matches_oracle(params):
    wave = simulate_transient(Stimulus(50e-6, 40e-6), params, 1, models=SQUARE_ONLY)
    assert thd(wave, 1e3) == pytest.approx(_square_oracle(params, 50e-6, 40e-6), rel=5e-3)


@pytest.mark.parametrize("i_amp", np.geomspace(4e-6, 40e-6, 5))
def test_square_law_stage_over_a_decade(params, i_amp):
    wave = simulate_transient(Stimulus(50e-6, i_amp), params, 1, models=SQUARE_ONLY)
    assert thd(wave, 1e3) == pytest.approx(_square_oracle(params, 50e-6, i_amp), rel=5e-3)


def test_affine_chain_thd_random_stimuli(params):
    rng = np.random.default_rng(5)
    for _ in range(10):
        i_dc = rng.uniform(20e-6, 160e-6)
        i_amp = rng.uniform(1e-7, min(i_dc, 180e-6 - i_dc))
        wave = simulate_transient(Stimulus(i_dc, i_amp), params, 1, models=NonlinearModelSpec.linear())
        assert thd(wave, 1e3) < 1e-10


def test_transient_failure_reports_sample(params, monkeypatch):
    import ptia.distortion as distortion

    def failing(*args, **kwargs):
        raise SolverError("boom", index=3, residual=1.0, i_sen=0.0)

    monkeypatch.setattr(distortion, "evaluate", failing)
    with pytest.raises(SolverError, match="sample 3"):
        distortion.simulate_transient(Stimulus(50e-6, 1e-6), params)


def test_stimulus_samples_phase():
    t, i = stimulus_samples(Stimulus(1.0, 0.5, 1e3), WaveformSpec())
    assert i[0] == 1.0 and i[16] == 1.5 and i[48] == 0.5


@pytest.mark.parametrize("args", [(1e-6, -1e-6), (1e-6, 1e-6, 0.0)])
def test_stimulus_validation(args):
    with pytest.raises(DomainError):
        Stimulus(*args)


@pytest.mark.parametrize("args", [(3, 64), (4, 32), (4, 96)])
def test_waveform_spec_validation(args):
    with pytest.raises(DomainError):
        WaveformSpec(*args)


def test_waveform_csv(params):
    wave = simulate_transient(Stimulus(50e-6, 1e-6), params)
    lines = wave.to_csv().splitlines()
    assert lines[0] == "t_s,v_out_V" and len(lines) == 257
    assert isinstance(wave, Waveform)
