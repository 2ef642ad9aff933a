"""Sinusoidal drive of the static chain and THD extraction.

The chain has no reactive elements, so the response to a periodic stimulus
is a memoryless map of the input samples. Sampling phases are generated
from the integer sample index modulo one period, which makes every period
bit-identical and puts each harmonic exactly on a DFT bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chain import DEFAULT_MODELS, ChainParams, NonlinearModelSpec, evaluate
from .errors import DomainError, SolverError, UndefinedTHDError

DEFAULT_HARMONICS = 9


@dataclass(frozen=True)
class Stimulus:
    i_dc: float
    i_amp: float
    f0: float = 1e3

    def __post_init__(self):
        if not (math.isfinite(self.i_dc) and math.isfinite(self.i_amp)):
            raise DomainError("stimulus currents must be finite")
        if self.i_amp < 0.0:
            raise DomainError(f"i_amp must be non-negative, got {self.i_amp}")
        if not self.f0 > 0.0:
            raise DomainError(f"f0 must be positive, got {self.f0}")


@dataclass(frozen=True)
class WaveformSpec:
    n_periods: int = 4
    samples_per_period: int = 64

    def __post_init__(self):
        if self.n_periods < 4:
            raise DomainError(f"n_periods must be at least 4, got {self.n_periods}")
        spp = self.samples_per_period
        if spp < 64 or spp & (spp - 1):
            raise DomainError(f"samples_per_period must be a power of two >= 64, got {spp}")

    @property
    def n_samples(self) -> int:
        return self.n_periods * self.samples_per_period


class Waveform(NamedTuple):
    t: np.ndarray
    v: np.ndarray
    fs: float
    saturated: np.ndarray

    def to_csv(self) -> str:
        lines = ["t_s,v_out_V"]
        lines.extend(f"{t!r},{v!r}" for t, v in zip(self.t.tolist(), self.v.tolist()))
        return "\n".join(lines) + "\n"


def stimulus_samples(stim: Stimulus, spec: WaveformSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sample times and input currents over ``spec.n_periods`` periods."""
    k = np.arange(spec.n_samples)
    phase = 2.0 * np.pi * (k % spec.samples_per_period) / spec.samples_per_period
    t = k / (spec.samples_per_period * stim.f0)
    return t, stim.i_dc + stim.i_amp * np.sin(phase)


def simulate_transient(
    stim: Stimulus,
    params: ChainParams,
    j: int = 1,
    spec: WaveformSpec = WaveformSpec(),
    models: NonlinearModelSpec = DEFAULT_MODELS,
) -> Waveform:
    t, i_in = stimulus_samples(stim, spec)
    try:
        resp = evaluate(i_in, params, j, models)
    except SolverError as exc:
        if exc.index is None:
            raise
        raise SolverError(
            f"transient failed at sample {exc.index} (t={float(t[exc.index])!r} s): {exc}",
            index=exc.index, residual=exc.residual, i_sen=exc.i_sen,
        ) from exc
    return Waveform(t, resp.v_out, spec.samples_per_period * stim.f0, resp.saturated)


def harmonic_amplitudes(v, n_periods: int, n_harmonics: int) -> np.ndarray:
    """Peak amplitudes of harmonics 1..n_harmonics (index 0 unused)."""
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    if n_harmonics * n_periods > n // 2:
        raise DomainError(f"harmonic {n_harmonics} lies beyond the Nyquist bin for {n} samples")
    spectrum = np.fft.rfft(v)
    amps = np.zeros(n_harmonics + 1)
    for h in range(1, n_harmonics + 1):
        amps[h] = 2.0 * abs(spectrum[h * n_periods]) / n
    return amps


def thd(waveform, f0: float, n_harmonics: int = DEFAULT_HARMONICS, *, fs: float | None = None) -> float:
    """Total harmonic distortion ``sqrt(sum_{h>=2} |X_h|^2) / |X_1|`` as a fraction.

    ``waveform`` is a :class:`Waveform` or a plain sample array (then ``fs``
    is required). The record must hold a whole number of periods of ``f0``.
    """
    if n_harmonics < 2:
        raise DomainError(f"n_harmonics must be at least 2, got {n_harmonics}")
    if isinstance(waveform, Waveform):
        fs = waveform.fs if fs is None else fs
        v = waveform.v
    else:
        v = np.asarray(waveform, dtype=np.float64)
    if fs is None:
        raise DomainError("sample rate fs is required for a bare sample array")
    periods = f0 * v.size / fs
    n_periods = round(periods)
    if n_periods < 1 or abs(periods - n_periods) > 1e-9 * max(1.0, periods):
        raise DomainError(f"record spans {periods:.9g} periods of f0; need a whole number")
    amps = harmonic_amplitudes(v, n_periods, n_harmonics)
    full_scale = float(np.max(np.abs(v))) if v.size else 0.0
    if amps[1] <= 1e-15 * full_scale or amps[1] == 0.0:
        raise UndefinedTHDError("fundamental is below 1e-15 of full scale")
    return float(math.sqrt(math.fsum(amps[2:] ** 2)) / amps[1])


def analytic_thd_quadratic(a1: float, a2: float, amplitude: float) -> float:
    """THD of ``a1 x + a2 x^2`` driven by a sinusoid of peak ``amplitude``.

    The square term contributes a second harmonic of ``a2 A^2 / 2`` against a
    fundamental of ``a1 A``.
    """
    if a1 == 0.0:
        raise DomainError("a1 must be non-zero")
    return abs(a2 * amplitude / (2.0 * a1))
