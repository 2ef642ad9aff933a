"""Behavioral models of the potentiostat reference and the readout path.

Signal flow: sensor current -> current conveyor (tracking error alpha_c) ->
R_z -> boosted transconductor (PTBTA, j enabled unit branches) -> I-V
converter with a transconductance amplifier (TA) in positive feedback.

Small-signal closed form::

    V_o / I_sen = j * alpha_c * Gm1 * R_z * A / (1 - A * gm2)
    Gm1 = gm17 / (1 - gm12/gm11)
    A   = 1 / (2 * k_proc * (v_dd - v_th))

Large-signal model. A fixed bias current, equal to the j=1 PTBTA output at
input ``i_center``, is subtracted at the converter node. The converter and
TA are expanded around the resulting quiescent output, so the operating
point of gain step j sits at ``i_center / j`` (linear PTBTA) and every step
shares the same output swing.

* I-V converter, one of

  - ``pair`` (default): differential pair of square-law devices, each carrying
    ``I_q = k_proc * (v_dd - v_th)**2`` at rest. Output deviation for an
    input current deviation ``d``::

        v = Vov * (sqrt(1 + u) - sqrt(1 - u)),  u = d / (2 I_q),  Vov = v_dd - v_th

  - ``single``: one diode-connected square-law device, ``V = V_th + sqrt(I/k)``
  - ``linear``: the resistor ``A``

  The square-law forms linearize to ``A`` at the operating point.
* TA, ``tanh`` (default, tail current ``i_b2``) or ``linear``:
  ``i_fb = i_b2 * tanh(gm2 * v / i_b2)``.
* PTBTA, ``linear`` (default) or ``square_law`` with overdrive ``ptbta_vov``:
  ``i_o = Gm1 * v_z * (1 + v_z / (2 * ptbta_vov))``.

The output is ``v_offset`` plus the loop deviation measured from its value
at zero input current, so ``large_signal_output(0) == v_offset`` for every
j, and the local slope at the operating point equals the closed form.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from . import _backend
from ._kernels_py import FAILED, IV_LINEAR, IV_PAIR, IV_SINGLE, OK, TA_LINEAR, TA_TANH
from ._stats import ols
from .errors import (
    DomainError,
    GainIndexError,
    HeadroomError,
    SingularBoostError,
    SingularFeedbackError,
    SolverError,
)

RTOL = 1e-12
MAX_ITER = 200
_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class ChainParams:
    """Device parameters of the readout chain (SI units)."""

    gm17: float
    gm16: float
    gm11: float
    gm12: float
    gm14: float
    r_z: float
    k_proc: float
    v_th: float
    v_dd: float
    gm2: float
    alpha_c: float = 1.0
    i_b1: float = 175e-6
    i_b2: float = 350e-6
    v_offset: float = 0.0
    p_max: int = 8
    i_center: float = 0.0
    # per-step transimpedance multipliers; None means 1, 2, ..., p_max
    step_gains: tuple[float, ...] | None = None

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise DomainError(f"{f.name} must be finite, got {value}")
        if not 0.0 < self.alpha_c <= 1.0:
            raise DomainError(f"alpha_c must lie in (0, 1], got {self.alpha_c}")
        if self.r_z <= 0.0:
            raise DomainError(f"r_z must be positive, got {self.r_z}")
        for name in ("gm17", "gm16", "gm11", "gm14", "k_proc", "i_b1", "i_b2"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("gm12", "gm2"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.p_max < 1:
            raise DomainError(f"p_max must be at least 1, got {self.p_max}")
        if self.step_gains is not None:
            gains = tuple(float(g) for g in self.step_gains)
            if len(gains) != self.p_max or any(not (g > 0.0 and math.isfinite(g)) for g in gains):
                raise DomainError(f"step_gains needs {self.p_max} positive entries")
            object.__setattr__(self, "step_gains", gains)


@dataclass(frozen=True)
class ReferenceSpec:
    v_ref_nominal: float = 0.6
    line_regulation: float = 0.0  # volts per volt of supply deviation
    v_dd_nominal: float = 1.5

    def __post_init__(self):
        if not self.v_ref_nominal > 0.0:
            raise DomainError("v_ref_nominal must be positive")
        if not self.line_regulation >= 0.0:
            raise DomainError("line_regulation must be non-negative")


@dataclass(frozen=True)
class SweepSpec:
    i_min: float
    i_max: float
    n_points: int = 100
    scale: str = "linear"

    def __post_init__(self):
        if not 0.0 < self.i_min < self.i_max:
            raise DomainError(f"need 0 < i_min < i_max, got {self.i_min}, {self.i_max}")
        if self.n_points < 2:
            raise DomainError(f"n_points must be at least 2, got {self.n_points}")
        if self.scale not in ("linear", "logarithmic"):
            raise DomainError(f"scale must be 'linear' or 'logarithmic', got {self.scale!r}")

    def grid(self) -> np.ndarray:
        if self.scale == "linear":
            return np.linspace(self.i_min, self.i_max, self.n_points)
        grid = np.geomspace(self.i_min, self.i_max, self.n_points)
        grid[0], grid[-1] = self.i_min, self.i_max
        return grid


_IV_CODES = {"linear": IV_LINEAR, "pair": IV_PAIR, "single": IV_SINGLE}
_TA_CODES = {"linear": TA_LINEAR, "tanh": TA_TANH}


@dataclass(frozen=True)
class NonlinearModelSpec:
    """Large-signal model choice for each nonlinear stage."""

    iv: str = "pair"
    ta: str = "tanh"
    ptbta: str = "linear"
    ptbta_vov: float = 0.25

    def __post_init__(self):
        if self.iv not in _IV_CODES:
            raise DomainError(f"iv model must be one of {sorted(_IV_CODES)}, got {self.iv!r}")
        if self.ta not in _TA_CODES:
            raise DomainError(f"ta model must be one of {sorted(_TA_CODES)}, got {self.ta!r}")
        if self.ptbta not in ("linear", "square_law"):
            raise DomainError(f"ptbta model must be 'linear' or 'square_law', got {self.ptbta!r}")
        if not self.ptbta_vov > 0.0:
            raise DomainError("ptbta_vov must be positive")

    @classmethod
    def linear(cls) -> "NonlinearModelSpec":
        return cls(iv="linear", ta="linear", ptbta="linear")


DEFAULT_MODELS = NonlinearModelSpec()


# ---------------------------------------------------------------------------
# small-signal relations


def ccii_output(i_sen: float, params: ChainParams) -> float:
    """Current-conveyor output ``alpha_c * i_sen``."""
    if not math.isfinite(i_sen):
        raise DomainError(f"sensor current must be finite, got {i_sen}")
    return params.alpha_c * i_sen


def ptbta_gm(params: ChainParams) -> float:
    """Effective boosted transconductance ``gm17 / (1 - gm12/gm11)``."""
    ratio = params.gm12 / params.gm11
    if ratio >= 1.0:
        raise SingularBoostError(f"gm12/gm11 = {ratio:.6g} >= 1 gives an infinite or negative Gm1")
    return params.gm17 / (1.0 - ratio)


def iv_small_signal_gain(params: ChainParams) -> float:
    """I-V converter gain ``1 / (2 k (v_dd - v_th))`` in ohms."""
    headroom = params.v_dd - params.v_th
    if headroom <= 0.0:
        raise HeadroomError(f"v_dd - v_th = {headroom:.6g} V leaves no headroom")
    return 1.0 / (2.0 * params.k_proc * headroom)


def step_gain(params: ChainParams, j: int) -> float:
    if isinstance(j, bool) or int(j) != j or not 1 <= j <= params.p_max:
        raise GainIndexError(f"gain index j must be an integer in 1..{params.p_max}, got {j!r}")
    j = int(j)
    if params.step_gains is None:
        return float(j)
    return params.step_gains[j - 1]


def _loop_gain(params: ChainParams) -> float:
    return iv_small_signal_gain(params) * params.gm2


def transimpedance_closed_form(params: ChainParams, j: int = 1) -> float:
    """Small-signal transimpedance in ohms for gain index ``j``."""
    step = step_gain(params, j)
    a = iv_small_signal_gain(params)
    loop = a * params.gm2
    if abs(1.0 - loop) <= _SINGULAR_TOL:
        raise SingularFeedbackError(f"A*gm2 = {loop:.15g} puts the feedback pole at the operating point")
    unit = params.alpha_c * ptbta_gm(params) * params.r_z * a / (1.0 - loop)
    return step * unit


def small_signal_output(delta_i, params: ChainParams, j: int = 1):
    """Linearized output deviation for an input deviation ``delta_i``."""
    return transimpedance_closed_form(params, j) * np.asarray(delta_i, dtype=np.float64)


# ---------------------------------------------------------------------------
# large-signal loop


@dataclass(frozen=True)
class _Loop:
    step: float
    gm1: float
    vz_gain: float  # alpha_c * r_z, ohms
    bias: float  # fixed current subtracted at the converter node
    ptbta_square: bool
    ptbta_vov: float
    iv: int
    inv_a: float
    vov: float
    ta: int
    gm2: float
    ib2: float
    lo: float
    hi: float
    g_lo: float
    g_hi: float

    def unit_current(self, i_sen):
        """Output current of one PTBTA branch."""
        v_z = self.vz_gain * i_sen
        if self.ptbta_square:
            return self.gm1 * v_z * (1.0 + v_z / (2.0 * self.ptbta_vov))
        return self.gm1 * v_z

    def drive(self, i_sen: np.ndarray) -> np.ndarray:
        return self.step * self.unit_current(i_sen) - self.bias

    def operating_point(self) -> float:
        """Sensor current at which the drive vanishes."""
        target = self.bias / (self.step * self.gm1)
        if not self.ptbta_square:
            return target / self.vz_gain
        vp = self.ptbta_vov
        disc = 1.0 + 2.0 * target / vp
        if disc < 0.0:
            raise DomainError("square-law PTBTA cannot reach the operating point")
        return vp * (math.sqrt(disc) - 1.0) / self.vz_gain

    def solve(self, drive: np.ndarray, rtol: float = RTOL, max_iter: int = MAX_ITER):
        return _backend.solve_loop(
            drive, self.iv, self.inv_a, self.vov, self.ta, self.gm2, self.ib2,
            self.lo, self.hi, self.g_lo, self.g_hi, rtol, max_iter,
        )

    def balance(self, v: float) -> tuple[float, float]:
        return _backend.loop_balance(v, self.iv, self.inv_a, self.vov, self.ta, self.gm2, self.ib2)


def _find_peak(balance, inside: float, edge: float) -> float:
    """Last point between ``inside`` and ``edge`` where g'(v) stays positive."""
    if balance(edge)[1] > 0.0:
        return edge
    good, bad = inside, edge
    for _ in range(200):
        mid = 0.5 * (good + bad)
        if mid == good or mid == bad:
            break
        if balance(mid)[1] > 0.0:
            good = mid
        else:
            bad = mid
    return good


@functools.lru_cache(maxsize=256)
def _build_loop(params: ChainParams, j: int, models: NonlinearModelSpec) -> _Loop:
    a = iv_small_signal_gain(params)
    loop = a * params.gm2
    if loop >= 1.0 - _SINGULAR_TOL:
        raise SingularFeedbackError(
            f"A*gm2 = {loop:.15g} >= 1: the positive-feedback loop has no stable operating point"
        )
    gm1 = ptbta_gm(params)
    vz_gain = params.alpha_c * params.r_z
    square = models.ptbta == "square_law"
    v_zc = vz_gain * params.i_center
    bias = gm1 * v_zc * (1.0 + v_zc / (2.0 * models.ptbta_vov)) if square else gm1 * v_zc
    base = dict(
        step=step_gain(params, j),
        gm1=gm1,
        vz_gain=vz_gain,
        bias=bias,
        ptbta_square=square,
        ptbta_vov=models.ptbta_vov,
        iv=_IV_CODES[models.iv],
        inv_a=1.0 / a,
        vov=params.v_dd - params.v_th,
        ta=_TA_CODES[models.ta],
        gm2=params.gm2,
        ib2=params.i_b2,
    )
    probe = _Loop(**base, lo=-math.inf, hi=math.inf, g_lo=-math.inf, g_hi=math.inf)
    vov = base["vov"]
    lo, hi = -math.inf, math.inf
    if probe.iv == IV_PAIR:
        hi = _find_peak(probe.balance, 0.0, math.sqrt(2.0) * vov)
        lo = -hi
    elif probe.iv == IV_SINGLE:
        lo = _find_peak(probe.balance, 0.0, -vov)
    g_lo = probe.balance(lo)[0] if math.isfinite(lo) else -math.inf
    g_hi = probe.balance(hi)[0] if math.isfinite(hi) else math.inf
    return _Loop(**base, lo=lo, hi=hi, g_lo=g_lo, g_hi=g_hi)


class ChainResponse(NamedTuple):
    i_sen: np.ndarray
    v_out: np.ndarray
    saturated: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray

    def to_csv(self) -> str:
        lines = ["i_sen_A,v_out_V,saturated"]
        for i, v, s in zip(self.i_sen.tolist(), self.v_out.tolist(), self.saturated.tolist()):
            lines.append(f"{i!r},{v!r},{int(s)}")
        return "\n".join(lines) + "\n"


def _check_status(status, resid, i_sen, what="point"):
    failed = np.flatnonzero(status == FAILED)
    if failed.size:
        k = int(failed[0])
        raise SolverError(
            f"feedback loop did not converge at {what} {k} (i_sen={float(i_sen[k])!r} A, "
            f"relative residual {resid[k]:.3e})",
            index=k, residual=float(resid[k]), i_sen=float(i_sen[k]),
        )


def loop_deviation(i_sen, params: ChainParams, j: int = 1, models: NonlinearModelSpec = DEFAULT_MODELS):
    """Loop output deviation from the operating point (the AC component).

    Returns ``(v, status)`` arrays; ``v`` vanishes at :func:`operating_point`.
    """
    i_sen = np.atleast_1d(np.asarray(i_sen, dtype=np.float64))
    if not np.all(np.isfinite(i_sen)):
        raise DomainError("sensor currents must be finite")
    loop = _build_loop(params, j, models)
    v, status, _, resid = loop.solve(loop.drive(i_sen))
    _check_status(status, resid, i_sen)
    return v, status


def operating_point(params: ChainParams, j: int = 1, models: NonlinearModelSpec = DEFAULT_MODELS) -> float:
    """Sensor current at the quiescent point of gain step ``j``.

    This is the midpoint of the linear region, where the large-signal slope
    equals :func:`transimpedance_closed_form` (for a linear PTBTA).
    """
    return _build_loop(params, j, models).operating_point()


def ac_response(delta_i, params: ChainParams, j: int = 1, models: NonlinearModelSpec = DEFAULT_MODELS):
    """Large-signal output change for input deviations around the operating point."""
    op = operating_point(params, j, models)
    delta_i = np.atleast_1d(np.asarray(delta_i, dtype=np.float64))
    v, _ = loop_deviation(np.concatenate(([op], op + delta_i)), params, j, models)
    return v[1:] - v[0]


def evaluate(
    i_sen,
    params: ChainParams,
    j: int = 1,
    models: NonlinearModelSpec = DEFAULT_MODELS,
    *,
    rtol: float = RTOL,
    max_iter: int = MAX_ITER,
) -> ChainResponse:
    """Large-signal output for an array of sensor currents.

    Outputs beyond the rails ``[0, v_dd]`` or beyond the loop's monotone range
    are clamped and flagged in ``saturated``.
    """
    i_sen = np.atleast_1d(np.asarray(i_sen, dtype=np.float64))
    if not np.all(np.isfinite(i_sen)):
        raise DomainError("sensor currents must be finite")
    loop = _build_loop(params, j, models)
    drive = np.concatenate(([loop.drive(np.float64(0.0))], loop.drive(i_sen)))
    v, status, iters, resid = loop.solve(drive, rtol, max_iter)
    _check_status(status[1:], resid[1:], i_sen)
    if status[0] == FAILED:
        raise SolverError(
            f"feedback loop did not converge at zero input (relative residual {resid[0]:.3e})",
            residual=float(resid[0]), i_sen=0.0,
        )
    v_out = params.v_offset + (v[1:] - v[0])
    saturated = (status[1:] != OK) | (v_out < 0.0) | (v_out > params.v_dd)
    v_out = np.clip(v_out, 0.0, params.v_dd)
    return ChainResponse(i_sen, v_out, saturated, iters[1:], resid[1:])


def large_signal_output(
    i_sen: float,
    params: ChainParams,
    j: int = 1,
    models: NonlinearModelSpec = DEFAULT_MODELS,
) -> float:
    """Output voltage for one sensor current (clamped to the rails if saturated)."""
    return float(evaluate(i_sen, params, j, models).v_out[0])


def local_slope(i_sen: float, params: ChainParams, j: int = 1, models: NonlinearModelSpec = DEFAULT_MODELS,
                step: float | None = None) -> float:
    """Central-difference dV/dI of the large-signal output, in ohms.

    The default step moves the output by about 1 mV.
    """
    if step is None:
        step = 1e-3 / abs(transimpedance_closed_form(params, j))
    v, _ = loop_deviation([i_sen - step, i_sen + step], params, j, models)
    return float((v[1] - v[0]) / (2.0 * step))


def sweep(spec: SweepSpec, params: ChainParams, j: int = 1, models: NonlinearModelSpec = DEFAULT_MODELS) -> ChainResponse:
    grid = spec.grid()
    try:
        return evaluate(grid, params, j, models)
    except SolverError as exc:
        if exc.index is None:
            raise
        raise SolverError(
            f"sweep failed at grid point {exc.index} of {spec.n_points} (i_sen={float(grid[exc.index])!r} A): {exc}",
            index=exc.index, residual=exc.residual, i_sen=float(grid[exc.index]),
        ) from exc


def linear_fit(response: ChainResponse):
    """Least-squares line through a sweep; returns ``(slope, intercept, r_squared)``."""
    return ols(response.i_sen, response.v_out)


# ---------------------------------------------------------------------------
# reference and figure of merit


def reference_voltage(v_dd: float, spec: ReferenceSpec = ReferenceSpec()) -> float:
    if not v_dd > 0.0:
        raise DomainError(f"supply voltage must be positive, got {v_dd}")
    return spec.v_ref_nominal + spec.line_regulation * (v_dd - spec.v_dd_nominal)


def dynamic_range(i_max: float, v_noise_rms: float, r_t: float) -> float:
    """``20 log10(i_max / i_noise)`` with the noise floor referred through ``r_t``."""
    for name, value in (("i_max", i_max), ("v_noise_rms", v_noise_rms), ("r_t", r_t)):
        if not (value > 0.0 and math.isfinite(value)):
            raise DomainError(f"{name} must be positive and finite, got {value}")
    return 20.0 * math.log10(i_max / (v_noise_rms / r_t))
