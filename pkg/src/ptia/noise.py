"""Thermal-noise model of the readout chain.

Per-device channel noise is ``4 k T Gamma gm`` (A^2/Hz). The input-referred
PSD of the whole readout is the eleven-term sum::

    S = 4kT [ 2 (nG)17/gm17 + 2 (nG)16 gm16/gm17^2 + 2 (nG)11 gm11/gm17^2
              + p (nG)14 gm14/gm17^2
              + 2 (nG)26/gm26 + 2 (nG)22 gm22/gm26^2 + 2 (nG)23 gm23/gm26^2
              + 2 (nG)25 gm25/gm26^2
              + (nG)29/gm29 + (nG)30/gm30 + 1/R_L ]

The load term is kept exactly as ``1/R_L``; it is dimensionally a
conductance among resistances and is negligible for any realistic load.
Only white thermal noise is modeled, so the PSD is flat in frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError

BOLTZMANN = 1.380649e-23  # J/K, exact SI value

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2 lacks trapezoid

BRANCHES = (17, 16, 11, 14, 26, 22, 23, 25, 29, 30)
TERM_NAMES = tuple(f"m{b}" for b in BRANCHES) + ("load",)


@dataclass(frozen=True)
class Branch:
    gm: float
    n: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not (self.gm > 0.0 and math.isfinite(self.gm)):
            raise DomainError(f"branch gm must be positive and finite, got {self.gm}")
        if self.n < 0.0 or self.gamma < 0.0:
            raise DomainError("substrate and noise factors must be non-negative")

    @property
    def n_gamma(self) -> float:
        return self.n * self.gamma


@dataclass(frozen=True)
class NoiseParams:
    branches: Mapping[int, Branch]
    temperature: float = 300.15
    r_load: float = math.inf
    p: int = 1
    boltzmann: float = field(default=BOLTZMANN, repr=False)

    def __post_init__(self):
        missing = [b for b in BRANCHES if b not in self.branches]
        if missing:
            raise DomainError(f"missing noise branches {missing}")
        # freeze into a plain, ordered, hashable-friendly tuple view
        object.__setattr__(self, "branches", {b: self.branches[b] for b in BRANCHES})
        if not self.temperature > 0.0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")
        if not self.r_load > 0.0:
            raise DomainError(f"r_load must be positive, got {self.r_load}")
        if not 1 <= self.p <= 8:
            raise DomainError(f"p must be in 1..8, got {self.p}")

    def __hash__(self):
        return hash((tuple(self.branches.items()), self.temperature, self.r_load, self.p, self.boltzmann))

    def gm(self, branch: int) -> float:
        return self.branches[branch].gm

    def with_branch(self, branch: int, **changes) -> "NoiseParams":
        branches = dict(self.branches)
        branches[branch] = replace(branches[branch], **changes)
        return replace(self, branches=branches)

    def restricted_to(self, term: str) -> "NoiseParams":
        """Copy in which only ``term`` (``"m17"`` ... ``"load"``) contributes."""
        if term not in TERM_NAMES:
            raise KeyError(term)
        branches = {
            b: (br if f"m{b}" == term else replace(br, n=0.0)) for b, br in self.branches.items()
        }
        r_load = self.r_load if term == "load" else math.inf
        return replace(self, branches=branches, r_load=r_load)


@dataclass(frozen=True)
class BandSpec:
    f_low: float
    f_high: float

    def __post_init__(self):
        if not 0.0 < self.f_low < self.f_high:
            raise DomainError(f"need 0 < f_low < f_high, got {self.f_low}, {self.f_high}")

    @property
    def width(self) -> float:
        return self.f_high - self.f_low


def mos_thermal_psd(gm: float, gamma: float, temperature: float) -> float:
    """Drain thermal-noise current PSD ``4 k T Gamma gm`` in A^2/Hz."""
    for name, value in (("gm", gm), ("gamma", gamma), ("temperature", temperature)):
        if not value > 0.0:
            raise DomainError(f"{name} must be positive, got {value}")
    return 4.0 * BOLTZMANN * temperature * gamma * gm


def psd_terms(params: NoiseParams) -> dict[str, float]:
    """Individual contributions (V^2/Hz) to the input-referred PSD."""
    four_kt = 4.0 * params.boltzmann * params.temperature
    br = params.branches
    g17 = br[17].gm
    g26 = br[26].gm
    return {
        "m17": four_kt * 2.0 * br[17].n_gamma / g17,
        "m16": four_kt * 2.0 * br[16].n_gamma * br[16].gm / g17**2,
        "m11": four_kt * 2.0 * br[11].n_gamma * br[11].gm / g17**2,
        "m14": four_kt * params.p * br[14].n_gamma * br[14].gm / g17**2,
        "m26": four_kt * 2.0 * br[26].n_gamma / g26,
        "m22": four_kt * 2.0 * br[22].n_gamma * br[22].gm / g26**2,
        "m23": four_kt * 2.0 * br[23].n_gamma * br[23].gm / g26**2,
        "m25": four_kt * 2.0 * br[25].n_gamma * br[25].gm / g26**2,
        "m29": four_kt * br[29].n_gamma / br[29].gm,
        "m30": four_kt * br[30].n_gamma / br[30].gm,
        "load": four_kt / params.r_load,
    }


def input_referred_psd(params: NoiseParams) -> float:
    """Total input-referred thermal-noise PSD in V^2/Hz."""
    return math.fsum(psd_terms(params).values())


def integrate_rms(psd: float | Callable[[np.ndarray], np.ndarray], band: BandSpec, n_points: int = 1000) -> float:
    """RMS voltage of ``psd`` integrated over ``band``.

    A constant PSD integrates in closed form. A callable is sampled on
    ``n_points`` log-spaced frequencies and integrated with the trapezoid rule.
    """
    if callable(psd):
        freqs = np.geomspace(band.f_low, band.f_high, n_points)
        values = np.asarray(psd(freqs), dtype=np.float64) * np.ones_like(freqs)
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero((values < 0.0) | ~np.isfinite(values))[0])
            raise DomainError(f"PSD is negative or non-finite at {freqs[bad]:.6g} Hz")
        return math.sqrt(float(_trapezoid(values, freqs)))
    psd = float(psd)
    if psd < 0.0 or not math.isfinite(psd):
        raise DomainError(f"PSD must be non-negative and finite, got {psd}")
    return math.sqrt(psd * band.width)


def psd_for_rms(v_rms: float, band: BandSpec) -> float:
    """Flat PSD that integrates to ``v_rms`` over ``band``."""
    return v_rms * v_rms / band.width
