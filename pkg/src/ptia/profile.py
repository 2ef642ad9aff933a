"""Parameter profiles: chain, noise, model choice, reference and test stimulus.

A profile is one ``key = value`` file. The four PTBTA transconductances
(gm17, gm16, gm11, gm14) are shared between the chain and the noise model.
"""

from __future__ import annotations

import math
from dataclasses import MISSING, dataclass, fields, replace
from importlib import resources
from pathlib import Path

from . import config
from .chain import ChainParams, NonlinearModelSpec, ReferenceSpec
from .distortion import Stimulus
from .errors import ConfigError, DomainError
from .noise import BRANCHES, BandSpec, Branch, NoiseParams

CALIBRATED = "calibrated.cfg"

_CHAIN_KEYS = tuple(f.name for f in fields(ChainParams))
_SHARED_GM = (17, 16, 11, 14)
_NOISE_GM_KEYS = tuple(f"gm{b}" for b in BRANCHES if b not in _SHARED_GM)
_NOISE_FACTOR_KEYS = tuple(f"{kind}_{b}" for b in BRANCHES for kind in ("n", "gamma"))
_OTHER_KEYS = (
    "temperature", "r_load", "p",
    "iv_model", "ta_model", "ptbta_model", "ptbta_vov",
    "v_ref_nominal", "line_regulation", "v_dd_nominal",
    "thd_i_dc", "thd_i_amp", "thd_f0",
    "band_f_low", "band_f_high",
)
KNOWN_KEYS = frozenset(_CHAIN_KEYS + _NOISE_GM_KEYS + _NOISE_FACTOR_KEYS + _OTHER_KEYS)


@dataclass(frozen=True)
class Profile:
    chain: ChainParams
    noise: NoiseParams
    models: NonlinearModelSpec = NonlinearModelSpec()
    reference: ReferenceSpec = ReferenceSpec()
    stimulus: Stimulus = Stimulus(92.1e-6, 87.9e-6, 1e3)
    band: BandSpec = BandSpec(1.0, 1e4)

    def with_chain(self, **changes) -> "Profile":
        """Replace chain fields, keeping the shared noise gms in step."""
        chain = replace(self.chain, **changes)
        noise = self.noise
        for b in _SHARED_GM:
            key = f"gm{b}"
            if key in changes:
                noise = noise.with_branch(b, gm=changes[key])
        return replace(self, chain=chain, noise=noise)


def profile_from_entries(entries: dict[str, str]) -> Profile:
    unknown = sorted(set(entries) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown profile keys: {', '.join(unknown)}")
    g = config.get_float
    try:
        chain_kw = {}
        for name in _CHAIN_KEYS:
            if name == "step_gains":
                chain_kw[name] = config.get_float_list(entries, name)
            elif name == "p_max":
                chain_kw[name] = config.get_int(entries, name, 8)
            elif name in entries or _required(name):
                chain_kw[name] = g(entries, name)
        chain = ChainParams(**chain_kw)

        branches = {}
        for b in BRANCHES:
            gm = getattr(chain, f"gm{b}") if b in _SHARED_GM else g(entries, f"gm{b}")
            branches[b] = Branch(gm, g(entries, f"n_{b}", 1.0), g(entries, f"gamma_{b}", 1.0))
        noise = NoiseParams(
            branches,
            temperature=g(entries, "temperature", 300.15),
            r_load=g(entries, "r_load", math.inf),
            p=config.get_int(entries, "p", 1),
        )
        models = NonlinearModelSpec(
            iv=config.get_str(entries, "iv_model", "pair"),
            ta=config.get_str(entries, "ta_model", "tanh"),
            ptbta=config.get_str(entries, "ptbta_model", "linear"),
            ptbta_vov=g(entries, "ptbta_vov", 0.25),
        )
        reference = ReferenceSpec(
            g(entries, "v_ref_nominal", 0.6),
            g(entries, "line_regulation", 0.0),
            g(entries, "v_dd_nominal", chain.v_dd),
        )
        stimulus = Stimulus(
            g(entries, "thd_i_dc", 92.1e-6),
            g(entries, "thd_i_amp", 87.9e-6),
            g(entries, "thd_f0", 1e3),
        )
        band = BandSpec(g(entries, "band_f_low", 1.0), g(entries, "band_f_high", 1e4))
    except DomainError as exc:
        raise ConfigError(f"invalid profile: {exc}") from exc
    return Profile(chain, noise, models, reference, stimulus, band)


def _required(name: str) -> bool:
    f = ChainParams.__dataclass_fields__[name]
    return f.default is MISSING and f.default_factory is MISSING


def load_profile(path: str | Path | None = None) -> Profile:
    """Load a profile file; ``None`` loads the shipped calibrated profile."""
    if path is None:
        text = resources.files("ptia").joinpath("data", CALIBRATED).read_text(encoding="utf-8")
        return profile_from_entries(config.parse_kv(text, source=CALIBRATED))
    return profile_from_entries(config.read_kv(path))


def default_profile() -> Profile:
    return load_profile(None)


def profile_to_entries(profile: Profile) -> list[tuple[str, object]]:
    items: list[tuple[str, object]] = []
    for f in fields(ChainParams):
        value = getattr(profile.chain, f.name)
        if value is not None:
            items.append((f.name, value))
    for b in BRANCHES:
        br = profile.noise.branches[b]
        if b not in _SHARED_GM:
            items.append((f"gm{b}", br.gm))
        items.append((f"n_{b}", br.n))
        items.append((f"gamma_{b}", br.gamma))
    items += [
        ("temperature", profile.noise.temperature),
        ("r_load", profile.noise.r_load),
        ("p", profile.noise.p),
        ("iv_model", profile.models.iv),
        ("ta_model", profile.models.ta),
        ("ptbta_model", profile.models.ptbta),
        ("ptbta_vov", profile.models.ptbta_vov),
        ("v_ref_nominal", profile.reference.v_ref_nominal),
        ("line_regulation", profile.reference.line_regulation),
        ("v_dd_nominal", profile.reference.v_dd_nominal),
        ("thd_i_dc", profile.stimulus.i_dc),
        ("thd_i_amp", profile.stimulus.i_amp),
        ("thd_f0", profile.stimulus.f0),
        ("band_f_low", profile.band.f_low),
        ("band_f_high", profile.band.f_high),
    ]
    return items


def save_profile(profile: Profile, path: str | Path) -> None:
    Path(path).write_text(config.format_kv(profile_to_entries(profile)), encoding="utf-8")
