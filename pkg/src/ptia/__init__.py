"""Programmable transimpedance amplifier readout-chain simulator.

Modules
-------
chain        small- and large-signal models of the readout path
control      select-code decoder and gain index
noise        thermal-noise PSD and band integration
distortion   transient simulation and THD
variation    Monte Carlo mismatch and PVT corner tables
calibration  glucose calibration curves and conversions
profile      parameter profiles (``key = value`` files)
cli          command-line front end
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .chain import (
    ChainParams,
    NonlinearModelSpec,
    ReferenceSpec,
    SweepSpec,
    large_signal_output,
    sweep,
    transimpedance_closed_form,
)
from .control import ControlVector, SelectWord, decode, gain_index
from .profile import Profile, default_profile, load_profile

__all__ = [
    "BACKEND",
    "ChainParams",
    "ControlVector",
    "NonlinearModelSpec",
    "Profile",
    "ReferenceSpec",
    "SelectWord",
    "SweepSpec",
    "decode",
    "default_profile",
    "gain_index",
    "large_signal_output",
    "load_profile",
    "sweep",
    "transimpedance_closed_form",
]
