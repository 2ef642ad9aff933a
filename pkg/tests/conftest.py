import numpy as np
import pytest

from ptia.chain import ChainParams
from ptia.profile import default_profile


@pytest.fixture(scope="session")
def profile():
    return default_profile()


@pytest.fixture(scope="session")
def params(profile):
    return profile.chain


def random_chain(rng: np.random.Generator) -> ChainParams:
    """Random but well-conditioned chain (loop gain A*gm2 in [0, 0.9])."""
    v_th = rng.uniform(0.3, 0.6)
    v_dd = rng.uniform(1.2, 1.8)
    k_proc = rng.uniform(2e-4, 2e-3)
    a = 1.0 / (2.0 * k_proc * (v_dd - v_th))
    return ChainParams(
        gm17=rng.uniform(5e-5, 5e-4),
        gm16=rng.uniform(1e-5, 1e-4),
        gm11=(gm11 := rng.uniform(1e-4, 4e-4)),
        gm12=gm11 * rng.uniform(0.0, 0.95),
        gm14=rng.uniform(1e-5, 1e-4),
        r_z=rng.uniform(1e3, 1e4),
        k_proc=k_proc,
        v_th=v_th,
        v_dd=v_dd,
        gm2=rng.uniform(0.0, 0.9) / a,
        alpha_c=rng.uniform(0.9, 1.0),
        i_b2=rng.uniform(1e-4, 1e-3),
        v_offset=rng.uniform(0.2, 0.8),
        i_center=rng.uniform(1e-5, 1.5e-4),
    )
