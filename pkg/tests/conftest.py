from __future__ import annotations

import numpy as np
import pytest

from thermophase import ModelParams


def desk_params(**overrides) -> ModelParams:
    """Reduced-unit parameter set used across the suite."""
    base = dict(
        rho=1.0, c_p=1.0, d_c=0.2, tau_phi=1.0, eps_interface=0.1,
        lambda_cpl=0.5, beta=1.0, gamma=1.0, alpha=0.03, L_c=0.5, L_phi=0.5,
        A_d=1.0, A_r=1.2, E_d=2.0, E_r=1.0, R_gas=1.0, k_lo=0.8, k_hi=1.2,
    )
    base.update(overrides)
    return ModelParams(**base)


# smallest positive double: realizes the vanishing-coefficient limits exactly
# while keeping the strict-positivity validation satisfied
TINY = 5e-324


@pytest.fixture
def params() -> ModelParams:
    return desk_params()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)
