import numpy as np
import pytest

from ringlab import (DiagnosticsConfig, KernelConfig, generate_blob,
                     get_profile, velocity_direct)
from ringlab.cloud import Cloud


@pytest.fixture(scope="session")
def flat_disc():
    return get_profile("flat_disc")


@pytest.fixture(scope="session")
def gaussian():
    return get_profile("gaussian")


@pytest.fixture(scope="session")
def thin_blob(flat_disc):
    """Standard thin blob: eps = 1e-2, mu = r0 = 1, h = eps/8."""
    return generate_blob(flat_disc, 1e-2, (1.0, 0.0), 1.0, 1e-2 / 8)


@pytest.fixture(scope="session")
def thin_kcfg():
    return KernelConfig(delta=1.5 * 1e-2 / 8)


@pytest.fixture(scope="session")
def random_cloud():
    """Mid-scale random cloud exercising the AGM kernel branch."""
    rng = np.random.default_rng(42)
    n = 300
    r = 0.4 + 1.8 * rng.random(n)
    z = 1.5 * rng.standard_normal(n)
    gam = rng.random(n) / n
    return Cloud(r, z, gam, gam / r, np.zeros(n, np.int8),
                 epsilon=1e-2, mu=float(gam.sum()), r0=1.0)


@pytest.fixture(scope="session", autouse=True)
def _warm_numba(thin_blob, thin_kcfg):
    # compile the jitted kernels once so timed tests stay honest
    velocity_direct(thin_blob, cfg=thin_kcfg)
    yield


def oracle_close(value, quad_result, rel=1e-8):
    """Agreement with a quadrature oracle within `rel`, never tighter than
    the oracle's own error bar or its 1e-12 absolute contract floor."""
    tol = max(rel * abs(quad_result.value),
              10.0 * quad_result.abs_err_estimate, 2e-12)
    return abs(value - quad_result.value) <= tol
