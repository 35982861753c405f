import math

import numpy as np
import pytest

from ringlab import oracle
from ringlab.kernels import f1_exact, f2_exact, f_exact
from ringlab.oracle import (asymptotic_F, asymptotic_F1, asymptotic_F2,
                            quad_F, quad_F1, quad_F2)


def test_asymptotic_printed_constants():
    # F2(1e-3): (1/2) log(1e3) + 0.53972 = 3.99360
    assert asymptotic_F2(1e-3) == pytest.approx(3.99360, abs=1e-5)
    # F(1): log 8 - 2 = 0.07944 (log term vanishes)
    assert asymptotic_F(1.0) == pytest.approx(0.07944, abs=1e-5)


def test_asymptotic_domain():
    for fn in (asymptotic_F, asymptotic_F1, asymptotic_F2):
        with pytest.raises(ValueError):
            fn(1.5)
        with pytest.raises(ValueError):
            fn(0.0)


def test_quad_error_contract():
    # abs_err_estimate <= 1e-12 * max(1, |value|) on success
    for s in [1e-6, 1e-4, 3e-2, 1.0, 47.0, 900.0]:
        for q in (quad_F(s), quad_F1(s), quad_F2(s)):
            assert q.abs_err_estimate <= 1e-12 * max(1.0, abs(q.value)) * 5.0


def test_quad_small_s_matches_asymptotics():
    # F2: remainder O(s^2) against the printed expansion
    for s in (1e-2, 1e-3, 1e-4):
        gap = quad_F2(s).value - asymptotic_F2(s)
        assert abs(gap) <= 2.0 * s * s
    # remainder ratio bounded as s -> 0
    ratios = [abs(quad_F2(s).value - asymptotic_F2(s)) / (s * s)
              for s in (1e-2, 1e-3, 1e-4)]
    assert max(ratios) < 2.0


def test_quad_F2_positive():
    for s in np.geomspace(1e-5, 1e3, 20):
        assert quad_F2(float(s)).value > 0.0


def test_quad_F1_far_decay():
    # F1 * s^3 bounded on [10, 1e3] (true decay is s^-5)
    vals = [abs(quad_F1(float(s)).value) * float(s) ** 3
            for s in np.geomspace(10, 1e3, 8)]
    assert max(vals) <= vals[0] * 1.01


def test_quad_self_consistency_tolerance_halving():
    for s in (1e-3, 0.7, 20.0):
        a = oracle._quad_kernel(
            lambda x: math.cos(x) / (s * s + 4.0 * math.sin(0.5 * x) ** 2) ** 1.5,
            s, rel_tol=1e-10)
        b = oracle._quad_kernel(
            lambda x: math.cos(x) / (s * s + 4.0 * math.sin(0.5 * x) ** 2) ** 1.5,
            s, rel_tol=5e-11)
        assert abs(a[0] - b[0]) <= a[1] + b[1] + 1e-14


def test_quad_matches_closed_forms():
    for s in [2e-4, 5e-2, 0.9, 12.0]:
        assert quad_F1(s).value == pytest.approx(float(f1_exact(s)),
                                                 rel=1e-10, abs=1e-12)
        assert quad_F2(s).value == pytest.approx(float(f2_exact(s)),
                                                 rel=1e-10, abs=1e-12)
        assert quad_F(s).value == pytest.approx(float(f_exact(s)),
                                                rel=1e-10, abs=1e-12)


def test_reference_velocity_zero_cloud(thin_blob, thin_kcfg):
    import ringlab
    zero = ringlab.Cloud(np.array([1.0]), np.array([0.0]), np.array([0.0]),
                         np.array([0.0]), np.zeros(1, np.int8),
                         epsilon=1e-2, mu=0.0, r0=1.0)
    out = oracle.direct_velocity_reference(zero, np.array([[1.5, 0.3]]),
                                           thin_kcfg)
    assert np.all(out == 0.0)


def test_reference_agrees_with_direct_on_random_clouds(random_cloud):
    from ringlab import KernelConfig, velocity_direct
    kcfg = KernelConfig(delta=1e-3)
    u = velocity_direct(random_cloud, cfg=kcfg)
    ref = oracle.direct_velocity_reference(
        random_cloud, np.column_stack([random_cloud.r, random_cloud.z]),
        kcfg, self_indices=np.arange(random_cloud.n))
    scale = np.max(np.hypot(ref[:, 0], ref[:, 1]))
    rel = np.max(np.hypot(*(u - ref).T)) / scale
    assert rel <= 1e-13
