import numpy as np
import pytest

from conftest import random_unit
from eigencone.field import (
    AugmentedField, FieldSpec, u10_eval, u10_hessian, w4, w5, w5_delta, w_eval, w_gradient, w_hessian,
)
from eigencone.kernels import eigvalsh_batch
from eigencone.poly import Polynomial, norm_sq

R3 = np.sqrt(3.0)


def fd_hessian(f, x, h=1e-4):
    n = len(x)
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


def test_w5_values():
    F = w5()
    assert w_eval(F, [1, 0, 0, 0, 0]) == 1.0
    assert w_eval(F, [2, 0, 0, 0, 0]) == 4.0
    for p in np.linspace(-1, 1, 11):
        assert w_eval(F, [p, 0, np.sqrt(1 - p * p), 0, 0]) == pytest.approx(p * (3 - p * p) / 2, abs=1e-14)


def test_origin_rejected():
    with pytest.raises(ValueError):
        w_eval(w5(), np.zeros(5))
    with pytest.raises(ValueError):
        w_hessian(w5(), np.full(5, 1e-10))
    with pytest.raises(ValueError):
        u10_eval(AugmentedField(1e-6, 100.0), np.zeros(10))


def test_rejects_non_cubic():
    with pytest.raises(ValueError):
        FieldSpec(norm_sq(3))
    with pytest.raises(ValueError):
        FieldSpec(Polynomial.variable(3, 0) ** 3, delta=-1.0)


def test_hessian_examples():
    F = w5()
    assert np.allclose(w_hessian(F, [1, 0, 0, 0, 0]), np.diag([2, -7, 2, 2, -7]), atol=1e-14)
    lam = eigvalsh_batch(w_hessian(F, [0, 0, 1, 0, 0])[None])[0]
    assert np.allclose(lam, [3 * R3, 3, 0, -3, -3 * R3], atol=1e-13)


@pytest.mark.parametrize("F", [w5(), w4(), w5_delta(1.5)], ids=["w5", "w4", "w5_1.5"])
def test_hessian_vs_finite_differences(F, rng):
    f = lambda v: w_eval(F, v)
    for x in random_unit(rng, 100, F.dim):
        H = w_hessian(F, x)
        fd = fd_hessian(f, x)
        assert np.abs(H - fd).max() <= 1e-6 * max(1.0, np.abs(H).max())
        assert np.array_equal(H, H.T)


@pytest.mark.parametrize("F", [w5(), w4(), w5_delta(1.5)], ids=["w5", "w4", "w5_1.5"])
def test_gradient_and_euler(F, rng):
    for x in rng.standard_normal((50, F.dim)):
        g = w_gradient(F, x)
        assert x @ g == pytest.approx(F.homogeneity * w_eval(F, x), abs=1e-10 * max(1, abs(w_eval(F, x))))
        t = 2.7
        assert w_eval(F, t * x) == pytest.approx(t ** F.homogeneity * w_eval(F, x), rel=1e-12)


def test_hessian_order_zero(rng):
    F = w5()
    for x in random_unit(rng, 30, 5):
        H = w_hessian(F, x)
        for t in (0.5, 2.0, 10.0):
            assert np.abs(w_hessian(F, t * x) - H).max() <= 1e-12


def test_trace_identity(rng):
    F = w5()
    X = random_unit(rng, 10000, 5)
    w, H = F.hessian_batch(X)
    assert np.abs(np.trace(H, axis1=1, axis2=2) + 8 * w).max() <= 1e-10


def test_batch_matches_single(rng):
    F = w5()
    X = rng.standard_normal((7, 5))
    _, H = F.hessian_batch(X)
    for k in range(7):
        assert np.allclose(H[k], w_hessian(F, X[k]), rtol=1e-14, atol=1e-14)


def test_concurrent_evaluation_bit_identical(rng):
    from concurrent.futures import ThreadPoolExecutor

    F = w5()
    X = rng.standard_normal((512, 5))
    ref = F.hessian_batch(X)[1]
    with ThreadPoolExecutor(8) as pool:
        outs = list(pool.map(lambda _: F.hessian_batch(X)[1], range(16)))
    assert all(np.array_equal(o, ref) for o in outs)


# -- augmented field ------------------------------------------------------------

def test_u10_examples(rng):
    x = random_unit(rng, 1, 5)[0]
    A0 = AugmentedField(0.0, 0.0)
    assert u10_eval(A0, np.concatenate([x, x])) == pytest.approx(2 * w_eval(w5(), x), abs=1e-14)
    A = AugmentedField(1e-6, 100.0)
    e = np.array([1.0, 0, 0, 0, 0])
    assert u10_eval(A, np.concatenate([e, e])) == pytest.approx(2 / 2**1e-6, abs=1e-14)


def test_u10_homogeneity(rng):
    A = AugmentedField(1e-6, 100.0)
    for z in rng.standard_normal((100, 10)):
        assert abs(u10_eval(A, 2 * z) - 2 ** A.homogeneity * u10_eval(A, z)) <= 1e-9 * max(1.0, abs(u10_eval(A, z)))


def test_u10_hessian_vs_finite_differences(rng):
    A = AugmentedField(1e-6, 100.0)
    f = lambda v: u10_eval(A, v)
    for z in random_unit(rng, 100, 10):
        H = u10_hessian(A, z)
        fd = fd_hessian(f, z)
        assert np.abs(H - fd).max() <= 1e-6 * max(1.0, np.abs(H).max())


def test_u10_zero_block_value():
    A = AugmentedField(0.5, 3.0)
    z = np.array([1.0, 0, 0, 0, 0] + [0] * 5)
    # y = 0: u = (w5(x) + M) / |x|^(2 delta)
    assert u10_eval(A, z) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        u10_hessian(A, z)
