"""Homogeneous fields w = P/|x|^delta and the ten-dimensional augmented field.

Polynomial derivatives are taken exactly once (see :func:`poly.compile_derivatives`)
and then evaluated numerically in batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .poly import Polynomial, cartan_p5, compile_derivatives, eval_monomials, lawson_p4

ORIGIN_GUARD = 1e-8


def _quotient_derivatives(N, G, HN, X, expo):
    """Value, gradient and Hessian of N(x) * |x|^(-expo) for a batch.

    N: (B,), G: (B, n), HN: (B, n, n), X: (B, n).
    """
    n = X.shape[1]
    r2 = np.einsum("bi,bi->b", X, X)
    rm = r2 ** (-0.5 * expo)  # r^-e
    rm2 = rm / r2  # r^(-e-2)
    rm4 = rm2 / r2  # r^(-e-4)
    value = N * rm
    grad = G * rm[:, None] - expo * (N * rm2)[:, None] * X
    GX = G[:, :, None] * X[:, None, :]
    H = (
        HN * rm[:, None, None]
        - expo * rm2[:, None, None] * (GX + np.swapaxes(GX, 1, 2))
        - (expo * N * rm2)[:, None, None] * np.eye(n)
        + (expo * (expo + 2.0) * N * rm4)[:, None, None] * (X[:, :, None] * X[:, None, :])
    )
    return value, grad, H


def _as_batch(X, n):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != n:
        raise ValueError(f"points have dimension {X.shape[1]}, field expects {n}")
    return X, single


def _reject_origin(X, what="point"):
    norms = np.sqrt(np.einsum("bi,bi->b", X, X))
    if np.any(norms < ORIGIN_GUARD):
        raise ValueError(f"{what} too close to the origin (|x| < {ORIGIN_GUARD}); the field is singular there")


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """w(x) = P(x) / |x|^delta for a homogeneous cubic P."""

    poly: Polynomial
    delta: float = 1.0
    name: str = ""
    _tables: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.poly.is_zero() or not self.poly.is_homogeneous(3):
            raise ValueError("field numerator must be a nonzero homogeneous cubic")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        object.__setattr__(self, "_tables", compile_derivatives(self.poly))

    @property
    def dim(self) -> int:
        return self.poly.nvars

    @property
    def homogeneity(self) -> float:
        return 3.0 - self.delta

    def poly_derivatives(self, X):
        exps, c0, c1, c2 = self._tables
        m = eval_monomials(X, exps)
        return m @ c0, m @ c1.T, np.einsum("bk,ijk->bij", m, c2)

    def value_batch(self, X):
        X, _ = _as_batch(X, self.dim)
        _reject_origin(X)
        exps, c0, _, _ = self._tables
        r2 = np.einsum("bi,bi->b", X, X)
        return (eval_monomials(X, exps) @ c0) * r2 ** (-0.5 * self.delta)

    def derivatives_batch(self, X):
        """(w, grad w, Hessian w) for a batch of points (B, n)."""
        X, _ = _as_batch(X, self.dim)
        _reject_origin(X)
        P, G, HP = self.poly_derivatives(X)
        return _quotient_derivatives(P, G, HP, X, self.delta)

    def hessian_batch(self, X):
        """(w, Hessian w) for a batch; the interface the hyperbolicity module samples through."""
        w, _, H = self.derivatives_batch(X)
        return w, H


@dataclass(frozen=True, eq=False)
class AugmentedField:
    """u(x, y) = (w(x) + w(y) + M(|x|^2 - |y|^2)) / (|x|^2 + |y|^2)^delta on R^(2n)."""

    delta: float
    big_m: float
    base: FieldSpec = field(default_factory=lambda: w5())

    @property
    def dim(self) -> int:
        return 2 * self.base.dim

    @property
    def homogeneity(self) -> float:
        return 2.0 - 2.0 * self.delta

    def _numerator(self, Z, need_hessian=True):
        n = self.base.dim
        x, y = Z[:, :n], Z[:, n:]
        if need_hessian:
            for block in (x, y):
                _reject_origin(block, "block")
        wx, gx, hx = _block_terms(self.base, x, need_hessian)
        wy, gy, hy = _block_terms(self.base, y, need_hessian)
        m = self.big_m
        N = wx + wy + m * (np.einsum("bi,bi->b", x, x) - np.einsum("bi,bi->b", y, y))
        G = np.concatenate([gx + 2 * m * x, gy - 2 * m * y], axis=1)
        if not need_hessian:
            return N, G, None
        B = Z.shape[0]
        HN = np.zeros((B, 2 * n, 2 * n))
        HN[:, :n, :n] = hx + 2 * m * np.eye(n)
        HN[:, n:, n:] = hy - 2 * m * np.eye(n)
        return N, G, HN

    def value_batch(self, Z):
        Z, _ = _as_batch(Z, self.dim)
        _reject_origin(Z)
        N, _, _ = self._numerator(Z, need_hessian=False)
        r2 = np.einsum("bi,bi->b", Z, Z)
        return N * r2 ** (-self.delta)

    def derivatives_batch(self, Z):
        Z, _ = _as_batch(Z, self.dim)
        _reject_origin(Z)
        N, G, HN = self._numerator(Z)
        return _quotient_derivatives(N, G, HN, Z, 2.0 * self.delta)

    def hessian_batch(self, Z):
        u, _, H = self.derivatives_batch(Z)
        return u, H


def _block_terms(F: FieldSpec, X, need_hessian):
    """Base-field value/gradient/Hessian on one block; value and gradient extend by 0 at the origin."""
    B, n = X.shape
    w = np.zeros(B)
    g = np.zeros((B, n))
    h = np.zeros((B, n, n)) if need_hessian else None
    ok = np.einsum("bi,bi->b", X, X) > 0.0
    if ok.any():
        wv, gv, hv = _quotient_derivatives(*F.poly_derivatives(X[ok]), X[ok], F.delta)
        w[ok], g[ok] = wv, gv
        if need_hessian:
            h[ok] = hv
    return w, g, h


# -- single-point API -------------------------------------------------------

def w_eval(F: FieldSpec, x) -> float:
    return float(F.value_batch(x)[0])


def w_gradient(F: FieldSpec, x) -> np.ndarray:
    return F.derivatives_batch(x)[1][0]


def w_hessian(F: FieldSpec, x) -> np.ndarray:
    return F.derivatives_batch(x)[2][0]


def u10_eval(A: AugmentedField, xy) -> float:
    return float(A.value_batch(xy)[0])


def u10_hessian(A: AugmentedField, xy) -> np.ndarray:
    return A.derivatives_batch(xy)[2][0]


# -- named fields -----------------------------------------------------------

@lru_cache(maxsize=None)
def w5() -> FieldSpec:
    return FieldSpec(cartan_p5(), 1.0, "w5")


@lru_cache(maxsize=None)
def w4() -> FieldSpec:
    return FieldSpec(lawson_p4(), 1.0, "w4")


@lru_cache(maxsize=None)
def w5_delta(delta: float) -> FieldSpec:
    return FieldSpec(cartan_p5(), float(delta), f"w5_delta={delta:g}")
