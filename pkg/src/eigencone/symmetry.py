"""Automorphisms of the Cartan cubic and normal-form recovery on S^4.

The generators A2 and A3 are the printed matrices conjugated by the
z2 <-> z3 coordinate swap; only that labelling preserves P5 in the variable
order (x1, x2, z1, z2, z3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import w5, w_eval

_R3 = np.sqrt(3.0)
_SWAP_Z2_Z3 = np.eye(5)[[0, 1, 2, 4, 3]]
UNIT_TOL = 1e-10


def _a1(t):
    c, s = np.cos(t), np.sin(t)
    return 0.5 * np.array(
        [
            [3 * c**2 - 1, _R3 * s**2, _R3 * np.sin(2 * t), 0, 0],
            [_R3 * s**2, 1 + c**2, -np.sin(2 * t), 0, 0],
            [-_R3 * np.sin(2 * t), np.sin(2 * t), 2 * np.cos(2 * t), 0, 0],
            [0, 0, 0, 2 * c, 2 * s],
            [0, 0, 0, -2 * s, 2 * c],
        ]
    )


def _a2_printed(t):
    c, s = np.cos(t), np.sin(t)
    c2, s2 = np.cos(2 * t), np.sin(2 * t)
    return np.array(
        [
            [1, 0, 0, 0, 0],
            [0, c2, 0, -s2, 0],
            [0, 0, c, 0, -s],
            [0, s2, 0, c2, 0],
            [0, 0, s, 0, c],
        ]
    )


def _a3_printed(t):
    c, s = np.cos(t), np.sin(t)
    s2 = np.sin(2 * t)
    return 0.5 * np.array(
        [
            [3 * c**2 - 1, -_R3 * s**2, 0, 0, -_R3 * s2],
            [-_R3 * s**2, 1 + c**2, 0, 0, -s2],
            [0, 0, 2 * c, -2 * s, 0],
            [0, 0, 2 * s, 2 * c, 0],
            [_R3 * s2, s2, 0, 0, 2 * np.cos(2 * t)],
        ]
    )


def printed_generator(kind: int, t: float) -> np.ndarray:
    """The generator exactly as typeset; A2 and A3 do not fix P5 in this form."""
    return {1: _a1, 2: _a2_printed, 3: _a3_printed}[kind](t)


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    params: tuple = ()

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, self.params + other.params)

    def apply(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    @property
    def T(self) -> "GroupElement":
        return GroupElement(self.matrix.T, self.params)


def generator(kind: int, t: float) -> GroupElement:
    if kind == 1:
        m = _a1(t)
    elif kind in (2, 3):
        m = _SWAP_Z2_Z3 @ printed_generator(kind, t) @ _SWAP_Z2_Z3
    else:
        raise ValueError("generator kind must be 1, 2 or 3")
    return GroupElement(m, ((kind, float(t)),))


def orbit_point(phi: float, psi: float, theta: float, chi: float) -> np.ndarray:
    """Row vector (cos chi, 0, sin chi, 0, 0) A1(-phi) A2(-psi) A3(-theta)."""
    base = np.array([np.cos(chi), 0.0, np.sin(chi), 0.0, 0.0])
    return base @ generator(1, -phi).matrix @ generator(2, -psi).matrix @ generator(3, -theta).matrix


def orbit_jacobian(params=(0.0, 0.0, 0.0, 0.0), h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian (5 x 4) of :func:`orbit_point`."""
    v = np.asarray(params, dtype=float)
    J = np.empty((5, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        J[:, i] = (orbit_point(*(v + e)) - orbit_point(*(v - e))) / (2 * h)
    return J


def orbit_rank(params=(0.0, 0.0, 0.0, 0.0), rel_tol: float = 1e-6) -> int:
    sv = np.linalg.svd(orbit_jacobian(params), compute_uv=False)
    return int((sv > rel_tol * sv[0]).sum())


@dataclass(frozen=True)
class NormalForm:
    p: float
    q: float

    def point(self) -> np.ndarray:
        return np.array([self.p, 0.0, self.q, 0.0, 0.0])


def level_of(p):
    """w5 on the reference circle: p (3 - p^2) / 2, strictly increasing on [-1, 1]."""
    p = np.asarray(p, dtype=float)
    return p * (3.0 - p * p) / 2.0


def solve_level(w, tol: float = 1e-14, max_iter: int = 200) -> np.ndarray:
    """Root p in [-1, 1] of p(3 - p^2)/2 = w by Newton steps safeguarded with bisection."""
    w = np.asarray(w, dtype=float)
    if np.any(np.abs(w) > 1.0 + 1e-9):
        raise ValueError("|w5(x)| > 1 on the unit sphere: broken invariant")
    w = np.clip(w, -1.0, 1.0)
    lo = np.full(w.shape, -1.0)
    hi = np.full(w.shape, 1.0)
    p = w.copy()  # level_of(p) ~ 1.5 p near 0, so p = w is inside the bracket
    for _ in range(max_iter):
        f = level_of(p) - w
        lo = np.where(f < 0, p, lo)
        hi = np.where(f > 0, p, hi)
        d = 1.5 * (1.0 - p * p)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = p - f / d
        bad = ~np.isfinite(newton) | (newton <= lo) | (newton >= hi)
        nxt = np.where(bad, 0.5 * (lo + hi), newton)
        nxt = np.where(f == 0, p, nxt)
        done = np.abs(nxt - p) <= tol
        p = nxt
        if np.all(done | (hi - lo <= tol)):
            break
    return p


def normal_form_of(x) -> NormalForm:
    x = np.asarray(x, dtype=float)
    if x.shape != (5,):
        raise ValueError("expected a point of R^5")
    if abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
        raise ValueError("normal_form_of needs a unit vector")
    p = float(solve_level(w_eval(w5(), x)))
    return NormalForm(p, float(np.sqrt(max(0.0, 1.0 - p * p))))


def normal_form_p_batch(X) -> np.ndarray:
    """p for a batch of unit vectors (P5 restricted to the sphere equals w5)."""
    return solve_level(w5().value_batch(X))
