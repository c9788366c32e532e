"""Symmetric spectra: Jacobi eigenvalues, closed-form w5 spectra, Weyl gaps.

Eigenvalues are always sorted descending, lambda_1 >= ... >= lambda_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import eigvalsh_batch

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    values: tuple[float, ...]

    @property
    def largest(self) -> float:
        return self.values[0]

    @property
    def smallest(self) -> float:
        return self.values[-1]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def to_json(self) -> list[float]:
        return [float(v) for v in self.values]


def _check_symmetric(A: np.ndarray, name="matrix"):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    asym = np.abs(A - A.T).max() if A.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3e})")


def eigenvalues(A) -> Spectrum:
    A = np.asarray(A, dtype=float)
    _check_symmetric(A)
    return Spectrum(tuple(float(v) for v in eigvalsh_batch(A[None])[0]))


@dataclass(frozen=True)
class ClosedFormSpectrum:
    p: float
    lam: tuple[float, float, float, float, float]
    r: float

    def as_array(self) -> np.ndarray:
        return np.array(self.lam)


def closed_form_batch(p) -> np.ndarray:
    """Closed-form spectra of D^2 w5 at (p, 0, q, 0, 0); shape (..., 5)."""
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(p) > 1.0):
        raise ValueError("p must lie in [-1, 1]")
    root = 3.0 * np.sqrt(3.0 * (4.0 - p * p))
    r = np.sqrt(5 * p**6 - 30 * p**4 + 45 * p**2 + 16)
    p3 = p**3
    return np.stack(
        [
            (p3 - 6 * p + root) / 2,
            (5 * p3 - 15 * p + 3 * r) / 4,
            (p3 + 3 * p) / 2,
            (5 * p3 - 15 * p - 3 * r) / 4,
            (p3 - 6 * p - root) / 2,
        ],
        axis=-1,
    )


def closed_form_spectrum(p: float) -> ClosedFormSpectrum:
    lam = closed_form_batch(p)
    r = float(np.sqrt(5 * p**6 - 30 * p**4 + 45 * p**2 + 16))
    return ClosedFormSpectrum(float(p), tuple(float(v) for v in lam), r)


def char_factors(p: float, S: float) -> tuple[float, float]:
    """The two factors of the characteristic polynomial of D^2 w5 at level p."""
    f1 = (S - 1.5 * p - 0.5 * p**3) * (S * S + 6 * p * S - p**3 * S + 63 * p**2 / 4 - 3 * p**4 + p**6 / 4 - 27)
    f2 = S * S + 7.5 * p * S - 2.5 * p**3 * S - 45 * p**2 / 4 + 7.5 * p**4 - 1.25 * p**6 - 9
    return f1, f2


def weyl_bounds(A, B) -> tuple[float, float]:
    """(max_i, min_i) of lambda_i(A) - lambda_i(B); bracket the extreme eigenvalues of A - B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    _check_symmetric(A, "A")
    _check_symmetric(B, "B")
    gaps = eigvalsh_batch(np.stack([A, B]))
    d = gaps[0] - gaps[1]
    return float(d.max()), float(d.min())
