"""Counter-based random streams and the sampling distributions used for certification.

Every block of samples draws from its own Philox stream whose key is the
master seed and whose counter starts at ``block << 128``.  A block's draws
depend only on ``(seed, block, tag)``; worker count and scheduling do not
enter.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 8192
SAMPLE_TAG = 0
SEARCH_TAG = 1


def stream(seed: int, index: int, tag: int = SAMPLE_TAG) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and stream index must be non-negative")
    key = (int(seed) % 2**64) | (int(tag) << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=int(index) << 128))


def unit_vectors(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """m points uniform on S^(n-1) (normalized Gaussians)."""
    g = rng.standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1)[:, None]


def haar_orthogonal(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """m Haar-distributed elements of O(n).

    QR of a Gaussian matrix with the sign of diag(R) folded into Q, then a
    random reflection of the first axis so both components of O(n) appear
    with equal weight.
    """
    Z = rng.standard_normal((m, n, n))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    Q = Q * signs[:, None, :]
    flip = np.where(rng.integers(0, 2, size=m) == 1, -1.0, 1.0)
    Q[:, :, 0] *= flip[:, None]
    return Q


def block_bounds(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    return [(start, min(n, start + block_size)) for start in range(0, n, block_size)]


def draw_block(seed: int, block: int, m: int, dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, y, O) for one block of m family members in dimension ``dim``."""
    rng = stream(seed, block, SAMPLE_TAG)
    X = unit_vectors(rng, m, dim)
    Y = unit_vectors(rng, m, dim)
    O = haar_orthogonal(rng, m, dim)
    return X, Y, O
