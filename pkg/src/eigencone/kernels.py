"""Hot numeric kernels: batched symmetric eigenvalues and matrix exponentials.

Each kernel has a numba loop version and a vectorized numpy version with the
same contract.  ``eigvalsh_batch`` and ``expm_batch`` dispatch on
:data:`eigencone._jit.USE_JIT`; the explicit variants stay importable so
tests and the benchmark can compare them.
"""

import math

import numpy as np

from ._jit import HAVE_NUMBA, USE_JIT, njit

JACOBI_TOL = 1e-14
MAX_SWEEPS = 60
EXPM_ORDER = 18


def _jacobi_loop(A, tol, max_sweeps):
    N, n, _ = A.shape
    out = np.empty((N, n))
    a = np.empty((n, n))
    for k in range(N):
        fro = 0.0
        for i in range(n):
            for j in range(n):
                a[i, j] = A[k, i, j]
                fro += a[i, j] * a[i, j]
        fro = math.sqrt(fro)
        for _ in range(max_sweeps):
            off = 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    off += a[p, q] * a[p, q]
            if math.sqrt(2.0 * off) <= tol * fro:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    if abs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    a[p, p] -= t * apq
                    a[q, q] += t * apq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(n):
                        if r != p and r != q:
                            arp = a[r, p]
                            arq = a[r, q]
                            a[r, p] = c * arp - s * arq
                            a[p, r] = a[r, p]
                            a[r, q] = s * arp + c * arq
                            a[q, r] = a[r, q]
        d = np.empty(n)
        for i in range(n):
            d[i] = a[i, i]
        d = np.sort(d)
        for i in range(n):
            out[k, i] = d[n - 1 - i]
    return out


def jacobi_eigvals_numpy(A, tol=JACOBI_TOL, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi on a stack of symmetric matrices, vectorized over the stack.

    Returns eigenvalues sorted descending, shape (N, n).
    """
    a = np.array(A, dtype=float, copy=True)
    N, n, _ = a.shape
    fro = np.sqrt((a * a).sum(axis=(1, 2)))
    iu, ju = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (a[:, iu, ju] ** 2).sum(axis=1))
        active = np.nonzero(off > tol * fro)[0]
        if active.size == 0:
            break
        b = a[active]
        for p, q in zip(iu, ju):
            apq = b[:, p, q].copy()
            app = b[:, p, p].copy()
            aqq = b[:, q, q].copy()
            nz = apq != 0.0
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                theta = (aqq - app) / (2.0 * np.where(nz, apq, 1.0))
                t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(nz & np.isfinite(t), t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            bp = b[:, :, p].copy()
            bq = b[:, :, q].copy()
            newp = c[:, None] * bp - s[:, None] * bq
            newq = s[:, None] * bp + c[:, None] * bq
            b[:, :, p] = newp
            b[:, :, q] = newq
            b[:, p, :] = newp
            b[:, q, :] = newq
            b[:, p, p] = app - t * apq
            b[:, q, q] = aqq + t * apq
            b[:, p, q] = 0.0
            b[:, q, p] = 0.0
        a[active] = b
    d = np.diagonal(a, axis1=1, axis2=2)
    return -np.sort(-d, axis=1)


def _expm_loop(S, order):
    N, n, _ = S.shape
    out = np.empty_like(S)
    A = np.empty((n, n))
    E = np.empty((n, n))
    T = np.empty((n, n))
    for k in range(N):
        norm = 0.0
        for i in range(n):
            row = 0.0
            for j in range(n):
                row += abs(S[k, i, j])
            norm = max(norm, row)
        sq = 0
        if norm > 0.5:
            sq = int(math.ceil(math.log2(norm / 0.5)))
        scale = 2.0**sq
        for i in range(n):
            for j in range(n):
                A[i, j] = S[k, i, j] / scale
                E[i, j] = 1.0 if i == j else 0.0
        # Horner: E <- I + A E / m
        for m in range(order, 0, -1):
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for l in range(n):
                        acc += A[i, l] * E[l, j]
                    T[i, j] = acc / m
            for i in range(n):
                for j in range(n):
                    E[i, j] = T[i, j] + (1.0 if i == j else 0.0)
        for _ in range(sq):
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for l in range(n):
                        acc += E[i, l] * E[l, j]
                    T[i, j] = acc
            E[:, :] = T
        out[k] = E
    return out


def expm_numpy(S, order=EXPM_ORDER):
    """exp of a stack of square matrices by scaled Taylor series and squaring."""
    S = np.asarray(S, dtype=float)
    n = S.shape[-1]
    norm = np.abs(S).sum(axis=2).max() if S.size else 0.0
    sq = int(math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    A = S / 2.0**sq
    eye = np.broadcast_to(np.eye(n), S.shape)
    E = eye.copy()
    for m in range(order, 0, -1):
        E = eye + (A @ E) / m
    for _ in range(sq):
        E = E @ E
    return E


if HAVE_NUMBA:
    jacobi_eigvals_jit = njit(_jacobi_loop)
    _expm_jit = njit(_expm_loop)

    def expm_jit(S, order=EXPM_ORDER):
        return _expm_jit(np.ascontiguousarray(S, dtype=np.float64), order)

else:  # pragma: no cover
    jacobi_eigvals_jit = None
    expm_jit = None


def eigvalsh_batch(A, tol=JACOBI_TOL, max_sweeps=MAX_SWEEPS):
    """Descending eigenvalues of a stack (N, n, n) of symmetric matrices."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {A.shape}")
    if USE_JIT:
        return jacobi_eigvals_jit(A, tol, max_sweeps)
    return jacobi_eigvals_numpy(A, tol, max_sweeps)


def expm_batch(S, order=EXPM_ORDER):
    if USE_JIT:
        return expm_jit(S, order)
    return expm_numpy(S, order)


def backend_name() -> str:
    return "numba" if USE_JIT else "numpy"
