"""The difference family M(x, y, O) = D^2 w(x) - O^T D^2 w(y) O and its certification.

Members are evaluated in batches: Hessians through the field objects, the
spectra through :func:`kernels.eigvalsh_batch`.  Sampling and multistart
search split into independent tasks whose inputs are pure functions of
``(seed, task index)``; reductions run in task order, so reports do not
depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .field import AugmentedField, FieldSpec, w5_delta
from .kernels import backend_name, eigvalsh_batch, expm_batch
from .poly import cartan_p5
from .sampling import SEARCH_TAG, block_bounds, draw_block, stream, unit_vectors
from .spectra import Spectrum
from .symmetry import solve_level

EXCLUSION_EPS = 1e-8
WITNESS_NORM = 1e-6
RATIO_BAND = (1.0 / 20.0, 20.0)
LAWSON_BAND = (1.0 / 100.0, 100.0)
CHAIN_TOL = 1e-8
WEYL_TOL = 1e-9
UNIT_TOL = 1e-10
MAX_RECORDED = 100
WITNESS_CHUNK = 4  # restarts per round when stopping at the first witness

Family = FieldSpec | AugmentedField


def field_label(F: Family) -> str:
    if isinstance(F, AugmentedField):
        return f"u10(delta={F.delta:g},M={F.big_m:g})"
    return F.name or f"P/|x|^{F.delta:g}"


def _is_cartan(F: Family) -> bool:
    return isinstance(F, FieldSpec) and F.poly == cartan_p5()


def ratio_from(lam_max, lam_min):
    """-lambda_max/lambda_min where the spectrum straddles zero, NaN elsewhere."""
    lam_max = np.asarray(lam_max, dtype=float)
    lam_min = np.asarray(lam_min, dtype=float)
    ok = (lam_max > 0) & (lam_min < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ok, -lam_max / np.where(ok, lam_min, -1.0), np.nan)


def difference_batch(F: Family, X, Y, O):
    """(M, w(x), w(y), D^2w(x), D^2w(y)) for a batch of triples."""
    wx, Hx = F.hessian_batch(X)
    wy, Hy = F.hessian_batch(Y)
    M = Hx - np.swapaxes(O, 1, 2) @ Hy @ O
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    return M, wx, wy, Hx, Hy


@dataclass(frozen=True, eq=False)
class FamilyMember:
    x: np.ndarray
    y: np.ndarray
    O: np.ndarray
    M: np.ndarray
    spectrum: Spectrum
    ratio: float | None
    norm: float
    excluded: bool
    w_x: float
    w_y: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.M))

    def summary(self) -> dict:
        return {
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "O": self.O.tolist(),
            "spectrum": self.spectrum.to_json(),
            "ratio": self.ratio,
            "norm": self.norm,
            "trace": self.trace,
        }


def _check_unit(v, name):
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} must be a unit vector")


def _check_orthogonal(O):
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        raise ValueError("O must be square")
    if np.abs(O.T @ O - np.eye(O.shape[0])).max() > UNIT_TOL:
        raise ValueError("O is not orthogonal")


def family_member(F: Family, x, y, O) -> FamilyMember:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    O = np.asarray(O, dtype=float)
    _check_unit(x, "x")
    _check_unit(y, "y")
    _check_orthogonal(O)
    if O.shape[0] != F.dim or x.shape != (F.dim,) or y.shape != (F.dim,):
        raise ValueError(f"member must live in dimension {F.dim}")
    M, wx, wy, _, _ = difference_batch(F, x[None], y[None], O[None])
    lam = eigvalsh_batch(M)[0]
    r = float(ratio_from(lam[0], lam[-1]))
    norm = float(np.linalg.norm(M[0]))
    return FamilyMember(
        x, y, O, M[0], Spectrum(tuple(float(v) for v in lam)),
        None if math.isnan(r) else r, norm, norm <= EXCLUSION_EPS, float(wx[0]), float(wy[0]),
    )


# -- proof inequalities ------------------------------------------------------

@dataclass(frozen=True)
class BoundChainRecord:
    p: float
    p_bar: float
    swapped: bool
    lam_max: float
    lam_min: float
    trace: float
    lower_max: bool  # Lambda_1 >= 3(p - p_bar)/2
    lower_min: bool  # -Lambda_n >= 3(p - p_bar)
    trace_band: bool  # 0 <= -Tr <= 24(p - p_bar)
    min_dominates: bool | None  # -Lambda_n >= 4 Lambda_1, stated for Tr <= 0
    ratio_bound: bool  # -Lambda_n <= 20 Lambda_1

    def all_hold(self) -> bool:
        return self.lower_max and self.lower_min and self.trace_band


def bound_chain_batch(lam_max, lam_min, trace, w_x, w_y, tol: float = CHAIN_TOL) -> dict:
    """Evaluate the chain of inequalities behind the 1/20..20 bound.

    Members are oriented so that p >= p_bar; when p < p_bar the roles of x
    and y swap, which negates the spectrum and the trace.
    """
    p = solve_level(w_x)
    pb = solve_level(w_y)
    d = p - pb
    swapped = d < 0
    L1 = np.where(swapped, -lam_min, lam_max)
    Ln = np.where(swapped, -lam_max, lam_min)
    T = np.where(swapped, -trace, trace)
    p_hi = np.where(swapped, pb, p)
    p_lo = np.where(swapped, p, pb)
    d = np.abs(d)
    return {
        "p": p_hi,
        "p_bar": p_lo,
        "swapped": swapped,
        "lam_max": L1,
        "lam_min": Ln,
        "trace": T,
        "lower_max": L1 >= 1.5 * d - tol,
        "lower_min": -Ln >= 3.0 * d - tol,
        "trace_band": (-T >= -tol) & (-T <= 24.0 * d + tol),
        "min_dominates": np.where(T <= 0, -Ln >= 4.0 * L1 - tol, True),
        "ratio_bound": -Ln <= 20.0 * L1 + tol,
    }


def bound_chain_inequalities(F: Family, x, y, O, tol: float = CHAIN_TOL) -> BoundChainRecord:
    if not _is_cartan(F) or F.delta != 1.0:
        raise ValueError("the inequalities concern w5 = P5/|x| only")
    m = family_member(F, x, y, O)
    if m.excluded:
        raise ValueError("member is (numerically) zero; the inequalities are vacuous")
    r = bound_chain_batch(
        np.array([m.spectrum.largest]), np.array([m.spectrum.smallest]),
        np.array([m.trace]), np.array([m.w_x]), np.array([m.w_y]), tol,
    )
    T = float(r["trace"][0])
    return BoundChainRecord(
        p=float(r["p"][0]),
        p_bar=float(r["p_bar"][0]),
        swapped=bool(r["swapped"][0]),
        lam_max=float(r["lam_max"][0]),
        lam_min=float(r["lam_min"][0]),
        trace=T,
        lower_max=bool(r["lower_max"][0]),
        lower_min=bool(r["lower_min"][0]),
        trace_band=bool(r["trace_band"][0]),
        min_dominates=bool(r["min_dominates"][0]) if T <= 0 else None,
        ratio_bound=bool(r["ratio_bound"][0]),
    )


# -- reports -----------------------------------------------------------------

def _clean(v):
    if v is None:
        return None
    v = float(v)
    return None if not math.isfinite(v) else v


@dataclass
class SearchReport:
    family: str
    mode: str
    seed: int
    n_samples: int
    n_excluded: int
    min_ratio: float | None
    max_ratio: float | None
    argmin: dict | None
    argmax: dict | None
    band: tuple[float, float] | None
    violations: list[dict]
    n_violations: int
    checks: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    samples: dict | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def to_json_dict(self) -> dict:
        return {
            "artifact_version": __version__,
            "backend": backend_name(),
            "field": self.family,
            "mode": self.mode,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "n_excluded": self.n_excluded,
            "min_ratio": _clean(self.min_ratio),
            "max_ratio": _clean(self.max_ratio),
            "argmin": self.argmin,
            "argmax": self.argmax,
            "band": list(self.band) if self.band else None,
            "n_violations": self.n_violations,
            "violations": self.violations,
            "checks": self.checks,
            "params": self.params,
        }


def _map_tasks(fn: Callable, tasks: Iterable, threads: int) -> list:
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _violation_mask(ratio, excluded, band):
    bad = ~excluded & np.isnan(ratio)
    if band is not None:
        lo, hi = band
        with np.errstate(invalid="ignore"):
            bad |= ~excluded & ((ratio < lo) | (ratio > hi))
    return bad


# -- sampling ----------------------------------------------------------------

def _evaluate_block(F: Family, X, Y, O, weyl: bool) -> dict:
    M, wx, wy, Hx, Hy = difference_batch(F, X, Y, O)
    L = eigvalsh_batch(M)
    out = {
        "lam_max": L[:, 0],
        "lam_min": L[:, -1],
        "trace": np.trace(M, axis1=1, axis2=2),
        "norm": np.sqrt((M * M).sum(axis=(1, 2))),
        "w_x": wx,
        "w_y": wy,
    }
    if weyl:
        # spectrum of O^T Hy O equals that of Hy
        gaps = eigvalsh_batch(Hx) - eigvalsh_batch(Hy)
        out["weyl_ok"] = (L[:, 0] >= gaps.max(axis=1) - WEYL_TOL) & (L[:, -1] <= gaps.min(axis=1) + WEYL_TOL)
    return out


def sample_certify(
    F: Family,
    n: int,
    seed: int,
    band: tuple[float, float] | None = RATIO_BAND,
    threads: int = 1,
    bound_chain: bool | None = None,
    weyl: bool = True,
    keep_samples: bool = False,
) -> SearchReport:
    """Sample n members with x, y uniform on the sphere and O Haar on O(n).

    ``bound_chain`` (default: on for w5) adds the proof-inequality counts to
    ``report.checks``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if bound_chain is None:
        bound_chain = _is_cartan(F) and F.delta == 1.0
    dim = F.dim
    bounds = block_bounds(n)

    def work(b):
        lo, hi = bounds[b]
        X, Y, O = draw_block(seed, b, hi - lo, dim)
        return _evaluate_block(F, X, Y, O, weyl)

    parts = _map_tasks(work, range(len(bounds)), threads)
    data = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    ratio = ratio_from(data["lam_max"], data["lam_min"])
    excluded = data["norm"] <= EXCLUSION_EPS
    bad = _violation_mask(ratio, excluded, band)

    def member_at(i):
        b, off = divmod(int(i), bounds[0][1] - bounds[0][0])
        lo, hi = bounds[b]
        X, Y, O = draw_block(seed, b, hi - lo, dim)
        return family_member(F, X[off], Y[off], O[off]).summary() | {"index": int(i)}

    checks: dict = {}
    live = ~excluded
    checks["sign_failures"] = int((live & ~((data["lam_max"] > 0) & (data["lam_min"] < 0))).sum())
    if weyl:
        checks["weyl_failures"] = int((~data["weyl_ok"]).sum())
    if _is_cartan(F):
        p = solve_level(data["w_x"])
        p_bar = solve_level(data["w_y"])
    else:
        p = p_bar = np.full(n, np.nan)
    if bound_chain:
        r = bound_chain_batch(data["lam_max"], data["lam_min"], data["trace"], data["w_x"], data["w_y"])
        checks["bound_chain"] = {
            "members_checked": int(live.sum()),
            "tol": CHAIN_TOL,
            "lower_max_failures": int((live & ~r["lower_max"]).sum()),
            "lower_min_failures": int((live & ~r["lower_min"]).sum()),
            "trace_band_failures": int((live & ~r["trace_band"]).sum()),
            "ratio_bound_failures": int((live & ~r["ratio_bound"]).sum()),
            "min_dominates_failures": int((live & ~r["min_dominates"]).sum()),
        }

    finite = np.where(np.isnan(ratio), np.inf, ratio)
    has_ratio = np.isfinite(finite).any()
    i_min = int(np.argmin(finite)) if has_ratio else None
    i_max = int(np.argmax(np.where(np.isnan(ratio), -np.inf, ratio))) if has_ratio else None
    bad_idx = np.nonzero(bad)[0]
    violations = [
        {
            "index": int(i),
            "ratio": _clean(ratio[i]),
            "lam_max": float(data["lam_max"][i]),
            "lam_min": float(data["lam_min"][i]),
            "norm": float(data["norm"][i]),
        }
        for i in bad_idx[:MAX_RECORDED]
    ]
    checks["witnesses"] = int((bad & (data["norm"] > WITNESS_NORM)).sum())
    report = SearchReport(
        family=field_label(F),
        mode="sample",
        seed=int(seed),
        n_samples=int(n),
        n_excluded=int(excluded.sum()),
        min_ratio=float(ratio[i_min]) if has_ratio else None,
        max_ratio=float(ratio[i_max]) if has_ratio else None,
        argmin=member_at(i_min) if has_ratio else None,
        argmax=member_at(i_max) if has_ratio else None,
        band=tuple(band) if band else None,
        violations=violations,
        n_violations=int(bad.sum()),
        checks=checks,
        params={
            "exclusion_eps": EXCLUSION_EPS,
            "witness_norm": WITNESS_NORM,
            "weyl_tol": WEYL_TOL,
            "block_size": bounds[0][1] - bounds[0][0],
        },
    )
    if keep_samples:
        report.samples = {
            "p": p,
            "p_bar": p_bar,
            "lam_max": data["lam_max"],
            "lam_min": data["lam_min"],
            "ratio": ratio,
        }
    return report


# -- multistart pattern search ------------------------------------------------

def _skew(params: np.ndarray, n: int) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    S = np.zeros(params.shape[:-1] + (n, n))
    S[..., iu, ju] = params
    S[..., ju, iu] = -params
    return S


@dataclass(frozen=True)
class _Decoder:
    n: int
    tie_xy: bool
    reflect: bool

    @property
    def size(self) -> int:
        k = self.n * (self.n - 1) // 2
        return self.n + k if self.tie_xy else 2 * self.n + k

    def __call__(self, theta: np.ndarray):
        n = self.n
        X = theta[:, :n] / np.linalg.norm(theta[:, :n], axis=1)[:, None]
        if self.tie_xy:
            Y, s = X, theta[:, n:]
        else:
            Y = theta[:, n:2 * n] / np.linalg.norm(theta[:, n:2 * n], axis=1)[:, None]
            s = theta[:, 2 * n:]
        O = expm_batch(_skew(s, n))
        if self.reflect:
            O = O.copy()
            O[:, :, 0] *= -1.0
        return X, Y, O

    def normalize(self, theta: np.ndarray) -> np.ndarray:
        theta = theta.copy()
        n = self.n
        theta[:n] /= np.linalg.norm(theta[:n])
        if not self.tie_xy:
            theta[n:2 * n] /= np.linalg.norm(theta[n:2 * n])
        return theta


def _scores(ratio, norm, sense):
    live = norm > EXCLUSION_EPS
    witness = np.isnan(ratio) & (norm > WITNESS_NORM)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = sense * np.log(ratio)
    s = np.where(live & ~np.isnan(ratio), s, -np.inf)
    return np.where(witness, np.inf, s)


def _pattern_search(F, dec: _Decoder, theta0, sense, step0, min_step, max_iter, band):
    """Compass search maximizing sense*log(ratio); tracks every evaluated member."""
    D = dec.size
    dirs = np.concatenate([np.eye(D), -np.eye(D)])
    track = {"min": (np.inf, None), "max": (-np.inf, None), "bad": [], "n_bad": 0, "n_witness": 0,
             "n_eval": 0, "n_excluded": 0, "sign_failures": 0}

    def evaluate(thetas):
        X, Y, O = dec(thetas)
        M, *_ = difference_batch(F, X, Y, O)
        L = eigvalsh_batch(M)
        norm = np.sqrt((M * M).sum(axis=(1, 2)))
        ratio = ratio_from(L[:, 0], L[:, -1])
        excluded = norm <= EXCLUSION_EPS
        track["n_eval"] += len(thetas)
        track["n_excluded"] += int(excluded.sum())
        track["sign_failures"] += int((~excluded & np.isnan(ratio)).sum())
        if (~np.isnan(ratio)).any():
            i = int(np.nanargmin(ratio))
            if ratio[i] < track["min"][0]:
                track["min"] = (float(ratio[i]), thetas[i].copy())
            i = int(np.nanargmax(ratio))
            if ratio[i] > track["max"][0]:
                track["max"] = (float(ratio[i]), thetas[i].copy())
        bad = _violation_mask(ratio, excluded, band)
        if bad.any():
            track["n_bad"] += int(bad.sum())
            track["n_witness"] += int((bad & (norm > WITNESS_NORM)).sum())
            for i in np.nonzero(bad)[0]:
                if len(track["bad"]) < MAX_RECORDED:
                    track["bad"].append((thetas[i].copy(), _clean(ratio[i]), float(L[i, 0]), float(L[i, -1]),
                                         float(norm[i])))
        return _scores(ratio, norm, sense)

    theta = dec.normalize(theta0)
    best = evaluate(theta[None])[0]
    step = step0
    it = 0
    while step >= min_step and it < max_iter and best < np.inf:
        cand = theta[None, :] + step * dirs
        sc = evaluate(cand)
        k = int(np.argmax(sc))
        if sc[k] > best:
            theta, best = dec.normalize(cand[k]), sc[k]
        else:
            step *= 0.5
        it += 1
    track["iterations"] = it
    track["final_step"] = step
    return track


def worst_case_search(
    F: Family,
    restarts: int,
    seed: int,
    band: tuple[float, float] | None = RATIO_BAND,
    tie_xy: bool = False,
    threads: int = 1,
    initial_step: float = 0.3,
    min_step: float = 1e-6,
    max_iter: int = 2000,
    stop_on_witness: bool = False,
) -> SearchReport:
    """Multistart compass search for the extreme ratios of the family.

    Parameters are (x, y, S) with x, y normalized and O = exp(S) R, S skew,
    R alternating between I and a reflection across restarts.  Every restart
    runs a maximization and a minimization of the ratio.  All evaluated
    members feed the extremes and the violation list.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    n = F.dim
    decoders = [_Decoder(n, tie_xy, False), _Decoder(n, tie_xy, True)]

    def start(r):
        rng = stream(seed, r, SEARCH_TAG)
        dec = decoders[r % 2]
        parts = [unit_vectors(rng, 1, n)[0]]
        if not tie_xy:
            parts.append(unit_vectors(rng, 1, n)[0])
        parts.append(rng.uniform(-np.pi, np.pi, n * (n - 1) // 2))
        return dec, np.concatenate(parts)

    def work(r):
        dec, theta0 = start(r)
        return [
            _pattern_search(F, dec, theta0, sense, initial_step, min_step, max_iter, band)
            for sense in (1.0, -1.0)
        ]

    if stop_on_witness:
        # fixed-size chunks: the stopping point must not depend on the thread count
        results = []
        for first in range(0, restarts, WITNESS_CHUNK):
            results += _map_tasks(work, range(first, min(restarts, first + WITNESS_CHUNK)), threads)
            if any(t["n_witness"] for pair in results for t in pair):
                break
    else:
        results = _map_tasks(work, range(restarts), threads)
    used = len(results)

    def summarize(theta, r):
        dec = decoders[r % 2]
        X, Y, O = dec(theta[None])
        return family_member(F, X[0], Y[0], O[0]).summary() | {"restart": r}

    lo = (np.inf, None, None)
    hi = (-np.inf, None, None)
    violations, n_bad, n_witness, n_eval, n_excl, sign_fail, iters = [], 0, 0, 0, 0, 0, []
    for r, pair in enumerate(results):
        for t in pair:
            if t["min"][1] is not None and t["min"][0] < lo[0]:
                lo = (t["min"][0], t["min"][1], r)
            if t["max"][1] is not None and t["max"][0] > hi[0]:
                hi = (t["max"][0], t["max"][1], r)
            n_bad += t["n_bad"]
            n_witness += t["n_witness"]
            n_eval += t["n_eval"]
            n_excl += t["n_excluded"]
            sign_fail += t["sign_failures"]
            iters.append(t["iterations"])
            for theta, ratio, lmax, lmin, norm in t["bad"]:
                if len(violations) < MAX_RECORDED:
                    violations.append(summarize(theta, r) | {"ratio": ratio})
    return SearchReport(
        family=field_label(F),
        mode="search",
        seed=int(seed),
        n_samples=n_eval,
        n_excluded=n_excl,
        min_ratio=lo[0] if lo[1] is not None else None,
        max_ratio=hi[0] if hi[1] is not None else None,
        argmin=summarize(lo[1], lo[2]) if lo[1] is not None else None,
        argmax=summarize(hi[1], hi[2]) if hi[1] is not None else None,
        band=tuple(band) if band else None,
        violations=violations,
        n_violations=n_bad,
        checks={"sign_failures": sign_fail, "witnesses": n_witness, "restarts_run": used},
        params={
            "restarts": restarts,
            "tie_xy": tie_xy,
            "initial_step": initial_step,
            "min_step": min_step,
            "max_iter": max_iter,
            "max_iterations_used": max(iters) if iters else 0,
            "exclusion_eps": EXCLUSION_EPS,
            "witness_norm": WITNESS_NORM,
        },
    )


# -- exploratory runs ----------------------------------------------------------

def delta_scan(deltas: Sequence[float], n: int, seed: int, threads: int = 1, keep_samples: bool = False) -> list[SearchReport]:
    """Sampling reports for P5/|x|^delta, delta >= 1; extremes only, no band."""
    if any(d < 1.0 for d in deltas):
        raise ValueError("delta_scan expects every delta >= 1")
    return [
        sample_certify(w5_delta(float(d)), n, seed, band=None, threads=threads, bound_chain=False, keep_samples=keep_samples)
        for d in deltas
    ]


def u10_certify(delta: float, big_m: float, n: int, seed: int, threads: int = 1, keep_samples: bool = False) -> SearchReport:
    """Sampling report for the ten-dimensional augmented field; only the sign pattern is checked."""
    return sample_certify(
        AugmentedField(float(delta), float(big_m)), n, seed, band=None, threads=threads,
        bound_chain=False, keep_samples=keep_samples,
    )
