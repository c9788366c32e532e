import json

import numpy as np
import pytest

from conftest import random_unit
from eigencone import hyperbolicity as hyp
from eigencone.field import AugmentedField, w4, w5, w5_delta
from eigencone.kernels import eigvalsh_batch
from eigencone.sampling import draw_block, haar_orthogonal, stream
from eigencone.spectra import weyl_bounds

E1 = np.eye(5)[0]
E3 = np.eye(5)[2]


def haar(rng, n):
    return haar_orthogonal(rng, 1, n)[0]


def test_identical_points_are_excluded():
    m = hyp.family_member(w5(), E1, E1, np.eye(5))
    assert m.excluded and m.ratio is None and np.abs(m.M).max() == 0.0


def test_explicit_member_in_band():
    m = hyp.family_member(w5(), E1, E3, np.eye(5))
    _, H = w5().hessian_batch(np.stack([E1, E3]))
    assert np.abs(m.M - (np.diag([2, -7, 2, 2, -7.0]) - H[1])).max() <= 1e-12
    assert 1 / 20 <= m.ratio <= 20
    assert m.trace == pytest.approx(-8.0, abs=1e-12)


def test_member_validation(rng):
    with pytest.raises(ValueError):
        hyp.family_member(w5(), 2 * E1, E3, np.eye(5))
    with pytest.raises(ValueError):
        hyp.family_member(w5(), E1, E3, 2 * np.eye(5))
    with pytest.raises(ValueError):
        hyp.family_member(w5(), E1[:4], E3[:4], np.eye(4))


def test_trace_identity_on_members(rng):
    for _ in range(100):
        x, y = random_unit(rng, 2, 5)
        m = hyp.family_member(w5(), x, y, haar(rng, 5))
        assert m.trace == pytest.approx(-8 * (m.w_x - m.w_y), abs=1e-10)


def test_ratio_populated_iff_sign_pattern(rng):
    for _ in range(50):
        x, y = random_unit(rng, 2, 4)
        m = hyp.family_member(w4(), x, y, haar(rng, 4))
        has = m.spectrum.largest > 0 > m.spectrum.smallest
        assert (m.ratio is not None) == has


def test_spectrum_conjugation_invariance(rng):
    x, y = random_unit(rng, 2, 5)
    m = hyp.family_member(w5(), x, y, haar(rng, 5))
    for _ in range(20):
        Q = haar(rng, 5)
        lam = eigvalsh_batch((Q.T @ m.M @ Q)[None])[0]
        assert np.abs(lam - np.array(m.spectrum.values)).max() <= 1e-9


def test_scale_invariance(rng):
    F = w5()
    x, y = random_unit(rng, 2, 5)
    O = haar(rng, 5)
    M1 = hyp.difference_batch(F, x[None], y[None], O[None])[0]
    for t in (0.3, 4.0):
        Mt = hyp.difference_batch(F, t * x[None], t * y[None], O[None])[0]
        assert np.abs(Mt - M1).max() <= 1e-10


def test_weyl_on_members(rng):
    F = w5()
    for _ in range(100):
        x, y = random_unit(rng, 2, 5)
        O = haar(rng, 5)
        m = hyp.family_member(F, x, y, O)
        _, H = F.hessian_batch(np.stack([x, y]))
        hi, lo = weyl_bounds(H[0], O.T @ H[1] @ O)
        assert m.spectrum.largest >= hi - 1e-9 and m.spectrum.smallest <= lo + 1e-9


# -- proof inequalities ----------------------------------------------------------

def test_same_level_member_is_traceless(rng):
    x = random_unit(rng, 1, 5)[0]
    from eigencone.symmetry import generator
    y = generator(1, 0.4).apply(generator(3, -1.1).apply(x))
    rec = hyp.bound_chain_inequalities(w5(), x, y, haar(rng, 5))
    assert abs(rec.trace) <= 1e-9
    assert rec.p == pytest.approx(rec.p_bar, abs=1e-9)


def test_p1_vs_p0_member():
    rec = hyp.bound_chain_inequalities(w5(), E1, E3, np.eye(5))
    assert rec.p == pytest.approx(1.0) and rec.p_bar == pytest.approx(0.0)
    assert rec.trace == pytest.approx(-8.0) and rec.trace >= -24 * (rec.p - rec.p_bar)
    assert rec.all_hold() and rec.ratio_bound


def test_random_members_satisfy_the_three_inequalities(rng):
    for _ in range(300):
        x, y = random_unit(rng, 2, 5)
        rec = hyp.bound_chain_inequalities(w5(), x, y, haar(rng, 5))
        assert rec.all_hold() and rec.ratio_bound
        assert rec.p >= rec.p_bar


def test_swapped_orientation(rng):
    rec = hyp.bound_chain_inequalities(w5(), E3, E1, np.eye(5))
    assert rec.swapped and rec.p == pytest.approx(1.0) and rec.trace == pytest.approx(-8.0)


def test_lower_min_bound_counterexample():
    # x = e1 and y = -e1 give p - p_bar = 2; a coordinate permutation O
    # lines up the -7 directions so that -Lambda_5 = 5 < 6.
    sigma = [1, 0, 4, 2, 3]
    O = np.zeros((5, 5))
    O[sigma, range(5)] = 1.0
    rec = hyp.bound_chain_inequalities(w5(), E1, -E1, O)
    assert rec.p - rec.p_bar == pytest.approx(2.0)
    assert rec.lam_min == pytest.approx(-5.0, abs=1e-12)
    assert not rec.lower_min
    assert rec.lower_max and rec.trace_band and rec.ratio_bound


def test_min_dominates_is_not_a_valid_bound(rng):
    misses = 0
    for _ in range(200):
        x, y = random_unit(rng, 2, 5)
        rec = hyp.bound_chain_inequalities(w5(), x, y, haar(rng, 5))
        misses += rec.min_dominates is False
    assert misses > 150


def test_bound_chain_rejects_other_fields(rng):
    with pytest.raises(ValueError):
        hyp.bound_chain_inequalities(w5_delta(1.5), E1, E3, np.eye(5))
    with pytest.raises(ValueError):
        hyp.bound_chain_inequalities(w5(), E1, E1, np.eye(5))


# -- sampling -----------------------------------------------------------------------

def test_streams_and_blocks():
    a = stream(3, 5).standard_normal(4)
    assert np.array_equal(a, stream(3, 5).standard_normal(4))
    assert not np.array_equal(a, stream(3, 6).standard_normal(4))
    assert not np.array_equal(a, stream(4, 5).standard_normal(4))
    X, Y, O = draw_block(1, 0, 64, 5)
    assert np.allclose(np.linalg.norm(X, axis=1), 1) and np.allclose(np.linalg.norm(Y, axis=1), 1)
    assert np.abs(np.swapaxes(O, 1, 2) @ O - np.eye(5)).max() <= 1e-12


def test_haar_covers_both_components():
    O = haar_orthogonal(stream(0, 0), 4000, 5)
    det = np.linalg.det(O)
    assert np.allclose(np.abs(det), 1.0)
    assert 0.45 < (det < 0).mean() < 0.55
    # first-moment check of Haar measure: E[O_ij] = 0, E[O_ij^2] = 1/n
    assert np.abs(O.mean(axis=0)).max() < 0.05
    assert np.abs((O**2).mean(axis=0) - 0.2).max() < 0.03


def test_sample_certify_small():
    rep = hyp.sample_certify(w5(), 20000, seed=11)
    assert rep.ok and rep.violations == [] and rep.n_samples == 20000
    assert 1 / 20 <= rep.min_ratio <= rep.max_ratio <= 20
    assert rep.checks["sign_failures"] == 0 and rep.checks["weyl_failures"] == 0
    p41 = rep.checks["bound_chain"]
    assert p41["lower_max_failures"] == p41["lower_min_failures"] == p41["trace_band_failures"] == 0
    assert rep.argmin["ratio"] == rep.min_ratio and rep.argmax["ratio"] == rep.max_ratio


def test_sample_certify_deterministic_across_threads():
    a = hyp.sample_certify(w5(), 20000, seed=5, threads=1).to_json_dict()
    b = hyp.sample_certify(w5(), 20000, seed=5, threads=4).to_json_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    c = hyp.sample_certify(w5(), 20000, seed=6).to_json_dict()
    assert c["min_ratio"] != a["min_ratio"]


def test_sample_prefix_property():
    # members depend on (seed, block) only, so a shorter run is a prefix
    a = hyp.sample_certify(w5(), 9000, seed=2, keep_samples=True)
    b = hyp.sample_certify(w5(), 8192, seed=2, keep_samples=True)
    assert np.array_equal(a.samples["ratio"][:8192], b.samples["ratio"])


def test_keep_samples_columns():
    rep = hyp.sample_certify(w5(), 100, seed=0, keep_samples=True)
    assert set(rep.samples) == {"p", "p_bar", "lam_max", "lam_min", "ratio"}
    assert all(len(v) == 100 for v in rep.samples.values())


def test_band_violations_are_recorded():
    rep = hyp.sample_certify(w5(), 2000, seed=0, band=(0.5, 2.0))
    assert not rep.ok and rep.n_violations >= len(rep.violations) > 0
    assert all(not (0.5 <= v["ratio"] <= 2.0) for v in rep.violations)


def test_lawson_sampling_runs():
    rep = hyp.sample_certify(w4(), 5000, seed=1, band=hyp.LAWSON_BAND)
    assert rep.n_samples == 5000 and "bound_chain" not in rep.checks


# -- search -----------------------------------------------------------------------

def test_search_w5_in_band():
    rep = hyp.worst_case_search(w5(), 2, seed=3, threads=2)
    assert rep.ok and rep.checks["sign_failures"] == 0
    assert 1 / 20 - 1e-5 <= rep.min_ratio <= rep.max_ratio <= 20 + 1e-3
    again = hyp.worst_case_search(w5(), 2, seed=3, threads=1)
    assert json.dumps(again.to_json_dict(), sort_keys=True) == json.dumps(rep.to_json_dict(), sort_keys=True)


def test_search_beats_sampling():
    s = hyp.sample_certify(w5(), 5000, seed=4)
    r = hyp.worst_case_search(w5(), 2, seed=4)
    assert r.max_ratio >= s.max_ratio and r.min_ratio <= s.min_ratio


def test_tied_search_is_traceless():
    rep = hyp.worst_case_search(w5(), 2, seed=9, tie_xy=True)
    assert rep.ok
    for m in (rep.argmin, rep.argmax):
        assert abs(m["trace"]) <= 1e-9


def test_lawson_witness():
    rep = hyp.worst_case_search(w4(), 20, seed=7, band=hyp.LAWSON_BAND, stop_on_witness=True)
    assert rep.checks["witnesses"] > 0 and rep.violations
    v = rep.violations[0]
    lam = v["spectrum"]
    assert v["ratio"] is None or not (1 / 100 <= v["ratio"] <= 100) or lam[0] <= 0 or lam[-1] >= 0


def test_search_rejects_zero_restarts():
    with pytest.raises(ValueError):
        hyp.worst_case_search(w5(), 0, seed=0)


# -- exploratory --------------------------------------------------------------------

def test_delta_scan():
    reps = hyp.delta_scan([1.0, 1.5], 3000, seed=8)
    base = hyp.sample_certify(w5(), 3000, seed=8, band=None, bound_chain=False)
    assert reps[0].min_ratio == base.min_ratio and reps[0].max_ratio == base.max_ratio
    assert np.isfinite(reps[1].min_ratio) and np.isfinite(reps[1].max_ratio)
    assert reps[1].max_ratio > reps[0].max_ratio
    with pytest.raises(ValueError):
        hyp.delta_scan([0.5], 10, seed=0)


def test_u10_sign_pattern():
    rep = hyp.u10_certify(1e-6, 100.0, 3000, seed=0)
    assert rep.ok and rep.checks["sign_failures"] == 0 and rep.n_samples == 3000


def test_u10_swapped_member_is_traceless(rng):
    A = AugmentedField(0.0, 0.0)
    x, y = random_unit(rng, 2, 5)
    a = np.concatenate([x, y]) / np.sqrt(2)
    b = np.concatenate([y, x]) / np.sqrt(2)
    m = hyp.family_member(A, a, b, haar(rng, 10))
    assert abs(m.trace) <= 1e-9


def test_witness_search_independent_of_threads():
    a = hyp.worst_case_search(w4(), 12, seed=7, band=hyp.LAWSON_BAND, stop_on_witness=True, threads=1)
    b = hyp.worst_case_search(w4(), 12, seed=7, band=hyp.LAWSON_BAND, stop_on_witness=True, threads=3)
    assert json.dumps(a.to_json_dict(), sort_keys=True) == json.dumps(b.to_json_dict(), sort_keys=True)
    assert a.checks["restarts_run"] == hyp.WITNESS_CHUNK
