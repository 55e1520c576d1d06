"""Kernel weights and drift fields: frozen oracles and exact identities.

Oracle values are computed from the closed forms, independently of the
implementation, and frozen here:

  exp(-1)                      = 0.36787944117144233
  exp(-5/2)                    = 0.0820849986238988
  (e^-1*1 + e^-3*3)/(e^-1+e^-3) = 1.2384058440442351
  4*e^-4 / (1 + e^-4)          = 0.07194483984836622
"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from driftlab.kernel import (
    DriftConfig,
    attraction,
    drift,
    laplace_kernel,
    pairwise_distances,
    repulsion,
    weighted_mean,
)
from driftlab.rng import Stream

CFG = DriftConfig(tau=1.0)


def _finite_batch(d, b, lo=-100.0, hi=100.0):
    return st.lists(
        st.lists(st.floats(min_value=lo, max_value=hi, allow_nan=False), min_size=d, max_size=d),
        min_size=b[0],
        max_size=b[1],
    ).map(lambda rows: np.array(rows, dtype=np.float64))


# --- laplace_kernel ---------------------------------------------------------


def test_kernel_identity_case_is_exactly_one():
    p = np.array([0.3, -1.2])
    assert laplace_kernel(p, p.copy(), 0.5) == 1.0


def test_kernel_unit_distance_oracle():
    assert laplace_kernel(np.array([0.0]), np.array([1.0]), 1.0) == pytest.approx(
        0.36787944117144233, abs=1e-16
    )


def test_kernel_three_four_five_oracle():
    assert laplace_kernel(np.array([0.0, 0.0]), np.array([3.0, 4.0]), 2.0) == pytest.approx(
        0.0820849986238988, abs=1e-16
    )


def test_kernel_rejects_bad_inputs():
    with pytest.raises(ValueError):
        laplace_kernel(np.array([np.nan]), np.array([0.0]), 1.0)
    with pytest.raises(ValueError):
        laplace_kernel(np.array([0.0]), np.array([0.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        laplace_kernel(np.array([0.0]), np.array([1.0]), 0.0)
    with pytest.raises(ValueError):
        laplace_kernel(np.array([0.0]), np.array([1.0]), -1.0)


@given(
    st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=4),
    st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=4),
    st.floats(min_value=1e-2, max_value=1e3),
)
def test_kernel_range_property(xs, ys, tau):
    d = min(len(xs), len(ys))
    a, b = np.array(xs[:d]), np.array(ys[:d])
    k = laplace_kernel(a, b, tau)
    assert 0.0 <= k <= 1.0
    # exp underflows to exactly zero beyond ~745 log-units; below that the
    # kernel must stay strictly positive.
    if np.sqrt(((a - b) ** 2).sum()) / tau < 700.0:
        assert k > 0.0


def test_kernel_monotone_decreasing_in_distance():
    x = np.zeros(2)
    ks = [laplace_kernel(x, np.array([r, 0.0]), 0.7) for r in (0.0, 0.5, 1.0, 2.0, 5.0)]
    assert all(a > b for a, b in zip(ks, ks[1:]))


# --- weighted_mean ----------------------------------------------------------


def test_weighted_mean_single_sample_is_exact():
    assert weighted_mean(np.array([0.0]), np.array([[5.0]]), 1.0)[0] == 5.0


def test_weighted_mean_two_point_oracle():
    wm = weighted_mean(np.array([0.0]), np.array([[1.0], [3.0]]), 1.0)
    assert wm[0] == pytest.approx(1.2384058440442351, abs=1e-15)


def test_weighted_mean_symmetric_pair_cancels():
    for c in (0.5, 2.0, 17.0):
        wm = weighted_mean(np.array([0.0]), np.array([[c], [-c]]), 1.0)
        assert wm[0] == 0.0


def test_weighted_mean_rejects_empty_batch():
    with pytest.raises(ValueError):
        weighted_mean(np.array([0.0]), np.zeros((0, 1)), 1.0)


@given(_finite_batch(2, (1, 8)), st.floats(min_value=0.05, max_value=50.0))
def test_weighted_mean_stays_in_coordinate_hull(batch, tau):
    wm = weighted_mean(np.array([0.25, -0.5]), batch, tau)
    lo, hi = batch.min(axis=0), batch.max(axis=0)
    assert np.all(wm >= lo - 1e-12) and np.all(wm <= hi + 1e-12)


# --- attraction / repulsion -------------------------------------------------


def test_attraction_single_sample():
    assert attraction(np.array([0.0]), np.array([[2.0]]), CFG)[0] == 2.0


def test_attraction_two_point_oracle():
    a = attraction(np.array([0.0]), np.array([[1.0], [3.0]]), CFG)
    assert a[0] == pytest.approx(1.2384058440442351, abs=1e-15)


def test_attraction_fixed_point_at_own_position():
    q = np.array([1.5, -2.0])
    assert np.all(attraction(q, q[None, :].copy(), CFG) == 0.0)


def test_repulsion_single_sample():
    assert repulsion(np.array([0.0]), np.array([[-2.0]]), CFG)[0] == -2.0


def test_repulsion_with_self_in_batch_oracle():
    # softmax weights {1, e^-4} over {0, 4}: mean = 4 e^-4 / (1 + e^-4)
    r = repulsion(np.array([0.0]), np.array([[0.0], [4.0]]), CFG)
    assert r[0] == pytest.approx(0.07194483984836622, abs=1e-15)


def test_repulsion_excluding_self_leaves_other_sample():
    cfg = DriftConfig(tau=1.0, include_self=False)
    r = repulsion(np.array([0.0]), np.array([[0.0], [4.0]]), cfg)
    assert r[0] == 4.0


def test_repulsion_errors_when_exclusion_empties_batch():
    cfg = DriftConfig(tau=1.0, include_self=False)
    with pytest.raises(ValueError):
        repulsion(np.array([0.0]), np.array([[0.0], [0.0]]), cfg)


# --- drift ------------------------------------------------------------------


def test_drift_single_sample_pair():
    v = drift(np.array([[0.0]]), np.array([[2.0]]), np.array([[-2.0]]), CFG)
    assert v[0, 0] == 4.0


def test_drift_two_positives_one_negative_oracle():
    v = drift(np.array([[0.0]]), np.array([[1.0], [3.0]]), np.array([[-1.0]]), CFG)
    assert v[0, 0] == pytest.approx(2.2384058440442351, abs=1e-15)


def test_drift_identical_batches_give_exact_zero_field():
    s = Stream(4)
    x = s.normal((16, 3))
    p = s.normal((16, 3))
    assert np.all(drift(x, p, p.copy(), CFG) == 0.0)


def test_drift_matches_attraction_minus_repulsion():
    s = Stream(8)
    x, p, n = s.normal((6, 2)), s.normal((9, 2)), s.normal((7, 2))
    v = drift(x, p, n, CFG)
    for i in range(x.shape[0]):
        expected = attraction(x[i], p, CFG) - repulsion(x[i], n, CFG)
        assert np.max(np.abs(v[i] - expected)) <= 1e-12


def test_drift_anti_symmetry_seeded_grid():
    s = Stream(12)
    for d in (1, 2, 8):
        for b in (1, 4, 64, 256):
            for tau in (0.1, 1.0, 10.0):
                x = s.normal((b, d))
                p = s.normal((b, d)) + 1.0
                n = s.normal((b, d)) - 0.5
                cfg = DriftConfig(tau=tau)
                gap = np.max(np.abs(drift(x, p, n, cfg) + drift(x, n, p, cfg)))
                assert gap <= 1e-12, (d, b, tau, gap)


@given(
    _finite_batch(2, (1, 6)),
    _finite_batch(2, (1, 6)),
    _finite_batch(2, (1, 6)),
    st.floats(min_value=0.05, max_value=20.0),
)
def test_drift_anti_symmetry_property(x, p, n, tau):
    cfg = DriftConfig(tau=tau)
    gap = np.max(np.abs(drift(x, p, n, cfg) + drift(x, n, p, cfg)))
    assert gap <= 1e-12


@given(_finite_batch(2, (1, 6)), _finite_batch(2, (1, 6)))
def test_drift_fixed_point_property(x, p):
    assert np.all(drift(x, p, p, CFG) == 0.0)


def test_drift_translation_equivariance():
    s = Stream(21)
    x, p, n = s.normal((8, 2)), s.normal((8, 2)), s.normal((8, 2))
    c = np.array([3.25, -1.5])
    base = drift(x, p, n, CFG)
    moved = drift(x + c, p + c, n + c, CFG)
    assert np.max(np.abs(base - moved)) <= 1e-12


def test_drift_stabilized_matches_naive_when_safe():
    s = Stream(33)
    x, p, n = s.normal((10, 2)), s.normal((12, 2)), s.normal((11, 2))
    v_on = drift(x, p, n, DriftConfig(tau=1.0, stab_shift=True))
    v_off = drift(x, p, n, DriftConfig(tau=1.0, stab_shift=False))
    scale = max(1.0, float(np.max(np.abs(v_on))))
    assert np.max(np.abs(v_on - v_off)) / scale <= 1e-10


def test_drift_multi_temperature_averages_fields():
    s = Stream(44)
    x, p, n = s.normal((5, 2)), s.normal((6, 2)), s.normal((7, 2))
    taus = (0.3, 1.0, 3.0)
    avg = sum(drift(x, p, n, DriftConfig(tau=t)) for t in taus) / len(taus)
    v = drift(x, p, n, DriftConfig(tau=taus))
    assert np.max(np.abs(v - avg)) <= 1e-12
    gap = np.max(np.abs(v + drift(x, n, p, DriftConfig(tau=taus))))
    assert gap <= 1e-12


def test_drift_rejects_dimension_mismatch_and_nonfinite():
    x = np.zeros((2, 2))
    with pytest.raises(ValueError):
        drift(x, np.zeros((2, 3)), x, CFG)
    bad = x.copy()
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        drift(bad, x, x, CFG)


def test_config_validation():
    with pytest.raises(ValueError):
        DriftConfig(tau=0.0)
    with pytest.raises(ValueError):
        DriftConfig(tau=())
    with pytest.raises(ValueError):
        DriftConfig(tau=(1.0, -2.0))
    assert DriftConfig(tau=[0.5, 2.0]).taus == (0.5, 2.0)
    assert DriftConfig(tau=(1.5,)).tau == 1.5


def test_pairwise_distances_small_values_stay_exact():
    # The 3-4-5 triangle scaled down by 1e-8 keeps an exact distance in
    # the difference-based accumulation.
    a = np.array([[0.0, 0.0]])
    b = np.array([[3e-8, 4e-8]])
    assert pairwise_distances(a, b)[0, 0] == 5e-8
