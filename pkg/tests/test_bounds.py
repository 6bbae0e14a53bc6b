import math
from itertools import combinations

import mpmath as mp
import numpy as np
import pytest

from gc3sim.bitlinalg import ERASED
from gc3sim.bounds import (
    EFFECTIVE_ERASURE_FACTOR,
    LowerBoundInputs,
    UpperBoundInputs,
    energy_lower_bound,
    ensemble_error_upper_closed,
    ensemble_error_upper_sum,
    gap_ratio_trend,
    naive_error_upper,
    parity_zero_prob,
    sparseness_lower_bound,
    systematic_confusion_prob,
)
from gc3sim.protocol import SchemeParams, run_step2
from gc3sim.bitlinalg import ErasedVector

mp.mp.dps = 50


def mp_sum_oracle(n, c, eps, pch):
    """Arbitrary-precision re-evaluation of the union-bound sum."""
    L = 2 / (1 - mp.exp(-1)) + 1
    e0 = L * mp.mpf(pch) + mp.mpf(eps)
    p = c * mp.log(n) / n
    total = mp.mpf(0)
    for k in range(1, n + 1):
        bracket = e0 + (1 - e0) * (1 + (1 - 2 * p) ** k) / 2
        total += mp.binomial(n, k) * mp.mpf(eps) ** k * bracket**n
    return float(total)


def even_subset_enumeration(k, p):
    """Probability of an even count by explicit subset enumeration."""
    total = mp.mpf(0)
    for size in range(0, k + 1, 2):
        for _ in combinations(range(k), size):
            total += mp.mpf(p) ** size * (1 - mp.mpf(p)) ** (k - size)
    return float(total)


# ---------------------------------------------------------------------------
# parity / systematic confusion formulas


def test_parity_zero_prob_trivial_points():
    for k in (1, 2, 7):
        assert parity_zero_prob(k, 0.0) == 1.0
        assert parity_zero_prob(k, 0.5) == 0.5


def test_parity_zero_prob_matches_enumeration():
    for k in range(1, 13):
        for p in (0.1, 0.3):
            assert abs(parity_zero_prob(k, p) - even_subset_enumeration(k, p)) < 1e-12


def test_parity_even_odd_split_sums_to_one():
    for k in range(1, 10):
        for p in (0.0, 0.2, 0.5, 0.9, 1.0):
            even = parity_zero_prob(k, p)
            odd = (1.0 - (1.0 - 2.0 * p) ** k) / 2.0
            assert even + odd == pytest.approx(1.0, abs=1e-15)


def test_parity_zero_prob_validation():
    with pytest.raises(ValueError):
        parity_zero_prob(0, 0.3)
    with pytest.raises(ValueError):
        parity_zero_prob(3, 1.2)


def test_systematic_confusion_trivial():
    assert systematic_confusion_prob(0, 0.7) == 1.0
    assert systematic_confusion_prob(10, 0.5) == 2.0**-10
    with pytest.raises(ValueError):
        systematic_confusion_prob(-1, 0.5)


def test_systematic_confusion_matches_step2_frequency():
    # event: every one of the k set positions of x is erased on its way in.
    n, k, eps, trials = 16, 4, 0.3, 20_000
    params = SchemeParams(n, eps, 1.0, 0.1, 1.0, 1.0, 1)
    x = np.zeros(n, dtype=np.uint8)
    x[:k] = 1
    y = ErasedVector(np.zeros(n, dtype=np.int8))
    rng = np.random.default_rng(42)
    hits = 0
    for _ in range(trials):
        r = run_step2(x, y, params, rng)
        hits += bool(np.all(r.symbols[:k] == ERASED))
    expect = systematic_confusion_prob(k, eps)
    assert abs(hits / trials - expect) < 3 * math.sqrt(expect * (1 - expect) / trials)


# ---------------------------------------------------------------------------
# ensemble upper bounds


def test_effective_erasure_constant():
    assert EFFECTIVE_ERASURE_FACTOR == pytest.approx(
        float(2 / (1 - mp.exp(-1)) + 1), rel=1e-15)
    up = UpperBoundInputs(64, 4.0, 0.01, 0.1, 0.05)
    assert up.epsilon0 == pytest.approx(0.30820, abs=5e-6)


def test_decay_exponent_example():
    up = UpperBoundInputs(64, 4.0, 0.01, 0.1, 0.05)
    assert 2.0 - up.decay_exponent == pytest.approx(2 - 2.6565, abs=5e-4)
    assert up.decay_exponent > 2.0


def test_closed_form_matches_independent_recomputation():
    for n in (64, 512, 4096):
        up = UpperBoundInputs(n, 4.0, 0.01, 0.1, 0.05)
        got = ensemble_error_upper_closed(up).value
        L = 2 / (1 - mp.exp(-1)) + 1
        e0 = L * mp.mpf("0.05") + mp.mpf("0.1")
        b = (1 - e0) / 2 * (1 - (1 - mp.exp(-2 * 4 * mp.mpf("0.01"))) / 2)
        expo = 2 - 4 * (1 - e0) * (1 - 4 * mp.mpf("0.01"))
        ref = (1 - b) ** n + mp.mpf("0.01") * mp.e * mp.mpf("0.1") * n**expo / mp.log(n)
        assert got == pytest.approx(float(ref), rel=1e-12)


def test_closed_form_first_term_shrinks_with_n():
    small = UpperBoundInputs(1000, 4.0, 0.01, 0.1, 0.05)
    large = UpperBoundInputs(10000, 4.0, 0.01, 0.1, 0.05)
    t_small = math.exp(small.n * math.log1p(-small.b_eta))
    t_large = math.exp(large.n * math.log1p(-large.b_eta))
    assert t_large < t_small


def test_closed_form_precondition_flags():
    # epsilon above b_eta: named rejection, no value.
    rep = ensemble_error_upper_closed(UpperBoundInputs(64, 3.0, 0.01, 0.4, 0.2))
    assert rep.value is None
    assert "eps_below_b_eta" in rep.failed_names()
    # c*ln(n) <= 1
    rep = ensemble_error_upper_closed(UpperBoundInputs(8, 0.3, 0.01, 0.05, 0.05))
    assert "c_ln_n_gt_1" in rep.failed_names()


def test_closed_form_vacuous_reported_verbatim():
    rep = ensemble_error_upper_closed(UpperBoundInputs(64, 0.4, 0.1, 0.05, 0.01))
    assert rep.ok
    assert rep.vacuous
    assert rep.value > 1.0  # never clamped below its formula value


def test_sum_zero_at_zero_epsilon():
    rep = ensemble_error_upper_sum(UpperBoundInputs(32, 3.0, 0.01, 0.0, 0.05))
    assert rep.value == 0.0


def test_sum_matches_arbitrary_precision_oracle():
    for n in (6, 12, 20):
        for c, eps, pch in ((1.5, 0.2, 0.1), (2.0, 0.5, 0.3), (3.0, 0.05, 0.05)):
            if c * math.log(n) <= 1.0 or c * math.log(n) / n > 1.0:
                continue
            got = ensemble_error_upper_sum(UpperBoundInputs(n, c, 0.01, eps, pch)).value
            ref = mp_sum_oracle(n, c, eps, pch)
            assert abs(got - ref) / ref < 1e-9


def test_sum_monotone_in_eps_and_pch():
    vals = [ensemble_error_upper_sum(UpperBoundInputs(64, 4.0, 0.01, e, 0.05)).value
            for e in (0.02, 0.05, 0.1, 0.2)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    vals = [ensemble_error_upper_sum(UpperBoundInputs(64, 4.0, 0.01, 0.1, q)).value
            for q in (0.01, 0.05, 0.1, 0.3)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_sum_flags_supercritical_connection_probability():
    rep = ensemble_error_upper_sum(UpperBoundInputs(5, 4.0, 0.01, 0.1, 0.05))
    assert rep.value is None
    assert "connection_prob_le_1" in rep.failed_names()


def test_sum_below_closed_in_decay_regime():
    # ordering spot checks in the regime the decay theorem targets
    for n in (64, 256, 1024):
        for eps in (0.05, 0.1, 0.15):
            up = UpperBoundInputs(n, 4.0, 0.01, eps, 0.05)
            assert up.epsilon < up.b_eta
            s = ensemble_error_upper_sum(up).value
            cl = ensemble_error_upper_closed(up).value
            assert s <= cl


# ---------------------------------------------------------------------------
# converse lower bounds


def test_energy_lower_bound_guard_rejects_huge_cap():
    inputs = LowerBoundInputs(n=100, e1=1.0, e2=1.0, d_cap=1e12, e_cap=1.0,
                              epsilon=0.5, p_tar=0.1)
    rep = energy_lower_bound(inputs)
    assert rep.value is None
    assert rep.failed_names() == ["n2_over_4_delta_d_gt_e15"]


def test_energy_lower_bound_sink_branch_binds_when_e2_vanishes():
    inputs = LowerBoundInputs(n=500, e1=2.0, e2=0.0, d_cap=100.0, e_cap=1.0,
                              epsilon=0.5, p_tar=0.01)
    rep = energy_lower_bound(inputs)
    assert rep.value == 500 * 2.0


def test_energy_lower_bound_against_independent_recomputation():
    n = 1000
    d_cap = 2 * 3 * n * math.log(n)
    inputs = LowerBoundInputs(n=n, e1=1.0, e2=1.0, d_cap=d_cap, e_cap=1.0,
                              epsilon=0.5, p_tar=n**-0.5)
    got = energy_lower_bound(inputs).value
    delta = mp.log(1 / (1 - mp.mpf(n) ** mp.mpf("-0.5")))
    log_term = mp.log(n / (2 * delta))
    ref = max(mp.mpf(n),
              min(n / 2 * log_term, n**2 / (4 * d_cap) * log_term) / mp.log(2))
    assert got == pytest.approx(float(ref), rel=1e-12)


def test_energy_lower_bound_nonincreasing_in_d_cap():
    def value(d):
        return energy_lower_bound(LowerBoundInputs(
            n=100000, e1=1.0, e2=1.0, d_cap=d, e_cap=1.0,
            epsilon=0.5, p_tar=1e-3)).value

    caps = [1e6, 3e6, 1e7, 3e7]
    vals = [value(d) for d in caps]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_sparseness_lower_bound_against_independent_recomputation():
    n = 10**4
    e_cap = n * math.log(math.log(n))
    inputs = LowerBoundInputs(n=n, e1=1.0, e2=1.0, d_cap=1.0, e_cap=e_cap,
                              epsilon=0.5, p_tar=0.01)
    rep = sparseness_lower_bound(inputs)
    delta = mp.log(1 / (1 - mp.mpf("0.01")))
    ref = mp.mpf(n) ** 2 * mp.log(n / (2 * delta)) / (4 * mp.log(2) * e_cap)
    assert rep.value == pytest.approx(float(ref), rel=1e-12)


def test_sparseness_lower_bound_rejects_generous_energy_cap():
    n = 10**4
    inputs = LowerBoundInputs(n=n, e1=1.0, e2=1.0, d_cap=1.0, e_cap=1e9,
                              epsilon=0.5, p_tar=0.01)
    rep = sparseness_lower_bound(inputs)
    assert rep.value is None
    assert "ecap_below_sink_only_budget" in rep.failed_names()


def test_sparseness_lower_bound_decreasing_in_e_cap():
    def value(e_cap):
        return sparseness_lower_bound(LowerBoundInputs(
            n=10**4, e1=1.0, e2=1.0, d_cap=1.0, e_cap=e_cap,
            epsilon=0.5, p_tar=0.01)).value

    assert value(2e4) > value(4e4)


def test_delta_uses_exact_form():
    inputs = LowerBoundInputs(n=100, e1=1.0, e2=1.0, d_cap=10.0, e_cap=1.0,
                              epsilon=0.5, p_tar=0.3)
    assert inputs.delta == pytest.approx(math.log(1 / 0.7), rel=1e-15)
    assert inputs.delta != pytest.approx(0.3, rel=1e-3)  # no small-target shortcut


# ---------------------------------------------------------------------------
# naive union bound and the gap table


def test_naive_error_upper_example():
    rep = naive_error_upper(100, 2.0, 0.5)
    assert rep.value == 100 * 2.0**-14
    assert rep.value == pytest.approx(6.1e-3, abs=1e-4)


def test_naive_error_upper_vanishes_for_large_c_prime():
    assert naive_error_upper(100, 40.0, 0.5).value < 1e-12


def test_naive_error_upper_clamps_at_one():
    rep = naive_error_upper(3, 1.01, 0.9)
    assert rep.value <= 1.0
    assert not rep.vacuous


def test_naive_error_upper_requires_c_prime_above_one():
    rep = naive_error_upper(100, 1.0, 0.5)
    assert rep.value is None
    assert rep.failed_names() == ["c_prime_gt_1"]


def test_gap_ratio_trend_exceeds_one_and_stays_banded():
    rows = gap_ratio_trend([10**3, 10**4, 10**5, 10**6], 1.0, 1.0, 0.1, 4.0, 0.05)
    ratios = [r.ratio for r in rows]
    scaled = [r.ratio_over_loglog for r in rows]
    assert all(r is not None and r > 1.0 for r in ratios)
    assert max(scaled) / min(scaled) < 2.0


def test_gap_ratio_band_tightens_when_sink_dominates():
    cheap_broadcast = gap_ratio_trend([10**3, 10**4, 10**5, 10**6],
                                      1000.0, 1.0, 0.1, 4.0, 0.05)
    ratios = [r.ratio for r in cheap_broadcast]
    assert max(ratios) / min(ratios) < 1.01  # essentially constant
    assert all(abs(r - 2.0) < 0.02 for r in ratios)


def test_gap_ratio_propagates_precondition_failures():
    # a tiny d_cap is fine, but a huge one breaks the guard for small n
    rows = gap_ratio_trend([100], 1.0, 1.0, 0.5, 3.0, 0.1,
                           p_tar_list=[0.5], d_cap_list=[1e9])
    assert rows[0].ratio is None
    assert rows[0].lower.failed_names() == ["n2_over_4_delta_d_gt_e15"]
