import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from typmatch.conditions import (collection_achievable, converse_cer, converse_necessary,
                                 cer_achievable, erasure_ratio_scan, meet_table, mixed_weights,
                                 partial_matching_achievable, sbm_achievable, sbm_rhs,
                                 seeded_lambda_min, seeded_region)
from typmatch.typicality import JointDistribution, exponent_Ehat, kl_divergence, mutual_information

PERFECT = JointDistribution(np.eye(2) / 2)
PRODUCT = JointDistribution(np.full((2, 2), 0.25))


def interpolate(lam):
    return JointDistribution(lam * PERFECT.pmf + (1 - lam) * PRODUCT.pmf)


def test_product_is_not_achievable():
    assert not cer_achievable(PRODUCT, 1000, step=0.1).satisfied


def test_perfect_correlation_is_achievable():
    r = cer_achievable(PERFECT, 10 ** 4)
    assert r.satisfied and r.margin > 0


def test_margin_grows_with_correlation():
    margins = [cer_achievable(interpolate(l), 500, step=0.1).margin for l in (0.2, 0.5, 0.8, 1.0)]
    assert all(a <= b + 1e-9 for a, b in zip(margins, margins[1:]))


def test_side_condition_is_reported_not_gated():
    P = JointDistribution(np.array([[0.5, 0.0], [0.25, 0.25]]))
    r = cer_achievable(P, 10 ** 4, step=0.1)
    assert "side_ratio" in r.terms and r.terms["side_ratio"] >= 0


def test_partial_matching():
    assert partial_matching_achievable(PRODUCT, 100, 0.0).satisfied
    P = interpolate(0.6)
    full = cer_achievable(P, 300, alpha_max=0.9, step=0.1)
    assert partial_matching_achievable(P, 300, 0.9, step=0.1).margin == pytest.approx(full.margin)
    margins = [partial_matching_achievable(P, 300, b, step=0.1).margin for b in (0.1, 0.3, 0.6, 0.9)]
    assert all(a >= b - 1e-12 for a, b in zip(margins, margins[1:]))


def test_finer_grid_never_raises_margin():
    P = interpolate(0.4)
    coarse = cer_achievable(P, 200, alpha_max=0.8, step=0.2)
    fine = cer_achievable(P, 200, alpha_max=0.8, step=0.1)
    assert fine.margin <= coarse.margin + 1e-12


# -- communities -------------------------------------------------------------------

def direct_single_community_margin(P, n, alpha_max=0.99, step=0.01):
    q = P.product_of_marginals()
    best = math.inf
    for a in np.round(np.arange(0, alpha_max + 1e-9, step), 12):
        beta = min(1.0, max(0.0, n * a * (n * a - 1) / (n * (n - 1))))
        rhs = (n - 1) / (2 * n) * kl_divergence(P.pmf, (1 - beta) * q + beta * P.pmf)
        best = min(best, rhs - 3 * (1 - a) * math.log2(n) / n)
    return best


def test_single_community_reduces_to_pair_form():
    P = interpolate(0.7)
    r = sbm_achievable({(0, 0): P}, [400], 400)
    assert r.margin == pytest.approx(direct_single_community_margin(P, 400), abs=1e-12)


def test_product_blocks_not_achievable():
    blocks = {(0, 0): PRODUCT, (0, 1): PRODUCT, (1, 1): PRODUCT}
    assert not sbm_achievable(blocks, [50, 50], 100, step=0.05).satisfied


def test_one_informative_block_terms():
    n, sizes = 100, [40, 60]
    blocks = {(0, 0): PERFECT, (0, 1): PRODUCT, (1, 1): PRODUCT}
    a = np.array([[0.1, 0.2]])
    k = n * 0.1
    beta = k * (k - 1) / (40 * 39)
    expected = 40 * 39 / (2 * n * n) * kl_divergence(PERFECT.pmf, (1 - beta) * PRODUCT.pmf + beta * PERFECT.pmf)
    assert sbm_rhs(blocks, sizes, n, a)[0] == pytest.approx(expected)
    # the uninformative community can never be matched: aligning all of
    # community 0 leaves zero divergence against a positive left side
    assert not sbm_achievable(blocks, sizes, n, step=0.05).satisfied
    big = sbm_achievable(blocks, [4000, 6000], 10000, step=0.05)
    assert not big.satisfied and big.argmin[0] == pytest.approx(0.4)


def test_sbm_rejects_bad_sizes():
    with pytest.raises(ValueError):
        sbm_achievable({(0, 0): PERFECT}, [3], 4)


# -- collections ---------------------------------------------------------------------

@given(st.lists(st.floats(0, 1), min_size=5, max_size=5).filter(lambda v: sum(v) > 0))
def test_mixed_weights_sum_to_one(w):
    w = np.array(w) / sum(w)
    mixed = mixed_weights(w, meet_table(3))
    assert mixed.sum() == pytest.approx(1.0) and np.all(mixed >= 0)


def test_two_graph_collection_reduces_to_pair():
    P = interpolate(0.5)
    n = 300
    r = collection_achievable(P, n)
    direct = min(exponent_Ehat(P, a * a) / 2 - (1 - a) * math.log2(n) / n
                 for a in np.round(np.arange(0, 0.96, 0.05), 12))
    assert r.margin == pytest.approx(direct, abs=1e-12)


def test_collection_dependent_and_product():
    dep = np.zeros((2, 2, 2))
    dep[0, 0, 0] = dep[1, 1, 1] = 0.5
    r = collection_achievable(JointDistribution(dep), 1000)
    assert r.satisfied and "meet_table" in r.terms
    assert not collection_achievable(JointDistribution(np.full((2, 2, 2), 1 / 8)), 1000).satisfied


# -- converse and seeds -----------------------------------------------------------------

def test_converse_independent_fails():
    assert not converse_cer(PRODUCT, 50).satisfied
    assert not converse_necessary({(0, 0): PRODUCT}, [50], 50).satisfied


def test_converse_threshold_at_one_bit():
    holds = [n for n in range(2, 40) if converse_cer(PERFECT, n).satisfied]
    assert holds == [2] + list(range(4, 40))


def test_converse_single_community_form():
    n = 30
    r = converse_necessary({(0, 0): PERFECT}, [n], n)
    assert r.margin == pytest.approx((n - 1) / (2 * n) - math.log2(n) / n)


def test_seeded_region():
    assert seeded_lambda_min(1024, 0.1) == 200
    r = seeded_region(PERFECT, 1024)
    assert r.lambda_min == 20 and r.side_ratio == pytest.approx(math.sqrt(20))
    assert not seeded_region(PRODUCT, 1024).matchable
    for info in (0.07, 0.3, 1.3):
        for n in (100, 1000, 5000):
            step = seeded_lambda_min(2 * n, info) - seeded_lambda_min(n, info)
            assert abs(step - math.ceil(2 / info)) <= 1


# -- erasure model -------------------------------------------------------------------

def limit_ratio(s, alpha):
    """p -> 0 limit of E_{a^2} / (2 (1 - a) p) in nats, by a fine scan over gamma."""
    a2 = alpha * alpha
    g = np.linspace(0, 1 / (1 - a2), 400001)
    gb = (1 - (1 - a2) * g) / a2
    xlogx = lambda x: np.where(x > 0, x * np.log(np.where(x > 0, x, 1)), 0.0)
    v = ((1 - a2) * (1 - g + xlogx(g)) + a2 * (1 - gb + xlogx(gb)) + (1 - a2) * g * s
         + (1 - s) * math.log((1 - s) / ((1 - a2) + a2 * (1 - s))) + s * math.log(1 / a2))
    return float(np.min(np.where(gb >= 0, v, np.inf))) / (4 * (1 - alpha))


def test_erasure_scan_beats_half_s():
    r = erasure_ratio_scan(0.4)
    assert r.exceeds and r.min_ratio > 0.2


def test_erasure_scan_matches_limit_expression():
    for s in (0.3, 0.45):
        r = erasure_ratio_scan(s, n_ref=1e7)
        assert r.min_ratio == pytest.approx(limit_ratio(s, r.argmin_alpha), abs=2e-3)


def test_erasure_scan_reference_sizes_agree():
    a = erasure_ratio_scan(0.35, n_ref=1e6, step=0.1)
    b = erasure_ratio_scan(0.35, n_ref=1e8, step=0.1)
    assert a.min_ratio == pytest.approx(b.min_ratio, abs=1e-3)


def test_erasure_scan_small_s_warns_but_exceeds():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r = erasure_ratio_scan(0.01, step=0.1)
    assert caught and r.exceeds


def test_erasure_scan_reports_prime_ratios():
    r = erasure_ratio_scan(0.4, step=0.05, alpha_max=0.9)
    assert r.min_ratio_prime is not None and r.min_ratio_prime > 0
