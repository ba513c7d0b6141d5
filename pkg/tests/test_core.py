from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsegof.core import (
    CellModel,
    CountVector,
    ValidationError,
    WeightVector,
    alternative_shift,
    batch_statistics,
    beta_moment,
    condition_diagnostics,
    decompose,
    pearson_statistic,
    stat_report,
    variances,
    weighted_s2,
)
from sparsegof.families import FamilySpec, build_model, topk0_weights


def family1(k, r):
    return build_model(FamilySpec("family1", k, r))


def exact_family1(k, r):
    r = Fraction(r).limit_denominator(1000)
    return [r / k] * (k // 2) + [(2 - r) / k] * (k // 2)


@st.composite
def model_and_counts(draw, max_k=60):
    k = draw(st.integers(2, max_k))
    raw = draw(st.lists(st.floats(0.01, 10.0), min_size=k, max_size=k))
    p = np.array(raw) / np.sum(raw)
    counts = draw(st.lists(st.integers(0, 30), min_size=k, max_size=k))
    if sum(counts) == 0:
        counts[0] = 1
    return CellModel(p), CountVector(counts)


class TestValidation:
    def test_rejects_nonpositive_probability(self):
        with pytest.raises(ValidationError, match="positive"):
            CellModel([0.5, 0.5, 0.0])

    def test_rejects_bad_sum_without_renormalizing(self):
        with pytest.raises(ValidationError, match="sum"):
            CellModel([0.5, 0.4])

    def test_rejects_single_cell(self):
        with pytest.raises(ValidationError):
            CellModel([1.0])

    def test_negative_count(self):
        with pytest.raises(ValidationError):
            CountVector([3, -1])

    def test_fractional_count(self):
        with pytest.raises(ValidationError):
            CountVector([1.5, 2.0])

    def test_weight_sum(self):
        with pytest.raises(ValidationError):
            WeightVector([1.0, 0.5])
        with pytest.raises(ValidationError):
            WeightVector([2.5, -0.5])

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="mismatch"):
            pearson_statistic(CellModel([0.5, 0.5]), CountVector([1, 2, 3]))

    def test_zero_n(self):
        with pytest.raises(ValidationError):
            pearson_statistic(CellModel([0.5, 0.5]), CountVector([0, 0]))

    def test_values_are_immutable(self):
        m = CellModel([0.5, 0.5])
        with pytest.raises(ValueError):
            m.probs[0] = 0.9


class TestPearsonAndDecomposition:
    def test_perfect_fit(self):
        assert pearson_statistic(CellModel([0.5, 0.5]), CountVector([5, 5])) == 0.0

    def test_hand_values(self):
        m, c = CellModel([0.5, 0.5]), CountVector([7, 3])
        assert pearson_statistic(m, c) == pytest.approx(1.6, abs=1e-14)
        assert decompose(m, c) == pytest.approx((1.6, 0.0), abs=1e-14)

    def test_unequal_cells(self):
        s1, s2 = decompose(CellModel([0.2, 0.8]), CountVector([4, 6]))
        assert s2 == pytest.approx(0.75, abs=1e-14)
        assert s1 == pytest.approx(1.75, abs=1e-14)

    def test_equiprobable_linear_term_is_exactly_zero(self):
        rng = np.random.default_rng(5)
        m = CellModel(np.full(1000, 1e-3))
        c = CountVector(rng.multinomial(2919, m.probs))
        assert decompose(m, c)[1] == 0.0
        assert variances(m, 2919).sigma_n2_sq == 0.0

    @given(model_and_counts())
    @settings(max_examples=200, deadline=None)
    def test_identity(self, mc):
        m, c = mc
        x2 = pearson_statistic(m, c)
        s1, s2 = decompose(m, c)
        assert x2 >= 0.0
        assert abs(x2 - (s1 + s2)) <= 1e-10 * max(1.0, x2)

    @given(model_and_counts(max_k=12))
    @settings(max_examples=100, deadline=None)
    def test_against_exact_rationals(self, mc):
        m, c = mc
        p = [Fraction(x) for x in m.probs]
        n = c.n
        x2 = sum((o - n * q) ** 2 / (n * q) for o, q in zip(c.counts.tolist(), p))
        s2 = sum((o - n * q) / (n * q) for o, q in zip(c.counts.tolist(), p))
        s1, got_s2 = decompose(m, c)
        assert got_s2 == pytest.approx(float(s2), rel=1e-12, abs=1e-12)
        assert s1 == pytest.approx(float(x2 - s2), rel=1e-12, abs=1e-11)


class TestWeighted:
    def test_ones_match_linear_term(self):
        m, c = CellModel([0.2, 0.3, 0.5]), CountVector([4, 1, 9])
        assert weighted_s2(m, c, WeightVector.ones(3)) == pytest.approx(decompose(m, c)[1], abs=1e-14)

    def test_equiprobable_ones(self):
        m = CellModel([0.25] * 4)
        assert weighted_s2(m, CountVector([0, 3, 1, 6]), WeightVector.ones(4)) == pytest.approx(0.0, abs=1e-14)

    def test_hand_value(self):
        got = weighted_s2(CellModel([0.5, 0.5]), CountVector([7, 3]), WeightVector([2.0, 0.0]))
        assert got == pytest.approx(0.8, abs=1e-14)


class TestVariances:
    def test_lottery_scale(self):
        v = variances(CellModel(np.full(1000, 1e-3)), 2919)
        assert np.sqrt(v.sigma_n1_sq) == pytest.approx(np.sqrt(2 * 999 * 2918 / 2919), rel=1e-14)
        assert np.sqrt(v.sigma_n1_sq) == pytest.approx(44.69, abs=0.01)
        assert v.sigma_n_sq == v.sigma_n1_sq + v.sigma_n2_sq

    def test_family1_closed_form_and_direct_sum(self):
        k, n, r = 100, 100, 0.2
        exact = (sum(1 / q for q in exact_family1(k, r)) - k * k) / n
        v = variances(family1(k, r), n)
        assert float(exact) == pytest.approx(6400 / 36, rel=1e-14)
        assert v.sigma_n2_sq == pytest.approx(float(exact), rel=1e-12)

    def test_weighted_ones_equal_unweighted(self):
        m = family1(10, 0.4)
        v = variances(m, 30, WeightVector.ones(10))
        assert v.sigma_n2_bar_sq == pytest.approx(v.sigma_n2_sq, rel=1e-12)

    def test_n_zero(self):
        with pytest.raises(ValidationError):
            variances(CellModel([0.5, 0.5]), 0)


class TestAlternativeShift:
    def test_null_equals_alt(self):
        m = family1(20, 0.3)
        s = alternative_shift(m, m, 50)
        assert (s.s_n1_shift, s.s_n2_shift) == (0.0, 0.0)

    @pytest.mark.parametrize("k", [50, 300, 3000])
    def test_family1_downward_shift(self, k):
        s = alternative_shift(family1(k, 0.2), family1(k, 0.1), 1000)
        assert s.s_n2_shift == pytest.approx(-2 * k / 9, rel=1e-12)
        assert s.s_n1_shift > 0

    @pytest.mark.parametrize("r", [0.6, 1.4])
    def test_family2_against_family1_same_parameter(self, r):
        null = family1(100, r)
        alt = build_model(FamilySpec("family2", 100, r))
        assert alternative_shift(null, alt, 100).s_n2_shift == pytest.approx(0.0, abs=1e-10)


class TestBetaMoment:
    def test_proportional_weights_give_zero(self):
        m = family1(40, 0.3)
        w = WeightVector(40 * m.probs)
        for j in (1, 2, 3):
            assert beta_moment(m, w, j) <= 1e-9 * 40 ** (j + 1)

    def test_topk0_on_equiprobable(self):
        k = 100
        m = CellModel(np.full(k, 1 / k))
        w = topk0_weights(k, 0.8)
        direct = sum(Fraction(1.25) ** 2 * k for _ in range(80)) - k * k
        assert float(direct) == pytest.approx(0.25 * k * k)
        assert beta_moment(m, w, 1) == pytest.approx(0.25 * k * k, rel=1e-12)
        # general power r: ((k/k0)^r - 1) k^(r+1)
        assert beta_moment(m, w, 3) == pytest.approx((1.25**3 - 1) * k**4, rel=1e-12)

    @given(st.integers(2, 40), st.integers(0, 2**32 - 1), st.integers(1, 3))
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, k, seed, j):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(k))
        p = np.maximum(p, 1e-12)
        p /= p.sum()
        c = rng.dirichlet(np.ones(k)) * k
        assert beta_moment(CellModel(p), WeightVector(c), j) >= 0.0

    def test_bad_j(self):
        with pytest.raises(ValidationError):
            beta_moment(CellModel([0.5, 0.5]), WeightVector.ones(2), 0)


class TestConditionDiagnostics:
    def test_equiprobable(self):
        k, n = 500, 200
        d = condition_diagnostics(CellModel(np.full(k, 1 / k)), n)
        assert d.c3_value == pytest.approx(k / n**2, rel=1e-12)
        assert d.c4_value == 0.0
        assert d.c44_value is None

    def test_family1_against_exact_sums(self):
        k, n, r = 100, 1000, 0.2
        p = exact_family1(k, r)
        sig2 = (sum(1 / q for q in p) - k * k) / n
        c3 = sum(1 / q**2 for q in p) / (n * n * k * k)
        t1 = (sum(1 / q**3 for q in p) - k**4) / (n**3 * sig2**2)
        t2 = sig2 / k
        d = condition_diagnostics(family1(k, r), n)
        assert d.c3_value == pytest.approx(float(c3), rel=1e-12)
        assert d.c4_term1 == pytest.approx(float(t1), rel=1e-12)
        assert d.c4_term2 == pytest.approx(float(t2), rel=1e-12)
        assert d.c4_value == min(d.c4_term1, d.c4_term2)

    def test_weighted_branch(self):
        k, n = 100, 1000
        w = topk0_weights(k, 0.8)
        d = condition_diagnostics(CellModel(np.full(k, 1 / k)), n, w)
        sig2bar = 0.25 * k * k / n
        t1 = (1.25**3 - 1) * k**4 / (n**3 * sig2bar**2)
        assert d.c44_term1 == pytest.approx(t1, rel=1e-12)
        assert d.c44_term2 == pytest.approx(sig2bar / k, rel=1e-12)
        assert d.c44_value == min(d.c44_term1, d.c44_term2)


class TestBatch:
    def test_matches_scalar_path(self):
        rng = np.random.default_rng(11)
        m = family1(30, 0.4)
        w = topk0_weights(30, 0.4)
        counts = rng.multinomial(60, m.probs, size=20)
        out = batch_statistics(m.probs, counts.astype(float), 60, [w.weights])
        for i, row in enumerate(counts):
            rep = stat_report(m, CountVector(row), w)
            assert out["x2"][i] == pytest.approx(rep.x2, rel=1e-12)
            assert out["s_n1"][i] == pytest.approx(rep.s_n1, rel=1e-12, abs=1e-12)
            assert out["s_n2"][i] == pytest.approx(rep.s_n2, rel=1e-12, abs=1e-12)
            assert out["s_n2_bar"][0, i] == pytest.approx(rep.s_n2_bar, rel=1e-12, abs=1e-12)
