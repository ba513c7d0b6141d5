import math

import numpy as np
import pytest

from sparsegof.core import CellModel, ValidationError, alternative_shift, beta_moment
from sparsegof.families import (
    AliasTable,
    FamilySpec,
    SamplerSeed,
    build_model,
    sample_block,
    sample_counts,
    topk0_weights,
    weights_for_cells,
)


class TestBuildModel:
    @pytest.mark.parametrize("k", [2, 10, 1000])
    def test_family1_r1_is_uniform(self, k):
        np.testing.assert_allclose(build_model(FamilySpec("family1", k, 1.0)).probs, 1 / k, rtol=1e-15)

    def test_family1_small(self):
        np.testing.assert_allclose(build_model(FamilySpec("family1", 4, 0.2)).probs, [0.05, 0.05, 0.45, 0.45])

    def test_family2_quarters(self):
        p = build_model(FamilySpec("family2", 8, 0.4)).probs
        np.testing.assert_allclose(p, [0.075, 0.075, 0.025, 0.025, 0.2, 0.2, 0.2, 0.2])

    def test_family3(self):
        p = build_model(FamilySpec("family3", 20, 2.0)).probs
        np.testing.assert_allclose(p[:19], 0.0125)
        assert p[19] == pytest.approx(0.7625)

    @pytest.mark.parametrize(
        "spec",
        [FamilySpec("family1", 3000, 0.1), FamilySpec("family2", 1000, 1.4),
         FamilySpec("family3", 10000, 2.0), FamilySpec("equiprobable", 7)],
    )
    def test_sums_to_one(self, spec):
        assert abs(math.fsum(build_model(spec).probs) - 1) <= 1e-12

    @pytest.mark.parametrize(
        "kind, k, r",
        [("family1", 5, 0.5), ("family1", 4, 2.0), ("family2", 6, 0.5),
         ("family3", 30, 1.0), ("family3", 20, 8.0), ("family1", 4, None), ("bogus", 4, 1.0)],
    )
    def test_invalid(self, kind, k, r):
        with pytest.raises(ValidationError):
            FamilySpec(kind, k, r)

    @pytest.mark.parametrize("r", [0.2, 0.6, 1.4])
    def test_family2_has_zero_linear_shift(self, r):
        null = build_model(FamilySpec("family1", 400, r))
        alt = build_model(FamilySpec("family2", 400, r))
        assert alternative_shift(null, alt, 1000).s_n2_shift == pytest.approx(0.0, abs=1e-9)


class TestWeights:
    def test_h_08(self):
        w = topk0_weights(100, 0.8).weights
        assert np.all(w[:80] == 1.25) and np.all(w[80:] == 0.0)

    def test_h_04(self):
        w = topk0_weights(100, 0.4).weights
        assert np.all(w[:40] == 2.5) and np.all(w[40:] == 0.0)

    def test_high_indices(self):
        w = topk0_weights(10, 0.3, active_low_indices=False).weights
        assert np.all(w[-3:] == 10 / 3) and np.all(w[:-3] == 0)

    def test_sum_is_k(self):
        for k, h in [(1000, 0.8), (3000, 0.4), (7, 0.5)]:
            assert abs(math.fsum(topk0_weights(k, h).weights) - k) <= 1e-9 * k

    @pytest.mark.parametrize("h", [0.001, 0.999])
    def test_degenerate(self, h):
        with pytest.raises(ValidationError):
            topk0_weights(100, h)

    def test_beta_link(self):
        k = 200
        m = CellModel(np.full(k, 1 / k))
        assert beta_moment(m, topk0_weights(k, 0.8), 1) == pytest.approx(0.25 * k**2, rel=1e-12)

    def test_explicit_cells(self):
        w = weights_for_cells(10, [1, 3, 5, 7, 9]).weights
        assert list(w) == [0, 2, 0, 2, 0, 2, 0, 2, 0, 2]


class TestAliasTable:
    def test_table_reproduces_probabilities(self):
        p = np.array([0.1, 0.05, 0.4, 0.3, 0.15])
        t = AliasTable(p)
        k = p.size
        implied = t.prob / k
        for i in range(k):
            implied[t.alias[i]] += (1 - t.prob[i]) / k
        np.testing.assert_allclose(implied, p, atol=1e-15)

    def test_sparse_table(self):
        m = build_model(FamilySpec("family3", 1000, 0.5))
        t = AliasTable(m.probs)
        implied = t.prob / m.k
        np.add.at(implied, t.alias, (1 - t.prob) / m.k)
        np.testing.assert_allclose(implied, m.probs, rtol=1e-10)


class TestSampling:
    def test_zero_n(self):
        c = sample_counts(CellModel([0.3, 0.7]), 0, SamplerSeed(1))
        assert c.n == 0 and list(c.counts) == [0, 0]

    def test_near_degenerate(self):
        c = sample_counts(CellModel([1.0 - 1e-12, 1e-12]), 10, SamplerSeed(2))
        assert c.n == 10 and np.all(c.counts >= 0)

    def test_deterministic(self):
        m = build_model(FamilySpec("family1", 300, 0.2))
        a = sample_counts(m, 500, SamplerSeed(42, 17))
        b = sample_counts(m, 500, SamplerSeed(42, 17))
        assert a.counts.tobytes() == b.counts.tobytes()
        assert sample_counts(m, 500, SamplerSeed(42, 18)).counts.tobytes() != a.counts.tobytes()

    def test_block_equals_individual_streams(self):
        m = build_model(FamilySpec("family1", 50, 0.3))
        t = AliasTable(m.probs)
        block = sample_block(t, 100, 9, 5, 9)
        for row, stream in zip(block, range(5, 9)):
            np.testing.assert_array_equal(row, sample_counts(m, 100, SamplerSeed(9, stream)).counts)

    def test_seed_range(self):
        with pytest.raises(ValidationError):
            SamplerSeed(-1)
        with pytest.raises(ValidationError):
            SamplerSeed(0, 2**64)
        SamplerSeed(2**64 - 1, 2**64 - 1).generator()

    @pytest.mark.slow
    def test_marginal_moments(self):
        # binomial moment oracle: each cell count is Binomial(n, p_i)
        m = build_model(FamilySpec("family2", 40, 0.6))
        n, R = 200, 100_000
        counts = sample_block(AliasTable(m.probs), n, 123, 0, R)
        mean = counts.mean(axis=0)
        var = counts.var(axis=0, ddof=1)
        expect = n * m.probs
        bvar = n * m.probs * (1 - m.probs)
        assert np.all(np.abs(mean - expect) < 4 * np.sqrt(bvar / R))
        big = expect >= 5
        assert np.all(np.abs(var[big] - bvar[big]) < 0.10 * bvar[big])
        assert np.all(counts.sum(axis=1) == n)
