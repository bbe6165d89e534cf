import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svcert.bounds import (
    BoundQuery,
    binomial_tail_phi,
    certificate_residual_sign,
    epsilon_bounds,
    epsilon_table,
    exact_root_oracle,
    explicit_bound_pair,
    explicit_lower_bound,
    explicit_upper_bound,
    interval_table_csv,
    log_binomial,
    _Residual,
)


class TestLogBinomial:
    def test_small_exact(self):
        assert log_binomial(4, 2) == pytest.approx(math.log(6), rel=1e-14)

    def test_k_zero(self):
        for n in (1, 17, 2000):
            assert log_binomial(n, 0) == 0.0

    def test_against_big_integer(self):
        # 12+ significant digits against exact integer arithmetic
        exact = math.log(math.comb(2000, 105))
        assert log_binomial(2000, 105) == pytest.approx(exact, rel=1e-13)

    def test_large_n_accuracy(self):
        exact = math.log(math.comb(100000, 137))
        assert log_binomial(100000, 137) == pytest.approx(exact, rel=1e-12)

    def test_rejects_k_above_n(self):
        with pytest.raises(ValueError):
            log_binomial(3, 4)

    def test_vectorized(self):
        vals = log_binomial(np.array([5, 6]), np.array([2, 3]))
        assert vals == pytest.approx([math.log(10), math.log(20)])


class TestResidualSign:
    def test_positive_at_one(self):
        q = BoundQuery(2000, 105, 1e-4)
        assert certificate_residual_sign(q, 1.0) == 1

    def test_negative_inside(self):
        q = BoundQuery(2000, 105, 1e-4)
        assert certificate_residual_sign(q, 105 / 2000) == -1

    def test_positive_far_left(self):
        # the highest-degree tail term dominates for very negative v
        q = BoundQuery(50, 10, 1e-2)
        assert certificate_residual_sign(q, -50.0) == 1

    def test_rejects_v_above_one(self):
        with pytest.raises(ValueError):
            certificate_residual_sign(BoundQuery(10, 3, 0.1), 1.5)

    def test_requires_k_below_n(self):
        with pytest.raises(ValueError):
            certificate_residual_sign(BoundQuery(10, 10, 0.1), 0.5)


class TestBoundQuery:
    def test_validation(self):
        with pytest.raises(ValueError):
            BoundQuery(0, 0, 0.1)
        with pytest.raises(ValueError):
            BoundQuery(10, 11, 0.1)
        with pytest.raises(ValueError):
            BoundQuery(10, -1, 0.1)
        with pytest.raises(ValueError):
            BoundQuery(10, 3, 0.0)
        with pytest.raises(ValueError):
            BoundQuery(10, 3, 1.0)


class TestEpsilonBounds:
    def test_reference_interval(self):
        iv = epsilon_bounds(BoundQuery(2000, 105, 1e-4))
        assert round(iv.lower, 2) == 0.03
        assert round(iv.upper, 2) == 0.08
        assert iv.lower == pytest.approx(0.032, abs=5e-4)
        assert iv.upper == pytest.approx(0.080, abs=5e-4)

    def test_full_complexity_upper_is_one(self):
        iv = epsilon_bounds(BoundQuery(30, 30, 0.05))
        assert iv.upper == 1.0
        assert iv.root_upper_t == 0.0
        assert 0.0 <= iv.lower <= 1.0

    def test_zero_complexity_lower_is_zero(self):
        iv = epsilon_bounds(BoundQuery(2000, 0, 1e-4))
        assert iv.lower == 0.0

    def test_against_oracle_single(self):
        q = BoundQuery(10, 3, 0.05)
        iv = epsilon_bounds(q)
        ref = exact_root_oracle(q)
        assert iv.lower == pytest.approx(ref.lower, abs=1e-9)
        assert iv.upper == pytest.approx(ref.upper, abs=1e-9)

    def test_root_residual(self):
        # plugging the roots back into the defining equation
        for k in (1, 10, 105, 1500):
            iv = epsilon_bounds(BoundQuery(2000, k, 1e-4))
            res = _Residual(2000, k, 1e-4)
            for v in (1.0 - iv.root_lower_t, 1.0 - iv.root_upper_t):
                assert abs(math.expm1(res.log_diff(v))) <= 1e-8

    def test_interval_ordering(self):
        for k in (0, 1, 25, 49, 50):
            iv = epsilon_bounds(BoundQuery(50, k, 0.01))
            assert 0.0 <= iv.lower <= iv.upper <= 1.0


class TestEpsilonTable:
    def test_row_count_and_consistency(self):
        rows = epsilon_table(50, 0.01)
        assert len(rows) == 51
        direct = epsilon_bounds(BoundQuery(50, 20, 0.01))
        assert rows[20].lower == direct.lower
        assert rows[20].upper == direct.upper

    def test_beta_nesting(self):
        tight = epsilon_table(50, 1e-2)
        loose = epsilon_table(50, 1e-6)
        for a, b in zip(tight, loose):
            assert b.lower <= a.lower + 1e-12
            assert a.upper <= b.upper + 1e-12

    def test_oracle_sweep(self):
        for k, row in enumerate(epsilon_table(10, 0.05)):
            ref = exact_root_oracle(BoundQuery(10, k, 0.05))
            assert row.lower == pytest.approx(ref.lower, abs=1e-9)
            assert row.upper == pytest.approx(ref.upper, abs=1e-9)

    def test_csv_format(self):
        rows = epsilon_table(3, 0.1)
        text = interval_table_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "k,eps_lower,eps_upper"
        assert len(lines) == 5
        k, lo, up = lines[2].split(",")
        assert int(k) == 1
        assert float(lo) == pytest.approx(rows[1].lower, rel=1e-11)


class TestExplicitBounds:
    def test_sandwich_small_sweep(self):
        for beta in (1e-2, 1e-4):
            for k in range(0, 51):
                q = BoundQuery(50, k, beta)
                iv = epsilon_bounds(q)
                if k >= 1:
                    assert iv.upper <= explicit_upper_bound(q) + 1e-12
                assert explicit_lower_bound(q) <= iv.lower + 1e-12

    def test_upper_k0_and_kn(self):
        assert explicit_upper_bound(BoundQuery(100, 100, 0.01)) == 1.0
        v = explicit_upper_bound(BoundQuery(100, 0, 0.01))
        assert v == pytest.approx(
            (2 / 100) * (math.log(0.005 + math.e) + math.log(200))
        )

    def test_lower_k0_is_zero(self):
        assert explicit_lower_bound(BoundQuery(100, 0, 0.01)) == 0.0

    def test_lower_clamps_small_k(self):
        # small k has k/N < 2g, so the floor clamps at zero
        assert explicit_lower_bound(BoundQuery(1000, 1, 0.01)) == 0.0

    def test_lambda_bounded_by_two(self):
        for k in (1, 2, 7, 300):
            pair = explicit_bound_pair(BoundQuery(500, k, 1e-4))
            assert pair.lambda_used <= 2.0
            assert pair.lower_floor <= pair.upper_cap

    def test_reference_cap_exceeds_interval(self):
        q = BoundQuery(2000, 105, 1e-4)
        assert explicit_upper_bound(q) >= 0.08


class TestBinomialTailPhi:
    def test_k0_closed_form(self):
        for h, v in ((10, 0.3), (40, 0.05)):
            expect = (1 - (1 - v) ** h) / v
            assert binomial_tail_phi(h, 0, v) == pytest.approx(expect, rel=1e-12)

    def test_direct_sum_example(self):
        expect = sum(math.comb(i, 2) * 0.7 ** (i - 2) for i in range(2, 5))
        assert binomial_tail_phi(5, 2, 0.3) == pytest.approx(expect, rel=1e-12)

    def test_v_one(self):
        assert binomial_tail_phi(13, 4, 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_rejects_v_zero(self):
        with pytest.raises(ValueError):
            binomial_tail_phi(5, 2, 0.0)

    def test_rejects_k_too_large(self):
        with pytest.raises(ValueError):
            binomial_tail_phi(5, 5, 0.5)

    @pytest.mark.parametrize("v", [0.01, 0.1, 0.5, 0.9, 1.0])
    def test_identity_against_direct_sum(self, v):
        for h in (2, 17, 60, 100):
            for k in (0, 1, h // 2, h - 1):
                direct = sum(
                    math.comb(i, k) * (1 - v) ** (i - k) for i in range(k, h)
                )
                assert binomial_tail_phi(h, k, v) == pytest.approx(
                    direct, rel=1e-10
                )


class TestExactRootOracle:
    def test_zero_complexity(self):
        iv = exact_root_oracle(BoundQuery(10, 0, 0.1))
        assert iv.lower == 0.0

    def test_full_complexity(self):
        iv = exact_root_oracle(BoundQuery(10, 10, 0.1))
        assert iv.upper == 1.0

    def test_agreement_with_production(self):
        q = BoundQuery(20, 5, 0.05)
        iv = epsilon_bounds(q)
        ref = exact_root_oracle(q)
        assert iv.lower == pytest.approx(ref.lower, abs=1e-9)
        assert iv.upper == pytest.approx(ref.upper, abs=1e-9)

    def test_refuses_large_n(self):
        with pytest.raises(ValueError):
            exact_root_oracle(BoundQuery(31, 3, 0.1))


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=60),
    frac=st.floats(min_value=0.0, max_value=1.0),
    beta=st.floats(min_value=1e-8, max_value=0.5),
)
def test_interval_properties(n, frac, beta):
    k = int(round(frac * n))
    q = BoundQuery(n, k, beta)
    iv = epsilon_bounds(q)
    assert 0.0 <= iv.lower <= iv.upper <= 1.0
    if k == n:
        assert iv.upper == 1.0
    if k >= 1:
        assert iv.upper <= explicit_upper_bound(q) + 1e-12
    assert explicit_lower_bound(q) <= iv.lower + 1e-12
