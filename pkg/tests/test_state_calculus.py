import math
from fractions import Fraction

import pytest

from dqaoi.closed_forms import (
    GeoDParams,
    avg_paoi_geo_d_strict,
    expected_valid_geo_d_strict,
)
from dqaoi.model import DomainError, InvalidParameter, ResourceLimit, StateKey
from dqaoi.state_calculus import (
    Composition,
    adjudicate_states,
    adjudication_report,
    closed_form_aoi_exact,
    closed_form_paoi_exact,
    enumerate_compositions,
    nested_sum_oracle,
    oracle_all_states,
    oracle_state_expectations,
    reconstruct_averages,
    state_probability_exact,
    table_expectations,
    verify_nested_sums,
    verify_reconstruction,
)

P_GRID = (Fraction(1, 10), Fraction(3, 10), Fraction(1, 2), Fraction(7, 10), Fraction(9, 10))


class TestCompositions:
    def test_empty(self):
        comps = list(enumerate_compositions(0, 3))
        assert comps == [Composition((), 3)]
        assert comps[0].remainder == 3

    def test_exhaustive_small(self):
        comps = [c.parts for c in enumerate_compositions(2, 3)]
        assert comps == [(1, 1), (1, 2), (2, 1)]

    def test_forced(self):
        assert [c.parts for c in enumerate_compositions(4, 4)] == [(1, 1, 1, 1)]

    @pytest.mark.parametrize("n,T", [(0, 5), (1, 6), (3, 7), (4, 8)])
    def test_cardinality(self, n, T):
        assert sum(1 for _ in enumerate_compositions(n, T)) == math.comb(T, n)

    def test_resource_cap(self):
        with pytest.raises(ResourceLimit):
            list(enumerate_compositions(20, 45, cap=1000))

    def test_rejects_bad_n(self):
        with pytest.raises(InvalidParameter):
            list(enumerate_compositions(5, 3))


class TestNestedSums:
    def test_single_layer_is_arithmetic_series(self):
        for T in range(1, 9):
            brute, closed = nested_sum_oracle("linear", 1, T, i=1)
            assert brute == closed == T * (T + 1) // 2 == math.comb(T + 1, 2)

    def test_linear_example(self):
        assert nested_sum_oracle("linear", 2, 3, i=1) == (4, 4)
        assert math.comb(4, 3) == 4

    def test_square_example(self):
        brute, closed = nested_sum_oracle("square", 2, 3)
        assert brute == closed == 6 == math.comb(5, 4) + math.comb(4, 4)

    def test_cross_example(self):
        brute, closed = nested_sum_oracle("cross", 2, 3, i=1, j=2)
        assert brute == closed == 5 == math.comb(5, 4)

    def test_exhaustive_to_depth_eight(self):
        checks = verify_nested_sums(8)
        assert all(c.ok for c in checks)
        assert len(checks) > 700

    def test_index_invariance(self):
        for n, T in [(3, 5), (4, 6)]:
            linear = {nested_sum_oracle("linear", n, T, i=i)[0] for i in range(1, n + 1)}
            square = {nested_sum_oracle("square", n, T, i=i)[0] for i in range(1, n + 1)}
            assert len(linear) == 1 and len(square) == 1
            cross = {
                nested_sum_oracle("cross", n, T, i=i, j=j)[0]
                for i in range(1, n + 1)
                for j in range(1, n + 1)
                if i != j
            }
            assert len(cross) == 1

    def test_pascal_consistency_of_square_printings(self):
        # the two published forms of the squared-term sum are equal
        for T in range(1, 10):
            for n in range(1, T + 1):
                assert math.comb(T + 2, n + 2) + math.comb(T + 1, n + 2) == math.comb(
                    T + 1, n + 1
                ) + 2 * math.comb(T + 1, n + 2)

    def test_cross_requires_distinct_indices(self):
        with pytest.raises(InvalidParameter):
            nested_sum_oracle("cross", 2, 3, i=1, j=1)


class TestOracleStates:
    @pytest.mark.parametrize("T", [1, 2, 3, 5])
    def test_empty_state_row(self, T):
        row = oracle_state_expectations(StateKey(0, 0), T)
        assert row.e_a == 2 * T
        assert row.e_v == 1
        assert row.e_q == Fraction(T * (3 * T + 1), 2)

    @pytest.mark.parametrize("T", [2, 3, 4])
    def test_first_two_rows_identical(self, T):
        r00 = oracle_state_expectations(StateKey(0, 0), T)
        r01 = oracle_state_expectations(StateKey(0, 1), T)
        assert (r00.e_a, r00.e_v, r00.e_q) == (r01.e_a, r01.e_v, r01.e_q)

    def test_known_exact_rows(self):
        # frozen from the staircase enumeration (cross-checked by simulation)
        r11 = oracle_state_expectations(StateKey(1, 1), 2)
        assert (r11.e_a, r11.e_v, r11.e_q) == (Fraction(17, 4), Fraction(5, 4), Fraction(25, 4))
        r21 = oracle_state_expectations(StateKey(2, 1), 2)
        assert (r21.e_a, r21.e_v, r21.e_q) == (Fraction(5, 2), Fraction(1), Fraction(9, 2))
        r12 = oracle_state_expectations(StateKey(1, 2), 2)
        assert (r12.e_a, r12.e_v, r12.e_q) == (Fraction(11, 2), Fraction(2), Fraction(11, 2))

    @pytest.mark.parametrize("T", [2, 3, 4, 5])
    def test_valid_count_in_k1_states(self, T):
        # strict rule: 2 - 1/T minus the boundary-coincidence weight
        # (k/T)(1 - 1/T); the tabulated row keeps only 2 - 1/T
        for k in range(1, T + 1):
            row = oracle_state_expectations(StateKey(k, 1), T)
            expected = (
                Fraction(1, T)
                + (1 - Fraction(1, T)) * (2 - Fraction(k, T))
            )
            assert row.e_v == expected

    @pytest.mark.parametrize("T", [2, 3, 4])
    def test_valid_counts_elsewhere_match_published_rules(self, T):
        for k in range(T + 1):
            for n in range(T + 1):
                if n == 1 and k >= 1:
                    continue
                row = oracle_state_expectations(StateKey(k, n), T)
                if n == 0 or (k == 0 and n == 1):
                    assert row.e_v == 1
                elif k == 0:
                    assert row.e_v == n - 1
                else:
                    assert row.e_v == n

    def test_area_floor(self):
        for T in (2, 3):
            for k in range(T + 1):
                for n in range(T + 1):
                    assert oracle_state_expectations(StateKey(k, n), T).e_q >= 2 * T

    def test_resource_cap(self):
        with pytest.raises(ResourceLimit):
            oracle_all_states(40)


class TestTableExpectations:
    def test_summary_area_rows(self):
        assert table_expectations(StateKey(0, 0), 3, "table").e_q == 15
        assert table_expectations(StateKey(0, 2), 3, "table").e_q == Fraction(41, 3)

    def test_variants_disagree_on_areas(self):
        assert table_expectations(StateKey(0, 2), 3, "derivation").e_q == Fraction(83, 6)
        k0_table = table_expectations(StateKey(1, 0), 2, "table").e_q
        k0_deriv = table_expectations(StateKey(1, 0), 2, "derivation").e_q
        assert (k0_table, k0_deriv) == (7, 8)

    def test_valid_rows(self):
        assert table_expectations(StateKey(2, 1), 4, "table").e_v == 2 - Fraction(1, 4)
        assert table_expectations(StateKey(0, 3), 4, "table").e_v == 2

    def test_unit_period_collapses_row_domain(self):
        with pytest.raises(DomainError):
            table_expectations(StateKey(1, 1), 1, "table")

    def test_rejects_out_of_range_keys(self):
        with pytest.raises(DomainError):
            table_expectations(StateKey(5, 0), 3, "table")


class TestAdjudication:
    def test_summary_table_areas_are_exact(self):
        for T in (2, 3, 4, 5):
            for rec in adjudicate_states(T):
                if rec.column == "area" and rec.table is not None:
                    assert rec.table_match, (T, rec.key)

    def test_k1_rows_are_the_only_summary_defects(self):
        for T in (2, 3, 4):
            for rec in adjudicate_states(T):
                if rec.table is None or rec.column == "area":
                    continue
                k, n = rec.key
                if k >= 1 and n == 1:
                    assert not rec.table_match, (T, rec.key, rec.column)
                else:
                    assert rec.table_match, (T, rec.key, rec.column)

    def test_derivation_areas_mismatch_somewhere(self):
        recs = [
            r
            for T in (2, 3)
            for r in adjudicate_states(T)
            if r.column == "area" and r.derivation is not None
        ]
        assert any(not r.derivation_match for r in recs)

    def test_report_renders(self):
        report = adjudication_report((2, 3))
        assert "MISMATCH" in report and "(k>=1,1)" in report


class TestReconstruction:
    @pytest.mark.parametrize("p", P_GRID)
    @pytest.mark.parametrize("T", [1, 2, 3, 4, 5])
    def test_aoi_reassembly_is_exact(self, p, T):
        aoi, _ = reconstruct_averages(p, T, source="oracle")
        assert aoi == closed_form_aoi_exact(p, T)

    @pytest.mark.parametrize("p", P_GRID)
    @pytest.mark.parametrize("T", [2, 3, 4])
    def test_table_source_reproduces_both_closed_forms(self, p, T):
        aoi, paoi = reconstruct_averages(p, T, source="table")
        assert aoi == closed_form_aoi_exact(p, T)
        assert paoi == closed_form_paoi_exact(p, T)

    def test_unit_period_boundary(self):
        aoi, paoi = reconstruct_averages(Fraction(3, 10), 1, source="oracle")
        assert (aoi, paoi) == (2, 2)

    def test_peak_reassembly_documents_the_tabulated_defect(self):
        _, paoi = reconstruct_averages(Fraction(1, 2), 2, source="oracle")
        assert paoi == Fraction(16, 5)
        assert closed_form_paoi_exact(Fraction(1, 2), 2) == Fraction(139, 44)

    @pytest.mark.parametrize("p", P_GRID)
    @pytest.mark.parametrize("T", [2, 3, 5])
    def test_valid_count_reassembly_matches_strict_form(self, p, T):
        rows = oracle_all_states(T)
        total = sum(
            state_probability_exact(key, p, T) * row.e_v for key, row in rows.items()
        )
        q = 1 - p
        strict = q ** (2 * T - 1) + q**T * (T - 1) * p + T * p
        assert total == strict
        published = q ** (2 * T - 1) + q ** (T - 1) * (T - 1) * p + T * p
        assert published - total == (T - 1) * p * p * q ** (T - 1)

    @pytest.mark.parametrize("p", P_GRID)
    @pytest.mark.parametrize("T", [2, 3, 5, 6])
    def test_strict_closed_form_matches_enumeration(self, p, T):
        _, paoi = reconstruct_averages(p, T, source="oracle")
        params = GeoDParams(float(p), T)
        assert float(paoi) == pytest.approx(avg_paoi_geo_d_strict(params), rel=1e-12)
        rows = oracle_all_states(T)
        ev = sum(state_probability_exact(k, p, T) * r.e_v for k, r in rows.items())
        assert float(ev) == pytest.approx(expected_valid_geo_d_strict(params), rel=1e-12)

    def test_verify_reconstruction_summary(self):
        checks = verify_reconstruction(3, p_grid=(Fraction(1, 2),), source="oracle")
        by_metric = {}
        for c in checks:
            by_metric.setdefault(c.metric, []).append(c.rel_error)
        assert all(err == 0 for err in by_metric["aoi"])
        assert any(err > Fraction(1, 10**12) for err in by_metric["paoi"])
