import math

import pytest
from hypothesis import given, settings, strategies as st

from dqaoi.closed_forms import (
    BASELINE_ZW_D,
    BASELINE_ZW_GEO,
    ContinuousParams,
    GeoDParams,
    avg_aoi_d_d,
    avg_aoi_geo_d,
    avg_aoi_geo_geo,
    avg_aosi_geo_geo,
    avg_paoi_geo_d,
    avg_paoi_geo_d_strict,
    expected_valid_geo_d,
    expected_valid_geo_d_strict,
    m_d_reference,
    m_m_reference,
    reduction_ratio,
    single_queue_metrics,
    state_probability,
)
from dqaoi.model import InvalidParameter, ServiceModel, StateKey

rates = st.floats(min_value=0.01, max_value=1.0)


class TestGeoDAoi:
    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9, 1.0])
    def test_unit_period_is_exactly_two(self, p):
        assert avg_aoi_geo_d(GeoDParams(p, 1)) == 2.0

    def test_reference_point(self):
        # frozen from direct evaluation: 10 - 1.6384*3.6 + 0.536870912*4.6
        assert avg_aoi_geo_d(GeoDParams(0.2, 5)) == pytest.approx(6.5713661952, abs=1e-10)

    @pytest.mark.parametrize("T", [3, 5, 10])
    def test_slow_sensor_limit_matches_lone_deterministic_queue(self, T):
        # p -> 0 leaves only the deterministic queue: mean (3T+1)/2
        assert avg_aoi_geo_d(GeoDParams(1e-6, T)) == pytest.approx((3 * T + 1) / 2, abs=1e-3)

    def test_long_period_limit_matches_lone_geometric_queue(self):
        assert avg_aoi_geo_d(GeoDParams(0.5, 200)) == pytest.approx(4.0, abs=1e-9)

    def test_floor_of_two(self):
        for p in (0.05, 0.3, 0.9):
            for T in (1, 2, 7, 40):
                assert avg_aoi_geo_d(GeoDParams(p, T)) >= 2.0

    def test_rejects_bad_params(self):
        with pytest.raises(InvalidParameter):
            GeoDParams(0.0, 4)
        with pytest.raises(InvalidParameter):
            GeoDParams(0.5, 0)


class TestGeoDPaoi:
    @pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
    def test_unit_period_is_exactly_two(self, p):
        assert avg_paoi_geo_d(GeoDParams(p, 1)) == 2.0

    def test_long_period_limit(self):
        assert avg_paoi_geo_d(GeoDParams(0.5, 200)) == pytest.approx(4.0, abs=1e-9)

    def test_slow_sensor_limit(self):
        assert avg_paoi_geo_d(GeoDParams(1e-6, 5)) == pytest.approx(10.0, abs=1e-3)

    def test_reference_point(self):
        # frozen from direct evaluation of the grouped numerator over
        # q^3 + 0.5*q*1 + 1 at p = 0.5, T = 2
        assert avg_paoi_geo_d(GeoDParams(0.5, 2)) == pytest.approx(139 / 44, abs=1e-12)


class TestStrictVariants:
    def test_strict_valid_count_difference(self):
        # the variants differ by exactly (T-1) p^2 q^(T-1)
        for p in (0.1, 0.5, 0.8):
            for T in (2, 3, 5, 10):
                params = GeoDParams(p, T)
                gap = expected_valid_geo_d(params) - expected_valid_geo_d_strict(params)
                assert gap == pytest.approx((T - 1) * p * p * (1 - p) ** (T - 1), rel=1e-12)

    def test_strict_paoi_known_point(self):
        # exact enumeration gives 16/5 at p = 0.5, T = 2
        assert avg_paoi_geo_d_strict(GeoDParams(0.5, 2)) == pytest.approx(3.2, abs=1e-12)
        assert expected_valid_geo_d_strict(GeoDParams(0.5, 2)) == pytest.approx(1.25, abs=1e-12)

    def test_strict_collapses_at_unit_period(self):
        assert avg_paoi_geo_d_strict(GeoDParams(0.4, 1)) == 2.0
        assert expected_valid_geo_d_strict(GeoDParams(0.4, 1)) == pytest.approx(
            expected_valid_geo_d(GeoDParams(0.4, 1))
        )


class TestSingleQueues:
    def test_geometric(self):
        assert single_queue_metrics(ServiceModel.geometric(0.5)) == (4.0, 4.0)

    def test_deterministic(self):
        assert single_queue_metrics(ServiceModel.deterministic(5)) == (8.0, 10.0)
        assert single_queue_metrics(ServiceModel.deterministic(1)) == (2.0, 2.0)

    def test_rejects_exponential(self):
        with pytest.raises(InvalidParameter):
            single_queue_metrics(ServiceModel.exponential(1.0))


class TestGeoGeo:
    def test_saturated_rates_floor(self):
        assert avg_aoi_geo_geo(1.0, 1.0) == 2.0
        assert avg_aosi_geo_geo(1.0, 1.0) == 2.0

    def test_vanishing_second_queue(self):
        assert avg_aoi_geo_geo(0.5, 1e-8) == pytest.approx(4.0, abs=1e-6)

    def test_reference_point(self):
        assert avg_aoi_geo_geo(0.5, 0.5) == pytest.approx(80 / 27, rel=1e-12)

    @given(rates, rates)
    def test_symmetry(self, a, b):
        assert avg_aoi_geo_geo(a, b) == pytest.approx(avg_aoi_geo_geo(b, a), rel=1e-12)

    @given(rates, rates)
    @settings(max_examples=200)
    def test_aoi_plus_stalest_identity(self, a, b):
        total = avg_aoi_geo_geo(a, b) + avg_aosi_geo_geo(a, b)
        assert total == pytest.approx(2.0 / a + 2.0 / b, rel=1e-12)

    def test_stalest_forced_by_identity(self):
        assert avg_aosi_geo_geo(0.5, 0.5) == pytest.approx(
            8.0 - avg_aoi_geo_geo(0.5, 0.5), rel=1e-12
        )


class TestDD:
    def test_reference_points(self):
        assert avg_aoi_d_d(0.5) == 3.0
        assert avg_aoi_d_d(1.0) == 2.0
        # mu + 3/(2 mu) - 1/2 at mu = 0.2
        assert avg_aoi_d_d(0.2) == pytest.approx(7.2, rel=1e-12)


class TestContinuousReferences:
    def test_m_d_point(self):
        aoi, paoi = m_d_reference(ContinuousParams(1.0, 1.0))
        assert aoi == pytest.approx(5 / math.e**2 - 4 / math.e + 2, rel=1e-12)
        assert paoi > aoi

    def test_m_d_long_period_limit(self):
        aoi, _ = m_d_reference(ContinuousParams(1.0, 50.0))
        assert aoi == pytest.approx(2.0, abs=1e-6)

    def test_m_m_equal_rates(self):
        assert m_m_reference(1.0, 1.0) == pytest.approx(1.25, rel=1e-12)
        assert m_m_reference(0.5, 0.5) == pytest.approx(2.5, rel=1e-12)

    @given(st.floats(0.1, 10), st.floats(0.1, 10))
    def test_m_m_symmetry(self, a, b):
        assert m_m_reference(a, b) == pytest.approx(m_m_reference(b, a), rel=1e-12)


class TestReductionRatios:
    def test_slow_rate_limits(self):
        assert reduction_ratio("aoi", BASELINE_ZW_GEO, 1e-4) == pytest.approx(0.39742, abs=1e-3)
        assert reduction_ratio("aoi", BASELINE_ZW_D, 1e-4) == pytest.approx(0.19650, abs=1e-3)
        assert reduction_ratio("paoi", BASELINE_ZW_GEO, 1e-4) == pytest.approx(0.27706, abs=1e-3)

    def test_limit_constants_from_formulas(self):
        e = math.e
        assert reduction_ratio("aoi", BASELINE_ZW_GEO, 1e-6) == pytest.approx(
            2 / e - 5 / (2 * e * e), abs=1e-5
        )
        assert reduction_ratio("aoi", BASELINE_ZW_D, 1e-6) == pytest.approx(
            8 / (3 * e) - 10 / (3 * e * e) - 1 / 3, abs=1e-5
        )
        assert reduction_ratio("paoi", BASELINE_ZW_D, 1e-6) == pytest.approx(
            (3 * e - 2) / (2 * (e * e + e + 1)), abs=1e-5
        )

    @given(st.floats(min_value=0.001, max_value=0.999))
    def test_paoi_ratio_identical_for_both_baselines(self, mu):
        # both single-queue peak ages equal 2/mu, so the ratios are bit-equal
        assert reduction_ratio("paoi", BASELINE_ZW_GEO, mu) == reduction_ratio(
            "paoi", BASELINE_ZW_D, mu
        )

    @given(st.floats(min_value=0.001, max_value=0.999))
    def test_within_unit_band(self, mu):
        for which, baseline in (
            ("aoi", BASELINE_ZW_GEO),
            ("aoi", BASELINE_ZW_D),
            ("paoi", BASELINE_ZW_GEO),
        ):
            assert -1.0 < reduction_ratio(which, baseline, mu) < 1.0

    def test_closed_form_printings_agree_with_ratio_definition(self):
        # the dedicated reduction expressions match the definition they
        # abbreviate: eta = 1 - dual / single
        for mu in (0.05, 0.2, 0.5, 0.8):
            q = 1.0 - mu
            expected_geo = (2 - mu) * q ** (1 / mu) + (mu - 2.5) * q ** (2 / mu)
            assert reduction_ratio("aoi", BASELINE_ZW_GEO, mu) == pytest.approx(
                expected_geo, rel=1e-10
            )
            expected_d = (
                mu - 1 + 4 * (2 - mu) * q ** (1 / mu) + 2 * (2 * mu - 5) * q ** (2 / mu)
            ) / (mu + 3)
            assert reduction_ratio("aoi", BASELINE_ZW_D, mu) == pytest.approx(
                expected_d, rel=1e-10
            )


class TestStateProbability:
    def test_empty_state(self):
        p, T = 0.3, 4
        assert state_probability(StateKey(0, 0), GeoDParams(p, T)) == pytest.approx(
            (1 - p) ** (2 * T), rel=1e-12
        )

    def test_direct_substitution(self):
        assert state_probability(StateKey(1, 1), GeoDParams(0.5, 2)) == pytest.approx(0.25)

    def test_normalization(self):
        params = GeoDParams(0.3, 4)
        total = sum(
            state_probability(StateKey(k, n), params)
            for k in range(5)
            for n in range(5)
        )
        assert total == pytest.approx(1.0, abs=1e-12)
