import pytest

from dqaoi.closed_forms import m_m_reference
from dqaoi.limits import (
    CSV_HEADER,
    ConvergenceRow,
    convergence_table,
    discretize,
    geo_to_exp_distance,
    rows_to_csv,
)
from dqaoi.model import InvalidParameter


class TestDiscretize:
    def test_exact_division(self):
        params = discretize(1.0, 1.0, 10)
        assert (params.p, params.T) == (0.1, 10)

    def test_general_point(self):
        params = discretize(0.5, 1.5, 100)
        assert (params.p, params.T) == (0.005, 150)

    def test_rejects_slot_rate_at_or_above_one(self):
        with pytest.raises(InvalidParameter):
            discretize(1.0, 1.0, 1)

    def test_rounds_to_nearest_even_on_ties(self):
        assert discretize(1.0, 0.25, 10).T == 2  # 2.5 -> 2
        assert discretize(1.0, 0.35, 10).T == 4  # 3.5 -> 4


class TestConvergenceTable:
    @pytest.mark.parametrize("metric", ["aoi", "paoi"])
    def test_geo_d_errors_shrink(self, metric):
        rows = convergence_table("geo-d", [10, 100, 1000], lam=1.0, T_M=1.0, metric=metric)
        errs = [r.rel_err for r in rows]
        assert errs == sorted(errs, reverse=True)
        assert errs[-1] < 0.01

    def test_geo_geo_approaches_equal_rate_reference(self):
        rows = convergence_table("geo-geo", [100, 10000], mu_a=1.0, mu_b=1.0)
        assert rows[-1].scaled_discrete == pytest.approx(1.25, rel=1e-4)
        assert rows[-1].continuous_ref == m_m_reference(1.0, 1.0)

    def test_geo_geo_tight_at_large_delta(self):
        rows = convergence_table("geo-geo", [10**6], mu_a=1.0, mu_b=1.0)
        assert rows[0].rel_err < 1e-4

    def test_rejects_unsorted_deltas(self):
        with pytest.raises(InvalidParameter):
            convergence_table("geo-d", [100, 10], lam=1.0, T_M=1.0)

    def test_rejects_peak_metric_for_geo_geo(self):
        with pytest.raises(InvalidParameter):
            convergence_table("geo-geo", [100], mu_a=1.0, mu_b=1.0, metric="paoi")

    def test_rounding_error_stays_attributable(self):
        rows = convergence_table("geo-d", [7], lam=1.0, T_M=1.0)
        assert rows[0].exact_T == 7.0
        assert rows[0].T == 7

    def test_csv_shape(self):
        rows = convergence_table("geo-d", [10, 100], lam=1.0, T_M=1.0)
        text = rows_to_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3
        assert lines[1].startswith("10,0.1,10,")

    def test_row_error_fields(self):
        row = ConvergenceRow.build(10, 0.1, 10, 1.1, 1.0, 10.0)
        assert row.abs_err == pytest.approx(0.1)
        assert row.rel_err == pytest.approx(0.1)


class TestGeoToExpDistance:
    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_monotone_in_delta(self, r):
        distances = [geo_to_exp_distance(r, d) for d in (10, 100, 1000, 10000)]
        assert distances == sorted(distances, reverse=True)

    def test_small_at_fine_slotting(self):
        assert geo_to_exp_distance(1.0, 1000) < 0.01

    def test_vanishes_in_the_limit(self):
        assert geo_to_exp_distance(1.0, 10**6) < 1e-5

    def test_rejects_bad_rates(self):
        with pytest.raises(InvalidParameter):
            geo_to_exp_distance(0.0, 10)
        with pytest.raises(InvalidParameter):
            geo_to_exp_distance(10.0, 5)
