"""Pareto front disparity metrics."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bgiopt.errors import InputError
from bgiopt.front_metrics import (
    FrontCurve,
    RiskRange,
    as_percent_of_range,
    aupf,
    delta_aupf,
    envelope_curve,
    envelope_risk,
    risk_differences,
    zone_contribution,
)


def curve(points):
    return FrontCurve.from_points(points)


class TestEnvelope:
    def test_at_point_cost(self):
        f = curve([(0, 10), (5, 4)])
        assert envelope_risk(f, 0.0) == 10.0
        assert envelope_risk(f, 5.0) == 4.0

    def test_between_points_holds_left_value(self):
        f = curve([(0, 10), (5, 4)])
        assert envelope_risk(f, 3.0) == 10.0

    def test_beyond_last_point(self):
        f = curve([(0, 10), (5, 4)])
        assert envelope_risk(f, 99.0) == 4.0

    def test_below_first_point_rejected(self):
        f = curve([(1, 10), (5, 4)])
        with pytest.raises(InputError):
            envelope_risk(f, 0.5)

    def test_non_monotone_front_enveloped(self):
        f = curve([(0, 10), (2, 12), (4, 6)])
        assert envelope_risk(f, 2.0) == 10.0  # never credits a worse point
        assert envelope_risk(f, 4.0) == 6.0

    def test_cost_ties_keep_min_risk(self):
        f = curve([(0, 10), (1, 8), (1, 6), (2, 7)])
        assert len(f) == 3
        assert envelope_risk(f, 1.0) == 6.0

    @given(st.lists(st.tuples(
        st.floats(min_value=0, max_value=100),
        st.floats(min_value=0, max_value=100)), min_size=1, max_size=20))
    def test_envelope_non_increasing(self, pts):
        f = curve([(0.0, 50.0)] + pts)
        cs = np.linspace(0, 100, 31)
        vals = [envelope_risk(f, c) for c in cs]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


class TestRiskDifferences:
    def test_identity(self):
        f = curve([(0, 10), (3, 6), (9, 1)])
        assert risk_differences(f, f) == (0.0, 0.0)

    def test_constant_offset(self):
        ref = curve([(0, 12), (3, 8), (9, 3)])
        trial = curve([(0, 10), (3, 6), (9, 1)])
        maxrd, medrd = risk_differences(ref, trial)
        assert maxrd == pytest.approx(2.0, abs=1e-12)
        assert medrd == pytest.approx(2.0, abs=1e-12)

    def test_single_gap_among_zeros(self):
        # the trial reaches risk 89 one cost step earlier than the reference,
        # so exactly one of the ten common costs carries a (7-unit) gap
        ref_risks = [100, 99, 98, 97, 96, 89, 88, 87, 86, 85]
        ref = curve(list(zip(range(10), ref_risks)))
        trial_risks = list(ref_risks)
        trial_risks[4] = 89
        trial = curve(list(zip(range(10), trial_risks)))
        maxrd, medrd = risk_differences(ref, trial)
        assert maxrd == pytest.approx(7.0, abs=1e-12)
        assert medrd == pytest.approx(0.0, abs=1e-12)

    def test_requires_baseline_at_zero(self):
        ref = curve([(1, 10), (3, 6)])
        trial = curve([(0, 10), (3, 6)])
        with pytest.raises(InputError):
            risk_differences(ref, trial)

    @given(
        st.lists(st.tuples(st.floats(0, 50), st.floats(0, 50)), min_size=1, max_size=12),
        st.lists(st.tuples(st.floats(0, 50), st.floats(0, 50)), min_size=1, max_size=12),
    )
    def test_symmetric_and_ordered(self, a, b):
        ref = curve([(0.0, 25.0)] + a)
        trial = curve([(0.0, 25.0)] + b)
        m1, d1 = risk_differences(ref, trial)
        m2, d2 = risk_differences(trial, ref)
        assert m1 == m2 and d1 == d2
        assert m1 >= d1 >= 0.0


class TestPercentOfRange:
    rr = RiskRange(baseline=10.0, max_intervention=0.0)

    def test_zero(self):
        assert as_percent_of_range(0.0, self.rr) == 0.0

    def test_full_range(self):
        assert as_percent_of_range(10.0, self.rr) == 100.0

    def test_partial(self):
        assert as_percent_of_range(5.8, self.rr) == pytest.approx(58.0, rel=1e-12)

    def test_zero_range_rejected(self):
        with pytest.raises(InputError):
            as_percent_of_range(1.0, RiskRange(baseline=5.0, max_intervention=5.0))


class TestAupf:
    def test_single_trapezoid(self):
        assert aupf(curve([(0, 10), (10, 0)])) == pytest.approx(50.0, abs=1e-12)

    def test_rectangle(self):
        assert aupf(curve([(2, 7), (12, 7)])) == pytest.approx(70.0, abs=1e-12)

    def test_collinear_point_insertion_invariant(self):
        base = aupf(curve([(0, 10), (10, 0)]))
        split = aupf(curve([(0, 10), (4, 6), (10, 0)]))
        assert split == pytest.approx(base, rel=1e-12)

    def test_additive_over_partitions(self):
        f = curve([(0, 9), (3, 5), (8, 4), (11, 1)])
        left = aupf(curve([(0, 9), (3, 5)]))
        mid = aupf(curve([(3, 5), (8, 4)]))
        right = aupf(curve([(8, 4), (11, 1)]))
        assert aupf(f) == pytest.approx(left + mid + right, rel=1e-12)

    def test_needs_two_points(self):
        with pytest.raises(InputError):
            aupf(curve([(0, 1)]))

    def test_envelope_curve_helper(self):
        f = curve([(0, 10), (2, 12), (4, 6)])
        env = envelope_curve(f)
        assert env.risks.tolist() == [10.0, 10.0, 6.0]


class TestDeltaAupf:
    def test_equal(self):
        assert delta_aupf(50.0, 50.0) == (0.0, 0.0)

    def test_worse_trial(self):
        absolute, percent = delta_aupf(50.0, 87.5)
        assert absolute == pytest.approx(37.5, rel=1e-12)
        assert percent == pytest.approx(75.0, rel=1e-12)

    def test_improvement_is_negative(self):
        absolute, percent = delta_aupf(50.0, 40.0)
        assert absolute < 0 and percent < 0

    def test_zero_reference_rejected(self):
        with pytest.raises(InputError):
            delta_aupf(0.0, 10.0)


class TestZoneContribution:
    def test_always_and_never(self):
        genomes = [[1, 0], [1, 0], [1, 0]]
        frac = zone_contribution(genomes)
        assert frac[0] == 1.0 and frac[1] == 0.0

    def test_partial(self):
        genomes = [[0, 0]] + [[1, 1]] * 3 + [[0, 1]] * 7  # baseline excluded
        frac = zone_contribution(genomes)
        assert frac[0] == pytest.approx(0.3)
        assert frac[1] == pytest.approx(1.0)

    def test_empty_front_rejected(self):
        with pytest.raises(InputError):
            zone_contribution([])

    def test_baseline_only_rejected(self):
        with pytest.raises(InputError):
            zone_contribution([[0, 0, 0]])
