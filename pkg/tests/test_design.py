import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsanatomy.design import (Hypotheses, SequentialDesign, cumulative_sizes, operational_characteristics,
                              validate_design)
from gsanatomy.errors import DesignError, DomainError
from gsanatomy.numkernel import normal_cdf

CDF_AT_2_18 = 0.985371269224010744694633690331
ALPHA_AT_2_18 = 0.0248952058091726462  # mpmath, overall size of the rounded boundary


@pytest.mark.parametrize("sizes, cum", [((1, 1), (1, 2)), ((100, 100), (100, 200)), ((5,), (5,)),
                                        ((3, 4, 5), (3, 7, 12))])
def test_cumulative_sizes(sizes, cum):
    d = SequentialDesign(sizes, [2.0] * len(sizes))
    assert cumulative_sizes(d) == cum == d.cumulative_sizes()


def test_validate_reports():
    assert validate_design(SequentialDesign([1, 1], [2.18, 2.18])) == []
    assert "stage size must be >=1" in validate_design(SequentialDesign([0, 5], [2.0, 2.0]))
    assert "boundary must be finite" in validate_design(SequentialDesign([1, 1], [math.nan, 2.0]))
    assert validate_design(SequentialDesign([1, 1], [2.0]))
    assert validate_design(SequentialDesign([1], [2.0], sigma=0.0))
    assert validate_design(SequentialDesign([], []))
    with pytest.raises(DesignError):
        SequentialDesign([0], [1.0]).check()


def test_hypotheses_order():
    with pytest.raises(DomainError):
        Hypotheses(0.0, 0.0)
    with pytest.raises(DomainError):
        Hypotheses(1.0, 0.5)


def test_pocock_oc(pocock_rounded):
    oc = operational_characteristics(pocock_rounded, Hypotheses(0.0, 2.18))
    assert oc.overall_alpha == pytest.approx(0.025, abs=5e-4)
    assert oc.overall_alpha == pytest.approx(ALPHA_AT_2_18, abs=1e-9)
    assert oc.stop_probs_null == pytest.approx((1 - CDF_AT_2_18, CDF_AT_2_18), abs=1e-10)
    assert oc.alpha_spending[0] == pytest.approx(1 - CDF_AT_2_18, abs=1e-12)
    # power identity from the conditional non-rejection rates
    assert oc.overall_power == pytest.approx(1 - np.prod(oc.beta_stage), abs=1e-8)
    assert oc.cumulative_power[-1] == pytest.approx(oc.overall_power, abs=1e-15)
    # stage-1 stop under the alternative: symmetric about the boundary
    assert oc.stop_probs_alt[0] == pytest.approx(0.5, abs=1e-12)
    assert oc.expected_n == pytest.approx(1 * 0.5 + 2 * 0.5, abs=1e-9)


def test_single_stage_reduces_to_z_test():
    d = SequentialDesign([9], [1.959963984540054])
    oc = operational_characteristics(d, Hypotheses(0.0, 1.0))
    assert oc.overall_alpha == pytest.approx(0.025, abs=1e-8)
    assert oc.overall_power == pytest.approx(1 - normal_cdf(1.959963984540054 - 3.0), abs=1e-10)
    assert oc.stop_probs_null == pytest.approx((1.0,), abs=1e-12)
    assert oc.expected_n == 9


def test_alpha_two_ways():
    d = SequentialDesign([10, 20, 15], [2.5, 2.3, 2.1])
    oc = operational_characteristics(d, Hypotheses(0.0, 0.4))
    reach = np.concatenate([[1.0], np.cumprod(1 - np.array(oc.alpha_stage))[:-1]])
    table_form = float(np.sum(np.array(oc.alpha_stage) * reach))
    assert table_form == pytest.approx(oc.overall_alpha, abs=1e-8)
    assert np.all(np.diff(oc.alpha_spending) >= 0)
    assert oc.alpha_spending[-1] == oc.overall_alpha
    assert sum(oc.stop_probs_null) == pytest.approx(1.0, abs=1e-8)
    assert sum(oc.stop_probs_alt) == pytest.approx(1.0, abs=1e-8)
    assert oc.overall_power == pytest.approx(1 - np.prod(oc.beta_stage), abs=1e-8)


def test_power_monotone_in_theta():
    d = SequentialDesign([16, 16], [2.18, 2.18])
    powers = [operational_characteristics(d, Hypotheses(-1.0, t / 4.0)).overall_power
              for t in np.arange(0.0, 4.01, 0.5)]
    assert np.all(np.diff(powers) > 0)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=4), st.floats(1.5, 3.0), st.floats(0.05, 1.0))
def test_oc_invariants(sizes, c, theta1):
    d = SequentialDesign(sizes, [c] * len(sizes))
    oc = operational_characteristics(d, Hypotheses(0.0, theta1), grid_points=257)
    assert sum(oc.stop_probs_null) == pytest.approx(1.0, abs=1e-8)
    assert np.all(np.diff(oc.alpha_spending) >= -1e-15)
    assert oc.overall_power == pytest.approx(1 - np.prod(oc.beta_stage), abs=1e-8)
    assert oc.overall_power >= oc.overall_alpha
