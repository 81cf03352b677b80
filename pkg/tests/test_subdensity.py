import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from gsanatomy.design import SequentialDesign
from gsanatomy.errors import AccuracyError, ConditioningError, ConfigurationError, UsageError
from gsanatomy.numkernel import TruncatedNormalSpec, normal_cdf, simpson_integrate
from gsanatomy.subdensity import (anatomy_from_sizes, compute_anatomy, design_view, final_view, interim_view,
                                  is_possible_path, view_for)

CDF_AT_2_18 = 0.985371269224010744694633690331

# mpmath 30-digit values of Pr(D=2, T_(2) <= v) for c = (2.18, 2.18), unit stages
SUB2_NULL = {0.0: 0.499893000117941812, 1.0: 0.839256672293845602,
             2.18: 0.975104794190827359, 3.0: 0.984797713758415887}
SUB2_DRIFT_1_09 = {0.0: 0.0615747155391168053, 1.0: 0.292238706114928983,
                   2.18: 0.702073019951450829, 3.0: 0.835288884262085646}


def brute_force_sub2(v, c1, delta1, r=0.5):
    """Pr(Z1 <= c1, T2 <= v) by 2-D quadrature over the stage-wise standard normals.

    Z1 ~ N(delta1, 1) is the stage-1 z; the stage-2 increment W ~ N(delta1 * sqrt((1-r)/r), 1)
    and T2 = sqrt(r) Z1 + sqrt(1-r) W.
    """
    mu2 = delta1 * math.sqrt((1 - r) / r)

    def density(w, z):
        return stats.norm.pdf(z, delta1) * stats.norm.pdf(w, mu2)

    def w_upper(z):
        return (v - math.sqrt(r) * z) / math.sqrt(1 - r)

    val, _ = integrate.dblquad(density, delta1 - 12, c1, lambda z: mu2 - 12, w_upper,
                               epsabs=1e-12, epsrel=1e-12)
    return val


@pytest.mark.parametrize("v", [0.0, 1.0, 2.18, 3.0])
def test_stage2_subcdf_matches_brute_force(pocock_rounded, v):
    sd = compute_anatomy(pocock_rounded, 0.0)
    oracle = brute_force_sub2(v, 2.18, 0.0)
    assert oracle == pytest.approx(SUB2_NULL[v], abs=1e-9)
    assert abs(sd.sub_cdf(2, v)[0] - oracle) <= 1e-6
    assert abs(float(sd.sub[1].cdf(v)) - oracle) <= 1e-6


@pytest.mark.parametrize("v", [0.0, 1.0, 2.18, 3.0])
def test_stage2_subcdf_with_drift(pocock_rounded, v):
    sd = compute_anatomy(pocock_rounded, 1.09)
    assert abs(sd.sub_cdf(2, v)[0] - SUB2_DRIFT_1_09[v]) <= 1e-6
    assert abs(float(sd.sub[1].cdf(v)) - SUB2_DRIFT_1_09[v]) <= 1e-6


def test_unequal_stages_against_brute_force():
    # n = (3, 9): r = n_(1)/n_(2) = 1/4
    d = SequentialDesign([3, 9], [2.0, 1.9])
    theta = 0.3
    sd = compute_anatomy(d, theta)
    delta1 = theta * math.sqrt(3)
    for v in (0.5, 2.0, 3.5):
        assert abs(sd.sub_cdf(2, v)[0] - brute_force_sub2(v, 2.0, delta1, r=0.25)) <= 1e-6


def test_pocock_stop_probs(pocock_rounded):
    sd = compute_anatomy(pocock_rounded, 0.0)
    assert sd.stop_probs == pytest.approx([1 - CDF_AT_2_18, CDF_AT_2_18], abs=1e-10)
    sd = compute_anatomy(pocock_rounded, 2.18)
    assert sd.stop_probs[0] == pytest.approx(0.5, abs=1e-12)
    # stage-1 mass above the boundary in the design view
    dv = design_view(compute_anatomy(pocock_rounded, 0.0))
    assert 1.0 - float(dv.components[0][0].cdf(2.18)) == pytest.approx(1.0, abs=1e-12)
    assert dv.components[0][0].mass == pytest.approx(1 - CDF_AT_2_18, abs=1e-10)


@pytest.mark.parametrize("theta", [-0.7, 1.3])
def test_single_stage_is_plain_normal(theta):
    d = SequentialDesign([4], [1.96], sigma=2.0)
    sd = compute_anatomy(d, theta)
    assert sd.stop_probs == pytest.approx([1.0], abs=1e-12)
    delta = theta * 2 / 2.0
    y = np.linspace(-3, 3, 13)
    assert final_view(sd, 1).cdf(y) == pytest.approx(normal_cdf(y - delta), abs=1e-9)
    assert design_view(sd).cdf(y) == pytest.approx(normal_cdf(y - delta), abs=1e-9)


@pytest.mark.parametrize("theta", [-1.0, 0.0, 1.09, 2.18, 4.36])
def test_partition_of_unity(pocock_rounded, theta):
    sd = compute_anatomy(pocock_rounded, theta)
    assert abs(sd.stop_probs.sum() - 1.0) <= 1e-8
    for k in range(sd.K - 1):
        assert sd.sub[k].mass == pytest.approx(sd.stop_probs[k], abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(1, 100), min_size=1, max_size=5), st.lists(st.floats(0.5, 3.5), min_size=5,
                                                                       max_size=5), st.floats(-1, 1))
def test_partition_of_unity_random(sizes, bounds, theta):
    d = SequentialDesign(sizes, bounds[: len(sizes)])
    sd = compute_anatomy(d, theta)
    assert abs(sd.stop_probs.sum() - 1.0) <= 1e-8
    assert np.all(sd.stop_probs >= 0)
    for g in sd.sub:
        assert np.all(g.values >= 0)
        assert simpson_integrate(g.values, g.grid) == pytest.approx(g.mass, abs=1e-8)
        assert g.mass <= 1.0 + 1e-12


def test_first_stage_final_view_is_truncated_normal(pocock_rounded):
    sd = compute_anatomy(pocock_rounded, 0.0)
    fv = final_view(sd, 1)
    spec = TruncatedNormalSpec(0.0, 1.0, 2.18, math.inf)
    y = np.linspace(2.0, 6.0, 41)
    assert fv.cdf(y) == pytest.approx(spec.cdf(y), abs=1e-8)
    assert fv.mean() == pytest.approx(spec.mean(), abs=1e-8)


def test_mle_scale_views():
    d = SequentialDesign([4, 4], [2.18, 2.18], sigma=1.5)
    sd = compute_anatomy(d, 0.2)
    fv = final_view(sd, 1, "mle")
    # the estimator after stage 1 is sigma * T_(1) / sqrt(n_1)
    spec = TruncatedNormalSpec(0.2, 1.5 / 2.0, 2.18 * 1.5 / 2.0, math.inf)
    y = np.linspace(1.5, 4.0, 11)
    assert fv.cdf(y) == pytest.approx(spec.cdf(y), abs=1e-8)
    with pytest.raises(UsageError):
        final_view(sd, 1, "score")


def test_views_normalized_and_consistent():
    d = SequentialDesign([10, 10, 20], [2.4, 2.2, 2.0])
    sd = compute_anatomy(d, 0.35)
    for k in range(1, 4):
        assert final_view(sd, k).total_mass() == pytest.approx(1.0, abs=1e-8)
        assert interim_view(sd, k).total_mass() == pytest.approx(1.0, abs=1e-8)
    y = np.linspace(-2, 6, 81)
    mix = sum(sd.stop_probs[k - 1] * final_view(sd, k).cdf(y) for k in range(1, 4))
    assert design_view(sd).cdf(y) == pytest.approx(mix, abs=1e-8)
    assert interim_view(sd, 1).cdf(y) == pytest.approx(design_view(sd).cdf(y), abs=1e-12)
    assert interim_view(sd, 3).cdf(y) == pytest.approx(final_view(sd, 3).cdf(y), abs=1e-12)
    assert view_for(sd, "D>=2").cdf(y) == pytest.approx(interim_view(sd, 2).cdf(y), abs=0)
    for cond in ("all", "D=1", "D=2", "D>=2"):
        cdf = view_for(sd, cond).cdf(np.linspace(-12, 15, 500))
        assert np.all(np.diff(cdf) >= -1e-12)
        assert cdf[0] <= 1e-6 and cdf[-1] >= 1 - 1e-6
    with pytest.raises(UsageError):
        view_for(sd, "D<2")


def test_stage2_interim_density_normalized_by_continuation(pocock_rounded):
    sd = compute_anatomy(pocock_rounded, 0.0)
    iv = interim_view(sd, 2)
    assert iv.normalizer == pytest.approx(CDF_AT_2_18, abs=1e-10)
    assert float(iv.cdf(2.18)) == pytest.approx(SUB2_NULL[2.18] / CDF_AT_2_18, abs=1e-6)


def test_quantile_inverts_cdf(pocock_rounded):
    dv = design_view(compute_anatomy(pocock_rounded, 1.0))
    for p in (0.05, 0.5, 0.95):
        assert float(dv.cdf(dv.quantile(p))) == pytest.approx(p, abs=1e-9)


def test_zero_probability_conditioning():
    sd = compute_anatomy(SequentialDesign([1, 1], [2.0, 2.0]), 60.0)
    assert sd.stop_probs[0] == 1.0
    with pytest.raises(ConditioningError):
        final_view(sd, 2)
    with pytest.raises(ConditioningError):
        interim_view(sd, 2)


def test_raising_first_boundary_increases_continuation():
    masses = [compute_anatomy(SequentialDesign([1, 1], [c, 2.18]), 0.5).stop_probs[1]
              for c in np.linspace(1.0, 3.5, 11)]
    assert np.all(np.diff(masses) > 0)


def test_configuration_and_accuracy_errors():
    with pytest.raises(ConfigurationError):
        anatomy_from_sizes([1, 1], [2.0, 2.0], 0.0, grid_points=1024)
    with pytest.raises(ConfigurationError):
        anatomy_from_sizes([1, 1], [2.0, 2.0], 0.0, width=3.0)
    with pytest.raises(AccuracyError):
        anatomy_from_sizes([1, 1, 1], [2.0, 2.0, 2.0], 0.0, grid_points=5)


def test_is_possible_path(pocock_rounded):
    assert not is_possible_path(pocock_rounded, [2.5, 0.0])
    assert is_possible_path(pocock_rounded, [1.0, 0.3])
    assert is_possible_path(pocock_rounded, [9.0])
    assert is_possible_path(pocock_rounded, [2.18, 5.0])
    with pytest.raises(UsageError):
        is_possible_path(pocock_rounded, [0.0, 0.0, 0.0])
