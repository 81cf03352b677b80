import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsanatomy.design import Hypotheses, SequentialDesign
from gsanatomy.errors import DomainError, InputError, SetupError, SupportError, UsageError
from gsanatomy.sequential_lr import (CompetingTest, StoppedSample, calibrate_competitor, interim_log_lr,
                                     joint_log_density, log_lr_threshold, lr_statistic, mle,
                                     power_dominance_trial, recursive_mle, _decide, _simulate_statistics, run_sequential_lr_test,
                                     sample_log_lr, sign_statistic, sufficient_statistic)

LOG_PHI_2_5 = -4.04393853320467274  # mpmath log of the standard normal density at 2.5


def test_joint_log_density_examples(pocock_rounded):
    s = StoppedSample(1, [2.5], pocock_rounded)
    assert joint_log_density(s, 0.0) == pytest.approx(LOG_PHI_2_5, abs=1e-12)
    s = StoppedSample(2, [1.0, 3.0], pocock_rounded)
    expected = 2 * (-0.5 - 0.5 * math.log(2 * math.pi))
    assert joint_log_density(s, 2.0) == pytest.approx(expected, abs=1e-12)


def test_impossible_samples(pocock_rounded):
    with pytest.raises(SupportError):
        joint_log_density(StoppedSample(1, [1.0], pocock_rounded), 0.0)
    with pytest.raises(SupportError):
        joint_log_density(StoppedSample(2, [2.5, 0.0], pocock_rounded), 0.0)
    assert not StoppedSample(1, [2.18], pocock_rounded).in_support()
    with pytest.raises(UsageError):
        StoppedSample(2, [1.0], pocock_rounded)
    with pytest.raises(UsageError):
        StoppedSample(3, [1.0, 1.0, 1.0], pocock_rounded)


def test_mle_examples(pocock_rounded):
    assert mle(StoppedSample(2, [1.0, 3.0], pocock_rounded)) == 2.0
    assert mle(StoppedSample(1, [2.5], pocock_rounded)) == 2.5


@settings(max_examples=60)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=4), st.data())
def test_mle_recursive_form(sizes, data):
    design = SequentialDesign(sizes, [50.0] * len(sizes))
    d = data.draw(st.integers(1, len(sizes)))
    n = sum(sizes[:d])
    x = data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n))
    s = StoppedSample(d, x, design)
    assert recursive_mle(s) == pytest.approx(mle(s), abs=1e-10)
    assert mle(s) == float(np.cumsum(np.asarray(x, dtype=float))[-1]) / n


def test_interim_log_lr_examples():
    assert interim_log_lr(0.0, 1, 0.0, 1.0, 1.0) == -0.5
    assert interim_log_lr(3.7, 5, 0.4, 0.4) == 0.0
    with pytest.raises(DomainError):
        interim_log_lr(0.0, 1, 1.0, 0.5)


@given(st.floats(-50, 50), st.floats(0.01, 10), st.integers(1, 100), st.floats(-2, 2), st.floats(0.01, 3))
def test_interim_log_lr_increasing(s, ds, n, theta0, gap):
    assert interim_log_lr(s + ds, n, theta0, theta0 + gap) > interim_log_lr(s, n, theta0, theta0 + gap)


def test_lr_decision_equivalence():
    design = SequentialDesign([4, 4, 4], [2.4, 2.2, 2.0], sigma=1.3)
    hyp = Hypotheses(0.0, 0.6)
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        n = int(rng.integers(1, 4)) * 4
        d = n // 4
        x = rng.normal(0.3, 1.3, n)
        z = x.sum() / (1.3 * math.sqrt(n))
        llr = interim_log_lr(x.sum(), n, hyp.theta0, hyp.theta1, 1.3)
        assert (llr > log_lr_threshold(design, hyp, d)) == (z > design.boundaries[d - 1])


def test_sufficiency():
    design = SequentialDesign([3, 3], [3.0, 3.0])
    a = StoppedSample(2, [0.1, 0.5, -0.2, 1.0, 0.3, 0.1], design)
    b = StoppedSample(2, [0.6, 0.6, 0.6, 0.0, 0.0, 0.0], design)
    assert sufficient_statistic(a).sum_x == pytest.approx(sufficient_statistic(b).sum_x)
    for theta in (-1.0, 0.4, 2.0):
        da = joint_log_density(a, theta) - joint_log_density(a, 0.0)
        db = joint_log_density(b, theta) - joint_log_density(b, 0.0)
        assert da == pytest.approx(db, abs=1e-12)
        if theta > 0:
            assert da == pytest.approx(sample_log_lr(a, 0.0, theta), abs=1e-12)


def test_sequential_test_examples(pocock_rounded):
    hyp = Hypotheses(0.0, 1.0)
    dec = run_sequential_lr_test(iter([[2.5], [9.0]]), pocock_rounded, hyp)
    assert (dec.stage, dec.rejected) == (1, True)
    # z-path (1.0, 1.5): second outcome makes the cumulative z 1.5
    second = 1.5 * math.sqrt(2) - 1.0
    dec = run_sequential_lr_test([[1.0], [second]], pocock_rounded, hyp)
    assert (dec.stage, dec.rejected) == (2, False)
    assert dec.statistic == pytest.approx(1.5)
    dec = run_sequential_lr_test([[2.18], [0.0]], pocock_rounded, hyp)
    assert dec.stage == 2


def test_sequential_test_consumes_only_needed_stages(pocock_rounded):
    pulled = []

    def stream():
        for block in ([3.0], [0.0]):
            pulled.append(block)
            yield block

    run_sequential_lr_test(stream(), pocock_rounded, Hypotheses(0.0, 1.0))
    assert len(pulled) == 1


def test_sequential_test_input_errors(pocock_rounded):
    with pytest.raises(InputError):
        run_sequential_lr_test([[0.0]], pocock_rounded, Hypotheses(0.0, 1.0))
    with pytest.raises(InputError):
        run_sequential_lr_test([[0.0, 1.0], [0.0]], pocock_rounded, Hypotheses(0.0, 1.0))


def test_statistic_maps():
    design = SequentialDesign([4], [2.0])
    x = np.array([[1.0, -1.0, 2.0, 0.5], [-1.0, -1.0, -1.0, -1.0]])
    assert lr_statistic(x, design) == pytest.approx([2.5 / 2.0, -2.0])
    assert sign_statistic(x, design) == pytest.approx([1.0, -2.0])


def test_self_comparison_has_equal_power():
    design = SequentialDesign([10, 10], [2.18, 2.18])
    rep = power_dominance_trial(design, Hypotheses(0.0, 0.5), lr_statistic, [0.0, 0.3],
                                replications=20_000, calibration_replications=200_000, name="lr")
    for row in rep.rows:
        assert abs(row.power_lr - row.power_comp) <= 3 * max(row.se_diff, 1.0 / 20_000)
        assert not row.flag


def test_sign_test_dominated():
    design = SequentialDesign([10, 10], [2.18, 2.18])
    thetas = [k * 0.1 / math.sqrt(10) * 3 for k in range(1, 6)]
    rep = power_dominance_trial(design, Hypotheses(0.0, 0.5), sign_statistic, thetas,
                                replications=20_000, calibration_replications=200_000, name="sign")
    assert not rep.any_flag
    assert len(rep.competitor.boundaries) == 2
    for row in rep.rows:
        assert row.identity_gap <= 1e-12


def test_null_power_equals_size():
    design = SequentialDesign([10, 10], [2.18, 2.18])
    rep = power_dominance_trial(design, Hypotheses(0.0, 0.5), sign_statistic, [0.0],
                                replications=50_000, calibration_replications=200_000)
    row = rep.rows[0]
    assert abs(row.power_lr - 0.0249) <= 3 * row.se_lr
    assert abs(row.power_comp - 0.0249) <= 3 * row.se_comp + 0.002


def test_calibration_failures():
    design = SequentialDesign([2, 2], [2.18, 2.18])
    with pytest.raises(SetupError):
        calibrate_competitor(design, [1.5, 0.01], sign_statistic, replications=1000)
    bad = CompetingTest("bad", sign_statistic, (1.0,), (0.0,))
    with pytest.raises(SetupError):
        power_dominance_trial(design, Hypotheses(0.0, 0.5), bad, [0.1], replications=100)


def test_randomized_calibration_hits_alpha():
    design = SequentialDesign([6, 6], [2.18, 2.18])
    comp = calibrate_competitor(design, [0.02, 0.01], sign_statistic, replications=100_000, seed=5)
    assert all(0.0 <= g <= 1.0 for g in comp.gammas)
    # fresh null replications: stage-wise conditional rejection rates near the targets
    (stats,), aux = _simulate_statistics(design, [sign_statistic], 0.0, 99, 200_000)
    d, rejected = _decide(stats, aux, comp.boundaries, comp.gammas)
    first = np.mean(rejected & (d == 1))
    assert abs(first - 0.02) <= 3 * math.sqrt(0.02 * 0.98 / 200_000)
    reached = d == 2
    second = np.mean(rejected[reached])
    assert abs(second - 0.01) <= 3 * math.sqrt(0.01 * 0.99 / reached.sum())
