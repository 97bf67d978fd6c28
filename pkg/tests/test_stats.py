import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from metastable import HittingTimeSample, compare_report, fit_loglinear, summarize
from metastable.errors import DegenerateDesign, TooCensored
from metastable.stats import (
    fit_csv,
    plot_data_csv,
    summary_csv,
    verdict_text,
)


def make_samples(groups):
    """groups: {eta: [steps...]} -> HittingTimeSample list."""
    out = []
    rid = 0
    for eta, steps_list in groups.items():
        for steps in steps_list:
            out.append(HittingTimeSample(
                run_id=rid, seed=rid, eta=eta, steps=steps,
                censored=False, final_point=np.zeros(2),
            ))
            rid += 1
    return out


def test_noiseless_model_recovery():
    etas = [0.5, 0.25, 0.2, 0.125, 0.1]
    samples = make_samples({
        eta: [np.exp(3.0 / eta + 1.0)] for eta in etas
    })
    fit = fit_loglinear(samples, theory_slope=3.0)
    assert fit.slope == pytest.approx(3.0, rel=1e-10)
    assert fit.intercept == pytest.approx(1.0, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.theory_r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 5


def test_fit_uses_group_means():
    samples = make_samples({0.5: [10.0, 30.0], 0.25: [100.0, 300.0]})
    fit = fit_loglinear(samples)
    x = np.array([2.0, 4.0])
    y = np.log([20.0, 200.0])
    slope = (y[1] - y[0]) / (x[1] - x[0])
    assert fit.slope == pytest.approx(slope, rel=1e-12)


def test_fit_scale_equivariance():
    rng = np.random.default_rng(0)
    groups = {
        eta: list(rng.uniform(10, 1000, size=20))
        for eta in (0.5, 0.25, 0.125, 0.1)
    }
    base = fit_loglinear(make_samples(groups))
    scaled = fit_loglinear(make_samples(
        {eta: [7.0 * s for s in steps] for eta, steps in groups.items()}
    ))
    assert scaled.slope == pytest.approx(base.slope, rel=1e-9)
    assert scaled.intercept == pytest.approx(
        base.intercept + np.log(7.0), rel=1e-9
    )


def test_fit_degenerate_design():
    with pytest.raises(DegenerateDesign):
        fit_loglinear(make_samples({0.5: [10.0, 20.0]}))


def test_fit_too_censored():
    samples = make_samples({0.5: [10.0] * 50, 0.25: [100.0] * 50})
    samples[0].censored = True  # 2% > 1% limit
    with pytest.raises(TooCensored):
        fit_loglinear(samples)
    with pytest.raises(TooCensored):
        fit_loglinear(samples, use_median=True)


def test_fit_median_variant():
    samples = make_samples({0.5: [10.0, 10.0, 1000.0],
                            0.25: [100.0, 100.0, 5000.0]})
    fit_mean = fit_loglinear(samples)
    fit_med = fit_loglinear(samples, use_median=True)
    x = np.array([2.0, 4.0])
    y = np.log([10.0, 100.0])
    assert fit_med.slope == pytest.approx((y[1] - y[0]) / 2.0, rel=1e-12)
    assert fit_med.slope != fit_mean.slope


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.floats(1.0, 1e6), min_size=3, max_size=8, unique=True
    ),
    st.floats(-2.0, 5.0),
)
def test_theory_fit_never_beats_free_fit(locs, theory):
    groups = {1.0 / (i + 1): [loc] for i, loc in enumerate(locs)}
    fit = fit_loglinear(make_samples(groups), theory_slope=theory)
    assert fit.theory_r_squared <= fit.r_squared + 1e-12
    assert 0.0 <= fit.r_squared <= 1.0


def test_summarize_matches_sort_oracle():
    rng = np.random.default_rng(1)
    steps = list(rng.integers(1, 10_000, size=100).astype(float))
    rows = summarize(make_samples({0.5: steps}))
    assert len(rows) == 1
    row = rows[0]
    q = oracles.quantiles_sorted_oracle(steps, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert row["min"] == q[0]
    assert row["q25"] == pytest.approx(q[1], rel=1e-14)
    assert row["median"] == pytest.approx(q[2], rel=1e-14)
    assert row["q75"] == pytest.approx(q[3], rel=1e-14)
    assert row["max"] == q[4]
    assert row["mean"] == pytest.approx(np.mean(steps), rel=1e-14)
    assert row["n"] == 100 and row["censored"] == 0


def test_summarize_single_and_constant_samples():
    rows = summarize(make_samples({0.5: [42.0], 0.25: [7.0, 7.0, 7.0]}))
    one = rows[1]  # sorted by eta ascending: 0.25 first
    assert rows[1]["eta"] == 0.5
    assert {one["min"], one["q25"], one["median"], one["q75"], one["max"]} \
        == {42.0}
    const = rows[0]
    assert const["q75"] - const["q25"] == 0.0
    assert const["stderr"] == 0.0


def test_summarize_counts_censored():
    samples = make_samples({0.5: [10.0, 20.0, 30.0]})
    samples[-1].censored = True
    row = summarize(samples)[0]
    assert row["n"] == 2 and row["censored"] == 1
    assert row["max"] == 20.0


def test_compare_report_verdicts():
    fit = fit_loglinear(make_samples({
        eta: [np.exp(3.1 / eta)] for eta in (0.5, 0.25, 0.125)
    }))
    assert fit.slope == pytest.approx(3.1, rel=1e-9)
    ok = compare_report(fit, 3.0, tolerance=0.2)
    assert ok.passed and ok.reason == "ok"
    bad = compare_report(fit, 1.0, tolerance=0.2)
    assert not bad.passed
    assert "slope" in bad.reason


def test_compare_report_zero_energy_floor():
    fit = fit_loglinear(make_samples({
        eta: [100.0 * (1.0 + 0.004 * 1.0 / eta)] for eta in (0.5, 0.25, 0.125)
    }))
    camel_slope = 0.00391
    v = compare_report(fit, 0.0, tolerance=1.0, floor=0.05 * camel_slope)
    # |slope| ~ 0.004 exceeds the floor: FAIL even though theory is 0
    assert not v.passed
    small = fit_loglinear(make_samples({
        eta: [100.0] for eta in (0.5, 0.25, 0.125)
    }))
    v2 = compare_report(small, 0.0, tolerance=1.0, floor=0.05 * camel_slope)
    assert v2.passed  # flat data, r2 gate waived in the zero-energy branch


def test_csv_emitters():
    samples = make_samples({0.5: [10.0, 20.0], 0.25: [100.0, 200.0]})
    fit = fit_loglinear(samples, theory_slope=1.0)
    assert fit_csv(fit).startswith(
        "slope,intercept,r_squared,n_points,theory_slope,theory_r_squared\n"
    )
    assert summary_csv(summarize(samples)).startswith(
        "eta,n,censored,min,q25,median,q75,max,mean,stderr\n"
    )
    plot = plot_data_csv(samples, fit)
    lines = plot.strip().split("\n")
    assert lines[0] == "inv_eta,ln_mean_tau,data_fit,theory_fit"
    assert len(lines) == 3
    v = compare_report(fit, 1.0, tolerance=10.0, r_squared_threshold=0.0)
    text = verdict_text(v)
    assert text.startswith("PASS:") or text.startswith("FAIL:")
