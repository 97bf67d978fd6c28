"""Scaling-law regression and hitting-time aggregation.

The exponential scaling prediction is ln E[tau] = E * (1/eta) + c, so the
fit is ordinary least squares of ln(mean steps per eta) against 1/eta.  The
theory fit fixes the slope to the predicted energy and re-fits only the
intercept; its r-squared can never beat the free fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesign, TooCensored

CENSOR_LIMIT = 0.01


@dataclass
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    theory_slope: float
    theory_r_squared: float


@dataclass
class Verdict:
    passed: bool
    slope: float
    theory_slope: float
    tolerance: float
    floor: float
    r_squared: float
    r_squared_threshold: float
    reason: str


def _group_by_eta(samples):
    groups = {}
    for s in samples:
        groups.setdefault(float(s.eta), []).append(s)
    return dict(sorted(groups.items()))


def _mean_steps(group, eta):
    n_censored = sum(1 for s in group if s.censored)
    if n_censored / len(group) > CENSOR_LIMIT:
        raise TooCensored(
            f"{n_censored}/{len(group)} censored runs at eta={eta} "
            f"exceed the {CENSOR_LIMIT:.0%} limit"
        )
    steps = [s.steps for s in group if not s.censored]
    return float(np.mean(steps)), n_censored


def fit_loglinear(samples, theory_slope=0.0, use_median=False):
    """OLS of ln(mean tau per eta) on 1/eta, plus a fixed-slope theory fit.

    ``use_median`` switches the per-eta location estimate to the median as a
    robustness diagnostic; the headline fit uses the mean.
    """
    groups = _group_by_eta(samples)
    if len(groups) < 2:
        raise DegenerateDesign(
            f"need >= 2 distinct etas for a fit, got {len(groups)}"
        )
    xs = []
    ys = []
    for eta, group in groups.items():
        if use_median:
            n_censored = sum(1 for s in group if s.censored)
            if n_censored / len(group) > CENSOR_LIMIT:
                raise TooCensored(
                    f"{n_censored}/{len(group)} censored runs at eta={eta}"
                )
            loc = float(np.median([s.steps for s in group if not s.censored]))
        else:
            loc, _ = _mean_steps(group, eta)
        xs.append(1.0 / eta)
        ys.append(np.log(max(loc, 1.0)))
    x = np.array(xs)
    y = np.array(ys)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    # fixed-slope fit: re-fit intercept only
    c_theory = float(np.mean(y - theory_slope * x))
    resid_t = y - (theory_slope * x + c_theory)
    r2_t = 1.0 - float(np.sum(resid_t**2)) / ss_tot if ss_tot > 0 else 1.0
    return RegressionFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=max(0.0, min(1.0, r2)),
        n_points=len(groups),
        theory_slope=float(theory_slope),
        theory_r_squared=max(0.0, min(1.0, r2_t)),
    )


def summarize(samples):
    """Per-eta quantile table; type-7 (linear interpolation) quantiles.

    Returns a list of dict rows sorted by eta.
    """
    rows = []
    for eta, group in _group_by_eta(samples).items():
        steps = np.array(sorted(s.steps for s in group if not s.censored))
        n_censored = sum(1 for s in group if s.censored)
        if steps.size == 0:
            rows.append({
                "eta": eta, "n": 0, "censored": n_censored,
                "min": np.nan, "q25": np.nan, "median": np.nan,
                "q75": np.nan, "max": np.nan, "mean": np.nan,
                "stderr": np.nan,
            })
            continue
        q25, q50, q75 = np.quantile(steps, [0.25, 0.5, 0.75])
        stderr = float(steps.std(ddof=1) / np.sqrt(steps.size)) \
            if steps.size > 1 else 0.0
        rows.append({
            "eta": eta,
            "n": int(steps.size),
            "censored": n_censored,
            "min": float(steps.min()),
            "q25": float(q25),
            "median": float(q50),
            "q75": float(q75),
            "max": float(steps.max()),
            "mean": float(steps.mean()),
            "stderr": stderr,
        })
    return rows


def compare_report(fit, theory_slope, tolerance, floor=0.0,
                   r_squared_threshold=0.9):
    """PASS/FAIL verdict of the fitted slope against the predicted energy.

    PASS iff |slope - theory| <= tolerance * max(theory, floor) and
    r_squared >= threshold.  The floor turns the relative bound into an
    absolute one for zero-energy landscapes, where the predicted slope
    vanishes and any relative tolerance would be vacuous.
    """
    scale = max(theory_slope, floor)
    slope_ok = abs(fit.slope - theory_slope) <= tolerance * scale
    # zero-energy regime: a flat scaling law fits noise; skip the r2 gate
    r2_ok = fit.r_squared >= r_squared_threshold or theory_slope <= 0.0
    reasons = []
    if not slope_ok:
        reasons.append(
            f"|slope {fit.slope:.6g} - theory {theory_slope:.6g}| "
            f"> {tolerance:.3g} * {scale:.6g}"
        )
    if not r2_ok:
        reasons.append(
            f"r_squared {fit.r_squared:.4f} < {r_squared_threshold:.4f}"
        )
    return Verdict(
        passed=slope_ok and r2_ok,
        slope=fit.slope,
        theory_slope=theory_slope,
        tolerance=tolerance,
        floor=floor,
        r_squared=fit.r_squared,
        r_squared_threshold=r_squared_threshold,
        reason="; ".join(reasons) if reasons else "ok",
    )


def fit_csv(fit):
    return (
        "slope,intercept,r_squared,n_points,theory_slope,theory_r_squared\n"
        f"{fit.slope!r},{fit.intercept!r},{fit.r_squared!r},{fit.n_points},"
        f"{fit.theory_slope!r},{fit.theory_r_squared!r}\n"
    )


def summary_csv(rows):
    header = "eta,n,censored,min,q25,median,q75,max,mean,stderr"
    lines = [header]
    for r in rows:
        lines.append(
            f"{r['eta']!r},{r['n']},{r['censored']},{r['min']!r},{r['q25']!r},"
            f"{r['median']!r},{r['q75']!r},{r['max']!r},{r['mean']!r},"
            f"{r['stderr']!r}"
        )
    return "\n".join(lines) + "\n"


def plot_data_csv(samples, fit):
    """Per-eta scatter plus both fitted lines, ready for external plotting."""
    lines = ["inv_eta,ln_mean_tau,data_fit,theory_fit"]
    groups = _group_by_eta(samples)
    ys = []
    xs = []
    for eta, group in groups.items():
        steps = [s.steps for s in group if not s.censored]
        xs.append(1.0 / eta)
        ys.append(float(np.log(max(np.mean(steps), 1.0))))
    x = np.array(xs)
    y = np.array(ys)
    c_theory = float(np.mean(y - fit.theory_slope * x))
    for xi, yi in zip(x, y):
        lines.append(
            f"{xi!r},{yi!r},{fit.slope * xi + fit.intercept!r},"
            f"{fit.theory_slope * xi + c_theory!r}"
        )
    return "\n".join(lines) + "\n"


def verdict_text(v):
    status = "PASS" if v.passed else "FAIL"
    return (
        f"{status}: slope={v.slope:.6g} theory={v.theory_slope:.6g} "
        f"tol={v.tolerance:.3g} floor={v.floor:.6g} "
        f"r2={v.r_squared:.4f} ({v.reason})\n"
    )
