"""Headline acceptance checks for the full pipeline.

Each test prints exactly one PASS/FAIL line for its criterion.  The two
scaling-law experiments rerun the shipped experiment configs end to end
(a few billion SGD steps; a couple of minutes on one core).
"""

import os

import numpy as np
import pytest

import oracles
from graphutil import random_closed_graph
from metastable import (
    FiniteSupport,
    IsotropicGaussian,
    TruncatedGaussian,
    certify_truncated_gaussian,
    energy,
    fit_loglinear,
    from_polynomial,
    lagrangian,
    minimize_action,
    pruned_energy,
    relative_energy,
    summarize,
)
from metastable.cli import main, run_analysis, _simulate_samples
from metastable.config import load_manifest
from metastable.energy import energy_report, score
from metastable.polynomials import Polynomial

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _verdict(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"{status}: criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def _experiment(config_name):
    manifest = load_manifest(os.path.join(CONFIG_DIR, config_name))
    analysis = run_analysis(manifest)
    samples = _simulate_samples(manifest, analysis, jobs=1)
    fit = fit_loglinear(samples, theory_slope=analysis.theory_slope)
    return {
        "manifest": manifest,
        "analysis": analysis,
        "samples": samples,
        "fit": fit,
    }


@pytest.fixture(scope="module")
def camel_experiment():
    return _experiment("camel.ini")


@pytest.fixture(scope="module")
def himmelblau_experiment():
    return _experiment("himmelblau.ini")


def test_criterion_1_camel_scaling_law(camel_experiment):
    fit = camel_experiment["fit"]
    theory = camel_experiment["analysis"].theory_slope
    ratio = fit.slope / theory
    ok = (
        abs(fit.slope - theory) <= 0.20 * theory
        and fit.r_squared >= 0.90
        and fit.theory_r_squared >= 0.85
    )
    _verdict(
        "1 (camel scaling law)", ok,
        f"slope={fit.slope:.6g} theory={theory:.6g} ratio={ratio:.3f} "
        f"r2={fit.r_squared:.4f} theory_r2={fit.theory_r_squared:.4f}",
    )


def test_criterion_2_styblinski_tang_scaling_law():
    exp = _experiment("styblinski_tang.ini")
    fit = exp["fit"]
    theory = exp["analysis"].theory_slope
    ratio = fit.slope / theory
    ok = abs(fit.slope - theory) <= 0.25 * theory and fit.r_squared >= 0.90
    _verdict(
        "2 (Styblinski-Tang scaling law)", ok,
        f"slope={fit.slope:.6g} theory={theory:.6g} ratio={ratio:.3f} "
        f"r2={fit.r_squared:.4f} theory_r2={fit.theory_r_squared:.4f}",
    )


def test_criterion_3_himmelblau_zero_energy(camel_experiment,
                                            himmelblau_experiment):
    analysis = himmelblau_experiment["analysis"]
    rep = analysis.report
    all_zero = all(v == 0.0 for v in rep.relative.values()) \
        and analysis.theory_slope == 0.0
    fit = himmelblau_experiment["fit"]
    camel_energy = camel_experiment["analysis"].theory_slope
    slope_ok = abs(fit.slope) <= 0.05 * camel_energy

    camel_means = {
        row["eta"]: row["mean"]
        for row in summarize(camel_experiment["samples"])
    }
    him_means = {
        row["eta"]: row["mean"]
        for row in summarize(himmelblau_experiment["samples"])
    }
    shared = sorted(set(camel_means) & set(him_means))
    ratios = [camel_means[e] / him_means[e] for e in shared]
    means_ok = len(shared) >= 5 and min(ratios) >= 10.0

    ok = all_zero and slope_ok and means_ok
    _verdict(
        "3 (Himmelblau zero-energy regime)", ok,
        f"relative_all_zero={all_zero} slope={fit.slope:.3g} "
        f"bound={0.05 * camel_energy:.3g} "
        f"min_mean_ratio={min(ratios):.0f}x over {len(shared)} etas",
    )


def test_criterion_4_forest_calculus_oracle(camel, camel_roles):
    rng = np.random.default_rng(2024)
    mismatches = 0
    checked = 0
    for _ in range(200):
        g = random_closed_graph(rng, max_nontarget=6)
        e, forest = energy(g)
        be, _ = oracles.brute_energy(g.q, g.target_set)
        if e != be or score(g, forest.out_edge) != e:
            mismatches += 1
        for j in g.nontarget():
            p, _ = pruned_energy(g, j)
            bp, _ = oracles.brute_pruned(g.q, g.target_set, j)
            rel = relative_energy(g, j)
            if p != bp or rel != max(0.0, be - bp):
                mismatches += 1
            checked += 1

    # camel path graph closed form, exact in floating point
    r = camel_roles
    q = camel.graph.q
    closed_form = (
        q[r["mid"], r["s_t"]] + q[r["low"], r["s_mid"]]
        - min(q[r["mid"], r["s_mid"]], q[r["low"], r["s_mid"]])
    )
    rel = relative_energy(camel.closed, r["mid"])
    camel_ok = rel == closed_form

    ok = mismatches == 0 and camel_ok
    _verdict(
        "4 (forest-calculus oracle equivalence)", ok,
        f"200 random graphs, {checked} pruned energies, "
        f"{mismatches} mismatches; camel closed form exact={camel_ok}",
    )


def test_criterion_5_quasi_potential_consistency(camel, styblinski,
                                                 himmelblau):
    # positive-cost edges: strict relative 5%; downhill (zero-cost) edges:
    # numeric residual within 5% of the landscape's largest direct cost
    worst_rel = 0.0
    worst_edge = None
    n_edges = 0
    for scene in (camel, styblinski, himmelblau):
        scale = max(
            scene.graph.q[i, j] for (i, j) in scene.graph.edges
        )
        for (i, j) in sorted(scene.graph.edges):
            _, cost = minimize_action(
                scene.obj, scene.noise,
                scene.cps[i].location, scene.cps[j].location,
                n_nodes=80, max_iter=1200,
            )
            closed = scene.graph.q[i, j]
            err = abs(cost - closed) / (closed if closed > 0 else scale)
            n_edges += 1
            if err > worst_rel:
                worst_rel = err
                worst_edge = (scene.obj.name, i, j)

    poly = Polynomial([[2]], [0.5])
    obj1d = from_polynomial("half_square", poly, [[-2.0, 2.0]])
    _, cost1d = minimize_action(obj1d, IsotropicGaussian(1.0, 1),
                                [0.0], [1.0], n_nodes=60, max_iter=2000)
    q1d_ok = abs(cost1d - 1.0) <= 0.02

    ok = worst_rel <= 0.05 and q1d_ok
    _verdict(
        "5 (quasi-potential consistency)", ok,
        f"{n_edges} direct edges, worst relative error {worst_rel:.4f} "
        f"at {worst_edge}; 1-D quadratic cost={cost1d:.4f} (want 1.00 +/- 2%)",
    )


def test_criterion_6_lagrangian_properties():
    rng = np.random.default_rng(5)
    models = {
        "gaussian": IsotropicGaussian(2.0, 2),
        "truncated": TruncatedGaussian(1.0, 16.0, 2),
        "finite_support": FiniteSupport(
            [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            [0.25, 0.25, 0.25, 0.25],
        ),
    }
    violations = 0
    worst_gauss_gap = 0.0
    for name, noise in models.items():
        for _ in range(100):
            g = rng.normal(size=2)
            v = rng.normal(size=2)
            lb = np.sum((v + g) ** 2) / (2.0 * noise.proxy_variance)
            val = lagrangian(noise, g, v)
            if val < lb - 1e-10:
                violations += 1
            if name == "gaussian":
                worst_gauss_gap = max(worst_gauss_gap, abs(val - lb))

    noise = TruncatedGaussian(1.0, 16.0, 2)
    sandwich_ok = True
    for _ in range(10):
        p = rng.uniform(-1.5, 1.5, size=2)
        v = rng.uniform(-3.0, 3.0, size=2)
        cert = certify_truncated_gaussian(noise, p, v)
        sandwich_ok = sandwich_ok and cert.ok

    ok = violations == 0 and worst_gauss_gap <= 1e-10 and sandwich_ok
    _verdict(
        "6 (Lagrangian lower bound and truncation sandwich)", ok,
        f"300 probes, {violations} lower-bound violations, "
        f"gaussian equality gap {worst_gauss_gap:.2e}, "
        f"truncated sandwich ok={sandwich_ok} "
        f"(eps={noise.error_factor:.3e})",
    )


def test_criterion_7_worker_count_determinism(tmp_path):
    cfg = tmp_path / "exp.ini"
    out = tmp_path / "out"
    cfg.write_text(
        "[objective]\nname = quadratic_bowl\n"
        "[noise]\nkind = gaussian\nsigma = 0.5\n"
        "[experiment]\netas = 0.1 0.05\nruns_per_eta = 20\nepsilon = 0.2\n"
        "x0 = 1.5 -1.0\nmaster_seed = 3\nmax_steps = 100000\n"
        "grid_density = 5\n"
        f"[output]\ndir = {out}\n"
    )
    assert main(["simulate", "--config", str(cfg), "--jobs", "1"]) == 0
    first = {
        name: (out / name).read_bytes()
        for name in ("samples.csv", "summary.csv")
    }
    assert main(["simulate", "--config", str(cfg), "--jobs", "8"]) == 0
    same = all(
        (out / name).read_bytes() == blob for name, blob in first.items()
    )
    _verdict(
        "7 (worker-count determinism)", same,
        "samples.csv and summary.csv byte-identical for --jobs 1 vs 8"
        if same else "outputs differ between --jobs 1 and --jobs 8",
    )
