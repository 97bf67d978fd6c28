"""Command-line pipeline: landscape analysis, simulation, fitting, verdicts.

Subcommands: analyze, simulate, fit, report, mam.  Every primary output file
is reproducible byte-for-byte given the same config and master seed; file
headers carry the tool version, a config hash, and the master seed.

Exit codes: 0 success (and PASS for report), 2 config error, 3 analysis
error, 4 simulation failure, 5 report verdict FAIL.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import load_manifest, serialize_manifest
from .energy import energy_csv, energy_from_point, energy_report, energy_text
from .errors import ConfigError, MetastableError
from .graph import (
    build_graph,
    build_graph_numeric,
    chain_closure,
    emit_dot,
    graph_csv,
)
from .landscape import (
    Kind,
    critical_points_csv,
    find_critical_points,
    saddle_connections,
)
from .ldp import minimize_action
from .simulate import HittingTimeSample, SgdConfig, monte_carlo, samples_csv
from .stats import (
    compare_report,
    fit_csv,
    fit_loglinear,
    plot_data_csv,
    summarize,
    summary_csv,
    verdict_text,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ANALYSIS = 3
EXIT_SIMULATE = 4
EXIT_VERDICT = 5


@dataclass
class Analysis:
    obj: object
    noise: object
    cps: object
    conns: list
    graph: object
    closed: object
    report: object
    x0: np.ndarray
    theory_slope: float


def config_hash(manifest):
    text = serialize_manifest(manifest)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _header(manifest):
    return [
        f"tool metastable {__version__}",
        f"config_hash {config_hash(manifest)}",
        f"master_seed {manifest.master_seed}",
    ]


def write_artifact(path, body, header_lines):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(body)


def default_start_node(cps):
    """Highest-value minimum: the natural spurious initialization."""
    minima = cps.of_kind(Kind.MINIMUM)
    if not minima:
        raise MetastableError("objective has no minima")
    return max(minima, key=lambda p: (p.value, p.index)).index


def resolve_x0(manifest, cps):
    if manifest.x0 is not None:
        return np.asarray(manifest.x0, dtype=float)
    node = manifest.x0_node
    if node is None:
        node = default_start_node(cps)
    loc = cps[node].location
    return loc + manifest.x0_offset * np.ones_like(loc)


def run_analysis(manifest):
    obj = manifest.build_objective()
    noise = manifest.build_noise(obj.dim)
    cps = find_critical_points(obj, manifest.grid_density)
    conns = saddle_connections(obj, cps)
    try:
        g = build_graph(cps, conns, noise,
                        target_override=manifest.target_nodes)
    except MetastableError:
        g = build_graph_numeric(obj, cps, conns, noise,
                                target_override=manifest.target_nodes)
    closed = chain_closure(g)
    rep = energy_report(closed)
    x0 = resolve_x0(manifest, cps)
    theory = energy_from_point(closed, obj, x0, cps)
    return Analysis(obj, noise, cps, conns, g, closed, rep, x0, theory)


def cmd_analyze(manifest, out_dir):
    a = run_analysis(manifest)
    hdr = _header(manifest)
    write_artifact(os.path.join(out_dir, "critical_points.csv"),
                   critical_points_csv(a.cps), hdr)
    write_artifact(os.path.join(out_dir, "graph.csv"), graph_csv(a.closed), hdr)
    write_artifact(os.path.join(out_dir, "graph.dot"), emit_dot(a.graph), hdr)
    write_artifact(os.path.join(out_dir, "energy.csv"), energy_csv(a.report), hdr)
    energy_body = energy_text(a.report) + (
        f"theory slope from x0 {a.x0.tolist()}: {a.theory_slope!r}\n"
    )
    write_artifact(os.path.join(out_dir, "energy.txt"), energy_body, hdr)
    return a


def _simulate_samples(manifest, analysis, jobs):
    targets = analysis.cps.locations()[sorted(analysis.closed.target_set)]
    base = SgdConfig(
        eta=manifest.etas[0],
        x0=analysis.x0,
        target_centers=targets,
        epsilon=manifest.epsilon,
        max_steps=manifest.max_steps,
    )
    return monte_carlo(
        analysis.obj, analysis.noise, base, manifest.etas,
        manifest.runs_per_eta, manifest.master_seed, jobs=jobs,
    )


def cmd_simulate(manifest, out_dir, jobs):
    analysis = run_analysis(manifest)
    path = os.path.join(out_dir, "samples.csv")
    try:
        samples = _simulate_samples(manifest, analysis, jobs)
    except Exception as e:
        write_artifact(path, f"# FAILED {type(e).__name__}: {e}\n",
                       _header(manifest))
        raise
    write_artifact(path, samples_csv(samples), _header(manifest))
    write_artifact(os.path.join(out_dir, "summary.csv"),
                   summary_csv(summarize(samples)), _header(manifest))
    return samples


def read_samples_csv(path):
    samples = []
    with open(path, encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            parts = line.split(",")
            row = dict(zip(header, parts))
            final = np.array([
                float(row[k]) for k in header if k.startswith("final_x")
            ])
            samples.append(HittingTimeSample(
                run_id=int(row["run_id"]),
                seed=int(row["seed"]),
                eta=float(row["eta"]),
                steps=int(row["steps"]),
                censored=bool(int(row["censored"])),
                final_point=final,
            ))
    return samples


def cmd_fit(manifest, out_dir, jobs, tolerance, slope_floor, r2_threshold):
    analysis = run_analysis(manifest)
    path = os.path.join(out_dir, "samples.csv")
    if os.path.exists(path):
        samples = read_samples_csv(path)
    else:
        samples = cmd_simulate(manifest, out_dir, jobs)
    fit = fit_loglinear(samples, theory_slope=analysis.theory_slope)
    if slope_floor == 0.0 and analysis.theory_slope <= 0.0:
        # zero-energy landscapes: call the law flat when the fitted slope
        # changes predictions by less than one log unit across the design
        inv = [1.0 / e for e in manifest.etas]
        slope_floor = 1.0 / (max(inv) - min(inv))
    hdr = _header(manifest)
    write_artifact(os.path.join(out_dir, "fit.csv"), fit_csv(fit), hdr)
    write_artifact(os.path.join(out_dir, "plot_data.csv"),
                   plot_data_csv(samples, fit), hdr)
    verdict = compare_report(
        fit, analysis.theory_slope, tolerance,
        floor=slope_floor, r_squared_threshold=r2_threshold,
    )
    return fit, verdict


def cmd_report(manifest, out_dir, jobs, tolerance, slope_floor, r2_threshold):
    cmd_analyze(manifest, out_dir)
    fit, verdict = cmd_fit(
        manifest, out_dir, jobs, tolerance, slope_floor, r2_threshold,
    )
    write_artifact(os.path.join(out_dir, "verdict.txt"),
                   verdict_text(verdict), _header(manifest))
    sys.stdout.write(verdict_text(verdict))
    return verdict


def cmd_mam(manifest, out_dir, from_node, to_node):
    obj = manifest.build_objective()
    noise = manifest.build_noise(obj.dim)
    cps = find_critical_points(obj, manifest.grid_density)
    path, cost = minimize_action(
        obj, noise, cps[from_node].location, cps[to_node].location,
    )
    lines = ["t," + ",".join(f"x{i + 1}" for i in range(obj.dim))]
    for t, pt in zip(path.times, path.points):
        lines.append(f"{t!r}," + ",".join(repr(float(v)) for v in pt))
    out = os.path.join(out_dir, f"mam_path_{from_node}_{to_node}.csv")
    write_artifact(out, "\n".join(lines) + "\n", _header(manifest))
    sys.stdout.write(f"action {cost!r}\n")
    return cost


def build_parser():
    ap = argparse.ArgumentParser(
        prog="metastable",
        description="Transition-graph energies and SGD hitting-time scaling",
    )
    ap.add_argument("command",
                    choices=["analyze", "simulate", "fit", "report", "mam"])
    ap.add_argument("--config", required=True, help="experiment manifest (INI)")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None,
                    help="override the manifest master seed")
    ap.add_argument("--output", default=None,
                    help="override the manifest output directory")
    ap.add_argument("--tolerance", type=float, default=0.25,
                    help="relative slope tolerance for report verdicts")
    ap.add_argument("--slope-floor", type=float, default=0.0,
                    help="absolute slope scale for zero-energy verdicts")
    ap.add_argument("--r2-threshold", type=float, default=0.9)
    ap.add_argument("--from-node", type=int, default=None,
                    help="mam: source critical point id")
    ap.add_argument("--to-node", type=int, default=None,
                    help="mam: destination critical point id")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        manifest = load_manifest(args.config)
        if args.seed is not None:
            manifest.master_seed = args.seed
        if args.output is not None:
            manifest.output_dir = args.output
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = manifest.output_dir
    try:
        if args.command == "analyze":
            cmd_analyze(manifest, out_dir)
            return EXIT_OK
        if args.command == "simulate":
            try:
                cmd_simulate(manifest, out_dir, args.jobs)
            except Exception as e:
                print(f"simulation error: {e}", file=sys.stderr)
                return EXIT_SIMULATE
            return EXIT_OK
        if args.command == "fit":
            cmd_fit(manifest, out_dir, args.jobs, args.tolerance,
                    args.slope_floor, args.r2_threshold)
            return EXIT_OK
        if args.command == "report":
            verdict = cmd_report(manifest, out_dir, args.jobs, args.tolerance,
                                 args.slope_floor, args.r2_threshold)
            return EXIT_OK if verdict.passed else EXIT_VERDICT
        if args.command == "mam":
            if args.from_node is None or args.to_node is None:
                print("mam requires --from-node and --to-node", file=sys.stderr)
                return EXIT_CONFIG
            cmd_mam(manifest, out_dir, args.from_node, args.to_node)
            return EXIT_OK
    except MetastableError as e:
        print(f"analysis error: {e}", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
