"""Constant-step-size SGD simulation and hitting-time Monte Carlo.

The stepper is ``x <- x - eta * (grad f(x) + err)`` with ``err`` drawn from a
noise model.  Hitting times count the first iterate within ``epsilon`` of any
target center (step 0 when the start already qualifies).  Polynomial
objectives with state-independent noise run through a compiled chunked
kernel; everything else falls back to a plain Python loop.

Determinism: each (eta index, run index) pair owns a seed stream spawned
from the master seed, so results are independent of worker count and
execution order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import Diverged
from .noise import StateDependentGaussian

DEFAULT_MAX_STEPS = 10_000_000
CHUNK = 1 << 16
DIVERGE_NORM = 1e12


@dataclass
class SgdConfig:
    eta: float
    x0: np.ndarray
    target_centers: np.ndarray  # (k, d)
    epsilon: float
    max_steps: int = DEFAULT_MAX_STEPS
    record_trajectory: bool = False

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        self.target_centers = np.atleast_2d(
            np.asarray(self.target_centers, dtype=float)
        )
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class HittingTimeSample:
    run_id: int
    seed: int
    eta: float
    steps: int
    censored: bool
    final_point: np.ndarray
    diverged: bool = False
    eta_index: int = 0
    run_index: int = 0


def run_seed_sequence(master_seed, eta_index, run_index):
    """Per-run seed stream; independent of worker scheduling."""
    return np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(int(eta_index), int(run_index))
    )


def _rng_from(ss):
    return np.random.Generator(np.random.Philox(ss))


def sgd_step(obj, noise, x, eta, rng):
    """One SGD update x - eta*(grad f(x) + err)."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(obj.grad(x), dtype=float)
    if isinstance(noise, StateDependentGaussian):
        err = noise.sample(rng, 1, f_value=float(obj.f(x)))[0]
    else:
        err = noise.sample(rng, 1)[0]
    xn = x - eta * (g + err)
    if not np.all(np.isfinite(xn)):
        raise Diverged(f"iterate overflowed at {x}")
    return xn


def _dist_to_targets(x, targets):
    return float(np.min(np.linalg.norm(targets - x, axis=1)))


def _run_python(obj, noise, cfg, rng, record_every, record):
    x = cfg.x0.copy()
    state_dep = isinstance(noise, StateDependentGaussian)
    for step in range(1, cfg.max_steps + 1):
        g = np.asarray(obj.grad(x), dtype=float)
        if state_dep:
            err = noise.sample(rng, 1, f_value=float(obj.f(x)))[0]
        else:
            err = noise.sample(rng, 1)[0]
        x = x - cfg.eta * (g + err)
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > DIVERGE_NORM):
            return step, False, True, x
        if record_every and step % record_every == 0:
            record.append(x.copy())
        if _dist_to_targets(x, cfg.target_centers) <= cfg.epsilon:
            return step, True, False, x
    return cfg.max_steps, False, False, x


def _run_kernel(obj, noise, cfg, rng, record_every, record):
    if obj.dim == 2:
        dense = obj.polynomial.dense_gradient2()

        def step_chunk(x, chunk, steps, record_buf, record_count):
            return _kernels.sgd_chunk2(
                dense, x, cfg.eta, chunk, cfg.target_centers, cfg.epsilon,
                steps, cfg.max_steps, record_every, record_buf, record_count,
            )
    else:
        gp, gc = obj.polynomial.packed_gradient()

        def step_chunk(x, chunk, steps, record_buf, record_count):
            return _kernels.sgd_chunk(
                gp, gc, x, cfg.eta, chunk, cfg.target_centers, cfg.epsilon,
                steps, cfg.max_steps, record_every, record_buf, record_count,
            )
    x = cfg.x0.copy()
    record_buf = np.empty((0, x.shape[0]))
    record_count = np.zeros(1, dtype=np.int64)
    if record_every:
        cap = cfg.max_steps // record_every + 1
        record_buf = np.empty((min(cap, 1_000_000), x.shape[0]))
    steps = 0
    while steps < cfg.max_steps:
        n = min(CHUNK, cfg.max_steps - steps)
        chunk = noise.sample(rng, n)
        status, consumed = step_chunk(x, chunk, steps, record_buf, record_count)
        steps += consumed
        if status == _kernels.HIT:
            if record_every:
                record.extend(record_buf[: record_count[0]].copy())
            return steps, True, False, x
        if status == _kernels.DIVERGED:
            if record_every:
                record.extend(record_buf[: record_count[0]].copy())
            return steps, False, True, x
    if record_every:
        record.extend(record_buf[: record_count[0]].copy())
    return cfg.max_steps, False, False, x


def run_to_hit(obj, noise, cfg, seed, record_every=0):
    """Run one SGD trajectory to capture, divergence, or the step cap.

    ``seed`` may be an integer or a SeedSequence.  Returns
    (HittingTimeSample, recorded_points).  Capture at step 0 is allowed
    when the start is already within epsilon of a target.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else \
        np.random.SeedSequence(int(seed))
    seed64 = int(ss.generate_state(1, np.uint64)[0])
    rng = _rng_from(ss)
    record = []
    if _dist_to_targets(cfg.x0, cfg.target_centers) <= cfg.epsilon:
        sample = HittingTimeSample(
            run_id=0, seed=seed64, eta=cfg.eta, steps=0, censored=False,
            final_point=cfg.x0.copy(),
        )
        return sample, record

    fast = obj.polynomial is not None and not isinstance(
        noise, StateDependentGaussian
    )
    runner = _run_kernel if fast else _run_python
    steps, hit, diverged, x = runner(obj, noise, cfg, rng, record_every, record)
    sample = HittingTimeSample(
        run_id=0, seed=seed64, eta=cfg.eta, steps=int(steps),
        censored=not hit, final_point=np.asarray(x, dtype=float),
        diverged=bool(diverged),
    )
    return sample, record


def subsampled_trace(obj, noise, cfg, seed, stride=None):
    """Every ``stride``-th iterate (default floor(1/eta)) until hit or cap."""
    if not cfg.record_trajectory:
        raise ValueError("cfg.record_trajectory must be true")
    if stride is None:
        stride = max(1, int(np.floor(1.0 / cfg.eta)))
    _, record = run_to_hit(obj, noise, cfg, seed, record_every=int(stride))
    return [np.asarray(p) for p in record]


def monte_carlo(obj, noise, base_cfg, etas, runs_per_eta, master_seed, jobs=1):
    """Hitting-time samples for every (eta, run) pair; order-deterministic.

    The per-run generator is spawned from (master_seed, eta index, run
    index), so the sample list is bit-identical for any worker count.
    """
    etas = [float(e) for e in etas]
    if len(set(etas)) != len(etas) or any(e <= 0 for e in etas):
        raise ValueError("etas must be positive and distinct")
    if runs_per_eta < 1:
        raise ValueError("runs_per_eta must be >= 1")

    tasks = [
        (ei, ri) for ei in range(len(etas)) for ri in range(runs_per_eta)
    ]

    def one(task):
        ei, ri = task
        cfg = SgdConfig(
            eta=etas[ei],
            x0=base_cfg.x0,
            target_centers=base_cfg.target_centers,
            epsilon=base_cfg.epsilon,
            max_steps=base_cfg.max_steps,
        )
        ss = run_seed_sequence(master_seed, ei, ri)
        sample, _ = run_to_hit(obj, noise, cfg, ss)
        sample.eta_index = ei
        sample.run_index = ri
        sample.run_id = ei * runs_per_eta + ri
        return sample

    if jobs <= 1:
        results = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, tasks))
    results.sort(key=lambda s: s.run_id)
    return results


def check_attracting_strength(obj, target_center, radius_grid, n_shell=10_000,
                              seed=0):
    """Shell-sampled attracting strength mu(R) around a target minimum.

    mu(R) = min over sampled points at distance R of
    <grad f(x), x - x*> / ||x - x*||^2.  Returns a report dict with per-radius
    mu, the max of mu(R) * R^2, and the radii where mu(R) <= 0 (the
    exponential lower-bound regime does not apply there).
    """
    x_star = np.asarray(target_center, dtype=float)
    d = x_star.shape[0]
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_shell, d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    mus = []
    for r in radius_grid:
        pts = x_star + r * dirs
        vals = np.array(
            [np.dot(obj.grad(p), p - x_star) for p in pts]
        ) / r**2
        mus.append(float(vals.min()))
    mus = np.array(mus)
    radii = np.asarray(radius_grid, dtype=float)
    return {
        "radii": radii,
        "mu": mus,
        "max_mu_r2": float(np.max(mus * radii**2)),
        "violations": [float(r) for r, m in zip(radii, mus) if m <= 0],
    }


def samples_csv(samples):
    """CSV serialization of Monte Carlo output."""
    if not samples:
        return "run_id,eta,seed,steps,censored\n"
    d = samples[0].final_point.shape[0]
    cols = ",".join(f"final_x{i + 1}" for i in range(d))
    lines = [f"run_id,eta,seed,steps,censored,{cols}"]
    for s in samples:
        xs = ",".join(repr(float(v)) for v in s.final_point)
        lines.append(
            f"{s.run_id},{s.eta!r},{s.seed},{s.steps},{int(s.censored)},{xs}"
        )
    return "\n".join(lines) + "\n"
