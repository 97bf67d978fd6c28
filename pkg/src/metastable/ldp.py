"""Large-deviations primitives: Hamiltonian, Lagrangian, action, and the
minimum-action path optimizer.

Conventions.  The stochastic update is x' = x - eta * (grad f(x) + err), so
the zero-cost velocity is the descent drift -grad f(x).  The Hamiltonian is
the log moment generating function of the negated stochastic gradient,

    H(x, p) = log E exp(-<p, grad f(x) + err>),

and the Lagrangian is its convex conjugate in p.  With isotropic Gaussian
noise these reduce to H = -<p, g> + s2 |p|^2 / 2 and L = |v + g|^2 / (2 s2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import (
    NonConvergence,
    PreconditionViolated,
    QuadratureFailure,
    UnsupportedModel,
)
from .noise import (
    FiniteSupport,
    IsotropicGaussian,
    StateDependentGaussian,
    TruncatedGaussian,
    truncation_radius_floor,
)

GAUSS_HERMITE_ORDER = 64
MAX_QUADRATURE_DIM = 3

# conjugate (inner maximization) parameters
CONJ_MAX_ITER = 200
CONJ_GRAD_TOL = 1e-10

# path optimizer parameters
MAM_NODES = 100
MAM_MAX_ITER = 5000
MAM_REPARAM_EVERY = 10
MAM_STALL_ITERS = 50
MAM_STALL_DECREASE = 1e-8


def _variance_of(noise, f_at_x):
    if isinstance(noise, IsotropicGaussian):
        return noise.variance
    if isinstance(noise, StateDependentGaussian):
        if f_at_x is None:
            raise UnsupportedModel(
                "state-dependent noise requires the objective value at x"
            )
        return noise.variance_at(f_at_x)
    raise UnsupportedModel(f"no closed-form variance for {type(noise).__name__}")


def _hermite_grid(noise):
    """Cached tensor Gauss-Hermite grid for truncated-Gaussian expectations."""
    cached = getattr(noise, "_gh_cache", None)
    if cached is not None:
        return cached
    d = noise.dim
    if d > MAX_QUADRATURE_DIM:
        raise UnsupportedModel(
            f"truncated-Gaussian quadrature capped at dim {MAX_QUADRATURE_DIM}"
        )
    t, w = np.polynomial.hermite_e.hermegauss(GAUSS_HERMITE_ORDER)
    grids = np.meshgrid(*([t] * d), indexing="ij")
    pts = np.sqrt(noise.variance) * np.stack([g.ravel() for g in grids], axis=1)
    logw = np.zeros(pts.shape[0])
    for j in range(d):
        wj = np.log(w)
        idx = np.unravel_index(np.arange(pts.shape[0]), (GAUSS_HERMITE_ORDER,) * d)[j]
        logw += wj[idx]
    inside = np.linalg.norm(pts, axis=1) <= noise.radius
    pts = pts[inside]
    logw = logw[inside]
    # normalize to the conditional law on the ball
    logw = logw - logsumexp(logw)
    noise._gh_cache = (pts, logw)
    return pts, logw


def hamiltonian(noise, grad_at_x, p, f_at_x=None):
    """log E exp(-<p, grad f(x) + err>) for the given noise model."""
    g = np.asarray(grad_at_x, dtype=float)
    p = np.asarray(p, dtype=float)
    if isinstance(noise, (IsotropicGaussian, StateDependentGaussian)):
        s2 = _variance_of(noise, f_at_x)
        return float(-p @ g + 0.5 * s2 * (p @ p))
    if isinstance(noise, FiniteSupport):
        return float(-p @ g + logsumexp(np.log(noise.probs) - noise.atoms @ p))
    if isinstance(noise, TruncatedGaussian):
        pts, logw = _hermite_grid(noise)
        return float(-p @ g + logsumexp(logw - pts @ p))
    raise UnsupportedModel(f"no Hamiltonian evaluator for {type(noise).__name__}")


def _hamiltonian_grad_p(noise, grad_at_x, p):
    """d/dp of the Hamiltonian (tilted mean of the negated oracle)."""
    g = np.asarray(grad_at_x, dtype=float)
    if isinstance(noise, FiniteSupport):
        logits = np.log(noise.probs) - noise.atoms @ p
        wts = np.exp(logits - logsumexp(logits))
        return -g - wts @ noise.atoms
    if isinstance(noise, TruncatedGaussian):
        pts, logw = _hermite_grid(noise)
        logits = logw - pts @ p
        wts = np.exp(logits - logsumexp(logits))
        return -g - wts @ pts
    raise UnsupportedModel(f"no Hamiltonian gradient for {type(noise).__name__}")


@dataclass
class ConjugateResult:
    value: float
    p_star: np.ndarray
    converged: bool
    iterations: int


def conjugate(noise, grad_at_x, v, f_at_x=None):
    """sup_p <v, p> - H(x, p) by warm-started gradient ascent with Armijo."""
    g = np.asarray(grad_at_x, dtype=float)
    v = np.asarray(v, dtype=float)
    if isinstance(noise, (IsotropicGaussian, StateDependentGaussian)):
        s2 = _variance_of(noise, f_at_x)
        r = v + g
        return ConjugateResult(float(r @ r / (2.0 * s2)), r / s2, True, 0)

    p = (v + g) / noise.proxy_variance

    def phi(pp):
        return float(v @ pp - hamiltonian(noise, g, pp))

    val = phi(p)
    converged = False
    it = 0
    for it in range(1, CONJ_MAX_ITER + 1):
        grad_phi = v - _hamiltonian_grad_p(noise, g, p)
        gn = np.linalg.norm(grad_phi)
        if gn <= CONJ_GRAD_TOL:
            converged = True
            break
        t = 1.0 / noise.proxy_variance
        accepted = False
        for _ in range(60):
            cand = p + t * grad_phi
            cand_val = phi(cand)
            if cand_val >= val + 1e-4 * t * gn * gn:
                p, val = cand, cand_val
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # concave and smooth: a failed line search means we are at the top
            converged = gn <= 1e3 * CONJ_GRAD_TOL
            break
    return ConjugateResult(val, p, converged, it)


def lagrangian(noise, grad_at_x, v, f_at_x=None):
    """Convex conjugate of the Hamiltonian; cost of moving with velocity v."""
    return conjugate(noise, grad_at_x, v, f_at_x).value


@dataclass
class DiscretePath:
    """Piecewise-linear curve: sample points with strictly increasing times."""

    points: np.ndarray  # (n, d)
    times: np.ndarray  # (n,)
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.times = np.asarray(self.times, dtype=float)
        if self.points.shape[0] != self.times.shape[0]:
            raise ValueError("points and times length mismatch")
        if self.points.shape[0] < 2:
            raise ValueError("a path needs at least two points")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def action(obj, noise, path, subsamples_per_segment=4):
    """Trapezoidal quadrature of L(x, dx/dt) along a piecewise-linear path."""
    if subsamples_per_segment < 1:
        raise ValueError("subsamples_per_segment must be >= 1")
    pts, ts = path.points, path.times
    total = 0.0
    s = subsamples_per_segment
    closed_form = isinstance(noise, (IsotropicGaussian, StateDependentGaussian))
    for i in range(pts.shape[0] - 1):
        dt = ts[i + 1] - ts[i]
        v = (pts[i + 1] - pts[i]) / dt
        taus = np.linspace(0.0, 1.0, s + 1)
        xs = pts[i] + taus[:, None] * (pts[i + 1] - pts[i])
        if closed_form:
            grads = np.asarray(obj.grad(xs), dtype=float)
            if isinstance(noise, StateDependentGaussian):
                s2 = np.array([noise.variance_at(fv) for fv in np.asarray(obj.f(xs))])
            else:
                s2 = noise.variance
            vals = np.sum((v[None, :] + grads) ** 2, axis=1) / (2.0 * s2)
        else:
            vals = np.array([
                lagrangian(noise, obj.grad(x), v, f_at_x=float(obj.f(x)))
                for x in xs
            ])
        total += dt * float(np.trapezoid(vals, taus))
    return total


def _segment_weights(obj, noise, mids):
    """1/sigma^2 at segment midpoints, plus its derivative factor d(w)/df."""
    if isinstance(noise, IsotropicGaussian):
        w = np.full(mids.shape[0], 1.0 / noise.variance)
        dw = np.zeros(mids.shape[0])
        return w, dw
    if isinstance(noise, StateDependentGaussian):
        fv = np.asarray(obj.f(mids), dtype=float)
        s2 = np.array([noise.variance_at(z) for z in fv])
        h = 1e-6 * (1.0 + np.abs(fv))
        s2p = np.array([
            (noise.variance_at(z + hh) - noise.variance_at(z - hh)) / (2 * hh)
            for z, hh in zip(fv, h)
        ])
        return 1.0 / s2, -s2p / s2**2
    raise UnsupportedModel(
        f"geometric action needs a Gaussian-type model, got {type(noise).__name__}"
    )


def geometric_action(obj, noise, nodes):
    """Parametrization-free action of a polyline (zero for descent flows)."""
    nodes = np.asarray(nodes, dtype=float)
    dx = np.diff(nodes, axis=0)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    g = np.asarray(obj.grad(mids), dtype=float)
    w, _ = _segment_weights(obj, noise, mids)
    seg = np.linalg.norm(dx, axis=1)
    gn = np.linalg.norm(g, axis=1)
    return float(np.sum(w * (gn * seg + np.sum(g * dx, axis=1))))


def _geometric_action_grad(obj, noise, nodes):
    """Analytic gradient of geometric_action with respect to interior nodes."""
    nodes = np.asarray(nodes, dtype=float)
    n, d = nodes.shape
    dx = np.diff(nodes, axis=0)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    g = np.asarray(obj.grad(mids), dtype=float)
    H = np.asarray(obj.hess(mids), dtype=float)
    w, dw = _segment_weights(obj, noise, mids)
    seg = np.linalg.norm(dx, axis=1)
    gn = np.sqrt(np.sum(g * g, axis=1) + 1e-30)
    seg_safe = np.sqrt(seg**2 + 1e-30)

    # per-segment pieces
    unit_dx = dx / seg_safe[:, None]
    Hg = np.einsum("ijk,ik->ij", H, g)
    Hdx = np.einsum("ijk,ik->ij", H, dx)
    ell = gn * seg + np.sum(g * dx, axis=1)
    # derivative through the midpoint (factor 1/2 applies to both end nodes)
    mid_term = 0.5 * (
        w[:, None] * (Hg * (seg / gn)[:, None] + Hdx)
        + (dw * ell)[:, None] * g
    )
    # derivative through dx (sign +1 at the right node, -1 at the left)
    dx_term = w[:, None] * (gn[:, None] * unit_dx + g)

    grad = np.zeros((n, d))
    grad[1:] += mid_term + dx_term
    grad[:-1] += mid_term - dx_term
    grad[0] = 0.0
    grad[-1] = 0.0
    return grad


def _reparametrize_arclength(nodes):
    """Redistribute nodes uniformly in arc length along the polyline."""
    seg = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0:
        return nodes
    target = np.linspace(0.0, s[-1], nodes.shape[0])
    out = np.column_stack([
        np.interp(target, s, nodes[:, j]) for j in range(nodes.shape[1])
    ])
    out[0] = nodes[0]
    out[-1] = nodes[-1]
    return out


def _times_from_speed(obj, nodes):
    """Assign segment times so the path speed matches the local |grad f|."""
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    g = np.asarray(obj.grad(mids), dtype=float)
    speed = np.linalg.norm(g, axis=1)
    floor = 1e-8 * (1.0 + float(np.max(speed, initial=0.0)))
    flagged = bool(np.any(speed[1:-1] < floor)) if speed.shape[0] > 2 else False
    speed = np.maximum(speed, floor)
    seg = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    dts = np.maximum(seg / speed, 1e-12)
    times = np.concatenate([[0.0], np.cumsum(dts)])
    return times, flagged


def minimize_action(obj, noise, from_point, to_point, n_nodes=MAM_NODES,
                    horizon=None, max_iter=MAM_MAX_ITER):
    """Locally minimal transition path and its action between two points.

    Gradient descent on interior node positions of a polyline with fixed
    endpoints, using the parametrization-free (geometric) form of the action;
    nodes are redistributed uniformly in arc length every few iterations and
    segment times are recovered from the speed-matching rule |dx/dt| = |grad f|.
    The reported action sequence is monotone (best-so-far is returned).
    ``horizon`` is accepted for interface compatibility; times are derived
    from the optimal reparametrization instead.
    """
    if n_nodes < 10:
        raise ValueError("n_nodes must be >= 10")
    a = np.asarray(from_point, dtype=float)
    b = np.asarray(to_point, dtype=float)
    if np.linalg.norm(b - a) < 1e-14:
        pts = np.vstack([a, b])
        return DiscretePath(pts, np.array([0.0, 1.0])), 0.0

    taus = np.linspace(0.0, 1.0, n_nodes)
    nodes = a[None, :] + taus[:, None] * (b - a)[None, :]
    surrogate = None
    if not isinstance(noise, (IsotropicGaussian, StateDependentGaussian)):
        # optimize under a variance-matched Gaussian surrogate, then score
        # the general model's geometric cost along the optimized polyline
        surrogate = noise
        noise = IsotropicGaussian(variance=_matched_variance(surrogate),
                                 dim=a.shape[0])

    val = geometric_action(obj, noise, nodes)
    best_val = val
    best_nodes = nodes.copy()
    step = 0.1 * float(np.linalg.norm(b - a)) / n_nodes
    stall = 0
    last_best = best_val
    for it in range(1, max_iter + 1):
        grad = _geometric_action_grad(obj, noise, nodes)
        gn = float(np.linalg.norm(grad))
        if gn < 1e-14:
            break
        t = step
        accepted = False
        for _ in range(40):
            cand = nodes - t * grad
            cand_val = geometric_action(obj, noise, cand)
            if cand_val < val - 1e-4 * t * gn * gn:
                nodes, val = cand, cand_val
                step = min(t * 1.5, 1e3 * step)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            step *= 0.5
        if val < best_val:
            best_val = val
            best_nodes = nodes.copy()
        if it % MAM_REPARAM_EVERY == 0:
            nodes = _reparametrize_arclength(nodes)
            val = geometric_action(obj, noise, nodes)
            if val < best_val:
                best_val = val
                best_nodes = nodes.copy()
        if it % MAM_STALL_ITERS == 0:
            if last_best - best_val < MAM_STALL_DECREASE:
                break
            last_best = best_val

    times, flagged = _times_from_speed(obj, best_nodes)
    path = DiscretePath(best_nodes, times)
    if flagged:
        path.flags.append("singular_speed_floored")
    if surrogate is not None:
        path.flags.append("gaussian_surrogate_path")
        best_val = _general_geometric_action(obj, surrogate, best_nodes)
    return path, float(max(best_val, 0.0))


def _matched_variance(noise):
    if isinstance(noise, FiniteSupport):
        cov = (noise.atoms * noise.probs[:, None]).T @ noise.atoms
        return float(np.trace(cov) / noise.dim)
    if isinstance(noise, TruncatedGaussian):
        return noise.variance
    raise UnsupportedModel(f"no matched variance for {type(noise).__name__}")


def _general_geometric_action(obj, noise, nodes, n_speeds=40):
    """sum_i inf_dt L(m_i, dx_i/dt) * dt along a polyline, by 1-D search."""
    nodes = np.asarray(nodes, dtype=float)
    total = 0.0
    for i in range(nodes.shape[0] - 1):
        dx = nodes[i + 1] - nodes[i]
        seg = np.linalg.norm(dx)
        if seg < 1e-14:
            continue
        m = 0.5 * (nodes[i] + nodes[i + 1])
        g = np.asarray(obj.grad(m), dtype=float)
        # bracket speeds around the drift speed
        s0 = max(np.linalg.norm(g), 1e-6)
        speeds = s0 * np.logspace(-1.5, 1.5, n_speeds)
        costs = [lagrangian(noise, g, s * dx / seg) / s for s in speeds]
        total += seg * float(min(costs))
    return total


def potential_transform(variance_fn, f_lo, f_hi):
    """2 * integral of 1/sigma^2(z) between two objective levels."""
    if f_lo == f_hi:
        return 0.0
    val, err = integrate.quad(lambda z: 1.0 / variance_fn(z), f_lo, f_hi,
                              epsrel=1e-10, epsabs=0, limit=200)
    if abs(val) > 0 and err / abs(val) > 1e-8:
        raise QuadratureFailure(
            f"relative error estimate {err / abs(val):.2e} exceeds 1e-8"
        )
    return 2.0 * val


@dataclass
class TruncationCertificate:
    error_factor: float
    hamiltonian_value: float
    hamiltonian_bounds: tuple[float, float]
    lagrangian_value: float
    lagrangian_bounds: tuple[float, float]

    @property
    def hamiltonian_ok(self):
        lo, hi = self.hamiltonian_bounds
        return lo <= self.hamiltonian_value <= hi

    @property
    def lagrangian_ok(self):
        lo, hi = self.lagrangian_bounds
        return lo <= self.lagrangian_value <= hi

    @property
    def ok(self):
        return self.hamiltonian_ok and self.lagrangian_ok


def certify_truncated_gaussian(noise, p, v):
    """Check the truncated-Gaussian sandwich around the Gaussian closed forms.

    The certified regime needs R >= 4 sigma sqrt((d+3) ln 2 + ln(d+1)),
    |p| <= R / (2 sigma^2) and |v| <= R / 4; the error factor is
    eps = 2^(d+3) (d+1) exp(-R^2 / (16 sigma^2)).
    """
    if not isinstance(noise, TruncatedGaussian):
        raise UnsupportedModel("certification applies to TruncatedGaussian only")
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    s2, r, d = noise.variance, noise.radius, noise.dim
    if r < truncation_radius_floor(s2, d):
        raise PreconditionViolated(
            f"radius {r} below certified floor {truncation_radius_floor(s2, d):.4f}"
        )
    if np.linalg.norm(p) > r / (2.0 * s2):
        raise PreconditionViolated("|p| exceeds R / (2 sigma^2)")
    if np.linalg.norm(v) > r / 4.0:
        raise PreconditionViolated("|v| exceeds R / 4")
    eps = noise.error_factor
    zero = np.zeros(d)
    h_val = hamiltonian(noise, zero, p)
    h_ref = 0.5 * s2 * float(p @ p)
    res = conjugate(noise, zero, v)
    if not res.converged:
        raise NonConvergence("conjugate maximization failed", best=res.value)
    l_ref = float(v @ v) / (2.0 * s2)
    pad = 1e-12 * (1.0 + abs(h_ref) + abs(l_ref))
    return TruncationCertificate(
        error_factor=eps,
        hamiltonian_value=h_val,
        hamiltonian_bounds=((1 - eps) * h_ref - pad, (1 + eps) * h_ref + pad),
        lagrangian_value=res.value,
        lagrangian_bounds=((1 - 2 * eps) * l_ref - pad, (1 + 2 * eps) * l_ref + pad),
    )
