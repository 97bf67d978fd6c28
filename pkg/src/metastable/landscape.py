"""Objectives, critical points, basins, and saddle connectivity.

Critical points are located by damped Newton iteration on the gradient from
a uniform seed grid, deduplicated, and classified by Hessian signature.
Basin membership and heteroclinic (saddle-to-endpoint) connections come from
fixed-step RK4 integration of the gradient flow dx/dt = -grad f.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    FlowDiverged,
    FlowStalled,
    NoConvergence,
    UnresolvedConnection,
)
from .polynomials import Polynomial

# Gradient-flow integrator parameters: fixed-step RK4 is reproducible and
# adequate at the scale of the built-in landscapes.
FLOW_DT = 1e-3
CAPTURE_RADIUS = 1e-4
MAX_FLOW_TIME = 1e4
GRAD_STOP = 1e-10
DEDUPE_RADIUS = 1e-6
NEWTON_RESIDUAL = 1e-8
BOX_EXPAND = 0.5  # fractional expansion of the domain box for flow bounds


class Kind(enum.Enum):
    MINIMUM = "minimum"
    SADDLE = "saddle"
    MAXIMUM = "maximum"
    DEGENERATE = "degenerate"


@dataclass
class Objective:
    """A smooth objective with gradient/Hessian evaluators and a bounding box."""

    name: str
    dim: int
    f: callable
    grad: callable
    hess: callable
    domain_box: np.ndarray  # (dim, 2) of [lo, hi]
    polynomial: Polynomial | None = None

    def expanded_box(self, expand=BOX_EXPAND):
        lo = self.domain_box[:, 0]
        hi = self.domain_box[:, 1]
        pad = expand * (hi - lo)
        return lo - pad, hi + pad

    @property
    def box_diagonal(self):
        return float(np.linalg.norm(self.domain_box[:, 1] - self.domain_box[:, 0]))


def from_polynomial(name, poly, domain_box):
    box = np.asarray(domain_box, dtype=float)
    return Objective(
        name=name,
        dim=poly.dim,
        f=poly,
        grad=poly.grad,
        hess=poly.hess,
        domain_box=box,
        polynomial=poly,
    )


def _builtin_polynomials():
    camel = Polynomial(
        [[6, 0], [5, 0], [4, 0], [3, 0], [2, 0], [0, 2], [1, 1]],
        [2 / 13, 1 / 8, -91 / 64, -0.5, 21 / 8, 5 / 4, 1.0],
    )
    styblinski = Polynomial(
        [[4, 0], [2, 0], [1, 0], [0, 4], [0, 2], [0, 1]],
        [0.5, -8.0, 2.5, 0.5, -8.0, 2.5],
    )
    himmelblau = Polynomial(
        [[4, 0], [0, 4], [2, 1], [1, 2], [2, 0], [0, 2], [1, 0], [0, 1], [0, 0]],
        [1.0, 1.0, 2.0, 2.0, -21.0, -13.0, -14.0, -22.0, 170.0],
    )
    bowl = Polynomial([[2, 0], [0, 2]], [0.5, 0.5])
    return {
        "three_hump_camel_variant": (camel, [[-4.0, 4.0], [-4.0, 4.0]]),
        "styblinski_tang_2d": (styblinski, [[-5.0, 5.0], [-5.0, 5.0]]),
        "himmelblau": (himmelblau, [[-6.0, 6.0], [-6.0, 6.0]]),
        "quadratic_bowl": (bowl, [[-2.0, 2.0], [-2.0, 2.0]]),
    }


_BUILTINS = _builtin_polynomials()


def builtin_names():
    return sorted(_BUILTINS)


def get_objective(name):
    try:
        poly, box = _BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown objective {name!r}; known: {builtin_names()}")
    return from_polynomial(name, poly, box)


def check_gradients(obj, n_points=100, seed=0, h=1e-5):
    """Max relative error of grad vs central differences of f (and hess vs grad)."""
    rng = np.random.default_rng(seed)
    lo, hi = obj.domain_box[:, 0], obj.domain_box[:, 1]
    pts = lo + (hi - lo) * rng.random((n_points, obj.dim))
    worst_g = 0.0
    worst_h = 0.0
    for x in pts:
        g = np.asarray(obj.grad(x), dtype=float)
        H = np.asarray(obj.hess(x), dtype=float)
        for j in range(obj.dim):
            e = np.zeros(obj.dim)
            e[j] = h
            fd = (obj.f(x + e) - obj.f(x - e)) / (2 * h)
            scale = max(1.0, abs(g[j]))
            worst_g = max(worst_g, abs(fd - g[j]) / scale)
            fd_row = (np.asarray(obj.grad(x + e)) - np.asarray(obj.grad(x - e))) / (2 * h)
            hscale = np.maximum(1.0, np.abs(H[:, j]))
            worst_h = max(worst_h, float(np.max(np.abs(fd_row - H[:, j]) / hscale)))
    return worst_g, worst_h


@dataclass
class CriticalPoint:
    location: np.ndarray
    value: float
    hessian_eigs: np.ndarray  # ascending
    kind: Kind
    index: int


@dataclass
class CriticalPointSet:
    points: list[CriticalPoint] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def locations(self):
        return np.array([p.location for p in self.points])

    def values(self):
        return np.array([p.value for p in self.points])

    def of_kind(self, kind):
        return [p for p in self.points if p.kind == kind]

    def nearest(self, x):
        d = np.linalg.norm(self.locations() - np.asarray(x), axis=1)
        return self.points[int(np.argmin(d))]


def eig_tolerance(eigs):
    """Scale-aware degeneracy threshold."""
    return 1e-8 * (1.0 + float(np.max(np.abs(eigs))))


def classify(hessian_eigs, eig_tol):
    """Classify a critical point from its sorted Hessian eigenvalues."""
    eigs = np.asarray(hessian_eigs, dtype=float)
    if np.any(np.abs(eigs) <= eig_tol):
        return Kind.DEGENERATE
    if np.all(eigs > eig_tol):
        return Kind.MINIMUM
    if np.all(eigs < -eig_tol):
        return Kind.MAXIMUM
    return Kind.SADDLE


def _newton_refine(obj, x0, max_iter=100):
    """Damped Newton on grad f = 0 with backtracking on the gradient norm."""
    x = np.asarray(x0, dtype=float).copy()
    gn = np.linalg.norm(obj.grad(x))
    for _ in range(max_iter):
        if gn <= 1e-13:
            break
        g = np.asarray(obj.grad(x), dtype=float)
        H = np.asarray(obj.hess(x), dtype=float)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(H, g, rcond=None)
        if not np.all(np.isfinite(step)):
            return None
        t = 1.0
        for _ in range(40):
            xn = x - t * step
            gn_new = np.linalg.norm(obj.grad(xn))
            if gn_new < gn:
                break
            t *= 0.5
        else:
            return None
        x, gn = xn, gn_new
    if gn > NEWTON_RESIDUAL:
        return None
    return x


def find_critical_points(obj, grid_density=20):
    """Locate, deduplicate, and classify all critical points in the domain box.

    Seeds a uniform grid of ``grid_density`` points per axis and runs damped
    Newton from each.  Raises NoConvergence if no seed converges.
    """
    if grid_density < 2:
        raise ValueError("grid_density must be >= 2")
    axes = [
        np.linspace(lo, hi, grid_density)
        for lo, hi in obj.domain_box
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    seeds = np.stack([m.ravel() for m in mesh], axis=1)
    lo, hi = obj.expanded_box(0.05)
    found = []
    for s in seeds:
        x = _newton_refine(obj, s)
        if x is None:
            continue
        if np.any(x < lo) or np.any(x > hi):
            continue
        if any(np.linalg.norm(x - y) < DEDUPE_RADIUS for y in found):
            continue
        found.append(x)
    if not found:
        raise NoConvergence(
            f"Newton failed from all {len(seeds)} seeds on {obj.name!r}"
        )
    found.sort(key=lambda p: tuple(np.round(p, 9)))
    cps = CriticalPointSet()
    for i, x in enumerate(found):
        eigs = np.sort(np.linalg.eigvalsh(np.asarray(obj.hess(x), dtype=float)))
        kind = classify(eigs, eig_tolerance(eigs))
        cps.points.append(
            CriticalPoint(
                location=x,
                value=float(obj.f(x)),
                hessian_eigs=eigs,
                kind=kind,
                index=i,
            )
        )
    return cps


def _flow_python(obj, x0, dt, max_time, capture_radius, crit, lo, hi):
    x = np.asarray(x0, dtype=float).copy()
    t = 0.0
    n_steps = int(max_time / dt)
    for _ in range(n_steps):
        d2 = np.sum((crit - x) ** 2, axis=1)
        hit = int(np.argmin(d2))
        if d2[hit] < capture_radius**2:
            return _kernels.CAPTURED, hit, t, x
        if not np.all(np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
            return _kernels.DIVERGED, -1, t, x
        k1 = np.asarray(obj.grad(x), dtype=float)
        if np.linalg.norm(k1) < GRAD_STOP:
            return _kernels.GRAD_ZERO, hit, t, x
        k2 = np.asarray(obj.grad(x - 0.5 * dt * k1), dtype=float)
        k3 = np.asarray(obj.grad(x - 0.5 * dt * k2), dtype=float)
        k4 = np.asarray(obj.grad(x - dt * k3), dtype=float)
        x = x - dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return _kernels.STALLED, -1, t, x


def flow_to_capture(obj, x0, cps, dt=FLOW_DT, max_time=MAX_FLOW_TIME,
                    capture_radius=CAPTURE_RADIUS):
    """Integrate the gradient flow from x0 until a critical point captures it.

    Returns (status, critical_index, elapsed_time, final_point).
    """
    crit = cps.locations()
    lo, hi = obj.expanded_box()
    x0 = np.asarray(x0, dtype=float)
    if obj.polynomial is not None:
        gp, gc = obj.polynomial.packed_gradient()
        return _kernels.flow_rk4(
            gp, gc, x0.copy(), dt, max_time, capture_radius, crit, lo, hi,
            GRAD_STOP,
        )
    return _flow_python(obj, x0, dt, max_time, capture_radius, crit, lo, hi)


def basin_of(obj, x, cps):
    """Id of the critical point whose basin contains x (by RK4 flow)."""
    status, idx, _, xf = flow_to_capture(obj, x, cps)
    if status in (_kernels.CAPTURED, _kernels.GRAD_ZERO):
        return cps[idx].index
    if status == _kernels.DIVERGED:
        raise FlowDiverged(f"flow from {np.asarray(x)} left the expanded box at {xf}")
    raise FlowStalled(f"flow from {np.asarray(x)} exceeded max time without capture")


@dataclass
class SaddleConnection:
    saddle_id: int
    endpoint_ids: tuple[int, int]  # endpoints of the +/- unstable kicks
    orbit_samples: np.ndarray | None = None


def saddle_connections(obj, cps, record_orbits=False):
    """Unstable-manifold connections for every saddle (and maximum).

    Each unstable eigenvector yields two forward flow integrations from
    symmetric kicks off the critical point; both captured endpoints are
    recorded as one connection.
    """
    conns = []
    kick = max(1e-5 * obj.box_diagonal, 3 * CAPTURE_RADIUS)
    for cp in cps:
        if cp.kind not in (Kind.SADDLE, Kind.MAXIMUM):
            continue
        H = np.asarray(obj.hess(cp.location), dtype=float)
        eigvals, eigvecs = np.linalg.eigh(H)
        tol = eig_tolerance(eigvals)
        for k, lam in enumerate(eigvals):
            if lam >= -tol:
                continue
            v = eigvecs[:, k]
            ends = []
            orbits = []
            for sign in (+1.0, -1.0):
                x0 = cp.location + sign * kick * v
                status, idx, _, xf = flow_to_capture(obj, x0, cps)
                if status not in (_kernels.CAPTURED, _kernels.GRAD_ZERO):
                    raise UnresolvedConnection(
                        f"orbit from node {cp.index} (kick {sign:+.0f}) "
                        f"failed with status {status} at {xf}"
                    )
                ends.append(cps[idx].index)
                if record_orbits:
                    orbits.append(xf)
            conns.append(
                SaddleConnection(
                    saddle_id=cp.index,
                    endpoint_ids=(ends[0], ends[1]),
                    orbit_samples=np.array(orbits) if record_orbits else None,
                )
            )
    return conns


def critical_points_csv(cps):
    """CSV table: id, x1..xd, value, kind, eig_min, eig_max."""
    if len(cps) == 0:
        return "id,value,kind,eig_min,eig_max\n"
    d = cps[0].location.shape[0]
    cols = ",".join(f"x{i + 1}" for i in range(d))
    lines = [f"id,{cols},value,kind,eig_min,eig_max"]
    for p in cps:
        xs = ",".join(repr(float(v)) for v in p.location)
        lines.append(
            f"{p.index},{xs},{p.value!r},{p.kind.value},"
            f"{float(p.hessian_eigs[0])!r},{float(p.hessian_eigs[-1])!r}"
        )
    return "\n".join(lines) + "\n"
