"""Weighted directed transition graph over critical points.

Nodes are critical points, direct edges come from saddle connectivity, and
edge costs are the exponential transition rates (per unit inverse step-size):
for isotropic Gaussian noise the direct cost is 2 (f_j - f_i)_+ / sigma^2,
for value-dependent Gaussian variance it is the positive part of the
potential-transform difference.  A min-plus closure over non-target
intermediates turns direct costs into full chained costs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateNode, NoProbePath, StillInfinite, UnsupportedModel
from .landscape import Kind
from .ldp import minimize_action, potential_transform
from .noise import IsotropicGaussian, StateDependentGaussian, gaussian_like

MAX_NODES = 32
VALUE_TOL = 1e-9


@dataclass
class TransitionGraph:
    node_ids: list[int]
    values: np.ndarray
    kinds: list[Kind]
    locations: np.ndarray
    q: np.ndarray  # (n, n) costs, np.inf for non-adjacent pairs before closure
    target_set: frozenset[int]
    edges: set[tuple[int, int]]  # direct (saddle-connection) edges
    closed: bool = False
    edge_flags: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.node_ids)

    def nontarget(self):
        return [i for i in self.node_ids if i not in self.target_set]

    def is_target(self, i):
        return i in self.target_set


def target_nodes(values, override=None, tol=VALUE_TOL):
    """Indices attaining the minimum value, within a scale-aware tolerance."""
    values = np.asarray(values, dtype=float)
    if override is not None:
        t = frozenset(int(i) for i in override)
        if not t:
            raise ValueError("target override must be nonempty")
        return t
    vmin = float(values.min())
    return frozenset(
        int(i) for i in np.flatnonzero(values <= vmin + tol * (1.0 + abs(vmin)))
    )


def direct_edges(conns):
    """Directed edge set implied by saddle connections (both directions)."""
    edges = set()
    for c in conns:
        for e in c.endpoint_ids:
            if e != c.saddle_id:
                edges.add((c.saddle_id, e))
                edges.add((e, c.saddle_id))
    return edges


def _check_nodes(cps):
    if len(cps) == 0:
        raise ValueError("empty critical point set")
    if len(cps) > MAX_NODES:
        raise ValueError(f"graph capped at {MAX_NODES} nodes, got {len(cps)}")
    for p in cps:
        if p.kind == Kind.DEGENERATE:
            raise DegenerateNode(f"node {p.index} is degenerate")


def build_graph(cps, conns, noise, target_override=None):
    """Direct-edge transition graph with closed-form Gaussian costs."""
    _check_nodes(cps)
    if not gaussian_like(noise):
        raise UnsupportedModel(
            "closed-form costs need Gaussian-type noise; use build_graph_numeric"
        )
    values = cps.values()
    n = len(cps)
    q = np.full((n, n), np.inf)
    np.fill_diagonal(q, 0.0)
    edges = direct_edges(conns)
    for (i, j) in edges:
        if isinstance(noise, IsotropicGaussian):
            q[i, j] = 2.0 * max(0.0, values[j] - values[i]) / noise.variance
        else:
            q[i, j] = max(
                0.0,
                potential_transform(noise.variance_fn, values[i], values[j]),
            )
    return TransitionGraph(
        node_ids=list(range(n)),
        values=values,
        kinds=[p.kind for p in cps],
        locations=cps.locations(),
        q=q,
        target_set=target_nodes(values, target_override),
        edges=edges,
    )


def build_graph_numeric(obj, cps, conns, noise, mam_config=None,
                        target_override=None):
    """Transition graph with direct-edge costs from minimum-action paths."""
    _check_nodes(cps)
    cfg = {"n_nodes": 100, "max_iter": 5000}
    cfg.update(mam_config or {})
    values = cps.values()
    n = len(cps)
    q = np.full((n, n), np.inf)
    np.fill_diagonal(q, 0.0)
    edges = direct_edges(conns)
    flags = {}
    for (i, j) in sorted(edges):
        path, cost = minimize_action(
            obj, noise, cps[i].location, cps[j].location,
            n_nodes=cfg["n_nodes"], max_iter=cfg["max_iter"],
        )
        q[i, j] = cost
        if path.flags:
            flags[(i, j)] = list(path.flags)
    return TransitionGraph(
        node_ids=list(range(n)),
        values=values,
        kinds=[p.kind for p in cps],
        locations=cps.locations(),
        q=q,
        target_set=target_nodes(values, target_override),
        edges=edges,
        edge_flags=flags,
    )


def chain_closure(g):
    """Min-plus closure of the cost matrix over non-target intermediates.

    Realizes chained transitions that avoid the target set en route; the
    result is idempotent.  Raises StillInfinite when the direct connection
    graph leaves some pair unreachable.
    """
    if g.n > 1:
        # Asm-style connectivity check on the undirected connection graph
        adj = {i: set() for i in g.node_ids}
        for (i, j) in g.edges:
            adj[i].add(j)
            adj[j].add(i)
        seen = {g.node_ids[0]}
        frontier = [g.node_ids[0]]
        while frontier:
            seen.update(nxt := set().union(*(adj[v] for v in frontier)) - seen)
            frontier = list(nxt)
        if len(seen) != g.n:
            missing = sorted(set(g.node_ids) - seen)
            raise StillInfinite(
                f"connection graph is disconnected; nodes {missing} are "
                f"unreachable from node {g.node_ids[0]}"
            )
    q = g.q.copy()
    for k in g.nontarget():
        q = np.minimum(q, q[:, k][:, None] + q[k, :][None, :])
    # entries can stay infinite when every chain between a pair must pass
    # through a target node; the forest calculus never uses those
    return TransitionGraph(
        node_ids=list(g.node_ids),
        values=g.values.copy(),
        kinds=list(g.kinds),
        locations=g.locations.copy(),
        q=q,
        target_set=g.target_set,
        edges=set(g.edges),
        closed=True,
        edge_flags=dict(g.edge_flags),
    )


def _lowest_connecting_saddle(g, i, j):
    """Value of the cheapest saddle with direct edges to both i and j."""
    best = None
    for k in g.node_ids:
        if g.kinds[k] == Kind.SADDLE and (i, k) in g.edges and (k, j) in g.edges:
            if best is None or g.values[k] < best:
                best = float(g.values[k])
    return best


def interpretable_bounds(obj, g, noise, probe_paths=None):
    """Per-direct-edge (lower, upper) cost bounds from objective geometry.

    Lower bound: twice the maximal unavoidable upward jump along the best
    probe path, over the high-variance proxy.  Upper bound: twice the climb
    to the basin-boundary minimizer (the lowest connecting saddle, or the
    edge target itself when the edge is a direct saddle hop), over the
    low-variance proxy.
    """
    var_up = noise.variance_high
    var_low = noise.variance_low
    out = {}
    for (i, j) in sorted(g.edges):
        if probe_paths and (i, j) in probe_paths:
            paths = probe_paths[(i, j)]
        else:
            paths = [[i, j]]
        if not paths:
            raise NoProbePath(f"no probe path supplied for edge {(i, j)}")
        best_jump = None
        for path in paths:
            jump = 0.0
            for a, b in zip(path[:-1], path[1:]):
                jump = max(jump, float(g.values[b] - g.values[a]))
            best_jump = jump if best_jump is None else min(best_jump, jump)
        lower = 2.0 * max(0.0, best_jump) / var_up

        boundary = _lowest_connecting_saddle(g, i, j)
        if boundary is None:
            # direct saddle hop: the boundary minimizer is the edge target
            boundary = float(max(g.values[i], g.values[j]))
        upper = 2.0 * max(0.0, boundary - float(g.values[i])) / var_low
        out[(i, j)] = (lower, upper)
    return out


def emit_dot(g):
    """Deterministic DOT rendering; target nodes are drawn doubled."""
    lines = ["digraph transition_graph {"]
    for i in g.node_ids:
        shape = "doublecircle" if g.is_target(i) else "circle"
        lines.append(
            f'  n{i} [label="{i}\\nf={g.values[i]:.6g}" shape={shape}];'
        )
    for (i, j) in sorted(g.edges):
        lines.append(f'  n{i} -> n{j} [label="{g.q[i, j]:.6g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_csv(g):
    """CSV rows (i, j, cost, is_direct_edge) for all finite entries."""
    lines = ["i,j,cost,is_direct_edge"]
    for i in g.node_ids:
        for j in g.node_ids:
            if i == j or not np.isfinite(g.q[i, j]):
                continue
            direct = int((i, j) in g.edges)
            lines.append(f"{i},{j},{g.q[i, j]!r},{direct}")
    return "\n".join(lines) + "\n"
