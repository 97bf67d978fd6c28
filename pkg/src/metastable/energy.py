"""Exact forest calculus on the transition graph.

The energy of the target set is the minimal total cost over transition
forests (every non-target node keeps exactly one out-edge and drains into
the target set); the pruned energy removes one edge so the start node no
longer reaches the targets.  Both are exact combinatorial minima obtained
by pruned depth-first enumeration; ties resolve to the lexicographically
smallest out-edge map so witnesses are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DisconnectedNeighborGraph, InfeasibleGraph, TooLarge
from .landscape import Kind

MAX_NONTARGET = 10


@dataclass
class TransitionForest:
    out_edge: dict[int, int]
    cost: float


@dataclass
class Pruning:
    out_edge: dict[int, int]
    cost: float


@dataclass
class EnergyReport:
    energy_t: float
    pruned: dict[int, float]
    relative: dict[int, float]
    witness_forest: TransitionForest
    witness_prunings: dict[int, Pruning]
    spurious: list[int]


def _check(g):
    if not g.closed:
        raise ValueError("graph must be chain-closed before energy computation")
    if not g.target_set:
        raise ValueError("target set is empty")
    nt = g.nontarget()
    if len(nt) > MAX_NONTARGET:
        raise TooLarge(
            f"{len(nt)} non-target nodes exceed the enumeration bound "
            f"{MAX_NONTARGET}"
        )
    return np.array(nt, dtype=np.int64)


def _succ_to_map(succ):
    return {int(i): int(s) for i, s in enumerate(succ) if s >= 0}


def energy(g):
    """Minimal transition-forest cost toward the target set, with witness."""
    nt = _check(g)
    cost, succ = _kernels.best_forest(g.q, nt)
    if not np.isfinite(cost):
        raise InfeasibleGraph("no transition forest exists")
    return float(cost), TransitionForest(_succ_to_map(succ), float(cost))


def pruned_energy(g, start):
    """Minimal cost to sever the start node from the target set, with witness."""
    nt = _check(g)
    if g.is_target(start):
        raise ValueError(f"start node {start} is a target")
    cost, succ = _kernels.best_pruning(g.q, nt, start)
    if not np.isfinite(cost):
        raise InfeasibleGraph(f"no pruning of node {start} exists")
    return float(cost), Pruning(_succ_to_map(succ), float(cost))


def relative_energy(g, start):
    """Energy of the target set relative to a starting node; non-negative."""
    e, _ = energy(g)
    p, _ = pruned_energy(g, start)
    return max(0.0, e - p)


def score(g, out_edge):
    """Total cost of an explicit out-edge map (witness re-scoring)."""
    return float(sum(g.q[i, j] for i, j in out_edge.items()))


def has_spurious_minima(g):
    """(flag, witnesses): non-target nodes that are local minima."""
    witnesses = [
        i for i in g.nontarget() if g.kinds[i] == Kind.MINIMUM
    ]
    return bool(witnesses), witnesses


def energy_report(g):
    """Full energy summary: E(T), per-node pruned and relative energies."""
    e, forest = energy(g)
    pruned = {}
    relative = {}
    witness_prunings = {}
    for j in g.nontarget():
        pj, wit = pruned_energy(g, j)
        pruned[j] = pj
        relative[j] = max(0.0, e - pj)
        witness_prunings[j] = wit
    _, spurious = has_spurious_minima(g)
    return EnergyReport(
        energy_t=e,
        pruned=pruned,
        relative=relative,
        witness_forest=forest,
        witness_prunings=witness_prunings,
        spurious=spurious,
    )


def energy_from_point(g, obj, x, cps, basin_fn=None):
    """Initialization-dependent energy for a starting point.

    Uses the attractor of x under the gradient flow: descent to the
    attractor costs nothing, and chained costs out of the attractor
    approximate the point-to-node transition costs.
    """
    from .landscape import basin_of

    basin_fn = basin_fn or basin_of
    att = basin_fn(obj, x, cps)
    if g.is_target(att):
        return 0.0
    rep = energy_report(g)
    best = 0.0
    for j in g.nontarget():
        qxj = 0.0 if j == att else float(g.q[att, j])
        best = max(best, rep.relative[j] - qxj)
    return max(0.0, best)


def neighbor_graph(g):
    """Basin-adjacency graph over minima: edges where basin closures meet.

    Two minima are neighbors when some saddle has direct connections to
    both; the edge level f_ij is the lowest such saddle value.
    """
    minima = [i for i in g.node_ids if g.kinds[i] == Kind.MINIMUM]
    levels = {}
    for s in g.node_ids:
        if g.kinds[s] not in (Kind.SADDLE, Kind.MAXIMUM):
            continue
        ends = sorted({j for (a, j) in g.edges if a == s and j in minima})
        for ii in range(len(ends)):
            for jj in range(ii + 1, len(ends)):
                key = (ends[ii], ends[jj])
                lv = float(g.values[s])
                if key not in levels or lv < levels[key]:
                    levels[key] = lv
    adj = {i: {} for i in minima}
    for (i, j), lv in levels.items():
        adj[i][j] = lv
        adj[j][i] = lv
    return adj


def _paths_to_targets(adj, start, targets):
    """All simple paths from start to any target in the neighbor graph."""
    out = []
    stack = [(start, [start])]
    while stack:
        node, path = stack.pop()
        if node in targets and len(path) > 1:
            out.append(path)
            continue
        if node in targets:
            out.append(path)
            continue
        for nxt in sorted(adj[node]):
            if nxt not in path:
                stack.append((nxt, path + [nxt]))
    return out


def _lower_reach_cost(adj, values, start, var_up):
    """Cheapest unavoidable-upward-jump cost from start to each minimum."""
    # Dijkstra-like relaxation on the bottleneck cost: the jump to cross an
    # edge is measured from the running minimum of visited node values.
    import heapq

    best = {start: 0.0}
    heap = [(0.0, values[start], start)]
    while heap:
        cost, running_min, node = heapq.heappop(heap)
        if cost > best.get(node, np.inf):
            continue
        for nxt, level in adj[node].items():
            jump = max(0.0, level - running_min)
            ncost = max(cost, 2.0 * jump / var_up)
            nmin = min(running_min, values[nxt])
            if ncost < best.get(nxt, np.inf):
                best[nxt] = ncost
                heapq.heappush(heap, (ncost, nmin, nxt))
    return best


def bottleneck_bound(adj, values, targets, start, var_low, var_up=None, r=None,
                     pruned_start=None):
    """Interpretable ceiling on the relative energy via minimax path depth.

    For each candidate minimum j whose lower-bound reach cost from the start
    is at most r (default: the start's pruned energy), take the cheapest
    path from j to the target set under the cost
    c(P) = max over hops of max(f_hop - f_current, f_hop - f_j);
    the bound is 2 max_j min_P c(P) / var_low.
    """
    values = np.asarray(values, dtype=float)
    var_up = var_up or var_low
    if start not in adj:
        raise DisconnectedNeighborGraph(f"start {start} missing from neighbor graph")
    if r is None:
        if pruned_start is None:
            raise ValueError("provide r or pruned_start")
        r = pruned_start
    reach = _lower_reach_cost(adj, values, start, var_up)
    candidates = [j for j, c in reach.items() if c <= r + 1e-15]
    best_overall = 0.0
    for j in candidates:
        if j in targets:
            continue
        paths = _paths_to_targets(adj, j, targets)
        if not paths:
            raise DisconnectedNeighborGraph(
                f"no neighbor-graph path from {j} to the target set"
            )
        best_path = np.inf
        for path in paths:
            c = 0.0
            for a, b in zip(path[:-1], path[1:]):
                level = adj[a][b]
                c = max(c, max(level - values[a], level - values[j]))
            best_path = min(best_path, c)
        best_overall = max(best_overall, best_path)
    return 2.0 * max(0.0, best_overall) / var_low


def energy_csv(rep):
    lines = ["node,pruned_energy,relative_energy"]
    for j in sorted(rep.pruned):
        lines.append(f"{j},{rep.pruned[j]!r},{rep.relative[j]!r}")
    return "\n".join(lines) + "\n"


def energy_text(rep):
    lines = [f"E(T) = {rep.energy_t!r}"]
    lines.append(
        "spurious minima: "
        + (", ".join(str(i) for i in rep.spurious) if rep.spurious else "none")
    )
    lines.append("witness forest: " + _fmt_edges(rep.witness_forest.out_edge))
    for j in sorted(rep.pruned):
        lines.append(
            f"node {j}: E({j}-/->T) = {rep.pruned[j]!r}, "
            f"E(T|{j}) = {rep.relative[j]!r}, "
            f"pruning {_fmt_edges(rep.witness_prunings[j].out_edge)}"
        )
    return "\n".join(lines) + "\n"


def _fmt_edges(out_edge):
    if not out_edge:
        return "{}"
    return "{" + ", ".join(f"{i}->{j}" for i, j in sorted(out_edge.items())) + "}"
