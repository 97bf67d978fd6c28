"""Numba-accelerated hot loops.

Everything here operates on the packed-array form of polynomial gradients
(see ``Polynomial.packed_gradient``) so the SGD stepper and the gradient-flow
integrator stay allocation-free.  All kernels release the GIL, which lets the
Monte Carlo harness use plain threads.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# flow / sgd status codes
CAPTURED = 0
GRAD_ZERO = 1
DIVERGED = 2
STALLED = 3
RUNNING = 4
HIT = 5


@njit(cache=True, nogil=True, inline="always")
def _grad_packed(gp, gc, x, out, xp):
    # xp is a (d, max_exponent+1) scratch table of coordinate powers
    d = gp.shape[0]
    maxp = xp.shape[1] - 1
    for l in range(d):
        xp[l, 0] = 1.0
        for e in range(1, maxp + 1):
            xp[l, e] = xp[l, e - 1] * x[l]
    for j in range(d):
        s = 0.0
        for t in range(gp.shape[1]):
            c = gc[j, t]
            if c != 0.0:
                v = c
                for l in range(d):
                    v *= xp[l, gp[j, t, l]]
                s += v
        out[j] = s


@njit(cache=True, nogil=True, inline="always")
def _power_table(gp):
    maxp = 0
    for i in range(gp.shape[0]):
        for t in range(gp.shape[1]):
            for l in range(gp.shape[2]):
                if gp[i, t, l] > maxp:
                    maxp = gp[i, t, l]
    return np.empty((gp.shape[0], maxp + 1))


@njit(cache=True, nogil=True)
def flow_rk4(gp, gc, x0, dt, max_time, capture_radius, crit, lo, hi, grad_tol):
    """Integrate dx/dt = -grad f with classical RK4 until capture.

    Returns (status, crit_index, elapsed_time, x_final).  ``crit`` holds the
    known critical point locations; capture means distance < capture_radius.
    On GRAD_ZERO the nearest critical point index is reported as well.
    """
    d = x0.shape[0]
    x = x0.copy()
    k1 = np.empty(d)
    k2 = np.empty(d)
    k3 = np.empty(d)
    k4 = np.empty(d)
    tmp = np.empty(d)
    xp = _power_table(gp)
    n_steps = int(max_time / dt)
    t = 0.0
    for _ in range(n_steps):
        # capture / divergence checks
        best = -1
        for c in range(crit.shape[0]):
            dist2 = 0.0
            for j in range(d):
                dx = x[j] - crit[c, j]
                dist2 += dx * dx
            if dist2 < capture_radius * capture_radius:
                best = c
                break
        if best >= 0:
            return CAPTURED, best, t, x
        for j in range(d):
            if not np.isfinite(x[j]) or x[j] < lo[j] or x[j] > hi[j]:
                return DIVERGED, -1, t, x

        _grad_packed(gp, gc, x, k1, xp)
        gnorm2 = 0.0
        for j in range(d):
            gnorm2 += k1[j] * k1[j]
        if gnorm2 < grad_tol * grad_tol:
            best = 0
            bd = 1e300
            for c in range(crit.shape[0]):
                dist2 = 0.0
                for j in range(d):
                    dx = x[j] - crit[c, j]
                    dist2 += dx * dx
                if dist2 < bd:
                    bd = dist2
                    best = c
            return GRAD_ZERO, best, t, x

        for j in range(d):
            tmp[j] = x[j] - 0.5 * dt * k1[j]
        _grad_packed(gp, gc, tmp, k2, xp)
        for j in range(d):
            tmp[j] = x[j] - 0.5 * dt * k2[j]
        _grad_packed(gp, gc, tmp, k3, xp)
        for j in range(d):
            tmp[j] = x[j] - dt * k3[j]
        _grad_packed(gp, gc, tmp, k4, xp)
        for j in range(d):
            x[j] -= dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        t += dt
    return STALLED, -1, t, x


@njit(cache=True, nogil=True)
def sgd_chunk(gp, gc, x, eta, noise, targets, epsilon, step_offset, max_steps,
              record_every, record_buf, record_count):
    """Advance SGD through one pre-drawn noise chunk.

    ``x`` is updated in place.  Returns (status, steps_consumed) where status
    is HIT (capture), DIVERGED, or RUNNING (chunk exhausted or step cap hit
    mid-chunk; the caller distinguishes via step_offset + consumed).
    Every ``record_every``-th iterate (global step index) is appended to
    ``record_buf`` when record_every > 0; record_count[0] tracks the fill.
    """
    d = x.shape[0]
    g = np.empty(d)
    xp = _power_table(gp)
    eps2 = epsilon * epsilon
    for i in range(noise.shape[0]):
        if step_offset + i >= max_steps:
            return RUNNING, i
        _grad_packed(gp, gc, x, g, xp)
        for j in range(d):
            x[j] -= eta * (g[j] + noise[i, j])
        step = step_offset + i + 1
        for j in range(d):
            if not np.isfinite(x[j]) or abs(x[j]) > 1e12:
                return DIVERGED, i + 1
        if record_every > 0 and step % record_every == 0:
            k = record_count[0]
            if k < record_buf.shape[0]:
                for j in range(d):
                    record_buf[k, j] = x[j]
                record_count[0] = k + 1
        for c in range(targets.shape[0]):
            dist2 = 0.0
            for j in range(d):
                dx = x[j] - targets[c, j]
                dist2 += dx * dx
            if dist2 <= eps2:
                return HIT, i + 1
    return RUNNING, noise.shape[0]


@njit(cache=True, nogil=True)
def sgd_chunk2(C, x, eta, noise, targets, epsilon, step_offset, max_steps,
               record_every, record_buf, record_count):
    """Two-dimensional variant of sgd_chunk with a dense Horner gradient.

    ``C`` has shape (2, A, B) with grad_j = sum C[j,a,b] x^a y^b; keeping the
    state in scalar registers makes this several times faster than the
    packed-array kernel.
    """
    x0 = x[0]
    x1 = x[1]
    A = C.shape[1]
    B = C.shape[2]
    eps2 = epsilon * epsilon
    nt = targets.shape[0]
    status = RUNNING
    consumed = noise.shape[0]
    for i in range(noise.shape[0]):
        if step_offset + i >= max_steps:
            status = RUNNING
            consumed = i
            break
        g0 = 0.0
        g1 = 0.0
        for a in range(A - 1, -1, -1):
            t0 = 0.0
            t1 = 0.0
            for b in range(B - 1, -1, -1):
                t0 = t0 * x1 + C[0, a, b]
                t1 = t1 * x1 + C[1, a, b]
            g0 = g0 * x0 + t0
            g1 = g1 * x0 + t1
        x0 -= eta * (g0 + noise[i, 0])
        x1 -= eta * (g1 + noise[i, 1])
        if not (abs(x0) < 1e12 and abs(x1) < 1e12):
            status = DIVERGED
            consumed = i + 1
            break
        if record_every > 0:
            step = step_offset + i + 1
            if step % record_every == 0:
                k = record_count[0]
                if k < record_buf.shape[0]:
                    record_buf[k, 0] = x0
                    record_buf[k, 1] = x1
                    record_count[0] = k + 1
        hit = False
        for c in range(nt):
            d0 = x0 - targets[c, 0]
            d1 = x1 - targets[c, 1]
            if d0 * d0 + d1 * d1 <= eps2:
                hit = True
                break
        if hit:
            status = HIT
            consumed = i + 1
            break
    x[0] = x0
    x[1] = x1
    return status, consumed


@njit(cache=True, nogil=True)
def best_forest(q, nontarget):
    """Exact minimum-cost transition forest by pruned depth-first enumeration.

    Every node listed in ``nontarget`` receives exactly one successor (any
    other node); cycles are rejected incrementally.  Ties resolve to the
    lexicographically smallest successor map because candidates are scanned
    in ascending order and only strict improvements are kept.

    Returns (best_cost, successor_array) with successor -1 on target nodes.
    """
    n = q.shape[0]
    k = nontarget.shape[0]
    is_nt = np.zeros(n, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(k):
        is_nt[nontarget[i]] = 1
        pos[nontarget[i]] = i
    succ = np.full(n, -1, dtype=np.int64)
    choice = np.full(k, -1, dtype=np.int64)
    partial = np.zeros(k + 1)
    best_cost = np.inf
    best_succ = np.full(n, -1, dtype=np.int64)
    found = False
    if k == 0:
        return 0.0, best_succ

    depth = 0
    while depth >= 0:
        v = nontarget[depth]
        nxt = choice[depth] + 1
        advanced = False
        while nxt < n:
            if nxt != v:
                c = partial[depth] + q[v, nxt]
                if c < best_cost:
                    # incremental cycle check: walk assigned successors
                    w = nxt
                    ok = True
                    for _ in range(k + 1):
                        if w == v:
                            ok = False
                            break
                        if is_nt[w] == 0:
                            break
                        if pos[w] > depth or (pos[w] == depth) or succ[w] < 0:
                            break
                        w = succ[w]
                    if ok:
                        choice[depth] = nxt
                        succ[v] = nxt
                        partial[depth + 1] = c
                        advanced = True
                        break
            nxt += 1
        if not advanced:
            choice[depth] = -1
            succ[v] = -1
            depth -= 1
            continue
        if depth == k - 1:
            # complete assignment; acyclicity was enforced incrementally
            if partial[k] < best_cost:
                best_cost = partial[k]
                best_succ[:] = succ
                found = True
            succ[v] = -1
        else:
            depth += 1
    if not found:
        return np.inf, best_succ
    return best_cost, best_succ


@njit(cache=True, nogil=True)
def best_pruning(q, nontarget, start):
    """Exact minimum-cost pruning of ``start`` from the target set.

    One non-target node (the root ``w`` of the tree containing ``start``)
    keeps no out-edge; all other non-target nodes get exactly one successor,
    the result is acyclic, and the successor chain from ``start`` must end
    at ``w``.  Returns (best_cost, successor_array).
    """
    n = q.shape[0]
    k = nontarget.shape[0]
    best_cost = np.inf
    best_succ = np.full(n, -1, dtype=np.int64)
    found = False
    for wi in range(k):
        w = nontarget[wi]
        rest = np.empty(k - 1, dtype=np.int64)
        m = 0
        for i in range(k):
            if nontarget[i] != w:
                rest[m] = nontarget[i]
                m += 1
        cost, succ = _pruning_dfs(q, rest, w, start, best_cost)
        if cost < best_cost:
            best_cost = cost
            best_succ = succ
            found = True
    if not found:
        return np.inf, best_succ
    return best_cost, best_succ


@njit(cache=True, nogil=True)
def _pruning_dfs(q, assignable, root, start, bound):
    n = q.shape[0]
    k = assignable.shape[0]
    is_assignable = np.zeros(n, dtype=np.int64)
    for i in range(k):
        is_assignable[assignable[i]] = 1
    succ = np.full(n, -1, dtype=np.int64)
    best_succ = np.full(n, -1, dtype=np.int64)
    best_cost = bound
    found = False
    if k == 0:
        # empty pruning: valid iff the chain condition is trivially met
        if start == root:
            return 0.0, best_succ
        return np.inf, best_succ
    choice = np.full(k, -1, dtype=np.int64)
    partial = np.zeros(k + 1)
    depth = 0
    while depth >= 0:
        v = assignable[depth]
        nxt = choice[depth] + 1
        advanced = False
        while nxt < n:
            if nxt != v:
                c = partial[depth] + q[v, nxt]
                if c < best_cost:
                    w = nxt
                    ok = True
                    for _ in range(k + 1):
                        if w == v:
                            ok = False
                            break
                        if is_assignable[w] == 0 or succ[w] < 0:
                            break
                        w = succ[w]
                    if ok:
                        choice[depth] = nxt
                        succ[v] = nxt
                        partial[depth + 1] = c
                        advanced = True
                        break
            nxt += 1
        if not advanced:
            choice[depth] = -1
            succ[v] = -1
            depth -= 1
            continue
        if depth == k - 1:
            # chain from start must terminate at the edge-less root
            w = start
            steps = 0
            while succ[w] >= 0 and steps <= k + 1:
                w = succ[w]
                steps += 1
            if w == root and partial[k] < best_cost:
                best_cost = partial[k]
                best_succ[:] = succ
                found = True
            succ[v] = -1
        else:
            depth += 1
    if not found:
        return np.inf, best_succ
    return best_cost, best_succ
