"""Compiled inner loops for the nonlinear sweeps (planar case).

For a fixed interior node ``i`` the second difference along direction ``j``
is affine in the nodal value ``t``:

    sd_j(t) = b_j * (s_j - t),   b_j = (2 - lam_j) / dh^2,
    s_j = (E_j - lam_j w_i) / (2 - lam_j),

where ``E_j`` is the sum of the two endpoint values and ``lam_j`` the total
barycentric weight of node ``i`` in them (non-zero only when ``dh`` < h).
"""

import math

import numpy as np
from numba import njit

BRACKET_FAIL = 1


@njit(cache=True)
def _node_coeffs(i, r, w, ep_nodes, ep_w, self_w, dh2, s_out, b_out):
    m = ep_nodes.shape[1]
    wi = w[i]
    for j in range(m):
        acc = 0.0
        for k in range(6):
            acc += ep_w[r, j, k] * w[ep_nodes[r, j, k]]
        lam = self_w[r, j]
        s_out[j] = (acc - lam * wi) / (2.0 - lam)
        b_out[j] = (2.0 - lam) / dh2


@njit(cache=True)
def _exact_root(s, b, pairs, f):
    # each tuple gives (s1 - t)(s2 - t) = f / (b1 b2) on t <= min(s1, s2)
    best = np.inf
    for k in range(pairs.shape[0]):
        p = pairs[k, 0]
        q = pairs[k, 1]
        half = 0.5 * (s[p] - s[q])
        t = 0.5 * (s[p] + s[q]) - math.sqrt(half * half + f / (b[p] * b[q]))
        if t < best:
            best = t
    return best


@njit(cache=True)
def operator_at(t, s, b, pairs):
    """Operator value at a node when its own value is ``t``."""
    best = np.inf
    for k in range(pairs.shape[0]):
        d1 = b[pairs[k, 0]] * (s[pairs[k, 0]] - t)
        d2 = b[pairs[k, 1]] * (s[pairs[k, 1]] - t)
        val = max(d1, 0.0) * max(d2, 0.0) - max(-d1, 0.0) - max(-d2, 0.0)
        if val < best:
            best = val
    return best


@njit(cache=True)
def bisect_root(s, b, pairs, f, t0, tol, maxit, max_doublings):
    """Solve ``operator_at(t) = f`` for the non-increasing scalar map.

    Returns ``(t, status, iterations)``; status ``BRACKET_FAIL`` when no sign
    change is found within ``max_doublings`` geometric steps.
    """
    F0 = operator_at(t0, s, b, pairs)
    if abs(F0 - f) <= tol:
        return t0, 0, 0
    step = 1e-3 * (1.0 + abs(t0))
    if F0 > f:
        lo = t0
        hi = t0 + step
        n = 0
        while operator_at(hi, s, b, pairs) > f:
            lo = hi
            step *= 2.0
            hi = t0 + step
            n += 1
            if n > max_doublings:
                return t0, BRACKET_FAIL, n
    else:
        hi = t0
        lo = t0 - step
        n = 0
        while operator_at(lo, s, b, pairs) < f:
            hi = lo
            step *= 2.0
            lo = t0 - step
            n += 1
            if n > max_doublings:
                return t0, BRACKET_FAIL, n
    mid = 0.5 * (lo + hi)
    for it in range(maxit):
        mid = 0.5 * (lo + hi)
        Fm = operator_at(mid, s, b, pairs)
        if abs(Fm - f) <= tol:
            return mid, 0, it + 1
        if Fm > f:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(1.0, abs(mid)):
            return mid, 0, it + 1
    return mid, 0, maxit


@njit(cache=True)
def gs_sweep(w, nodes, order, f, ep_nodes, ep_w, self_w, dh, pairs,
             use_bisection, tol, maxit, max_doublings):
    """One Gauss-Seidel pass in ``order``; returns (max |update|, min update, failed row)."""
    m = ep_nodes.shape[1]
    s = np.empty(m)
    b = np.empty(m)
    max_up = 0.0
    min_up = np.inf
    for idx in range(order.shape[0]):
        r = order[idx]
        i = nodes[r]
        dh2 = dh[r] * dh[r]
        _node_coeffs(i, r, w, ep_nodes, ep_w, self_w, dh2, s, b)
        if use_bisection:
            t, status, _ = bisect_root(s, b, pairs, f[r], w[i], tol, maxit, max_doublings)
            if status != 0:
                return max_up, min_up, r
        else:
            t = _exact_root(s, b, pairs, f[r])
        du = t - w[i]
        w[i] = t
        if abs(du) > max_up:
            max_up = abs(du)
        if du < min_up:
            min_up = du
    return max_up, min_up, -1


@njit(cache=True)
def jacobi_sweep(w, nodes, f, ep_nodes, ep_w, self_w, dh, pairs):
    """All nodal solves against a frozen copy of ``w``; updates ``w`` in place."""
    m = ep_nodes.shape[1]
    s = np.empty(m)
    b = np.empty(m)
    new = np.empty(nodes.shape[0])
    for r in range(nodes.shape[0]):
        _node_coeffs(nodes[r], r, w, ep_nodes, ep_w, self_w, dh[r] * dh[r], s, b)
        new[r] = _exact_root(s, b, pairs, f[r])
    max_up = 0.0
    min_up = np.inf
    for r in range(nodes.shape[0]):
        du = new[r] - w[nodes[r]]
        w[nodes[r]] = new[r]
        max_up = max(max_up, abs(du))
        min_up = min(min_up, du)
    return max_up, min_up


@njit(cache=True)
def operator_values(w, nodes, ep_nodes, ep_w, dh, pairs):
    n = nodes.shape[0]
    m = ep_nodes.shape[1]
    out = np.empty(n)
    sd = np.empty(m)
    for r in range(n):
        wi = w[nodes[r]]
        dh2 = dh[r] * dh[r]
        for j in range(m):
            acc = 0.0
            for k in range(6):
                acc += ep_w[r, j, k] * w[ep_nodes[r, j, k]]
            sd[j] = (acc - 2.0 * wi) / dh2
        best = np.inf
        for k in range(pairs.shape[0]):
            d1 = sd[pairs[k, 0]]
            d2 = sd[pairs[k, 1]]
            val = max(d1, 0.0) * max(d2, 0.0) - max(-d1, 0.0) - max(-d2, 0.0)
            if val < best:
                best = val
        out[r] = best
    return out
