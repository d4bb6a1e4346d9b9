"""Compiled inner loop for per-tier best-candidate search."""

from __future__ import annotations

import math

import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@numba.njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, inline="always")
def _fading(key, stream, a, b):
    # must match drop.hash_uniform followed by -log
    z = _mix(key ^ (stream * _GOLDEN))
    z = _mix(z + a * _GOLDEN + _M1)
    z = _mix(z ^ (b + _M2))
    u = (np.float64(z >> np.uint64(11)) + 0.5) * 2.0 ** -53
    return -math.log(u)


@numba.njit(cache=True, inline="always")
def _factor(d, k, d0, a0, a1, rc, c):
    if rc <= 0.0 or d <= rc:
        return k * (d / d0) ** (-a0)
    return k * c * (d / d0) ** (-a1)


@numba.njit(cache=True, inline="always")
def _invert(ratio, alpha, d0):
    if alpha == 0.0:
        return 0.0 if ratio > 1.0 else math.inf
    return d0 * ratio ** (-1.0 / alpha)


@numba.njit(cache=True, inline="always")
def _inverse(level, k, d0, a0, a1, rc, c):
    if not level > 0.0:
        return math.inf
    near = _invert(level / k, a0, d0)
    if rc <= 0.0:
        return near
    at_rc = k * (rc / d0) ** (-a0)
    if level >= at_rc:
        return min(near, rc)
    return max(_invert(level / (k * c), a1, d0), rc)


@numba.njit(cache=True)
def tier_best(users, sorted_pts, order, starts, n_buckets, side, half_width,
              k, d0, a0, a1, rc, c, key, dl_stream, ul_stream, tier_code, cap,
              dl_idx, dl_val, ul_idx, ul_val):
    """Strongest downlink/uplink candidate per user by expanding bucket rings.

    A ring is skipped once its closest possible point is beyond the distance
    at which even a ``cap`` fading gain cannot beat both current bests.
    Returns how many users searched the whole grid.
    """
    n = users.shape[0]
    full = 0
    for u in range(n):
        x = users[u, 0] + half_width
        y = users[u, 1] + half_width
        cx = min(max(int(math.floor(x / side)), 0), n_buckets - 1)
        cy = min(max(int(math.floor(y / side)), 0), n_buckets - 1)
        fx = x - cx * side
        fy = y - cy * side
        edge = max(0.0, min(min(fx, side - fx), min(fy, side - fy)))
        bd, bi, gd, gi = -1.0, -1, -1.0, -1
        r = 0
        while True:
            if cx - r < 0 and cy - r < 0 and cx + r >= n_buckets and cy + r >= n_buckets:
                full += 1
                break
            if r > 0 and bi >= 0 and gi >= 0:
                need = max(_inverse(bd / cap, k, d0, a0, a1, rc, c), _inverse(gd / cap, k, d0, a0, a1, rc, c))
                if (r - 1) * side + edge > need:
                    break
            y0 = max(cy - r, 0)
            y1 = min(cy + r, n_buckets - 1)
            for by in range(y0, y1 + 1):
                on_edge_row = by == cy - r or by == cy + r
                if on_edge_row:
                    xs = (max(cx - r, 0), min(cx + r, n_buckets - 1))
                    spans = 1
                else:
                    xs = (cx - r, cx + r)
                    spans = 2
                for s in range(spans):
                    if spans == 1:
                        bx0, bx1 = xs[0], xs[1]
                    else:
                        bx0 = bx1 = xs[s]
                        if bx0 < 0 or bx0 >= n_buckets:
                            continue
                    lo = starts[by * n_buckets + bx0]
                    hi = starts[by * n_buckets + bx1 + 1]
                    for q in range(lo, hi):
                        dx = sorted_pts[q, 0] - users[u, 0]
                        dy = sorted_pts[q, 1] - users[u, 1]
                        d = math.sqrt(dx * dx + dy * dy)
                        pl = _factor(d, k, d0, a0, a1, rc, c)
                        j = order[q]
                        b = tier_code | np.uint64(j)
                        g = pl * _fading(key, dl_stream, np.uint64(u), b)
                        if g > bd or (g == bd and j < bi):
                            bd, bi = g, j
                        g = pl * _fading(key, ul_stream, np.uint64(u), b)
                        if g > gd or (g == gd and j < gi):
                            gd, gi = g, j
            r += 1
        dl_idx[u], dl_val[u], ul_idx[u], ul_val[u] = bi, bd, gi, gd
    return full
