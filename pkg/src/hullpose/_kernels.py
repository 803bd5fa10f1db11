"""Compiled inner loops of the occlusion-area search.

Everything here works on raw float64 arrays so that the per-angle loop can
run without Python overhead: a hull is an (n, 2) CCW array, a rectangle is
a (4, 3) array of normal-form lines (a, b, c) plus a (4, 2) vertex array.
Edge i of a rectangle joins vertices i-1 and i; vertex i is where edges i
and i+1 meet.
"""
import math

import numpy as np
from numba import njit

VERTEX_TOL = 1e-6     # m, ray/vertex coincidence
PARALLEL_EPS = 1e-12
SIDE_LEFT = 1         # minimum-azimuth boundary; wedge lies counter-clockwise of its ray
SIDE_RIGHT = -1


@njit(cache=True)
def rect_from_theta(pts, theta, lines, verts):
    c = math.cos(theta)
    s = math.sin(theta)
    lo1 = np.inf
    hi1 = -np.inf
    lo2 = np.inf
    hi2 = -np.inf
    for i in range(pts.shape[0]):
        p1 = pts[i, 0] * c + pts[i, 1] * s
        p2 = -pts[i, 0] * s + pts[i, 1] * c
        lo1 = min(lo1, p1)
        hi1 = max(hi1, p1)
        lo2 = min(lo2, p2)
        hi2 = max(hi2, p2)
    lines[0, 0] = c
    lines[0, 1] = s
    lines[0, 2] = lo1
    lines[1, 0] = -s
    lines[1, 1] = c
    lines[1, 2] = lo2
    lines[2, 0] = c
    lines[2, 1] = s
    lines[2, 2] = hi1
    lines[3, 0] = -s
    lines[3, 1] = c
    lines[3, 2] = hi2
    # corner (u, v) in the (e1, e2) frame sits at u*e1 + v*e2
    us = (lo1, hi1, hi1, lo1)
    vs = (lo2, lo2, hi2, hi2)
    for k in range(4):
        verts[k, 0] = us[k] * c - vs[k] * s
        verts[k, 1] = us[k] * s + vs[k] * c


@njit(cache=True)
def _front_facing(lines, e):
    # edges 0/1 bound the rectangle from below (interior a.p >= c), 2/3 from above
    if e < 2:
        return lines[e, 2] > 0.0
    return lines[e, 2] < 0.0


@njit(cache=True)
def _vertex_edge(lines, verts, k, side):
    """Pick which edge adjacent to vertex k faces the sensor inside the wedge."""
    vx = verts[k, 0]
    vy = verts[k, 1]
    nv = math.hypot(vx, vy)
    best = k
    best_rank = -1
    best_w = -np.inf
    for j in range(2):
        if j == 0:
            e = k
            w_idx = (k - 1) % 4
        else:
            e = (k + 1) % 4
            w_idx = (k + 1) % 4
        dx = verts[w_idx, 0] - vx
        dy = verts[w_idx, 1] - vy
        w = side * (vx * dy - vy * dx)
        inside = w > 1e-12 * nv * math.hypot(dx, dy)
        rank = 2 * int(inside) + int(_front_facing(lines, e))
        if rank > best_rank or (rank == best_rank and w > best_w):
            best = e
            best_rank = rank
            best_w = w
    return best


@njit(cache=True)
def select_edge(lines, verts, bx, by, side):
    """Index of the rectangle edge first crossed by the ray origin -> (bx, by).

    Returns -1 when nothing usable is found.
    """
    nb = math.hypot(bx, by)
    ux = bx / nb
    uy = by / nb
    # boundary ray in normal form, through the origin
    ra = -uy
    rb = ux
    recv = -1
    recv_t = np.inf
    best = -1
    best_t = np.inf
    miss = np.full(4, np.inf)
    for idx in range(4):
        a = lines[idx, 0]
        b = lines[idx, 1]
        c = lines[idx, 2]
        det = a * rb - ra * b
        if abs(det) < PARALLEL_EPS:
            continue
        px = c * rb / det
        py = -ra * c / det
        t = px * ux + py * uy
        prev = (idx - 1) % 4
        d_cur = math.hypot(px - verts[idx, 0], py - verts[idx, 1])
        d_prev = math.hypot(px - verts[prev, 0], py - verts[prev, 1])
        edge_len = math.hypot(verts[idx, 0] - verts[prev, 0], verts[idx, 1] - verts[prev, 1])
        if d_cur <= VERTEX_TOL or d_prev <= VERTEX_TOL:
            # the ray passes through a corner; both edges meeting there are
            # resolved together below rather than as ordinary candidates
            k = idx if d_cur <= d_prev else prev
            if t > 0.0 and t < recv_t:
                recv = k
                recv_t = t
            continue
        far = max(d_cur, d_prev)
        if far < edge_len and t > 0.0:
            if t < best_t:
                best = idx
                best_t = t
        elif t > 0.0:
            miss[idx] = abs(far - edge_len)

    if recv < 0 and best < 0:
        # near-miss fallback: the two closest misses share the corner the ray grazes
        order = np.argsort(miss)
        i = order[0]
        j = order[1]
        apart = (i - j) % 4
        if np.isfinite(miss[j]) and (apart == 1 or apart == 3):
            k = i if (j - i) % 4 == 1 else j
            recv = k
            recv_t = verts[k, 0] * ux + verts[k, 1] * uy

    if recv >= 0 and recv_t < best_t:
        return _vertex_edge(lines, verts, recv, side)
    return best


@njit(cache=True)
def _pass(pts, lines, e, start, stop, step, max_chords):
    a = lines[e, 0]
    b = lines[e, 1]
    c = lines[e, 2]
    # edge direction (b, -a)
    n = pts.shape[0]
    area = 0.0
    ref = 0.0
    idx = start
    count = 0
    while count < max_chords:
        nxt = (idx + step) % n
        h = (pts[nxt, 0] - pts[idx, 0]) * b - (pts[nxt, 1] - pts[idx, 1]) * a
        if h * ref < 0.0:
            break
        du = abs(a * pts[idx, 0] + b * pts[idx, 1] - c)
        dl = abs(a * pts[nxt, 0] + b * pts[nxt, 1] - c)
        area += (du + dl) * h / 2.0
        if h != 0.0:
            ref = h
        idx = nxt
        count += 1
        if idx == stop:
            break
    gap = ((stop - idx) * step) % n
    return area, gap


@njit(cache=True)
def occlusion_area(pts, lines, il, ir, el, er):
    # On a CCW hull the sensor-facing chain runs from the max-azimuth vertex
    # forward to the min-azimuth vertex, i.e. +1 from the right, -1 from the left.
    n = pts.shape[0]
    area_r, gap = _pass(pts, lines, er, ir, il, 1, n)
    area_l = 0.0
    if gap > 0:
        area_l, _ = _pass(pts, lines, el, il, ir, -1, gap)
    return abs(area_r) + abs(area_l)


@njit(cache=True)
def score_curve(pts, thetas, il, ir):
    out = np.empty(thetas.shape[0])
    lines = np.empty((4, 3))
    verts = np.empty((4, 2))
    lx = pts[il, 0]
    ly = pts[il, 1]
    rx = pts[ir, 0]
    ry = pts[ir, 1]
    for k in range(thetas.shape[0]):
        rect_from_theta(pts, thetas[k], lines, verts)
        el = select_edge(lines, verts, lx, ly, SIDE_LEFT)
        er = select_edge(lines, verts, rx, ry, SIDE_RIGHT)
        if el < 0 or er < 0:
            out[k] = np.inf
        else:
            out[k] = occlusion_area(pts, lines, il, ir, el, er)
    return out
