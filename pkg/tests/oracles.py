"""Brute-force reference evaluators, written independently of the package internals."""
import itertools

import numpy as np


def H(p, axis=None):
    p = np.asarray(p, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1)), 0.0)
    return t.sum(axis=axis)


def hb(p):
    p = np.asarray(p, float)
    return H(np.stack([p, 1 - p], -1), axis=-1)


def hb_inv(t, iters=100):
    if t < 0 or t > 1:
        return 0.0
    lo, hi = 0.0, 0.5
    for _ in range(iters):
        mid = (lo + hi) / 2
        if hb(mid) < t:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def simplex_grid(k, levels):
    """All points of the k-simplex with coordinates in multiples of 1/(levels-1)."""
    n = levels - 1
    pts = [c for c in itertools.product(range(n + 1), repeat=k - 1) if sum(c) <= n]
    return np.array([list(c) + [n - sum(c)] for c in pts], float) / n


def thm4_grid(p1, p2, cost, k=3, levels=21):
    """Min of h2(p1) + H(Z|U) + I(U;S2) - H(Y) over gridded p(u|s2) and every f.

    Returns (objective, bound) where bound = h2_inv of the clamped objective.
    """
    rows = simplex_grid(k, levels)
    r0, r1 = np.meshgrid(np.arange(len(rows)), np.arange(len(rows)), indexing="ij")
    j0 = rows[r0.ravel()] * (1 - p2)          # [b, u] with s2 = 0
    j1 = rows[r1.ravel()] * p2                # s2 = 1
    pu = j0 + j1
    i_us2 = H(pu, 1) + hb(p2) - H(j0, 1) - H(j1, 1)
    best = np.inf
    for f in itertools.product((0, 1), repeat=2 * k):
        f = np.array(f).reshape(k, 2)
        c = j0 @ f[:, 0] + j1 @ f[:, 1]
        # z = x xor s2; mass of z = 1 per u
        z1 = j0 * (f[:, 0] == 1) + j1 * (f[:, 1] == 0)
        h_z_u = (H(np.stack([z1, pu - z1], -1), (1, 2)) - H(pu, 1))
        flip = z1.sum(1)
        y1 = p1 * (1 - flip) + flip * (1 - p1)
        obj = hb(p1) + h_z_u + i_us2 - hb(y1)
        obj = np.where(c <= cost + 1e-12, obj, np.inf)
        best = min(best, float(obj.min()))
    return best, hb_inv(max(best, 0.0))


def gp_grid(p2, cost, k=3, levels=21):
    """Max of I(U;Z) - I(U;S2) over gridded p(u|s2) and every f, subject to cost."""
    rows = simplex_grid(k, levels)
    r0, r1 = np.meshgrid(np.arange(len(rows)), np.arange(len(rows)), indexing="ij")
    j0 = rows[r0.ravel()] * (1 - p2)
    j1 = rows[r1.ravel()] * p2
    pu = j0 + j1
    i_us2 = H(pu, 1) + hb(p2) - H(j0, 1) - H(j1, 1)
    best = -np.inf
    for f in itertools.product((0, 1), repeat=2 * k):
        f = np.array(f).reshape(k, 2)
        c = j0 @ f[:, 0] + j1 @ f[:, 1]
        z1 = j0 * (f[:, 0] == 1) + j1 * (f[:, 1] == 0)
        jz = np.stack([pu - z1, z1], -1)
        i_uz = H(pu, 1) + H(jz.sum(1), 1) - H(jz, (1, 2))
        val = np.where(c <= cost + 1e-12, i_uz - i_us2, -np.inf)
        best = max(best, float(val.max()))
    return best


def thm3_grid(p1, p2, cost, n=201):
    """lb_thm3 objective over an n x n grid of (q0, q1) in [0, 1]^2."""
    q = np.linspace(0, 1, n)
    q0, q1 = np.meshgrid(q, q, indexing="ij")
    ex = (1 - p2) * q0 + p2 * q1
    pz = q0 * (1 - p2) + (1 - q1) * p2
    best = np.inf
    for a, b, e in zip(q0.ravel(), pz.ravel(), ex.ravel()):
        if e > cost + 1e-12:
            continue
        y = p1 * (1 - b) + b * (1 - p1)
        best = min(best, hb_inv(float(hb(p1) + hb(p2) - hb(y))) - e)
    return max(best, 0.0)


def causal_joint(p1, p2, pu, pv, xmap, est):
    """Exact E d and the two rate terms of a causal strategy by full enumeration.

    pu[u], pv[u, s2, v], xmap[u, s2], est[u, v, y].
    """
    K, _, V = pv.shape
    joint = np.zeros((K, 2, V, 2, 2))         # u, s2, v, s1, y
    for u, s2, v, s1 in itertools.product(range(K), range(2), range(V), range(2)):
        p = pu[u] * (p2 if s2 else 1 - p2) * pv[u, s2, v] * (p1 if s1 else 1 - p1)
        y = xmap[u, s2] ^ s1 ^ s2
        joint[u, s2, v, s1, y] += p
    dist = sum(joint[u, :, v, s1, y].sum() * (est[u, v, y] != s1)
               for u, v, s1, y in itertools.product(range(K), range(V), range(2), range(2)))
    puy = joint.sum((1, 2, 3))
    i_uy = H(puy.sum(1)) + H(puy.sum(0)) - H(puy)
    # I(V;S2|U,Y) = H(V,U,Y) + H(S2,U,Y) - H(V,S2,U,Y) - H(U,Y)
    p_vsuy = joint.sum(3)                      # u, s2, v, y
    i_vs = (H(p_vsuy.sum(1)) + H(p_vsuy.sum(2)) - H(p_vsuy) - H(puy))
    cost = sum(pu[u] * (p2 if s2 else 1 - p2) * xmap[u, s2] for u in range(K) for s2 in range(2))
    return float(dist), float(i_uy), float(i_vs), float(cost)


def best_estimator(p1, p2, pu, pv, xmap):
    """MAP reconstruction table est[u, v, y] for the given strategy."""
    K, _, V = pv.shape
    w = np.zeros((K, V, 2, 2))                # u, v, y, s1
    for u, s2, v, s1 in itertools.product(range(K), range(2), range(V), range(2)):
        y = xmap[u, s2] ^ s1 ^ s2
        w[u, v, y, s1] += pu[u] * (p2 if s2 else 1 - p2) * pv[u, s2, v] * (p1 if s1 else 1 - p1)
    return (w[..., 1] > w[..., 0]).astype(int)
