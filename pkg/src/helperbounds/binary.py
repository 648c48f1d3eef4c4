"""Binary estimation with a helper.

S1 ~ Bern(p1) is the wanted source, S2 ~ Bern(p2) the interference seen by the
helper, the decoder observes Y = X xor S1 xor S2, Hamming distortion, and the
helper pays one unit of cost per X = 1.

Auxiliary labels in the noncausal bounds are indexed by "type", that is by the
map s2 -> x they induce:

    0: x = 0        1: x = 1        2: x = s2        3: x = 1 - s2

For a fixed type the residual Z = X xor S2 is either a relabelling of S2
(types 0, 1) or a constant (types 2, 3).
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .core import BoundResult, bconv, entropy, h2, h2_inv, split_entropy

LN2 = np.log(2.0)
# roundoff allowance on the causal rate constraint; near D = 1/2 the
# distortion gained from a slack e is about sqrt(e / 2.885)
CAUSAL_SLACK = 1e-14
GP_SLACK = 1e-12

# type -> (x when s2 = 0, x when s2 = 1)
TYPE_MAPS = np.array([[0, 0], [1, 1], [0, 1], [1, 0]])


@dataclass(frozen=True)
class BinaryProblem:
    p1: float
    p2: float
    cost: float

    def __post_init__(self):
        for name, hi in (("p1", 0.5), ("p2", 0.5), ("cost", 1.0)):
            v = getattr(self, name)
            if not (0.0 <= v <= hi):
                raise ValueError(f"{name}={v} outside [0, {hi}]")


@dataclass(frozen=True)
class HelperPolicy:
    """P(X=1 | S2=0) and P(X=1 | S2=1)."""

    q0: float
    q1: float

    def cost(self, p2):
        return (1 - p2) * self.q0 + p2 * self.q1

    def residual(self, p2):
        # P(X xor S2 = 1)
        return self.q0 * (1 - p2) + (1 - self.q1) * p2


@dataclass
class AuxiliaryPolicy:
    """p(u|s2) as a 2 x u_size table (row s2 sums to one) and x = f[u, s2]."""

    pu_given_s2: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        self.pu_given_s2 = np.asarray(self.pu_given_s2, dtype=float)
        self.f = np.asarray(self.f, dtype=int)
        if self.pu_given_s2.shape[0] != 2 or self.pu_given_s2.ndim != 2:
            raise ValueError("pu_given_s2 must have shape (2, u_size)")
        if self.u_size > 4:
            raise ValueError("at most 4 auxiliary symbols")
        if self.f.shape != (self.u_size, 2):
            raise ValueError("f must have shape (u_size, 2)")
        if np.any(np.abs(self.pu_given_s2.sum(1) - 1) > 1e-12) or np.any(self.pu_given_s2 < 0):
            raise ValueError("rows of pu_given_s2 must be distributions")

    @property
    def u_size(self):
        return self.pu_given_s2.shape[1]


# ---------------------------------------------------------------- closed forms

def dmin_half(p2, cost):
    """Exact minimum distortion when the source is a fair coin."""
    if not (0 <= p2 <= 1 and 0 <= cost <= 1):
        raise ValueError("probabilities required")
    value = max(p2 - cost, 0.0)
    diag = {} if p2 > cost else {"precondition": "p2 <= cost, full cancellation"}
    return BoundResult(value, "exact", {"p2": p2, "cost": cost}, 0, diag)


def causal_zero_necessary(p1, cost):
    """Necessary condition for zero distortion with causal interference knowledge.

    False certifies that the causal minimum distortion is strictly positive.
    """
    return bool(h2(p1) <= 2.0 * cost)


def _thm3_value(p1, p2, flip, ex):
    return h2_inv(h2(p1) + h2(p2) - h2(bconv(p1, flip))) - ex


def _cor2_regime(prob):
    p1, p2, c = prob.p1, prob.p2, prob.cost
    if p1 + (1 - 2 * p1) * (p2 - c) >= 0.5:
        return "decreasing"
    if p1 + (1 - 2 * p1) * (p2 + c) <= 0.5:
        return "increasing"
    return None


def lb_cor2(prob):
    """Closed-form evaluation of the flip-probability bound in its two monotone regimes.

    Outside both regimes the looser full-entropy bound is returned, flagged in
    the diagnostics.
    """
    p1, p2, c = prob.p1, prob.p2, prob.cost
    regime = _cor2_regime(prob)
    if regime == "decreasing":
        flip = max(p2 - c, 0.0)
        raw = _thm3_value(p1, p2, flip, c)
    elif regime == "increasing":
        # the residual flip probability is pushed up to p2 + C, towards 1/2
        flip = p2 + c
        raw = _thm3_value(p1, p2, flip, c)
    else:
        flip = 0.5
        raw = lb_cor3(prob).value
    return BoundResult(max(raw, 0.0), "lower", {"flip": flip, "ex": c}, 1,
                       {"regime": regime or "mixed"})


def lb_cor3(prob):
    raw = h2_inv(h2(prob.p1) + h2(prob.p2) - 1.0) - prob.cost
    return BoundResult(max(raw, 0.0), "lower", {}, 1)


def _thm3_grid(prob, grid):
    p1, p2, c = prob.p1, prob.p2, prob.cost
    q0_hi = 1.0 if p2 == 1 else min(1.0, c / (1 - p2))
    q1_hi = 1.0 if p2 == 0 else min(1.0, c / p2)
    q0 = np.linspace(0, q0_hi, grid)
    q1 = np.linspace(0, q1_hi, grid)
    Q0, Q1 = np.meshgrid(q0, q1, indexing="ij")
    ex = (1 - p2) * Q0 + p2 * Q1
    ok = ex <= c + 1e-15
    flip = np.clip(Q0 * (1 - p2) + (1 - Q1) * p2, 0, 1)
    # the bound depends on (q0, q1) only through (flip, ex); evaluate on
    # unique flip values to keep the bisection cheap
    fl = np.round(flip[ok], 13)
    uniq, inv = np.unique(fl, return_inverse=True)
    hv = h2_inv(h2(p1) + h2(p2) - h2(bconv(p1, uniq)))
    vals = hv[inv] - ex[ok]
    k = int(np.argmin(vals))
    best = float(vals[k])
    i, j = np.argwhere(ok)[k]
    evals = int(ok.sum())

    # refine along the active cost boundary (1-p2) q0 + p2 q1 = c
    if 0 < p2 < 1 and c > 0:
        lo = max(0.0, (c - p2) / (1 - p2))
        hi = min(1.0, c / (1 - p2))

        def along(a):
            b = (c - (1 - p2) * a) / p2
            return _thm3_value(p1, p2, a * (1 - p2) + (1 - b) * p2, c)

        width = 2.0 * q0_hi / max(grid - 1, 1)
        a0 = q0[i]
        left, right = max(lo, a0 - width), min(hi, a0 + width)
        if right > left:
            r = minimize_scalar(along, bounds=(left, right), method="bounded",
                                options={"xatol": 1e-12})
            evals += r.nfev
            for a, v in ((r.x, r.fun), (left, along(left)), (right, along(right))):
                if v < best:
                    best = float(v)
                    b = (c - (1 - p2) * a) / p2
                    i, j = None, (a, b)
    if i is None:
        q = {"q0": float(j[0]), "q1": float(j[1])}
    else:
        q = {"q0": float(q0[i]), "q1": float(q1[j])}
    return best, q, evals


def lb_thm3(prob, method="auto", grid=2001):
    """Lower bound from the entropy chain over helper policies p(x|s2).

    ``method="auto"`` uses a closed form in every regime: spending the whole
    budget is optimal, and the residual flip probability then ranges over
    [p2 - C, p2 + C]; the output entropy is maximised at an endpoint in the
    two monotone regimes and equals one bit in between. ``method="grid"``
    runs the dense (q0, q1) grid with a boundary refinement instead.
    """
    p1, p2, c = prob.p1, prob.p2, prob.cost
    if method == "grid":
        raw, q, evals = _thm3_grid(prob, grid)
        return BoundResult(max(raw, 0.0), "lower", q, evals, {"method": "grid"})
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if c >= p2:
        return BoundResult(0.0, "lower", {"q0": 0.0, "q1": 1.0}, 0,
                           {"method": "cancellation"})
    res = lb_cor2(prob)
    regime = res.diagnostics["regime"]
    flip = res.params["flip"]
    # policy on the boundary reaching this flip probability
    a = (flip - p2 + c) / 2.0        # (1 - p2) q0
    b = c - a                         # p2 q1
    q = {"q0": a / (1 - p2), "q1": b / p2 if p2 > 0 else 0.0}
    return BoundResult(res.value, "lower", q, 1, {"method": "closed-form", "regime": regime})


# ------------------------------------------------- type-reduced convex programs
#
# Variables: m[t] = P(type t, S2 = 1), n[t] = P(type t, S2 = 0).

def _type_stats(m, n):
    cost = m[..., 1] + n[..., 1] + m[..., 2] + n[..., 3]
    flip = m[..., 0] + n[..., 1] + m[..., 3] + n[..., 3]
    return cost, flip


def gp_from_masses(p2, m, n):
    """I(U;Z) - I(U;S2) in bits for the type-reduced joint masses."""
    _, flip = _type_stats(m, n)
    return (h2(np.clip(flip, 0, 1)) - h2(p2)
            + split_entropy(m[..., 2], n[..., 2]) + split_entropy(m[..., 3], n[..., 3]))


def thm4_from_masses(p1, p2, m, n):
    """h2(p1) + H(Z|U) + I(U;S2) - H(Y) for the type-reduced joint masses."""
    _, flip = _type_stats(m, n)
    return (h2(p1) + h2(p2) - split_entropy(m[..., 2], n[..., 2])
            - split_entropy(m[..., 3], n[..., 3]) - h2(bconv(p1, np.clip(flip, 0, 1))))


def policy_from_masses(p2, m, n):
    m = np.asarray(m, float)
    n = np.asarray(n, float)
    rows = np.vstack([n / (1 - p2) if p2 < 1 else np.full(4, 0.25),
                      m / p2 if p2 > 0 else np.full(4, 0.25)])
    rows = np.clip(rows, 0, None)
    rows /= rows.sum(1, keepdims=True)
    return AuxiliaryPolicy(rows, TYPE_MAPS.copy())


def _joint_u_s2_x(prob, policy):
    ps2 = np.array([1 - prob.p2, prob.p2])
    joint = policy.pu_given_s2.T * ps2          # [u, s2]
    return joint


def policy_terms(prob, policy):
    """Information quantities of an AuxiliaryPolicy with arbitrary f."""
    j = _joint_u_s2_x(prob, policy)
    f = policy.f
    s2 = np.array([0, 1])
    z = f ^ s2[None, :]                           # [u, s2]
    cost = float((j * f).sum())
    # joint of (u, z)
    juz = np.zeros((policy.u_size, 2))
    for u in range(policy.u_size):
        for s in range(2):
            juz[u, z[u, s]] += j[u, s]
    pu = j.sum(1)
    h_z_given_u = float(entropy(juz) - entropy(pu))
    i_u_s2 = float(entropy(pu) + entropy(j.sum(0)) - entropy(j))
    i_u_z = float(entropy(pu) + entropy(juz.sum(0)) - entropy(juz))
    flip = float(juz[:, 1].sum())
    return {"cost": cost, "flip": flip, "H(Z|U)": h_z_given_u, "I(U;S2)": i_u_s2,
            "I(U;Z)": i_u_z}


def thm4_objective(prob, policy):
    t = policy_terms(prob, policy)
    return h2(prob.p1) + t["H(Z|U)"] + t["I(U;S2)"] - h2(bconv(prob.p1, t["flip"]))


def gp_objective(prob, policy):
    t = policy_terms(prob, policy)
    return t["I(U;Z)"] - t["I(U;S2)"]


def _masses_from_x(x, p2):
    return x[:4], x[4:]


def _thm4_slsqp(prob, x0):
    p1, p2, c = prob.p1, prob.p2, prob.cost
    eps = 1e-300
    k = 1 - 2 * p1

    def fun(x):
        m, n = x[:4], x[4:]
        return float(thm4_from_masses(p1, p2, np.clip(m, 0, None), np.clip(n, 0, None)))

    def grad(x):
        x = np.clip(x, 0, None)
        m, n = x[:4], x[4:]
        g = np.zeros(8)
        for t in (2, 3):
            s = m[t] + n[t]
            g[t] = -np.log2((s + eps) / (m[t] + eps)) if m[t] > 0 else -60.0
            g[4 + t] = -np.log2((s + eps) / (n[t] + eps)) if n[t] > 0 else -60.0
        flip = m[0] + n[1] + m[3] + n[3]
        y = np.clip(bconv(p1, min(max(flip, 0), 1)), 1e-300, 1 - 1e-16)
        dy = -k * np.log2((1 - y) / y)
        for idx in (0, 3, 5, 7):          # m0, m3, n1, n3
            g[idx] += dy
        return g

    cons = [
        {"type": "eq", "fun": lambda x: x[:4].sum() - p2, "jac": lambda x: np.r_[np.ones(4), np.zeros(4)]},
        {"type": "eq", "fun": lambda x: x[4:].sum() - (1 - p2), "jac": lambda x: np.r_[np.zeros(4), np.ones(4)]},
        {"type": "ineq", "fun": lambda x: c - (x[1] + x[5] + x[2] + x[7]),
         "jac": lambda x: -np.array([0, 1, 1, 0, 0, 1, 0, 1.0])},
    ]
    bounds = [(0, p2)] * 4 + [(0, 1 - p2)] * 4
    with warnings.catch_warnings():
        # SLSQP steps a hair outside the bounds; the result is clipped below
        warnings.simplefilter("ignore", RuntimeWarning)
        r = minimize(fun, x0, jac=grad, bounds=bounds, constraints=cons, method="SLSQP",
                     options={"maxiter": 500, "ftol": 1e-14})
    x = np.clip(r.x, 0, None)
    # project back onto the marginal constraints
    if p2 > 0:
        x[:4] *= p2 / max(x[:4].sum(), 1e-300)
    if p2 < 1:
        x[4:] *= (1 - p2) / max(x[4:].sum(), 1e-300)
    return x, r.nfev


def _feasible_start(prob, rng):
    """Random type masses satisfying the marginals and the cost budget."""
    p2, c = prob.p2, prob.cost
    m = rng.dirichlet(np.ones(4)) * p2
    n = rng.dirichlet(np.ones(4)) * (1 - p2)
    cost, _ = _type_stats(m, n)
    if cost > c:
        # mix toward the zero-cost assignment (type 0 everywhere)
        m0 = np.array([p2, 0, 0, 0.0])
        n0 = np.array([1 - p2, 0, 0, 0.0])
        t = (cost - c) / cost
        m = (1 - t) * m + t * m0
        n = (1 - t) * n + t * n0
    return np.r_[m, n]


def _type_start_cancel(prob):
    # spend the budget on exact cancellation, independent of S2 within the type
    p2, c = prob.p2, prob.cost
    if p2 == 0:
        return np.r_[np.zeros(4), [1.0, 0, 0, 0]]
    w = min(1.0, c / p2)
    m = np.array([(1 - w) * p2, 0, w * p2, 0])
    n = np.array([(1 - w) * (1 - p2), 0, w * (1 - p2), 0])
    return np.r_[m, n]


def lb_thm4(prob, starts=8, seed=0):
    """Lower bound minimising h2(p1) + H(Z|U) + I(U;S2) - H(Y), passed through h2_inv.

    The minimisation runs over p(u|s2) with |U| <= 4 and all deterministic
    maps f. Relabelling and merging labels that induce the same map s2 -> x
    never increases the objective, so one label per map suffices and all
    256 maps collapse to the single four-type assignment. On that reduced
    set the objective is convex in the joint masses; each start is a
    local SLSQP solve.
    """
    p1, p2 = prob.p1, prob.p2
    rng = np.random.default_rng(seed)
    cands = [_type_start_cancel(prob)] + [_feasible_start(prob, rng) for _ in range(max(starts - 1, 0))]
    best, best_x, evals = np.inf, None, 0
    for x0 in cands:
        x, k = _thm4_slsqp(prob, x0)
        evals += k
        m, n = x[:4], x[4:]
        cost, _ = _type_stats(m, n)
        if cost > prob.cost + 1e-9:
            continue
        v = float(thm4_from_masses(p1, p2, m, n))
        if v < best - 1e-15:
            best, best_x = v, x
    if best_x is None:
        best_x = _type_start_cancel(prob)
        best = float(thm4_from_masses(p1, p2, best_x[:4], best_x[4:]))
    value = h2_inv(max(best, 0.0))
    pol = policy_from_masses(p2, best_x[:4], best_x[4:])
    return BoundResult(value, "lower",
                       {"pu_given_s2": pol.pu_given_s2.tolist(), "f": pol.f.tolist()},
                       evals, {"objective": best, "heuristic-min": True, "starts": len(cands)})


# --------------------------------------------- Gel'fand-Pinsker capacity, cost

# z = x xor s2 for each (type, s2)
_TYPE_Z = TYPE_MAPS ^ np.array([0, 1])[None, :]     # [type, s2]


def _gp_alternating(ps2, lam, pu, iters, tol):
    """Alternating maximisation of I(U;Z) - I(U;S2) - lam * E X (nats).

    pu: batch of p(u|s2) tables, shape (B, 2, 4).
    """
    rho = TYPE_MAPS.T[None, :, :].astype(float)       # [1, s2, type]
    ztab = _TYPE_Z.T                                  # [s2, type]
    onehot = np.zeros((2, 4, 2))                      # [s2, type, z]
    for s in range(2):
        for t in range(4):
            onehot[s, t, ztab[s, t]] = 1.0
    penalty = np.exp(-lam * rho)
    for it in range(iters):
        joint = pu * ps2[None, :, None]               # [B, s2, type]
        ptz = np.einsum("bst,stz->btz", joint, onehot)
        pz = ptz.sum(1, keepdims=True)
        q = np.where(pz > 0, ptz / np.where(pz > 0, pz, 1), 0.0)    # q(t|z)
        qs = np.einsum("btz,stz->bst", q, onehot)                   # q(t | z(t, s))
        new = qs * penalty
        norm = new.sum(2, keepdims=True)
        new = np.where(norm > 0, new / np.where(norm > 0, norm, 1), 0.25)
        delta = np.max(np.abs(new - pu))
        pu = new
        if delta < tol:
            break
    return pu, it + 1


def _gp_batch_terms(p2, pu):
    ps2 = np.array([1 - p2, p2])
    joint = pu * ps2[None, :, None]        # [B, s2, type]
    n = joint[:, 0, :]
    m = joint[:, 1, :]
    cost, _ = _type_stats(m, n)
    return gp_from_masses(p2, m, n), cost, m, n


def gp_capacity_cost(prob, starts=4, seed=0, iters=3000, tol=1e-13):
    """Max of I(U;Z) - I(U;S2) over p(u|s2), f with E X <= C, Z = X xor S2.

    Alternating (Blahut-Arimoto style) maximisation of the cost-penalised
    objective, with a bisection on the multiplier to meet the budget and a
    final mixture of the two bracketing policies so the budget is met
    exactly. The objective is concave in the joint, so the mixture is at
    least as good as interpolating the bracketing values.
    """
    p2, c = prob.p2, prob.cost
    if c == 0:
        # no label may spend cost, so Z is a relabelling of S2 within each label
        return BoundResult(0.0, "lower", {"pu_given_s2": np.tile([1.0, 0, 0, 0], (2, 1)).tolist(),
                                          "f": TYPE_MAPS.tolist()}, 0, {"multiplier": np.inf})
    ps2 = np.array([1 - p2, p2])
    rng = np.random.default_rng(seed)
    pu0 = rng.dirichlet(np.ones(4), size=(starts, 2))
    pu0[0] = 0.25
    evals = 0

    def solve(lam, init):
        nonlocal evals
        pu, k = _gp_alternating(ps2, lam, init, iters, tol)
        evals += k * pu.shape[0]
        val, cost, m, n = _gp_batch_terms(p2, pu)
        lagr = val - lam / LN2 * cost
        b = int(np.argmax(lagr))
        return pu, pu[b], float(val[b]), float(cost[b])

    pu_hist, pol, val, cost = solve(0.0, pu0)
    if cost <= c + 1e-12:
        best_pol, best_val = pol, val
        lam_used = 0.0
    else:
        lo, hi = 0.0, 1.0
        pol_lo, val_lo, cost_lo = pol, val, cost
        state = pu_hist
        while True:
            st, p_hi, v_hi, c_hi = solve(hi, state)
            if c_hi <= c:
                break
            lo, pol_lo, val_lo, cost_lo, state = hi, p_hi, v_hi, c_hi, st
            hi *= 2.0
            if hi > 1e6:
                break
        pol_hi, val_hi, cost_hi = p_hi, v_hi, c_hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            st, p_m, v_m, c_m = solve(mid, state)
            if c_m > c:
                lo, pol_lo, val_lo, cost_lo = mid, p_m, v_m, c_m
            else:
                hi, pol_hi, val_hi, cost_hi = mid, p_m, v_m, c_m
            state = st
            if hi - lo < 1e-10 * max(1.0, hi):
                break
        if cost_lo - cost_hi > 1e-15:
            w = (cost_lo - c) / (cost_lo - cost_hi)
        else:
            w = 1.0
        w = min(max(w, 0.0), 1.0)
        mix = (1 - w) * pol_lo + w * pol_hi
        mval, mcost, _, _ = _gp_batch_terms(p2, mix[None])
        best_pol, best_val = mix, float(mval[0])
        if mcost[0] > c + 1e-12:
            best_pol, best_val = pol_hi, val_hi
        lam_used = 0.5 * (lo + hi)
    return BoundResult(max(best_val, 0.0), "lower",
                       {"pu_given_s2": best_pol.tolist(), "f": TYPE_MAPS.tolist()},
                       evals, {"multiplier": lam_used})


def _cor4_alpha_min(p1, p2, c, grid=1001):
    lo, hi = max(0.0, p2 - c), min(1.0, p2 + c)
    a = np.r_[np.linspace(lo, hi, grid), lo, hi]
    g = h2(a) - h2(bconv(a, p1))
    k = int(np.argmin(g))
    return float(g[k]), float(a[k])


def lb_cor4(prob, gp=None, **gp_kwargs):
    """Decoupled weakening of lb_thm4 using the cost-constrained GP capacity."""
    p1, p2, c = prob.p1, prob.p2, prob.cost
    gmin, alpha = _cor4_alpha_min(p1, p2, c)
    if gp is None:
        gp = gp_capacity_cost(prob, **gp_kwargs)
    arg = h2(p1) + gmin - gp.value
    return BoundResult(h2_inv(max(arg, 0.0)), "lower", {"alpha": alpha, "gp": gp.value},
                       gp.evaluations, {"argument": arg})


# ------------------------------------------------------- zero distortion test

@dataclass
class ZeroDistortion:
    achievable: bool
    reason: str
    witness: AuxiliaryPolicy | None
    margin: float


def _prop1_witness(cost):
    # X ~ Bern(C) independent of S2 and U = X xor S2; f(u, s2) = u xor s2
    pu = np.array([[1 - cost, cost], [cost, 1 - cost]])
    f = np.array([[0, 1], [1, 0]])
    return AuxiliaryPolicy(pu, f)


def zero_dist_noncausal(prob):
    """Sufficient test for zero noncausal distortion.

    Compares H2(C) with H(X xor S2 | Y) under X ~ Bern(C) independent of S2;
    also reports the trivial cancellation case C >= p2.
    """
    p1, p2, c = prob.p1, prob.p2, prob.cost
    if c >= p2:
        return ZeroDistortion(True, "cancellation", None, c - p2)
    c_eff = min(c, 1.0)
    r = bconv(c_eff, p2)
    lhs = h2(c_eff)
    rhs = h2(r) + h2(p1) - h2(bconv(p1, r))
    if lhs > rhs:
        return ZeroDistortion(True, "hybrid-witness", _prop1_witness(c_eff), lhs - rhs)
    if p1 < c:
        # cannot be reached for C <= 1/2; kept so the weaker sufficient
        # condition is honoured even at the float boundary
        return ZeroDistortion(True, "cost-exceeds-source", _prop1_witness(c_eff), lhs - rhs)
    return ZeroDistortion(False, "inconclusive", None, lhs - rhs)


# ------------------------------------------------------ search machinery

def _xlogx_sum(p, axes):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return t.sum(axis=axes)


def _ent(p, keep):
    """Entropy of the marginal on axes ``keep`` (batch axis 0 always kept)."""
    drop = tuple(a for a in range(1, p.ndim) if a not in keep)
    marg = p.sum(axis=drop) if drop else p
    return _xlogx_sum(marg, tuple(range(1, marg.ndim)))


def _xlogy_ratio(a, num, den):
    # a * log2(num / den), with 0 log 0 = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, a * np.log2(np.where(a > 0, num, 1.0) / np.where(a > 0, den, 1.0)), 0.0)


def _causal_channel(p1, p2, pu, xmap):
    """Joint P[b, u, s2, y] (V not yet attached)."""
    ps2 = np.array([1 - p2, p2])
    ps1 = np.array([1 - p1, p1])
    s2 = np.array([0, 1])
    # Y = y needs S1 = y xor x xor s2
    y1 = ps1[(1 ^ xmap ^ s2[None, None, :])]              # P(Y=1 | u, s2)
    pys = np.stack([1 - y1, y1], axis=-1)                  # [b,u,s2,y]
    return pu[:, :, None, None] * ps2[None, None, :, None] * pys


def _cond_info_v_s2(pusy, w):
    """I(V;S2|U,Y) from P[b,u,s2,y] and p(v|u,s2) = w[b,u,s2,v]."""
    puy = pusy.sum(2, keepdims=True)                       # [b,u,1,y]
    post = np.where(puy > 0, pusy / np.where(puy > 0, puy, 1.0), 0.0)
    wmix = np.einsum("busy,busv->buyv", post, w)          # p(v|u,y)
    terms = _xlogy_ratio(pusy[..., None] * w[:, :, :, None, :],
                         w[:, :, :, None, :], wmix[:, :, None, :, :])
    return np.maximum(terms.sum((1, 2, 3, 4)), 0.0)


def causal_terms(p1, p2, pu, w, xmap):
    """Batched I(U;Y), I(V;S2|U,Y), cost and MAP distortion for causal schemes.

    pu: (B, K) p(u); w: (B, K, 2, V) p(v|u,s2); xmap: (B, K, 2) x(u,s2).
    """
    pusy = _causal_channel(p1, p2, pu, xmap)
    puy = pusy.sum(2)
    py = puy.sum(1, keepdims=True)
    pu_ = puy.sum(2, keepdims=True)
    i_uy = _xlogy_ratio(puy, puy, pu_ * py).sum((1, 2))
    i_vs = _cond_info_v_s2(pusy, w)
    ps2 = np.array([1 - p2, p2])
    cost = np.einsum("bu,s,bus->b", pu, ps2, xmap.astype(float))
    # P(u, v, y, s1): s1 = y xor x xor s2
    ps1 = np.array([1 - p1, p1])
    a = pu[:, :, None, None] * ps2[None, None, :, None] * w          # [b,u,s2,v]
    s2 = np.array([0, 1])
    d = 0.0
    for y in range(2):
        s1 = y ^ xmap ^ s2[None, None, :]                              # [b,u,s2]
        m1 = np.einsum("bus,busv->buv", ps1[1] * (s1 == 1), a)
        m0 = np.einsum("bus,busv->buv", ps1[0] * (s1 == 0), a)
        d = d + np.minimum(m0, m1).sum((1, 2))
    return i_uy, i_vs, cost, d


def _repair_cost_mix(weights, unit_cost, budget):
    """Mix a batch of distributions toward their cheapest atom to meet a budget.

    weights: (B, K); unit_cost: (B, K). Returns new weights and feasibility.
    """
    total = (weights * unit_cost).sum(1)
    j = np.argmin(unit_cost, axis=1)
    cj = unit_cost[np.arange(len(j)), j]
    feasible = cj <= budget + 1e-15
    over = total > budget
    denom = np.where(total - cj > 0, total - cj, 1.0)
    t = np.where(over & feasible, (total - budget) / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    e = np.zeros_like(weights)
    e[np.arange(len(j)), j] = 1.0
    out = (1 - t)[:, None] * weights + t[:, None] * e
    return out, feasible


def _repair_info(p1, p2, pu, w, xmap, iters=22):
    """Smallest mixing of p(v|u,s2) toward p(v|u) meeting I(U;Y) >= I(V;S2|U,Y).

    The conditional information is convex in the mixing weight and vanishes
    at full mixing, so the feasible weights form an interval ending at 1.
    """
    ps2 = np.array([1 - p2, p2])
    wbar = np.einsum("s,busv->buv", ps2, w)[:, :, None, :]
    pusy = _causal_channel(p1, p2, pu, xmap)
    puy = pusy.sum(2)
    i_uy = _xlogy_ratio(puy, puy, puy.sum(2, keepdims=True) * puy.sum(1, keepdims=True)).sum((1, 2))
    need = _cond_info_v_s2(pusy, w) > i_uy + CAUSAL_SLACK
    if not need.any():
        return w
    idx = np.flatnonzero(need)
    ws, wb, ps, iu = w[idx], wbar[idx], pusy[idx], i_uy[idx]
    lo = np.zeros(len(idx))
    hi = np.ones(len(idx))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        wm = (1 - mid)[:, None, None, None] * ws + mid[:, None, None, None] * wb
        good = _cond_info_v_s2(ps, wm) <= iu + CAUSAL_SLACK
        hi = np.where(good, mid, hi)
        lo = np.where(good, lo, mid)
    out = w.copy()
    out[idx] = (1 - hi)[:, None, None, None] * ws + hi[:, None, None, None] * wb
    return out


def _random_causal(rng, n, K, V):
    pu = rng.dirichlet(np.ones(K) * rng.choice([0.2, 1.0]), size=n)
    conc = rng.choice([0.05, 0.3, 1.0], size=(n, 1, 1, 1))
    g = rng.gamma(np.broadcast_to(conc, (n, K, 2, V)))
    g = g + 1e-300
    w = g / g.sum(-1, keepdims=True)
    xmap = rng.integers(0, 2, size=(n, K, 2))
    return pu, w, xmap


def _causal_seeds(prob, K, V):
    p2, c = prob.p2, prob.cost
    seeds = []
    # no help
    pu = np.zeros(K); pu[0] = 1
    w = np.zeros((K, 2, V)); w[..., 0] = 1
    xm = np.zeros((K, 2), int)
    seeds.append((pu.copy(), w.copy(), xm.copy()))
    # time sharing between exact cancellation and doing nothing
    t = 1.0 if p2 == 0 else min(1.0, c / p2)
    pu = np.zeros(K); pu[0] = t; pu[1] = 1 - t
    xm = np.zeros((K, 2), int); xm[0] = [0, 1]
    seeds.append((pu.copy(), w.copy(), xm.copy()))
    # same, but also describing S2 in the idle slot through V
    w2 = w.copy(); w2[1, 0] = np.eye(V)[0]; w2[1, 1] = np.eye(V)[1]
    seeds.append((pu.copy(), w2, xm.copy()))
    return seeds


def _stack(items):
    return tuple(np.stack(z) for z in zip(*items))


def _perturb_causal(rng, pu, w, xmap, scale):
    n = len(pu)
    lp = np.log(pu + 1e-12) + scale * rng.standard_normal(pu.shape)
    pu = np.exp(lp - lp.max(1, keepdims=True)); pu /= pu.sum(1, keepdims=True)
    lw = np.log(w + 1e-12) + scale * rng.standard_normal(w.shape)
    w = np.exp(lw - lw.max(-1, keepdims=True)); w /= w.sum(-1, keepdims=True)
    flip = rng.random(xmap.shape) < 0.05 * min(scale, 1.0)
    return pu, w, np.where(flip, 1 - xmap, xmap)


def causal_search(prob, budget=20000, seed=0, batch=500, u_size=4, v_size=12):
    """Randomised search of the causal distortion-cost characterisation.

    Every returned point satisfies the information and cost constraints, so
    the value is an achievable causal distortion (kind "upper"). ``budget``
    counts evaluated candidate schemes.
    """
    p1, p2, c = prob.p1, prob.p2, prob.cost
    K, V = u_size, v_size
    rng = np.random.default_rng(seed)
    ps2 = np.array([1 - p2, p2])
    if c >= p2:
        pu = np.zeros(K); pu[0] = 1
        w = np.zeros((K, 2, V)); w[..., 0] = 1
        xm = np.zeros((K, 2), int); xm[0] = [0, 1]
        return BoundResult(0.0, "upper", {"pu": pu.tolist(), "x": xm.tolist()}, 1,
                           {"route": "cancellation"})

    best = {"value": np.inf}
    evals = 0
    pool = []

    def evaluate(pu, w, xmap):
        nonlocal evals
        unit = np.einsum("s,bus->bu", ps2, xmap.astype(float))
        pu, feas = _repair_cost_mix(pu, unit, c)
        w = _repair_info(p1, p2, pu, w, xmap)
        i_uy, i_vs, cost, dist = causal_terms(p1, p2, pu, w, xmap)
        ok = feas & (i_vs <= i_uy + CAUSAL_SLACK) & (cost <= c + 1e-12)
        evals += len(pu)
        d = np.where(ok, dist, np.inf)
        for k in np.argsort(d)[:8]:
            if np.isfinite(d[k]):
                pool.append((float(d[k]), pu[k].copy(), w[k].copy(), xmap[k].copy()))
        k = int(np.argmin(d))
        if d[k] < best["value"]:
            best.update(value=float(d[k]), pu=pu[k], w=w[k], x=xmap[k])

    evaluate(*_stack(_causal_seeds(prob, K, V)))
    explore = budget // 2
    while evals < explore:
        n = min(batch, explore - evals)
        evaluate(*_random_causal(rng, n, K, V))
    scale = 1.0
    while evals < budget:
        pool.sort(key=lambda r: r[0])
        del pool[16:]
        n = min(batch, budget - evals)
        picks = [pool[i % len(pool)] for i in range(n)]
        pu, w, xm = _stack([(r[1], r[2], r[3]) for r in picks])
        evaluate(*_perturb_causal(rng, pu, w, xm, scale))
        scale = max(scale * 0.7, 0.02)
    return BoundResult(best["value"], "upper",
                       {"pu": best["pu"].tolist(), "pv_given_u_s2": best["w"].tolist(),
                        "x": best["x"].tolist()}, evals, {"seed": seed})


def hybrid_terms(p1, p2, pu_s, f):
    """Batched I(U;Y), I(U;S2), cost and MAP distortion for hybrid schemes.

    pu_s: (B, 2, K) p(u|s2); f: (B, K, 2).
    """
    ps2 = np.array([1 - p2, p2])
    ps1 = np.array([1 - p1, p1])
    B, _, K = pu_s.shape
    jus = np.transpose(pu_s, (0, 2, 1)) * ps2[None, None, :]          # [b,u,s2]
    P = np.zeros((B, K, 2, 2, 2))                                      # [b,u,s2,s1,y]
    s2 = np.array([0, 1])
    for s1 in range(2):
        y = f ^ s2[None, None, :] ^ s1
        for yy in range(2):
            P[:, :, :, s1, yy] = jus * ps1[s1] * (y == yy)
    i_uy = _ent(P, (1,)) + _ent(P, (4,)) - _ent(P, (1, 4))
    i_us = _ent(P, (1,)) + _ent(P, (2,)) - _ent(P, (1, 2))
    cost = (jus * f).sum((1, 2))
    puy = P.sum(2)                                                     # [b,u,s1,y]
    dist = np.minimum(puy[:, :, 0, :], puy[:, :, 1, :]).sum((1, 2))
    return i_uy, np.maximum(i_us, 0.0), cost, dist


def _hybrid_feasible(i_uy, i_us):
    # strict decoding condition, or U independent of S2 (pure time sharing)
    return (i_uy - i_us > GP_SLACK) | (i_us <= GP_SLACK)


def _hybrid_seeds(prob, K):
    p2, c = prob.p2, prob.cost
    out = []
    pu = np.zeros((2, K)); pu[:, 0] = 1
    out.append((pu.copy(), np.zeros((K, 2), int)))
    w = _prop1_witness(min(c, 1.0))
    pu = np.zeros((2, K)); pu[:, :2] = w.pu_given_s2
    f = np.zeros((K, 2), int); f[:2] = w.f
    out.append((pu, f))
    t = 1.0 if p2 == 0 else min(1.0, c / p2)
    pu = np.zeros((2, K)); pu[:, 0] = t; pu[:, 1] = 1 - t
    f = np.zeros((K, 2), int); f[0] = [0, 1]
    out.append((pu, f))
    return out


def ach_thm2_binary(prob, budget=20000, seed=0, batch=1000, u_size=4):
    """Search for the best hybrid-coding distortion E d(S1, s1hat(U, Y))."""
    p1, p2, c = prob.p1, prob.p2, prob.cost
    K = u_size
    rng = np.random.default_rng(seed)
    ps2 = np.array([1 - p2, p2])
    best = {"value": np.inf}
    evals = 0
    pool = []

    def evaluate(pu_s, f):
        nonlocal evals
        # cost repair: mix each row toward its cheapest label
        unit = np.transpose(f, (0, 2, 1)).astype(float)              # [b,s2,u]
        cur = (pu_s * unit).sum(2) @ ps2
        j = np.argmin(unit, axis=2)                                   # [b,s2]
        e = np.zeros_like(pu_s)
        bi = np.arange(len(f))[:, None]
        e[bi, np.arange(2)[None, :], j] = 1.0
        floor = (e * unit).sum(2) @ ps2
        feas = floor <= c + 1e-15
        t = np.where((cur > c) & feas, (cur - c) / np.where(cur - floor > 0, cur - floor, 1.0), 0.0)
        t = np.clip(t, 0, 1)[:, None, None]
        pu_s = (1 - t) * pu_s + t * e
        i_uy, i_us, cost, dist = hybrid_terms(p1, p2, pu_s, f)
        ok = feas & _hybrid_feasible(i_uy, i_us) & (cost <= c + 1e-12)
        evals += len(f)
        d = np.where(ok, dist, np.inf)
        for k in np.argsort(d)[:8]:
            if np.isfinite(d[k]):
                pool.append((float(d[k]), pu_s[k].copy(), f[k].copy()))
        k = int(np.argmin(d))
        if d[k] < best["value"]:
            best.update(value=float(d[k]), pu=pu_s[k], f=f[k])

    evaluate(*_stack(_hybrid_seeds(prob, K)))
    explore = budget // 2
    while evals < explore:
        n = min(batch, explore - evals)
        conc = rng.choice([0.1, 0.5, 1.0], size=(n, 1, 1))
        g = rng.gamma(np.broadcast_to(conc, (n, 2, K))) + 1e-300
        evaluate(g / g.sum(-1, keepdims=True), rng.integers(0, 2, size=(n, K, 2)))
    scale = 1.0
    while evals < budget:
        pool.sort(key=lambda r: r[0])
        del pool[16:]
        n = min(batch, budget - evals)
        picks = [pool[i % len(pool)] for i in range(n)]
        pu = np.stack([r[1] for r in picks])
        f = np.stack([r[2] for r in picks])
        lp = np.log(pu + 1e-12) + scale * rng.standard_normal(pu.shape)
        pu = np.exp(lp - lp.max(-1, keepdims=True)); pu /= pu.sum(-1, keepdims=True)
        flip = rng.random(f.shape) < 0.05 * min(scale, 1.0)
        evaluate(pu, np.where(flip, 1 - f, f))
        scale = max(scale * 0.7, 0.02)
    return BoundResult(best["value"], "upper", {"pu_given_s2": best["pu"].tolist(),
                                                "f": best["f"].tolist()}, evals, {"seed": seed})


def no_helper_distortion(p1, p2):
    """MAP Hamming error for S1 from S1 xor S2 alone."""
    # P(S1 = s, Y = y) for y = 0, 1
    a = np.array([(1 - p1) * (1 - p2), (1 - p1) * p2])   # s = 0
    b = np.array([p1 * p2, p1 * (1 - p2)])               # s = 1
    return float(np.minimum(a, b).sum())


def all_maps(u_size=4):
    """Every deterministic f: (u, s2) -> x as an array of shape (u_size, 2)."""
    for bits in itertools.product((0, 1), repeat=2 * u_size):
        yield np.array(bits, dtype=int).reshape(u_size, 2)
