"""Gaussian estimation with a helper: S1 ~ N(0, 1), S2 ~ N(0, P2), Y = X + S1 + S2.

The helper's power budget is E X^2 <= P. Logarithms in this module are natural.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .core import BoundResult

FEAS_SLACK = 1e-9
DEGENERATE_U2 = 1e-14
GAMMA_MAX = 1e3


@dataclass(frozen=True)
class GaussianProblem:
    power: float
    interference_power: float

    def __post_init__(self):
        if self.power < 0 or self.interference_power < 0:
            raise ValueError("powers must be nonnegative")

    @property
    def P(self):
        return self.power

    @property
    def P2(self):
        return self.interference_power


@dataclass(frozen=True)
class Thm5Params:
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class VerduParams:
    gamma: float
    c: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        if self.gamma < 1 or self.r < 0:
            raise ValueError("need gamma >= 1 and r >= 0")


# ------------------------------------------------------------ achievability

def hybrid_moments(P, P2, alpha, beta, gamma):
    """Second moments of the Gaussian hybrid scheme; broadcasts over parameters.

    X splits into a part aligned with S2 (weight alpha) and a fresh part of
    power P'; U = fresh + gamma S2 + beta-weighted correlation.
    """
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    gamma = np.asarray(gamma, float)
    ab = alpha * beta
    root = -ab + np.sqrt(np.maximum(ab * ab + 1 - alpha * alpha, 0.0))
    sp = np.sqrt(P) * root                         # sqrt(P')
    pp = sp * sp
    s2 = np.sqrt(P2)
    eu2 = pp + 2 * gamma * beta * sp * s2 + gamma * gamma * P2
    euy = (ab * np.sqrt(P) * sp + pp + alpha * gamma * np.sqrt(P * P2)
           + gamma * beta * sp * s2 + beta * sp * s2 + gamma * P2)
    ey2 = P + 1 + P2 + 2 * alpha * np.sqrt(P * P2) + 2 * beta * sp * s2
    return pp, eu2, euy, ey2


def thm5_distortion(P, P2, alpha, beta, gamma):
    """Distortion and feasibility of one parameter choice (arrays broadcast).

    A vanishing auxiliary (E U^2 ~ 0) reduces to linear estimation from Y
    alone and is accepted; it is flagged through the third return value.
    """
    pp, eu2, euy, ey2 = hybrid_moments(P, P2, alpha, beta, gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        det = ey2 * eu2 - euy * euy
        d = 1 - eu2 / det
        feas = (1 - np.asarray(beta) ** 2) * pp > eu2 - euy * euy / ey2 + FEAS_SLACK
    degen = eu2 < DEGENERATE_U2
    with np.errstate(divide="ignore"):
        d = np.where(degen, 1 - 1 / ey2, d)
    feas = (feas | degen) & np.isfinite(d)
    return d, feas, degen


def ach_thm5(prob, grid=(41, 41, 121), gamma_range=(-3.0, 3.0), refine=5):
    """Best hybrid-coding distortion: grid over (alpha, beta, gamma), then Nelder-Mead."""
    P, P2 = prob.P, prob.P2
    a = np.linspace(-1, 1, grid[0])
    b = np.linspace(-1, 1, grid[1])
    g = np.linspace(*gamma_range, grid[2])
    A, B, G = np.meshgrid(a, b, g, indexing="ij")
    d, feas, _ = thm5_distortion(P, P2, A, B, G)
    vals = np.where(feas, d, np.inf).ravel()
    evals = vals.size
    # structured start: X independent of S2, U = X + S2
    starts = [(0.0, 0.0, 1.0)]
    for i in np.argsort(vals, kind="stable")[:refine]:
        if np.isfinite(vals[i]):
            starts.append((A.ravel()[i], B.ravel()[i], G.ravel()[i]))

    def obj(x):
        al, be = np.clip(x[0], -1, 1), np.clip(x[1], -1, 1)
        dd, ff, _ = thm5_distortion(P, P2, al, be, x[2])
        return float(dd) if ff else np.inf

    best, best_x = np.inf, None
    if np.isfinite(vals).any():
        k = int(np.argmin(vals))
        best, best_x = float(vals[k]), (A.ravel()[k], B.ravel()[k], G.ravel()[k])
    for x0 in starts:
        v0 = obj(x0)
        if v0 < best:
            best, best_x = v0, tuple(x0)
        if not np.isfinite(v0):
            continue
        r = minimize(obj, np.array(x0, float), method="Nelder-Mead",
                     options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        evals += r.nfev
        if r.fun < best:
            best, best_x = float(r.fun), (float(np.clip(r.x[0], -1, 1)),
                                          float(np.clip(r.x[1], -1, 1)), float(r.x[2]))
    diag = {}
    if best_x is None or not np.isfinite(best):
        best = P2 / (1 + P2)
        diag["fallback"] = "no feasible point; no-helper linear estimate"
        params = {}
    else:
        _, _, degen = thm5_distortion(P, P2, *best_x)
        if bool(degen):
            diag["degenerate_auxiliary"] = True
        params = {"alpha": best_x[0], "beta": best_x[1], "gamma": best_x[2]}
    return BoundResult(min(max(best, 0.0), 1.0), "upper", params, evals, diag)


def zero_dist_gaussian(prob):
    P, P2 = prob.P, prob.P2
    return bool(P > 1 - 1 / (P + P2 + 1))


# ------------------------------------------------------------- lower bounds

def lb_gs(prob):
    P, P2 = prob.P, prob.P2
    inner = np.sqrt(P2 / (P2 + 2 * np.sqrt(P * P2) + P + 1)) - np.sqrt(P)
    return BoundResult(max(inner, 0.0) ** 2, "lower", {}, 1)


def _gws_inner(P, P2, sigma, t):
    # gamma = 1 / (1 + t); the bracket is concave in t
    A = np.sqrt(P2 / (1 + P2 + P + 2 * sigma))
    q = np.maximum(P2 * t * t - 2 * sigma * t + P, 0.0)
    return A * (1 + t) - np.sqrt(q)


def gws_objective(P, P2, sigma, gamma):
    """The bracketed expression of the GWS bound for explicit (sigma, gamma)."""
    A = np.sqrt(P2 / (1 + P2 + P + 2 * sigma))
    q = np.maximum((1 - gamma) ** 2 * P2 + gamma ** 2 * P - 2 * gamma * (1 - gamma) * sigma, 0.0)
    return np.maximum(A - np.sqrt(q), 0.0) ** 2 / gamma ** 2


def lb_gws(prob, grid_size=401, gamma_max=GAMMA_MAX, coarse=200, iters=120):
    """Discretised GWS bound: min over a uniform correlation grid of a sup over gamma.

    The inner sup is taken in t = 1/gamma - 1, where the bracket is concave:
    a log-spaced gamma grid locates the peak and golden-section search
    refines it. The discretised minimum sits above the continuous one.
    """
    if grid_size < 2:
        raise ValueError("grid_size >= 2")
    P, P2 = prob.P, prob.P2
    lim = np.sqrt(P * P2)
    sigma = np.linspace(-lim, lim, grid_size)
    if P2 == 0:
        return BoundResult(0.0, "lower", {"sigma": 0.0, "gamma": 1.0}, 0,
                           {"discretised": True})
    t_lo = 1.0 / gamma_max - 1.0
    gam = np.geomspace(1e-8, gamma_max, coarse)
    tg = np.sort(1.0 / gam - 1.0)
    vals = _gws_inner(P, P2, sigma[:, None], tg[None, :])
    k = np.argmax(vals, axis=1)
    lo = tg[np.maximum(k - 1, 0)]
    hi = tg[np.minimum(k + 1, len(tg) - 1)]
    lo = np.maximum(lo, t_lo)
    # golden section on [lo, hi] for every sigma at once
    phi = (np.sqrt(5) - 1) / 2
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1 = _gws_inner(P, P2, sigma, x1)
    f2 = _gws_inner(P, P2, sigma, x2)
    for _ in range(iters):
        left = f1 >= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x2n = np.where(left, x1, lo + phi * (hi - lo))
        x1n = np.where(left, hi - phi * (hi - lo), x2)
        f1n = np.where(left, _gws_inner(P, P2, sigma, x1n), f2)
        f2 = np.where(left, f1, _gws_inner(P, P2, sigma, x2n))
        f1 = f1n
        x1, x2 = x1n, x2n
    t_best = 0.5 * (lo + hi)
    inner = np.maximum(np.maximum(_gws_inner(P, P2, sigma, t_best), vals.max(1)), 0.0) ** 2
    j = int(np.argmin(inner))
    evals = vals.size + grid_size * (2 * iters + 2)
    return BoundResult(float(inner[j]), "lower",
                       {"sigma": float(sigma[j]), "gamma": float(1.0 / (1.0 + t_best[j]))},
                       evals, {"discretised": True, "grid_size": grid_size})


def prop6_raw(P, P2, gamma):
    """Unfloored mismatched-decoder bound, grouped so that gamma -> 1 stays accurate."""
    gamma = np.asarray(gamma, float)
    gm1 = gamma - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        # ln((1 + gamma P2)/(1 + P2)) + 2 sqrt(P)/sqrt(P2) [1/(1 + gamma P2) - 1/(1 + P2)] - gamma P
        v = (np.log1p(gm1 * P2 / (1 + P2)) / gm1
             - 2 * np.sqrt(P * P2) / ((1 + gamma * P2) * (1 + P2))
             - gamma * P / gm1)
    return np.where(gamma == 1, 0.0, v)


def lb_prop6(prob, gamma):
    """Mismatched-decoder bound for one gamma >= 1 (natural log)."""
    if gamma < 1:
        raise ValueError("gamma >= 1")
    P, P2 = prob.P, prob.P2
    if P2 == 0:
        return BoundResult(0.0, "lower", {"gamma": gamma}, 0, {"degenerate": "P2 = 0"})
    raw = float(prop6_raw(P, P2, gamma))
    return BoundResult(max(raw, 0.0), "lower", {"gamma": gamma}, 1,
                       {"raw": raw, "clamped": min(max(raw, 0.0), 1.0)})


def _maximise_log_gamma(fun, gamma_max, points):
    """Max of fun(gamma) over (1, gamma_max]: log grid on gamma - 1, then bounded refinement."""
    z = np.linspace(np.log(1e-6), np.log(gamma_max - 1), points)
    v = fun(1 + np.exp(z))
    v = np.where(np.isfinite(v), v, -np.inf)
    k = int(np.argmax(v))
    lo, hi = z[max(k - 1, 0)], z[min(k + 1, points - 1)]
    r = minimize_scalar(lambda s: -float(fun(1 + np.exp(s))), bounds=(lo, hi), method="bounded",
                        options={"xatol": 1e-12})
    if -r.fun > v[k]:
        return float(-r.fun), float(1 + np.exp(r.x)), points + r.nfev
    return float(v[k]), float(1 + np.exp(z[k])), points + r.nfev


def lb_prop6_max(prob, gamma_max=GAMMA_MAX, points=400):
    P, P2 = prob.P, prob.P2
    if P2 == 0:
        return BoundResult(0.0, "lower", {"gamma": 1.0}, 0, {"degenerate": "P2 = 0"})
    val, g, n = _maximise_log_gamma(lambda x: prop6_raw(P, P2, x), gamma_max, points)
    return BoundResult(max(val, 0.0), "lower", {"gamma": g}, n, {"raw": val})


def thm7_raw(P, P2, gamma, c, r):
    """Unfloored value of the generalised mismatched bound (broadcasts).

    Differences of the form f(gamma) - f(1) are written in closed form so the
    division by gamma - 1 does not amplify roundoff.
    """
    gamma = np.asarray(gamma, float)
    c = np.asarray(c, float)
    r = np.asarray(r, float)
    gm1 = gamma - 1
    pi = (1 + c) ** 2 * P2 + r * P
    grp = 1 + gamma * r * P
    with np.errstate(divide="ignore", invalid="ignore"):
        den = (1 + pi) * (1 + gamma * pi)
        # log ratio, 1/(1+gamma PI) - 1/(1+PI), and the two P2/PI terms
        small = np.log1p(gm1 * pi / (1 + pi)) - gm1 * pi / den + P2 * gm1 / den
        rest = -c * c * gamma * P2 / grp + gamma * r * P / grp - np.log1p(gamma * r * P)
        k = gm1 / den                       # 1/(PI(1+PI)) - 1/(PI(1+gamma PI))
        a = k - gamma / grp
        b = np.abs(2 * (k + c * gamma / grp)) * np.sqrt(P2)
        sp = np.sqrt(P)
        vertex = b / (2 * np.where(a > 0, a, 1.0))
        x = np.where((a > 0) & (vertex < sp), vertex, sp)
        v = (small + rest + a * x * x - b * x) / gm1
    v = np.where(gamma == 1, 0.0, v)
    return np.where(np.isfinite(v), v, -np.inf)


def lb_thm7(prob, params):
    P, P2 = prob.P, prob.P2
    pi = (1 + params.c) ** 2 * P2 + params.r * P
    if P2 == 0 or pi == 0:
        return BoundResult(0.0, "lower", vars(params).copy(), 0, {"degenerate": "P2 or P_I is 0"})
    raw = float(thm7_raw(P, P2, params.gamma, params.c, params.r))
    return BoundResult(max(raw, 0.0), "lower",
                       {"gamma": params.gamma, "c": params.c, "r": params.r}, 1, {"raw": raw})


def lb_thm7_max(prob, gamma_max=GAMMA_MAX, c_range=(-5.0, 5.0), r_max=10.0,
                grid=(80, 81, 31), refine=5):
    """Sweep of lb_thm7 over (gamma, c, r) with Nelder-Mead polishing.

    The c = r = 0 slice contains the prop6 family, and the best prop6 gamma
    is always used as a start, so the result dominates lb_prop6_max.
    """
    P, P2 = prob.P, prob.P2
    if P2 == 0:
        return BoundResult(0.0, "lower", {"gamma": 1.0, "c": 0.0, "r": 0.0}, 0,
                           {"degenerate": "P2 = 0"})
    G = 1 + np.geomspace(1e-4, gamma_max - 1, grid[0])
    C = np.linspace(*c_range, grid[1])
    R = np.r_[0.0, np.geomspace(1e-3, r_max, grid[2] - 1)]
    g, c, r = np.meshgrid(G, C, R, indexing="ij")
    v = thm7_raw(P, P2, g, c, r).ravel()
    evals = v.size
    p6 = lb_prop6_max(prob, gamma_max)
    starts = [(p6.params["gamma"], 0.0, 0.0)]
    for i in np.argsort(-v, kind="stable")[:refine]:
        starts.append((g.ravel()[i], c.ravel()[i], r.ravel()[i]))

    lg_max = np.log(gamma_max - 1)

    def unpack(x):
        gg = 1 + np.exp(min(x[0], lg_max))
        cc = float(np.clip(x[1], *c_range))
        rr = float(min(x[2] * x[2], r_max))
        return gg, cc, rr

    def obj(x):
        return -float(thm7_raw(P, P2, *unpack(x)))

    best, best_p = -np.inf, starts[0]
    for gg, cc, rr in starts:
        val0 = float(thm7_raw(P, P2, gg, cc, rr))
        if val0 > best:
            best, best_p = val0, (gg, cc, rr)
        x0 = np.array([np.log(gg - 1), cc, np.sqrt(rr)])
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        evals += res.nfev
        if -res.fun > best:
            best, best_p = -res.fun, unpack(res.x)
    return BoundResult(max(best, 0.0), "lower",
                       {"gamma": float(best_p[0]), "c": float(best_p[1]), "r": float(best_p[2])},
                       evals, {"raw": best})


def prop6_thm7_offset(P, P2, gamma):
    """Gap between the zero-c, zero-r slice of lb_thm7 and lb_prop6 (both raw).

    The slice keeps the quadratic term in x* = sqrt(P), which contributes
    P / ((1 + P2)(1 + gamma P2)) on top of the prop6 expression.
    """
    return P / ((1 + P2) * (1 + gamma * P2))
