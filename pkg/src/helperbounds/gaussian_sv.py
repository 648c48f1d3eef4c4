"""Helper that knows both the source and the interference.

Y = X + S1 + S2 + Z with S1 ~ N(0, P1), S2 ~ N(0, P2), Z ~ N(0, N), E X^2 <= P.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import BoundResult

ALPHA_INF = 1e3


@dataclass(frozen=True)
class GaussianSVProblem:
    p1: float
    p2: float
    power: float
    noise: float

    def __post_init__(self):
        if self.p1 <= 0 or self.p2 < 0 or self.power < 0 or self.noise <= 0:
            raise ValueError("need p1 > 0, p2 >= 0, power >= 0, noise > 0")


@dataclass(frozen=True)
class QuadSolution:
    rho_xs1: float
    rho_xs2: float
    mse: float


def thm8_distortion(prob, alpha, beta):
    """Distortion of the superposition scheme for given (alpha, beta); broadcasts."""
    P1, P2, P, N = prob.p1, prob.p2, prob.power, prob.noise
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    fresh = P * (1 - alpha ** 2 - beta ** 2)
    # (alpha sqrt(P/P1) + 1)^2 P1 and the P2 analogue, written without division
    sig = (alpha * np.sqrt(P) + np.sqrt(P1)) ** 2
    intf = (beta * np.sqrt(P) + np.sqrt(P2)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return P1 / ((1 + sig / (intf + fresh + N)) * (1 + fresh / N))


def ach_thm8(prob, grid=201, refine=5, extra_starts=()):
    """Minimum of thm8_distortion over the unit disk in (alpha, beta)."""
    a = np.linspace(-1, 1, grid)
    A, B = np.meshgrid(a, a, indexing="ij")
    inside = A ** 2 + B ** 2 <= 1
    d = np.where(inside, thm8_distortion(prob, A, B), np.inf).ravel()
    evals = int(inside.sum())
    starts = [(0.0, 0.0)] + list(extra_starts)
    for i in np.argsort(d, kind="stable")[:refine]:
        starts.append((A.ravel()[i], B.ravel()[i]))

    def proj(x):
        n = np.hypot(x[0], x[1])
        return (x[0] / n, x[1] / n) if n > 1 else (x[0], x[1])

    def obj(x):
        return float(thm8_distortion(prob, *proj(x)))

    k = int(np.argmin(d))
    best, best_x = float(d[k]), (A.ravel()[k], B.ravel()[k])
    for x0 in starts:
        v0 = obj(x0)
        if v0 < best:
            best, best_x = v0, proj(x0)
        r = minimize(obj, np.array(x0, float), method="Nelder-Mead",
                     options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 2000})
        evals += r.nfev
        if r.fun < best:
            best, best_x = float(r.fun), proj(r.x)
    return BoundResult(best, "upper", {"alpha": float(best_x[0]), "beta": float(best_x[1])}, evals)


def lb_prop7(prob):
    P1, P2, P, N = prob.p1, prob.p2, prob.power, prob.noise
    if P2 == 0:
        return BoundResult(0.0, "lower", {}, 0, {"degenerate": "P2 = 0"})
    return BoundResult(P1 / ((1 + P1 / P2) * (1 + P / N)), "lower", {}, 1)


def lb_prop8(prob):
    P1, P, N = prob.p1, prob.power, prob.noise
    return BoundResult(P1 / (1 + (np.sqrt(P) + np.sqrt(P1)) ** 2 / N), "lower", {}, 1)


def mse_objective(prob, alpha, rho1, rho2):
    """Residual power after the best linear use of S1 + alpha S2 (broadcasts)."""
    P1, P2, P, N = prob.p1, prob.p2, prob.power, prob.noise
    k = (1 - alpha) * alpha * P2 + alpha * rho2 + rho1
    return P + (1 - alpha) ** 2 * P2 + 2 * (1 - alpha) * rho2 + N - k * k / (P1 + alpha ** 2 * P2)


def mse_alpha_batch(prob, alphas):
    """Closed-form box maximum of mse_objective for an array of nonzero alphas.

    For fixed rho2 the best rho1 cancels as much of the squared term as the
    box allows, leaving a concave piecewise quadratic in rho2 whose maximum
    is among the box ends, the kinks and the stationary points of the pieces.
    Returns (rho1, rho2, mse) arrays.
    """
    alpha = np.asarray(alphas, float)
    if np.any(alpha == 0):
        raise ValueError("alpha must be nonzero")
    P1, P2, P = prob.p1, prob.p2, prob.power
    r1 = np.sqrt(P * P1)
    r2 = np.sqrt(P * P2)
    kk = (1 - alpha) * alpha * P2
    d0 = P1 + alpha ** 2 * P2
    cands = [np.full_like(alpha, -r2), np.full_like(alpha, r2), np.zeros_like(alpha)]
    for s in (1.0, -1.0):
        cands.append((s * r1 - kk) / alpha)                              # kink
        cands.append(((1 - alpha) * d0 / alpha + s * r1 - kk) / alpha)   # stationary
    best_val = np.full_like(alpha, -np.inf)
    best_size = np.zeros_like(alpha)
    best1 = np.zeros_like(alpha)
    best2 = np.zeros_like(alpha)
    for c in cands:
        rho2 = np.clip(c, -r2, r2)
        rho1 = np.clip(-(kk + alpha * rho2), -r1, r1)
        val = mse_objective(prob, alpha, rho1, rho2)
        size = np.abs(rho1) + np.abs(rho2)
        # ties go to the smaller correlations
        take = (val > best_val) | ((val == best_val) & (size < best_size))
        best_val = np.where(take, val, best_val)
        best_size = np.where(take, size, best_size)
        best1 = np.where(take, rho1, best1)
        best2 = np.where(take, rho2, best2)
    return best1, best2, best_val


def mse_alpha(prob, alpha):
    """Maximise mse_objective over the correlation box in closed form."""
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    r1, r2, v = mse_alpha_batch(prob, np.array([float(alpha)]))
    return QuadSolution(float(r1[0]), float(r2[0]), float(v[0]))


def default_alpha_grid(points=201, lo=1e-2, hi=ALPHA_INF):
    pos = np.geomspace(lo, hi, points)
    return np.unique(np.r_[-pos[::-1], pos, 1.0])


def thm9_weight(prob, alpha):
    P1, P2, N = prob.p1, prob.p2, prob.noise
    alpha = np.asarray(alpha, float)
    return alpha ** 2 * P1 * P2 / (P1 + alpha ** 2 * P2) * N


def thm9_value(prob, alpha):
    sol = mse_alpha(prob, alpha)
    return float(thm9_weight(prob, alpha)) / sol.mse, sol


def lb_thm9(prob, alpha_grid=None):
    """Best side-information bound over a grid of alpha values."""
    grid = default_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, float).ravel()
    if grid.size == 0 or np.any(grid == 0):
        raise ValueError("alpha grid must be nonempty and exclude 0")
    r1, r2, mse = mse_alpha_batch(prob, grid)
    vals = thm9_weight(prob, grid) / mse
    k = int(np.argmax(vals))
    return BoundResult(max(float(vals[k]), 0.0), "lower",
                       {"alpha": float(grid[k]), "rho_xs1": float(r1[k]), "rho_xs2": float(r2[k]),
                        "mse": float(mse[k])}, len(grid))


@dataclass
class GapCertificate:
    threshold: float
    certified: bool
    ratio: float
    weight: float


def gap_threshold(P, N, epsilon):
    if not (0 < epsilon <= P / (P + N)):
        raise ValueError("epsilon must lie in (0, P/(P+N)]")
    g = np.sqrt(epsilon * (P + N) / (2 * P))
    gs = g * np.sqrt(P)
    num = np.sqrt(g * g * P + gs * (2 + gs) * (P * (1 - g * g) + N)) - gs
    return float(num / (gs * (2 + gs))), float(g)


def gap_thm10(prob, epsilon):
    """Interference threshold above which upper and lower bounds are within 1/(1 - eps)."""
    thr, g = gap_threshold(prob.power, prob.noise, epsilon)
    certified = bool(np.sqrt(prob.p2) >= thr)
    ach = ach_thm8(prob, extra_starts=[(g, -g)])
    lb = lb_prop7(prob)
    ratio = ach.value / lb.value if lb.value > 0 else np.inf
    return GapCertificate(thr, certified, float(ratio), g)
