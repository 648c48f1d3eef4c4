"""Scalar information measures and the result container used by every evaluator.

All entropies here are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

H2_INV_TOL = 1e-12
H2_INV_MAXITER = 200
# slack on the [0, 1] domain of h2_inv so that roundoff right at the
# endpoints does not flip the clamp
DOMAIN_SLACK = 1e-12


@dataclass
class BoundResult:
    """A bound value with its kind and whatever the optimizer reports.

    ``kind`` is one of ``"lower"``, ``"upper"`` or ``"exact"``.
    """

    value: float
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    evaluations: int = 0
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("lower", "upper", "exact"):
            raise ValueError(f"unknown bound kind {self.kind!r}")
        self.value = float(self.value)

    def __float__(self):
        return self.value


def _check_prob(p, name="p"):
    a = np.asarray(p, dtype=float)
    if np.any(a < 0) or np.any(a > 1) or np.any(np.isnan(a)):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    return a


def h2(p):
    """Binary entropy in bits, 0 log 0 taken as 0. Works elementwise."""
    a = _check_prob(p)
    q = 1.0 - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(a > 0, -a * np.log2(np.where(a > 0, a, 1.0)), 0.0)
        t2 = np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    out = t1 + t2
    return float(out) if out.ndim == 0 else out


def _h2_unchecked(a):
    # caller guarantees a in [0, 1]
    q = 1.0 - a
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.where(a > 0, -a * np.log2(np.where(a > 0, a, 1.0)), 0.0)
                + np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0))


def h2_inv(t):
    """Inverse of h2 restricted to [0, 1/2].

    Arguments outside [0, 1] map to 0. Bisection to ``H2_INV_TOL`` absolute
    accuracy in the returned probability. Elementwise on arrays.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    inside = (t >= -DOMAIN_SLACK) & (t <= 1.0 + DOMAIN_SLACK)
    tt = np.clip(t[inside], 0.0, 1.0)
    lo = np.zeros_like(tt)
    hi = np.full_like(tt, 0.5)
    for _ in range(H2_INV_MAXITER):
        mid = 0.5 * (lo + hi)
        below = _h2_unchecked(mid) < tt
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo, initial=0.0) < H2_INV_TOL:
            break
    out[inside] = 0.5 * (lo + hi)
    # exact endpoints
    out[inside] = np.where(tt == 0.0, 0.0, np.where(tt == 1.0, 0.5, out[inside]))
    return float(out[0]) if scalar else out


def bconv(a, b):
    """Binary convolution a(1-b) + b(1-a)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = a * (1.0 - b) + b * (1.0 - a)
    return float(out) if out.ndim == 0 else out


def entropy(p, axis=None):
    """Shannon entropy in bits of a (possibly unnormalised) mass array.

    The array is used as-is; pass a normalised distribution.
    """
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axis)


def split_entropy(m, n):
    """(m + n) * h2(m / (m + n)) for nonnegative masses; 0 when both vanish.

    This is the joint-mass form of a conditional binary entropy term and is
    jointly concave in (m, n).
    """
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    s = m + n
    # log differences rather than log(s / m): s / m overflows for subnormal m
    ls = np.log2(np.where(s > 0, s, 1.0))
    tm = np.where(m > 0, m * (ls - np.log2(np.where(m > 0, m, 1.0))), 0.0)
    tn = np.where(n > 0, n * (ls - np.log2(np.where(n > 0, n, 1.0))), 0.0)
    out = tm + tn
    return float(out) if out.ndim == 0 else out


def mutual_information(joint):
    """I(A;B) in bits for a 2-D joint mass table."""
    joint = np.asarray(joint, dtype=float)
    return float(entropy(joint.sum(1)) + entropy(joint.sum(0)) - entropy(joint))


def positive_part(x):
    return np.maximum(x, 0.0)
