"""Erasure setting: the decoder sees S1 unless X xor S2 = 1, in which case it sees an erasure."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundResult

SUM_TOL = 1e-12


@dataclass(frozen=True)
class ErasureProblem:
    source_dist: tuple
    p2: float
    cost: float
    distortion: tuple

    def __init__(self, source_dist, p2, cost, distortion=None):
        src = np.asarray(source_dist, float)
        if src.ndim != 1 or src.size == 0:
            raise ValueError("source_dist must be a nonempty vector")
        if np.any(src < 0) or abs(src.sum() - 1) > SUM_TOL:
            raise ValueError("source_dist must be a probability vector")
        if not (0 <= p2 <= 1 and 0 <= cost <= 1):
            raise ValueError("p2 and cost must lie in [0, 1]")
        d = 1.0 - np.eye(src.size) if distortion is None else np.asarray(distortion, float)
        if d.ndim != 2 or d.shape[0] != src.size:
            raise ValueError("distortion must have one row per source symbol")
        if np.any(d < 0):
            raise ValueError("distortion entries must be nonnegative")
        object.__setattr__(self, "source_dist", tuple(src))
        object.__setattr__(self, "p2", float(p2))
        object.__setattr__(self, "cost", float(cost))
        object.__setattr__(self, "distortion", tuple(map(tuple, d)))

    @property
    def src(self):
        return np.asarray(self.source_dist)

    @property
    def dmat(self):
        return np.asarray(self.distortion)


def erased_estimate(prob):
    """Best fixed reconstruction with no observation, and its expected distortion."""
    risk = prob.src @ prob.dmat
    k = int(np.argmin(risk))
    return k, float(risk[k])


def dmin_erasure(prob):
    """Exact minimum distortion.

    Each unit of cost removes erasure mass by cancelling S2, so the erasure
    probability is [p2 - C]^+. Erased symbols cost the prior risk, unerased
    ones cost the per-symbol best reconstruction.
    """
    _, blind = erased_estimate(prob)
    seen = float(prob.src @ prob.dmat.min(axis=1))
    erase = max(prob.p2 - prob.cost, 0.0)
    value = erase * blind + (1 - erase) * seen
    return BoundResult(value, "exact", {"erasure_prob": erase}, 1,
                       {"blind_risk": blind, "observed_risk": seen})
