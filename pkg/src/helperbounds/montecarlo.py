"""Seeded simulation of the symbol-by-symbol schemes.

Every batch draws from its own Philox stream keyed by (seed, batch index), so
results do not depend on how batches are scheduled, and per-batch counters
are summed in index order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .erasure import ErasureProblem, erased_estimate
from .gaussian import GaussianProblem

SCHEMES = ("binary_half", "erasure", "gaussian_uncoded")
DEFAULT_BATCH = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    samples: int = 1_000_000
    seed: int = 0
    scheme: str = "binary_half"
    batch: int = DEFAULT_BATCH

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


@dataclass(frozen=True)
class SimEstimate:
    distortion: float
    stderr: float
    samples: int
    cost: float = float("nan")
    cost_stderr: float = float("nan")

    def __iter__(self):
        # unpacks as (distortion_hat, stderr)
        yield self.distortion
        yield self.stderr


def batch_rng(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _batches(cfg):
    done, index = 0, 0
    while done < cfg.samples:
        n = min(cfg.batch, cfg.samples - done)
        yield index, n
        done += n
        index += 1


class _Moments:
    """Running sum and sum of squares for a few named statistics."""

    def __init__(self, *names):
        self.sums = {k: 0.0 for k in names}
        self.sq = {k: 0.0 for k in names}
        self.n = 0

    def add(self, **vals):
        for k, v in vals.items():
            self.sums[k] += float(np.sum(v))
            self.sq[k] += float(np.sum(np.square(v)))
        self.n += len(next(iter(vals.values())))

    def mean_se(self, k):
        n = self.n
        m = self.sums[k] / n
        if n < 2:
            return m, 0.0
        var = max(self.sq[k] - n * m * m, 0.0) / (n - 1)
        return m, float(np.sqrt(var / n))


def _cancel_prob(p2, cost):
    # X = 1 with this probability when S2 = 1 spends exactly min(C, p2)
    return 1.0 if cost >= p2 else cost / p2


def sim_binary_half(p2, cost, cfg):
    """Uniform source, randomized cancellation of S2, decoder outputs Y."""
    if not (0 <= p2 <= 1 and 0 <= cost <= 1):
        raise ValueError("p2 and cost must lie in [0, 1]")
    if not (p2 > cost > 0):
        raise ValueError("need p2 > cost > 0")
    q = _cancel_prob(p2, cost)
    acc = _Moments("err", "cost")
    for index, n in _batches(cfg):
        rng = batch_rng(cfg.seed, index)
        s1 = rng.random(n) < 0.5
        s2 = rng.random(n) < p2
        x = s2 & (rng.random(n) < q)
        y = x ^ s1 ^ s2
        acc.add(err=(y != s1).astype(float), cost=x.astype(float))
    d, se = acc.mean_se("err")
    c, cse = acc.mean_se("cost")
    return SimEstimate(d, se, acc.n, c, cse)


def sim_erasure(prob: ErasureProblem, cfg):
    """Cancel S2 while budget lasts; copy the best match when seen, prior guess when erased."""
    src, dmat = prob.src, prob.dmat
    guess, _ = erased_estimate(prob)
    seen_best = dmat.min(axis=1)
    q = _cancel_prob(prob.p2, prob.cost) if prob.p2 > 0 else 0.0
    cdf = np.cumsum(src)
    acc = _Moments("err", "cost")
    for index, n in _batches(cfg):
        rng = batch_rng(cfg.seed, index)
        s1 = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(src) - 1)
        s2 = rng.random(n) < prob.p2
        x = s2 & (rng.random(n) < q)
        erased = x ^ s2
        err = np.where(erased, dmat[s1, guess], seen_best[s1])
        acc.add(err=err, cost=x.astype(float))
    d, se = acc.mean_se("err")
    c, cse = acc.mean_se("cost")
    return SimEstimate(d, se, acc.n, c, cse)


def uncoded_residual(prob: GaussianProblem):
    if prob.P2 == 0:
        return 0.0, 0.0
    a = min(1.0, np.sqrt(prob.P / prob.P2))
    return a, (1 - a) ** 2 * prob.P2


def sim_gaussian_uncoded(prob: GaussianProblem, cfg):
    """X = -a S2 with a as large as the power allows, linear MMSE decoder."""
    a, r = uncoded_residual(prob)
    gain = 1.0 / (1.0 + r)
    acc = _Moments("err", "cost")
    for index, n in _batches(cfg):
        rng = batch_rng(cfg.seed, index)
        s1 = rng.standard_normal(n)
        s2 = np.sqrt(prob.P2) * rng.standard_normal(n)
        x = -a * s2
        y = x + s1 + s2
        acc.add(err=(s1 - gain * y) ** 2, cost=x * x)
    d, se = acc.mean_se("err")
    c, cse = acc.mean_se("cost")
    return SimEstimate(d, se, acc.n, c, cse)


@dataclass(frozen=True)
class PairedCounts:
    source_errors: int
    residual_errors: int
    paired_errors: int
    samples: int


def _tally(y, target):
    # 2x2 counts indexed by (y, target)
    return np.bincount(2 * y.astype(int) + target.astype(int), minlength=4).reshape(2, 2)


def claim2_counts(p1, p2, q0, q1, cfg):
    """Optimal per-symbol error counts for S1 and for X xor S2 from the same Y.

    The helper sends X = 1 with probability q0 (S2 = 0) or q1 (S2 = 1). The
    third count scores the estimate of X xor S2 obtained by xoring the
    optimal S1 estimate with Y.
    """
    src = np.zeros((2, 2), dtype=np.int64)
    res = np.zeros((2, 2), dtype=np.int64)
    for index, n in _batches(cfg):
        rng = batch_rng(cfg.seed, index)
        s1 = rng.random(n) < p1
        s2 = rng.random(n) < p2
        x = rng.random(n) < np.where(s2, q1, q0)
        z = x ^ s2
        y = z ^ s1
        src += _tally(y, s1)
        res += _tally(y, z)
    est_s = (src[:, 1] > src[:, 0]).astype(int)        # ties go to 0
    source_errors = int(src.min(axis=1).sum())
    residual_errors = int(res.min(axis=1).sum())
    zhat = est_s ^ np.array([0, 1])
    paired = int(sum(res[y, 1 - zhat[y]] for y in (0, 1)))
    return PairedCounts(source_errors, residual_errors, paired, cfg.samples)
