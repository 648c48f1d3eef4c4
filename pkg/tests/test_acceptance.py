"""One PASS/FAIL verdict per acceptance criterion, at the stated tolerances and runtimes."""
import glob
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from helperbounds import (
    BinaryProblem,
    ErasureProblem,
    GaussianProblem,
    GaussianSVProblem,
    SimConfig,
    VerduParams,
    ach_thm5,
    ach_thm8,
    causal_search,
    causal_zero_necessary,
    claim2_counts,
    dmin_erasure,
    gap_thm10,
    lb_cor2,
    lb_cor4,
    lb_gs,
    lb_gws,
    lb_prop6,
    lb_prop6_max,
    lb_prop7,
    lb_prop8,
    lb_thm3,
    lb_thm7,
    lb_thm7_max,
    lb_thm9,
    mse_alpha,
    sim_binary_half,
    sim_erasure,
    zero_dist_gaussian,
    zero_dist_noncausal,
)
from helperbounds.gaussian_sv import mse_objective

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SIM = SimConfig(samples=10 ** 6, seed=0)


def log_uniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def timed(verdict, tag, ok, detail, clock, limit):
    fast = limit is None or clock.elapsed < limit
    tail = f"{detail}; {clock.elapsed:.1f}s" + (f" (limit {limit:g}s)" if limit else "")
    return verdict(tag, ok and fast, tail)


def test_c1_binary_exact_region(verdict):
    rng = np.random.default_rng(1)
    with Clock() as clk:
        p2 = rng.uniform(0.02, 0.5, 50)
        cost = rng.uniform(0.01, 0.99, 50) * p2
        err = max(abs(lb_thm3(BinaryProblem(0.5, a, c)).value - (a - c)) for a, c in zip(p2, cost))
        z = []
        for a, c in zip(p2, cost):
            d, se = sim_binary_half(a, c, SIM)
            z.append(abs(d - (a - c)) / se)
    ok = err <= 1e-6 and max(z) <= 3
    assert timed(verdict, "1 binary exact region", ok, f"max err {err:.2e}, max |z| {max(z):.2f}", clk, 10)


def test_c2_causal_separation(verdict):
    with Clock() as clk:
        prob = BinaryProblem(0.1, 0.5, 0.11)
        nc = zero_dist_noncausal(prob).achievable
        cz = causal_zero_necessary(0.1, 0.11)
        v = causal_search(prob, budget=10 ** 5).value
    ok = nc and not cz and v > 0.01
    assert timed(verdict, "2 causal/noncausal separation", ok,
                 f"noncausal zero {nc}, causal necessary {cz}, causal search {v:.4f}", clk, 60)


def test_c3_binary_figures(verdict):
    cs = np.linspace(0.01, 0.03, 21)
    with Clock() as clk:
        d05 = []
        for c in cs:
            prob = BinaryProblem(0.05, 0.1, c)
            d05.append(lb_cor2(prob).value - lb_cor4(prob).value)
        d10 = []
        for c in cs:
            prob = BinaryProblem(0.1, 0.1, c)
            d10.append(lb_cor2(prob).value - lb_cor4(prob).value)
    cross = max(d05) > 1e-4 and min(d05) < -1e-4
    dominate = min(d10) >= 0
    assert timed(verdict, "3 binary comparison curves", cross and dominate,
                 f"p1=0.05 cor2-cor4 in [{min(d05):.2e}, {max(d05):.2e}]; p1=0.1 min {min(d10):.2e}",
                 clk, 300)


def test_c4_gaussian_zero_distortion(verdict):
    with Clock() as clk:
        worst = 0.0
        for P in np.linspace(0.1, 1.5, 10):
            for P2 in np.geomspace(0.01, 100, 10):
                prob = GaussianProblem(P, P2)
                if zero_dist_gaussian(prob):
                    worst = max(worst, ach_thm5(prob).value)
        hi = ach_thm5(GaussianProblem(1.05, 1e6)).value
        gs = lb_gs(GaussianProblem(0.8, 1e6)).value
    ok = worst <= 1e-3 and hi <= 1e-2 and gs > 1e-3
    assert timed(verdict, "4 gaussian zero distortion", ok,
                 f"worst achievable {worst:.2e}, P2=1e6: thm5(1.05)={hi:.2e}, gs(0.8)={gs:.4f}", clk, 120)


def test_c5a_thm7_slice_is_prop6(verdict):
    prob = GaussianProblem(0.1, 1.0)
    with Clock() as clk:
        gam = np.geomspace(1.01, 100, 50)
        err = max(abs(lb_thm7(prob, VerduParams(g, 0.0, 0.0)).value - lb_prop6(prob, g).value) for g in gam)
    assert timed(verdict, "5a thm7(c=0,r=0) = prop6", err <= 1e-9, f"max diff {err:.3e} at P=0.1, P2=1",
                 clk, 30)


def test_c5b_thm9_unit_alpha(verdict):
    rng = np.random.default_rng(5)
    with Clock() as clk:
        err = 0.0
        for _ in range(50):
            prob = GaussianSVProblem(*log_uniform(rng, 0.1, 10, 4))
            err = max(err, abs(lb_thm9(prob, [1.0]).value - lb_prop7(prob).value))
    assert timed(verdict, "5b thm9(alpha=1) = prop7", err <= 1e-9, f"max diff {err:.2e}", clk, 30)


def test_c5c_thm9_large_alpha(verdict):
    rng = np.random.default_rng(5)
    with Clock() as clk:
        rel = 0.0
        for _ in range(50):
            prob = GaussianSVProblem(*log_uniform(rng, 0.1, 10, 4))
            ref = lb_prop8(prob).value
            rel = max(rel, abs(lb_thm9(prob, [1e3]).value - ref) / ref)
    assert timed(verdict, "5c thm9(alpha=1e3) ~ prop8", rel <= 1e-3, f"max rel diff {rel:.2e}", clk, 30)


@pytest.fixture(scope="module")
def gaussian_table():
    t0 = time.perf_counter()
    table = {}
    for P2 in (0.1, 1.0, 10.0, 100.0):
        rows = []
        for P in np.linspace(0, 1, 51):
            prob = GaussianProblem(float(P), P2)
            rows.append(dict(thm5=ach_thm5(prob).value, gs=lb_gs(prob).value, gws=lb_gws(prob).value,
                             prop6=lb_prop6_max(prob).value, thm7=lb_thm7_max(prob).value))
        table[P2] = rows
    return table, time.perf_counter() - t0


def test_c6ab_gaussian_ordering(verdict, gaussian_table):
    table, secs = gaussian_table
    excess = max(max(r["gs"], r["gws"], r["prop6"], r["thm7"]) - r["thm5"] for rows in table.values() for r in rows)
    dom = min(r["thm7"] - r["prop6"] for rows in table.values() for r in rows)
    fast = secs < 600
    verdict("6a lower bounds below thm5", excess <= 1e-6 and fast, f"max excess {excess:.2e}; {secs:.0f}s")
    verdict("6b thm7-max >= prop6-max", dom >= -1e-9 and fast, f"min margin {dom:.2e}")
    assert excess <= 1e-6 and dom >= -1e-9 and fast


def test_c6c_gws_crossing(verdict, gaussian_table):
    table, _ = gaussian_table
    rows = table[100.0]
    up = max(r["thm7"] - r["gws"] for r in rows)
    down = max(r["gws"] - r["thm7"] for r in rows)
    verdict("6c thm7-max above gws somewhere at P2=100", up > 1e-4, f"max thm7-gws {up:.3e}")
    verdict("6d gws above thm7-max somewhere at P2=100", down > 1e-4, f"max gws-thm7 {down:.3e}")
    assert up > 1e-4 and down > 1e-4


def test_c7a_mse_grid_oracle(verdict):
    rng = np.random.default_rng(7)
    with Clock() as clk:
        worst = 0.0
        for _ in range(100):
            prob = GaussianSVProblem(*log_uniform(rng, 0.1, 10, 4))
            alpha = rng.choice([-1.0, 1.0]) * log_uniform(rng, 1e-2, 1e2)
            r1, r2 = math.sqrt(prob.power * prob.p1), math.sqrt(prob.power * prob.p2)
            g1, g2 = np.meshgrid(np.linspace(-r1, r1, 401), np.linspace(-r2, r2, 401), indexing="ij")
            grid = float(mse_objective(prob, alpha, g1, g2).max())
            exact = mse_alpha(prob, alpha).mse
            worst = max(worst, abs(exact - grid) / exact)
    assert timed(verdict, "7a mse analytic vs 401x401 grid", worst <= 1e-6, f"max rel diff {worst:.2e}", clk, 120)


def test_c7bc_thm9_dominance_and_gap(verdict):
    rng = np.random.default_rng(8)
    with Clock() as clk:
        margin = np.inf
        for _ in range(100):
            prob = GaussianSVProblem(*log_uniform(rng, 0.1, 10, 4))
            margin = min(margin, lb_thm9(prob).value - max(lb_prop7(prob).value, lb_prop8(prob).value))
        gap = 0.0
        for P2 in np.linspace(0.1, 10, 100):
            prob = GaussianSVProblem(1.0, P2, 1.0, 1.0)
            gap = max(gap, lb_thm9(prob).value - max(lb_prop7(prob).value, lb_prop8(prob).value))
    verdict("7b thm9 >= max(prop7, prop8)", margin >= -1e-6, f"min margin {margin:.2e}")
    timed(verdict, "7c thm9 strictly better at some P2", gap > 1e-4, f"max gain {gap:.3e}", clk, 120)
    assert margin >= -1e-6 and gap > 1e-4 and clk.elapsed < 120


def test_c8_gap_certificate(verdict):
    with Clock() as clk:
        worst, checked = -np.inf, 0
        for eps in (0.01, 0.05):
            for P2 in np.geomspace(0.01, 100, 50):
                cert = gap_thm10(GaussianSVProblem(1.0, P2, 1.0, 1.0), eps)
                if cert.certified:
                    checked += 1
                    worst = max(worst, cert.ratio - 1 / (1 - eps))
    ok = checked > 0 and worst <= 1e-6
    assert timed(verdict, "8 gap certificate", ok, f"{checked} certified points, max excess {worst:.2e}", clk, 120)


def test_c9_erasure_exact(verdict):
    rng = np.random.default_rng(9)
    with Clock() as clk:
        zmax, zero = 0.0, True
        for _ in range(20):
            k = int(rng.integers(2, 6))
            src = rng.dirichlet(np.ones(k))
            src[-1] = 1 - src[:-1].sum()
            p2 = float(rng.uniform(0, 1))
            cost = float(rng.uniform(0, 1))
            dist = rng.uniform(0, 1, (k, k)) if rng.random() < 0.5 else None
            prob = ErasureProblem(src, p2, cost, dist)
            d, se = sim_erasure(prob, SIM)
            want = dmin_erasure(prob).value
            zmax = max(zmax, abs(d - want) / se if se > 0 else (0.0 if d == want else np.inf))
            for c in np.linspace(p2, 1, 5):
                zero &= dmin_erasure(ErasureProblem(src, p2, c)).value == 0.0
    assert timed(verdict, "9 erasure exactness", zmax <= 3 and zero, f"max |z| {zmax:.2f}, zero above p2 {zero}",
                 clk, 30)


def test_c10_claim2(verdict):
    with Clock() as clk:
        c = claim2_counts(0.2, 0.3, 0.1, 0.6, SimConfig(samples=10 ** 5, seed=10))
    ok = c.source_errors == c.residual_errors == c.paired_errors
    assert timed(verdict, "10 paired estimate counts", ok,
                 f"{c.source_errors}/{c.residual_errors}/{c.paired_errors}", clk, 5)


def _cli(*args):
    r = subprocess.run([sys.executable, "-m", "helperbounds", "--seed", "0", *args],
                       capture_output=True, cwd=ROOT)
    return r.returncode, r.stdout


def test_c11_determinism(verdict):
    specs = sorted(glob.glob(os.path.join(ROOT, "sweeps", "*.txt")))
    diffs = []
    a, b = _cli("check"), _cli("check")
    if a != b or a[0] != 0:
        diffs.append("check")
    for s in specs:
        a, b = _cli("sweep", s), _cli("sweep", s)
        if a != b or a[0] != 0 or not a[1]:
            diffs.append(os.path.basename(s))
    assert verdict("11 determinism", not diffs and specs,
                   f"{len(specs)} sweeps + check, differing: {diffs or 'none'}")
