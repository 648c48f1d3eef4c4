"""Command line front end: single bounds, CSV sweeps, simulations and the invariant check."""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import binary as bn
from . import erasure as er
from . import gaussian as ga
from . import gaussian_sv as sv
from . import montecarlo as mc

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3
SIG_DIGITS = 12
DEFAULT_TOL = 1e-6


class SpecError(ValueError):
    """Bad bound id, parameter or sweep description."""


# ---------------------------------------------------------------- settings

# parameter name -> default; aliases map onto these names
SETTING_PARAMS = {
    "binary": {"p1": None, "p2": None, "cost": None},
    "gaussian": {"P": None, "P2": None},
    "gaussian_sv": {"P1": None, "P2": None, "P": None, "N": None},
    "erasure": {"p1": None, "source": None, "p2": None, "cost": None},
}
ALIASES = {"C": "cost", "power": "P", "interference_power": "P2", "noise": "N"}
# extra per-bound knobs accepted as fixed parameters
KNOBS = {"gamma", "c", "r", "alpha", "grid_size", "starts", "samples"}


def make_problem(setting, params):
    p = params
    try:
        if setting == "binary":
            return bn.BinaryProblem(p["p1"], p["p2"], p["cost"])
        if setting == "gaussian":
            return ga.GaussianProblem(p["P"], p["P2"])
        if setting == "gaussian_sv":
            return sv.GaussianSVProblem(p["P1"], p["P2"], p["P"], p["N"])
        if setting == "erasure":
            src = p.get("source")
            if src is None:
                if p.get("p1") is None:
                    raise SpecError("erasure needs source or p1")
                src = [1 - p["p1"], p["p1"]]
            return er.ErasureProblem(src, p["p2"], p["cost"])
    except KeyError as e:
        raise SpecError(f"missing parameter {e.args[0]} for setting {setting}") from None
    except ValueError as e:
        if isinstance(e, SpecError):
            raise
        raise SpecError(str(e)) from None
    raise SpecError(f"unknown setting {setting!r}")


@dataclass
class Options:
    seed: int = 0
    budget: int | None = None
    knobs: dict = field(default_factory=dict)


def _bin(fn):
    return lambda prob, o: fn(prob)


def _gauss_prop6(prob, o):
    if "gamma" in o.knobs:
        return ga.lb_prop6(prob, o.knobs["gamma"])
    return ga.lb_prop6_max(prob)


def _gauss_thm7(prob, o):
    if "gamma" in o.knobs:
        k = o.knobs
        return ga.lb_thm7(prob, ga.VerduParams(k["gamma"], k.get("c", 0.0), k.get("r", 0.0)))
    return ga.lb_thm7_max(prob)


def _sv_thm9(prob, o):
    if "alpha" in o.knobs:
        return sv.lb_thm9(prob, [o.knobs["alpha"]])
    return sv.lb_thm9(prob)


BOUNDS = {
    "binary": {
        "cor2": _bin(bn.lb_cor2),
        "cor3": _bin(bn.lb_cor3),
        "thm3": _bin(bn.lb_thm3),
        "thm4": lambda p, o: bn.lb_thm4(p, starts=int(o.knobs.get("starts", 8)), seed=o.seed),
        "gp": lambda p, o: bn.gp_capacity_cost(p, seed=o.seed),
        "cor4": lambda p, o: bn.lb_cor4(p, seed=o.seed),
        "causal": lambda p, o: bn.causal_search(p, budget=o.budget or 20000, seed=o.seed),
        "thm2": lambda p, o: bn.ach_thm2_binary(p, budget=o.budget or 20000, seed=o.seed),
    },
    "gaussian": {
        "thm5": _bin(ga.ach_thm5),
        "thm6": _bin(ga.lb_gs),
        "gs": _bin(ga.lb_gs),
        "gws": lambda p, o: ga.lb_gws(p, grid_size=int(o.knobs.get("grid_size", 401))),
        "prop6": _gauss_prop6,
        "thm7": _gauss_thm7,
    },
    "gaussian_sv": {
        "thm8": _bin(sv.ach_thm8),
        "prop7": _bin(sv.lb_prop7),
        "prop8": _bin(sv.lb_prop8),
        "thm9": _sv_thm9,
    },
    "erasure": {
        "erasure": _bin(er.dmin_erasure),
        "exact": _bin(er.dmin_erasure),
    },
}


def _parse_value(key, text):
    if key == "source":
        try:
            return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
        except ValueError:
            raise SpecError(f"bad source distribution {text!r}") from None
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"parameter {key} needs a number, got {text!r}") from None


def normalise_params(setting, raw):
    if setting not in SETTING_PARAMS:
        raise SpecError(f"unknown setting {setting!r}")
    params, knobs = {}, {}
    for k, v in raw.items():
        k = ALIASES.get(k, k)
        if k in SETTING_PARAMS[setting]:
            params[k] = v if not isinstance(v, str) else _parse_value(k, v)
        elif k in KNOBS:
            knobs[k] = v if not isinstance(v, str) else _parse_value(k, v)
        else:
            raise SpecError(f"unknown parameter {k!r} for setting {setting}")
    return params, knobs


def evaluate(setting, bound_id, params, opts):
    table = BOUNDS.get(setting)
    if table is None:
        raise SpecError(f"unknown setting {setting!r}")
    fn = table.get(bound_id)
    if fn is None:
        raise SpecError(f"unknown bound {bound_id!r} for setting {setting}")
    return fn(make_problem(setting, params), opts)


# ------------------------------------------------------------------ numbers

def round_sig(v):
    """Round to the CSV precision so that emitted rows parse back to themselves."""
    if v is None or not math.isfinite(v):
        return None
    return float(f"{v:.{SIG_DIGITS}g}") + 0.0       # drops the sign of -0


def fmt(v):
    return "" if v is None else f"{v:.{SIG_DIGITS}g}"


def _scalar_params(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (bool, np.bool_)):
            continue
        if isinstance(v, (int, float, np.integer, np.floating)):
            out[k] = float(v)
    return out


# ------------------------------------------------------------------- sweeps

@dataclass
class SweepSpec:
    setting: str
    sweep_var: str
    lo: float
    hi: float
    steps: int
    fixed: dict
    bounds: list

    def __post_init__(self):
        if self.setting not in SETTING_PARAMS:
            raise SpecError(f"unknown setting {self.setting!r}")
        if not (self.lo < self.hi):
            raise SpecError("need lo < hi")
        if self.steps < 2:
            raise SpecError("need steps >= 2")
        if not self.bounds:
            raise SpecError("no bounds requested")
        for b in self.bounds:
            if b not in BOUNDS[self.setting]:
                raise SpecError(f"unknown bound {b!r} for setting {self.setting}")
        var = ALIASES.get(self.sweep_var, self.sweep_var)
        if var not in SETTING_PARAMS[self.setting] or var == "source":
            raise SpecError(f"cannot sweep {self.sweep_var!r} in setting {self.setting}")
        self.sweep_var = var
        self.params, self.knobs = normalise_params(self.setting, self.fixed)
        # every point must build a valid problem
        for x in (self.lo, self.hi):
            make_problem(self.setting, {**self.params, var: x})

    def points(self):
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass
class SweepRow:
    sweep_value: float
    values: dict              # bound id -> value or None
    params: dict              # "bound.key" -> value or None


def parse_spec_text(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected key = value")
        k, v = (t.strip() for t in line.split("=", 1))
        if not k or k in raw:
            raise SpecError(f"line {lineno}: empty or repeated key {k!r}")
        raw[k] = v
    try:
        setting = raw.pop("setting")
        var = raw.pop("sweep")
        lo, hi = float(raw.pop("lo")), float(raw.pop("hi"))
        steps_f = float(raw.pop("steps"))
        bounds = [b.strip() for b in raw.pop("bounds").split(",") if b.strip()]
    except KeyError as e:
        raise SpecError(f"missing key {e.args[0]!r}") from None
    except ValueError:
        raise SpecError("lo, hi and steps must be numbers") from None
    if steps_f != int(steps_f):
        raise SpecError("steps must be an integer")
    return SweepSpec(setting, var, lo, hi, int(steps_f), raw, bounds)


def _point(args):
    spec, x, opts = args
    params = {**spec.params, spec.sweep_var: float(x)}
    values, extra = {}, {}
    for b in spec.bounds:
        r = evaluate(spec.setting, b, params, opts)
        values[b] = round_sig(r.value)
        for k, v in _scalar_params(r.params).items():
            extra[f"{b}.{k}"] = round_sig(v)
    return SweepRow(round_sig(float(x)), values, extra)


def run_sweep(spec, opts=None, jobs=1):
    opts = opts or Options()
    opts = Options(opts.seed, opts.budget, {**spec.knobs, **opts.knobs})
    work = [(spec, x, opts) for x in spec.points()]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(_point, work))
    return [_point(w) for w in work]


def sweep_header(spec, rows):
    pcols = []
    for row in rows:
        for k in row.params:
            if k not in pcols:
                pcols.append(k)
    return [spec.sweep_var] + list(spec.bounds) + pcols


def emit_csv(header, rows, bounds):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    pcols = header[1 + len(bounds):]
    for r in rows:
        w.writerow([fmt(r.sweep_value)] + [fmt(r.values.get(b)) for b in bounds]
                   + [fmt(r.params.get(k)) for k in pcols])
    return buf.getvalue()


def parse_csv(text, n_bounds):
    rd = csv.reader(io.StringIO(text))
    header = next(rd)
    bounds = header[1:1 + n_bounds]
    pcols = header[1 + n_bounds:]

    def num(s):
        return None if s == "" else float(s)

    rows = []
    for rec in rd:
        vals = dict(zip(bounds, map(num, rec[1:1 + n_bounds])))
        prm = {k: num(v) for k, v in zip(pcols, rec[1 + n_bounds:]) if v != ""}
        rows.append(SweepRow(num(rec[0]), vals, prm))
    return header, rows


def _drop_missing(rows):
    return [SweepRow(r.sweep_value, r.values, {k: v for k, v in r.params.items() if v is not None})
            for r in rows]


def sweep_csv(spec, opts=None, jobs=1):
    rows = _drop_missing(run_sweep(spec, opts, jobs))
    return emit_csv(sweep_header(spec, rows), rows, spec.bounds)


# -------------------------------------------------------------- simulation

def run_sim(scheme, raw, seed):
    samples = int(float(raw.pop("samples", 1_000_000)))
    cfg = mc.SimConfig(samples, seed, scheme)
    if scheme == "binary_half":
        params, _ = normalise_params("binary", {"p1": "0.5", **raw})
        try:
            est = mc.sim_binary_half(params["p2"], params["cost"], cfg)
        except KeyError as e:
            raise SpecError(f"missing parameter {e.args[0]}") from None
        ref = bn.dmin_half(params["p2"], params["cost"]).value
    elif scheme == "erasure":
        params, _ = normalise_params("erasure", raw)
        prob = make_problem("erasure", params)
        est = mc.sim_erasure(prob, cfg)
        ref = er.dmin_erasure(prob).value
    elif scheme == "gaussian_uncoded":
        params, _ = normalise_params("gaussian", raw)
        prob = make_problem("gaussian", params)
        est = mc.sim_gaussian_uncoded(prob, cfg)
        r = mc.uncoded_residual(prob)[1]
        ref = r / (1 + r)
    else:
        raise SpecError(f"unknown scheme {scheme!r}")
    header = ["scheme", "samples", "distortion", "stderr", "cost", "cost_stderr", "closed_form"]
    row = [scheme, str(est.samples)] + [fmt(round_sig(v)) for v in
                                       (est.distortion, est.stderr, est.cost, est.cost_stderr, ref)]
    return ",".join(header) + "\n" + ",".join(row) + "\n"


# ------------------------------------------------------------------- check

def invariant_checks(tol=DEFAULT_TOL, seed=0):
    """Quick invariant suite, yielding (name, passed, detail)."""
    from .core import bconv, h2, h2_inv

    ps = np.linspace(0, 1, 1001)
    yield "h2 symmetric", float(np.max(np.abs(h2(ps) - h2(1 - ps)))) <= 1e-12, ""
    ts = np.linspace(0, 1, 1001)
    yield "h2 inverse round trip", float(np.max(np.abs(h2(h2_inv(ts)) - ts))) <= 1e-9, ""
    rng = np.random.default_rng(seed)
    a, b, c = rng.random((3, 200))
    yield "bconv associative", float(np.max(np.abs(bconv(bconv(a, b), c) - bconv(a, bconv(b, c))))) <= 1e-12, ""

    worst = 0.0
    for p2 in np.linspace(0.05, 0.5, 10):
        for C in np.linspace(0, 0.5, 11):
            worst = max(worst, abs(bn.lb_thm3(bn.BinaryProblem(0.5, p2, C)).value - max(p2 - C, 0)))
    yield "fair source exact region", worst <= 1e-9, f"max err {worst:.3g}"

    ok = True
    for p1 in np.linspace(0, 0.5, 6):
        for p2 in np.linspace(0, 0.5, 6):
            for C in np.linspace(0, 0.5, 6):
                if C > p1:
                    ok &= bn.zero_dist_noncausal(bn.BinaryProblem(p1, p2, C)).achievable
    yield "cost above source bias gives zero distortion", bool(ok), ""

    gap = -np.inf
    for p1, p2, C in [(0.05, 0.1, 0.02), (0.2, 0.4, 0.1), (0.5, 0.3, 0.1), (0.1, 0.5, 0.11)]:
        prob = bn.BinaryProblem(p1, p2, C)
        lo = max(bn.lb_thm3(prob).value, bn.lb_thm4(prob, starts=3, seed=seed).value,
                 bn.lb_cor4(prob, seed=seed).value)
        hi = min(bn.ach_thm2_binary(prob, budget=2000, seed=seed).value,
                 bn.causal_search(prob, budget=2000, seed=seed).value)
        gap = max(gap, lo - hi)
    yield "binary lower below upper", gap <= tol, f"max excess {gap:.3g}"

    gap = -np.inf
    for P2 in (0.1, 1.0, 10.0):
        for P in (0.0, 0.2, 0.5, 1.0):
            prob = ga.GaussianProblem(P, P2)
            lo = max(ga.lb_gs(prob).value, ga.lb_prop6_max(prob).value, ga.lb_thm7_max(prob).value)
            gap = max(gap, lo - ga.ach_thm5(prob, grid=(21, 21, 61)).value)
    yield "gaussian lower below upper", gap <= tol, f"max excess {gap:.3g}"

    gap = -np.inf
    for P1, P2, P, N in [(1, 1, 1, 1), (1, 0.5, 1, 1), (2, 4, 0.5, 1), (0.5, 10, 2, 0.5)]:
        prob = sv.GaussianSVProblem(P1, P2, P, N)
        lo = max(sv.lb_prop7(prob).value, sv.lb_prop8(prob).value, sv.lb_thm9(prob).value)
        gap = max(gap, lo - sv.ach_thm8(prob).value)
    yield "side-information lower below upper", gap <= tol, f"max excess {gap:.3g}"

    for eps in (0.01, 0.05):
        thr, _ = sv.gap_threshold(1.0, 1.0, eps)
        cert = sv.gap_thm10(sv.GaussianSVProblem(1, (thr + 0.1) ** 2, 1, 1), eps)
        yield f"gap certificate eps={eps}", cert.certified and cert.ratio <= 1 / (1 - eps) + tol, \
            f"ratio {cert.ratio:.9f}"

    vals = [er.dmin_erasure(er.ErasureProblem([0.3, 0.7], 0.4, C)).value for C in np.linspace(0, 1, 21)]
    mono = all(b <= a + 1e-15 for a, b in zip(vals, vals[1:])) and all(
        v == 0 for v, C in zip(vals, np.linspace(0, 1, 21)) if C >= 0.4)
    yield "erasure monotone in cost", mono, ""

    pc = mc.claim2_counts(0.2, 0.3, 0.1, 0.5, mc.SimConfig(100_000, seed))
    yield "paired estimates give equal counts", \
        pc.source_errors == pc.residual_errors == pc.paired_errors, f"{pc.source_errors} errors"


def run_check(tol, seed, out):
    failed = 0
    for name, ok, detail in invariant_checks(tol, seed):
        failed += not ok
        out.write(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "") + "\n")
    out.write(f"{failed} failed\n")
    return EXIT_INVARIANT if failed else EXIT_OK


# -------------------------------------------------------------------- main

def _kv(tokens):
    raw = {}
    for t in tokens:
        if "=" not in t:
            raise SpecError(f"expected key=value, got {t!r}")
        k, v = t.split("=", 1)
        raw[k.strip()] = v.strip()
    return raw


def build_parser():
    ap = argparse.ArgumentParser(prog="helperbounds", description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=None, help="search evaluations for randomized bounds")
    ap.add_argument("--out", default=None, help="output file (default stdout)")
    ap.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    sub = ap.add_subparsers(dest="cmd", required=True)
    b = sub.add_parser("bound", help="evaluate one bound")
    b.add_argument("setting", choices=sorted(BOUNDS))
    b.add_argument("bound_id")
    b.add_argument("params", nargs="*", help="key=value")
    s = sub.add_parser("sweep", help="run a sweep spec file")
    s.add_argument("specfile")
    m = sub.add_parser("sim", help="Monte Carlo simulation")
    m.add_argument("scheme", choices=mc.SCHEMES)
    m.add_argument("params", nargs="*", help="key=value")
    sub.add_parser("check", help="run the invariant suite")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if not (0 <= args.seed < 2 ** 64):
        ap.error("seed must be an unsigned 64-bit integer")
    out = io.StringIO()
    try:
        if args.cmd == "bound":
            params, knobs = normalise_params(args.setting, _kv(args.params))
            r = evaluate(args.setting, args.bound_id, params, Options(args.seed, args.budget, knobs))
            prm = _scalar_params(r.params)
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["setting", "bound", "value", "kind"] + list(prm))
            w.writerow([args.setting, args.bound_id, fmt(round_sig(r.value)), r.kind]
                       + [fmt(round_sig(v)) for v in prm.values()])
            code = EXIT_OK
        elif args.cmd == "sweep":
            try:
                with open(args.specfile, encoding="utf-8") as fh:
                    spec = parse_spec_text(fh.read())
            except OSError as e:
                raise SpecError(str(e)) from None
            out.write(sweep_csv(spec, Options(args.seed, args.budget), jobs=args.jobs))
            code = EXIT_OK
        elif args.cmd == "sim":
            out.write(run_sim(args.scheme, _kv(args.params), args.seed))
            code = EXIT_OK
        else:
            code = run_check(args.tolerance, args.seed, out)
    except (SpecError, ValueError) as e:
        # invalid problem parameters surface as ValueError from the constructors
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = out.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
