"""Command line interface: bound, eval, verify.

Exit codes for `bound`: 0 when the gap closed below eps, 2 when a budget
(LP rounds, witness evaluations, or wall clock) ran out first, 1 on error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import driver, greens, intervals, lowerbound, measures, modular, upperbound
from .driver import ConfigInvalid, CorruptCheckpoint, HashMismatch, RunConfig
from .intpoly import IntPoly, parse_poly
from .measures import SingularIntegrand, ToleranceNotMet
from .roots import NonConvergence

_ERRORS = (
    ConfigInvalid,
    CorruptCheckpoint,
    HashMismatch,
    NonConvergence,
    SingularIntegrand,
    ToleranceNotMet,
    greens.EnclosureUnavailable,
    greens.UnknownName,
    lowerbound.LPInfeasible,
    driver.LedgerViolation,
    OSError,
    ValueError,
)


def _cmd_bound(args) -> int:
    cfg = RunConfig(
        green=args.green,
        eps=args.eps,
        budget_lp=args.budget_lp,
        budget_witness=args.budget_witness,
        budget_wall=args.budget_wall,
        rigor=args.rigor,
        out_dir=args.out,
        seed=args.seed,
    )
    led = driver.run(cfg, resume_from=args.resume)
    base = led.lower if led.lower is not None else led.rows[-1][5]
    print(
        json.dumps(
            {
                "halt": led.halt,
                "rigor": led.rigor,
                "lower": base,
                "upper": led.upper,
                "gap": led.gap,
                "iterations": led.iterations,
                "out": args.out,
            },
            sort_keys=True,
        )
    )
    return 0 if led.halt == "eps" else 2


def _cmd_eval(args) -> int:
    g = driver.load_green(args.green)
    with open(args.measure) as f:
        m = measures.measure_from_json(f.read())
    value, err = measures.integrate(m, g.eval, tol=args.tol)
    print(
        json.dumps(
            {
                "green": g.name,
                "measure": json.loads(measures.measure_to_json(m)),
                "value": value,
                "err": err,
            },
            sort_keys=True,
        )
    )
    return 0


def _check(results, name, ok, detail=""):
    results.append((name, bool(ok), detail))
    mark = "ok  " if ok else "FAIL"
    line = f"{mark} {name}"
    if detail and not ok:
        line += f": {detail}"
    print(line)


def _verify_properties() -> int:
    """Fast structural self-checks: enclosures contain samples, serializers
    round trip, rationalized certificates respect the degree margin."""
    res = []
    rng = np.random.default_rng(20240817)

    for name in ("weil", "zhang_zagier", "hultberg"):
        g = greens.builtin(name)
        worst = 0.0
        for _ in range(25):
            cx, cy = rng.uniform(-3, 3), rng.uniform(0, 3)
            w = 10.0 ** rng.uniform(-3, 0)
            box = intervals.Box(
                np.array([cx]), np.array([cx + w]), np.array([cy]), np.array([cy + w])
            )
            lo, hi = g.enclose_boxes(box)
            xs = rng.uniform(cx, cx + w, 40) + 1j * rng.uniform(cy, cy + w, 40)
            vals = g.eval(xs)
            worst = max(worst, lo[0] - vals.min(), vals.max() - hi[0])
        _check(res, f"enclosure contains samples ({name})", worst <= 0, f"excess {worst:.2e}")

    for text in (
        '{"kind": "mu_pq", "P": "x^2 - x - 1", "Q": "x"}',
        '{"kind": "lemniscate", "P": "x^3 - 2"}',
        '{"kind": "circle", "R": 2.5}',
        '{"kind": "discrete", "atoms": [[0.5, 0.25, 0.5], [-0.5, 0.25, 0.5]]}',
    ):
        m = measures.measure_from_json(text)
        back = measures.measure_from_json(measures.measure_to_json(m))
        _check(
            res,
            f"measure serde round trip ({json.loads(text)['kind']})",
            measures.measure_to_json(back) == measures.measure_to_json(m),
        )

    cert = lowerbound.DualCertificate(
        [(parse_poly("x"), "1/4"), (parse_poly("x^2 - x + 1"), "1/8")]
    )
    back = lowerbound.DualCertificate.from_json(cert.to_json())
    _check(res, "certificate serde round trip", back.to_json() == cert.to_json())

    ok = True
    for _ in range(50):
        n = int(rng.integers(1, 6))
        degs = [int(d) for d in rng.integers(1, 5, n)]
        w = rng.uniform(0, 1.5, n)
        b = lowerbound.rationalize(w, degs)
        total = sum(bi * d for bi, d in zip(b, degs))
        ok = ok and total <= 1 - lowerbound.DELTA and all(bi >= 0 for bi in b)
    _check(res, "rationalize respects the degree margin", ok)

    v, err = measures.integrate(
        measures.CircleMeasure(1.0), lambda z: np.log(np.abs(z - 2)), tol=1e-10
    )
    _check(
        res,
        "Jensen circle average log|z-2| = log 2",
        abs(v - math.log(2)) <= 1e-9,
        f"got {v!r}",
    )

    g = greens.builtin("weil")
    lo, hi = lowerbound.certified_inf(g, lowerbound.DualCertificate([]), 1e-6)
    w = upperbound.cap1_bound(g, IntPoly((0, 1)), 1e-9)
    _check(
        res,
        "weak duality on the Weil pair",
        lo <= w.bound + 1e-7 and lo >= -1e-5,
        f"lower {lo!r} upper {w.bound!r}",
    )

    failures = [r for r in res if not r[1]]
    print(f"{len(res) - len(failures)}/{len(res)} properties passed")
    return 0 if not failures else 1


def _verify_golden() -> int:
    """Pinned classical values: modular unit oracles, capacity energies,
    the Zagier certificate value."""
    res = []

    ji = modular.j_value(modular.UpperHalfPoint(1j, reduced=True))
    _check(res, "j(i) = 1728", abs(ji - 1728) <= 1e-9 * 1728, f"got {ji!r}")
    z6 = modular.UpperHalfPoint(complex(0.5, math.sqrt(3) / 2), reduced=True)
    _check(res, "j(zeta6) = 0", abs(modular.j_value(z6)) <= 1e-9)
    _check(res, "j(2i) = 66^3", abs(modular.j_value(2j) - 66**3) <= 1e-6)

    tau = modular.inverse_j(1728).tau
    _check(res, "inverse_j(1728) = i", abs(tau - 1j) <= 1e-10, f"got {tau!r}")
    t6 = modular.inverse_j(1e6).tau
    target = math.log(1e6) / (2 * math.pi)
    _check(res, "inverse_j(1e6) branch", abs(t6.imag - target) <= 0.05 * target)

    t = complex(0.31, 1.17)
    a, b = modular.delta_pet(t), modular.delta_pet(-1 / t)
    _check(res, "delta_pet modular invariance", abs(a - b) <= 1e-10 * a)
    lead = math.exp(-20 * math.pi) * (40 * math.pi) ** 6
    _check(
        res,
        "delta_pet(10i) leading term",
        abs(modular.delta_pet(10j) - lead) <= 1e-8 * lead,
    )

    e = measures.energy(measures.lemniscate(parse_poly("x^2 - x - 1")), tol=1e-10)
    _check(res, "monic lemniscate has capacity one", abs(e) <= 1e-8, f"energy {e!r}")
    e2 = measures.energy(
        measures.RationalPullbackMeasure(IntPoly((0, 2)), IntPoly((1,))), tol=1e-10
    )
    _check(res, "energy of |2x| <= 1 is log 2", abs(e2 - math.log(2)) <= 1e-8)

    v, err = measures.integrate(
        measures.RationalPullbackMeasure(IntPoly((1, 2)), IntPoly((0, 1))),
        greens.builtin("hultberg").eval,
        tol=1e-8,
    )
    _check(
        res,
        "hultberg pullback average = -log 2",
        abs(v + math.log(2)) <= 1e-6,
        f"got {v!r}",
    )

    cert = lowerbound.exchange_solve(
        greens.builtin("zhang_zagier"),
        [parse_poly("x"), parse_poly("x - 1"), parse_poly("x^2 - x + 1")],
        [2.0 * np.exp(2j * np.pi * k / 12) for k in range(12)]
        + [0.95 * np.exp(2j * np.pi * k / 8) for k in range(8)],
        max_rounds=12,
        tol=1e-4,
        inner_tol=2e-5,
    )
    _check(
        res,
        "Zagier certificate clears 0.120",
        cert.value is not None and cert.value >= 0.120,
        f"value {cert.value!r}",
    )

    failures = [r for r in res if not r[1]]
    print(f"{len(res) - len(failures)}/{len(res)} golden checks passed")
    return 0 if not failures else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="essmin",
        description="Certified bounds on essential minima of heights from Green functions.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    b = sub.add_parser("bound", help="run the alternating lower/upper bound loop")
    b.add_argument("--green", required=True, help="builtin name or composite spec JSON (path or inline)")
    b.add_argument("--eps", type=float, default=1e-2, help="target gap")
    b.add_argument("--budget-lp", type=int, default=12, help="max exchange rounds")
    b.add_argument("--budget-witness", type=int, default=512, help="max witness evaluations")
    b.add_argument("--budget-wall", type=float, default=math.inf, help="wall clock budget in seconds")
    b.add_argument("--rigor", choices=("certified", "heuristic"), default="certified")
    b.add_argument("--out", required=True, help="output directory for checkpoint and reports")
    b.add_argument("--resume", default=None, help="checkpoint to resume from")
    b.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("eval", help="integrate a Green function against a measure")
    e.add_argument("--green", required=True)
    e.add_argument("--measure", required=True, help="path to a measure JSON file")
    e.add_argument("--tol", type=float, default=1e-8)

    v = sub.add_parser("verify", help="run a built-in verification suite")
    v.add_argument("--suite", choices=("properties", "golden"), required=True)

    args = ap.parse_args(argv)
    try:
        if args.cmd == "bound":
            return _cmd_bound(args)
        if args.cmd == "eval":
            return _cmd_eval(args)
        if args.cmd == "verify":
            if args.suite == "properties":
                return _verify_properties()
            return _verify_golden()
    except _ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
