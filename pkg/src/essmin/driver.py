"""Run orchestration: the alternating improvement loop, checkpoints, reports.

One iteration runs a lower phase (one cutting-plane exchange round plus pool
growth from recognized minimizers) and an upper phase (a tranche of witness
candidates, with the current leader refined at the target tolerance).  The
recorded bound sequences are monotone by construction and every row is checked
against weak duality; a certified violation aborts the run, since weak duality
is a theorem and a breach can only mean a numerics bug.

Heuristic lower bounds (sampling minima, used when a Green function has no
interval enclosure) are tracked in a separate ledger column and never become
the headline certified lower.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import tempfile
import time

import numpy as np

from . import measures
from .greens import (
    BUILTIN_NAMES,
    CompositeSpec,
    EnclosureUnavailable,
    GreenFunction,
    builtin,
    make_composite,
)
from .intpoly import IntPoly, format_poly, parse_poly
from .lowerbound import DualCertificate, ExchangeLoop, LPInfeasible, pool_grow
from .measures import SingularIntegrand, ToleranceNotMet
from .roots import NonConvergence
from .upperbound import PrimalWitness, SearchConfig, SearchState, eval_witness

__all__ = [
    "BoundsLedger",
    "ConfigInvalid",
    "CorruptCheckpoint",
    "HashMismatch",
    "LedgerViolation",
    "RunConfig",
    "WEAK_DUALITY_SLACK",
    "checkpoint",
    "load_green",
    "report",
    "resume",
    "run",
    "spec_hash",
]

WEAK_DUALITY_SLACK = 1e-7

_LEDGER_FORMAT = "essmin-ledger-v1"
_POOL_CAP = 16


class ConfigInvalid(ValueError):
    pass


class HashMismatch(RuntimeError):
    pass


class CorruptCheckpoint(RuntimeError):
    pass


class LedgerViolation(RuntimeError):
    pass


# module errors that are recorded per-iteration instead of aborting the loop
_SKIPPABLE = (
    LPInfeasible,
    NonConvergence,
    SingularIntegrand,
    ToleranceNotMet,
    EnclosureUnavailable,
)


@dataclasses.dataclass
class RunConfig:
    """Everything one run needs; defaults favor short certified runs."""

    green: str = "weil"
    eps: float = 1e-2
    budget_lp: int = 12
    budget_witness: int = 512
    budget_wall: float = math.inf
    tranche: int = 64
    pool: tuple = ("x",)
    tol: float = 1e-4
    inner_tol: float | None = None
    max_degree: int = 6
    max_height: int = 20
    coarse_tol: float = 1e-3
    target_tol: float = 1e-8
    rigor: str = "certified"
    out_dir: str | None = None
    seed: int = 0

    def validate(self):
        if not self.eps > 0:
            raise ConfigInvalid("eps must be positive")
        if self.budget_lp < 1 or self.budget_witness < 1:
            raise ConfigInvalid("budgets must be >= 1")
        if self.tranche < 1:
            raise ConfigInvalid("tranche must be >= 1")
        if not self.budget_wall > 0:
            raise ConfigInvalid("wall budget must be positive")
        if self.rigor not in ("certified", "heuristic"):
            raise ConfigInvalid(f"unknown rigor {self.rigor!r}")
        if not self.pool:
            raise ConfigInvalid("initial pool must be nonempty")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["pool"] = list(d["pool"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d["pool"] = tuple(d.get("pool", ("x",)))
        return cls(**d)


def load_green(selector: str) -> GreenFunction:
    """Builtin name, path to a composite spec JSON, or inline JSON text."""
    if selector in BUILTIN_NAMES:
        return builtin(selector)
    if selector.lstrip().startswith("{"):
        text = selector
    elif os.path.exists(selector):
        with open(selector) as f:
            text = f.read()
    else:
        raise ConfigInvalid(f"unknown green selector {selector!r}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"green spec is not valid JSON: {e}") from e
    if isinstance(obj, dict) and "builtin" in obj:
        return builtin(obj["builtin"])
    spec = CompositeSpec.from_json(json.dumps(obj))
    spec.validate()
    return make_composite(spec)


def spec_hash(g: GreenFunction) -> str:
    return hashlib.sha256(g.spec_json().encode()).hexdigest()


class BoundsLedger:
    """Monotone bound history plus the artifacts that produced it.

    Rows are (iteration, wall_s, lower, upper, gap, heuristic_lower) with
    None for a side that does not exist yet.  The certified lower must never
    exceed the upper beyond the combined numeric slack, and both headline
    sequences must be monotone; `record` enforces this.
    """

    def __init__(self, green_name, green_spec, config: RunConfig, seed, rigor):
        self.green_name = green_name
        self.green_spec = green_spec
        self.spec_hash = hashlib.sha256(green_spec.encode()).hexdigest()
        self.config = config
        self.seed = int(seed)
        self.rigor = rigor
        self.halt = None
        self.rows = []
        self.notes = []
        self.pool = [str(p) for p in config.pool]
        self.points = []
        self.enum_skip = 0
        self.witness_used = 0
        self.best_certificate = None
        self.best_witness = None
        self.heuristic_lower = None

    @property
    def iterations(self) -> int:
        return self.rows[-1][0] if self.rows else 0

    @property
    def lower(self):
        return self.rows[-1][2] if self.rows else None

    @property
    def upper(self):
        return self.rows[-1][3] if self.rows else None

    @property
    def gap(self):
        return self.rows[-1][4] if self.rows else None

    def record(self, it, wall, lower, upper, heur):
        base = lower if lower is not None else heur
        gap = None
        if base is not None and upper is not None:
            gap = upper - base
        if (
            lower is not None
            and upper is not None
            and not lower <= upper + WEAK_DUALITY_SLACK
        ):
            raise LedgerViolation(
                f"weak duality violated at iteration {it}: certified lower "
                f"{lower!r} exceeds upper {upper!r} + {WEAK_DUALITY_SLACK}; "
                "this indicates a numerics bug"
            )
        if self.rows:
            _, _, pl, pu, _, ph = self.rows[-1]
            if pl is not None and (lower is None or lower < pl):
                raise LedgerViolation(
                    f"certified lower decreased at iteration {it}: {pl!r} -> {lower!r}"
                )
            if pu is not None and (upper is None or upper > pu):
                raise LedgerViolation(
                    f"upper increased at iteration {it}: {pu!r} -> {upper!r}"
                )
            if ph is not None and (heur is None or heur < ph):
                raise LedgerViolation(
                    f"heuristic lower decreased at iteration {it}: {ph!r} -> {heur!r}"
                )
        row = [int(it), float(wall), lower, upper, gap, heur]
        self.rows.append(row)
        return row

    def to_json(self) -> str:
        doc = {
            "format": _LEDGER_FORMAT,
            "green": {"name": self.green_name, "spec": self.green_spec},
            "spec_hash": self.spec_hash,
            "config": self.config.to_dict(),
            "seed": self.seed,
            "rigor": self.rigor,
            "halt": self.halt,
            "rows": self.rows,
            "notes": self.notes,
            "pool": self.pool,
            "points": self.points,
            "enum_skip": self.enum_skip,
            "witness_used": self.witness_used,
            "best_certificate": (
                None
                if self.best_certificate is None
                else json.loads(self.best_certificate.to_json())
            ),
            "best_witness": (
                None
                if self.best_witness is None
                else json.loads(self.best_witness.to_json())
            ),
            "heuristic_lower": self.heuristic_lower,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BoundsLedger":
        try:
            doc = json.loads(text)
            if doc.get("format") != _LEDGER_FORMAT:
                raise ValueError(f"unknown ledger format {doc.get('format')!r}")
            led = cls(
                doc["green"]["name"],
                doc["green"]["spec"],
                RunConfig.from_dict(doc["config"]),
                doc["seed"],
                doc["rigor"],
            )
            stored = doc["spec_hash"]
            if stored != led.spec_hash:
                raise HashMismatch(
                    f"checkpoint hash {stored} does not match its own green spec "
                    f"{led.spec_hash}"
                )
            led.halt = doc["halt"]
            led.rows = [list(r) for r in doc["rows"]]
            led.notes = [list(n) for n in doc["notes"]]
            led.pool = list(doc["pool"])
            led.points = [list(p) for p in doc["points"]]
            led.enum_skip = int(doc["enum_skip"])
            led.witness_used = int(doc["witness_used"])
            if doc["best_certificate"] is not None:
                led.best_certificate = DualCertificate.from_json(
                    json.dumps(doc["best_certificate"])
                )
            if doc["best_witness"] is not None:
                led.best_witness = PrimalWitness.from_json(
                    json.dumps(doc["best_witness"])
                )
            led.heuristic_lower = doc["heuristic_lower"]
            return led
        except HashMismatch:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptCheckpoint(f"unreadable checkpoint: {e}") from e


def checkpoint(ledger: BoundsLedger, path: str):
    """Atomic write: temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ckpt-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(ledger.to_json())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resume(path: str) -> BoundsLedger:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise CorruptCheckpoint(f"cannot read checkpoint {path!r}: {e}") from e
    return BoundsLedger.from_json(text)


def _default_grid(g: GreenFunction, seed: int):
    rng = np.random.default_rng(seed)
    pts = [2.0 * np.exp(2j * np.pi * k / 12) for k in range(12)]
    pts += [0.6 * np.exp(2j * np.pi * (k + 0.5) / 8) for k in range(8)]
    pts += list(rng.normal(0.0, 1.5, 6) + 1j * np.abs(rng.normal(0.0, 1.5, 6)))
    return pts


def _note(led: BoundsLedger, it: int, phase: str, err: BaseException):
    led.notes.append([int(it), phase, f"{type(err).__name__}: {err}"])


def run(config: RunConfig, resume_from: str | None = None) -> BoundsLedger:
    """Alternate lower and upper phases until the gap closes or budgets end.

    Halts with ledger.halt = "eps" when gap <= config.eps, or "budget" once
    the LP-round and witness budgets (or the wall clock) are exhausted.
    """
    config.validate()
    g = load_green(config.green)
    rigor = config.rigor
    downgraded = rigor == "certified" and not g.has_enclosure
    if downgraded:
        rigor = "heuristic"
    t0 = time.perf_counter()

    scfg = SearchConfig(
        max_degree=config.max_degree,
        max_height=config.max_height,
        coarse_tol=config.coarse_tol,
        target_tol=config.target_tol,
    )
    if resume_from is not None:
        led = resume(resume_from)
        if led.spec_hash != spec_hash(g):
            raise HashMismatch(
                f"checkpoint was produced for green spec hash {led.spec_hash}, "
                f"config selects {spec_hash(g)}"
            )
        led.config = config
        led.rigor = rigor
        pool = [parse_poly(s) for s in led.pool]
        points = [complex(x, y) for x, y in led.points]
        loop = ExchangeLoop(
            g, pool, points, tol=config.tol, rigor=rigor, inner_tol=config.inner_tol
        )
        if led.best_certificate is not None:
            loop.best = led.best_certificate
        search_state = SearchState(g, scfg)
        if led.witness_used:
            search_state.advance(led.witness_used)
        base_wall = led.rows[-1][1] if led.rows else 0.0
    else:
        led = BoundsLedger(g.name, g.spec_json(), config, config.seed, rigor)
        if downgraded:
            led.notes.append(
                [0, "setup", "rigor downgraded to heuristic: no interval enclosure"]
            )
        pool = [parse_poly(s) if isinstance(s, str) else IntPoly(s) for s in config.pool]
        loop = ExchangeLoop(
            g,
            pool,
            _default_grid(g, config.seed),
            tol=config.tol,
            rigor=rigor,
            inner_tol=config.inner_tol,
        )
        search_state = SearchState(g, scfg)
        base_wall = 0.0

    refined = {}

    def _refined_best():
        w = search_state.best_coarse()
        if w is None:
            return None
        key = measures.measure_to_json(w.measure)
        if key not in refined:
            try:
                refined[key] = eval_witness(
                    g, w.measure, config.target_tol, provenance=w.provenance
                )
            except _SKIPPABLE:
                refined[key] = w
        return refined[key]

    lower = led.lower
    upper = led.upper
    heur = led.rows[-1][5] if led.rows else None
    it = led.iterations
    led.halt = None

    while True:
        base = lower if lower is not None else heur
        if base is not None and upper is not None and upper - base <= config.eps:
            led.halt = "eps"
            break
        wall_now = base_wall + (time.perf_counter() - t0)
        lp_done = it >= config.budget_lp
        wit_done = led.witness_used >= config.budget_witness or search_state.exhausted
        if (lp_done and wit_done) or wall_now >= config.budget_wall:
            led.halt = "budget"
            break

        it += 1
        if not lp_done:
            try:
                loop.round()
                grown = pool_grow(
                    g,
                    loop.best,
                    loop.points[-1:],
                    pool=loop.pool,
                    enum_skip=led.enum_skip,
                    enum_count=0,
                )
                if not grown and loop.gap > config.eps and len(loop.pool) < _POOL_CAP:
                    grown = pool_grow(
                        g,
                        loop.best,
                        (),
                        pool=loop.pool,
                        enum_skip=led.enum_skip,
                        enum_count=2,
                    )
                    led.enum_skip += 2
                loop.pool.extend(grown[: _POOL_CAP - len(loop.pool)])
            except _SKIPPABLE as e:
                _note(led, it, "lower", e)
            if loop.best is not None and loop.best.value is not None:
                v = loop.best.value
                if rigor == "certified":
                    lower = v if lower is None else max(lower, v)
                else:
                    heur = v if heur is None else max(heur, v)

        if led.witness_used < config.budget_witness and not search_state.exhausted:
            try:
                take = min(config.tranche, config.budget_witness - led.witness_used)
                search_state.advance(take)
                led.witness_used = search_state.used
                cand = _refined_best()
                if cand is not None and (upper is None or cand.bound < upper):
                    upper = cand.bound
                    led.best_witness = cand
            except _SKIPPABLE as e:
                _note(led, it, "upper", e)

        wall = base_wall + (time.perf_counter() - t0)
        led.record(it, wall, lower, upper, heur)
        led.best_certificate = loop.best
        led.heuristic_lower = heur
        led.pool = [format_poly(q) for q in loop.pool]
        led.points = [[z.real, z.imag] for z in loop.points]
        if config.out_dir:
            checkpoint(led, os.path.join(config.out_dir, "checkpoint.json"))

    if config.out_dir:
        checkpoint(led, os.path.join(config.out_dir, "checkpoint.json"))
        report(led, config.out_dir)
    return led


def _svg_polyline(pts, color):
    body = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
        f'points="{body}"/>'
    )


def _render_svg(rows) -> str:
    W, H, pad = 640, 400, 46
    series = []
    for idx, color in ((2, "#2f7d31"), (5, "#7d6b2f"), (3, "#b23a2f")):
        pts = [(r[0], r[idx]) for r in rows if r[idx] is not None]
        if pts:
            series.append((pts, color))
    vals = [v for pts, _ in series for _, v in pts]
    its = [i for pts, _ in series for i, _ in pts]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
    ]
    if vals:
        lo, hi = min(vals), max(vals)
        i0, i1 = min(its), max(its)
        if hi - lo < 1e-12:
            lo, hi = lo - 1.0, hi + 1.0
        if i1 == i0:
            i1 = i0 + 1

        def sx(i):
            return pad + (W - 2 * pad) * (i - i0) / (i1 - i0)

        def sy(v):
            return H - pad - (H - 2 * pad) * (v - lo) / (hi - lo)

        out.append(
            f'<line x1="{pad}" y1="{H-pad}" x2="{W-pad}" y2="{H-pad}" '
            'stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H-pad}" '
            'stroke="black" stroke-width="1"/>'
        )
        for pts, color in series:
            # step curve: hold each bound until the next iteration
            path = []
            for k, (i, v) in enumerate(pts):
                if k:
                    path.append((sx(i), path[-1][1]))
                path.append((sx(i), sy(v)))
            out.append(_svg_polyline(path, color))
        out.append(
            f'<text x="{W/2:.0f}" y="{H-10}" text-anchor="middle" '
            f'font-size="12">iteration</text>'
        )
    out.append("</svg>")
    return "\n".join(out)


def report(ledger: BoundsLedger, out_dir: str, formats=("json", "csv", "svg")):
    """Emit report.json, history.csv and convergence.svg into out_dir."""
    if not ledger.rows:
        raise ValueError("cannot report an empty ledger")
    os.makedirs(out_dir, exist_ok=True)
    lower = ledger.lower
    upper = ledger.upper
    heur = ledger.rows[-1][5]
    base = lower if lower is not None else heur
    written = []
    if "json" in formats:
        doc = {
            "green": ledger.green_name,
            "spec_hash": ledger.spec_hash,
            "rigor": ledger.rigor,
            "halt": ledger.halt,
            "iterations": ledger.iterations,
            "witness_evaluations": ledger.witness_used,
            "wall_s": ledger.rows[-1][1],
            "lower": lower,
            "heuristic_lower": heur,
            "upper": upper,
            "gap": ledger.gap,
            "certificate": (
                None
                if ledger.best_certificate is None
                else json.loads(ledger.best_certificate.to_json())
            ),
            "witness": (
                None
                if ledger.best_witness is None
                else json.loads(ledger.best_witness.to_json())
            ),
        }
        if ledger.green_name == "faltings":
            doc["ess_Ht_F"] = {
                "lower": None if base is None else base / 12.0,
                "upper": None if upper is None else upper / 12.0,
                "rigor": ledger.rigor,
            }
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as f:
            json.dump(doc, f, sort_keys=True, indent=1)
            f.write("\n")
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "history.csv")
        with open(path, "w") as f:
            f.write("iter,wall_s,lower,upper,gap\n")
            for r in ledger.rows:
                cells = [str(r[0]), repr(float(r[1]))]
                cells += ["" if v is None else repr(float(v)) for v in r[2:5]]
                f.write(",".join(cells) + "\n")
        written.append(path)
    if "svg" in formats:
        path = os.path.join(out_dir, "convergence.svg")
        with open(path, "w") as f:
            f.write(_render_svg(ledger.rows))
        written.append(path)
    return written
