"""Primal witnesses: measures with small ∫ g dμ upper-bounding the essential minimum.

Candidates come from the countable dense family μ_{P,Q} (monic irreducible
P ≠ Q) and from capacity-one lemniscate measures.  A witness records the
quadrature value and its error estimate; value + error is the claimed upper
bound.  The search interleaves a systematic enumeration with seeded guesses
and lemniscates, prefilters at coarse tolerance, then refines the leaders.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from . import measures
from .greens import GreenFunction
from .intpoly import IntPoly, enumerate_polys
from .lowerbound import _recognize
from .measures import (
    MuPQ,
    RationalPullbackMeasure,
    SingularIntegrand,
    ToleranceNotMet,
    integrate_pullback,
    lemniscate,
)
from .roots import NonConvergence

__all__ = [
    "PrimalWitness",
    "SearchConfig",
    "SearchState",
    "cap1_bound",
    "eval_witness",
    "search",
]

_PROVENANCES = ("enumerated", "seeded", "cap1")


class PrimalWitness:
    """One measure together with its quadrature value and error estimate."""

    __slots__ = ("measure", "value", "err", "provenance")

    def __init__(self, measure, value, err, provenance):
        if provenance not in _PROVENANCES:
            raise ValueError(f"unknown provenance {provenance!r}")
        self.measure = measure
        self.value = float(value)
        self.err = float(err)
        self.provenance = provenance

    @property
    def bound(self) -> float:
        """The claimed upper bound on the essential minimum."""
        return self.value + self.err

    def __repr__(self):
        return (
            f"PrimalWitness({measures.measure_to_json(self.measure)}, "
            f"value={self.value!r}, err={self.err!r}, {self.provenance!r})"
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "measure": json.loads(measures.measure_to_json(self.measure)),
                "value": self.value,
                "err": self.err,
                "provenance": self.provenance,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PrimalWitness":
        doc = json.loads(text)
        m = measures.measure_from_json(json.dumps(doc["measure"]))
        return cls(m, doc["value"], doc["err"], doc["provenance"])


def eval_witness(g: GreenFunction, m, tol: float, provenance="enumerated"):
    """Quadrature of ∫ g dμ as a PrimalWitness.

    If the adaptive ladder exhausts before reaching tol, the witness keeps
    the last value with its (larger) achieved error estimate.
    """
    if not isinstance(m, RationalPullbackMeasure):
        raise TypeError("witness measures are rational pullbacks")
    try:
        value, err = integrate_pullback(m, g.eval, tol)
    except ToleranceNotMet as e:
        value, err = e.value, e.estimate
    return PrimalWitness(m, value, err, provenance)


def cap1_bound(g: GreenFunction, P: IntPoly, tol: float) -> PrimalWitness:
    """∫ g dμ_K for the capacity-one set K = {|P| <= 1}, P monic."""
    P = P if isinstance(P, IntPoly) else IntPoly(P)
    if P.degree < 1 or not P.is_monic:
        raise ValueError("capacity-one lemniscates need monic P of degree >= 1")
    return eval_witness(g, lemniscate(P), tol, provenance="cap1")


@dataclass
class SearchConfig:
    """Caps and tolerances steering the witness search."""

    max_degree: int = 6
    max_height: int = 20
    coarse_tol: float = 1e-3
    target_tol: float = 1e-8
    refine_cap: int = 64
    seeds: tuple = field(default_factory=tuple)


def _theta_pairs(cfg: SearchConfig):
    """Ordered pairs of distinct monic irreducibles, enumerated by the
    larger stream index so every pair appears exactly once."""
    seen = []
    for p in enumerate_polys(cfg.max_degree, cfg.max_height, filt="monic_irreducible"):
        for q in seen:
            yield MuPQ(q, p), "enumerated"
            yield MuPQ(p, q), "enumerated"
        seen.append(p)


def _seeded_pairs(cfg: SearchConfig):
    """Consecutive minimal-polynomial guesses from supplied minimizers."""
    harvest = []
    known = set()
    for z in cfg.seeds:
        for p in _recognize(complex(z)):
            if p.is_monic and p.degree >= 1 and p.coeffs not in known:
                known.add(p.coeffs)
                harvest.append(p)
    for a, b in zip(harvest, harvest[1:]):
        yield MuPQ(a, b), "seeded"
        yield MuPQ(b, a), "seeded"


def _cap1_stream(cfg: SearchConfig):
    for p in enumerate_polys(cfg.max_degree, cfg.max_height, filt="monic_irreducible"):
        yield lemniscate(p), "cap1"


def _tie_key(w: PrimalWitness):
    m = w.measure
    if isinstance(m, MuPQ):
        total = m.P.degree + m.Q.degree
    else:
        total = m.A.degree + m.B.degree
    return (w.value + w.err, total, measures.measure_to_json(m))


class SearchState:
    """Resumable candidate search over the three witness streams.

    Candidates are drawn round-robin from Θ enumeration, seeded pairs and
    capacity-one lemniscates, deduplicated, and evaluated at the coarse
    tolerance; `advance` consumes a tranche of the budget and can be called
    repeatedly.  Deterministic for a fixed config and consumption pattern.
    """

    def __init__(self, g: GreenFunction, config: SearchConfig | None = None):
        self.g = g
        self.cfg = config or SearchConfig()
        self._streams = [
            _theta_pairs(self.cfg),
            _seeded_pairs(self.cfg),
            _cap1_stream(self.cfg),
        ]
        self._order = itertools.cycle(range(len(self._streams)))
        self._exhausted = [False] * len(self._streams)
        self._seen = set()
        self.coarse = []
        self.used = 0

    @property
    def exhausted(self) -> bool:
        return all(self._exhausted)

    def advance(self, k: int):
        """Consume up to k fresh candidates; returns the best coarse witness."""
        stop = self.used + k
        while self.used < stop and not self.exhausted:
            i = next(self._order)
            if self._exhausted[i]:
                continue
            try:
                m, prov = next(self._streams[i])
            except StopIteration:
                self._exhausted[i] = True
                continue
            key = measures.measure_to_json(m)
            if key in self._seen:
                continue
            self._seen.add(key)
            self.used += 1
            try:
                w = eval_witness(self.g, m, self.cfg.coarse_tol, provenance=prov)
            except (NonConvergence, SingularIntegrand):
                continue
            self.coarse.append(w)
        return self.best_coarse()

    def best_coarse(self):
        if not self.coarse:
            return None
        return min(self.coarse, key=_tie_key)

    def ranked(self):
        """Refine the top decile (capped) at the target tolerance and rank."""
        coarse = sorted(self.coarse, key=_tie_key)
        n_refine = min(max(1, len(coarse) // 10), self.cfg.refine_cap, len(coarse))
        refined = []
        for w in coarse[:n_refine]:
            try:
                refined.append(
                    eval_witness(
                        self.g, w.measure, self.cfg.target_tol, provenance=w.provenance
                    )
                )
            except (NonConvergence, SingularIntegrand):
                refined.append(w)
        return sorted(refined, key=_tie_key) + coarse[n_refine:]


def search(g: GreenFunction, config: SearchConfig | None = None, budget: int = 1000):
    """Best witness found within the evaluation budget, plus the ranked list.

    Every candidate costs one coarse-tolerance quadrature against the
    budget; the ranked tail then refines leaders at the target tolerance.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    state = SearchState(g, config)
    state.advance(budget)
    ranked = state.ranked()
    if not ranked:
        raise RuntimeError("no candidate could be evaluated within the budget")
    return ranked[0], ranked
