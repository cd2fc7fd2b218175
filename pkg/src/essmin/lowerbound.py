"""Rational dual certificates for lower bounds on essential minima.

A certificate is a finite list of primitive integer polynomials Q_i with
nonnegative rational weights a_i satisfying sum(a_i * deg Q_i) < 1.  For any
such data the global infimum of

    phi_a(z) = g(z) - sum_i a_i * log|Q_i(z)|

is a valid lower bound on the essential minimum of the height attached to g.
This module computes certificates with an exchange (cutting-plane) loop: a
finite LP over a working point set proposes weights, a certified global
minimizer of phi_a sharpens the bound and supplies the next cut point.
"""

from __future__ import annotations

import heapq
import json
import math
from fractions import Fraction

import numpy as np

from . import intervals
from .greens import CompositeGreen, EnclosureUnavailable, GreenFunction
from .intpoly import IntPoly, enumerate_polys, format_poly, parse_poly

__all__ = [
    "DELTA",
    "DualCertificate",
    "ExchangeLoop",
    "LPInfeasible",
    "certified_inf",
    "exchange_solve",
    "heuristic_inf",
    "phi_eval",
    "pool_grow",
    "rationalize",
]

# margin keeping the weight polytope closed: sum a_i deg Q_i <= 1 - DELTA
DELTA = Fraction(1, 1 << 20)

_RAT_DENOM = 1 << 32

# floor applied to log|Q(z)| entries of the LP constraint matrix; keeps the
# tableau finite when a support point sits on a zero of some Q
_LOG_CLAMP = -60.0


class LPInfeasible(RuntimeError):
    pass


class DualCertificate:
    """Weighted polynomial system certifying a lower bound."""

    __slots__ = ("terms", "value", "rigor", "inner_tol")

    def __init__(self, terms=(), value=None, rigor="heuristic", inner_tol=None):
        if rigor not in ("heuristic", "certified"):
            raise ValueError(f"unknown rigor {rigor!r}")
        cleaned = []
        for q, a in terms:
            q = q if isinstance(q, IntPoly) else IntPoly(q)
            a = Fraction(a)
            if a < 0:
                raise ValueError("certificate weights must be nonnegative")
            if a == 0:
                continue
            if q.degree < 1:
                raise ValueError("certificate polynomials must be nonconstant")
            cleaned.append((q.primitive_part(), a))
        self.terms = tuple(cleaned)
        if self.degree_sum() >= 1:
            raise ValueError("sum of a_i * deg Q_i must stay strictly below 1")
        self.value = None if value is None else float(value)
        self.rigor = rigor
        self.inner_tol = None if inner_tol is None else float(inner_tol)

    def degree_sum(self) -> Fraction:
        return sum((a * q.degree for q, a in self.terms), Fraction(0))

    def __repr__(self):
        body = ", ".join(f"({format_poly(q)!r}, {a})" for q, a in self.terms)
        return f"DualCertificate([{body}], value={self.value}, rigor={self.rigor!r})"

    def to_json(self) -> str:
        doc = {
            "terms": [
                {"Q": format_poly(q), "a": f"{a.numerator}/{a.denominator}"}
                for q, a in self.terms
            ],
            "lambda": self.value,
            "rigor": self.rigor,
        }
        if self.inner_tol is not None:
            doc["inner_tol"] = self.inner_tol
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DualCertificate":
        doc = json.loads(text)
        terms = [(parse_poly(t["Q"]), Fraction(t["a"])) for t in doc["terms"]]
        return cls(
            terms,
            value=doc.get("lambda"),
            rigor=doc.get("rigor", "heuristic"),
            inner_tol=doc.get("inner_tol"),
        )


def phi_eval(g: GreenFunction, cert: DualCertificate, z):
    """g(z) - sum a_i log|Q_i(z)|, +inf at zeros of weighted polynomials."""
    zz = np.asarray(z, dtype=complex)
    scalar = zz.ndim == 0
    if scalar:
        zz = zz.reshape(1)
    out = np.asarray(g.eval(zz), dtype=float).copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        for q, a in cert.terms:
            av = np.abs(q.eval(zz))
            out -= float(a) * np.log(av)
    if scalar:
        return float(out[0])
    return out


def rationalize(weights, degrees, delta: Fraction = DELTA):
    """Round weights down to admissible rationals with denominator 2^32.

    Returns b with 0 <= b_i <= a_i and
    sum b_i d_i <= (1 - delta) * min(1, sum a_i d_i).
    """
    ws = [Fraction(w) for w in weights]
    ds = [int(d) for d in degrees]
    if len(ws) != len(ds):
        raise ValueError("weights and degrees must have equal length")
    if any(w < 0 for w in ws):
        raise ValueError("weights must be nonnegative")
    total = sum((w * d for w, d in zip(ws, ds)), Fraction(0))
    if total <= 0:
        return [Fraction(0)] * len(ws)
    t = (1 - Fraction(delta)) * min(Fraction(1), total) / total
    out = []
    for w in ws:
        scaled = w * t
        out.append(Fraction(math.floor(scaled * _RAT_DENOM), _RAT_DENOM))
    return out


# -- dense simplex -------------------------------------------------------------------


def _simplex_max(c, A, b):
    """Maximize c.x subject to A x <= b, x >= 0 (b >= 0), Bland's rule.

    Returns (x, value).  Requires a bounded problem; the exchange LP always
    is, since every variable appears in some constraint with positive sign.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        raise LPInfeasible("standard-form RHS must be nonnegative")
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = list(range(n, n + m))
    for _ in range(20000):
        enter = -1
        for j in range(n + m):
            if T[m, j] < -1e-11:
                enter = j
                break
        if enter < 0:
            break
        ratio = np.inf
        row = -1
        col = T[:m, enter]
        for i in range(m):
            if col[i] > 1e-11:
                r = T[i, -1] / col[i]
                if r < ratio - 1e-13 or (
                    abs(r - ratio) <= 1e-13 and (row < 0 or basis[i] < basis[row])
                ):
                    ratio = r
                    row = i
        if row < 0:
            raise LPInfeasible("LP unbounded; degree constraint missing")
        piv = T[row, enter]
        T[row] /= piv
        for i in range(m + 1):
            if i != row and T[i, enter] != 0.0:
                T[i] -= T[i, enter] * T[row]
        basis[row] = enter
    else:
        raise LPInfeasible("simplex iteration cap reached")
    x = np.zeros(n + m)
    for i, bi in enumerate(basis):
        x[bi] = T[i, -1]
    return x[:n], float(T[m, -1])


def _solve_exchange_lp(gvals, logq, degrees, delta: Fraction):
    """max t s.t. t + sum a_i L_i(z) <= g(z), sum a_i d_i <= 1 - delta, a >= 0.

    gvals: (m,) finite; logq: (m, n) clamped log|Q_i(z_j)|.  Returns (t, a).
    """
    m, n = logq.shape
    shift = 1.0 + max(0.0, -float(gvals.min()))
    A = np.zeros((m + 1, n + 1))
    A[:m, 0] = 1.0
    A[:m, 1:] = logq
    A[m, 1:] = degrees
    b = np.concatenate([gvals + shift, [float(1 - Fraction(delta))]])
    c = np.zeros(n + 1)
    c[0] = 1.0
    # tiny graded penalty prefers lexicographically small weight vectors
    # among near-ties without measurably moving the optimum
    c[1:] = -np.ldexp(1.0, -44) / (1.0 + np.arange(n))
    x, _ = _simplex_max(c, A, b)
    t = x[0] - shift
    a = np.maximum(x[1:], 0.0)
    return t, a


# -- certified global infimum --------------------------------------------------------


class _Chart:
    """One coordinate chart of the phi branch-and-bound.

    Chart 'z' covers a bounded rectangle directly.  Chart 'w' covers the
    tail through w = 1/z, where phi(1/w) = ghat(w) - sum a log|Qrev(w)|
    - (1 - s) log|w| and ghat(w) = g(1/w) + log|w| extends continuously
    to w = 0.  Together the two charts cover the whole plane.
    """

    def __init__(self, green, terms, extra_const=0.0, log_w_coeff=0.0):
        self.green = green
        self.terms = terms  # [(coeff tuple, float weight)]
        self.extra_const = extra_const
        self.log_w_coeff = log_w_coeff  # multiplies log|w|, nonpositive side handled

    def lower(self, box: intervals.Box):
        lo, hi = self.green.enclose_boxes(box)
        out = intervals._down(lo + self.extra_const)
        for coeffs, a in self.terms:
            qlo, qhi = intervals.iv_log(*intervals.iv_abs_poly(coeffs, box))
            slo, _ = intervals.iv_scale(qlo, qhi, -a)
            out = intervals._down(out + slo)
        if self.log_w_coeff != 0.0:
            wlo, whi = intervals.iv_log(*intervals.iv_abs_poly((0, 1), box))
            slo, _ = intervals.iv_scale(wlo, whi, self.log_w_coeff)
            out = intervals._down(out + slo)
        # -inf entries mean "no information yet"; splitting refines them
        return np.where(np.isnan(out), -np.inf, out)


def _phi_values(g, cert, z):
    vals = phi_eval(g, cert, z)
    return np.asarray(vals, dtype=float)


def _seed_points(radius):
    ang = np.exp(2j * np.pi * np.arange(24) / 24)
    pts = [r * ang for r in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)]
    pts.append(np.linspace(-radius, radius, 41) + 0j)
    return np.concatenate(pts)


_CHART_RADIUS = 4.0


def _downf(x: float) -> float:
    return math.nextafter(x, -math.inf)


def certified_inf(
    g: GreenFunction,
    cert: DualCertificate,
    tol: float,
    seeds=(),
    budget: int = 400000,
    return_point: bool = False,
):
    """Rigorous two-sided bracket (lam_low, lam_high) of inf over C of phi.

    lam_high - lam_low <= tol on success; if the box budget runs out the
    last rigorous floor is returned with lam_high = +inf.  With
    return_point=True a third element gives the best point found.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not g.has_enclosure:
        raise EnclosureUnavailable(f"{g.name} has no interval enclosure")
    if not isinstance(g, CompositeGreen):
        raise EnclosureUnavailable("certified search needs a composite green")
    s = cert.degree_sum()

    zchart = _Chart(g, [(q.coeffs, float(a)) for q, a in cert.terms])
    ghat = g.reciprocal()
    wterms = []
    wconst = 0.0
    for q, a in cert.terms:
        rev = IntPoly(tuple(reversed(q.coeffs)))
        if rev.degree == 0:
            wconst += float(a) * math.log(abs(rev.coeffs[0]))
        else:
            wterms.append((rev.coeffs, float(a)))
    growth = max(0.0, _downf(float(1 - s)))
    wchart = _Chart(ghat, wterms, extra_const=_downf(-wconst), log_w_coeff=-growth)

    # conjugation symmetry: search the closed upper half-plane only
    r = _CHART_RADIUS
    charts = (zchart, wchart)
    start = [
        (0, intervals.Box([-r, 0.0], [0.0, r], [0.0, 0.0], [r, r])),
        (1, intervals.Box([-1 / r, 0.0], [0.0, 1 / r], [0.0, 0.0], [1 / r, 1 / r])),
    ]

    pts = np.concatenate([_seed_points(r), np.asarray(list(seeds), dtype=complex)])
    vals = _phi_values(g, cert, pts)
    ok = np.isfinite(vals)
    upper = math.inf
    best_z = None
    if ok.any():
        k = int(np.argmin(np.where(ok, vals, np.inf)))
        upper = float(vals[k])
        best_z = complex(pts[k])

    heap = []
    count = 0
    processed = 0
    for ci, box in start:
        lo = charts[ci].lower(box)
        for i in range(len(box)):
            heapq.heappush(
                heap,
                (float(lo[i]), count, ci, box.xlo[i], box.xhi[i], box.ylo[i], box.yhi[i]),
            )
            count += 1

    def safe_upper():
        return upper + 1e-11 * (1.0 + abs(upper)) if math.isfinite(upper) else upper

    exhausted = False
    while heap:
        if heap[0][0] >= safe_upper() - tol:
            break
        if processed >= budget:
            exhausted = True
            break
        batch = []
        while heap and len(batch) < 64 and heap[0][0] < safe_upper() - tol:
            batch.append(heapq.heappop(heap))
        if not batch:
            break
        processed += len(batch)
        for ci in (0, 1):
            rows = [it for it in batch if it[2] == ci]
            if not rows:
                continue
            parent = intervals.Box(
                [it[3] for it in rows],
                [it[4] for it in rows],
                [it[5] for it in rows],
                [it[6] for it in rows],
            )
            kids = parent.split()
            lo = charts[ci].lower(kids)
            cz = kids.centers
            if ci == 1:
                with np.errstate(divide="ignore", invalid="ignore"):
                    pz = np.where(cz != 0, 1.0 / np.where(cz == 0, 1.0, cz), np.inf)
            else:
                pz = cz
            finite = np.isfinite(pz)
            if finite.any():
                pv = _phi_values(g, cert, np.where(finite, pz, 0.0))
                for i in np.flatnonzero(finite):
                    v = float(pv[i])
                    if math.isfinite(v) and v < upper:
                        upper = v
                        best_z = complex(pz[i])
            cutoff = safe_upper() - tol
            for i in range(len(kids)):
                if lo[i] < cutoff:
                    heapq.heappush(
                        heap,
                        (
                            float(lo[i]),
                            count,
                            ci,
                            kids.xlo[i],
                            kids.xhi[i],
                            kids.ylo[i],
                            kids.yhi[i],
                        ),
                    )
                    count += 1

    floor = heap[0][0] if heap else math.inf
    lam_high = safe_upper()
    lam_low = min(floor, lam_high - tol)
    if exhausted:
        out = (lam_low, math.inf)
    else:
        out = (lam_low, lam_high)
    if return_point:
        return out + (best_z,)
    return out


def heuristic_inf(
    g: GreenFunction,
    cert: DualCertificate,
    tol: float = 1e-6,
    seeds=(),
    return_point: bool = False,
):
    """Sampled near-infimum of phi; fast, not a rigorous lower bound.

    Returns (lam, lam): the best value found by a ring grid plus local
    Nelder-Mead descent from the most promising starts.
    """
    from scipy.optimize import minimize

    radii = np.concatenate([[1e-3], np.geomspace(0.01, 64.0, 44)])
    ang = np.exp(2j * np.pi * np.arange(32) / 32)
    pts = np.concatenate(
        [np.outer(radii, ang).ravel(), np.linspace(-8, 8, 161) + 0j]
        + ([np.asarray(list(seeds), dtype=complex)] if len(list(seeds)) else [])
    )
    vals = _phi_values(g, cert, pts)
    finite = np.isfinite(vals)
    order = np.argsort(np.where(finite, vals, np.inf))[:10]

    def f(xy):
        v = phi_eval(g, cert, complex(xy[0], xy[1]))
        return v if math.isfinite(v) else 1e18

    best = math.inf
    best_z = None
    for k in order:
        if not finite[k]:
            continue
        z0 = pts[k]
        res = minimize(
            f,
            np.array([z0.real, z0.imag]),
            method="Nelder-Mead",
            options={
                "xatol": 0.1 * tol,
                "fatol": 0.1 * tol,
                "maxiter": 300,
                "maxfev": 600,
            },
        )
        cand = float(res.fun)
        if cand < best:
            best = cand
            best_z = complex(res.x[0], res.x[1])
    if best_z is None:
        best = float(np.min(np.where(finite, vals, np.inf)))
        best_z = complex(pts[int(np.argmin(np.where(finite, vals, np.inf)))])
    if return_point:
        return best, best, best_z
    return best, best


# -- exchange loop -------------------------------------------------------------------


class ExchangeLoop:
    """Cutting-plane state: working points, pool, best certificate so far."""

    def __init__(
        self,
        g: GreenFunction,
        pool,
        seed_grid,
        tol: float = 1e-4,
        rigor: str = "certified",
        inner_tol=None,
        delta: Fraction = DELTA,
    ):
        if rigor not in ("heuristic", "certified"):
            raise ValueError(f"unknown rigor {rigor!r}")
        self.g = g
        self.pool = []
        seen = set()
        for q in pool:
            q = (q if isinstance(q, IntPoly) else IntPoly(q)).primitive_part()
            if q.degree < 1:
                raise ValueError("pool polynomials must be nonconstant")
            if q.coeffs not in seen:
                seen.add(q.coeffs)
                self.pool.append(q)
        if not self.pool:
            raise ValueError("pool must be nonempty")
        zs = np.asarray(list(seed_grid), dtype=complex)
        if zs.size == 0:
            raise ValueError("seed grid must be nonempty")
        gv = np.asarray(self.g.eval(zs), dtype=float)
        keep = np.isfinite(gv)
        self.points = [complex(z) for z in zs[keep]]
        if not self.points:
            raise ValueError("no seed point has finite g")
        self.tol = float(tol)
        self.rigor = rigor
        if inner_tol is None:
            inner_tol = max(0.25 * float(tol), 1e-7)
        self.inner_tol = float(inner_tol)
        self.delta = Fraction(delta)
        self.best = None
        self.lp_value = None
        self.history = []

    def _lp_data(self):
        z = np.asarray(self.points, dtype=complex)
        gv = np.asarray(self.g.eval(z), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            cols = [np.log(np.abs(q.eval(z))) for q in self.pool]
        logq = np.maximum(np.stack(cols, axis=1), _LOG_CLAMP)
        logq = np.where(np.isfinite(logq), logq, _LOG_CLAMP)
        return gv, logq

    def round(self):
        """One LP solve + one certified (or heuristic) inner minimization.

        Returns (lp_value, lam, cert) for the round; tracks the best
        certificate seen and appends the located near-minimizer.
        """
        gv, logq = self._lp_data()
        degs = [q.degree for q in self.pool]
        t_lp, a = _solve_exchange_lp(gv, logq, degs, self.delta)
        self.lp_value = t_lp
        b = rationalize(a, degs, self.delta)
        cert = DualCertificate(
            list(zip(self.pool, b)),
            rigor=self.rigor,
            inner_tol=self.inner_tol,
        )
        if self.rigor == "certified":
            lam, _, zmin = certified_inf(
                self.g, cert, self.inner_tol, seeds=self.points, return_point=True
            )
        else:
            lam, _, zmin = heuristic_inf(
                self.g, cert, self.inner_tol, seeds=self.points, return_point=True
            )
        cert.value = lam
        if self.best is None or (
            cert.value is not None and cert.value > self.best.value
        ):
            self.best = cert
        self.history.append(lam if not self.history else max(lam, self.history[-1]))
        if zmin is not None and math.isfinite(self.g.eval(complex(zmin))):
            self.points.append(complex(zmin))
        return t_lp, lam, cert

    @property
    def gap(self):
        if self.lp_value is None or self.best is None or self.best.value is None:
            return math.inf
        return self.lp_value - self.best.value

    def run(self, max_rounds: int):
        for _ in range(int(max_rounds)):
            self.round()
            if self.gap <= self.tol:
                break
        return self.best


def exchange_solve(
    g: GreenFunction,
    pool,
    seed_grid,
    max_rounds: int = 40,
    tol: float = 1e-4,
    rigor: str = "certified",
    inner_tol=None,
    delta: Fraction = DELTA,
) -> DualCertificate:
    """Run the exchange loop from scratch; returns the best certificate."""
    loop = ExchangeLoop(
        g, pool, seed_grid, tol=tol, rigor=rigor, inner_tol=inner_tol, delta=delta
    )
    best = loop.run(max_rounds)
    assert best is not None
    return best


# -- pool growth ---------------------------------------------------------------------


_POOL_HEIGHT_CAP = 24


def _recognize(z: complex):
    """Small integer polynomials nearly vanishing at z, best first."""
    scale = 1.0 + abs(z)
    out = []
    if abs(z.imag) <= 1e-8 * scale:
        fr = Fraction(z.real).limit_denominator(64)
        if abs(fr - z.real) <= 1e-7 * scale and fr.denominator <= 64:
            out.append(IntPoly((-fr.numerator, fr.denominator)).primitive_part())
    # integer coefficient scan, degrees 2..4 with shrinking height caps
    for deg, hcap in ((2, _POOL_HEIGHT_CAP), (3, 12), (4, 6)):
        rng = np.arange(-hcap, hcap + 1)
        lead = np.arange(1, max(2, hcap // 3) + 1)
        grids = np.meshgrid(*([rng] * deg + [lead]), indexing="ij")
        coeffs = np.stack([grid.ravel() for grid in grids], axis=1)
        powers = z ** np.arange(deg + 1)
        vals = np.abs(coeffs @ powers)
        norm = np.abs(coeffs) @ np.abs(powers)
        rel = vals / np.maximum(norm, 1e-30)
        k = int(np.argmin(rel))
        if rel[k] <= 1e-5:
            p = IntPoly(tuple(int(c) for c in coeffs[k])).primitive_part()
            if p.degree >= 1:
                out.append(p)
            break
    kept = []
    for p in out:
        try:
            if p.degree >= 1 and p.is_irreducible_q():
                kept.append(p)
        except Exception:
            continue
    return kept


def pool_grow(
    g: GreenFunction,
    cert,
    minimizers,
    pool=(),
    enum_skip: int = 0,
    enum_count: int = 8,
):
    """Propose new primitive irreducible pool candidates.

    Minimal-polynomial guesses for the given near-minimizers come first,
    then the next enum_count entries of the canonical primitive irreducible
    enumeration (offset by enum_skip).  Duplicates of the pool and of the
    certificate support are dropped.
    """
    known = {(q if isinstance(q, IntPoly) else IntPoly(q)).primitive_part().coeffs
             for q in pool}
    if cert is not None:
        known |= {q.coeffs for q, _ in cert.terms}
    out = []
    for z in minimizers or ():
        for p in _recognize(complex(z)):
            if p.height <= _POOL_HEIGHT_CAP and p.coeffs not in known:
                known.add(p.coeffs)
                out.append(p)
    taken = 0
    skipped = 0
    for p in enumerate_polys(4, 12, filt="primitive_irreducible"):
        if taken >= enum_count:
            break
        if skipped < enum_skip:
            skipped += 1
            continue
        taken += 1
        if p.coeffs not in known:
            known.add(p.coeffs)
            out.append(p)
    return out
