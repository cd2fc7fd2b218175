"""Green functions on C built from log-type expressions.

A Green function here is a continuous conjugation-invariant g: C -> R that
behaves like log|z| at infinity.  Composites are specified as weighted sums
of terms log^+|A/B| or log|A/B| with integer polynomials A, B plus a real
offset; the degree bookkeeping sum(weight * (deg A - deg B)) = 1 makes the
whole expression asymptotically log|z|.

Construction simplifies algebraically rather than numerically:

    log^+|A/B| = log max(|A|,|B|) - log|B|

and the plain-log parts are collected into a single exponent per primitive
polynomial, with rational constants folded into the offset.  This removes
removable singularities exactly (the hultberg function, for instance,
reduces to log max(|2z+1|, |z|), total on all of C).

Tail radii are derived from explicit coefficient bounds on each term and
validated by dense sampling on the boundary circle.  Interval enclosures
evaluate the same simplified expression in outward-rounded arithmetic.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from . import intervals
from .intpoly import IntPoly, gcd_q, poly_from_json, poly_to_json

__all__ = [
    "GreenFunction",
    "CompositeSpec",
    "CompositeTerm",
    "CompositeGreen",
    "DegreeMismatch",
    "ZeroDenominator",
    "UnknownName",
    "EnclosureUnavailable",
    "make_composite",
    "eval_green",
    "tail_radius",
    "builtin",
    "enclosure",
    "BUILTIN_NAMES",
]


class DegreeMismatch(ValueError):
    pass


class ZeroDenominator(ValueError):
    pass


class UnknownName(ValueError):
    pass


class EnclosureUnavailable(RuntimeError):
    pass


class GreenFunction:
    """Base type: evaluable g with tail certificate and optional enclosure."""

    name = "green"
    conjugation_invariant = True
    has_enclosure = False

    def __init__(self):
        self._tail_cache = {}

    def eval(self, z):
        raise NotImplementedError

    def __call__(self, z):
        return self.eval(z)

    def tail_radius(self, n: int) -> float:
        """Radius R > 1 with |g(z) - log|z|| <= log|z|/n for all |z| > R."""
        if n < 1:
            raise ValueError("n must be >= 1")
        n = int(n)
        if n not in self._tail_cache:
            r = self._derive_tail(n)
            self._validate_tail(r, n)
            self._tail_cache[n] = r
        return self._tail_cache[n]

    # alias matching the field name of the abstraction
    def tail_certificate(self, n: int) -> float:
        return self.tail_radius(n)

    def _derive_tail(self, n: int) -> float:
        raise NotImplementedError

    def _validate_tail(self, r: float, n: int, samples: int = 4096):
        theta = 2.0 * np.pi * np.arange(samples) / samples
        z = r * np.exp(1j * theta)
        vals = np.asarray(self.eval(z), dtype=float)
        defect = np.abs(vals - math.log(r))
        allowed = math.log(r) / n + 1e-9 * (1.0 + math.log(r))
        if not np.all(defect <= allowed):
            raise RuntimeError(
                f"tail radius {r} failed boundary validation for n={n}: "
                f"max defect {defect.max():.3e} > {allowed:.3e}"
            )

    def enclose_boxes(self, box: intervals.Box):
        raise EnclosureUnavailable(f"{self.name} has no interval enclosure")

    def spec_json(self) -> str:
        """Stable serialization used for checkpoint identity."""
        return json.dumps({"builtin": self.name}, sort_keys=True)


class CompositeTerm:
    __slots__ = ("w", "kind", "num", "den")

    def __init__(self, w, kind, num, den):
        self.w = Fraction(w)
        if kind not in ("log_plus", "log_abs"):
            raise ValueError(f"unknown term kind {kind!r}")
        self.kind = kind
        self.num = num if isinstance(num, IntPoly) else IntPoly(num)
        self.den = den if isinstance(den, IntPoly) else IntPoly(den)


class CompositeSpec:
    """Weighted log-type terms plus constant offset."""

    def __init__(self, terms, offset=0.0):
        self.terms = [
            t if isinstance(t, CompositeTerm) else CompositeTerm(*t) for t in terms
        ]
        self.offset = float(offset)

    def degree_sum(self) -> Fraction:
        return sum(
            (t.w * (t.num.degree - t.den.degree) for t in self.terms),
            start=Fraction(0),
        )

    def validate(self):
        for t in self.terms:
            if t.den.is_zero:
                raise ZeroDenominator("term denominator is the zero polynomial")
            if t.num.is_zero:
                raise ValueError("term numerator is the zero polynomial")
        if self.degree_sum() != 1:
            raise DegreeMismatch(
                f"degree bookkeeping sum is {self.degree_sum()}, expected 1"
            )

    def to_json(self) -> str:
        obj = {
            "terms": [
                {
                    "w": str(t.w),
                    "kind": t.kind,
                    "num": poly_to_json(t.num),
                    "den": poly_to_json(t.den),
                }
                for t in self.terms
            ],
            "offset": self.offset,
        }
        return json.dumps(obj, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "CompositeSpec":
        obj = json.loads(text)
        terms = [
            CompositeTerm(
                Fraction(t["w"]),
                t["kind"],
                poly_from_json(t["num"]),
                poly_from_json(t["den"]),
            )
            for t in obj["terms"]
        ]
        return CompositeSpec(terms, float(obj.get("offset", 0.0)))


def _poly_abs(coeffs, z):
    """abs of the polynomial with float coefficient array, Horner."""
    acc = np.full(z.shape, complex(coeffs[-1]))
    for k in range(len(coeffs) - 2, -1, -1):
        acc *= z
        acc += coeffs[k]
    return np.abs(acc)


def _float_arr(p: IntPoly):
    return np.array([float(c) for c in p.coeffs])


def _reverse_to(p: IntPoly, d: int) -> IntPoly:
    """w^d * p(1/w) as an integer polynomial; requires d >= deg p."""
    rev = (0,) * (d - p.degree) + tuple(reversed(p.coeffs))
    return IntPoly(rev)


def _tail_sides(coeffs_abs, deg, r):
    """Bounds L, U with L <= |P(z)|/|z|^deg <= U for all |z| >= r."""
    lc = coeffs_abs[deg]
    s = 0.0
    for k in range(deg):
        s += coeffs_abs[k] * r ** (k - deg)
    return lc - s, lc + s


class CompositeGreen(GreenFunction):
    """Green function from a CompositeSpec, algebraically simplified.

    Internal form: a list of max-log pieces (w, A, B) contributing
    w * log max(|A|,|B|), a dict of plain-log exponents on primitive
    polynomials, and a scalar offset absorbing all rational constants.
    """

    def __init__(self, spec: CompositeSpec, name="composite", check_degree=True):
        super().__init__()
        if check_degree:
            spec.validate()
        else:
            for t in spec.terms:
                if t.den.is_zero:
                    raise ZeroDenominator("term denominator is the zero polynomial")
        self.name = name
        self.spec = spec
        maxlog = {}
        plain = {}
        offset = Fraction(0)
        log_offset = spec.offset

        def add_plain(p: IntPoly, e: Fraction):
            nonlocal log_offset
            if e == 0 or p.is_zero:
                return
            c = p.content
            pp = p.primitive_part()
            if c > 1:
                log_offset += float(e) * math.log(c)
            if pp.degree == 0:
                return
            key = pp.coeffs
            plain[key] = plain.get(key, Fraction(0)) + e

        for t in spec.terms:
            if t.kind == "log_abs":
                add_plain(t.num, t.w)
                add_plain(t.den, -t.w)
                continue
            # log+|A/B| = log max(|A1|,|B1|) - log|B1| after gcd cancellation
            a, b = t.num, t.den
            g = gcd_q(a, b)
            if g.degree >= 1:
                a = a.divexact(g)
                b = b.divexact(g)
            add_plain(b, -t.w)
            if max(a.degree, b.degree) == 0:
                v = max(abs(a.coeffs[0]), abs(b.coeffs[0]))
                log_offset += float(t.w) * math.log(v)
                continue
            key = (a.coeffs, b.coeffs)
            maxlog[key] = maxlog.get(key, Fraction(0)) + t.w
        del offset
        self._maxlog = []
        for (ac, bc), w in maxlog.items():
            if w == 0:
                continue
            self._maxlog.append(
                (
                    float(w),
                    w,
                    np.array([float(c) for c in ac]),
                    np.array([float(c) for c in bc]),
                    IntPoly(ac),
                    IntPoly(bc),
                )
            )
        self._plainlog = []
        for key, e in plain.items():
            if e == 0:
                continue
            self._plainlog.append(
                (float(e), e, np.array([float(c) for c in key]), IntPoly(key))
            )
        self.offset = float(log_offset)
        self.has_enclosure = True

    def eval(self, z):
        zz = np.asarray(z, dtype=complex)
        scalar = zz.ndim == 0
        if scalar:
            zz = zz.reshape(1)
        out = np.full(zz.shape, self.offset, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            for wf, _, ac, bc, _, _ in self._maxlog:
                out += wf * np.log(np.maximum(_poly_abs(ac, zz), _poly_abs(bc, zz)))
            for ef, _, pc, _ in self._plainlog:
                out += ef * np.log(_poly_abs(pc, zz))
        if scalar:
            return float(out[0])
        return out

    @classmethod
    def _from_parts(cls, maxlog, plainlog, offset, name):
        """Internal constructor from simplified parts, skipping spec validation.

        maxlog: iterable of (Fraction weight, IntPoly A, IntPoly B);
        plainlog: iterable of (Fraction exponent, IntPoly P).
        """
        self = object.__new__(cls)
        GreenFunction.__init__(self)
        self.name = name
        self.spec = None
        self._maxlog = [
            (float(w), Fraction(w), _float_arr(a), _float_arr(b), a, b)
            for w, a, b in maxlog
        ]
        self._plainlog = [
            (float(e), Fraction(e), _float_arr(p), p) for e, p in plainlog
        ]
        self.offset = float(offset)
        self.has_enclosure = True
        return self

    def reciprocal(self) -> "CompositeGreen":
        """The composite w -> g(1/w) + log|w|, continuous at w = 0.

        Well defined exactly when the true asymptotic degree is 1; the
        log|w| factors of the reversed terms then cancel the added log|w|.
        """
        if self._true_degree_sum() != 1:
            raise ValueError("reciprocal needs a composite asymptotic to log|z|")
        ml = []
        for _, w, _, _, ap, bp in self._maxlog:
            d = max(ap.degree, bp.degree)
            ml.append((w, _reverse_to(ap, d), _reverse_to(bp, d)))
        pl = []
        offset = self.offset
        for _, e, _, pp in self._plainlog:
            rev = _reverse_to(pp, pp.degree)
            if rev.degree == 0:
                offset += float(e) * math.log(abs(rev.coeffs[0]))
            else:
                pl.append((e, rev))
        return CompositeGreen._from_parts(ml, pl, offset, name=self.name + "@inf")

    def _true_degree_sum(self) -> Fraction:
        s = Fraction(0)
        for _, w, ac, bc, _, _ in self._maxlog:
            s += w * max(len(ac) - 1, len(bc) - 1)
        for _, e, pc, _ in self._plainlog:
            s += e * (len(pc) - 1)
        return s

    def _tail_defect_bound(self, r: float):
        """Upper bound on |g(z) - log|z|| valid for every |z| >= r, or None."""
        total = abs(self.offset)
        for wf, _, ac, bc, _, _ in self._maxlog:
            da, db = len(ac) - 1, len(bc) - 1
            d = max(da, db)
            la, ua = _tail_sides(np.abs(ac), da, r)
            lb, ub = _tail_sides(np.abs(bc), db, r)
            upper = max(ua * r ** (da - d), ub * r ** (db - d))
            lower = -np.inf
            if da == d and la > 0:
                lower = max(lower, la)
            if db == d and lb > 0:
                lower = max(lower, lb)
            if lower <= 0 or upper <= 0:
                return None
            total += abs(wf) * max(abs(math.log(lower)), abs(math.log(upper)))
        for ef, _, pc, _ in self._plainlog:
            dp = len(pc) - 1
            lp, up = _tail_sides(np.abs(pc), dp, r)
            if lp <= 0:
                return None
            total += abs(ef) * max(abs(math.log(lp)), abs(math.log(up)))
        return total

    def _derive_tail(self, n: int) -> float:
        if self._true_degree_sum() != 1:
            raise ValueError(
                "composite is not asymptotic to log|z|; no tail radius exists"
            )
        for j in range(-16, 1024):
            r = 1.0 + 2.0 ** j
            bound = self._tail_defect_bound(r)
            if bound is not None and bound <= math.log(r) / n:
                return r
        raise ValueError("tail radius search exhausted")

    def enclose_boxes(self, box: intervals.Box):
        """Vectorized interval enclosure of g over a batch of boxes."""
        m = box.xlo.shape[0]
        lo = np.full(m, self.offset)
        hi = np.full(m, self.offset)
        lo = intervals._down(lo)
        hi = intervals._up(hi)
        acc = (lo, hi)
        for wf, _, _, _, ap, bp in self._maxlog:
            va = intervals.iv_abs_poly(ap.coeffs, box)
            vb = intervals.iv_abs_poly(bp.coeffs, box)
            t = intervals.iv_log(*intervals.iv_max(*va, *vb))
            acc = intervals.iv_add(*acc, *intervals.iv_scale(*t, wf))
        for ef, _, _, pp in self._plainlog:
            t = intervals.iv_log(*intervals.iv_abs_poly(pp.coeffs, box))
            acc = intervals.iv_add(*acc, *intervals.iv_scale(*t, ef))
        return acc

    def spec_json(self) -> str:
        if self.name in BUILTIN_NAMES:
            return json.dumps({"builtin": self.name}, sort_keys=True)
        return self.spec.to_json()


def make_composite(spec: CompositeSpec, name="composite") -> GreenFunction:
    """Build the Green function of a validated composite spec."""
    return CompositeGreen(spec, name=name)


def eval_green(g: GreenFunction, z):
    return g.eval(z)


def tail_radius(g: GreenFunction, n: int) -> float:
    return g.tail_radius(n)


def enclosure(g: GreenFunction, rect):
    """Interval [lo, hi] containing g over the rectangle (xlo, xhi, ylo, yhi)."""
    if not g.has_enclosure:
        raise EnclosureUnavailable(f"{g.name} has no interval enclosure")
    xlo, xhi, ylo, yhi = (float(v) for v in rect)
    if xhi < xlo or yhi < ylo:
        raise ValueError("rectangle sides must be ordered")
    box = intervals.Box(
        np.array([xlo]), np.array([xhi]), np.array([ylo]), np.array([yhi])
    )
    lo, hi = g.enclose_boxes(box)
    return float(lo[0]), float(hi[0])


_X = IntPoly((0, 1))
_ONE = IntPoly((1,))

BUILTIN_NAMES = ("weil", "zhang_zagier", "hultberg", "faltings")

_builtin_cache: dict[str, GreenFunction] = {}


def builtin(name: str) -> GreenFunction:
    """Named Green functions: weil, zhang_zagier, hultberg, faltings."""
    if name in _builtin_cache:
        return _builtin_cache[name]
    if name == "weil":
        g = CompositeGreen(
            CompositeSpec([(1, "log_plus", _X, _ONE)]), name="weil"
        )
    elif name == "zhang_zagier":
        g = CompositeGreen(
            CompositeSpec(
                [
                    (Fraction(1, 2), "log_plus", _X, _ONE),
                    (Fraction(1, 2), "log_plus", IntPoly((-1, 1)), _ONE),
                ]
            ),
            name="zhang_zagier",
        )
    elif name == "hultberg":
        g = CompositeGreen(
            CompositeSpec(
                [
                    (1, "log_plus", IntPoly((1, 2)), _X),
                    (1, "log_abs", _X, _ONE),
                ]
            ),
            name="hultberg",
        )
    elif name == "faltings":
        from .modular import g_hyp

        g = g_hyp()
    else:
        raise UnknownName(f"no builtin Green function named {name!r}")
    _builtin_cache[name] = g
    return g
