"""Exact integer-coefficient polynomials.

Coefficients are arbitrary-precision Python ints stored ascending, so
``coeffs[k]`` multiplies ``x**k``.  The zero polynomial is the empty tuple
and has degree -1; every nonzero polynomial keeps a nonzero leading
coefficient.  The module provides evaluation, exact arithmetic, contents,
resultants by the subresultant remainder sequence, irreducibility over Q
up to degree ``D_MAX``, a fixed effective enumeration, and cyclotomic
polynomials.

Irreducibility testing runs, in order: a squarefree check (gcd with the
derivative), rational-root criteria that settle degrees 2 and 3, a
factor-degree prefilter from factorization patterns modulo several small
primes, and finally Cantor-Zassenhaus factorization modulo one prime
exceeding twice the Mignotte coefficient bound, so that candidate factor
subsets lift directly from a single residue system.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from fractions import Fraction

__all__ = [
    "IntPoly",
    "X",
    "parse_poly",
    "enumerate_polys",
    "cyclotomic",
    "DegreeTooLarge",
    "D_MAX",
]

D_MAX = 8


class DegreeTooLarge(ValueError):
    """Irreducibility requested beyond the supported degree bound."""


def _trim(coeffs):
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(int(v) for v in c)


class IntPoly:
    """Immutable integer polynomial with exact operations."""

    __slots__ = ("coeffs", "_irred")

    def __init__(self, coeffs=(), irreducible=None):
        object.__setattr__(self, "coeffs", _trim(coeffs))
        object.__setattr__(self, "_irred", irreducible)

    def __setattr__(self, name, value):
        raise AttributeError("IntPoly is immutable")

    # -- basic structure ------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lc(self) -> int:
        if self.is_zero:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    @property
    def height(self) -> int:
        return max((abs(c) for c in self.coeffs), default=0)

    @property
    def content(self) -> int:
        return math.gcd(*self.coeffs) if self.coeffs else 0

    @property
    def is_primitive(self) -> bool:
        return self.content == 1

    @property
    def is_monic(self) -> bool:
        return not self.is_zero and self.lc == 1

    def primitive_part(self) -> "IntPoly":
        if self.is_zero:
            return self
        c = self.content
        if self.lc < 0:
            c = -c
        return IntPoly(v // c for v in self.coeffs)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0] * (n - len(other.coeffs))
        return IntPoly(x + y for x, y in zip(a, b))

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __neg__(self):
        return IntPoly(-c for c in self.coeffs)

    def __mul__(self, other):
        other = _coerce(other)
        if self.is_zero or other.is_zero:
            return IntPoly()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return IntPoly(out)

    __rmul__ = __mul__
    __radd__ = __add__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = IntPoly((1,))
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self) -> "IntPoly":
        return IntPoly(k * c for k, c in enumerate(self.coeffs) if k >= 1)

    def shift_mul_x(self, k: int) -> "IntPoly":
        return IntPoly((0,) * k + self.coeffs)

    def divexact(self, other: "IntPoly") -> "IntPoly":
        """Exact division in Z[x]; raises ValueError when not exact."""
        q = _try_divexact(self, other)
        if q is None:
            raise ValueError(f"{other} does not divide {self} exactly")
        return q

    # -- evaluation -------------------------------------------------------

    def eval(self, z):
        """Horner evaluation; works for int, Fraction, complex, ndarray."""
        if self.is_zero:
            return 0 * z
        acc = self.coeffs[-1] + 0 * z
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        return acc

    def eval_complex(self, z) -> complex:
        return self.eval(z)

    def __call__(self, z):
        return self.eval(z)

    # -- identity ----------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, IntPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"IntPoly('{format_poly(self)}')"

    # -- number theory ------------------------------------------------------

    def is_irreducible_q(self, d_max: int | None = None) -> bool:
        """Irreducibility in Q[x] (content-blind), degrees 1..d_max."""
        if self.degree < 1:
            raise ValueError("irreducibility needs degree >= 1")
        cap = D_MAX if d_max is None else int(d_max)
        if self.degree > cap:
            raise DegreeTooLarge(f"degree {self.degree} exceeds {cap}")
        if self._irred is None:
            object.__setattr__(self, "_irred", _irreducible(self.primitive_part()))
        return self._irred


def _coerce(v) -> IntPoly:
    if isinstance(v, IntPoly):
        return v
    if isinstance(v, int):
        return IntPoly((v,))
    raise TypeError(f"cannot treat {v!r} as IntPoly")


X = IntPoly((0, 1))


def _try_divexact(a: IntPoly, b: IntPoly):
    if b.is_zero:
        raise ZeroDivisionError("division by the zero polynomial")
    if a.is_zero:
        return IntPoly()
    if a.degree < b.degree:
        return None
    rem = list(a.coeffs)
    quot = [0] * (a.degree - b.degree + 1)
    blc = b.lc
    for k in range(a.degree - b.degree, -1, -1):
        head = rem[k + b.degree]
        if head % blc != 0:
            return None
        q = head // blc
        quot[k] = q
        if q:
            for j, c in enumerate(b.coeffs):
                rem[k + j] -= q * c
    if any(rem[: b.degree]):
        return None
    return IntPoly(quot)


# -- pseudo-division and remainder sequences --------------------------------


def _prem(a: IntPoly, b: IntPoly) -> IntPoly:
    """Pseudo-remainder: lc(b)^(deg a - deg b + 1) * a = q*b + rem."""
    d = b.lc
    e = a.degree - b.degree + 1
    r = a
    while not r.is_zero and r.degree >= b.degree:
        s = IntPoly((0,) * (r.degree - b.degree) + (r.lc,))
        r = d * r - s * b
        e -= 1
    if e > 0:
        r = (d ** e) * r
    return r


def gcd_q(a: IntPoly, b: IntPoly) -> IntPoly:
    """Primitive gcd in Z[x] of the Q[x]-gcd, positive leading coefficient."""
    if a.is_zero:
        return b.primitive_part()
    if b.is_zero:
        return a.primitive_part()
    a = a.primitive_part()
    b = b.primitive_part()
    if a.degree < b.degree:
        a, b = b, a
    while not b.is_zero:
        r = _prem(a, b).primitive_part()
        a, b = b, r
    return a.primitive_part()


def squarefree_decomposition(p: IntPoly):
    """Pairwise-coprime squarefree primitive factors with multiplicities.

    Returns [(p_i, m_i)] with prod p_i^(m_i) equal to p up to a nonzero
    rational constant, each p_i squarefree with positive leading
    coefficient.  A constant input returns [].
    """
    if p.is_zero:
        raise ValueError("zero polynomial")
    f = p.primitive_part()
    if f.degree == 0:
        return []
    chain = [f]
    while chain[-1].degree > 0:
        chain.append(gcd_q(chain[-1], chain[-1].derivative()))
    # s[k] = product of the factors with multiplicity > k
    s = [chain[k].divexact(chain[k + 1]) for k in range(len(chain) - 1)]
    out = []
    for k in range(len(s)):
        factor = s[k].divexact(s[k + 1]) if k + 1 < len(s) else s[k]
        if factor.degree > 0:
            out.append((factor, k + 1))
    return out


def resultant(p: IntPoly, q: IntPoly) -> int:
    """Res(p, q) = lc(p)^deg(q) * prod of q over the roots of p.

    Exact subresultant remainder sequence on integers.
    """
    if p.is_zero or q.is_zero:
        raise ValueError("resultant needs nonzero polynomials")
    if p.degree == 0:
        return p.coeffs[0] ** q.degree
    if q.degree == 0:
        return q.coeffs[0] ** p.degree
    sign = 1
    a, b = p, q
    if a.degree < b.degree:
        if (a.degree & 1) and (b.degree & 1):
            sign = -sign
        a, b = b, a
    ca, cb = abs(a.content), abs(b.content)
    t = (ca ** b.degree) * (cb ** a.degree)
    a = IntPoly(v // ca for v in a.coeffs)
    b = IntPoly(v // cb for v in b.coeffs)
    g = 1
    h = 1
    while True:
        delta = a.degree - b.degree
        if (a.degree & 1) and (b.degree & 1):
            sign = -sign
        r = _prem(a, b)
        a = b
        denom = g * h ** delta
        b = IntPoly(v // denom for v in r.coeffs)
        g = a.lc
        if delta > 0:
            num = g ** delta
            den = h ** (delta - 1)
            h = num // den
        if b.is_zero:
            return 0
        if b.degree == 0:
            break
    res = (b.coeffs[0] ** a.degree) // (h ** (a.degree - 1)) if a.degree >= 1 else 1
    return sign * t * res


# -- irreducibility over Q ----------------------------------------------------


def _rational_roots_exist(p: IntPoly) -> bool:
    c0, cd = p.coeffs[0], p.lc
    if c0 == 0:
        return True
    for num in _divisors(abs(c0)):
        for den in _divisors(abs(cd)):
            if math.gcd(num, den) != 1:
                continue
            for s in (num, -num):
                # exact evaluation of den^deg * p(s/den)
                acc = 0
                for k, c in enumerate(p.coeffs):
                    acc += c * s ** k * den ** (p.degree - k)
                if acc == 0:
                    return True
    return False


def _divisors(n: int):
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _next_prime(n: int) -> int:
    n += 1
    if n <= 2:
        return 2
    if n % 2 == 0:
        n += 1
    while not _is_prime(n):
        n += 2
    return n


# Dense mod-p polynomials as int lists, ascending, trimmed.


def _pm_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pm_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _pm_trim(out)


def _pm_divmod(a, b, p):
    binv = pow(b[-1], p - 2, p)
    a = a[:]
    q = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b) and a:
        c = a[-1] * binv % p
        k = len(a) - len(b)
        q[k] = c
        for j, y in enumerate(b):
            a[k + j] = (a[k + j] - c * y) % p
        _pm_trim(a)
    return _pm_trim(q), a


def _pm_gcd(a, b, p):
    a, b = a[:], b[:]
    while b:
        _, r = _pm_divmod(a, b, p)
        a, b = b, r
    if a:
        inv = pow(a[-1], p - 2, p)
        a = [c * inv % p for c in a]
    return a


def _pm_powmod(base, e, f, p):
    result = [1]
    base = _pm_divmod(base, f, p)[1]
    while e:
        if e & 1:
            result = _pm_divmod(_pm_mul(result, base, p), f, p)[1]
        base = _pm_divmod(_pm_mul(base, base, p), f, p)[1]
        e >>= 1
    return result


def _pm_deriv(a, p):
    return _pm_trim([k * c % p for k, c in enumerate(a)][1:])


def _ddf(f, p):
    """Distinct-degree split of monic squarefree f mod p: list of (factor, k)."""
    out = []
    h = [0, 1]
    k = 0
    f = f[:]
    while len(f) - 1 >= 2 * (k + 1):
        k += 1
        h = _pm_powmod(h, p, f, p)
        hx = h[:]
        if len(hx) < 2:
            hx += [0] * (2 - len(hx))
        hx[1] = (hx[1] - 1) % p
        g = _pm_gcd(_pm_trim(hx), f, p)
        if len(g) > 1:
            out.append((g, k))
            f = _pm_divmod(f, g, p)[0]
            h = _pm_divmod(h, f, p)[1]
    if len(f) > 1:
        out.append((f, len(f) - 1))
    return out


def _edf(f, k, p, rng):
    """Cantor-Zassenhaus equal-degree split of f (all factors of degree k)."""
    n = len(f) - 1
    if n == k:
        return [f]
    exp = (p ** k - 1) // 2
    while True:
        r = [rng.randrange(p) for _ in range(n)] + [1]
        r = _pm_trim(r)
        g = _pm_gcd(r, f, p)
        if len(g) > 1 and len(g) <= n:
            h = g
        else:
            w = _pm_powmod(r, exp, f, p)
            w = w[:]
            if not w:
                w = [0]
            w[0] = (w[0] - 1) % p
            h = _pm_gcd(_pm_trim(w), f, p)
        if 1 < len(h) <= n:
            left = _edf(h, k, p, rng)
            right = _edf(_pm_divmod(f, h, p)[0], k, p, rng)
            return left + right


def _factor_degrees_mod(f: IntPoly, p: int):
    """Degree multiset of the irreducible factors of f mod p, or None."""
    if f.lc % p == 0:
        return None
    fm = _pm_trim([c % p for c in f.coeffs])
    inv = pow(fm[-1], p - 2, p)
    fm = [c * inv % p for c in fm]
    if len(_pm_gcd(fm, _pm_deriv(fm, p), p)) != 1:
        return None
    return sorted(k for g, k in _ddf(fm, p) for _ in range((len(g) - 1) // k))


def _subset_sums(degrees):
    sums = {0}
    for d in degrees:
        sums |= {s + d for s in sums}
    return sums


_SMALL_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def _irreducible(p: IntPoly) -> bool:
    n = p.degree
    if n == 1:
        return True
    if p.coeffs[0] == 0:
        return False
    d = gcd_q(p, p.derivative())
    if d.degree >= 1:
        return False
    if _rational_roots_exist(p):
        return False
    if n <= 3:
        return True
    # Factor-degree prefilter across several small primes.
    candidates = set(range(1, n))
    used = 0
    for q in _SMALL_PRIMES:
        ds = _factor_degrees_mod(p, q)
        if ds is None:
            continue
        candidates &= _subset_sums(ds)
        used += 1
        if not (candidates & set(range(1, n))):
            return True
        if used >= 5:
            break
    candidates = {d for d in candidates if 1 <= d <= n // 2}
    # degree-1 candidates are already excluded by the rational root test
    candidates.discard(1)
    if not candidates:
        return True
    # One big prime beyond twice the Mignotte factor-coefficient bound.
    norm2 = math.isqrt(sum(c * c for c in p.coeffs)) + 1
    bound = 2 * (2 ** n) * norm2 * abs(p.lc)
    q = _next_prime(max(2 * bound, 101))
    while p.lc % q == 0 or _factor_degrees_mod(p, q) is None:
        q = _next_prime(q)
    fm = _pm_trim([c % q for c in p.coeffs])
    inv = pow(fm[-1], q - 2, q)
    fm = [c * inv % q for c in fm]
    rng = random.Random(hash((q,) + p.coeffs) & 0xFFFFFFFF)
    factors = []
    for g, k in _ddf(fm, q):
        factors.extend(_edf(g, k, q, rng))
    r = len(factors)
    if r == 1:
        return True
    lc = p.lc % q
    for mask in range(1, 1 << r):
        if mask == (1 << r) - 1:
            continue
        degs = sum(len(factors[i]) - 1 for i in range(r) if mask >> i & 1)
        if degs not in candidates:
            continue
        cand = [lc]
        for i in range(r):
            if mask >> i & 1:
                cand = _pm_mul(cand, factors[i], q)
        lifted = IntPoly(c - q if c > q // 2 else c for c in cand)
        if lifted.is_zero or lifted.degree < 1:
            continue
        gp = lifted.primitive_part()
        if _try_divexact(p, gp) is not None:
            return False
    return True


# -- enumeration ----------------------------------------------------------------


def enumerate_polys(max_degree: int, max_height: int, filt: str = "any"):
    """Deterministic duplicate-free stream ordered by (degree, height, lex).

    Height of a polynomial is max |coefficient|; within a (degree, height)
    block the ascending coefficient tuples run in lexicographic order.
    Filters: ``any`` (nonzero leading coefficient), ``primitive_irreducible``
    (content 1, irreducible over Q, sign-normalized to a positive leading
    coefficient so associates appear once), ``monic_irreducible``.
    """
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    if filt not in ("any", "primitive_irreducible", "monic_irreducible"):
        raise ValueError(f"unknown filter {filt!r}")
    for deg in range(1, max_degree + 1):
        for h in range(1, max_height + 1):
            rng = range(-h, h + 1)
            if filt == "monic_irreducible":
                for tail in itertools.product(rng, repeat=deg):
                    if h > 1 and max(abs(c) for c in tail) != h:
                        continue
                    p = IntPoly(tail + (1,))
                    if p.degree == deg and p.is_irreducible_q():
                        yield p
            else:
                for tup in itertools.product(rng, repeat=deg + 1):
                    if tup[-1] == 0 or max(abs(c) for c in tup) != h:
                        continue
                    p = IntPoly(tup)
                    if filt == "any":
                        yield p
                    elif tup[-1] > 0 and p.is_primitive and p.is_irreducible_q():
                        yield p


# -- cyclotomic polynomials -------------------------------------------------------


_CYCLO_CACHE: dict[int, IntPoly] = {}


def cyclotomic(n: int) -> IntPoly:
    """n-th cyclotomic polynomial, exact, flagged irreducible."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n in _CYCLO_CACHE:
        return _CYCLO_CACHE[n]
    num = IntPoly((-1,) + (0,) * (n - 1) + (1,))
    for d in range(1, n):
        if n % d == 0:
            num = num.divexact(cyclotomic(d))
    result = IntPoly(num.coeffs, irreducible=True)
    _CYCLO_CACHE[n] = result
    return result


# -- text format --------------------------------------------------------------------


_TERM_RE = re.compile(
    r"([+-]?)\s*(\d+)?\s*\*?\s*(x)?\s*(?:\^|\*\*)?\s*(\d+)?"
)


def parse_poly(text: str) -> IntPoly:
    """Parse 'x^2 - 2' style polynomial text."""
    s = text.strip().replace("**", "^")
    if not s:
        raise ValueError("empty polynomial text")
    pos = 0
    coeffs: dict[int, int] = {}
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial text {text!r} at {s[pos:]!r}")
        sign, num, var, exp = m.groups()
        if num is None and var is None:
            raise ValueError(f"cannot parse polynomial text {text!r} at {s[pos:]!r}")
        c = int(num) if num is not None else 1
        if sign == "-":
            c = -c
        if var is None:
            k = 0
            if exp is not None:
                raise ValueError(f"exponent without variable in {text!r}")
        else:
            k = int(exp) if exp is not None else 1
        coeffs[k] = coeffs.get(k, 0) + c
        pos = m.end()
        while pos < len(s) and s[pos].isspace():
            pos += 1
    if not coeffs:
        raise ValueError(f"cannot parse polynomial text {text!r}")
    deg = max(coeffs)
    return IntPoly(tuple(coeffs.get(k, 0) for k in range(deg + 1)))


def format_poly(p: IntPoly) -> str:
    """Canonical text form, descending powers, 'x^2 - x - 1' style."""
    if p.is_zero:
        return "0"
    parts = []
    for k in range(p.degree, -1, -1):
        c = p.coeffs[k]
        if c == 0:
            continue
        mag = abs(c)
        if k == 0:
            body = str(mag)
        else:
            xs = "x" if k == 1 else f"x^{k}"
            body = xs if mag == 1 else f"{mag}{xs}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(parts)


def poly_to_json(p: IntPoly) -> list[str]:
    return [str(c) for c in p.coeffs]


def poly_from_json(arr) -> IntPoly:
    return IntPoly(int(c) for c in arr)


def eval_complex(p: IntPoly, z):
    """Module-level alias for IntPoly.eval_complex."""
    return p.eval_complex(z)


def is_irreducible_q(p: IntPoly) -> bool:
    """Module-level alias for IntPoly.is_irreducible_q."""
    return p.is_irreducible_q()
