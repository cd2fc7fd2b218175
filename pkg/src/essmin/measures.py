"""Probability measures on C and their logarithmic potentials and integrals.

Four measure kinds cover everything downstream:

* DiscreteMeasure: finitely many weighted atoms.
* CircleMeasure: uniform (equilibrium) measure on |z| = R.
* RationalPullbackMeasure: pullback of the uniform unit-circle measure
  under a rational map A/B.  Requires deg A > deg B, or deg A = deg B with
  |lc A| != |lc B|, so the support stays compact.  Its potential has the
  closed form U(z) = (l - log max(|A(z)|, |B(z)|)) / D with D = max degree
  and l = log|lc A| when deg A > deg B, else log max(|lc A|, |lc B|).
* MuPQ: the special pullback A = P^(e+1), B = Q^d for monic irreducible
  P != Q (d = deg P, e = deg Q), supported on the lemniscate
  |P|^(e+1) = |Q|^d, with potential min(-log|P|/d, -log|Q|/(e+1)).

Integration against a pullback measure reduces to the circle average of
rho(theta) = (1/D) * sum of f over the fiber A(w) = exp(2 pi i theta) B(w)
counted with ramification multiplicity.  The engine uses the periodic
trapezoidal rule with node doubling (64 up to 65536 nodes) and a Cauchy
stopping pair; fibers are tracked with warm-started batched solves.
Panels whose fibers collide (overlapping root disks, or matched root
motion above half the separation) are subdivided up to 8 extra levels.
Integrands that are singular on the support are refused.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .intpoly import (
    IntPoly,
    format_poly,
    gcd_q,
    parse_poly,
    resultant,
    squarefree_decomposition,
)
from . import roots as rootsmod

__all__ = [
    "DiscreteMeasure",
    "CircleMeasure",
    "RationalPullbackMeasure",
    "MuPQ",
    "SweetenedMeasure",
    "SingularIntegrand",
    "ToleranceNotMet",
    "potential_mu_pq",
    "integrate_pullback",
    "integrate",
    "log_integral_exact",
    "smith_check",
    "sweeten",
    "potential_discrete",
    "circle_log_kernel",
    "energy",
    "lemniscate",
    "measure_to_json",
    "measure_from_json",
]

_MAX_NODES = 1 << 16
_BASE_NODES = 64
_PANEL_DEPTH = 8
_ADAPT_NODE_CAP = 8192


class SingularIntegrand(RuntimeError):
    """Raised when the integrand is non-finite on the measure's support."""


class ToleranceNotMet(RuntimeError):
    """Quadrature ladder exhausted; carries the best value and estimate."""

    def __init__(self, value, estimate):
        super().__init__(
            f"quadrature did not reach tolerance: value={value!r} estimate={estimate!r}"
        )
        self.value = value
        self.estimate = estimate


class DiscreteMeasure:
    """Finitely many atoms (point, weight >= 0)."""

    kind = "discrete"

    def __init__(self, atoms):
        self.atoms = [(complex(p), float(w)) for p, w in atoms]
        for _, w in self.atoms:
            if w < 0:
                raise ValueError("weights must be nonnegative")

    @property
    def mass(self):
        return math.fsum(w for _, w in self.atoms)

    def require_probability(self, tol=1e-12):
        if abs(self.mass - 1.0) > tol:
            raise ValueError(f"mass {self.mass} is not 1 within {tol}")

    def potential(self, z):
        return potential_discrete(self, z)


class CircleMeasure:
    """Uniform measure on the circle |z| = R."""

    kind = "circle"

    def __init__(self, R):
        self.R = float(R)
        if self.R <= 0:
            raise ValueError("R must be positive")

    def potential(self, z):
        return -circle_log_kernel(self.R, z)


def _float_coeffs(p: IntPoly):
    return np.array([float(c) for c in p.coeffs])


def _abs_poly(fc, z):
    acc = np.full(z.shape, complex(fc[-1]))
    for k in range(len(fc) - 2, -1, -1):
        acc *= z
        acc += fc[k]
    return np.abs(acc)


class RationalPullbackMeasure:
    """Pullback of the uniform unit-circle measure under A/B."""

    kind = "pullback"

    def __init__(self, A: IntPoly, B: IntPoly):
        if not isinstance(A, IntPoly):
            A = IntPoly(A)
        if not isinstance(B, IntPoly):
            B = IntPoly(B)
        if A.is_zero or B.is_zero:
            raise ValueError("A and B must be nonzero")
        if A.degree < B.degree:
            raise ValueError("need deg A >= deg B for compact support")
        if A.degree == B.degree and abs(A.lc) == abs(B.lc):
            raise ValueError("deg A = deg B needs |lc A| != |lc B|")
        if gcd_q(A, B).degree >= 1:
            raise ValueError("A and B must be coprime")
        self.A = A
        self.B = B
        self.degree = max(A.degree, B.degree)
        if A.degree > B.degree:
            self._ell = math.log(abs(A.lc))
        else:
            self._ell = math.log(max(abs(A.lc), abs(B.lc)))
        self._fa = _float_coeffs(A)
        self._fb = _float_coeffs(B)

    def potential(self, z):
        """Closed-form logarithmic potential U(z); +inf only at joint zeros."""
        zz = np.asarray(z, dtype=complex)
        scalar = zz.ndim == 0
        if scalar:
            zz = zz.reshape(1)
        with np.errstate(divide="ignore"):
            top = np.log(np.maximum(_abs_poly(self._fa, zz), _abs_poly(self._fb, zz)))
        out = (self._ell - top) / self.degree
        return float(out[0]) if scalar else out

    def mass(self):
        return 1.0


def lemniscate(P: IntPoly) -> RationalPullbackMeasure:
    """Equilibrium measure of {|P| <= 1} as the pullback with B = 1."""
    return RationalPullbackMeasure(P, IntPoly((1,)))


class MuPQ(RationalPullbackMeasure):
    """Pullback under P^(deg Q + 1) / Q^(deg P), monic irreducible P != Q."""

    kind = "mu_pq"

    def __init__(self, P: IntPoly, Q: IntPoly):
        if not isinstance(P, IntPoly):
            P = IntPoly(P)
        if not isinstance(Q, IntPoly):
            Q = IntPoly(Q)
        if P == Q:
            raise ValueError("P and Q must be distinct")
        for name, p in (("P", P), ("Q", Q)):
            if p.degree < 1 or not p.is_monic:
                raise ValueError(f"{name} must be monic of degree >= 1")
            if not p.is_irreducible_q(d_max=16):
                raise ValueError(f"{name} must be irreducible over Q")
        d, e = P.degree, Q.degree
        super().__init__(P ** (e + 1), Q ** d)
        self.P = P
        self.Q = Q
        self.d = d
        self.e = e
        self._fp = _float_coeffs(P)
        self._fq = _float_coeffs(Q)

    def potential(self, z):
        return potential_mu_pq(self, z)


def potential_mu_pq(m: MuPQ, z):
    """min(-log|P(z)|/d, -log|Q(z)|/(e+1)); finite off zeros of P*Q."""
    zz = np.asarray(z, dtype=complex)
    scalar = zz.ndim == 0
    if scalar:
        zz = zz.reshape(1)
    with np.errstate(divide="ignore"):
        bp = -np.log(_abs_poly(m._fp, zz)) / m.d
        bq = -np.log(_abs_poly(m._fq, zz)) / (m.e + 1)
    out = np.minimum(bp, bq)
    return float(out[0]) if scalar else out


def circle_log_kernel(R, z):
    """Closed form of the circle average of log|z - w|: log max(|z|, R)."""
    R = float(R)
    if R <= 0:
        raise ValueError("R must be positive")
    zz = np.asarray(z, dtype=complex)
    return np.log(np.maximum(np.abs(zz), R)) if zz.ndim else math.log(max(abs(complex(z)), R))


def potential_discrete(m: DiscreteMeasure, z):
    """Mass-normalized potential -(1/mass) sum w log|z - p|; +inf at atoms."""
    mass = m.mass
    if mass <= 0:
        raise ValueError("measure has no mass")
    zz = np.asarray(z, dtype=complex)
    scalar = zz.ndim == 0
    if scalar:
        zz = zz.reshape(1)
    out = np.zeros(zz.shape)
    with np.errstate(divide="ignore"):
        for p, w in m.atoms:
            if w:
                out -= w * np.log(np.abs(zz - p))
    out /= mass
    return float(out[0]) if scalar else out


class SweetenedMeasure:
    """Mixture eta_R * (mu restricted to |z| <= R) + weight * circle R."""

    kind = "sweetened"

    def __init__(self, inner_atoms, circle_weight, R, eta):
        self.discrete = DiscreteMeasure(inner_atoms)
        self.circle_weight = float(circle_weight)
        self.circle = CircleMeasure(R)
        self.R = float(R)
        self.eta = float(eta)

    @property
    def mass(self):
        return self.discrete.mass + self.circle_weight

    def potential(self, z):
        zz = np.asarray(z, dtype=complex)
        scalar = zz.ndim == 0
        if scalar:
            zz = zz.reshape(1)
        out = np.zeros(zz.shape)
        with np.errstate(divide="ignore"):
            for p, w in self.discrete.atoms:
                if w:
                    out -= w * np.log(np.abs(zz - p))
        out -= self.circle_weight * np.log(np.maximum(np.abs(zz), self.R))
        return float(out[0]) if scalar else out


def sweeten(m: DiscreteMeasure, R) -> SweetenedMeasure:
    """Compactly supported surrogate of a probability measure.

    With m_R the mass inside |z| <= R, T_R the log+ moment outside,
    L_R = 2(1 - m_R) log 2 + T_R and eta_R = log R / (log R + L_R), the
    result is eta_R * mu|_{|z|<=R} plus the circle |z| = R carrying weight
    1 - m_R eta_R.  Total mass is exactly 1 by computing the circle weight
    as 1 minus the exact sum of the scaled atom weights.
    """
    R = float(R)
    if R <= 1:
        raise ValueError("R must be > 1")
    m.require_probability()
    inside = [(p, w) for p, w in m.atoms if abs(p) <= R]
    outside = [(p, w) for p, w in m.atoms if abs(p) >= R]
    m_r = math.fsum(w for _, w in inside)
    t_r = math.fsum(w * max(0.0, math.log(abs(p))) for p, w in outside)
    l_r = 2.0 * (1.0 - m_r) * math.log(2.0) + t_r
    logr = math.log(R)
    eta = logr / (logr + l_r)
    scaled = [(p, eta * w) for p, w in inside]
    circle_weight = 1.0 - math.fsum(w for _, w in scaled)
    return SweetenedMeasure(scaled, circle_weight, R, eta)


class _FiberCache:
    """Solved fibers of A - exp(2 pi i theta) B keyed by exact theta."""

    def __init__(self, m: RationalPullbackMeasure):
        self.m = m
        d = max(m.A.degree, m.B.degree)
        self.dim = d
        arow = np.zeros(d + 1, dtype=complex)
        brow = np.zeros(d + 1, dtype=complex)
        arow[: m.A.degree + 1] = m._fa
        brow[: m.B.degree + 1] = m._fb
        self._arow = arow
        self._brow = brow
        self.roots: dict[Fraction, np.ndarray] = {}
        self.minsep: dict[Fraction, float] = {}
        self.overlap: dict[Fraction, bool] = {}
        self.rho: dict[Fraction, float] = {}
        self._chunk = max(1, int(2e6 / max(1, d * d)))

    def _coeff_rows(self, thetas):
        y = np.exp(2j * np.pi * thetas)
        return self._arow[None, :] - y[:, None] * self._brow[None, :]

    def ensure(self, nodes, f):
        """Solve all missing nodes (batched, warm-started) and record rho."""
        missing = [t for t in nodes if t not in self.rho]
        if not missing:
            return
        known = sorted(self.roots)
        known_f = np.array([float(t) for t in known]) if known else None
        for start in range(0, len(missing), self._chunk):
            chunk = missing[start : start + self._chunk]
            tf = np.array([float(t) for t in chunk])
            rows = self._coeff_rows(tf)
            seeds = None
            if known_f is not None and known_f.size:
                pos = np.clip(np.searchsorted(known_f, tf), 0, known_f.size - 1)
                seeds = np.stack([self.roots[known[p]] for p in pos])
            z, rad, conv = rootsmod.solve_many(rows, seeds=seeds)
            if not conv.all():
                idx = np.flatnonzero(~conv)
                z2, rad2, conv2 = rootsmod.solve_many(rows[idx])
                z[idx], rad[idx] = z2, rad2
                if not conv2.all():
                    bad = chunk[int(np.flatnonzero(~conv2)[0])]
                    raise rootsmod.NonConvergence(
                        f"fiber failed at theta={float(bad)}", theta=float(bad)
                    )
            vals = np.asarray(f(z), dtype=float)
            if not np.isfinite(vals).all():
                raise SingularIntegrand(
                    "integrand is not finite on the measure's support"
                )
            rho_vals = vals.mean(axis=1) * (self.dim / self.m.degree)
            if self.dim >= 2:
                diff = np.abs(z[:, :, None] - z[:, None, :])
                rr = rad[:, :, None] + rad[:, None, :]
                ii = np.arange(self.dim)
                diff[:, ii, ii] = np.inf
                overlap = (diff <= rr).any(axis=(1, 2))
                minsep = diff.min(axis=(1, 2))
            else:
                overlap = np.zeros(len(chunk), dtype=bool)
                minsep = np.full(len(chunk), np.inf)
            for i, t in enumerate(chunk):
                self.roots[t] = z[i]
                self.minsep[t] = float(minsep[i])
                self.overlap[t] = bool(overlap[i])
                self.rho[t] = float(rho_vals[i])
            known = sorted(self.roots)
            known_f = np.array([float(t) for t in known])

    def panel_flagged(self, a, b):
        """Collision test: overlapping disks or motion > separation / 2."""
        if self.overlap[a] or self.overlap[b]:
            return True
        if self.dim < 2:
            return False
        za, zb = self.roots[a], self.roots[b]
        motion = np.abs(zb[:, None] - za[None, :]).min(axis=1).max()
        sep = min(self.minsep[a], self.minsep[b])
        return motion > 0.5 * sep


def _wrap(t: Fraction) -> Fraction:
    return t - int(t) if t >= 1 else t


def integrate_pullback(m: RationalPullbackMeasure, f, tol):
    """Integral of f against the pullback measure, with an error estimate.

    f must accept complex numpy arrays and return real values of the same
    shape.  Returns (value, error_estimate) once two successive doubling
    levels agree within tol; raises ToleranceNotMet (carrying the last
    value and estimate) if the ladder is exhausted, SingularIntegrand if f
    is non-finite at a fiber point, and propagates NonConvergence.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not isinstance(m, RationalPullbackMeasure):
        raise TypeError("integrate_pullback needs a RationalPullbackMeasure")
    cache = _FiberCache(m)
    prev = None
    value = None
    estimate = math.inf
    n = _BASE_NODES
    while n <= _MAX_NODES:
        nodes = [Fraction(k, n) for k in range(n)]
        cache.ensure(nodes, f)
        base = math.fsum(cache.rho[t] for t in nodes) / n
        value = base
        if n >= 512:
            value = base + _panel_corrections(cache, nodes, f, tol)
        if prev is not None:
            estimate = abs(value - prev)
            if estimate < tol:
                return value, estimate
        prev = value
        n *= 2
    raise ToleranceNotMet(value, estimate)


def _panel_corrections(cache: _FiberCache, nodes, f, tol):
    """Replace flagged panels by adaptively subdivided trapezoid sums."""
    n = len(nodes)
    h = Fraction(1, n)
    flagged = []
    for k, a in enumerate(nodes):
        b = _wrap(a + h)
        if cache.panel_flagged(a, b):
            flagged.append((a, a + h))
    if not flagged or len(flagged) > n // 4:
        return 0.0
    budget = [_ADAPT_NODE_CAP]
    total = 0.0
    for a, b in flagged:
        coarse = float(b - a) * 0.5 * (cache.rho[a] + cache.rho[_wrap(b)])
        refined = _refine_panel(cache, a, b, _PANEL_DEPTH, f, budget)
        total += refined - coarse
    return total


def _refine_panel(cache: _FiberCache, a, b, depth, f, budget):
    ra, rb = cache.rho[a], cache.rho[_wrap(b)]
    coarse = float(b - a) * 0.5 * (ra + rb)
    if depth == 0 or budget[0] <= 0:
        return coarse
    mid = (a + b) / 2
    budget[0] -= 1
    cache.ensure([_wrap(mid)], f)
    left = _refine_panel(cache, a, mid, depth - 1, f, budget)
    right = _refine_panel(cache, mid, b, depth - 1, f, budget)
    return left + right


def integrate(measure, f, tol=1e-9):
    """Integral of f against any supported measure kind."""
    if isinstance(measure, RationalPullbackMeasure):
        return integrate_pullback(measure, f, tol)
    if isinstance(measure, DiscreteMeasure):
        vals = [w * float(np.asarray(f(np.array([p], dtype=complex)))[0])
                for p, w in measure.atoms]
        return math.fsum(vals), 0.0
    if isinstance(measure, CircleMeasure):
        return _integrate_circle(measure.R, f, tol)
    if isinstance(measure, SweetenedMeasure):
        vd, _ = integrate(measure.discrete, f, tol)
        vc, ec = _integrate_circle(measure.R, f, tol)
        return vd + measure.circle_weight * vc, abs(measure.circle_weight) * ec
    raise TypeError(f"cannot integrate against {type(measure).__name__}")


def _integrate_circle(R, f, tol):
    prev = None
    value = None
    estimate = math.inf
    n = _BASE_NODES
    while n <= _MAX_NODES:
        theta = 2.0 * np.pi * np.arange(n) / n
        vals = np.asarray(f(R * np.exp(1j * theta)), dtype=float)
        if not np.isfinite(vals).all():
            raise SingularIntegrand("integrand is not finite on the circle")
        value = float(vals.mean())
        if prev is not None:
            estimate = abs(value - prev)
            if estimate < tol:
                return value, estimate
        prev = value
        n *= 2
    raise ToleranceNotMet(value, estimate)


def log_integral_exact(m: MuPQ, F: IntPoly):
    """log|lc F| - sum of potentials at the roots of F, multiplicity-exact.

    Uses the squarefree decomposition of F so multiple roots never degrade
    the root solver's accuracy.
    """
    if not isinstance(F, IntPoly):
        F = IntPoly(F)
    if F.is_zero:
        raise ValueError("F must be nonzero")
    total = math.log(abs(F.lc))
    for factor, mult in squarefree_decomposition(F):
        if factor.degree == 0:
            continue
        rs = rootsmod.all_roots(factor)
        if not rs.converged:
            raise rootsmod.NonConvergence("root solve failed in log integral")
        for root in rs:
            u = potential_mu_pq(m, root.value)
            total -= mult * root.multiplicity * u
    return total


def smith_check(m: MuPQ, F: IntPoly):
    """(margin, resultant floor) for the integer polynomial F.

    margin = log|lc F| - sum of potentials at roots of F; the floor is
    max(log|Res(P,F)|/d, log|Res(Q,F)|/(e+1)) over the branches with
    nonzero resultant.  Both are nonnegative for every integer F.
    """
    if not isinstance(F, IntPoly):
        F = IntPoly(F)
    if F.is_zero:
        raise ValueError("F must be nonzero")
    margin = log_integral_exact(m, F)
    floor = -math.inf
    rp = resultant(m.P, F)
    if rp != 0:
        floor = max(floor, math.log(abs(rp)) / m.d)
    rq = resultant(m.Q, F)
    if rq != 0:
        floor = max(floor, math.log(abs(rq)) / (m.e + 1))
    return margin, floor


def energy(m: RationalPullbackMeasure, tol=1e-9):
    """Logarithmic energy integral of the closed-form potential."""
    value, _ = integrate_pullback(m, m.potential, tol)
    return value


def measure_to_json(m) -> str:
    if isinstance(m, MuPQ):
        obj = {"kind": "mu_pq", "P": format_poly(m.P), "Q": format_poly(m.Q)}
    elif isinstance(m, RationalPullbackMeasure):
        if m.B.degree == 0 and m.B.coeffs == (1,):
            obj = {"kind": "lemniscate", "P": format_poly(m.A)}
        else:
            obj = {"kind": "pullback", "A": format_poly(m.A), "B": format_poly(m.B)}
    elif isinstance(m, CircleMeasure):
        obj = {"kind": "circle", "R": m.R}
    elif isinstance(m, DiscreteMeasure):
        obj = {
            "kind": "discrete",
            "atoms": [[p.real, p.imag, w] for p, w in m.atoms],
        }
    else:
        raise TypeError(f"cannot serialize {type(m).__name__}")
    return json.dumps(obj, sort_keys=True)


def measure_from_json(text: str):
    obj = json.loads(text)
    kind = obj["kind"]
    if kind == "mu_pq":
        return MuPQ(parse_poly(obj["P"]), parse_poly(obj["Q"]))
    if kind == "lemniscate":
        return lemniscate(parse_poly(obj["P"]))
    if kind == "pullback":
        return RationalPullbackMeasure(parse_poly(obj["A"]), parse_poly(obj["B"]))
    if kind == "circle":
        return CircleMeasure(obj["R"])
    if kind == "discrete":
        return DiscreteMeasure([(complex(re, im), w) for re, im, w in obj["atoms"]])
    raise ValueError(f"unknown measure kind {kind!r}")
