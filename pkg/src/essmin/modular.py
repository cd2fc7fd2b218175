"""The hyperbolic Green function on the j-line.

g_hyp(z) = -log ||Delta(tau_z)||_Pet where j(tau_z) = z and the Petersson
norm of a weight-12 form is ||f||(tau) = |f(tau)| (4 pi Im tau)^6.  The
Faltings height of an elliptic curve with j-invariant alpha equals
Ht_{g_hyp}(alpha)/12 up to normalization, so certified work on g_hyp
transfers to the Faltings height.

Everything here is numerical q-series evaluation: Eisenstein series E4, E6,
the discriminant product Delta = q prod (1-q^n)^24, Newton inversion of j,
and reduction to the standard fundamental domain.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .greens import GreenFunction
from .roots import NonConvergence

__all__ = [
    "NotReduced",
    "UpperHalfPoint",
    "delta_pet",
    "dj_dtau",
    "g_hyp",
    "inverse_j",
    "j_value",
    "reduce_tau",
]


class NotReduced(ValueError):
    pass


class UpperHalfPoint:
    """A point of the upper half-plane, optionally fundamental-domain reduced."""

    __slots__ = ("tau", "reduced")

    def __init__(self, tau: complex, reduced: bool = False):
        tau = complex(tau)
        if not tau.imag > 0:
            raise ValueError("tau must have positive imaginary part")
        if reduced:
            if abs(tau.real) > 0.5 + 1e-12 or abs(tau) < 1 - 1e-12:
                raise ValueError("point marked reduced lies outside the domain")
        self.tau = tau
        self.reduced = bool(reduced)

    def __repr__(self):
        return f"UpperHalfPoint({self.tau!r}, reduced={self.reduced})"


def reduce_tau(tau: complex) -> UpperHalfPoint:
    """Translate/invert into |Re| <= 1/2, |tau| >= 1."""
    t = complex(tau)
    if not t.imag > 0:
        raise ValueError("tau must have positive imaginary part")
    for _ in range(10000):
        t = complex(t.real - round(t.real), t.imag)
        a = abs(t)
        if a >= 1 - 1e-15:
            break
        t = -1 / t
    else:
        raise NonConvergence("fundamental domain reduction did not terminate")
    # boundary normalization: prefer Re >= 0 representative on |tau| = 1
    if abs(abs(t) - 1) <= 1e-15 and t.real < 0:
        t = -1 / t
        t = complex(t.real - round(t.real), t.imag)
    return UpperHalfPoint(t, reduced=True)


def _tau_of(x) -> complex:
    return x.tau if isinstance(x, UpperHalfPoint) else complex(x)


_Q_TINY = 1e-18


def _sigma(k: int, n: int) -> int:
    return sum(d**k for d in range(1, n + 1) if n % d == 0)


_SIG3 = [_sigma(3, n) for n in range(1, 120)]
_SIG5 = [_sigma(5, n) for n in range(1, 120)]


def _eisenstein(q: complex, weights, factor: float) -> complex:
    acc = 1.0 + 0j
    qn = 1.0 + 0j
    for s in weights:
        qn *= q
        term = factor * s * qn
        acc += term
        if abs(term) < _Q_TINY * max(1.0, abs(acc)):
            break
    return acc


def _e4(q: complex) -> complex:
    return _eisenstein(q, _SIG3, 240.0)


def _e6(q: complex) -> complex:
    return _eisenstein(q, _SIG5, -504.0)


def _delta_product(q: complex, cutoff: float = 1e-16) -> complex:
    """q * prod_{n>=1} (1 - q^n)^24, truncated once |q|^n < cutoff."""
    prod = 1.0 + 0j
    qn = 1.0 + 0j
    aq = abs(q)
    if aq >= 1:
        raise ValueError("|q| must be < 1")
    n = 0
    while True:
        n += 1
        qn *= q
        if abs(qn) < cutoff:
            break
        prod *= (1 - qn) ** 24
        if n > 200000:
            break
    return q * prod


def j_value(tau) -> complex:
    """j(tau) by q-series, accurate to ~1e-13 relative for Im tau >= 1/2."""
    uhp = tau if isinstance(tau, UpperHalfPoint) else UpperHalfPoint(complex(tau))
    t = uhp.tau
    if t.imag < 0.5 - 1e-12 and not uhp.reduced:
        raise NotReduced(
            f"Im tau = {t.imag} too small; reduce to the fundamental domain first"
        )
    q = cmath.exp(2j * cmath.pi * t)
    return _e4(q) ** 3 / _delta_product(q)


def dj_dtau(tau) -> complex:
    """Derivative of j: dj/dtau = -2 pi i E4^2 E6 / Delta."""
    t = _tau_of(tau)
    q = cmath.exp(2j * cmath.pi * t)
    return -2j * cmath.pi * _e4(q) ** 2 * _e6(q) / _delta_product(q)


def delta_pet(tau) -> float:
    """Petersson norm |Delta(tau)| (4 pi Im tau)^6; modular invariant."""
    t = _tau_of(tau)
    if not t.imag > 0:
        raise ValueError("tau must have positive imaginary part")
    q = cmath.exp(2j * cmath.pi * t)
    return abs(_delta_product(q)) * (4 * math.pi * t.imag) ** 6


_ZETA6 = complex(0.5, math.sqrt(3) / 2)

# j(tau) ~ c3 (tau - zeta6)^3 near the order-3 corner and
# j(tau) - 1728 ~ c2 (tau - i)^2 near the order-2 corner
_C3 = None
_C2 = None


def _corner_coeffs():
    global _C3, _C2
    if _C3 is None:
        h = 1e-3
        _C3 = j_value(UpperHalfPoint(_ZETA6 + h * 1j * _ZETA6, reduced=True)) / (
            (h * 1j * _ZETA6) ** 3
        )
        _C2 = (j_value(UpperHalfPoint(1j + h * 1j, reduced=True)) - 1728.0) / (
            (h * 1j) ** 2
        )
    return _C3, _C2


def _seed_grid():
    taus = []
    for y in (0.87, 0.95, 1.05, 1.2, 1.4, 1.7, 2.1, 2.6):
        for k in range(-20, 21):
            x = k / 41.0
            t = complex(x, y)
            if abs(t) >= 1.0:
                taus.append(t)
    return taus


_GRID = None


def _grid_values():
    global _GRID
    if _GRID is None:
        taus = _seed_grid()
        _GRID = [(t, j_value(UpperHalfPoint(t, reduced=True))) for t in taus]
    return _GRID


def _newton(z: complex, tau0: complex, iters: int = 60):
    t = tau0
    tol = 1e-11 * (1.0 + abs(z))
    for _ in range(iters):
        # keep |q| <= exp(-2 pi / 5) so the truncated series stay accurate
        if t.imag < 0.2:
            t = complex(t.real, 0.2)
        r = _j_unchecked(t) - z
        if abs(r) <= tol:
            return t, abs(r)
        d = dj_dtau(t)
        if d == 0:
            break
        step = r / d
        # damp huge steps; j is extremely steep for small Im tau
        sa = abs(step)
        if sa > 0.5:
            step *= 0.5 / sa
        t = t - step
    jt = _j_unchecked(t)
    return t, abs(jt - z)


def _j_unchecked(t: complex) -> complex:
    q = cmath.exp(2j * cmath.pi * t)
    return _e4(q) ** 3 / _delta_product(q)


def inverse_j(z) -> UpperHalfPoint:
    """The fundamental-domain point tau_z with j(tau_z) = z.

    Residual |j(tau) - z| <= 1e-9 (1 + |z|); NonConvergence otherwise.
    """
    z = complex(z)
    tol = 1e-9 * (1.0 + abs(z))
    if z == 0:
        return UpperHalfPoint(_ZETA6, reduced=True)
    if z == 1728:
        return UpperHalfPoint(1j, reduced=True)
    c3, c2 = _corner_coeffs()
    seeds = []
    if abs(z) >= 2400.0:
        # j ~ 1/q + 744: branch-correct logarithm seed, q0 = exp(2 pi i tau0)
        q0 = 1.0 / (z - 744.0)
        seeds.append(cmath.log(q0) / (2j * cmath.pi))
    if abs(z) < 60.0:
        w = (z / c3) ** (1.0 / 3.0)
        for rot in (1.0, cmath.exp(2j * cmath.pi / 3), cmath.exp(-2j * cmath.pi / 3)):
            seeds.append(_ZETA6 + w * rot)
    if abs(z - 1728.0) < 900.0:
        w = cmath.sqrt((z - 1728.0) / c2)
        seeds.extend([1j + w, 1j - w])
    grid = sorted(_grid_values(), key=lambda tv: abs(tv[1] - z))
    seeds.extend(t for t, _ in grid[:4])
    best = None
    for s in seeds:
        if not s.imag > 0:
            continue
        t, res = _newton(z, s)
        if best is None or res < best[1]:
            best = (t, res)
        if res <= tol:
            break
    if best is None or best[1] > tol:
        # subdivision fallback: refine around the best grid nodes
        for t0, _ in grid[:6]:
            for dx in np.linspace(-0.05, 0.05, 5):
                for dy in np.linspace(-0.05, 0.05, 5):
                    s = t0 + complex(dx, dy)
                    if s.imag <= 0.2:
                        continue
                    t, res = _newton(z, s)
                    if best is None or res < best[1]:
                        best = (t, res)
                    if res <= tol:
                        break
                if best[1] <= tol:
                    break
            if best[1] <= tol:
                break
    if best is None or best[1] > tol:
        raise NonConvergence(f"inverse_j failed at z = {z!r} (residual {best and best[1]})")
    red = reduce_tau(best[0])
    # reduction can move the point; re-polish once in the domain
    if abs(_j_unchecked(red.tau) - z) > tol:
        t, res = _newton(z, red.tau)
        if res > tol:
            raise NonConvergence(f"inverse_j lost accuracy reducing z = {z!r}")
        return reduce_tau(t)
    return red


class _HyperbolicGreen(GreenFunction):
    """-log ||Delta(tau_z)||_Pet as a Green function of the variable z = j(tau)."""

    name = "faltings"
    conjugation_invariant = True
    has_enclosure = False

    def _eval_one(self, z: complex) -> float:
        z = complex(z)
        if z.imag < 0:
            z = z.conjugate()
        return -math.log(delta_pet(inverse_j(z)))

    def eval(self, z):
        zz = np.asarray(z, dtype=complex)
        if zz.ndim == 0:
            return self._eval_one(complex(zz))
        out = np.empty(zz.shape, dtype=float)
        flat = zz.ravel()
        res = out.ravel()
        for k in range(flat.size):
            res[k] = self._eval_one(complex(flat[k]))
        return out

    def _derive_tail(self, n: int) -> float:
        # g_hyp(z) = log|z| - 6 log log|z| + O(1); the O(1) band is
        # validated empirically by the base-class boundary sampling
        for j in range(4, 1020):
            r = 2.0**j
            lr = math.log(r)
            band = 6.0 * math.log(lr) + 12.0
            if band <= lr / n:
                return r
        raise ValueError("tail radius search exhausted")


_g_cache = None


def g_hyp() -> GreenFunction:
    """The hyperbolic/Faltings Green function (no interval enclosure)."""
    global _g_cache
    if _g_cache is None:
        _g_cache = _HyperbolicGreen()
    return _g_cache
