"""Outward-rounded interval arithmetic on axis-aligned boxes in the complex plane.

A batch of n boxes is held as four float64 arrays (xlo, xhi, ylo, yhi).
Every arithmetic result is widened by one ulp in each direction, so the
returned ranges remain valid enclosures under binary64 round-off.  Integer
polynomial coefficients are converted to float with the same two-sided
widening.  All helpers accept scalars or same-shaped arrays and return
arrays; NaNs produced by overflow are replaced by infinities of the safe
sign.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Box",
    "iv_add",
    "iv_mul",
    "iv_sub",
    "iv_abs_poly",
    "iv_log",
    "iv_scale",
    "iv_max",
]


def _down(a):
    return np.nextafter(a, -np.inf)


def _up(a):
    return np.nextafter(a, np.inf)


def _sanitize(lo, hi):
    lo = np.where(np.isnan(lo), -np.inf, lo)
    hi = np.where(np.isnan(hi), np.inf, hi)
    return lo, hi


def iv_add(alo, ahi, blo, bhi):
    return _sanitize(_down(alo + blo), _up(ahi + bhi))


def iv_sub(alo, ahi, blo, bhi):
    return _sanitize(_down(alo - bhi), _up(ahi - blo))


def iv_mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _sanitize(_down(lo), _up(hi))


def iv_scale(lo, hi, c: float):
    """Multiply an interval by an exact float scalar of either sign."""
    if c >= 0.0:
        return _sanitize(_down(lo * c), _up(hi * c))
    return _sanitize(_down(hi * c), _up(lo * c))


def iv_max(alo, ahi, blo, bhi):
    return np.maximum(alo, blo), np.maximum(ahi, bhi)


def _iv_sq(lo, hi):
    # Square of an interval that may straddle zero.
    a = lo * lo
    b = hi * hi
    big = np.maximum(a, b)
    small = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, np.minimum(a, b))
    return _sanitize(_down(small), _up(big))


def _coeff_interval(c: int):
    f = float(c)
    return np.nextafter(f, -np.inf) if f != c else f, np.nextafter(f, np.inf) if f != c else f


class Box:
    """Batch of axis-aligned rectangles [xlo,xhi] x [ylo,yhi] in C."""

    __slots__ = ("xlo", "xhi", "ylo", "yhi")

    def __init__(self, xlo, xhi, ylo, yhi):
        self.xlo = np.atleast_1d(np.asarray(xlo, dtype=float))
        self.xhi = np.atleast_1d(np.asarray(xhi, dtype=float))
        self.ylo = np.atleast_1d(np.asarray(ylo, dtype=float))
        self.yhi = np.atleast_1d(np.asarray(yhi, dtype=float))

    def __len__(self):
        return self.xlo.shape[0]

    @property
    def centers(self):
        return 0.5 * (self.xlo + self.xhi) + 1j * 0.5 * (self.ylo + self.yhi)

    @property
    def widths(self):
        return np.maximum(self.xhi - self.xlo, self.yhi - self.ylo)

    def split(self) -> "Box":
        """Bisect every box along its wider axis; children interleaved."""
        wx = self.xhi - self.xlo
        wy = self.yhi - self.ylo
        xmid = 0.5 * (self.xlo + self.xhi)
        ymid = 0.5 * (self.ylo + self.yhi)
        splitx = wx >= wy
        n = len(self)
        xlo = np.empty(2 * n)
        xhi = np.empty(2 * n)
        ylo = np.empty(2 * n)
        yhi = np.empty(2 * n)
        xlo[0::2] = self.xlo
        xhi[0::2] = np.where(splitx, xmid, self.xhi)
        ylo[0::2] = self.ylo
        yhi[0::2] = np.where(splitx, self.yhi, ymid)
        xlo[1::2] = np.where(splitx, xmid, self.xlo)
        xhi[1::2] = self.xhi
        ylo[1::2] = np.where(splitx, self.ylo, ymid)
        yhi[1::2] = self.yhi
        return Box(xlo, xhi, ylo, yhi)

    def take(self, idx) -> "Box":
        return Box(self.xlo[idx], self.xhi[idx], self.ylo[idx], self.yhi[idx])


def iv_abs_poly(coeffs, box: Box):
    """Interval enclosure of |P(z)| over each box.

    coeffs are exact integers, ascending degree.  Complex-interval Horner
    with outward rounding at every step.
    """
    n = len(box)
    clo, chi = _coeff_interval(int(coeffs[-1]))
    re_lo = np.full(n, clo)
    re_hi = np.full(n, chi)
    im_lo = np.zeros(n)
    im_hi = np.zeros(n)
    for c in reversed(coeffs[:-1]):
        # acc <- acc * z + c
        t1lo, t1hi = iv_mul(re_lo, re_hi, box.xlo, box.xhi)
        t2lo, t2hi = iv_mul(im_lo, im_hi, box.ylo, box.yhi)
        new_re_lo, new_re_hi = iv_sub(t1lo, t1hi, t2lo, t2hi)
        t3lo, t3hi = iv_mul(re_lo, re_hi, box.ylo, box.yhi)
        t4lo, t4hi = iv_mul(im_lo, im_hi, box.xlo, box.xhi)
        im_lo, im_hi = iv_add(t3lo, t3hi, t4lo, t4hi)
        clo, chi = _coeff_interval(int(c))
        re_lo, re_hi = iv_add(new_re_lo, new_re_hi, np.full(n, clo), np.full(n, chi))
    sq_re_lo, sq_re_hi = _iv_sq(re_lo, re_hi)
    sq_im_lo, sq_im_hi = _iv_sq(im_lo, im_hi)
    s_lo, s_hi = iv_add(sq_re_lo, sq_re_hi, sq_im_lo, sq_im_hi)
    s_lo = np.maximum(s_lo, 0.0)
    lo = np.maximum(_down(np.sqrt(s_lo)), 0.0)
    hi = _up(np.sqrt(s_hi))
    return _sanitize(lo, hi)


def iv_log(lo, hi):
    """log of a nonnegative interval; log(0) = -inf, fully outward."""
    with np.errstate(divide="ignore", invalid="ignore"):
        llo = np.where(lo > 0.0, np.log(lo), -np.inf)
        lhi = np.where(hi > 0.0, np.log(hi), -np.inf)
    llo = np.where(np.isfinite(llo), _down(llo), llo)
    lhi = np.where(np.isfinite(lhi), _up(lhi), lhi)
    return _sanitize(llo, lhi)
