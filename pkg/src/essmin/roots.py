"""Simultaneous polynomial root finding with a posteriori error radii.

The core solver runs Aberth-Ehrlich iterations on whole batches of
polynomials at once (numpy arrays, one row per polynomial), which is what
the quadrature inner loop needs: thousands of fibers of the same degree.
Error radii combine the classical bounds

    min_i |z - r_i| <= deg * |p(z) / p'(z)|
    min_i |z - r_i| <= (|p(z)| / |lc|) ** (1 / deg)

padded by a running bound on the binary64 evaluation error of p.  Roots
whose error disks overlap are merged into a cluster reported once with a
multiplicity, so consumers can weight fiber sums by ramification.
"""

from __future__ import annotations

import numpy as np

from .intpoly import IntPoly

__all__ = ["Root", "RootSet", "NonConvergence", "all_roots", "track_family", "TrackResult"]

_EPS = np.finfo(float).eps
_MAX_ITER = 200
_STOP_FACTOR = 1e-14


class NonConvergence(RuntimeError):
    """Root iteration failed to converge; carries the offending context."""

    def __init__(self, message, theta=None, best=None):
        super().__init__(message)
        self.theta = theta
        self.best = best


class Root:
    __slots__ = ("value", "radius", "multiplicity")

    def __init__(self, value, radius, multiplicity=1):
        self.value = complex(value)
        self.radius = float(radius)
        self.multiplicity = int(multiplicity)

    def __repr__(self):
        return f"Root({self.value:.6g}, r={self.radius:.2g}, m={self.multiplicity})"


class RootSet:
    """Clustered roots of one polynomial; multiplicities sum to the degree."""

    def __init__(self, roots, degree, converged=True):
        self.roots = list(roots)
        self.degree = int(degree)
        self.converged = bool(converged)

    def values(self):
        return np.array([r.value for r in self.roots])

    def __iter__(self):
        return iter(self.roots)

    def __len__(self):
        return len(self.roots)


def _horner_rows(coeffs, z):
    """Evaluate each row polynomial at each row of points.

    coeffs: (m, n+1) ascending; z: (m, d) -> (m, d).
    """
    acc = np.broadcast_to(coeffs[:, -1][:, None], z.shape).astype(complex).copy()
    for k in range(coeffs.shape[1] - 2, -1, -1):
        acc *= z
        acc += coeffs[:, k][:, None]
    return acc


def _eval_error_rows(coeffs, z):
    """Upper bound on the binary64 evaluation error of Horner, per point."""
    az = np.abs(z)
    acc = np.broadcast_to(np.abs(coeffs[:, -1])[:, None], z.shape).copy()
    for k in range(coeffs.shape[1] - 2, -1, -1):
        acc = acc * az + np.abs(coeffs[:, k])[:, None]
    n = coeffs.shape[1]
    return 4.0 * n * _EPS * acc


def _default_seeds(coeffs):
    """Perturbed-circle start points, one circle per row.

    Radius is the smaller of the Cauchy and Fujiwara root bounds; the
    latter stays tight when middle coefficients are huge.
    """
    m, n1 = coeffs.shape
    d = n1 - 1
    lc = coeffs[:, -1]
    center = -coeffs[:, -2] / (d * lc) if d >= 1 else np.zeros(m, complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        mags = np.abs(coeffs[:, :-1] / lc[:, None])
    cauchy = 1.0 + np.max(mags, axis=1)
    k = np.arange(d, 0, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        fuji = 2.0 * np.max(mags ** (1.0 / k)[None, :], axis=1)
    radius = np.minimum(cauchy, fuji)
    radius = np.where(np.isfinite(radius) & (radius > 0), radius, 1.0)
    j = np.arange(d)
    angles = 2.0 * np.pi * j / d + 0.4
    spread = 0.9 + 0.2 * j / max(d, 1)
    ring = (spread * np.exp(1j * angles))[None, :]
    return center[:, None] + radius[:, None] * ring


def solve_many(coeffs, seeds=None):
    """Aberth-Ehrlich on a batch of same-degree polynomials.

    Parameters
    ----------
    coeffs : (m, n+1) complex array, ascending degree, nonzero last column.
    seeds : optional (m, n) warm-start roots.

    Returns
    -------
    z : (m, n) root approximations (unordered within a row).
    radius : (m, n) certified error radii.
    converged : (m,) boolean mask.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    m, n1 = coeffs.shape
    d = n1 - 1
    if d < 1:
        raise ValueError("degree must be >= 1")
    if np.any(coeffs[:, -1] == 0):
        raise ValueError("leading coefficient must be nonzero in every row")
    z = np.array(seeds, dtype=complex, copy=True) if seeds is not None else _default_seeds(coeffs)
    if z.shape != (m, d):
        raise ValueError("seed shape mismatch")
    dcoeffs = coeffs[:, 1:] * np.arange(1, n1)[None, :]
    active = np.ones(m, dtype=bool)
    rng_jitter = 0
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        za = z[active]
        with np.errstate(over="ignore", invalid="ignore"):
            P = _horner_rows(coeffs[active], za)
            Pp = _horner_rows(dcoeffs[active], za)
        # overflowed evaluation: pull the point halfway in and retry later
        blown = ~(np.isfinite(P) & np.isfinite(Pp))
        with np.errstate(divide="ignore", invalid="ignore"):
            w = P / Pp
        w[~np.isfinite(w)] = 0.0
        diff = za[:, :, None] - za[:, None, :]
        idx = np.arange(d)
        diff[:, idx, idx] = np.inf
        bad = diff == 0
        if bad.any():
            # coincident iterates: nudge deterministically and retry next sweep
            rng_jitter += 1
            za = za + (1e-8 * rng_jitter) * (1 + 1j) * bad.any(axis=2)
            z[active] = za
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            S = (1.0 / diff).sum(axis=2)
        denom = 1.0 - w * S
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = w / denom
        corr = np.where(np.isfinite(corr), corr, w)
        corr = np.where(blown, 0.5 * za, corr)
        za = za - corr
        z[active] = za
        scale = np.maximum(1.0, np.abs(za).max(axis=1))
        done = np.abs(corr).max(axis=1) <= _STOP_FACTOR * scale
        # alternative stop: residuals at the binary64 evaluation-noise floor
        with np.errstate(over="ignore", invalid="ignore"):
            errb = _eval_error_rows(coeffs[active], za)
        absP = np.abs(P)
        at_floor = np.isfinite(absP) & np.isfinite(errb) & (absP <= 2.0 * errb)
        done |= at_floor.all(axis=1)
        act_idx = np.flatnonzero(active)
        active[act_idx[done]] = False
    converged = ~active
    # Newton polish
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(2):
            P = _horner_rows(coeffs, z)
            Pp = _horner_rows(dcoeffs, z)
            step = P / Pp
            step = np.where(np.isfinite(step), step, 0.0)
            big = np.abs(step) > 0.1 * (1.0 + np.abs(z))
            z = z - np.where(big, 0.0, step)
        P = _horner_rows(coeffs, z)
        Pp = _horner_rows(dcoeffs, z)
        pad = np.abs(P) + _eval_error_rows(coeffs, z)
        r1 = d * pad / np.abs(Pp)
        r1 = np.where(np.isfinite(r1), r1, np.inf)
        lc = np.abs(coeffs[:, -1])[:, None]
        r2 = (pad / lc) ** (1.0 / d)
    radius = np.minimum(r1, r2)
    return z, radius, converged


def cluster_row(values, radii):
    """Merge overlapping root disks; returns a list of Root with multiplicity."""
    d = len(values)
    parent = list(range(d))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(d):
        for j in range(i + 1, d):
            if abs(values[i] - values[j]) <= radii[i] + radii[j]:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(d):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        pts = np.asarray([values[i] for i in members])
        center = pts.mean()
        rad = max(abs(values[i] - center) + radii[i] for i in members)
        out.append(Root(center, rad, len(members)))
    out.sort(key=lambda r: (r.value.real, r.value.imag))
    return out


def all_roots(coeffs) -> RootSet:
    """Roots of a single polynomial with certified radii and multiplicities.

    ``coeffs`` may be an IntPoly or an ascending list of complex numbers.
    Non-convergence after the iteration cap returns the best iterate with
    ``converged = False`` instead of raising.
    """
    if isinstance(coeffs, IntPoly):
        arr = np.array(coeffs.coeffs, dtype=complex)
    else:
        arr = np.asarray(list(coeffs), dtype=complex)
    while arr.size and arr[-1] == 0:
        arr = arr[:-1]
    if arr.size <= 1:
        raise ValueError("degree must be >= 1 with nonzero leading coefficient")
    z, radius, conv = solve_many(arr[None, :])
    roots = cluster_row(list(z[0]), list(radius[0]))
    return RootSet(roots, degree=arr.size - 1, converged=bool(conv[0]))


class TrackResult:
    """Root paths of the family A(w) - exp(2 pi i theta) B(w).

    ``roots[k, j]`` is path j at node k; paths are nearest-neighbor matched
    across consecutive nodes.
    """

    def __init__(self, thetas, roots, radii, fiber_degree):
        self.thetas = np.asarray(thetas, dtype=float)
        self.roots = roots
        self.radii = radii
        self.fiber_degree = int(fiber_degree)

    def path(self, j):
        return self.roots[:, j]


def family_coeffs(a: IntPoly, b: IntPoly, thetas):
    """Coefficient rows of A - exp(2 pi i theta) B over the node list."""
    thetas = np.asarray(thetas, dtype=float)
    d = max(a.degree, b.degree)
    arow = np.zeros(d + 1, dtype=complex)
    brow = np.zeros(d + 1, dtype=complex)
    arow[: a.degree + 1] = [float(c) for c in a.coeffs]
    brow[: b.degree + 1] = [float(c) for c in b.coeffs]
    y = np.exp(2j * np.pi * thetas)
    return arow[None, :] - y[:, None] * brow[None, :]


def validate_family(a: IntPoly, b: IntPoly):
    from .intpoly import gcd_q

    if b.is_zero:
        raise ValueError("B = 0 gives a constant fiber family")
    if a.is_zero:
        raise ValueError("A must be nonzero")
    if a.degree < b.degree:
        raise ValueError("need deg A >= deg B")
    if a.degree == b.degree and abs(a.lc) == abs(b.lc):
        raise ValueError("deg A = deg B needs |lc A| != |lc B| to keep full fibers")
    if gcd_q(a, b).degree >= 1:
        raise ValueError("A and B must be coprime")


def track_family(a: IntPoly, b: IntPoly, theta_nodes) -> TrackResult:
    """Solve the full fiber multiset along sorted theta nodes with matching.

    Consecutive columns are matched by optimal nearest-neighbor assignment;
    when the matched motion exceeds half the minimal root separation the
    node is re-solved from fresh seeds before matching.  Raises
    NonConvergence with the offending theta when a fiber fails to converge
    twice.
    """
    from scipy.optimize import linear_sum_assignment

    validate_family(a, b)
    thetas = np.asarray(list(theta_nodes), dtype=float)
    if thetas.size == 0:
        raise ValueError("need at least one node")
    if np.any(np.diff(thetas) < 0):
        raise ValueError("theta nodes must be sorted")
    coeffs = family_coeffs(a, b, thetas)
    d = coeffs.shape[1] - 1
    m = thetas.size
    roots = np.empty((m, d), dtype=complex)
    radii = np.empty((m, d), dtype=float)
    prev = None
    for k in range(m):
        row = coeffs[k : k + 1]
        seeds = prev[None, :] if prev is not None else None
        z, rad, conv = solve_many(row, seeds=seeds)
        if not conv[0]:
            z, rad, conv = solve_many(row)
            if not conv[0]:
                raise NonConvergence(f"fiber failed at theta={thetas[k]}", theta=thetas[k])
        zk, rk = z[0], rad[0]
        if prev is not None:
            cost = np.abs(prev[:, None] - zk[None, :])
            ri, ci = linear_sum_assignment(cost)
            order = np.empty(d, dtype=int)
            order[ri] = ci
            zk, rk = zk[order], rk[order]
            sep = _min_separation(prev)
            if np.max(np.abs(zk - prev)) > 0.5 * sep:
                z2, rad2, conv2 = solve_many(row)
                if not conv2[0]:
                    raise NonConvergence(f"fiber failed at theta={thetas[k]}", theta=thetas[k])
                cost = np.abs(prev[:, None] - z2[0][None, :])
                ri, ci = linear_sum_assignment(cost)
                order[ri] = ci
                zk, rk = z2[0][order], rad2[0][order]
        roots[k] = zk
        radii[k] = rk
        prev = zk
    return TrackResult(thetas, roots, radii, d)


def _min_separation(vals):
    if len(vals) < 2:
        return np.inf
    diff = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(diff, np.inf)
    return diff.min()
