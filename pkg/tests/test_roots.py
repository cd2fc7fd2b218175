"""Simultaneous root finding with certified radii, multiplicity
clustering, and fiber tracking for families A - e^{2 pi i theta} B."""

import numpy as np
import pytest

from essmin.intpoly import IntPoly, cyclotomic, parse_poly
from essmin.roots import (
    NonConvergence,
    all_roots,
    cluster_row,
    family_coeffs,
    solve_many,
    track_family,
    validate_family,
)


def _match(found, expected):
    """Greedy distance of each expected root to its nearest found root."""
    found = list(found)
    worst = 0.0
    for e in expected:
        d = min(abs(e - f) for f in found)
        worst = max(worst, d)
    return worst


def test_all_roots_against_numpy_oracle():
    rng = np.random.default_rng(41)
    for _ in range(120):
        deg = int(rng.integers(1, 9))
        coeffs = rng.integers(-9, 10, deg + 1).astype(float)
        if coeffs[-1] == 0:
            coeffs[-1] = 3.0
        rs = all_roots(coeffs)
        assert rs.converged
        ref = np.roots(coeffs[::-1])
        mine = [r.value for r in rs.roots for _ in range(r.multiplicity)]
        assert len(mine) == deg
        assert _match(mine, ref) < 1e-6


def test_certified_radii_contain_true_roots():
    # roots of x^2 - 2 are +-sqrt(2); radii must cover them
    rs = all_roots(parse_poly("x^2-2"))
    for r in rs.roots:
        assert min(abs(r.value - t) for t in (2 ** 0.5, -(2 ** 0.5))) <= r.radius
        assert r.radius < 1e-8


def test_multiple_root_is_clustered():
    # (x-1)^3 (x+2): the triple root must surface as one cluster
    p = parse_poly("x-1") ** 3 * parse_poly("x+2")
    rs = all_roots(p)
    mults = sorted(r.multiplicity for r in rs.roots)
    assert mults == [1, 3]
    triple = max(rs.roots, key=lambda r: r.multiplicity)
    assert abs(triple.value - 1.0) < 1e-4


def test_cluster_row_merges_overlapping_disks():
    roots = cluster_row([1.0 + 0j, 1.0 + 1e-12j, 5.0 + 0j], [1e-10, 1e-10, 1e-12])
    mults = sorted(r.multiplicity for r in roots)
    assert mults == [1, 2]


def test_solve_many_batches_agree_with_single():
    rng = np.random.default_rng(43)
    rows = rng.normal(size=(6, 5)) + 1j * rng.normal(size=(6, 5))
    z, rad, conv = solve_many(rows)
    assert z.shape == (6, 4) and rad.shape == (6, 4)
    assert conv.all()
    for i in range(6):
        ref = np.roots(rows[i][::-1])
        assert _match(z[i], ref) < 1e-8


def test_leading_zero_rejected():
    with pytest.raises(ValueError):
        all_roots([1.0, 0.0])
    with pytest.raises(ValueError):
        all_roots([5.0])


def test_family_coeffs_shape_and_values():
    a, b = parse_poly("x^2+1"), parse_poly("x")
    rows = family_coeffs(a, b, [0.0, 0.25])
    assert rows.shape == (2, 3)
    # theta = 0: x^2 - x + 1; theta = 1/4: x^2 - i x + 1
    assert rows[0] == pytest.approx([1.0, -1.0, 1.0])
    assert rows[1][1] == pytest.approx(-1j)


def test_validate_family_rules():
    x = parse_poly("x")
    validate_family(parse_poly("x^2+1"), x)
    with pytest.raises(ValueError):
        validate_family(x, parse_poly("x^2+1"))  # deg A < deg B
    with pytest.raises(ValueError):
        validate_family(x, IntPoly())  # B = 0
    with pytest.raises(ValueError):
        validate_family(parse_poly("x^2-1"), parse_poly("x-1"))  # not coprime
    with pytest.raises(ValueError):
        validate_family(parse_poly("x+1"), x)  # equal degree, equal |lc|


def test_track_family_paths_are_continuous_and_correct():
    a, b = parse_poly("x^2+1"), parse_poly("x")
    thetas = np.linspace(0.0, 1.0, 201)
    tr = track_family(a, b, thetas)
    assert tr.fiber_degree == 2
    assert tr.roots.shape == (201, 2)
    # each node solves A(w) = e^{2 pi i theta} B(w)
    for k in (0, 57, 140, 200):
        y = np.exp(2j * np.pi * thetas[k])
        for w in tr.roots[k]:
            assert abs(a(w) - y * b(w)) < 1e-8
    # matched paths move slowly at this node spacing
    steps = np.abs(np.diff(tr.roots, axis=0))
    assert steps.max() < 0.2
    # theta = 0 and theta = 1 fibers coincide as sets
    assert _match(tr.roots[0], tr.roots[-1]) < 1e-8


def test_track_family_roots_stay_off_real_line_for_positive_pair():
    # A = x^2 + x + 1, B = x: fiber roots avoid [0, inf) for all theta
    tr = track_family(parse_poly("x^2+x+1"), parse_poly("x"), np.linspace(0, 1, 101))
    prod = np.prod(tr.roots, axis=1)
    # product of fiber roots has modulus |constant term| = 1 throughout
    assert np.allclose(np.abs(prod), 1.0, atol=1e-9)


def test_track_family_rejects_unsorted_nodes():
    with pytest.raises(ValueError):
        track_family(parse_poly("x^2+1"), parse_poly("x"), [0.5, 0.2])


def test_cyclotomic_roots_lie_on_unit_circle():
    rs = all_roots(cyclotomic(12))
    assert rs.converged
    for r in rs.roots:
        assert abs(abs(r.value) - 1.0) < 1e-10
