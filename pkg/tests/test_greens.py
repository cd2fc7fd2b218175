"""Green functions: builtin formulas, composite specs, enclosures, and
far-field tail bands derived through the reciprocal chart."""

import json
import math

import numpy as np
import pytest

from essmin import greens
from essmin.greens import (
    BUILTIN_NAMES,
    CompositeSpec,
    DegreeMismatch,
    EnclosureUnavailable,
    UnknownName,
    ZeroDenominator,
    builtin,
    enclosure,
    make_composite,
)
from essmin.intervals import Box
from essmin.intpoly import parse_poly


def _rand_points(rng, n, scale=3.0):
    return rng.normal(scale=scale, size=n) + 1j * rng.normal(scale=scale, size=n)


def test_builtin_names_and_cache():
    assert set(BUILTIN_NAMES) == {"weil", "zhang_zagier", "hultberg", "faltings"}
    assert builtin("weil") is builtin("weil")
    with pytest.raises(UnknownName):
        builtin("no_such_green")


def test_weil_formula_pointwise():
    g = builtin("weil")
    rng = np.random.default_rng(5)
    zs = _rand_points(rng, 200)
    vals = g.eval(zs)
    ref = np.maximum(np.log(np.abs(zs)), 0.0)
    assert np.allclose(vals, ref, atol=1e-12)
    assert g.eval(np.array([0.0 + 0j]))[0] == 0.0


def test_zhang_zagier_formula_pointwise():
    g = builtin("zhang_zagier")
    rng = np.random.default_rng(6)
    zs = _rand_points(rng, 200)
    ref = (
        np.maximum(np.log(np.abs(zs)), 0.0)
        + np.maximum(np.log(np.abs(1 - zs)), 0.0)
    ) / 2.0
    assert np.allclose(g.eval(zs), ref, atol=1e-12)
    # symmetry z <-> 1-z
    assert np.allclose(g.eval(zs), g.eval(1 - zs), atol=1e-12)


def test_hultberg_formula_pointwise():
    g = builtin("hultberg")
    rng = np.random.default_rng(7)
    zs = _rand_points(rng, 200)
    ref = np.log(np.maximum(np.abs(2 * zs + 1), np.abs(zs)))
    assert np.allclose(g.eval(zs), ref, atol=1e-12)
    # value at the origin is log|1| = 0, at -1/2 it is log(1/2)
    assert g.eval(np.array([-0.5 + 0j]))[0] == pytest.approx(math.log(0.5))


def test_conjugation_invariance_flags_hold():
    rng = np.random.default_rng(8)
    zs = _rand_points(rng, 100)
    for name in BUILTIN_NAMES:
        g = builtin(name)
        if g.conjugation_invariant:
            assert np.allclose(g.eval(zs), g.eval(np.conj(zs)), atol=1e-9)


def test_enclosure_contains_samples_for_enclosable_builtins():
    rng = np.random.default_rng(9)
    for name in ("weil", "zhang_zagier", "hultberg"):
        g = builtin(name)
        assert g.has_enclosure
        for _ in range(30):
            cx, cy = rng.uniform(-3, 3, 2)
            w = 10.0 ** rng.uniform(-3, 0.5)
            box = Box(
                np.array([cx]), np.array([cx + w]),
                np.array([cy]), np.array([cy + w]),
            )
            lo, hi = g.enclose_boxes(box)
            zs = rng.uniform(cx, cx + w, 50) + 1j * rng.uniform(cy, cy + w, 50)
            vals = g.eval(zs)
            assert lo[0] <= vals.min() + 1e-12
            assert vals.max() <= hi[0] + 1e-12


def test_faltings_has_no_enclosure():
    g = builtin("faltings")
    assert not g.has_enclosure
    with pytest.raises(EnclosureUnavailable):
        enclosure(g, (0.0, 1.0, 0.0, 1.0))


def test_tail_radius_bounds_growth_band():
    # beyond tail_radius(n), |g(z) - log|z|| <= log|z| / n
    rng = np.random.default_rng(10)
    for name in ("weil", "zhang_zagier", "hultberg"):
        g = builtin(name)
        for n in (4, 16, 64):
            r = g.tail_radius(n)
            assert r > 1.0
            zs = (r * (1 + rng.uniform(0, 3, 40))) * np.exp(
                2j * np.pi * rng.uniform(0, 1, 40)
            )
            band = np.abs(g.eval(zs) - np.log(np.abs(zs)))
            assert np.all(band <= np.log(np.abs(zs)) / n + 1e-12)


def test_tail_radius_monotone_in_n():
    g = builtin("zhang_zagier")
    assert g.tail_radius(4) <= g.tail_radius(8) <= g.tail_radius(32)


def test_composite_reproduces_builtin_zhang_zagier():
    # 1/2 log+|z| + 1/2 log+|z-1| as an explicit two-term spec
    spec = CompositeSpec(
        [
            ("1/2", "log_plus", parse_poly("x"), parse_poly("1")),
            ("1/2", "log_plus", parse_poly("x-1"), parse_poly("1")),
        ]
    )
    spec.validate()
    g = make_composite(spec)
    ref = builtin("zhang_zagier")
    rng = np.random.default_rng(11)
    zs = _rand_points(rng, 300)
    assert np.allclose(g.eval(zs), ref.eval(zs), atol=1e-12)
    # and its enclosure works too
    lo, hi = enclosure(g, (0.2, 0.7, 0.1, 0.4))
    zs = rng.uniform(0.2, 0.7, 50) + 1j * rng.uniform(0.1, 0.4, 50)
    assert lo <= g.eval(zs).min() and g.eval(zs).max() <= hi


def test_composite_degree_bookkeeping_enforced():
    bad = CompositeSpec([("1/3", "log_plus", parse_poly("x"), parse_poly("1"))])
    with pytest.raises(DegreeMismatch):
        bad.validate()
    with pytest.raises(ZeroDenominator):
        CompositeSpec(
            [("1", "log_plus", parse_poly("x"), parse_poly("0"))]
        ).validate()


def test_composite_spec_json_round_trip():
    spec = CompositeSpec(
        [
            ("2/3", "log_plus", parse_poly("x^2+1"), parse_poly("x")),
            ("1/3", "log_abs", parse_poly("x-2"), parse_poly("1")),
        ],
        offset=0.125,
    )
    back = CompositeSpec.from_json(spec.to_json())
    assert back.to_json() == spec.to_json()
    g1, g2 = make_composite(spec), make_composite(back)
    rng = np.random.default_rng(12)
    zs = _rand_points(rng, 100)
    assert np.allclose(g1.eval(zs), g2.eval(zs), atol=1e-12)


def test_spec_json_identifies_builtins():
    assert json.loads(builtin("weil").spec_json()) == {"builtin": "weil"}
    spec = CompositeSpec([("1", "log_plus", parse_poly("x"), parse_poly("1"))])
    g = make_composite(spec)
    assert "terms" in json.loads(g.spec_json())


def test_module_level_helpers_dispatch():
    g = builtin("weil")
    zs = np.array([2.0 + 0j, 0.5 + 0j])
    assert np.allclose(greens.eval_green(g, zs), g.eval(zs))
    lo, hi = enclosure(g, (1.9, 2.1, -0.05, 0.05))
    assert lo <= math.log(2.0) <= hi
    with pytest.raises(ValueError):
        enclosure(g, (2.0, 1.0, 0.0, 1.0))


def test_reciprocal_chart_identity():
    # for |z| large, g(z) - log|z| equals the reciprocal-chart value at 1/z;
    # approximate check through the tail band at increasing radii
    g = builtin("hultberg")
    for r in (1e3, 1e6, 1e9):
        z = r * np.exp(0.3j)
        val = g.eval(np.array([z]))[0]
        assert abs(val - (math.log(r) + math.log(2.0))) < 3.0 / r
