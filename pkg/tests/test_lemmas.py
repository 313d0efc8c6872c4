import pytest

from conftest import validate_schema
from skewdyn.lemmas import (
    LEMMA_CHECKS,
    check_box_avoid,
    check_box_bound,
    check_box_self_map,
    check_escape_ring,
    check_ray_surrogate,
    check_s1s2_bounds,
    check_s1s2_constants,
    check_strip_escape,
    check_trapping,
)


def test_box_bound():
    # the flat-box bound needs a deep period (the base parameter close to
    # -2); at small periods the base set is visibly two-dimensional
    rep = check_box_bound(6, n_samples=20000)
    assert rep["pass"], rep
    assert rep["epsilon"] < 0.25
    assert rep["re_max"] <= 2.0 + 1e-6
    validate_schema(rep, "lemma")


def test_escape_ring():
    rep = check_escape_ring(3, n_samples=4000)
    assert rep["pass"], rep
    assert rep["min_ratio"] >= rep["required"] - 1e-9
    validate_schema(rep, "lemma")


def test_ray_surrogate():
    rep = check_ray_surrogate(3, n_samples=500)
    assert rep["pass"], rep
    assert rep["N"] is not None and 0 <= rep["N"] < 400
    validate_schema(rep, "lemma")


def test_strip_escape():
    rep = check_strip_escape(3, n_samples=300)
    assert rep["pass"], rep
    assert rep["min_modulus"] > 3.5
    validate_schema(rep, "lemma")


def test_box_self_map():
    rep = check_box_self_map(3, n_samples=8000)
    assert rep["pass"], rep
    assert rep["margin_re"] > 0 and rep["margin_im"] > 0
    validate_schema(rep, "lemma")


def test_box_avoid():
    rep = check_box_avoid(3, n_samples=8000)
    assert rep["pass"], rep
    assert rep["margin"] > 0.05
    validate_schema(rep, "lemma")


def test_s1s2_constants_check(s1s2_basic):
    f, consts, s1, s2 = s1s2_basic
    rep = check_s1s2_constants(consts, s1, s2)
    assert rep["pass"], rep
    assert rep["expansion"] and rep["dominance"] and rep["sup_bound"]
    validate_schema(rep, "lemma")


def test_s1s2_bounds_check(s1s2_basic):
    f, consts, _, _ = s1s2_basic
    rep = check_s1s2_bounds(f, consts, n_samples=500)
    assert rep["pass"], rep
    assert rep["ring_ratio"] >= 2.0
    validate_schema(rep, "lemma")


def test_trapping_check():
    import numpy as np

    from skewdyn.critpost import find_saddles
    from skewdyn.families import make_Fa
    from skewdyn.sets import PointCloud, min_chordal_distance, \
        sample_J2_inverse

    f = make_Fa(-1)
    t_cloud = PointCloud(
        np.concatenate([s.cycle for s in find_saddles(f, max_base_period=2)]))
    j2 = sample_J2_inverse(f, 3000, seed=0)
    r = 0.5 * min_chordal_distance(t_cloud, j2)
    rep = check_trapping(f, t_cloud, j2, r=r)
    assert rep["pass"], rep
    assert rep["id"] == "trapping"
    validate_schema(rep, "lemma")


def test_registry_is_complete():
    assert set(LEMMA_CHECKS) == {
        "box-bound", "escape-ring", "ray-surrogate", "strip-escape",
        "box-self-map", "box-avoid", "construction-constants",
        "construction-bounds", "trapping",
    }
    for fn in LEMMA_CHECKS.values():
        assert callable(fn)
