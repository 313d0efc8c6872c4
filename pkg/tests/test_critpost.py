import json

import numpy as np
import pytest

from conftest import validate_schema
from skewdyn.critpost import (
    acc_cloud,
    acc_full_probe,
    apt_cloud,
    attract_or_escape_1d,
    certify_axiom_a,
    critical_locus,
    find_saddles,
    postcritical_cloud,
    report_to_json,
    verify_trapping,
)
from skewdyn.engine import chordal_distance
from skewdyn.errors import PreconditionError
from skewdyn.families import make_Fa, make_product
from skewdyn.poly import Poly1, compose_fiber, fiber_poly
from skewdyn.sets import PointCloud, sample_J2_inverse, sample_base_julia


def test_attract_or_escape_1d_superattracting():
    ok, margin = attract_or_escape_1d(Poly1([0, 0, 1]))
    assert ok and margin > 0.9  # fixed critical point, multiplier 0


def test_attract_or_escape_1d_two_cycle():
    ok, margin = attract_or_escape_1d(Poly1([-1, 0, 1]))
    assert ok and margin > 0.9  # superattracting 2-cycle {0, -1}


def test_attract_or_escape_1d_escaping_critical_orbit():
    ok, margin = attract_or_escape_1d(Poly1([0.3, 0, 1]))
    assert ok and margin == 1.0  # the critical orbit of w^2 + 0.3 escapes


def test_attract_or_escape_1d_fails_on_boundary_parameter():
    # w^2 + i: the critical orbit is preperiodic to a repelling cycle,
    # so it neither escapes nor attracts
    ok, _ = attract_or_escape_1d(Poly1([1j, 0, 1]))
    assert not ok


def test_attract_or_escape_1d_rejects_degree_one():
    with pytest.raises(PreconditionError):
        attract_or_escape_1d(Poly1([1.0, 0.5]))


@pytest.fixture(scope="module")
def fa_m1_crit():
    # base sample augmented with the exact repelling periodic points of
    # z^2 (fixed point 1 and the 2-cycle of primitive cube roots of 1):
    # exactly periodic base points never drift, so the tails over them are
    # exact
    f = make_Fa(-1)
    w3 = np.exp(2j * np.pi / 3)
    base = sample_base_julia(f.p, 400, seed=0)
    aug = PointCloud(np.concatenate([
        np.array([1.0 + 0j, w3, w3.conjugate()]), base.points]))
    return f, aug, critical_locus(f, aug)


def test_critical_locus_fa(fa_m1_crit):
    f, base, crit = fa_m1_crit
    # the fiber critical point of w^2 + az is w = 0 over every base point
    assert len(crit) == len(base)
    assert all(s.c == 0 for s in crit)
    assert all(s.status == "bounded" for s in crit)


def test_critical_locus_single_component_over_circle():
    # the locus is the graph w = 0 over the circle: one cluster once the
    # base sample is dense enough for the clustering threshold
    f = make_Fa(-1)
    crit = critical_locus(f, sample_base_julia(f.p, 2000, seed=0))
    assert len({s.component_id for s in crit}) == 1


def test_component_status_all_or_nothing():
    # within each cluster all members share one fate for parameters well
    # inside (a = 0.1) or well outside (a = 2) the connectedness locus
    for fam in (make_Fa(2), make_Fa(0.1)):
        cl = critical_locus(fam, sample_base_julia(fam.p, 200, seed=0))
        by_comp = {}
        for s in cl:
            by_comp.setdefault(s.component_id, set()).add(s.status)
        for statuses in by_comp.values():
            assert len(statuses) == 1


def test_apt_cloud_tails_on_saddle_cycle(fa_m1_crit):
    f, base, crit = fa_m1_crit
    apt = apt_cloud(crit)
    assert len(apt) > 0
    # over the exact fixed base point 1, tails sit on the 2-cycle {0, -1}
    sel = apt.points[apt.points[:, 0] == 1.0]
    assert len(sel) > 0
    d = np.minimum(np.abs(sel[:, 1]), np.abs(sel[:, 1] + 1.0))
    assert np.max(d) < 1e-9


def test_apt_cloud_empty_when_all_escape():
    f = make_Fa(2)
    crit = critical_locus(f, sample_base_julia(f.p, 200, seed=0))
    assert all(s.status == "escaped" for s in crit)
    assert len(apt_cloud(crit)) == 0


def test_acc_cloud_contains_apt(fa_m1_crit):
    f, base, crit = fa_m1_crit
    apt = apt_cloud(crit)
    acc = acc_cloud(f, crit)
    assert len(acc) >= len(apt)
    from skewdyn.sets import directed_hausdorff

    assert directed_hausdorff(apt, acc) < 1e-6


def test_acc_cloud_skips_all_escaped_components():
    f = make_Fa(2)
    crit = critical_locus(f, sample_base_julia(f.p, 200, seed=0))
    assert len(acc_cloud(f, crit)) == 0


def test_acc_full_probe_lands_in_target_fiber(fa_m1_crit):
    f, base, crit = fa_m1_crit
    probe = acc_full_probe(f, 1.0, lambda cands, k: cands[0], depth=10)
    if len(probe):
        assert np.all(probe.points[:, 0] == 1.0)
    with pytest.raises(PreconditionError):
        acc_full_probe(f, 1.0, lambda cands, k: cands[0], depth=0)


def test_find_saddles_product_cycle():
    # base z^2 has repelling fixed point 1; the fiber w^2 - 1 has the
    # superattracting 2-cycle {0, -1}, so the saddle cycle has base period
    # 1 but fiber period 2
    f = make_product(Poly1([0, 0, 1]), Poly1([-1, 0, 1]))
    saddles = find_saddles(f, max_base_period=1)
    cyc2 = [s for s in saddles if len(s.cycle) == 2
            and abs(s.base_point - 1.0) < 1e-9]
    assert len(cyc2) == 1
    ws = sorted(cyc2[0].cycle[:, 1].real)
    assert abs(ws[0] + 1.0) < 1e-9 and abs(ws[1]) < 1e-9
    assert abs(cyc2[0].vertical_multiplier) < 1e-9
    assert abs(cyc2[0].base_multiplier - 2.0) < 1e-12


def test_saddle_invariants():
    f = make_Fa(-1)
    for s in find_saddles(f, max_base_period=2):
        assert abs(s.base_multiplier) > 1.0
        assert abs(s.vertical_multiplier) < 1.0
        n = len(s.cycle)
        assert n % s.base_period == 0
        # the cycle closes up under the map
        z, w = s.cycle[0]
        for k in range(n):
            zk, wk = s.cycle[k]
            assert abs(z - zk) < 1e-7 and abs(w - wk) < 1e-7
            w = complex(fiber_poly(f, z)(w))
            z = complex(f.p(z))
        assert abs(z - s.cycle[0][0]) < 1e-7
        assert abs(w - s.cycle[0][1]) < 1e-7
        # vertical multiplier equals the derivative of the composed fiber map
        Q = compose_fiber(f, s.base_point, n)
        assert abs(Q.deriv()(s.fiber_point) - s.vertical_multiplier) < 1e-6


def test_certify_product_of_hyperbolic_maps():
    f = make_product(Poly1([0, 0, 1]), Poly1([-1, 0, 1]))
    base = sample_base_julia(f.p, 300, seed=0)
    j2 = sample_J2_inverse(f, 4000, seed=1)
    rep = certify_axiom_a(f, base, j2)
    assert rep.verdict == "Certified-P2"
    assert all(c["pass"] for c in rep.clauses.values())


def test_certify_fails_on_boundary_parameter():
    f = make_Fa(1j)
    base = sample_base_julia(f.p, 300, seed=0)
    j2 = sample_J2_inverse(f, 4000, seed=1)
    rep = certify_axiom_a(f, base, j2)
    assert rep.verdict.startswith("Failed")
    assert not rep.clauses["ii"]["pass"]


def test_report_json_schema():
    f = make_Fa(0)
    base = sample_base_julia(f.p, 200, seed=0)
    j2 = sample_J2_inverse(f, 2000, seed=1)
    rep = certify_axiom_a(f, base, j2)
    obj = json.loads(report_to_json(rep))
    validate_schema(obj, "certification")
    assert obj["verdict"] == "Certified-P2"


def test_verify_trapping_saddle_cloud():
    f = make_Fa(-1)
    saddles = find_saddles(f, max_base_period=2)
    pts = np.concatenate([s.cycle for s in saddles])
    t_cloud = PointCloud(pts)
    j2 = sample_J2_inverse(f, 4000, seed=0)
    from skewdyn.sets import min_chordal_distance

    r = 0.5 * min_chordal_distance(t_cloud, j2)
    res = verify_trapping(f, t_cloud, j2, r)
    assert res["pass"]
    assert res["m"] >= 1 and res["worst_ratio"] < 0.5


def test_verify_trapping_rejects_cloud_touching_j2():
    f = make_Fa(-1)
    j2 = sample_J2_inverse(f, 3000, seed=0)
    with pytest.raises(PreconditionError):
        # the J2 cloud itself has no chordal gap from J2
        verify_trapping(f, j2, j2, r=0.1)


def test_postcritical_cloud_near_attracting_part(fa_m1_crit):
    f, base, crit = fa_m1_crit
    pc = postcritical_cloud(f, crit, n_iter=60)
    assert len(pc) > 0
    # points in the fiber over the exact fixed base point 1 converge to the
    # 2-cycle {0, -1}; everything stays within the fiber escape radius
    assert np.max(np.abs(pc.points[:, 1])) <= 4.0
    sel = pc.points[pc.points[:, 0] == 1.0]
    assert len(sel) > 0
    d = np.minimum(np.abs(sel[:, 1]), np.abs(sel[:, 1] + 1.0))
    assert np.median(d) < 1e-6
    with pytest.raises(PreconditionError):
        postcritical_cloud(f, [], n_iter=10)
