import numpy as np
import pytest
from shapely.affinity import scale, translate
from shapely.geometry import Polygon

from lscover.errors import BadParam, InfeasibleInstance, NotConvex
from lscover.euclid.bodies import Ball, HPolytope
from lscover.euclid.cover import (CenterGrid, build_translate_cover_instance, certify_torus_cover,
                                  reflection_intersection_volume, torus_cover_density)
from lscover.euclid.nets import TorusRegion


def test_point_translates_match_direct_membership():
    g = np.random.default_rng(3)
    net = g.uniform(0, 1, (60, 2))
    centers = g.uniform(0, 1, (40, 2))
    L = HPolytope.from_vertices([[0, 0], [0.4, 0.1], [0.2, 0.35]])
    inst = build_translate_cover_instance(L, L, Ball([0, 0], 0.0), net, np.vstack([centers, net - [0.2, 0.15]]))
    allc = np.vstack([centers, net - [0.2, 0.15]])
    for sid, row in zip(inst.sets, inst.incidence):
        direct = np.flatnonzero(L.contains(net - allc[sid]))
        assert row == direct.tolist()
    # centres that hit nothing are dropped, every other centre appears
    hits = [j for j in range(len(allc)) if L.contains(net - allc[j]).any()]
    assert list(inst.sets) == hits


def test_periodic_translates_use_minimal_image():
    net = np.array([[0.02, 0.5], [0.98, 0.5]])
    inst = build_translate_cover_instance(Ball([0, 0], 0.1), Ball([0, 0], 0.1), Ball([0, 0], 0.0), net,
                                          np.array([[0.0, 0.5]]), period=1.0)
    assert inst.incidence == [[0, 1]]


def test_infeasible_centres():
    with pytest.raises(InfeasibleInstance) as exc:
        build_translate_cover_instance(Ball([0, 0], 0.1), Ball([0, 0], 0.1), Ball([0, 0], 0.0),
                                       np.array([[0.0, 0.0], [5.0, 5.0]]), np.array([[0.0, 0.0]]))
    assert exc.value.uncovered == [1]


def test_center_grid():
    g = CenterGrid.on_torus(TorusRegion(1.0), 0.3)
    assert g.shape == (4, 4) and g.step == pytest.approx(0.25)
    assert np.allclose(g.points([0, 5]), [[0, 0], [0.25, 0.25]])


def test_fundamental_domain_has_density_one():
    rep = torus_cover_density(HPolytope.box([0, 0], [1, 1]), TorusRegion(1.0), 0.1)
    assert rep.density == pytest.approx(1.0) and rep.valid


def test_certification_detects_gaps():
    region = TorusRegion(1.0)
    K = HPolytope.box([0, 0], [0.5, 0.5])
    full = [[0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]]
    assert certify_torus_cover(K, full, region, 0.01) == (True, 0)
    ok, missed = certify_torus_cover(K, full[:3], region, 0.01)
    assert not ok and missed > 0


def test_disk_torus_run():
    K = Ball([0, 0], 0.15)
    region = TorusRegion(1.0)
    rep = torus_cover_density(K, region, 0.03, seed=3)
    assert rep.valid
    assert rep.density >= 1.0
    assert rep.density <= rep.bounds["renbyanything_at_delta"]
    s = rep.stats
    assert s["max_deg"] <= s["max_deg_volume_bound"]
    assert s["ls_certified_by_lower_bound"]
    assert rep.grid_resolution <= 0.03 / 8
    ok, missed = certify_torus_cover(K, np.asarray(rep.chosen_centers), region, 0.002)
    assert ok and missed == 0


def test_small_run_with_lp():
    rep = torus_cover_density(Ball([0, 0], 0.3), TorusRegion(1.0), 0.1, seed=1, lp=True)
    s = rep.stats
    assert s["tau_star_lower"] <= s["tau_star"] + 1e-9
    assert s["tau_star"] <= s["chosen"] + 1e-9
    assert s["ls_holds"]


def test_bad_torus_parameters():
    with pytest.raises(BadParam):
        torus_cover_density(Ball([0, 0], 0.1), TorusRegion(1.0), 0.05, cert_step=0.05)
    with pytest.raises(BadParam):
        torus_cover_density(Ball([0, 0], 0.1), TorusRegion(1.0), 0.2)
    with pytest.raises(BadParam):
        torus_cover_density(Ball([0, 0], 0.7), TorusRegion(1.0), 0.05)
    with pytest.raises(BadParam):
        torus_cover_density(Ball([0, 0, 0], 0.1), TorusRegion(1.0), 0.05)


def test_reflection_of_symmetric_body():
    r = reflection_intersection_volume(HPolytope.box([2, 3], [4, 4]))
    assert r["ratio"] == pytest.approx(1.0)
    assert r["holds"]


def test_reflection_of_triangle_against_shapely():
    V = np.array([[0.0, 0.0], [3.0, 0.0], [1.0, 2.0]])
    r = reflection_intersection_volume(HPolytope.from_vertices(V))
    P = Polygon(V)
    c = P.centroid
    Pc = translate(P, -c.x, -c.y)
    ref = Pc.intersection(scale(Pc, -1, -1, origin=(0, 0))).area
    assert r["volKcapMinusK"] == pytest.approx(ref, rel=1e-9)
    # for a triangle the ratio is 2/3
    assert r["ratio"] == pytest.approx(2 / 3, rel=1e-9)


@pytest.mark.parametrize("seed", range(50))
def test_reflection_bound_on_random_polygons(seed):
    g = np.random.default_rng(seed)
    pts = g.normal(size=(int(g.integers(3, 12)), 2)) * g.uniform(0.2, 3, 2)
    K = HPolytope.from_vertices(pts)
    r = reflection_intersection_volume(K)
    P = Polygon(K.vertices()).convex_hull
    c = P.centroid
    Pc = translate(P, -c.x, -c.y)
    ref = Pc.intersection(scale(Pc, -1, -1, origin=(0, 0))).area
    assert r["volKcapMinusK"] == pytest.approx(ref, rel=1e-7)
    assert r["holds"] and r["ratio"] >= 0.25


def test_reflection_needs_polytope():
    with pytest.raises(NotConvex):
        reflection_intersection_volume(Ball([0, 0], 1.0))
