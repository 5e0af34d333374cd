import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from lscover.errors import BadParam
from lscover.euclid.bodies import Ball, HPolytope
from lscover.euclid.nets import Gauge, TorusRegion, saturated_packing_net


def test_tiny_host_gives_one_point():
    net = saturated_packing_net(Ball([0, 0], 0.04), 0.1)
    assert len(net) == 1


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_unit_torus_size_bounds(seed):
    delta = 0.25
    net = saturated_packing_net(TorusRegion(1.0), delta, seed=seed)
    # covering by delta-disks needs >= area/(pi delta^2); disjoint delta/2-disks allow <= area/(pi delta^2/4)
    assert 1 / (math.pi * delta ** 2) <= len(net) <= 1 / (math.pi * (delta / 2) ** 2)
    assert net.min_separation() >= delta - 1e-12


def test_net_property_on_400_grid():
    delta = 0.05
    region = TorusRegion(1.0)
    net = saturated_packing_net(region, delta, seed=4)
    g = (np.arange(400) + 0.5) / 400
    G = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    d, _ = cKDTree(net.points, boxsize=1.0).query(G)
    assert d.max() <= delta
    assert net.covering_radius is not None and net.covering_radius <= delta
    assert net.min_separation() >= delta - 1e-12


def test_cube_gauge_net():
    cube = HPolytope.box([-1, -1], [1, 1])
    delta = 0.1
    net = saturated_packing_net(TorusRegion(1.0), delta, gauge=cube, seed=2)
    assert net.min_separation() >= delta - 1e-12
    assert net.net_radius_on_grid(delta / 8) <= delta + 1e-12
    # cube-norm packing of delta/2-squares: at most area/delta^2 points
    assert len(net) <= 1 / delta ** 2


def test_net_inside_a_body():
    K = HPolytope.box([0, 0], [1, 0.5])
    net = saturated_packing_net(K, 0.1, seed=1)
    assert np.all(K.contains(net.points))
    assert net.net_radius_on_grid(0.01) <= 0.1 + 1e-12


def test_bad_parameters():
    with pytest.raises(BadParam):
        saturated_packing_net(TorusRegion(1.0), 0.1, stride=0.05)
    with pytest.raises(BadParam):
        saturated_packing_net(TorusRegion(1.0), 0.0)
    with pytest.raises(BadParam):
        TorusRegion(0.0)
    with pytest.raises(BadParam):
        Gauge(HPolytope.box([0, 0], [1, 1]))


def test_same_seed_same_net():
    a = saturated_packing_net(TorusRegion(1.0), 0.1, seed=9)
    b = saturated_packing_net(TorusRegion(1.0), 0.1, seed=9)
    assert np.array_equal(a.points, b.points)
