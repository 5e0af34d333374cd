import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from lscover.errors import BadParam
from lscover.sphere.caps import Cap, SphericalIndicator, cap_measure, uniform_sphere
from lscover.sphere.cover import (RotationCandidate, chord, contained_in_copies, random_rotations, rotation_to,
                                  rotations_to, saturated_cap_packing, sphere_cover_greedy)


def angular_nn(P, U):
    d, _ = cKDTree(P).query(U)
    return 2 * np.arcsin(np.minimum(d / 2, 1.0))


def test_huge_delta_gives_one_point():
    assert len(saturated_cap_packing(2, math.pi)) == 1
    with pytest.raises(BadParam):
        saturated_cap_packing(3, 0.2)


def test_packing_size_and_net_property():
    delta = 0.4
    P = saturated_cap_packing(2, delta, seed=5)
    # covering needs >= 1/Omega(delta) caps; disjoint delta/2-caps allow <= 1/Omega(delta/2)
    assert 1 / cap_measure(2, delta) <= len(P) <= 1 / cap_measure(2, delta / 2)
    G = P @ P.T
    np.fill_diagonal(G, -1)
    assert np.arccos(np.clip(G.max(), -1, 1)) >= delta - 1e-12
    assert angular_nn(P, uniform_sphere(2, 10 ** 5, 1)).max() <= delta


def test_chord():
    assert chord(math.pi / 3) == pytest.approx(1.0)
    assert chord(4.0) == pytest.approx(2.0)


def test_random_rotations_are_rotations():
    R = random_rotations(500, 1)
    assert np.allclose(R @ np.transpose(R, (0, 2, 1)), np.eye(3), atol=1e-12)
    assert np.allclose(np.linalg.det(R), 1)
    # Haar: the image of a fixed vector is uniform, so its mean is near 0
    assert np.linalg.norm((R @ [0, 0, 1]).mean(axis=0)) < 0.15
    for M in R[:5]:
        RotationCandidate(M)
    with pytest.raises(BadParam):
        RotationCandidate(np.diag([1.0, 1.0, -1.0]))


def test_rotation_to_including_antipodal():
    c = np.array([0.0, 0.0, 1.0])
    P = np.vstack([uniform_sphere(2, 20, 0), -c, c])
    R = rotations_to(c, P)
    assert np.allclose(np.einsum("nij,j->ni", R, c), P, atol=1e-12)
    assert np.allclose(np.linalg.det(R), 1)
    assert np.allclose(rotation_to(c, -c) @ c, -c)


def test_containment_in_rotated_copies():
    K = Cap([0, 0, 1], 0.3)
    R = rotations_to([0, 0, 1], np.array([[1.0, 0, 0]]))
    U = np.array([[1.0, 0, 0], [0, 0, 1.0], [math.cos(0.29), 0, math.sin(0.29)]])
    assert contained_in_copies(K, R, U).tolist() == [True, False, True]


def test_hemisphere_caps_cover():
    rep = sphere_cover_greedy(Cap([0, 0, 1], math.pi / 2 - 0.01), 0.3, n_rot_candidates=50, seed=2,
                              cert_samples=2 * 10 ** 5, measure_samples=10 ** 5)
    assert rep.valid
    # two antipodal open hemispheres leave the equator uncovered, so at least 3
    assert rep.stats["chosen"] >= 3
    assert rep.density >= 1.0


def test_cap_cover_with_lp():
    rep = sphere_cover_greedy(Cap([0, 0, 1], 0.8), 0.3, n_rot_candidates=100, seed=4, lp=True,
                              cert_samples=2 * 10 ** 5, measure_samples=10 ** 5)
    s = rep.stats
    assert rep.valid and rep.density >= 1.0
    assert s["tau_star_lower"] <= s["tau_star"] + 1e-9
    assert s["tau_star"] <= s["tau_star_uniform_upper"] + 1e-9
    assert s["tau_star"] <= s["chosen"] + 1e-9
    assert s["ls_holds"]
    assert s["max_deg"] <= s["max_deg_volume_bound"]
    assert len(rep.chosen_rotations) == s["chosen"]
    for row in rep.chosen_rotations:
        RotationCandidate(np.reshape(row, (3, 3)))


def test_cover_density_does_not_depend_on_cap_orientation():
    a = sphere_cover_greedy(Cap([0, 0, 1], 0.7), 0.25, n_rot_candidates=0, seed=1, cert_samples=10 ** 5,
                            measure_samples=10 ** 4)
    c = np.array([1.0, 2.0, -0.5])
    b = sphere_cover_greedy(Cap(c / np.linalg.norm(c), 0.7), 0.25, n_rot_candidates=0, seed=1,
                            cert_samples=10 ** 5, measure_samples=10 ** 4)
    # aimed candidates are the same caps up to numerical noise
    assert a.valid and b.valid
    assert a.stats["chosen"] == b.stats["chosen"]
    assert a.density == pytest.approx(b.density)


def test_indicator_body_cover():
    # spherical square: |x|, |y| <= tan(0.5) z with z > 0
    t = math.tan(0.5)
    K = SphericalIndicator(lambda U: (U[:, 2] > 0) & (np.abs(U[:, 0]) <= t * U[:, 2]) & (np.abs(U[:, 1]) <= t * U[:, 2]),
                           2, reference=[0, 0, 1], bounding_cap=Cap([0, 0, 1], 0.7), convex=True)
    rep = sphere_cover_greedy(K, 0.2, n_rot_candidates=100, seed=3, cert_samples=2 * 10 ** 5,
                              measure_samples=2 * 10 ** 5)
    assert rep.valid
    assert rep.density >= 1.0
    assert rep.stats["uncovered_samples"] == 0


def test_bad_sphere_parameters():
    with pytest.raises(BadParam):
        sphere_cover_greedy(Cap([0, 0, 1], 0.2), 0.3)
    with pytest.raises(BadParam):
        sphere_cover_greedy(Cap([0, 0, 1], 0.5), 0.0)
    with pytest.raises(BadParam):
        sphere_cover_greedy(Cap([0, 0, 0, 1], 0.5), 0.1)
