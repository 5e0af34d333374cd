"""Covering S^2 by rotated copies of a set: cap-packing nets, rotation
candidates and the greedy pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from ..errors import BadParam, BoundInfeasible, InfeasibleInstance, ZeroVolume
from ..euclid.nets import Gauge, greedy_packing
from ..hypercover import CoverInstance, cheap_dual_bound, fractional_cover_lp, greedy_cover, is_cover
from ..report import CoverReport
from ..rng import chunk_map, stream
from .caps import Cap, SphericalIndicator, cap_measure, measure, spherical_erosion, uniform_sphere

CERT_SAMPLES = 10 ** 5
_CAND_CHUNK = 512

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def chord(angle: float) -> float:
    """Euclidean length of the chord subtending ``angle`` on the unit sphere."""
    return 2.0 * math.sin(min(angle, math.pi) / 2.0)


def fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    a = GOLDEN_ANGLE * i
    return np.column_stack([r * np.cos(a), r * np.sin(a), z])


def hull_holes(P: np.ndarray):
    """Circum-cap centres and angular radii of the spherical Delaunay triangles of ``P``.

    For points on S^2 whose hull contains the origin these are the convex
    hull facets; the largest angular radius is the covering radius of ``P``.
    """
    hull = ConvexHull(P)
    normals = hull.equations[:, :3]
    cosr = np.clip(-hull.equations[:, 3], -1.0, 1.0)
    return normals, np.arccos(cosr)


def saturated_cap_packing(n: int = 2, delta: float = 0.1, seed: int = 0, repair: bool = True) -> np.ndarray:
    """Centres of a saturated packing of caps of radius ``delta/2`` on S^2.

    Candidates are a Fibonacci lattice of at least ``16 / Omega(delta/4)``
    points in seeded random order; greedy insertion keeps pairwise angular
    distance >= ``delta``.  With ``repair`` the circum-cap centre of every
    hull facet wider than ``delta`` is inserted as well (it is at angular
    distance > delta from all centres, so the packing survives) until the
    covering radius is at most ``delta``.
    """
    if n != 2:
        raise BadParam("constructive cap packings are implemented on S^2 only")
    if not delta > 0:
        raise BadParam("delta must be positive")
    if delta >= math.pi:
        return np.array([[0.0, 0.0, 1.0]])
    count = int(math.ceil(16.0 / cap_measure(2, delta / 4)))
    cands = fibonacci_sphere(count)[stream(seed, "net").permutation(count)]
    g = Gauge(dim=3)
    pts = greedy_packing(cands, chord(delta), g)
    if repair and len(pts) >= 4:
        for _ in range(100):
            C, R = hull_holes(pts)
            wide = R > delta
            if not wide.any():
                break
            order = np.argsort(-R[wide], kind="stable")
            pts = greedy_packing(C[wide][order], chord(delta), g, accepted=pts)
    return pts


def random_rotations(count: int, seed: int, dim: int = 3, key: int = 0) -> np.ndarray:
    """Haar-uniform rotations: QR of Gaussian matrices with the sign fix, det forced to +1."""
    G = stream(seed, "rotations", key).standard_normal((count, dim, dim))
    Q, R = np.linalg.qr(G)
    Q = Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
    neg = np.linalg.det(Q) < 0
    Q[neg, :, 0] *= -1
    return Q


def rotations_to(c, P) -> np.ndarray:
    """Rotations (one per row of ``P``) taking the unit vector ``c`` to that row, about ``c x p``."""
    c = np.asarray(c, float)
    P = np.atleast_2d(np.asarray(P, float))
    V = np.cross(c, P)
    s2 = (V * V).sum(axis=1)
    cosang = P @ c
    N = len(P)
    Kx = np.zeros((N, 3, 3))
    Kx[:, 0, 1], Kx[:, 0, 2] = -V[:, 2], V[:, 1]
    Kx[:, 1, 0], Kx[:, 1, 2] = V[:, 2], -V[:, 0]
    Kx[:, 2, 0], Kx[:, 2, 1] = -V[:, 1], V[:, 0]
    f = np.where(s2 > 1e-24, (1.0 - cosang) / np.where(s2 > 1e-24, s2, 1.0), 0.5)
    R = np.eye(3)[None] + Kx + f[:, None, None] * (Kx @ Kx)
    anti = (s2 <= 1e-24) & (cosang < 0)
    if anti.any():
        # half turn about any axis orthogonal to c
        a = np.cross(c, [1.0, 0.0, 0.0] if abs(c[0]) < 0.9 else [0.0, 1.0, 0.0])
        a /= np.linalg.norm(a)
        R[anti] = 2.0 * np.outer(a, a) - np.eye(3)
    return R


def rotation_to(c, p) -> np.ndarray:
    return rotations_to(c, p)[0]


@dataclass(frozen=True)
class RotationCandidate:
    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise BadParam("rotation must be a square matrix")
        if np.abs(M.T @ M - np.eye(len(M))).max() > 1e-10 or abs(np.linalg.det(M) - 1) > 1e-10:
            raise BadParam("matrix is not a rotation")
        object.__setattr__(self, "matrix", M)

    def apply(self, U):
        return np.atleast_2d(U) @ self.matrix.T


def contained_in_copies(K, rotations, U, chunk: int = 64) -> np.ndarray:
    """Boolean mask: which rows of ``U`` lie in some ``A K`` for ``A`` in ``rotations``."""
    U = np.atleast_2d(U)
    if isinstance(K, Cap):
        centers = np.asarray(rotations) @ K.center
        if len(centers) == 0:
            return np.zeros(len(U), bool)
        d, _ = cKDTree(centers).query(U)
        # exact angular test on the nearest centre
        return np.arccos(np.clip(1 - d * d / 2, -1, 1)) <= K.radius + 1e-12
    out = np.zeros(len(U), dtype=bool)
    for A in rotations:
        idx = np.flatnonzero(~out)
        if len(idx) == 0:
            break
        out[idx] = K.contains(U[idx] @ A)
    return out


def _reference_point(K, seed):
    if isinstance(K, Cap):
        return K.center
    if getattr(K, "reference", None) is not None:
        return K.reference
    if getattr(K, "bounding_cap", None) is not None:
        return K.bounding_cap.center
    U = uniform_sphere(K.dim, 20000, seed, "reference")
    inside = U[K.contains(U)]
    if len(inside) == 0:
        raise BadParam("could not locate the body by sampling")
    m = inside.mean(axis=0)
    return m / np.linalg.norm(m)


def _candidate_pairs(Kd, rotations, net, net_tree):
    """(candidate, net point) incidence of ``net`` with each ``A Kd``."""
    chunks = [(i, rotations[i:i + _CAND_CHUNK]) for i in range(0, len(rotations), _CAND_CHUNK)]
    if isinstance(Kd, Cap):
        r = chord(Kd.radius) * (1 + 1e-12)

        def work(item):
            start, R = item
            centers = R @ Kd.center
            m = cKDTree(centers).sparse_distance_matrix(net_tree, r, output_type="ndarray")
            ok = np.arccos(np.clip(np.einsum("ij,ij->i", centers[m["i"]], net[m["j"]]), -1, 1)) <= Kd.radius + 1e-12
            return m["i"][ok].astype(np.int64) + start, m["j"][ok].astype(np.int64)
    else:
        bc = Kd.bounding_cap if isinstance(Kd, SphericalIndicator) else None

        def work(item):
            start, R = item
            rows, cols = [], []
            for k, A in enumerate(R):
                if bc is not None:
                    near = np.asarray(net_tree.query_ball_point(A @ bc.center, chord(bc.radius) * (1 + 1e-9)), dtype=np.int64)
                    near.sort()
                else:
                    near = np.arange(len(net))
                if len(near) == 0:
                    continue
                hit = near[Kd.contains(net[near] @ A)]
                rows.append(np.full(len(hit), start + k, dtype=np.int64))
                cols.append(hit)
            if not rows:
                return np.zeros(0, np.int64), np.zeros(0, np.int64)
            return np.concatenate(rows), np.concatenate(cols)

    parts = chunk_map(work, chunks)
    if not parts:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def sphere_cover_greedy(K, delta: float, n_rot_candidates: int = 1000, seed: int = 0,
                        cert_samples: int = CERT_SAMPLES, lp: bool = False, delta_grid=None,
                        measure_samples: int = 10 ** 6) -> CoverReport:
    """Cover S^2 by rotated copies of ``K`` through a delta-net and greedy set cover.

    Candidates are ``n_rot_candidates`` Haar-random rotations plus one
    rotation per net point taking the reference point of ``K`` onto it
    (with a random spin about that point for non-caps).  Every net point
    must lie in some ``A K_{-delta}``; the greedy cover of the net by these
    sets then covers the sphere because the net has covering radius <= delta.
    Validity is re-checked on ``cert_samples`` uniform points.
    """
    from ..bounds import spherebyanything_bound, spherebyconvex_bound

    if K.dim != 2:
        raise BadParam("constructive sphere coverings are implemented on S^2 only")
    if not delta > 0:
        raise BadParam("delta must be positive")
    if n_rot_candidates < 0:
        raise BadParam("n_rot_candidates must be nonnegative")
    Kd = spherical_erosion(K, delta)
    if Kd.is_empty():
        raise BadParam("K_{-delta} is empty; decrease delta")
    net = saturated_cap_packing(2, delta, seed)
    net_tree = cKDTree(net)

    ref = _reference_point(K, seed)
    aimed = rotations_to(ref, net)
    if not isinstance(K, Cap):
        spin_angle = stream(seed, "rotations", 1).uniform(0, 2 * math.pi, len(net))
        aimed = _spin_about(net, spin_angle) @ aimed
    rotations = np.concatenate([aimed, random_rotations(n_rot_candidates, seed)])

    rows, cols = _candidate_pairs(Kd, rotations, net, net_tree)
    used = np.unique(rows)
    remap = np.full(len(rotations), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    inst = CoverInstance.from_pairs(len(net), len(used), remap[rows], cols, set_ids=used.tolist())
    if not inst.is_feasible:
        raise InfeasibleInstance(
            f"{len(inst.uncovered())} net points lie in no candidate copy; increase n_rot_candidates",
            inst.uncovered())

    lower = cheap_dual_bound(inst)
    sel = greedy_cover(inst, lower)
    if not is_cover(inst, sel.chosen):
        raise InfeasibleInstance("greedy selection failed to cover the net")
    chosen = rotations[np.asarray(sel.chosen, dtype=np.int64)]

    U = uniform_sphere(2, cert_samples, seed, "certify")
    covered = contained_in_copies(K, chosen, U)
    valid = bool(covered.all())

    sigma = measure(K, measure_samples, seed)
    sigma_d = measure(Kd, measure_samples, seed)
    Kh = spherical_erosion(K, delta / 2)
    sigma_h = measure(Kh, measure_samples, seed)
    d = inst.max_deg
    count_bound = sigma_h / cap_measure(2, delta / 2)
    ls_factor = 1 + math.log(d)

    stats = {
        "net_size": len(net),
        "net_min_separation": _min_angle(net, net_tree),
        "n_candidates": int(len(rotations)),
        "n_nonempty_candidates": inst.n_sets,
        "n_aimed_candidates": int(len(aimed)),
        "chosen": len(sel),
        "max_deg": d,
        "max_deg_volume_bound": count_bound,
        "max_deg_within_volume_bound": bool(d <= count_bound * (1 + 1e-9)),
        "tau_star_lower": lower,
        "ls_factor": ls_factor,
        "ls_certified_by_lower_bound": bool(len(sel) < ls_factor * lower),
        "sigma_K": sigma,
        "sigma_K_minus_delta": sigma_d,
        "certification_samples": cert_samples,
        "uncovered_samples": int((~covered).sum()),
    }
    if isinstance(K, Cap):
        # uniform weight on the aimed candidates is a fractional cover
        counts = np.bincount(cols[rows < len(aimed)], minlength=len(net))
        upper = len(net) / counts.min() if counts.min() > 0 else math.inf
        stats["tau_star_uniform_upper"] = upper
        stats["tau_star_uniform_margin"] = upper * sigma_d - 1.0
    if lp:
        method = "simplex" if max(inst.n_ground, inst.n_sets) <= 500 else "highs"
        fw = fractional_cover_lp(inst, method=method)
        tau_star = float(fw.total)
        stats["tau_star"] = tau_star
        stats["ls_holds"] = bool(len(sel) < ls_factor * tau_star * (1 - 1e-9))

    bounds = {}
    try:
        bounds["spherebyanything"] = spherebyanything_bound(K, delta_grid).value
    except (BoundInfeasible, ZeroVolume):  # tiny sets; reported as missing
        bounds["spherebyanything"] = None
    if isinstance(K, Cap) and K.radius < math.pi / 2:
        bounds["spherebyconvex"] = spherebyconvex_bound(2, sigma, K.radius).value

    return CoverReport(
        experiment="sphere_cover",
        density=len(sel) * sigma,
        valid=valid,
        grid_resolution=None,
        bounds=bounds,
        chosen_rotations=chosen.reshape(len(chosen), 9),
        stats=stats,
        params={"delta": delta, "seed": seed, "n_rot_candidates": n_rot_candidates,
                "body": _describe(K)},
    )


def _spin_about(P, angles):
    """Rotations by ``angles`` about the axes ``P`` (Rodrigues)."""
    c, s = np.cos(angles), np.sin(angles)
    Kx = np.zeros((len(P), 3, 3))
    Kx[:, 0, 1], Kx[:, 0, 2] = -P[:, 2], P[:, 1]
    Kx[:, 1, 0], Kx[:, 1, 2] = P[:, 2], -P[:, 0]
    Kx[:, 2, 0], Kx[:, 2, 1] = -P[:, 1], P[:, 0]
    return np.eye(3)[None] + s[:, None, None] * Kx + (1 - c)[:, None, None] * (Kx @ Kx)


def _min_angle(P, tree):
    if len(P) < 2:
        return math.pi
    d, _ = tree.query(P, k=2)
    return float(2 * np.arcsin(np.clip(d[:, 1].min() / 2, 0, 1)))


def _describe(K):
    if isinstance(K, Cap):
        return {"type": "cap", "center": K.center.tolist(), "radius": K.radius}
    return {"type": type(K).__name__}
