"""Saturated packings and the delta-nets they induce, on a flat torus or in a body.

A set whose points are pairwise at gauge distance >= delta and to which no
candidate point can be added is a delta-net of the candidate set.  The
candidates are a shuffled grid of stride <= delta/4.  In the Euclidean torus
case the net is then repaired exactly: any Delaunay circumcentre farther
than delta from the net is inserted (it is an empty-circle centre, so the
packing survives), until the covering radius is at most delta.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from ..errors import BadParam
from ..rng import stream
from .bodies import Ball, Body, HPolytope, grid_points

BATCH = 8192


@dataclass(frozen=True)
class TorusRegion:
    """The flat torus ``[0, side)^dim`` with wraparound."""
    side: float
    dim: int = 2

    def __post_init__(self):
        if not self.side > 0:
            raise BadParam("torus side must be positive")

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    def wrap(self, X):
        return np.mod(X, self.side)

    def diff(self, X, Y):
        """Minimal-image difference ``X - Y``."""
        d = np.asarray(X) - np.asarray(Y)
        return d - self.side * np.round(d / self.side)


class Gauge:
    """Norm whose unit ball is a centrally symmetric convex body (default: Euclidean)."""

    def __init__(self, body: Body | None = None, dim: int = 2):
        if body is None:
            body = Ball(np.zeros(dim), 1.0)
        self.body = body
        self.dim = body.dim
        if isinstance(body, Ball):
            if np.any(body.center != 0) or body.radius <= 0:
                raise BadParam("gauge ball must be centred at the origin with positive radius")
            self.outer = self.inner = body.radius
            self.euclidean = True
        elif isinstance(body, HPolytope):
            if np.any(body.b <= 0):
                raise BadParam("gauge polytope must contain the origin in its interior")
            V = body.vertices()
            if not np.all(body.contains(-V)):
                raise BadParam("gauge must be symmetric (K = -K)")
            self.outer = float(np.linalg.norm(V, axis=1).max())
            self.inner = float((body.b / np.linalg.norm(body.A, axis=1)).min())
            self.euclidean = False
        else:
            raise BadParam("gauge must be a Ball or an HPolytope")

    def norm(self, V) -> np.ndarray:
        V = np.atleast_2d(V)
        if isinstance(self.body, Ball):
            return np.linalg.norm(V, axis=1) / self.body.radius
        return np.max((V @ self.body.A.T) / self.body.b, axis=1)


@dataclass
class PointNet:
    points: np.ndarray
    delta: float
    host: object
    gauge: Gauge
    stride: float
    covering_radius: float | None = None  # certified value when known exactly
    repaired: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def _period(self):
        return self.host.side if isinstance(self.host, TorusRegion) else None

    def min_separation(self) -> float:
        """Smallest pairwise gauge distance (inf for fewer than two points)."""
        if len(self.points) < 2:
            return math.inf
        period = self._period()
        tree = cKDTree(self.points, boxsize=period)
        k = min(len(self.points), 2 if self.gauge.euclidean else 12)
        _, idx = tree.query(self.points, k=k)
        d = self.points[:, None, :] - self.points[idx[:, 1:]]
        if period:
            d -= period * np.round(d / period)
        return float(self.gauge.norm(d.reshape(-1, d.shape[-1])).min())

    def net_radius_on_grid(self, step: float) -> float:
        """Largest gauge distance from a host grid point to the net."""
        if isinstance(self.host, TorusRegion):
            n = max(1, int(round(self.host.side / step)))
            axes = [np.arange(n) * self.host.side / n] * self.host.dim
            G = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        else:
            lo, hi = self.host.bbox()
            G = grid_points(lo, hi, step)
            G = G[self.host.contains(G)]
        return _max_gauge_distance(G, self.points, self.gauge, self._period())


def _max_gauge_distance(G, P, gauge, period):
    tree = cKDTree(P, boxsize=period)
    if gauge.euclidean:
        d, _ = tree.query(G)
        return float(d.max()) / gauge.outer
    k = min(len(P), 16)
    _, idx = tree.query(G, k=k)
    idx = idx.reshape(len(G), -1)
    diff = G[:, None, :] - P[idx]
    if period:
        diff -= period * np.round(diff / period)
    norms = gauge.norm(diff.reshape(-1, G.shape[1])).reshape(len(G), -1)
    return float(norms.min(axis=1).max())


def _candidate_grid(host, stride):
    if isinstance(host, TorusRegion):
        n = int(math.ceil(host.side / stride))
        h = host.side / n
        axes = [np.arange(n) * h] * host.dim
        return np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1), h
    lo, hi = host.bbox()
    G = grid_points(lo, hi, stride)
    return G[host.contains(G)], stride


def greedy_packing(cands, delta, gauge, period=None, accepted=None):
    """Scan ``cands`` in order and keep each point at gauge distance >= delta
    from all points kept so far (and from ``accepted``).

    Batches are filtered against the current set with a KD-tree, and
    conflicts inside a batch are resolved sequentially, which reproduces the
    one-at-a-time scan exactly.
    """
    dim = cands.shape[1]
    kept = [np.asarray(accepted, float).reshape(-1, dim)] if accepted is not None and len(accepted) else []
    r_out = delta * gauge.outer
    for start in range(0, len(cands), BATCH):
        pts = cands[start:start + BATCH]
        if kept:
            cur = np.concatenate(kept)
            conflict = _conflicts(pts, cur, delta, gauge, period)
            pts = pts[~conflict]
        if len(pts) == 0:
            continue
        pairs = cKDTree(pts, boxsize=period).query_pairs(r_out, output_type="ndarray")
        if len(pairs):
            d = pts[pairs[:, 0]] - pts[pairs[:, 1]]
            if period:
                d -= period * np.round(d / period)
            pairs = pairs[gauge.norm(d) < delta]
        take = _sequential_accept(len(pts), pairs)
        kept.append(pts[take])
    return np.concatenate(kept) if kept else np.zeros((0, dim))


def _conflicts(pts, cur, delta, gauge, period):
    tree = cKDTree(cur, boxsize=period)
    if gauge.euclidean:
        d, _ = tree.query(pts, distance_upper_bound=delta * gauge.outer)
        return d < delta * gauge.outer
    out = np.zeros(len(pts), dtype=bool)
    for i, nb in enumerate(tree.query_ball_point(pts, delta * gauge.outer)):
        if nb:
            d = pts[i] - cur[nb]
            if period:
                d -= period * np.round(d / period)
            out[i] = bool((gauge.norm(d) < delta).any())
    return out


def _sequential_accept(n, pairs):
    take = np.ones(n, dtype=bool)
    if len(pairs) == 0:
        return take
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    order = np.argsort(hi, kind="stable")
    lo, hi = lo[order], hi[order]
    bounds = np.searchsorted(hi, np.arange(n + 1))
    for j in np.unique(hi):
        if take[lo[bounds[j]:bounds[j + 1]]].any():
            take[j] = False
    return take


def periodic_delaunay_holes(points, region: TorusRegion, delta: float):
    """Circumcentres (wrapped into the torus) of periodic Delaunay simplices with circumradius > delta."""
    n = region.dim
    shifts = np.array(list(itertools.product((-1, 0, 1), repeat=n)), dtype=float) * region.side
    P = (points[None, :, :] + shifts[:, None, :]).reshape(-1, n)
    tri = Delaunay(P)
    S = P[tri.simplices]                  # (T, n+1, n)
    A = 2 * (S[:, 1:, :] - S[:, :1, :])
    b = (S[:, 1:, :] ** 2).sum(-1) - (S[:, :1, :] ** 2).sum(-1)
    ok = np.abs(np.linalg.det(A)) > 1e-300
    C = np.full((len(S), n), np.nan)
    C[ok] = np.linalg.solve(A[ok], b[ok][..., None])[..., 0]
    R = np.linalg.norm(C - S[:, 0, :], axis=1)
    inside = ok & np.all((C >= 0) & (C < region.side), axis=1)
    return C[inside], R[inside]


def saturated_packing_net(host, delta: float, gauge: Body | None = None, seed: int = 0,
                          stride: float | None = None, repair: bool = True) -> PointNet:
    """Net from a saturated packing of ``(delta/2)``-gauge copies in ``host``.

    ``host`` is a :class:`TorusRegion` or a body.  Candidates form a grid of
    ``stride`` (default ``delta/4``) shuffled by ``seed``.  With the Euclidean
    gauge on a torus, Delaunay repair makes the covering radius <= delta
    exactly and records it; otherwise a finer grid pass fills remaining holes.
    """
    if not delta > 0:
        raise BadParam("delta must be positive")
    dim = host.dim
    g = Gauge(gauge, dim)
    stride = delta / 4 if stride is None else float(stride)
    if stride >= delta / 2:
        raise BadParam("candidate stride must be < delta/2")
    period = host.side if isinstance(host, TorusRegion) else None
    cands, h = _candidate_grid(host, stride)
    if len(cands) == 0:
        raise BadParam("host contains no candidate grid points")
    order = stream(seed, "net").permutation(len(cands))
    pts = greedy_packing(cands[order], delta, g, period)
    net = PointNet(pts, delta, host, g, h)

    if isinstance(host, TorusRegion) and g.euclidean and dim <= 3 and len(pts) > dim + 1:
        radius = None
        if repair:
            for _ in range(100):
                C, R = periodic_delaunay_holes(net.points, host, delta)
                holes = C[R > delta * g.outer]
                if len(holes) == 0:
                    radius = float(R.max()) / g.outer if len(R) else 0.0
                    break
                before = len(net.points)
                holes = holes[np.argsort(-R[R > delta * g.outer], kind="stable")]
                net.points = greedy_packing(holes, delta, g, period, accepted=net.points)
                net.repaired += len(net.points) - before
        else:
            C, R = periodic_delaunay_holes(net.points, host, delta)
            radius = float(R.max()) / g.outer
        net.covering_radius = radius
    elif repair:
        fine, _ = _candidate_grid(host, h / 2)
        before = len(net.points)
        net.points = greedy_packing(fine[stream(seed, "net", 1).permutation(len(fine))], delta, g, period,
                                    accepted=net.points)
        net.repaired = len(net.points) - before
    return net
