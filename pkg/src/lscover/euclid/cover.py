"""Covering a flat torus by translates of a body through a delta-net.

The pipeline: a saturated packing net of the torus, candidate translates of
``K_{-delta}`` centred on a fine grid, greedy cover of the net, and a grid
certification that the chosen translates of ``K`` cover every grid point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import BadParam, InfeasibleInstance, NotConvex
from ..hypercover import CoverInstance, cheap_dual_bound, fractional_cover_lp, greedy_cover, is_cover
from ..report import CoverReport
from ..rng import chunk_map
from .bodies import Ball, Body, HPolytope, Indicator, best_volume, inner_parallel_body, minkowski_difference
from .nets import PointNet, TorusRegion, saturated_packing_net

_CENTER_CHUNK = 2048


@dataclass(frozen=True)
class CenterGrid:
    """Regular grid ``origin + step * i`` for ``0 <= i < shape``; flat ids in C order."""
    origin: np.ndarray
    step: float
    shape: tuple

    @classmethod
    def on_torus(cls, region: TorusRegion, stride: float):
        n = int(math.ceil(region.side / stride - 1e-9))
        return cls(np.zeros(region.dim), region.side / n, (n,) * region.dim)

    def __len__(self):
        return int(np.prod(self.shape))

    def points(self, ids=None) -> np.ndarray:
        ids = np.arange(len(self)) if ids is None else np.asarray(ids, dtype=np.int64)
        idx = np.stack(np.unravel_index(ids, self.shape), axis=1)
        return self.origin + idx * self.step


def _bounding_ball(B: Body):
    lo, hi = B.bbox()
    c = (lo + hi) / 2
    if isinstance(B, Ball):
        return B.center, B.radius
    if isinstance(B, HPolytope):
        return c, float(np.linalg.norm(B.vertices() - c, axis=1).max())
    return c, float(np.linalg.norm(hi - lo)) / 2


def build_translate_cover_instance(K: Body, L: Body, T: Body, net, centers, period: float | None = None) -> CoverInstance:
    """Net points against translates ``x + (L ~ T)``.

    ``net`` is a :class:`PointNet` or an array with ``K subset net + T``;
    ``centers`` is an array of translation vectors or a :class:`CenterGrid`.
    Ground ids are net point indices, candidate ids are centre indices;
    centres whose translate misses the net are dropped.  With ``period``
    set, differences are taken modulo the torus.
    """
    P = np.asarray(net.points if isinstance(net, PointNet) else net, dtype=float)
    X = centers.points() if isinstance(centers, CenterGrid) else np.atleast_2d(np.asarray(centers, float))
    if P.shape[1] != K.dim or X.shape[1] != K.dim:
        raise BadParam("net, centres and bodies must share a dimension")
    B = minkowski_difference(L, T)
    if B.is_empty():
        raise InfeasibleInstance("L ~ T is empty", list(range(len(P))))
    c0, radius = _bounding_ball(B)
    tree = cKDTree(_wrap(P, period) if period else P, boxsize=period)

    def work(item):
        start, stop = item
        Q = X[start:stop] + c0
        if period:
            Q = _wrap(Q, period)
        m = cKDTree(Q, boxsize=period).sparse_distance_matrix(tree, radius * (1 + 1e-9) + 1e-12,
                                                              output_type="ndarray")
        ci, pj = m["i"].astype(np.int64), m["j"].astype(np.int64)
        order = np.lexsort((pj, ci))
        ci, pj = ci[order], pj[order]
        d = P[pj] - X[start + ci] - c0
        if period:
            d -= period * np.round(d / period)
        ok = B.contains(d + c0)
        return ci[ok] + start, pj[ok]

    parts = chunk_map(work, [(s, min(s + _CENTER_CHUNK, len(X))) for s in range(0, len(X), _CENTER_CHUNK)])
    rows = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, np.int64)
    cols = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, np.int64)
    used = np.unique(rows)
    remap = np.full(len(X), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    inst = CoverInstance.from_pairs(len(P), len(used), remap[rows], cols, set_ids=used.tolist())
    if not inst.is_feasible:
        bad = inst.uncovered()
        raise InfeasibleInstance(f"{len(bad)} net point(s) lie in no candidate translate; use denser centres", bad)
    return inst


def _wrap(X, period):
    Y = np.mod(X, period)
    Y[Y >= period] = 0.0
    return Y


def _is_fundamental_domain(K: Body, region: TorusRegion) -> bool:
    if not isinstance(K, HPolytope):
        return False
    lo, hi = K.bbox()
    n = region.dim
    return bool(np.allclose(hi - lo, region.side, rtol=1e-12, atol=0)
                and math.isclose(K.exact_volume(), region.volume, rel_tol=1e-12)
                and len(K.b) == 2 * n)


def certify_torus_cover(K: Body, centers, region: TorusRegion, step: float) -> tuple[bool, int]:
    """Check that every point of the torus grid of ``step`` lies in some ``x + K`` (mod side).

    For indicator bodies a grid point counts as covered only if it and the
    corners of its half-cell neighbourhood are all covered, which guards
    against thin gaps between samples.
    """
    n = max(1, int(math.ceil(region.side / step - 1e-9)))
    h = region.side / n
    axes = [np.arange(n) * h] * region.dim
    G = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    probes = [np.zeros(region.dim)]
    if isinstance(K, Indicator):
        corners = np.array(np.meshgrid(*[[-0.5, 0.5]] * region.dim, indexing="ij")).reshape(region.dim, -1).T
        probes += list(corners * h)
    lo, hi = K.bbox()
    c0 = (lo + hi) / 2
    ok = np.ones(len(G), dtype=bool)
    for p in probes:
        covered = np.zeros(len(G), dtype=bool)
        for x in np.atleast_2d(centers):
            idx = np.flatnonzero(~covered)
            if len(idx) == 0:
                break
            d = G[idx] + p - x - c0
            d -= region.side * np.round(d / region.side)
            covered[idx] = K.contains(d + c0)
        ok &= covered
    return bool(ok.all()), int((~ok).sum())


def torus_cover_density(K: Body, region: TorusRegion, delta: float, seed: int = 0, stride: float | None = None,
                        cert_step: float | None = None, lp: bool = False, delta_grid=None) -> CoverReport:
    """Cover the torus by translates of ``K`` and report the density achieved.

    The net comes from a saturated packing of ``delta/2``-balls, the
    candidates are translates of ``K_{-delta}`` centred on a grid of
    ``stride`` (default ``delta/4``), and the greedy cover of the net is
    certified on a grid of ``cert_step`` (default and maximum ``delta/8``).
    """
    from ..bounds import renbyanything_bound, renbyanything_value

    if K.dim != region.dim:
        raise BadParam("body and torus dimensions differ")
    if not delta > 0:
        raise BadParam("delta must be positive")
    lo, hi = K.bbox()
    if np.any(hi - lo > region.side * (1 + 1e-12)):
        raise BadParam("K does not fit in the fundamental domain of the torus")
    cert_step = delta / 8 if cert_step is None else float(cert_step)
    if cert_step > delta / 8 * (1 + 1e-12):
        raise BadParam("certification step must be <= delta/8")
    cert_step = region.side / max(1, int(math.ceil(region.side / cert_step - 1e-9)))
    volK = best_volume(K)
    params = {"delta": delta, "seed": seed, "side": region.side, "dim": region.dim}

    if _is_fundamental_domain(K, region):
        return CoverReport("torus_cover", volK / region.volume, True, cert_step, {},
                           chosen_centers=[lo.tolist()], stats={"chosen": 1, "special_case": "fundamental_domain"},
                           params=params)

    Kd = inner_parallel_body(K, delta)
    if Kd.is_empty():
        raise BadParam("K_{-delta} is empty; decrease delta")
    net = saturated_packing_net(region, delta, seed=seed)
    grid = CenterGrid.on_torus(region, delta / 4 if stride is None else stride)
    inst = build_translate_cover_instance(K, K, Ball(np.zeros(region.dim), delta), net, grid, period=region.side)

    lower = cheap_dual_bound(inst)
    sel = greedy_cover(inst, lower)
    if not is_cover(inst, sel.chosen):
        raise InfeasibleInstance("greedy selection failed to cover the net")
    chosen = grid.points(sel.chosen)
    valid, missed = certify_torus_cover(K, chosen, region, cert_step)
    if net.covering_radius is not None and net.covering_radius > delta * (1 + 1e-9):
        valid = False

    vol_half = best_volume(inner_parallel_body(K, delta / 2))
    count_bound = vol_half / Ball(np.zeros(region.dim), delta / 2).exact_volume()
    d = inst.max_deg
    ls_factor = 1 + math.log(d)
    stats = {
        "net_size": len(net),
        "net_covering_radius": net.covering_radius,
        "net_min_separation": net.min_separation(),
        "net_repaired": net.repaired,
        "center_stride": grid.step,
        "n_candidates": len(grid),
        "n_nonempty_candidates": inst.n_sets,
        "chosen": len(sel),
        "max_deg": d,
        "max_deg_volume_bound": count_bound,
        "max_deg_within_volume_bound": bool(d <= count_bound * (1 + 1e-9)),
        "tau_star_lower": lower,
        "ls_factor": ls_factor,
        "ls_certified_by_lower_bound": bool(len(sel) < ls_factor * lower),
        "vol_K": volK,
        "vol_K_minus_delta": best_volume(Kd),
        "uncovered_grid_points": missed,
    }
    if lp:
        method = "simplex" if max(inst.n_ground, inst.n_sets) <= 500 else "highs"
        tau_star = float(fractional_cover_lp(inst, method=method).total)
        stats["tau_star"] = tau_star
        stats["ls_holds"] = bool(len(sel) < ls_factor * tau_star * (1 - 1e-9))

    bound = renbyanything_bound(K, delta_grid)
    bounds = {"renbyanything": bound.value, "renbyanything_at_delta": renbyanything_value(K, delta)}
    stats["renbyanything_attained_at"] = bound.attained_at
    density = len(sel) * volK / region.volume
    return CoverReport("torus_cover", density, valid, cert_step, bounds,
                       chosen_centers=chosen, stats=stats, params=params)


def reflection_intersection_volume(K: Body) -> dict:
    """Centre ``K`` at its centroid and compare ``vol(K cap -K)`` with ``vol(K) / 2^n``."""
    if not isinstance(K, HPolytope):
        raise NotConvex("needs a convex body given by an H-representation")
    c = K.centroid()
    Kc = K.translate(-c)
    vol = Kc.exact_volume()
    sym = Kc.intersect(Kc.reflect())
    vsym = sym.exact_volume() if not sym.is_empty() else 0.0
    ratio = vsym / vol if vol > 0 else math.nan
    return {"volK": vol, "volKcapMinusK": vsym, "ratio": ratio, "centroid": c,
            "holds": bool(vsym >= vol / 2 ** K.dim * (1 - 1e-12))}
