"""Closed-form covering-density bounds and numeric checks of the inequalities behind them.

Infimum-type bounds are evaluated as the minimum over a parameter grid;
that grid minimum is the returned value.  A bounded scalar refinement
around the best grid point is recorded separately under
``parameters["refined"]`` for information only.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BadParam, BoundInfeasible, ZeroVolume
from .euclid.bodies import Ball, Body, HPolytope, Indicator, best_volume, inner_parallel_body, minkowski_difference, minkowski_sum
from .sphere.caps import Cap, SphericalIndicator, cap_measure, measure, spherical_erosion

GRID_POINTS = 64


@dataclass
class BoundResult:
    name: str
    value: float
    parameters: dict = field(default_factory=dict)
    attained_at: float | None = None


def rogers_bound(n: int) -> float:
    """``n ln n + n ln ln n + 5n``.  For n = 2 the middle term is negative; the
    value is returned unchanged with a warning."""
    if int(n) != n or n < 2:
        raise BadParam("rogers_bound needs an integer n >= 2")
    if n == 2:
        warnings.warn("n = 2: ln ln 2 < 0, the asymptotic formula is outside its intended range",
                      RuntimeWarning, stacklevel=2)
    return n * math.log(n) + n * math.log(math.log(n)) + 5 * n


def _grid_min(name, f, grid, params, refine=None):
    """Minimum of ``f`` over ``grid``; entries where ``f`` returns None are skipped."""
    vals, pts = [], []
    for x in grid:
        v = f(float(x))
        if v is not None and math.isfinite(v):
            vals.append(v)
            pts.append(float(x))
    if not vals:
        raise BoundInfeasible(f"{name}: no admissible parameter in the grid")
    k = int(np.argmin(vals))
    params = dict(params, grid_size=len(grid), admissible=len(vals))
    if refine and len(pts) >= 3:
        lo, hi = pts[max(k - 1, 0)], pts[min(k + 1, len(pts) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: f(math.exp(t)) or math.inf, bounds=(math.log(lo), math.log(hi)),
                                  method="bounded", options={"xatol": 1e-10})
            if res.success and math.isfinite(res.fun):
                params["refined"] = {"value": float(res.fun), "at": float(math.exp(res.x))}
    return BoundResult(name, float(vals[k]), params, pts[k])


def _log_grid(lo, hi, count=GRID_POINTS):
    return np.geomspace(lo, hi, count)


def _default_delta_grid(K: Body):
    lo, hi = K.bbox()
    scale = float(np.min(hi - lo)) / 2
    return _log_grid(scale * 1e-3, scale * 0.999)


def renbyanything_bound(K: Body, delta_grid=None, step: float | None = None) -> BoundResult:
    """``min_delta vol K / vol K_{-delta} * (1 + ln(vol K_{-delta/2} / vol B(o, delta/2)))``."""
    grid = _default_delta_grid(K) if delta_grid is None else np.asarray(delta_grid, float)
    if np.any(grid <= 0):
        raise BadParam("delta grid must be positive")
    volK = best_volume(K, step)
    if volK <= 0:
        raise ZeroVolume("K has zero volume")
    n = K.dim

    def f(delta):
        vd = best_volume(inner_parallel_body(K, delta, step), step)
        if vd <= 0:
            return None
        vh = best_volume(inner_parallel_body(K, delta / 2, step), step)
        vb = Ball(np.zeros(n), delta / 2).exact_volume()
        return volK / vd * (1 + math.log(vh / vb))

    exact = isinstance(K, (Ball, HPolytope))
    return _grid_min("renbyanything", f, grid, {"n": n, "vol_K": volK}, refine=exact)


def renbyanything_value(K: Body, delta: float, step: float | None = None) -> float | None:
    """The bracketed expression at a single ``delta`` (None if ``K_{-delta}`` is empty)."""
    try:
        return renbyanything_bound(K, [delta], step).value
    except BoundInfeasible:
        return None


def spherebyanything_bound(K, delta_grid=None, samples: int = 2 * 10 ** 5, seed: int = 0) -> BoundResult:
    """``min_delta sigma(K)/sigma(K_{-delta}) * (1 + ln(sigma(K_{-delta/2}) / Omega(delta/2)))``.

    Cap measures are closed-form quadratures; other sets are measured by
    Monte Carlo with ``samples`` points.
    """
    n = K.dim
    if delta_grid is None:
        top = K.radius if isinstance(K, Cap) else (K.bounding_cap.radius if getattr(K, "bounding_cap", None) else math.pi / 2)
        delta_grid = _log_grid(top * 1e-3, top * 0.999, GRID_POINTS if isinstance(K, Cap) else 12)
    grid = np.asarray(delta_grid, float)
    if np.any(grid <= 0):
        raise BadParam("delta grid must be positive")
    sK = measure(K, samples, seed)
    if sK <= 0:
        raise ZeroVolume("K has zero measure")

    def f(delta):
        Kd = spherical_erosion(K, delta)
        if Kd.is_empty():
            return None
        sd = measure(Kd, samples, seed)
        if sd <= 0:
            return None
        sh = measure(spherical_erosion(K, delta / 2), samples, seed)
        return sK / sd * (1 + math.log(sh / cap_measure(n, delta / 2)))

    return _grid_min("spherebyanything", f, grid, {"n": n, "sigma_K": sK}, refine=isinstance(K, Cap))


def spherebycaps_bound(n: int) -> BoundResult:
    """``(1 + n ln(2/eta)) (1/(1-eta))^n`` at ``eta = 1/(2 n ln n)``, with the
    headline ``n ln n + n ln ln n + 5n`` alongside."""
    if int(n) != n or n < 3:
        raise BadParam("spherebycaps_bound needs an integer n >= 3")
    eta = 1.0 / (2 * n * math.log(n))
    value = (1 + n * math.log(2 / eta)) * (1 / (1 - eta)) ** n
    return BoundResult("spherebycaps", value, {"n": n, "eta": eta, "headline": rogers_bound(n)}, eta)


def spherebyconvex_bound(n: int, sigmaK: float, rho: float, kappa_grid=None) -> BoundResult:
    """``min_kappa sigma_K / (sigma_K - Omega(rho)(1 - (1-kappa)^n)) * (2n + n ln(1/(kappa rho)))``

    over grid values of kappa with a positive denominator.
    """
    if not 0 < rho < math.pi / 2:
        raise BadParam("rho must lie in (0, pi/2)")
    om = cap_measure(n, rho)
    if not 0 < sigmaK <= om * (1 + 1e-9):
        raise BadParam("need 0 < sigmaK <= Omega(rho)")
    grid = _log_grid(1e-4, 0.999) if kappa_grid is None else np.asarray(kappa_grid, float)
    if np.any(grid <= 0):
        raise BadParam("kappa grid must be positive")

    def f(kappa):
        den = sigmaK - om * (1 - (1 - kappa) ** n) if kappa < 1 else sigmaK - om
        if den <= 0:
            return None
        return sigmaK / den * (2 * n + n * math.log(1 / (kappa * rho)))

    return _grid_min("spherebyconvex", f, grid, {"n": n, "sigma_K": sigmaK, "rho": rho, "omega_rho": om},
                     refine=True)


# -- sandwich bounds -------------------------------------------------------------

def reflect(L: Body) -> Body:
    if isinstance(L, HPolytope):
        return L.reflect()
    if isinstance(L, Ball):
        return Ball(-L.center, L.radius)
    lo, hi = L.bbox()
    return Indicator(lambda X: L.contains(-np.atleast_2d(X)), -hi, -lo, L.default_step())


def simple_sandwich_bounds(K: Body, L: Body, step: float | None = None) -> dict:
    """``lower = max(vol K / vol L, 1)`` and ``upper = vol(K - L) / vol L``."""
    volL = best_volume(L, step)
    if volL <= 0:
        raise ZeroVolume("L has zero volume")
    volK = best_volume(K, step)
    diff = minkowski_sum(K, reflect(L), step)
    vdiff = best_volume(diff, step)
    return {"lower": max(volK / volL, 1.0), "upper": vdiff / volL,
            "vol_K": volK, "vol_L": volL, "vol_K_minus_L": vdiff}


def lattice_translate_instance(K: HPolytope, L: HPolytope, step: float):
    """Lattice points of ``K`` against translates ``x + L`` with ``x`` on the
    same lattice inside ``K - L``."""
    from .euclid.bodies import grid_points
    from .hypercover import CoverInstance

    def lattice_in(P):
        lo, hi = P.bbox()
        lo = np.floor(lo / step) * step
        G = grid_points(lo, hi + step, step)
        G = np.round(G / step) * step
        return G[P.contains(G)]

    ground = lattice_in(K)
    D = minkowski_sum(K, L.reflect())
    centers = lattice_in(D)
    rows, cols = [], []
    for j, x in enumerate(centers):
        hit = np.flatnonzero(L.contains(ground - x))
        rows.extend([j] * len(hit))
        cols.extend(hit.tolist())
    used = np.unique(rows)
    remap = np.full(len(centers), -1)
    remap[used] = np.arange(len(used))
    inst = CoverInstance.from_pairs(len(ground), len(used), remap[np.asarray(rows, int)], cols,
                                    set_ids=used.tolist())
    return inst, ground, centers


def sandwich_check(K: HPolytope, L: HPolytope, step: float) -> dict:
    """Compare the fractional cover number of the lattice-discretised instance
    with the continuous sandwich bounds.

    With ``Q`` the lattice cell ``[-h/2, h/2]^n`` weak duality gives, for the
    discretised value,
      ``max(vol(K~Q)/vol(L+Q), 1) <= tau* <= vol((K-L)+Q) / vol(L~Q)``,
    so the tolerances are the gaps between these and the continuous bounds.
    All volumes are exact polygon volumes, so there is no sampling error.
    """
    from .hypercover import fractional_cover_lp

    n = K.dim
    Q = HPolytope.box(-np.full(n, step / 2), np.full(n, step / 2))
    sb = simple_sandwich_bounds(K, L)
    inst, ground, centers = lattice_translate_instance(K, L, step)
    method = "simplex" if max(inst.n_ground, inst.n_sets) <= 500 else "highs"
    tau_star = float(fractional_cover_lp(inst, method=method).total)
    KQ = minkowski_difference(K, Q)
    LQ = minkowski_difference(L, Q)
    v_KQ = best_volume(KQ)
    v_LplusQ = best_volume(minkowski_sum(L, Q))
    v_DplusQ = best_volume(minkowski_sum(minkowski_sum(K, L.reflect()), Q))
    v_LQ = best_volume(LQ)
    disc_lower = max(v_KQ / v_LplusQ, 1.0)
    disc_upper = v_DplusQ / v_LQ if v_LQ > 0 else math.inf
    tol_lower = sb["lower"] - disc_lower
    tol_upper = disc_upper - sb["upper"]
    ok = sb["lower"] - tol_lower - 1e-9 <= tau_star <= sb["upper"] + tol_upper + 1e-9
    return {"tau_star": tau_star, "lower": sb["lower"], "upper": sb["upper"],
            "tol_lower": tol_lower, "tol_upper": tol_upper, "mc_error": 0.0,
            "n_ground": inst.n_ground, "n_sets": inst.n_sets, "step": step, "holds": bool(ok)}


# -- scalar inequality checks -------------------------------------------------------

def lnnesszam_check(n_values) -> dict:
    """Evaluate the two links

        (1 + n ln(4 n ln n)) exp(1/ln n) <= (1 + n ln(4 n ln n))(1 + 2/ln n)
                                          <= n ln n + n ln ln n + 5n

    for each ``n`` and report where they hold.
    """
    rows = []
    for n in n_values:
        if n < 3:
            raise BadParam("n must be >= 3")
        a = 1 + n * math.log(4 * n * math.log(n))
        x = 1 / math.log(n)
        first = a * math.exp(x)
        middle = a * (1 + 2 * x)
        right = rogers_bound(n)
        rows.append({"n": n, "first": first, "middle": middle, "right": right,
                     "link1": first <= middle, "link2": middle <= right,
                     "chain": first <= middle <= right})
    xs = [1 / math.log(n) for n in n_values]
    grid = np.linspace(min(xs), max(xs), 10 ** 4) if xs else np.array([])
    scalar_ok = bool(np.all(np.exp(grid) <= 1 + 2 * grid))
    ns = [r["n"] for r in rows]

    def first_n(key):
        hits = [r["n"] for r in rows if r[key]]
        return min(hits) if hits else None

    # smallest sampled n from which the chain holds for every larger sampled n
    tail = None
    for r in sorted(rows, key=lambda r: r["n"], reverse=True):
        if not r["chain"]:
            break
        tail = r["n"]
    return {"rows": rows, "n_values": ns, "scalar_exp_ok": scalar_ok,
            "first_link1": first_n("link1"), "first_link2": first_n("link2"),
            "first_chain": first_n("chain"), "chain_holds_from": tail,
            "failures": [r["n"] for r in rows if not r["chain"]]}


def jordan_check(points: int = 10 ** 4) -> dict:
    x = np.linspace(0.0, math.pi / 2, points)
    bad = int(np.count_nonzero(2 * x / math.pi > np.sin(x)))
    return {"points": points, "violations": bad, "holds": bad == 0}


def bw_sweep(n_values=range(2, 21), phis=None, ts=(1.1, 1.5, 2.0)) -> list[dict]:
    """Run the three cap-measure estimates over a grid; inapplicable checks come back as None."""
    from .sphere.caps import bw_bound_check
    if phis is None:
        phis = np.linspace(0.05, math.pi / 2 - 0.05, 20)
    out = []
    for n in n_values:
        for phi in phis:
            for t in ts:
                out.append(bw_bound_check(int(n), float(phi), float(t)))
    return out
