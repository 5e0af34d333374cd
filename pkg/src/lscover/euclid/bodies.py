"""Bodies in R^n and the Minkowski calculus on them.

Three representations are supported.  ``HPolytope`` (``A x <= b``) and
``Ball`` have exact paths for Minkowski differences, sums and volumes.
``Indicator`` wraps a vectorised membership oracle with a bounding box;
``Bitmap`` is the sampled form every grid operation produces.
"""
from __future__ import annotations

import base64
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.spatial import QhullError

from ..errors import BadParam, DimensionMismatch
from ..rng import CHUNK, chunk_map, chunk_ranges, stream

_TOL = 1e-12
DEFAULT_GRID_CELLS = 400


class Body:
    dim: int

    def contains(self, X) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def is_empty(self) -> bool:
        return False

    def default_step(self) -> float:
        lo, hi = self.bbox()
        return float(np.max(hi - lo)) / DEFAULT_GRID_CELLS or 1.0

    def _as_points(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.dim:
            raise DimensionMismatch(f"points of dimension {X.shape[1]} for a body in R^{self.dim}")
        return X


@dataclass(frozen=True, eq=False)
class EmptyBody(Body):
    dim: int

    def contains(self, X):
        return np.zeros(len(self._as_points(X)), dtype=bool)

    def bbox(self):
        z = np.zeros(self.dim)
        return z, z

    def is_empty(self):
        return True


class HPolytope(Body):
    """``{x : A x <= b}``; must be bounded (checked by LPs along the coordinate axes)."""

    def __init__(self, A, b, check: bool = True):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise BadParam("A and b disagree on the number of facets")
        self.A, self.b = A, b
        self.dim = A.shape[1]
        self._bbox = None
        self._verts = None
        if check:
            self.bbox()

    @classmethod
    def box(cls, lo, hi):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        n = lo.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([hi, -lo]))

    @classmethod
    def from_vertices(cls, V):
        V = np.asarray(V, dtype=float)
        hull = ConvexHull(V)
        eq = np.unique(np.round(hull.equations, 14), axis=0)
        return cls(eq[:, :-1], -eq[:, -1])

    def contains(self, X):
        X = self._as_points(X)
        scale = np.abs(self.b).max(initial=1.0)
        return np.all(X @ self.A.T <= self.b + _TOL * scale, axis=1)

    def chebyshev(self):
        """Centre and radius of the largest inscribed ball (radius < 0 means empty)."""
        n = self.dim
        norms = np.linalg.norm(self.A, axis=1)
        c = np.zeros(n + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=np.column_stack([self.A, norms]), b_ub=self.b,
                      bounds=[(None, None)] * n + [(None, 1e9)], method="highs")
        if res.status == 2:
            return None, -math.inf
        if res.status != 0:
            raise BadParam(f"Chebyshev LP failed: {res.message}")
        return res.x[:n], float(res.x[-1])

    def is_empty(self):
        _, r = self.chebyshev()
        return r < -1e-12

    def bbox(self):
        if self._bbox is None:
            lo, hi = np.empty(self.dim), np.empty(self.dim)
            for i in range(self.dim):
                for sign, out in ((1.0, lo), (-1.0, hi)):
                    c = np.zeros(self.dim)
                    c[i] = sign
                    res = linprog(c, A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * self.dim, method="highs")
                    if res.status == 3:
                        raise BadParam("HPolytope is unbounded")
                    if res.status == 2:
                        z = np.zeros(self.dim)
                        self._bbox = (z, z)
                        return self._bbox
                    out[i] = sign * res.fun
            self._bbox = (lo, hi)
        return self._bbox

    def vertices(self) -> np.ndarray:
        if self._verts is None:
            center, r = self.chebyshev()
            if r < -1e-12:
                self._verts = np.zeros((0, self.dim))
            elif r > 1e-9:
                hs = HalfspaceIntersection(np.column_stack([self.A, -self.b]), center)
                self._verts = _dedupe(hs.intersections)
            else:
                self._verts = self._enumerate_vertices()
        return self._verts

    def _enumerate_vertices(self):
        pts = []
        for rows in itertools.combinations(range(len(self.b)), self.dim):
            M = self.A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            x = np.linalg.solve(M, self.b[list(rows)])
            if self.contains(x)[0]:
                pts.append(x)
        return _dedupe(np.array(pts).reshape(-1, self.dim))

    def support(self, u) -> float:
        """``h(u) = max_{x in P} <u, x>``."""
        u = np.asarray(u, dtype=float)
        if self.dim <= 3:
            V = self.vertices()
            return float((V @ u).max())
        res = linprog(-u, A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * self.dim, method="highs")
        return float(-res.fun)

    def translate(self, v):
        return HPolytope(self.A, self.b + self.A @ np.asarray(v, float), check=False)

    def reflect(self):
        return HPolytope(-self.A, self.b, check=False)

    def intersect(self, other: "HPolytope"):
        return HPolytope(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]), check=False)

    def exact_volume(self) -> float:
        V = self.vertices()
        if len(V) <= self.dim:
            return 0.0
        if self.dim == 1:
            return float(V.max() - V.min())
        try:
            return float(ConvexHull(V).volume)
        except QhullError:
            return 0.0

    def centroid(self) -> np.ndarray:
        V = self.vertices()
        if self.dim == 1:
            return np.array([(V.max() + V.min()) / 2])
        hull = ConvexHull(V)
        inner = V.mean(axis=0)
        vols, cents = [], []
        for simplex in hull.simplices:
            P = np.vstack([V[simplex], inner])
            vols.append(abs(np.linalg.det(P[:-1] - inner)) / math.factorial(self.dim))
            cents.append(P.mean(axis=0))
        vols = np.array(vols)
        return (np.array(cents) * vols[:, None]).sum(axis=0) / vols.sum()

    def __repr__(self):
        return f"HPolytope(m={len(self.b)}, n={self.dim})"


class Ball(Body):
    """Euclidean ball; radius 0 is the single point ``{center}``."""

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float).reshape(-1)
        self.radius = float(radius)
        if self.radius < 0:
            raise BadParam("ball radius must be nonnegative")
        self.dim = self.center.size

    def contains(self, X):
        X = self._as_points(X)
        d2 = ((X - self.center) ** 2).sum(axis=1)
        r = self.radius * (1 + _TOL) + _TOL
        return d2 <= r * r

    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def exact_volume(self):
        n = self.dim
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius ** n

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Indicator(Body):
    """Measurable set given by ``oracle(X) -> bool array`` for an ``(N, n)`` array.

    ``bbox`` must contain every point where the oracle is true.
    """

    def __init__(self, oracle, lo, hi, resolution_hint: float | None = None):
        self.oracle = oracle
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.dim = self.lo.size
        self.resolution_hint = resolution_hint

    def contains(self, X):
        X = self._as_points(X)
        inside = np.all((X >= self.lo) & (X <= self.hi), axis=1)
        out = np.zeros(len(X), dtype=bool)
        if inside.any():
            out[inside] = np.asarray(self.oracle(X[inside]), dtype=bool)
        return out

    def bbox(self):
        return self.lo, self.hi

    def default_step(self):
        return self.resolution_hint or super().default_step()

    def spot_check_bbox(self, step=None, margin=3) -> bool:
        """True if the oracle is false on a ring of grid cells just outside the bbox."""
        step = step or self.default_step()
        lo, hi = self.lo - margin * step, self.hi + margin * step
        pts = grid_points(lo, hi, step)
        outside = ~np.all((pts >= self.lo) & (pts <= self.hi), axis=1)
        return not np.any(np.asarray(self.oracle(pts[outside]), dtype=bool))


class Bitmap(Indicator):
    """Sampled body: cell ``i`` is centred at ``origin + i * step``."""

    def __init__(self, origin, step, mask):
        self.origin = np.asarray(origin, dtype=float)
        self.step = float(step)
        self.mask = np.asarray(mask, dtype=bool)
        shape = np.array(self.mask.shape)
        super().__init__(self._lookup, self.origin - step / 2, self.origin + (shape - 0.5) * step, step)

    def _lookup(self, X):
        idx = np.rint((X - self.origin) / self.step).astype(np.int64)
        shape = np.array(self.mask.shape)
        ok = np.all((idx >= 0) & (idx < shape), axis=1)
        out = np.zeros(len(X), dtype=bool)
        out[ok] = self.mask[tuple(idx[ok].T)]
        return out

    def is_empty(self):
        return not self.mask.any()

    def cell_centers(self) -> np.ndarray:
        idx = np.argwhere(self.mask)
        return self.origin + idx * self.step


def _dedupe(P, tol=1e-9):
    if len(P) == 0:
        return P
    keep = []
    for p in P:
        if not any(np.linalg.norm(p - q) < tol for q in keep):
            keep.append(p)
    return np.array(keep)


def grid_points(lo, hi, step) -> np.ndarray:
    axes = [np.arange(a, b + step * 0.5, step) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def rasterize(K: Body, step: float, lo=None, hi=None, pad: int = 1) -> Bitmap:
    """Sample ``K`` on the lattice ``origin + step * Z^n`` covering its bbox plus ``pad`` cells."""
    blo, bhi = K.bbox()
    lo = blo if lo is None else np.asarray(lo, float)
    hi = bhi if hi is None else np.asarray(hi, float)
    origin = np.floor(lo / step) * step - pad * step
    shape = tuple(int(s) for s in np.ceil((hi - origin) / step).astype(int) + pad + 1)
    axes = [origin[i] + step * np.arange(shape[i]) for i in range(K.dim)]
    mask = np.zeros(shape, dtype=bool)
    # rasterise slab by slab along the first axis to bound memory
    rest = np.stack([m.ravel() for m in np.meshgrid(*axes[1:], indexing="ij")], axis=1) if K.dim > 1 else np.zeros((1, 0))
    for i, x0 in enumerate(axes[0]):
        pts = np.column_stack([np.full(len(rest), x0), rest])
        mask[i] = K.contains(pts).reshape(shape[1:])
    return Bitmap(origin, step, mask)


def _lattice_offsets(T: Body, step: float) -> np.ndarray:
    """Integer offsets ``j`` with ``j * step`` in ``T``; falls back to the nearest lattice point."""
    lo, hi = T.bbox()
    jlo, jhi = np.floor(lo / step).astype(int), np.ceil(hi / step).astype(int)
    axes = [np.arange(a, b + 1) for a, b in zip(jlo, jhi)]
    J = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    inside = T.contains(J * step)
    if not inside.any():
        center = (lo + hi) / 2
        return np.rint(center / step).astype(int)[None, :]
    return J[inside]


# -- Minkowski calculus ------------------------------------------------------

def minkowski_difference(K: Body, T: Body, step: float | None = None) -> Body:
    """``K ~ T = {x : T + x subset K}``.

    Exact for polytope or ball ``K`` against a ball, and for polytope against
    polytope (facet offsets by support values).  Everything else is eroded
    on a grid of the given ``step`` (default: the body's resolution hint).
    An empty result is returned as :class:`EmptyBody`, not raised.
    """
    if K.dim != T.dim:
        raise DimensionMismatch(f"dimensions {K.dim} and {T.dim}")
    if K.is_empty():
        return EmptyBody(K.dim)
    if isinstance(T, Ball):
        if isinstance(K, HPolytope):
            return _nonempty(HPolytope(K.A, K.b - K.A @ T.center - T.radius * np.linalg.norm(K.A, axis=1), check=False))
        if isinstance(K, Ball):
            if T.radius > K.radius:
                return EmptyBody(K.dim)
            return Ball(K.center - T.center, K.radius - T.radius)
    if isinstance(T, HPolytope) and isinstance(K, HPolytope):
        if T.is_empty():
            raise BadParam("Minkowski difference by the empty set is unbounded")
        h = np.array([T.support(a) for a in K.A])
        out = _nonempty(HPolytope(K.A, K.b - h, check=False))
        if not out.is_empty() and K.dim <= 3:
            # vertex containment cross-check: x + T inside K for each vertex x
            for x in out.vertices():
                if not np.all(K.contains(T.vertices() + x)):
                    raise AssertionError("facet-offset Minkowski difference failed containment check")
        return out
    return grid_erosion(K, T, step or K.default_step())


def _nonempty(P: HPolytope) -> Body:
    return EmptyBody(P.dim) if P.is_empty() else P


def grid_erosion(K: Body, T: Body, step: float) -> Body:
    """Sampled ``K ~ T``: lattice cell ``g`` is kept iff ``g + j`` is inside ``K``
    for every lattice offset ``j`` in ``T``."""
    bm = K if isinstance(K, Bitmap) and math.isclose(K.step, step) else rasterize(K, step)
    shape = bm.mask.shape
    if isinstance(T, Ball):
        dist = ndimage.distance_transform_edt(np.pad(bm.mask, 1))[(slice(1, -1),) * K.dim] * step
        c = np.rint(T.center / step).astype(int)
        eroded = _window(dist > T.radius * (1 + 1e-12), c, shape)
    else:
        kern, lo = _kernel(T, step)
        pad = np.array(kern.shape) + np.abs(lo)
        outside = np.pad((~bm.mask).astype(float), [(int(p), int(p)) for p in pad], constant_values=1.0)
        flipped = kern[(slice(None, None, -1),) * K.dim]
        hits = signal.fftconvolve(outside, flipped, mode="full")
        eroded = _window(hits, pad + np.array(kern.shape) - 1 + lo, shape) < 0.5
    out = Bitmap(bm.origin, step, eroded)
    return EmptyBody(K.dim) if out.is_empty() else out


def grid_dilation(K: Body, T: Body, step: float) -> Bitmap:
    """Sampled ``K + T``: cell ``g`` is set iff ``g - j`` is in ``K`` for some offset ``j`` in ``T``."""
    lo_k, hi_k = K.bbox()
    lo_t, hi_t = T.bbox()
    bm = rasterize(K, step, lo_k + lo_t, hi_k + hi_t, pad=2)
    kern, lo = _kernel(T, step)
    hits = signal.fftconvolve(bm.mask.astype(float), kern, mode="full")
    return Bitmap(bm.origin, step, _window(hits, -lo, bm.mask.shape) > 0.5)


def _kernel(T: Body, step: float):
    J = _lattice_offsets(T, step)
    lo = J.min(axis=0)
    kern = np.zeros(tuple(J.max(axis=0) - lo + 1))
    kern[tuple((J - lo).T)] = 1.0
    return kern, lo


def _window(arr, start, shape):
    """``out[g] = arr[g + start]`` with zero fill outside ``arr``."""
    out = np.zeros(shape, dtype=arr.dtype)
    src, dst = [], []
    for s, n, m in zip(start, shape, arr.shape):
        s = int(s)
        a, b = max(0, -s), min(n, m - s)
        if b <= a:
            return out
        dst.append(slice(a, b))
        src.append(slice(a + s, b + s))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def inner_parallel_body(K: Body, delta: float, step: float | None = None) -> Body:
    """``K_{-delta} = K ~ B(o, delta)``."""
    if delta < 0:
        raise BadParam("delta must be nonnegative")
    if delta == 0:
        return K
    return minkowski_difference(K, Ball(np.zeros(K.dim), delta), step)


def minkowski_sum(K: Body, T: Body, step: float | None = None) -> Body:
    """``K + T``: exact for polytope+polytope and ball+ball, grid dilation otherwise."""
    if K.dim != T.dim:
        raise DimensionMismatch(f"dimensions {K.dim} and {T.dim}")
    if isinstance(K, HPolytope) and isinstance(T, HPolytope):
        V, W = K.vertices(), T.vertices()
        return HPolytope.from_vertices((V[:, None, :] + W[None, :, :]).reshape(-1, K.dim))
    if isinstance(K, Ball) and isinstance(T, Ball):
        return Ball(K.center + T.center, K.radius + T.radius)
    return grid_dilation(K, T, step or min(K.default_step(), T.default_step()))


# -- volumes -----------------------------------------------------------------

@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    error_estimate: float
    method: str


def volume(K: Body, method: str = "exact", param=None) -> VolumeEstimate:
    """Volume of ``K``.

    ``method``:
      * ``"exact"`` for ``HPolytope`` (n <= 3 via convex hull) and ``Ball``;
      * ``"grid"`` with ``param`` = grid step; error is the measure of the
        boundary cells;
      * ``"monte_carlo"`` with ``param = {"samples": N, "seed": s}``; bbox
        rejection sampling, error = 3 binomial standard deviations.
    """
    if K.is_empty():
        return VolumeEstimate(0.0, 0.0, method)
    if method == "exact":
        if isinstance(K, Ball):
            return VolumeEstimate(K.exact_volume(), 0.0, method)
        if isinstance(K, HPolytope) and K.dim <= 3:
            return VolumeEstimate(K.exact_volume(), 0.0, method)
        if isinstance(K, Bitmap):
            return volume(K, "grid", K.step)
        raise BadParam(f"no exact volume for {type(K).__name__} in R^{K.dim}")
    if method == "grid":
        step = float(param) if param is not None else K.default_step()
        if step <= 0:
            raise BadParam("grid step must be positive")
        bm = K if isinstance(K, Bitmap) and math.isclose(K.step, step) else rasterize(K, step)
        cell = step ** K.dim
        boundary = bm.mask & ~ndimage.binary_erosion(bm.mask, border_value=0)
        return VolumeEstimate(float(bm.mask.sum()) * cell, float(boundary.sum()) * cell, method)
    if method == "monte_carlo":
        param = param or {}
        samples = int(param.get("samples", 10 ** 6))
        seed = int(param.get("seed", 0))
        if samples <= 0:
            raise BadParam("samples must be positive")
        lo, hi = K.bbox()
        box = float(np.prod(hi - lo))

        def count(chunk):
            idx, a, b = chunk
            rng = stream(seed, "mc", idx)
            X = lo + (hi - lo) * rng.random((b - a, K.dim))
            return int(K.contains(X).sum())

        hits = sum(chunk_map(count, chunk_ranges(samples, CHUNK)))
        p = hits / samples
        return VolumeEstimate(box * p, 3 * box * math.sqrt(p * (1 - p) / samples), method)
    raise BadParam(f"unknown volume method {method!r}")


def best_volume(K: Body, step: float | None = None) -> float:
    """Exact volume where available, otherwise a grid estimate."""
    if K.is_empty():
        return 0.0
    if isinstance(K, Ball) or (isinstance(K, HPolytope) and K.dim <= 3):
        return volume(K, "exact").value
    return volume(K, "grid", step).value


# -- JSON body files -----------------------------------------------------------

def body_to_json(K: Body) -> dict:
    if isinstance(K, HPolytope):
        return {"type": "hpolytope", "A": K.A.tolist(), "b": K.b.tolist()}
    if isinstance(K, Ball):
        return {"type": "ball", "center": K.center.tolist(), "radius": K.radius}
    if isinstance(K, Bitmap):
        rows = [base64.b64encode(np.packbits(r.ravel()).tobytes()).decode("ascii") for r in K.mask]
        return {"type": "bitmap", "origin": K.origin.tolist(), "step": K.step,
                "shape": list(K.mask.shape), "data": rows}
    raise BadParam(f"{type(K).__name__} has no file representation")


def body_from_json(d: dict) -> Body:
    kind = d.get("type")
    if kind == "hpolytope":
        return HPolytope(d["A"], d["b"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "bitmap":
        shape = tuple(d["shape"])
        per_row = int(np.prod(shape[1:])) if len(shape) > 1 else 1
        rows = [np.unpackbits(np.frombuffer(base64.b64decode(r), dtype=np.uint8))[:per_row] for r in d["data"]]
        if len(rows) != shape[0]:
            raise BadParam("bitmap row count does not match shape")
        mask = np.array(rows, dtype=bool).reshape(shape)
        return Bitmap(d["origin"], d["step"], mask)
    raise BadParam(f"unknown body type {kind!r}")
