"""Spherical caps on S^n, their normalised measure, erosion and circum-caps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from ..errors import BadParam, NotInHemisphere
from ..rng import CHUNK, chunk_map, chunk_ranges, stream


@lru_cache(maxsize=None)
def _half_integral(n: int) -> float:
    return quad(lambda t: math.sin(t) ** (n - 1), 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-13, limit=200)[0]


def cap_measure(n: int, phi: float) -> float:
    """Normalised measure ``Omega(phi)`` of a cap of angular radius ``phi`` on S^n.

    ``int_0^phi sin^(n-1) t dt / int_0^pi sin^(n-1) t dt`` by adaptive
    quadrature; caps beyond the hemisphere use ``1 - Omega(pi - phi)``.
    """
    if int(n) != n or n < 1:
        raise BadParam("n must be a positive integer")
    if not 0 <= phi <= math.pi:
        raise BadParam("phi must lie in [0, pi]")
    n = int(n)
    if phi > math.pi / 2:
        return 1.0 - cap_measure(n, math.pi - phi)
    if phi == 0:
        return 0.0
    num = quad(lambda t: math.sin(t) ** (n - 1), 0.0, phi, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return num / (2.0 * _half_integral(n))


def bw_bound_check(n: int, phi: float, t: float | None = None) -> dict:
    """Evaluate the three cap-measure estimates at ``(n, phi, t)``.

    lower:   Omega(phi) > sin^n(phi) / sqrt(2 pi (n+1))
    upper:   Omega(phi) < sin^n(phi) / (sqrt(2 pi n) cos(phi)), only if phi <= arccos(1/sqrt(n+1))
    scaling: Omega(t phi) < t^n Omega(phi), only if 1 < t < pi / (2 phi)

    Checks whose precondition fails are reported as ``None``.
    """
    if not 0 < phi < math.pi / 2:
        raise BadParam("phi must lie in (0, pi/2)")
    if n < 1:
        raise BadParam("n must be >= 1")
    om = cap_measure(n, phi)
    s = math.sin(phi)
    lower_rhs = s ** n / math.sqrt(2 * math.pi * (n + 1))
    out = {"n": n, "phi": phi, "t": t, "omega": om,
           "lower_rhs": lower_rhs, "lower_holds": om > lower_rhs,
           "upper_rhs": None, "upper_holds": None,
           "scaling_lhs": None, "scaling_rhs": None, "scaling_holds": None}
    if phi <= math.acos(1 / math.sqrt(n + 1)):
        upper_rhs = s ** n / (math.sqrt(2 * math.pi * n) * math.cos(phi))
        out.update(upper_rhs=upper_rhs, upper_holds=om < upper_rhs)
    if t is not None and 1 < t < math.pi / (2 * phi):
        lhs, rhs = cap_measure(n, t * phi), t ** n * om
        out.update(scaling_lhs=lhs, scaling_rhs=rhs, scaling_holds=lhs < rhs)
    return out


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class SphericalBody:
    dim: int  # the sphere is S^dim in R^(dim+1)

    def contains(self, U) -> np.ndarray:
        raise NotImplementedError

    def is_empty(self) -> bool:
        return False

    def _as_points(self, U):
        U = np.asarray(U, dtype=float)
        if U.ndim == 1:
            U = U[None, :]
        if U.shape[1] != self.dim + 1:
            raise BadParam(f"expected unit vectors in R^{self.dim + 1}")
        return U


class Cap(SphericalBody):
    """Closed cap ``C(u, phi)``: unit vectors within angle ``phi`` of ``u``."""

    def __init__(self, center, radius: float):
        c = np.asarray(center, dtype=float)
        norm = np.linalg.norm(c)
        if abs(norm - 1) > 1e-12:
            raise BadParam("cap center must be a unit vector")
        if not 0 < radius <= math.pi / 2 + 1e-15:
            raise BadParam("cap radius must lie in (0, pi/2]")
        self.center = c / norm
        self.radius = float(radius)
        self.dim = c.size - 1

    def contains(self, U):
        U = self._as_points(U)
        return U @ self.center >= math.cos(self.radius) - 1e-12

    def measure(self) -> float:
        return cap_measure(self.dim, self.radius)

    def __repr__(self):
        return f"Cap(center={self.center.tolist()}, radius={self.radius})"


class EmptySpherical(SphericalBody):
    def __init__(self, dim):
        self.dim = dim

    def contains(self, U):
        return np.zeros(len(self._as_points(U)), dtype=bool)

    def is_empty(self):
        return True

    def measure(self):
        return 0.0


class SphericalIndicator(SphericalBody):
    """Set on S^n given by a vectorised oracle on ``(N, n+1)`` arrays of unit vectors.

    ``reference`` is a point the set is organised around (used to aim
    rotation candidates); ``bounding_cap`` optionally encloses the set.
    """

    def __init__(self, oracle, dim: int, reference=None, bounding_cap: Cap | None = None, convex: bool = False):
        self.oracle = oracle
        self.dim = dim
        self.reference = None if reference is None else _unit(reference)
        self.bounding_cap = bounding_cap
        self.convex = convex

    def contains(self, U):
        U = self._as_points(U)
        out = np.zeros(len(U), dtype=bool)
        mask = self.bounding_cap.contains(U) if self.bounding_cap is not None else np.ones(len(U), bool)
        if mask.any():
            out[mask] = np.asarray(self.oracle(U[mask]), dtype=bool)
        return out

    def measure(self, samples: int = 10 ** 6, seed: int = 0) -> float:
        return sphere_measure(self, samples, seed)[0]

    def check_hemisphere(self, samples: int = 20000, seed: int = 0) -> bool:
        """Sample-based check that the support lies in an open hemisphere."""
        U = uniform_sphere(self.dim, samples, seed, "hemisphere")
        inside = U[self.contains(U)]
        if len(inside) == 0:
            return True
        try:
            spherical_circumradius(inside)
        except NotInHemisphere:
            return False
        return True


def uniform_sphere(n: int, count: int, seed: int, name: str = "mc") -> np.ndarray:
    """``count`` uniform points on S^n drawn chunk-wise from named streams."""
    def draw(chunk):
        idx, a, b = chunk
        g = stream(seed, name, idx).standard_normal((b - a, n + 1))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    parts = chunk_map(draw, chunk_ranges(count, CHUNK))
    return np.concatenate(parts) if parts else np.zeros((0, n + 1))


def sphere_measure(K: SphericalBody, samples: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo ``sigma(K)`` with a 3-sigma binomial error."""
    def count(chunk):
        idx, a, b = chunk
        g = stream(seed, "mc", idx).standard_normal((b - a, K.dim + 1))
        return int(K.contains(g / np.linalg.norm(g, axis=1, keepdims=True)).sum())

    hits = sum(chunk_map(count, chunk_ranges(samples, CHUNK)))
    p = hits / samples
    return p, 3 * math.sqrt(p * (1 - p) / samples)


def measure(K: SphericalBody, samples: int = 10 ** 6, seed: int = 0) -> float:
    if K.is_empty():
        return 0.0
    if isinstance(K, Cap):
        return K.measure()
    return sphere_measure(K, samples, seed)[0]


def tangent_points(U, directions, t):
    """Points at angle ``t`` from each row of ``U`` along each tangent direction.

    ``directions`` are unit vectors in R^n, mapped to the tangent space at u
    by the Householder reflection sending e_0 to u.
    """
    U = np.atleast_2d(U)
    N, d = U.shape
    D = np.zeros((len(directions), d))
    D[:, 1:] = directions
    v = U.copy()
    v[:, 0] -= 1.0
    v = -v  # v = e0 - u
    vv = (v * v).sum(axis=1)
    safe = vv > 1e-30
    proj = D @ v.T  # (M, N)
    coef = np.where(safe, 2.0 / np.where(safe, vv, 1.0), 0.0)
    W = D[None, :, :] - (coef[:, None] * proj.T)[:, :, None] * v[:, None, :]  # (N, M, d)
    return math.cos(t) * U[:, None, :] + math.sin(t) * W


def _erosion_directions(n, count=64):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        a = 2 * math.pi * np.arange(count) / count
        return np.column_stack([np.cos(a), np.sin(a)])
    g = stream(0, "erosion").standard_normal((count * n, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def spherical_erosion(K: SphericalBody, delta: float, rings: int = 4, directions: int = 64) -> SphericalBody:
    """``K_{-delta} = {u in K : C(u, delta) subset K}``.

    Caps erode exactly by radius subtraction.  Indicator bodies get an
    oracle that also tests ``rings`` circles of radii up to ``delta`` around
    the query point, each sampled in ``directions`` tangent directions.
    """
    if delta < 0:
        raise BadParam("delta must be nonnegative")
    if delta == 0 or K.is_empty():
        return K
    if isinstance(K, Cap):
        r = K.radius - delta
        return Cap(K.center, r) if r > 0 else EmptySpherical(K.dim)
    D = _erosion_directions(K.dim, directions)
    radii = delta * np.arange(1, rings + 1) / rings

    def oracle(U):
        ok = K.contains(U)
        for t in radii:
            if not ok.any():
                break
            idx = np.flatnonzero(ok)
            P = tangent_points(U[idx], D, t).reshape(-1, K.dim + 1)
            ok[idx] &= K.contains(P).reshape(len(idx), -1).all(axis=1)
        return ok

    bc = K.bounding_cap if isinstance(K, SphericalIndicator) else None
    ref = K.reference if isinstance(K, SphericalIndicator) else None
    return SphericalIndicator(oracle, K.dim, reference=ref, bounding_cap=bc,
                              convex=getattr(K, "convex", False))


# -- circum-cap ------------------------------------------------------------------

def _ball_on_boundary(R):
    """Smallest ball having every point of ``R`` on its boundary."""
    p0 = R[0]
    if len(R) == 1:
        return p0.copy(), 0.0
    Q = R[1:] - p0
    G = Q @ Q.T
    rhs = (Q * Q).sum(axis=1) / 2
    lam = np.linalg.lstsq(G, rhs, rcond=None)[0]
    c = p0 + lam @ Q
    return c, float(np.linalg.norm(R - c, axis=1).max())


def min_enclosing_ball(P, seed: int = 0):
    """Welzl's algorithm in the nested-loop form: recursion depth is the
    size of the boundary set (at most d + 1), not the number of points."""
    P = np.asarray(P, dtype=float)
    P = P[stream(seed, "welzl").permutation(len(P))]
    d = P.shape[1]

    def inside(p, ball):
        c, r = ball
        return np.linalg.norm(p - c) <= r * (1 + 1e-12) + 1e-14

    def solve(n_pts, boundary):
        ball = _ball_on_boundary(np.array(boundary)) if boundary else (P[0].copy(), 0.0)
        if len(boundary) == d + 1:
            return ball
        start = 0
        if not boundary:
            ball = (P[0].copy(), 0.0)
            start = 1
        for i in range(start, n_pts):
            if not inside(P[i], ball):
                ball = solve(i, boundary + [P[i]])
        return ball

    return solve(len(P), [])


def spherical_circumradius(points) -> dict:
    """Smallest cap containing the given unit vectors.

    The minimal enclosing Euclidean ball of the points meets the sphere in
    the circum-cap, so its centre direction is the cap centre.
    """
    U = _unit(np.atleast_2d(points))
    c, _ = min_enclosing_ball(U)
    norm = np.linalg.norm(c)
    if norm < 1e-12:
        raise NotInHemisphere("points are not contained in an open hemisphere")
    center = c / norm
    cosines = np.clip(U @ center, -1.0, 1.0)
    if cosines.min() <= 1e-12:
        raise NotInHemisphere("points are not contained in an open hemisphere")
    return {"center": center, "rho": float(np.arccos(cosines.min()))}
