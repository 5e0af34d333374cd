"""Finite set cover: greedy, fractional (LP) and exact solvers.

A :class:`CoverInstance` is a hypergraph on a finite ground set.  The greedy
solver repeatedly picks the candidate covering the most uncovered elements;
the Lovász-Stein inequality bounds its output by ``(1 + ln d) * tau*`` where
``d`` is the largest candidate cardinality and ``tau*`` the fractional
covering number.  :func:`verify_ls_bound` checks that inequality on a
concrete instance.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import BadParam, InfeasibleInstance, SizeLimitExceeded
from .rng import stream
from .simplex import simplex_max

DENSE_CAP = 500
FEASIBILITY_TOL = 1e-9


def _gather(indptr, indices, rows):
    """Concatenate the CSR rows listed in ``rows``."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return indices[:0]
    starts = indptr[rows]
    lens = indptr[rows + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return indices[:0]
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return indices[np.arange(total) + offs]


class CoverInstance:
    """Immutable hypergraph ``(ground, sets, incidence)``.

    Candidates are stored sorted by id so that position order is id order;
    the greedy tie-break relies on this.  Internally both incidence
    directions are kept as CSR arrays of positions.
    """

    def __init__(self, ground, sets, incidence):
        ground = list(ground)
        sets = list(sets)
        if len(incidence) != len(sets):
            raise BadParam("incidence must have one entry per candidate")
        gpos = {g: i for i, g in enumerate(ground)}
        if len(gpos) != len(ground):
            raise BadParam("duplicate ground element")
        rows, cols = [], []
        for j, members in enumerate(incidence):
            for e in members:
                try:
                    cols.append(gpos[e])
                except KeyError:
                    raise BadParam(f"candidate {sets[j]!r} contains unknown element {e!r}") from None
                rows.append(j)
        self._init_arrays(ground, sets, np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))

    @classmethod
    def from_pairs(cls, n_ground, n_sets, set_pos, elem_pos, ground_ids=None, set_ids=None):
        """Build from parallel arrays of (candidate position, element position) pairs."""
        self = cls.__new__(cls)
        ground = list(range(n_ground)) if ground_ids is None else list(ground_ids)
        sets = list(range(n_sets)) if set_ids is None else list(set_ids)
        self._init_arrays(ground, sets, np.asarray(set_pos, dtype=np.int64), np.asarray(elem_pos, dtype=np.int64))
        return self

    def _init_arrays(self, ground, sets, rows, cols):
        order = sorted(range(len(sets)), key=lambda j: sets[j])
        if len(set(sets)) != len(sets):
            raise BadParam("duplicate candidate id")
        rank = np.empty(len(sets), dtype=np.int64)
        rank[order] = np.arange(len(sets))
        self.ground = tuple(ground)
        self.sets = tuple(sets[j] for j in order)
        k, m = len(ground), len(sets)
        rows = rank[rows] if rows.size else rows
        if rows.size:
            key = np.unique(rows * max(k, 1) + cols)
            rows, cols = key // max(k, 1), key % max(k, 1)
        self.set_indptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=m), out=self.set_indptr[1:])
        self.set_elems = cols.astype(np.int64)
        eorder = np.lexsort((rows, cols))
        self.elem_indptr = np.zeros(k + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=k), out=self.elem_indptr[1:])
        self.elem_sets = rows[eorder].astype(np.int64)
        for arr in (self.set_indptr, self.set_elems, self.elem_indptr, self.elem_sets):
            arr.flags.writeable = False

    @property
    def n_ground(self) -> int:
        return len(self.ground)

    @property
    def n_sets(self) -> int:
        return len(self.sets)

    @property
    def set_sizes(self) -> np.ndarray:
        return np.diff(self.set_indptr)

    @property
    def max_deg(self) -> int:
        return int(self.set_sizes.max()) if self.n_sets else 0

    def members(self, j: int) -> np.ndarray:
        """Element positions of candidate position ``j``."""
        return self.set_elems[self.set_indptr[j]:self.set_indptr[j + 1]]

    def containing(self, i: int) -> np.ndarray:
        return self.elem_sets[self.elem_indptr[i]:self.elem_indptr[i + 1]]

    @property
    def incidence(self) -> list[list]:
        g = self.ground
        return [[g[i] for i in self.members(j)] for j in range(self.n_sets)]

    @property
    def reverse_incidence(self) -> list[list]:
        s = self.sets
        return [[s[j] for j in self.containing(i)] for i in range(self.n_ground)]

    def uncovered(self) -> list:
        deg = np.diff(self.elem_indptr)
        return [self.ground[i] for i in np.flatnonzero(deg == 0)]

    @property
    def is_feasible(self) -> bool:
        return bool(np.all(np.diff(self.elem_indptr) > 0))

    def require_feasible(self):
        bad = self.uncovered()
        if bad:
            raise InfeasibleInstance(f"{len(bad)} ground element(s) lie in no candidate, e.g. {bad[:5]}", bad)

    def dense_matrix(self) -> np.ndarray:
        """Element-by-candidate 0/1 matrix."""
        A = np.zeros((self.n_ground, self.n_sets), dtype=np.int8)
        A[self.set_elems, np.repeat(np.arange(self.n_sets), self.set_sizes)] = 1
        return A

    def sparse_matrix(self):
        from scipy.sparse import csc_matrix
        data = np.ones(self.set_elems.size)
        return csc_matrix((data, self.set_elems, self.set_indptr), shape=(self.n_ground, self.n_sets))

    def __repr__(self):
        return f"CoverInstance(|ground|={self.n_ground}, |sets|={self.n_sets}, max_deg={self.max_deg})"


@dataclass
class FractionalWeights:
    weights: dict
    total: object
    dual_lower: float | None = None  # value of a feasible packing, a certified lower bound on tau*
    method: str = "simplex"

    def coverage(self, instance: CoverInstance) -> np.ndarray:
        x = np.array([float(self.weights.get(s, 0)) for s in instance.sets])
        return np.bincount(instance.set_elems, weights=np.repeat(x, instance.set_sizes), minlength=instance.n_ground)


@dataclass
class CoverSelection:
    chosen: list
    certificate: float | None = None
    positions: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.chosen)


def greedy_cover(instance: CoverInstance, tau_star=None) -> CoverSelection:
    """Greedy set cover; ties go to the lowest candidate id.

    If ``tau_star`` is given the selection records the Lovász-Stein
    certificate ``(1 + ln max_deg) * tau_star``.
    """
    instance.require_feasible()
    gains = instance.set_sizes.astype(np.int64).copy()
    covered = np.zeros(instance.n_ground, dtype=bool)
    remaining = instance.n_ground
    picks = []
    while remaining:
        j = int(np.argmax(gains))  # first maximum == lowest id
        new = instance.members(j)
        new = new[~covered[new]]
        covered[new] = True
        remaining -= new.size
        picks.append(j)
        hit = _gather(instance.elem_indptr, instance.elem_sets, new)
        gains -= np.bincount(hit, minlength=instance.n_sets)
    cert = None
    if tau_star is not None and instance.n_ground:
        cert = (1 + math.log(instance.max_deg)) * float(tau_star)
    return CoverSelection([instance.sets[j] for j in picks], cert, picks)


def is_cover(instance: CoverInstance, chosen) -> bool:
    pos = {s: j for j, s in enumerate(instance.sets)}
    covered = np.zeros(instance.n_ground, dtype=bool)
    for s in chosen:
        covered[instance.members(pos[s])] = True
    return bool(covered.all())


def lp_bracket(instance: CoverInstance, x, y) -> tuple[float, float]:
    """Rigorous bracket on tau* from any nonnegative primal ``x`` and dual ``y``.

    ``x`` is rescaled until it covers every element at least once, ``y``
    until it loads every candidate at most once; by weak duality the
    rescaled totals sandwich the optimum.
    """
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    y = np.maximum(np.asarray(y, dtype=float), 0.0)
    cov = np.bincount(instance.set_elems, weights=np.repeat(x, instance.set_sizes), minlength=instance.n_ground)
    owner = np.repeat(np.arange(instance.n_sets), instance.set_sizes)
    load = np.bincount(owner, weights=y[instance.set_elems], minlength=instance.n_sets)
    upper = math.fsum(x) / cov.min() if cov.size and cov.min() > 0 else math.inf
    lower = math.fsum(y) / load.max() if load.size and load.max() > 0 else 0.0
    return lower, upper


def cheap_dual_bound(instance: CoverInstance) -> float:
    """``sum_e 1 / max_{S ni e} |S|``: a feasible packing, hence a lower bound on tau*."""
    instance.require_feasible()
    if not instance.n_ground:
        return 0.0
    best = np.maximum.reduceat(instance.set_sizes[instance.elem_sets], instance.elem_indptr[:-1])
    return math.fsum(1.0 / best)


def fractional_cover_lp(instance: CoverInstance, tol: float = FEASIBILITY_TOL, exact: bool = False,
                        method: str = "simplex") -> FractionalWeights:
    """Optimal fractional cover ``min sum x_S  s.t.  sum_{S ni e} x_S >= 1, x >= 0``.

    ``method="simplex"`` solves the packing dual with the dense Bland-rule
    simplex (``exact=True`` for rational arithmetic) and is limited to
    ``DENSE_CAP`` elements and candidates.  ``method="highs"`` hands large
    sparse instances to scipy's HiGHS and checks the answer with a
    weak-duality bracket.
    """
    if tol <= 0:
        raise BadParam("tol must be positive")
    instance.require_feasible()
    if instance.n_ground == 0:
        return FractionalWeights({}, Fraction(0) if exact else 0.0, 0.0, method)
    if method == "simplex":
        if instance.n_ground > DENSE_CAP or instance.n_sets > DENSE_CAP:
            raise SizeLimitExceeded(
                f"dense simplex handles at most {DENSE_CAP}x{DENSE_CAP}; got {instance.n_ground}x{instance.n_sets}")
        A = instance.dense_matrix()
        res = simplex_max(A.T, np.ones(instance.n_sets, dtype=int), np.ones(instance.n_ground, dtype=int), exact=exact)
        if exact:
            x = list(res.prices)
            total = sum(x, Fraction(0))
            lower = float(total)
        else:
            x = np.maximum(res.prices.astype(float), 0.0)
            lower, _ = lp_bracket(instance, x, res.y.astype(float))
            total = math.fsum(x)
    elif method == "highs":
        from scipy.optimize import linprog
        A = instance.sparse_matrix()
        res = linprog(np.ones(instance.n_sets), A_ub=-A, b_ub=-np.ones(instance.n_ground),
                      bounds=(0, None), method="highs")
        if res.status != 0:
            raise InfeasibleInstance(f"HiGHS failed: {res.message}")
        x = np.maximum(res.x, 0.0)
        y = np.maximum(-res.ineqlin.marginals, 0.0)
        lower, _ = lp_bracket(instance, x, y)
        total = math.fsum(x)
    else:
        raise BadParam(f"unknown LP method {method!r}")

    fw = FractionalWeights({s: w for s, w in zip(instance.sets, x)}, total, lower, method)
    if not exact:
        cov = fw.coverage(instance)
        if cov.min() < 1 - tol:
            raise SizeLimitExceeded(f"LP solution violates coverage by {1 - cov.min():.3g} > tol")
        if total - lower > tol * max(1.0, total):
            raise SizeLimitExceeded(f"LP duality gap {total - lower:.3g} exceeds tol")
    return fw


def exact_cover_bruteforce(instance: CoverInstance, size_cap: int | None = None, lp_depth: int = 1) -> int:
    """Minimum cover cardinality tau by branch and bound.

    Branches on the uncovered element with the fewest usable candidates.
    Nodes are pruned by a cheap packing bound and, near the root, by the LP
    bound.  Without ``size_cap`` instances are limited to 40 candidates; with
    it the search only looks for covers of at most ``size_cap`` sets and
    raises :class:`SizeLimitExceeded` if there is none.
    """
    if size_cap is None and instance.n_sets > 40:
        raise SizeLimitExceeded(f"{instance.n_sets} candidates > 40 and no size_cap given")
    instance.require_feasible()
    if instance.n_ground == 0:
        return 0
    k, m = instance.n_ground, instance.n_sets
    masks = [0] * m
    for j in range(m):
        v = 0
        for e in instance.members(j):
            v |= 1 << int(e)
        masks[j] = v
    elem_sets = [list(map(int, instance.containing(i))) for i in range(k)]

    greedy = len(greedy_cover(instance))
    found = size_cap is None or size_cap >= greedy
    best = greedy if found else size_cap + 1

    def lower_bound(U, allowed):
        sizes = [(masks[j] & U).bit_count() if (allowed >> j) & 1 else 0 for j in range(m)]
        lb = 0.0
        u = U
        while u:
            low = u & -u
            e = low.bit_length() - 1
            mx = max(sizes[j] for j in elem_sets[e])
            if mx == 0:
                return math.inf, sizes
            lb += 1.0 / mx
            u ^= low
        return lb, sizes

    def lp_bound(U, allowed):
        elems = [e for e in range(k) if (U >> e) & 1]
        cols = [j for j in range(m) if (allowed >> j) & 1 and masks[j] & U]
        sub = CoverInstance.from_pairs(
            len(elems), len(cols),
            *_sub_pairs(elems, cols, masks))
        if not sub.is_feasible:
            return math.inf
        method = "simplex" if len(elems) <= DENSE_CAP and len(cols) <= DENSE_CAP else "highs"
        return fractional_cover_lp(sub, method=method).dual_lower

    def search(U, allowed, depth):
        nonlocal best, found
        if U == 0:
            if depth < best or not found:
                best, found = depth, True
            return
        if depth + 1 >= best:
            return
        lb, sizes = lower_bound(U, allowed)
        if depth + math.ceil(lb - 1e-9) >= best:
            return
        if depth < lp_depth and depth + math.ceil(lp_bound(U, allowed) - 1e-7) >= best:
            return
        # branch element: fewest usable candidates
        e_best, opts = None, None
        u = U
        while u:
            low = u & -u
            e = low.bit_length() - 1
            cand = [j for j in elem_sets[e] if sizes[j]]
            if opts is None or len(cand) < len(opts):
                e_best, opts = e, cand
                if len(cand) <= 1:
                    break
            u ^= low
        opts.sort(key=lambda j: (-sizes[j], j))
        for j in opts:
            search(U & ~masks[j], allowed, depth + 1)
            allowed &= ~(1 << j)

    search((1 << k) - 1, (1 << m) - 1, 0)
    if not found:
        raise SizeLimitExceeded(f"no cover with at most {size_cap} sets")
    return best


def _sub_pairs(elems, cols, masks):
    epos = {e: i for i, e in enumerate(elems)}
    rows, cs = [], []
    for c, j in enumerate(cols):
        v = masks[j]
        for e in elems:
            if (v >> e) & 1:
                rows.append(c)
                cs.append(epos[e])
    return rows, cs


def verify_ls_bound(instance: CoverInstance, exact_tau: bool = True, method: str | None = None) -> dict:
    """Check ``greedy < (1 + ln max_deg) * tau*`` on one instance.

    Strictness is enforced with a relative margin of 1e-9 so that float
    round-off can only produce a flagged failure, never a false pass.
    """
    if method is None:
        method = "simplex" if max(instance.n_ground, instance.n_sets) <= DENSE_CAP else "highs"
    fw = fractional_cover_lp(instance, method=method)
    tau_star = float(fw.total)
    sel = greedy_cover(instance, tau_star)
    if not is_cover(instance, sel.chosen):
        from .errors import InvariantViolation
        raise InvariantViolation("greedy selection does not cover the ground set")
    d = instance.max_deg
    bound = (1 + math.log(d)) * tau_star if d else 0.0
    tau = None
    if exact_tau and instance.n_ground:
        try:
            tau = exact_cover_bruteforce(instance, size_cap=len(sel))
        except SizeLimitExceeded:
            tau = None
    greedy = len(sel)
    holds = greedy < bound * (1 - 1e-9) if instance.n_ground else True
    return {
        "greedy_size": greedy,
        "tau": tau,
        "tau_star": tau_star,
        "max_deg": d,
        "ls_bound": bound,
        "holds": bool(holds),
        "degenerate": d <= 1,
        "chosen": list(sel.chosen),
    }


# -- instance I/O and generators -------------------------------------------

def read_instance(src) -> CoverInstance:
    """Parse ``p cover <#elements> <#sets>`` followed by ``s <id> <e1> <e2> ...`` lines.

    Elements are numbered 1..#elements; lines starting with ``c`` are comments.
    """
    if isinstance(src, (str, Path)) and Path(src).exists():
        text = Path(src).read_text()
    elif isinstance(src, str):
        text = src
    else:
        text = src.read()
    header = None
    sets, inc = [], []
    for lineno, raw in enumerate(io.StringIO(text), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tok = line.split()
        if tok[0] == "p":
            if len(tok) != 4 or tok[1] != "cover":
                raise BadParam(f"line {lineno}: expected 'p cover <#elements> <#sets>'")
            header = (int(tok[2]), int(tok[3]))
        elif tok[0] == "s":
            if header is None:
                raise BadParam(f"line {lineno}: set line before header")
            sets.append(int(tok[1]))
            elems = [int(t) for t in tok[2:]]
            if any(e < 1 or e > header[0] for e in elems):
                raise BadParam(f"line {lineno}: element out of range 1..{header[0]}")
            inc.append(sorted(set(elems)))
        else:
            raise BadParam(f"line {lineno}: unknown record {tok[0]!r}")
    if header is None:
        raise BadParam("missing 'p cover' header")
    if len(sets) != header[1]:
        raise BadParam(f"header announces {header[1]} sets, found {len(sets)}")
    return CoverInstance(range(1, header[0] + 1), sets, inc)


def write_instance(instance: CoverInstance) -> str:
    """Inverse of :func:`read_instance`; ground ids must be 1..n."""
    if list(instance.ground) != list(range(1, instance.n_ground + 1)):
        raise BadParam("text format requires ground ids 1..n")
    out = [f"p cover {instance.n_ground} {instance.n_sets}"]
    for s, members in zip(instance.sets, instance.incidence):
        out.append(" ".join(["s", str(s), *map(str, members)]))
    return "\n".join(out) + "\n"


FANO_LINES = [(1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 5, 6)]


def fano_instance() -> CoverInstance:
    return CoverInstance(range(1, 8), range(1, 8), FANO_LINES)


def random_instance(n_elements: int, n_sets: int, density: float, seed: int) -> CoverInstance:
    """Random feasible instance: each pair joins with probability ``density``;
    an element left uncovered is added to one uniformly chosen set."""
    rng = stream(seed, "instance")
    A = rng.random((n_elements, n_sets)) < density
    lonely = np.flatnonzero(~A.any(axis=1))
    A[lonely, rng.integers(0, n_sets, size=lonely.size)] = True
    inc = [list(np.flatnonzero(A[:, j]) + 1) for j in range(n_sets)]
    return CoverInstance(range(1, n_elements + 1), range(n_sets), inc)
