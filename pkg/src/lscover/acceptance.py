"""Acceptance suite: eleven end-to-end checks, each returning ``(name, passed, detail)``."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import bounds as B
from .euclid.bodies import Ball, HPolytope
from .euclid.cover import reflection_intersection_volume, torus_cover_density
from .euclid.nets import TorusRegion
from .hypercover import (exact_cover_bruteforce, fano_instance, fractional_cover_lp, greedy_cover, random_instance,
                         verify_ls_bound)
from .report import dumps_report
from .rng import get_threads, set_threads, stream
from .sphere.caps import Cap, cap_measure, uniform_sphere
from .sphere.cover import sphere_cover_greedy

DISK_RADIUS = 0.15
TORUS_DELTAS = (0.02, 0.03, 0.05)
CAP_PHI = math.pi / 6


def ls_instance(seed: int):
    """Random feasible instance with 12..60 elements, 12..120 sets and max degree >= 2."""
    g = stream(seed, "instance-size")
    k = int(g.integers(12, 61))
    m = int(g.integers(12, 121))
    density = float(g.uniform(max(3.0 / k, 0.05), 0.35))
    return random_instance(k, m, density, seed)


def random_polygon(seed: int, name: str = "polygon", scale=(1.0, 1.0)) -> HPolytope:
    g = stream(seed, name)
    k = int(g.integers(5, 10))
    ang = np.sort(g.uniform(0, 2 * math.pi, k))
    rad = g.uniform(0.5, 1.0, k)
    V = np.column_stack([rad * np.cos(ang) * scale[0], rad * np.sin(ang) * scale[1]])
    V = V @ np.linalg.qr(g.standard_normal((2, 2)))[0] + g.uniform(-1, 1, 2)
    return HPolytope.from_vertices(V)


def criterion_1(seed: int = 0):
    bad, rows = [], 0
    for s in range(200):
        r = verify_ls_bound(ls_instance(seed + s))
        rows += 1
        if not r["holds"] or r["tau"] is None or r["tau"] > r["greedy_size"]:
            bad.append(seed + s)
    r = verify_ls_bound(fano_instance())
    if not r["holds"] or r["tau"] > r["greedy_size"]:
        bad.append("fano")
    return "Lovasz-Stein certificate", not bad, f"{rows} random + Fano, failures: {bad or 'none'}"


def criterion_2(seed: int = 0):
    inst = fano_instance()
    exact = fractional_cover_lp(inst, exact=True).total
    flt = float(fractional_cover_lp(inst).total)
    tau = exact_cover_bruteforce(inst)
    g = len(greedy_cover(inst))
    ok = exact == Fraction(7, 3) and abs(flt - 7 / 3) <= 1e-9 and tau == 3 and g <= 3
    return "Fano plane", ok, f"tau*={exact} (float {flt!r}), tau={tau}, greedy={g}"


def criterion_3(seed: int = 0):
    worst, bad, strict = [], [], 0
    for s in range(20):
        K = random_polygon(seed + s, "sandwich-K", (1.0, 0.8))
        L = random_polygon(seed + s, "sandwich-L", (0.5, 0.4))
        diff_area = B.simple_sandwich_bounds(K, L)["vol_K_minus_L"]
        step = math.sqrt(diff_area / 1500)
        r = B.sandwich_check(K, L, step)
        worst.append(max(r["tol_lower"], r["tol_upper"]))
        strict += r["lower"] <= r["tau_star"] <= r["upper"]
        if not r["holds"]:
            bad.append(s)
    return "sandwich bounds", not bad, (f"20 pairs, violations: {bad or 'none'}, max tol {max(worst):.3g}, "
                                        f"inside the untoleranced interval: {strict}/20")


def criterion_4(seed: int = 0):
    K = Ball(np.zeros(2), DISK_RADIUS)
    region = TorusRegion(1.0)
    bound = B.renbyanything_bound(K).value
    runs = []
    for delta in TORUS_DELTAS:
        for s in range(3):
            rep = torus_cover_density(K, region, delta, seed=seed + s)
            runs.append((delta, seed + s, rep.density, rep.valid, rep.grid_resolution))
    all_valid = all(r[3] and r[4] <= r[0] / 8 * (1 + 1e-12) for r in runs)
    best = min(runs, key=lambda r: r[2])
    ok = all_valid and best[2] <= bound + 0.05
    detail = "; ".join(f"d={d} s={s} density={dens:.4f} valid={v}" for d, s, dens, v, _ in runs)
    return "torus covering", ok, f"bound {bound:.4f}; best {best[2]:.4f}; {detail}"


def criterion_5(seed: int = 0):
    K = Cap([0.0, 0.0, 1.0], CAP_PHI)
    rep = sphere_cover_greedy(K, CAP_PHI / 20, 500, seed)
    bound = rep.bounds["spherebyanything"]
    ok = rep.valid and rep.density <= bound * 1.1
    return "sphere covering", ok, (f"density {rep.density:.4f}, bound {bound:.4f}, valid={rep.valid}, "
                                   f"{rep.stats['certification_samples']} samples")


MC_SPOTS = ((5, 0.7), (2, 1.2), (3, 0.4), (10, 1.0), (20, 1.3))


def criterion_6(seed: int = 0):
    half = max(abs(cap_measure(n, math.pi / 2) - 0.5) for n in range(1, 21))
    phis = np.linspace(0.05, math.pi - 0.05, 50)
    s2 = max(abs(cap_measure(2, p) - (1 - math.cos(p)) / 2) for p in phis)
    mc = []
    for i, (n, phi) in enumerate(MC_SPOTS):
        U = uniform_sphere(n, 10 ** 6, seed + i, "cap-check")
        p = float(np.mean(U[:, 0] >= math.cos(phi)))
        sd = math.sqrt(p * (1 - p) / len(U))
        mc.append(abs(p - cap_measure(n, phi)) <= 3 * sd)
    ok = half < 1e-12 and s2 < 1e-12 and all(mc)
    return "cap measure numerics", ok, f"hemisphere err {half:.2e}, S^2 err {s2:.2e}, MC within 3 sigma {sum(mc)}/5"


def criterion_7(seed: int = 0):
    res = B.bw_sweep()
    viol = [(r["n"], r["phi"], r["t"]) for r in res
            if any(r[k] is False for k in ("lower_holds", "upper_holds", "scaling_holds"))]
    checked = sum(r[k] is not None for r in res for k in ("lower_holds", "upper_holds", "scaling_holds"))
    return "cap measure estimates", not viol, f"{checked} applicable checks, violations: {viol or 'none'}"


def criterion_8(seed: int = 0):
    r = B.jordan_check(10 ** 4)
    return "Jordan inequality", r["holds"], f"{r['points']} points, {r['violations']} violations"


def criterion_9(seed: int = 0):
    ns = [3, 5, 10, 100, 1000, 10000]
    r = B.lnnesszam_check(ns)
    link1_all = all(x["link1"] for x in r["rows"])
    ok = link1_all and r["scalar_exp_ok"] and r["chain_holds_from"] is not None and r["rows"][-1]["chain"]
    return "log chain", ok, (f"link 1 on all n: {link1_all}; full chain from n={r['chain_holds_from']} "
                             f"(smallest sampled n where it holds: {r['first_chain']}); link 2 fails at {r['failures']}")


def criterion_10(seed: int = 0):
    bad, worst = [], math.inf
    for s in range(50):
        r = reflection_intersection_volume(random_polygon(seed + s, "centred"))
        worst = min(worst, r["ratio"])
        if not r["holds"]:
            bad.append(s)
    return "centred symmetric part", not bad, f"50 polygons, min ratio {worst:.4f} (need >= 0.25), violations: {bad or 'none'}"


def _determinism_runs(seed):
    from .config import load_config
    from .experiments import run_experiment
    out = []
    for preset in ("fano", "disk-torus"):
        cfg = load_config(preset=preset, overrides={"seed": str(seed + 3) if preset == "disk-torus" else None})
        out.append(run_experiment(cfg, write=False)["files"]["report.json"])
    out.append(dumps_report(sphere_cover_greedy(Cap([0.0, 0.0, 1.0], CAP_PHI), 0.1, 200, seed, cert_samples=2 * 10 ** 5)))
    return out


def criterion_11(seed: int = 0):
    prev = get_threads()
    try:
        set_threads(1)
        a = _determinism_runs(seed)
        set_threads(4)
        b = _determinism_runs(seed)
    finally:
        set_threads(prev)
    same = [x == y for x, y in zip(a, b)]
    return "determinism", all(same), f"byte-identical across 1 and 4 threads: {same}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def run_criterion(i: int, seed: int = 0):
    name, ok, detail = CRITERIA[i - 1](seed)
    return name, bool(ok), detail


def format_line(i, name, ok, detail) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] {i:2d}. {name}: {detail}"


def verify_all(seed: int = 0, out=print) -> dict:
    results = []
    for i in range(1, len(CRITERIA) + 1):
        name, ok, detail = run_criterion(i, seed)
        out(format_line(i, name, ok, detail))
        results.append({"criterion": i, "name": name, "passed": ok, "detail": detail})
    return {"results": results, "all_passed": all(r["passed"] for r in results)}
