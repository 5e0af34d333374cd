import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_force_tau, scipy_tau_star
from lscover.errors import BadParam, InfeasibleInstance, SizeLimitExceeded
from lscover.hypercover import (CoverInstance, FANO_LINES, cheap_dual_bound, exact_cover_bruteforce, fano_instance,
                                fractional_cover_lp, greedy_cover, is_cover, lp_bracket, random_instance,
                                read_instance, verify_ls_bound, write_instance)


def test_single_set_covers_everything():
    inst = CoverInstance([1, 2, 3], ["a"], [[1, 2, 3]])
    sel = greedy_cover(inst)
    assert sel.chosen == ["a"]
    assert float(fractional_cover_lp(inst).total) == pytest.approx(1.0, abs=1e-12)
    r = verify_ls_bound(inst)
    assert r["greedy_size"] == 1 and r["holds"]
    assert r["ls_bound"] == pytest.approx(1 + math.log(3))


def test_fano_values():
    inst = fano_instance()
    # oracle: exhaustive search over line subsets
    assert brute_force_tau([[e - 1 for e in line] for line in FANO_LINES], 7) == 3
    assert exact_cover_bruteforce(inst) == 3
    assert fractional_cover_lp(inst, exact=True).total == Fraction(7, 3)
    fw = fractional_cover_lp(inst)
    assert float(fw.total) == pytest.approx(7 / 3, abs=1e-9)
    assert scipy_tau_star(inst) == pytest.approx(7 / 3, abs=1e-9)
    # weight 1/3 on every line is feasible, and 1/3 on every point is a matching dual
    x = np.full(7, 1 / 3)
    lo, hi = lp_bracket(inst, x, np.full(7, 1 / 3))
    assert lo == pytest.approx(7 / 3) and hi == pytest.approx(7 / 3)
    sel = greedy_cover(inst, fw.total)
    assert len(sel) <= 3 < (1 + math.log(3)) * 7 / 3
    assert sel.certificate == pytest.approx(4.896762, abs=1e-6)


def test_fano_greedy_tie_break_is_lowest_id():
    assert greedy_cover(fano_instance()).chosen == [1, 2, 3]


def test_random_20_by_40_seed_42():
    inst = random_instance(20, 40, 0.15, 42)
    tau = brute_force_tau([[inst.ground.index(e) for e in s] for s in inst.incidence], 20)
    assert exact_cover_bruteforce(inst) == tau
    r = verify_ls_bound(inst)
    assert tau <= r["greedy_size"] < r["ls_bound"]
    assert r["tau_star"] == pytest.approx(scipy_tau_star(inst), abs=1e-9)


def test_random_12_by_18_seed_7():
    inst = random_instance(12, 18, 0.2, 7)
    tau = exact_cover_bruteforce(inst)
    assert tau == brute_force_tau([[e - 1 for e in s] for s in inst.incidence], 12)
    assert tau <= len(greedy_cover(inst))


def test_partition_into_singletons():
    inst = CoverInstance(range(5), range(5), [[i] for i in range(5)])
    assert float(fractional_cover_lp(inst).total) == pytest.approx(5.0)
    assert fractional_cover_lp(inst, exact=True).total == 5
    assert exact_cover_bruteforce(inst) == 5


def test_small_exact_example():
    inst = CoverInstance([1, 2], ["x", "y", "z"], [[1], [2], [1, 2]])
    assert exact_cover_bruteforce(inst) == 1


def test_degenerate_max_degree_one_is_flagged():
    inst = CoverInstance(range(3), range(3), [[0], [1], [2]])
    r = verify_ls_bound(inst)
    # greedy = tau* = 3 and ln 1 = 0: the strict inequality cannot hold
    assert r["degenerate"] and not r["holds"]


def test_empty_ground():
    inst = CoverInstance([], ["a"], [[]])
    assert greedy_cover(inst).chosen == []
    assert fractional_cover_lp(inst).total == 0
    assert exact_cover_bruteforce(inst) == 0


def test_infeasible_instance_reports_elements():
    inst = CoverInstance([1, 2, 3], ["a"], [[1, 2]])
    assert not inst.is_feasible
    with pytest.raises(InfeasibleInstance) as exc:
        greedy_cover(inst)
    assert exc.value.uncovered == [3]
    with pytest.raises(InfeasibleInstance):
        fractional_cover_lp(inst)


def test_size_limits():
    big = random_instance(10, 41, 0.3, 0)
    with pytest.raises(SizeLimitExceeded):
        exact_cover_bruteforce(big)
    assert exact_cover_bruteforce(big, size_cap=10) >= 1
    huge = random_instance(501, 20, 0.3, 0)
    with pytest.raises(SizeLimitExceeded):
        fractional_cover_lp(huge)
    with pytest.raises(SizeLimitExceeded):
        exact_cover_bruteforce(fano_instance(), size_cap=2)


def test_highs_backend_matches_simplex():
    inst = random_instance(40, 60, 0.12, 3)
    a = fractional_cover_lp(inst)
    b = fractional_cover_lp(inst, method="highs")
    assert float(a.total) == pytest.approx(float(b.total), abs=1e-9)
    assert b.dual_lower == pytest.approx(float(b.total), abs=1e-7)


def test_invariants_and_errors():
    with pytest.raises(BadParam):
        CoverInstance([1, 1], ["a"], [[1]])
    with pytest.raises(BadParam):
        CoverInstance([1], ["a"], [[2]])
    with pytest.raises(BadParam):
        fractional_cover_lp(fano_instance(), tol=0)
    inst = CoverInstance([1, 2, 3], ["b", "a"], [[1, 2, 2], [3, 2]])
    assert inst.sets == ("a", "b")
    assert inst.incidence == [[2, 3], [1, 2]]
    assert inst.reverse_incidence == [["b"], ["a", "b"], ["a"]]


def test_cheap_dual_bound_is_below_tau_star():
    for seed in range(10):
        inst = random_instance(30, 40, 0.15, seed)
        assert cheap_dual_bound(inst) <= float(fractional_cover_lp(inst).total) + 1e-12


def test_instance_text_round_trip(tmp_path):
    inst = random_instance(15, 10, 0.3, 1)
    text = write_instance(inst)
    back = read_instance(text)
    assert back.incidence == inst.incidence and back.sets == inst.sets
    p = tmp_path / "i.txt"
    p.write_text("c a comment\n" + text)
    assert read_instance(p).incidence == inst.incidence
    with pytest.raises(BadParam):
        read_instance("p cover 2 1\ns 1 3\n")
    with pytest.raises(BadParam):
        read_instance("s 1 1\n")


@st.composite
def instances(draw):
    k = draw(st.integers(1, 12))
    m = draw(st.integers(1, 14))
    rows = [sorted(draw(st.sets(st.integers(0, k - 1), max_size=k))) for _ in range(m)]
    covered = set().union(*map(set, rows))
    rows.append(sorted(set(range(k)) - covered) or [0])
    return k, rows


@settings(max_examples=60, deadline=None)
@given(instances(), st.randoms(use_true_random=False))
def test_ls_chain_and_permutation_invariance(data, rnd):
    k, rows = data
    inst = CoverInstance(range(k), range(len(rows)), rows)
    r = verify_ls_bound(inst)
    sel = greedy_cover(inst)
    assert is_cover(inst, sel.chosen)
    assert r["tau"] == brute_force_tau(rows, k)
    assert r["tau_star"] <= r["tau"] + 1e-9 and r["tau_star"] >= 1 - 1e-9
    if not r["degenerate"]:
        assert r["holds"]
    # relabel ground and candidate ids
    gperm = list(range(k))
    sperm = list(range(len(rows)))
    rnd.shuffle(gperm)
    rnd.shuffle(sperm)
    inst2 = CoverInstance([gperm[i] for i in range(k)], [sperm[j] for j in range(len(rows))],
                          [[gperm[e] for e in row] for row in rows])
    assert float(fractional_cover_lp(inst2).total) == pytest.approx(r["tau_star"], abs=1e-9)
    assert greedy_cover(inst).chosen == sel.chosen


def test_exact_lp_matches_float_on_random():
    inst = random_instance(12, 15, 0.25, 4)
    exact = fractional_cover_lp(inst, exact=True).total
    assert isinstance(exact, Fraction)
    assert float(exact) == pytest.approx(scipy_tau_star(inst), abs=1e-9)
