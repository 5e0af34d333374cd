import itertools

import numpy as np
import pytest
from scipy.optimize import linprog


def brute_force_tau(incidence, n_ground):
    """Smallest number of candidate lists whose union is the whole ground set."""
    full = set(range(n_ground))
    sets = [set(s) for s in incidence]
    for k in range(0, len(sets) + 1):
        for combo in itertools.combinations(range(len(sets)), k):
            if set().union(*(sets[j] for j in combo)) >= full:
                return k
    return None


def scipy_tau_star(instance):
    """Independent LP oracle: the covering LP solved directly by HiGHS."""
    A = instance.dense_matrix().astype(float)
    res = linprog(np.ones(instance.n_sets), A_ub=-A, b_ub=-np.ones(instance.n_ground), bounds=(0, None),
                  method="highs")
    assert res.status == 0
    return res.fun


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
