import itertools

import numpy as np
import pytest

import entropywalks as ew


def random_density(rng, n, k, max_support=None, min_weight=0.1):
    """Random positive-weight density on a random sub-collection of C(n, k)."""
    sets = list(itertools.combinations(range(n), k))
    order = rng.permutation(len(sets))
    keep = len(sets) if max_support is None else min(max_support, len(sets))
    keep = max(keep, 1)
    chosen = [sets[i] for i in order[:keep]]
    return ew.make_density(n, k, [(s, rng.uniform(min_weight, 2.0)) for s in chosen])


def random_ising(rng, n, op_norm_target=None):
    A = rng.normal(size=(n, n))
    J = 0.5 * (A + A.T)
    model = ew.make_ising(J, rng.normal(size=n))
    if op_norm_target is not None:
        model = ew.make_ising(J * (op_norm_target / model.op_norm),
                              model.field.copy())
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
