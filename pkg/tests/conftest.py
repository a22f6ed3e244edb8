import pathlib
import sys

import numpy as np
import pytest

SRC = pathlib.Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))



def random_grouplike(system, rng, factors=3, scale=0.6):
    """Product of segment exponentials: a generic word-system group element."""
    out = system.unit()
    for _ in range(factors):
        v = system.zero()
        v.levels[1][:] = rng.normal(size=system.d) * scale / factors
        out = system.mul(out, system.exp(v))
    return out


def random_character(system, rng, scale=0.6):
    """Random forest character: free on trees, multiplicative on forests."""
    tree_vals = {}
    t = system.zero()
    t.levels[0][0] = 1.0
    for k in range(1, system.n + 1):
        for i, forest in enumerate(system._forests[k]):
            val = 1.0
            for tree in forest:
                if tree not in tree_vals:
                    tree_vals[tree] = rng.normal() * scale
                val *= tree_vals[tree]
            t.levels[k][i] = val
    return t


def tensor_max_dev(a, b):
    return max(float(np.abs(x - y).max()) for x, y in zip(a.levels, b.levels))


def path_max_dev(p1, p2):
    return max(tensor_max_dev(a, b) for a, b in zip(p1.values, p2.values))


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
