import numpy as np
import pytest

from cocycle import trees
from cocycle.shuffles import apply_inverse, invert, ordered_shuffles, shuffles


def test_forest_counts_match_known_series():
    by_deg = trees.forests_by_degree(1, 4)
    assert [len(x) for x in by_deg] == [1, 1, 2, 4, 9]
    by_deg2 = trees.forests_by_degree(2, 3)
    assert [len(x) for x in by_deg2] == [1, 2, 7, 26]


def test_canonical_form_is_order_insensitive():
    a = trees.tree(1, (trees.tree(2), trees.tree(3)))
    b = trees.tree(1, (trees.tree(3), trees.tree(2)))
    assert a == b


def test_ladder_coproduct():
    ladder = trees.tree(1, (trees.tree(2),))
    reduced = trees.reduced_coproduct((ladder,))
    assert reduced == ((((trees.tree(2),)), ((trees.tree(1),)), 1),)


def test_cherry_coproduct_multiplicity():
    cherry = trees.tree(1, (trees.tree(1), trees.tree(1)))
    reduced = dict(
        ((l, r), c) for l, r, c in trees.reduced_coproduct((cherry,))
    )
    dot = (trees.tree(1),)
    assert reduced[(dot, (trees.tree(1, (trees.tree(1),)),))] == 2
    assert reduced[(trees.forest_concat(dot, dot), dot)] == 1


def test_forest_coproduct_degree_sums():
    for forest in trees.forests_by_degree(2, 3)[3]:
        for left, right, count in trees.reduced_coproduct(forest):
            assert trees.forest_size(left) + trees.forest_size(right) == 3
            assert count >= 1


def test_forest_string_roundtrip():
    f = tuple(
        sorted(
            (
                trees.tree(2, (trees.tree(1), trees.tree(2, (trees.tree(1),)))),
                trees.tree(1),
            )
        )
    )
    assert trees.parse_forest(trees.forest_str(f)) == f
    assert trees.parse_forest("()") == ()


def test_shuffle_counts():
    assert len(shuffles((1, 1))) == 2
    assert len(shuffles((2, 2))) == 6
    assert len(shuffles((2, 1, 1))) == 12
    assert len(shuffles((0, 2))) == 1


def test_shuffles_preserve_block_order():
    for perm in shuffles((3, 2)):
        assert perm[0] < perm[1] < perm[2]
        assert perm[3] < perm[4]


def test_ordered_shuffles_rising_finals():
    for perm in ordered_shuffles((2, 2, 1)):
        assert perm[1] < perm[3] < perm[4]
    assert ordered_shuffles((1, 1, 1)) == ((0, 1, 2),)
    assert ordered_shuffles((2, 1)) == ((0, 1, 2),)


def test_ordered_shuffle_rejects_zero_block():
    with pytest.raises(ValueError):
        ordered_shuffles((0, 1))


def test_apply_inverse_transposition():
    d = 2
    v = np.arange(d * d, dtype=float)
    swapped = apply_inverse(v, (1, 0), d)
    assert np.allclose(swapped.reshape(d, d), v.reshape(d, d).T)


def test_apply_inverse_cycle():
    # out[u] = v[u o p^{-1}]: check on a 3-cycle against an explicit loop
    d = 2
    rngv = np.random.default_rng(0).normal(size=d**3)
    perm = (1, 2, 0)
    out = apply_inverse(rngv, perm, d)
    inv = invert(perm)
    expect = np.empty_like(rngv)
    for i in range(d):
        for j in range(d):
            for k in range(d):
                u = (i, j, k)
                src = tuple(u[inv[t]] for t in range(3))
                expect[(i * d + j) * d + k] = rngv[(src[0] * d + src[1]) * d + src[2]]
    assert np.allclose(out, expect)


def test_shuffle_identity_on_signature():
    # <S,u><S,v> = sum over interleavings <S,w>, via the joint-projection map
    from cocycle.paths import signature_piecewise_linear

    pts = np.array([[0.0, 0.0], [1.0, 0.3], [0.4, 1.1], [1.5, 0.9]])
    sig = signature_piecewise_linear(pts, 3).values[-1]
    s = sig.system
    joint = s.block_tuple_tensor((1, 2), sig)
    direct = np.multiply.outer(sig.levels[1], sig.levels[2]).reshape(joint.shape)
    assert np.abs(joint - direct).max() < 1e-12
