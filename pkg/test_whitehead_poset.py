"""
Tests for pointed trees, their based partitions and the folding order.

Usage:
  pytest test_whitehead_poset.py
"""

import json

import networkx as nx
import pytest

from group_core import CapExceededError
from verification import naive_tree_codes
from whitehead_poset import (
    STAR,
    coarsen_at,
    enumerate_pointed_trees,
    fold,
    is_carried,
    make_tree,
    minimal_carrier,
    nuclear_tree,
    partitions_from_tree,
    pointed_trees_on,
    poset_leq,
    tree_from_code,
    tree_from_json,
    tree_to_dot,
    tree_to_json,
    trees_to_jsonl,
)

A = tree_from_code("*,1,2|1,3")


def test_small_counts():
    assert len(enumerate_pointed_trees(1)) == 1
    trees = enumerate_pointed_trees(2)
    assert [T.code() for T in trees] == ["*,1,2", "*,1|1,2", "*,2|1,2"]
    assert trees[0].is_nuclear()
    assert len(enumerate_pointed_trees(3)) == 19


def test_enumeration_matches_naive_generator():
    for n in (2, 3, 4):
        codes = [T.code() for T in enumerate_pointed_trees(n)]
        assert len(codes) == len(set(codes))
        assert set(codes) == naive_tree_codes(n)


def test_every_tree_is_pointed():
    for T in enumerate_pointed_trees(3):
        assert sum(1 for block in T.blocks if STAR in block) == 1
        assert T.blocks[0][0] == STAR


def test_enumeration_limits():
    with pytest.raises(ValueError):
        enumerate_pointed_trees(0)
    with pytest.raises(CapExceededError):
        enumerate_pointed_trees(7)
    with pytest.raises(ValueError):
        pointed_trees_on([STAR])


def test_make_tree_canonical_order():
    T = make_tree([(1, 3), (0, 1, 2)])
    assert T == A
    assert T.code() == "*,1,2|1,3"
    assert repr(T) == "PointedTree(*,1,2|1,3)"
    assert make_tree([(0, 1, 2), (3,), (1, 3)]) == A


def test_make_tree_rejects_invalid_blocks():
    with pytest.raises(ValueError):
        make_tree([(0, 1), (0, 2)])
    with pytest.raises(ValueError):
        make_tree([(1, 2)], (0, 1, 2))
    with pytest.raises(ValueError):
        make_tree([(1, 2)], (1, 2))
    with pytest.raises(ValueError):
        make_tree([(0, 1), (1, 5)], (0, 1, 2))


def test_partitions():
    parts = partitions_from_tree(A)
    assert parts[1].petals == (frozenset({0, 2}), frozenset({3}))
    assert parts[1].star_petal == frozenset({0, 2})
    assert parts[2].is_trivial()
    assert parts[3].is_trivial()
    nuclear = partitions_from_tree(nuclear_tree(range(4)))
    assert all(p.is_trivial() for p in nuclear.values())


def test_poset_order():
    star = nuclear_tree(range(4))
    finer = tree_from_code("*,1|1,2|1,3")
    assert poset_leq(star, A)
    assert not poset_leq(A, star)
    assert poset_leq(A, finer)
    assert not poset_leq(finer, A)
    assert poset_leq(A, A)
    with pytest.raises(ValueError):
        poset_leq(A, nuclear_tree(range(3)))


def test_fold_and_coarsen():
    T = tree_from_code("*,1|1,2|1,3")
    assert fold(T, [(1, 1), (1, 2)]).code() == "*,1|1,2,3"
    assert coarsen_at(T, 1, [{0}, {2, 3}]).code() == "*,1|1,2,3"
    assert coarsen_at(T, 1, [{0, 2}, {3}]) == A
    with pytest.raises(ValueError):
        fold(T, [])
    with pytest.raises(ValueError):
        fold(T, [(2, 0)])
    with pytest.raises(ValueError):
        coarsen_at(T, 1, [{0, 2}])


def test_folding_moves_down():
    T = tree_from_code("*,1|1,2|1,3")
    assert poset_leq(fold(T, [(1, 0), (1, 1)]), T)


def test_minimal_carrier():
    assert minimal_carrier(range(4), 1, {3: 1}) == A
    assert minimal_carrier(range(4), 1, {2: 1, 3: 1}).code() == "*,1|1,2,3"
    assert minimal_carrier(range(4), 1, {2: 1, 3: 2}).code() == "*,1|1,2|1,3"
    assert minimal_carrier(range(4), 2, {}).is_nuclear()


def test_is_carried():
    assert is_carried(A, 1, {3: 1})
    assert not is_carried(A, 1, {2: 1})
    assert not is_carried(A, 1, {1: 1})
    assert is_carried(A, 1, {})


def test_exports():
    assert tree_from_json(tree_to_json(A)) == A
    assert tree_to_json(A)["adjacency"] == {"u0": ["*", "1", "2"], "u1": ["1", "3"]}
    lines = trees_to_jsonl(enumerate_pointed_trees(2)).splitlines()
    assert len(lines) == 3
    assert json.loads(lines[1])["code"] == "*,1|1,2"
    dot = tree_to_dot(A, "A")
    assert dot.startswith("graph A {")
    assert 'u1 -- "3";' in dot


def test_partitions_determine_the_tree():
    for n in (1, 2, 3, 4):
        keys = set()
        trees = enumerate_pointed_trees(n)
        for T in trees:
            parts = partitions_from_tree(T)
            keys.add(tuple((k, frozenset(parts[k].petals)) for k in sorted(parts)))
        assert len(keys) == len(trees)


def test_folding_order_is_a_partial_order():
    for n in (2, 3):
        trees = enumerate_pointed_trees(n)
        leq = {(A, B): poset_leq(A, B) for A in trees for B in trees}
        for A in trees:
            assert leq[A, A]
            for B in trees:
                if A != B and leq[A, B]:
                    assert not leq[B, A]
                for C in trees:
                    if leq[A, B] and leq[B, C]:
                        assert leq[A, C]


def test_nuclear_tree_is_the_bottom_and_chains_have_n_trees():
    for n in (1, 2, 3):
        trees = enumerate_pointed_trees(n)
        star = nuclear_tree(range(n + 1))
        assert all(poset_leq(star, T) for T in trees)
        order = nx.DiGraph()
        order.add_nodes_from(trees)
        order.add_edges_from((A, B) for A in trees for B in trees if A != B and poset_leq(A, B))
        assert len(nx.dag_longest_path(order)) == n


def main() -> None:
    tests = [value for name, value in sorted(globals().items()) if name.startswith("test_") and callable(value)]
    print("=" * 60)
    print("POINTED TREES")
    print("=" * 60)
    failed = 0
    for test in tests:
        try:
            test()
            print(f"✅ {test.__name__}")
        except Exception as exc:
            failed += 1
            print(f"❌ {test.__name__}: {exc!r}")
    print("=" * 60)
    print("✅ ALL TESTS PASSED" if not failed else f"❌ {failed} TEST(S) FAILED")


if __name__ == "__main__":
    main()
