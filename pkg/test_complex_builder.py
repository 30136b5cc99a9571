"""
Tests for Whitehead moves, vertex types, the nuclear ball, peak reduction
and stabilizers.

In Z2*Z2 = <a> * <b> the nuclear ball of W0 radius 4 is {H0, (ε, a), (b, ε)}:
the next moves out reach (ab, a) and (b, ba), both of norm 8.
"""

import numpy as np
import pytest

from basis_norms import Basis, Comparison, basis_images, compare_bases, standard_basis
from complex_builder import (
    AutElement,
    FactoredElement,
    NoReductiveMoveError,
    VertexType,
    WhiteheadAuto,
    all_moves_at,
    apply_to_vertex,
    ball_to_dot,
    ball_to_jsonl,
    canonical_vertex,
    carried_moves,
    carried_moves_at,
    carried_orbit,
    compose,
    enumerate_ball,
    finite_order_elements,
    fixes_vertex,
    image_basis,
    move_from_conjugators,
    product_form_elements,
    quotient_representative,
    random_basis,
    reduce_to_minimal,
    reductive_moves,
    simplex_stabilizer,
    stabilizer,
    star_poset,
    trivial_factored,
    vertex_leq,
)
from group_core import EMPTY, CapExceededError, FactorAuto, Letter, cyclic_factor, free_product
from whitehead_poset import enumerate_pointed_trees, nuclear_tree, tree_from_code

a, b = Letter(1, 1), Letter(2, 1)
STAR2 = nuclear_tree(range(3))
T1 = tree_from_code("*,1|1,2")
T2 = tree_from_code("*,2|1,2")


def z2z2():
    return free_product([cyclic_factor(1, 2), cyclic_factor(2, 2)])


def zk(*orders):
    return free_product([cyclic_factor(i, k) for i, k in enumerate(orders, start=1)])


def test_move_conjugates_the_other_factor():
    fp = z2z2()
    H0 = standard_basis(fp)
    move = WhiteheadAuto(H0, 1, (0, 1))
    assert move.apply_to_basis(fp) == Basis((EMPTY, (a,)))
    assert move.label_values() == {2: 1}
    assert move.describe(fp) == "k=1 x2=1:1"
    with pytest.raises(ValueError):
        WhiteheadAuto(H0, 1, (1, 0))


def test_move_from_conjugators():
    fp = z2z2()
    H0 = standard_basis(fp)
    assert move_from_conjugators(fp, H0, 1, {2: (a,)}) == WhiteheadAuto(H0, 1, (0, 1))
    with pytest.raises(ValueError):
        move_from_conjugators(fp, H0, 1, {2: (b,)})


def test_aut_element_algebra():
    fp = z2z2()
    move = WhiteheadAuto(standard_basis(fp), 1, (0, 1))
    phi = AutElement.from_move(fp, move)
    assert phi.apply(fp, (b,)) == (a, b, a)
    assert phi.order(fp) == 2
    assert compose(fp, phi, phi.inverse()).is_identity()
    assert phi.power(fp, 2).is_identity()
    assert AutElement.from_moves(fp, [move, move]).is_identity()


def test_image_basis_of_standard_basis_is_phi_h():
    fp = zk(2, 3)
    H = Basis(((Letter(2, 1),), EMPTY))
    phi = AutElement(basis_images(fp, H), basis_images(fp, H), ())
    assert image_basis(fp, phi, standard_basis(fp)) == H


def test_ball_of_z2z2():
    fp = z2z2()
    ball = enumerate_ball(fp, radius=4)
    assert len(ball) == 3
    assert set(ball.bases()) == {standard_basis(fp), Basis((EMPTY, (a,))), Basis(((b,), EMPTY))}
    assert ball.edges == [(0, 1), (0, 2)]
    assert ball.norm_of(standard_basis(fp)) == 2
    assert all(v.is_nuclear() for v in ball.vertices)


def test_ball_edges_join_vertices_sharing_a_star():
    fp = zk(2, 2, 2)
    ball = enumerate_ball(fp, radius=7)
    assert len(ball) == 22
    single = {tuple(sorted((i, ball.index[move.apply_to_basis(fp)])))
              for i, H in enumerate(ball.bases())
              for move in all_moves_at(fp, H) if ball.contains(move.apply_to_basis(fp))}
    assert len(single) == 36
    assert single <= set(ball.edges)
    assert len(ball.edges) == 54
    trees = [T for T in enumerate_pointed_trees(3) if not T.is_nuclear()]
    bases = ball.bases()
    for i, j in ball.edges:
        assert any(bases[j] in carried_orbit(fp, bases[i], T) for T in trees)


def test_ball_radius_validation_and_cap():
    fp = z2z2()
    with pytest.raises(ValueError):
        enumerate_ball(fp, radius=1)
    with pytest.raises(CapExceededError):
        enumerate_ball(fp, radius=4, cap=2)


def test_ball_exports():
    fp = z2z2()
    ball = enumerate_ball(fp, radius=4)
    assert len(ball_to_jsonl(ball).splitlines()) == 3
    assert ball_to_dot(ball).count(" -- ") == 2


def test_carried_orbit_and_canonical_vertex():
    fp = z2z2()
    H0 = standard_basis(fp)
    K = Basis((EMPTY, (a,)))
    assert carried_orbit(fp, H0, T1) == frozenset({H0, K})
    assert carried_orbit(fp, H0, STAR2) == frozenset({H0})
    assert canonical_vertex(fp, K, T1) == VertexType(H0, T1)
    assert len(carried_moves(fp, VertexType(H0, T1))) == 1


def test_carried_moves_of_a_vertex_commute():
    fp = zk(2, 2, 2)
    H0 = standard_basis(fp)
    for T in enumerate_pointed_trees(3):
        moves = [AutElement.from_move(fp, move) for move in carried_moves_at(fp, H0, T)]
        for x in moves:
            for y in moves:
                assert x.then(fp, y) == y.then(fp, x)


def test_automorphisms_preserve_vertex_order():
    fp = z2z2()
    H0 = standard_basis(fp)
    ball = enumerate_ball(fp, radius=4)
    vertices = {canonical_vertex(fp, H, T) for H in ball.bases() for T in (STAR2, T1, T2)}
    for move in (WhiteheadAuto(H0, 1, (0, 1)), WhiteheadAuto(H0, 2, (1, 0))):
        phi = AutElement.from_move(fp, move)
        for u in vertices:
            for v in vertices:
                moved = apply_to_vertex(fp, phi, u), apply_to_vertex(fp, phi, v)
                assert vertex_leq(fp, u, v) == vertex_leq(fp, *moved)


def test_vertex_order():
    fp = z2z2()
    H0 = standard_basis(fp)
    edge = VertexType(H0, T1)
    assert vertex_leq(fp, VertexType(H0, STAR2), edge)
    assert vertex_leq(fp, VertexType(Basis((EMPTY, (a,))), STAR2), edge)
    assert not vertex_leq(fp, VertexType(Basis(((b,), EMPTY)), STAR2), edge)
    assert not vertex_leq(fp, edge, VertexType(H0, STAR2))


def test_star_poset_is_a_path():
    fp = z2z2()
    poset = star_poset(fp, VertexType(standard_basis(fp), STAR2))
    assert poset.number_of_nodes() == 3
    assert poset.number_of_edges() == 2
    with pytest.raises(ValueError):
        star_poset(fp, VertexType(standard_basis(fp), T1))


def test_reduction_of_twisted_basis():
    fp = z2z2()
    start = VertexType(Basis((EMPTY, (a,))), STAR2)
    moves = reductive_moves(fp, start)
    assert moves
    assert moves[0][1].tree == T1
    path = reduce_to_minimal(fp, start)
    assert len(path) == 1
    assert path[-1].vertex.basis.is_standard()
    assert path[-1].norm == 2
    assert reduce_to_minimal(fp, VertexType(standard_basis(fp), STAR2)) == []


def test_reduction_under_zg_norm():
    fp = zk(2, 3)
    H = random_basis(fp, 6, np.random.default_rng(7))
    path = reduce_to_minimal(fp, VertexType(H, STAR2), norm="zg")
    assert (path[-1].vertex.basis if path else H).is_standard()


def test_reduction_path_descends_in_zg():
    fp = zk(2, 2, 2)
    H = random_basis(fp, 5, np.random.default_rng(11))
    star = nuclear_tree(range(4))
    previous = H
    for step in reduce_to_minimal(fp, VertexType(H, star), norm="zg"):
        assert compare_bases(fp, step.vertex.basis, previous) is Comparison.LESS
        previous = step.vertex.basis
    assert previous.is_standard()


def test_no_reductive_move_error_is_runtime_error():
    assert issubclass(NoReductiveMoveError, RuntimeError)


def test_random_basis_is_seeded():
    fp = zk(2, 3)
    one = random_basis(fp, 8, np.random.default_rng(3))
    two = random_basis(fp, 8, np.random.default_rng(3))
    assert one == two


def test_stabilizer_orders():
    fp = z2z2()
    H0 = standard_basis(fp)
    assert len(stabilizer(fp, VertexType(H0, STAR2))) == 1
    assert len(stabilizer(fp, VertexType(H0, T1))) == 2
    fp33 = zk(3, 3)
    assert len(stabilizer(fp33, VertexType(standard_basis(fp33), STAR2))) == 4


def test_simplex_stabilizer_is_intersection():
    fp = z2z2()
    H0 = standard_basis(fp)
    chain = [VertexType(H0, STAR2), VertexType(H0, T1)]
    assert len(simplex_stabilizer(fp, chain)) == 1
    with pytest.raises(ValueError):
        simplex_stabilizer(fp, [])


def test_quotient_representative_returns_to_standard_basis():
    fp = zk(2, 3)
    H = random_basis(fp, 4, np.random.default_rng(5))
    tree, element = quotient_representative(fp, VertexType(H, T2))
    assert tree == T2
    assert image_basis(fp, element, H) == standard_basis(fp)


def test_product_form_elements_of_z2z2():
    fp = z2z2()
    assert len(list(product_form_elements(fp))) == 4
    assert trivial_factored(fp).is_trivial()
    found = finite_order_elements(fp)
    assert len(found) == 2
    assert all(m == 2 for _, _, m in found)


def test_infinite_order_product_stops_early():
    fp = zk(2, 2, 2)
    identity = tuple(FactorAuto(i, (0, 1)) for i in (1, 2, 3))
    phi = FactoredElement(((0, 0, 1), (0, 0, 1), (0, 1, 0)), identity).to_aut(fp)
    assert phi.order(fp) is None
    assert phi.order(fp, cap=200) is None
    assert all(not element.is_identity() for _, element, _ in finite_order_elements(fp))


def test_finite_order_is_found_under_the_image_bound():
    fp = zk(2, 2, 2)
    identity = tuple(FactorAuto(i, (0, 1)) for i in (1, 2, 3))
    phi = FactoredElement(((0, 0, 1), (0, 0, 0), (0, 0, 0)), identity).to_aut(fp)
    assert phi.longest_image() == 3
    assert phi.order(fp) == 2


def test_factored_element_fixes_its_carrier():
    fp = z2z2()
    identity = FactorAuto(1, (0, 1)), FactorAuto(2, (0, 1))
    phi = FactoredElement(((0, 1), (0, 0)), identity).to_aut(fp)
    H0 = standard_basis(fp)
    assert fixes_vertex(fp, phi, VertexType(H0, T1))
    assert not fixes_vertex(fp, phi, VertexType(H0, T2))
    assert apply_to_vertex(fp, phi, VertexType(H0, T1)) == VertexType(H0, T1)


def main() -> None:
    tests = [value for name, value in sorted(globals().items()) if name.startswith("test_") and callable(value)]
    print("=" * 60)
    print("COMPLEX BUILDER")
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
