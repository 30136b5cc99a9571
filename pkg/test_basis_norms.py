"""
Tests for bases, basis-relative word length and the W0 / Z^G norms.

Z2*Z2 is small enough to check by hand: with a, b the generators, the basis
(ε, a) has H_1 = <a>, H_2 = <aba>, so b = a·aba·a has length 3.
"""

import json

import pytest

from basis_norms import (
    Basis,
    BasisError,
    Comparison,
    apply_images,
    basis_from_json,
    basis_images,
    basis_length,
    basis_to_json,
    canonical_conjugator,
    canonicalize_basis,
    compare_bases,
    compare_norms,
    inverse_images,
    norm_vector,
    norm_vector_to_json,
    norm_W,
    rewrite_in_basis,
    standard_basis,
    verify_basis,
)
from group_core import EMPTY, Letter, cyclic_factor, free_product, multiply

a, b = Letter(1, 1), Letter(2, 1)
TWISTED = Basis((EMPTY, (a,)))


def z2z2():
    return free_product([cyclic_factor(1, 2), cyclic_factor(2, 2)])


def test_canonical_conjugator_drops_own_factor():
    assert canonical_conjugator(1, (a,)) == EMPTY
    assert canonical_conjugator(2, (a,)) == (a,)
    assert canonical_conjugator(2, (a, b)) == (a,)


def test_canonicalize_basis():
    fp = z2z2()
    assert canonicalize_basis(fp, [[a, a], [a, b]]) == TWISTED
    with pytest.raises(BasisError):
        canonicalize_basis(fp, [[]])


def test_standard_basis_lengths():
    fp = z2z2()
    H0 = standard_basis(fp)
    assert H0.is_standard()
    assert basis_length(fp, H0, (a, b, a)) == 3
    assert norm_W(fp, H0, fp.lambdas()) == 2


def test_twisted_basis_lengths():
    fp = z2z2()
    assert basis_length(fp, TWISTED, (a,)) == 1
    assert basis_length(fp, TWISTED, (b,)) == 3
    assert basis_length(fp, TWISTED, (a, b, a)) == 1
    assert basis_length(fp, TWISTED, (a, b)) == 2
    assert norm_W(fp, TWISTED, fp.lambdas()) == 4


def test_inverse_images_undo_basis_images():
    fp = z2z2()
    forward = basis_images(fp, TWISTED)
    backward = inverse_images(fp, TWISTED)
    assert backward[1][0] == (a, b, a)
    for g in [(a,), (b,), (a, b)]:
        assert apply_images(fp, backward, apply_images(fp, forward, g)) == g


def test_rewrite_in_basis():
    fp = z2z2()
    pieces = rewrite_in_basis(fp, TWISTED, (b,))
    assert [i for i, _ in pieces] == [1, 2, 1]
    assert multiply(fp, *[w for _, w in pieces]) == (b,)


def test_verify_basis():
    fp = z2z2()
    assert verify_basis(fp, standard_basis(fp))
    assert verify_basis(fp, TWISTED)


def test_norm_vector_prefix():
    fp = z2z2()
    assert norm_vector(fp, standard_basis(fp), 5).lengths == (0, 1, 1, 2, 2)
    assert norm_vector(fp, TWISTED, 5).lengths == (0, 1, 3, 2, 2)


def test_factor_order_changes_the_vector():
    fp = z2z2()
    assert norm_vector(fp, TWISTED, 5, factor_order=(2, 1)).lengths == (0, 3, 1, 2, 2)


def test_compare_norms():
    fp = z2z2()
    H0 = standard_basis(fp)
    assert compare_bases(fp, H0, TWISTED) is Comparison.LESS
    assert compare_bases(fp, TWISTED, H0) is Comparison.GREATER
    assert compare_bases(fp, H0, H0) is Comparison.EQUAL
    with pytest.raises(ValueError):
        compare_norms(norm_vector(fp, H0, 4), norm_vector(fp, H0, 5))


def test_basis_json():
    fp = z2z2()
    assert basis_to_json(TWISTED) == [[], [[1, 1]]]
    assert basis_from_json(fp, [[], [[1, 1]]]) == TWISTED
    with pytest.raises(BasisError):
        basis_from_json(fp, [[], [[3, 1]]])
    data = json.loads(norm_vector_to_json(norm_vector(fp, TWISTED, 5)))
    assert data == {"cutoff": 5, "lengths": [0, 1, 3, 2, 2]}


def main() -> None:
    tests = [value for name, value in sorted(globals().items()) if name.startswith("test_") and callable(value)]
    print("=" * 60)
    print("BASES AND NORMS")
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
