"""
Bases H = {w_i G_i w_i^-1} of G, word length in a basis, and the two norms on
nuclear vertices: ||H||_W = sum of |w|_H over a word list, and the
lexicographic Z^G vector of |g_1|_H, |g_2|_H, ... along the well-order of G.
"""

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from config import CUTOFF, CUTOFF_CAP, get_logger
from group_core import (
    EMPTY,
    FreeProduct,
    Letter,
    Word,
    conjugate,
    enumerate_elements,
    is_normal,
    multiply,
    reduce_letters,
)

logger = get_logger("basis_norms")

# images[f - 1][e - 1] is the image of the standard generator (f, e)
Images = Tuple[Tuple[Word, ...], ...]


class BasisError(ValueError):
    """A conjugator tuple that is not a basis of G (or cannot be unwound)."""


class Comparison(str, Enum):
    LESS = "less"
    EQUAL = "equal-up-to-cutoff"
    GREATER = "greater"


@dataclass(frozen=True)
class Basis:
    """Canonical conjugators (w_1, ..., w_n); w_i never ends in a letter of G_i."""

    conjugators: Tuple[Word, ...]

    def conjugator(self, i: int) -> Word:
        return self.conjugators[i - 1]

    def key(self) -> Tuple:
        return tuple((len(w), w) for w in self.conjugators)

    def is_standard(self) -> bool:
        return not any(self.conjugators)


@dataclass(frozen=True)
class NormVector:
    cutoff: int
    lengths: Tuple[int, ...]


def canonical_conjugator(i: int, w: Word) -> Word:
    """Minimal coset representative of w G_i (w already in normal form)."""
    if w and w[-1].factor == i:
        return w[:-1]
    return w


def canonicalize_basis(fp: FreeProduct, raw: Sequence[Sequence[Letter]]) -> Basis:
    if len(raw) != fp.n:
        raise BasisError(f"expected {fp.n} conjugators, got {len(raw)}")
    return Basis(tuple(
        canonical_conjugator(i, reduce_letters(fp, w)) for i, w in enumerate(raw, start=1)
    ))


def standard_basis(fp: FreeProduct) -> Basis:
    return Basis(tuple(EMPTY for _ in range(fp.n)))


def basis_element(fp: FreeProduct, H: Basis, i: int, element: int) -> Word:
    """w_i gamma w_i^-1 for gamma = (i, element)."""
    return conjugate(fp, H.conjugator(i), (Letter(i, element),))


# ---------------------------------------------------------------------------
# automorphism image tables
# ---------------------------------------------------------------------------

def identity_images(fp: FreeProduct) -> Images:
    return tuple(
        tuple((Letter(f.index, e),) for e in range(1, f.order)) for f in fp.factors
    )


def apply_images(fp: FreeProduct, images: Images, g: Word) -> Word:
    """Image of g under the endomorphism given on generators by `images`."""
    return reduce_letters(
        fp, itertools.chain.from_iterable(images[l.factor - 1][l.element - 1] for l in g)
    )


def basis_images(fp: FreeProduct, H: Basis) -> Images:
    """phi_H: the automorphism with phi_H(gamma) = w_i gamma w_i^-1 on G_i."""
    return tuple(
        tuple(basis_element(fp, H, f.index, e) for e in range(1, f.order)) for f in fp.factors
    )


def _standard_move_word(fp: FreeProduct, k: int, values: Sequence[int], w: Word) -> Word:
    # letters of factor j are conjugated by (k, values[j-1]); values[k-1] == 0
    kf = fp.factor(k)
    letters: List[Letter] = []
    for l in w:
        c = values[l.factor - 1]
        if c:
            letters.extend((Letter(k, c), l, Letter(k, kf.inverses[c])))
        else:
            letters.append(l)
    return reduce_letters(fp, letters)


def move_value_tuples(fp: FreeProduct, k: int) -> Iterable[Tuple[int, ...]]:
    others = [j for j in range(1, fp.n + 1) if j != k]
    for combo in itertools.product(range(fp.factor(k).order), repeat=len(others)):
        if not any(combo):
            continue
        values = [0] * fp.n
        for j, c in zip(others, combo):
            values[j - 1] = c
        yield tuple(values)


@lru_cache(maxsize=200_000)
def _unwinding(fp: FreeProduct, conjugators: Tuple[Word, ...]) -> Tuple[Images, int]:
    """Exact phi_H^-1 on the standard generators, plus the number of descent steps.

    Starting from H, standard-basis Whitehead moves are applied on the left while
    they strictly shrink the total conjugator length, until every w_i is empty.
    The composite psi sends each H_i onto G_i; a per-factor permutation theta
    then corrects psi to the exact inverse of phi_H.
    """
    current = list(conjugators)
    total = sum(len(w) for w in current)
    psi = identity_images(fp)
    steps = 0
    while total:
        best = None
        for k in range(1, fp.n + 1):
            for values in move_value_tuples(fp, k):
                moved = []
                for j, w in enumerate(current, start=1):
                    c = values[j - 1]
                    tail = (Letter(k, c),) if c else EMPTY
                    moved.append(canonical_conjugator(
                        j, multiply(fp, _standard_move_word(fp, k, values, w), tail)))
                size = sum(len(w) for w in moved)
                if size < total and (best is None or size < best[0]):
                    best = (size, k, values, moved)
        if best is None:
            raise BasisError(f"no length-reducing move while unwinding {conjugators!r}")
        total, k, values, current = best
        psi = tuple(
            tuple(_standard_move_word(fp, k, values, w) for w in row) for row in psi
        )
        steps += 1

    theta_inverse: List[Dict[int, int]] = []
    for f in fp.factors:
        w = conjugators[f.index - 1]
        table = {0: 0}
        for e in range(1, f.order):
            image = apply_images(fp, psi, conjugate(fp, w, (Letter(f.index, e),)))
            if len(image) != 1 or image[0].factor != f.index:
                raise BasisError(f"conjugate of factor {f.index} does not unwind to a letter")
            table[image[0].element] = e
        theta_inverse.append(table)

    exact = tuple(
        tuple(
            tuple(Letter(l.factor, theta_inverse[l.factor - 1][l.element]) for l in w)
            for w in row
        )
        for row in psi
    )
    return exact, steps


def inverse_images(fp: FreeProduct, H: Basis) -> Images:
    """phi_H^-1 on the standard generators (memoised per basis)."""
    return _unwinding(fp, H.conjugators)[0]


def rewrite_in_basis(fp: FreeProduct, H: Basis, g: Word) -> List[Tuple[int, Word]]:
    """Normal form of g in G = H_1 * ... * H_n, each piece as a standard word."""
    if H.is_standard():
        return [(l.factor, (l,)) for l in g]
    u = apply_images(fp, inverse_images(fp, H), g)
    return [(l.factor, basis_element(fp, H, l.factor, l.element)) for l in u]


def basis_length(fp: FreeProduct, H: Basis, g: Word) -> int:
    """|g|_H"""
    if H.is_standard():
        return len(g)
    return len(apply_images(fp, inverse_images(fp, H), g))


def norm_W(fp: FreeProduct, H: Basis, W: Iterable[Word]) -> int:
    return sum(basis_length(fp, H, w) for w in W)


def norm_vector(fp: FreeProduct, H: Basis, cutoff: int = CUTOFF,
                factor_order: Optional[Sequence[int]] = None) -> NormVector:
    elements = enumerate_elements(fp, cutoff, factor_order)
    return NormVector(cutoff, tuple(basis_length(fp, H, g) for g in elements))


def compare_norms(a: NormVector, b: NormVector) -> Comparison:
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")
    if a.lengths < b.lengths:
        return Comparison.LESS
    if a.lengths > b.lengths:
        return Comparison.GREATER
    return Comparison.EQUAL


def compare_bases(fp: FreeProduct, H: Basis, K: Basis, start: int = CUTOFF,
                  cap: int = CUTOFF_CAP,
                  factor_order: Optional[Sequence[int]] = None) -> Comparison:
    """Compare Z^G norms, doubling the cutoff until the answer is strict or the cap is hit."""
    if H == K:
        return Comparison.EQUAL
    cutoff = start
    while True:
        result = compare_norms(norm_vector(fp, H, cutoff, factor_order),
                               norm_vector(fp, K, cutoff, factor_order))
        if result is not Comparison.EQUAL or cutoff >= cap:
            if result is Comparison.EQUAL:
                logger.warning("distinct bases agree up to cutoff %d", cutoff)
            return result
        cutoff = min(cutoff * 2, cap)


def verify_basis(fp: FreeProduct, H: Basis) -> bool:
    """Rewrite every standard generator and every basis generator and check round trips."""
    for f in fp.factors:
        for e in range(1, f.order):
            gamma = (Letter(f.index, e),)
            pieces = rewrite_in_basis(fp, H, gamma)
            if multiply(fp, *[w for _, w in pieces]) != gamma:
                logger.debug("generator %s does not round-trip in %s", gamma, H)
                return False
            if len(rewrite_in_basis(fp, H, basis_element(fp, H, f.index, e))) != 1:
                return False
    return all(is_normal(fp, w) and canonical_conjugator(i, w) == w
               for i, w in enumerate(H.conjugators, start=1))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def basis_to_json(H: Basis) -> list:
    return [[[l.factor, l.element] for l in w] for w in H.conjugators]


def basis_from_json(fp: FreeProduct, data: Sequence[Sequence[Sequence[int]]]) -> Basis:
    raw = [[Letter(int(f), int(e)) for f, e in w] for w in data]
    for w in raw:
        for l in w:
            if not 1 <= l.factor <= fp.n or not 0 <= l.element < fp.factor(l.factor).order:
                raise BasisError(f"letter {tuple(l)} out of range")
    return canonicalize_basis(fp, raw)


def norm_vector_to_json(v: NormVector) -> str:
    return json.dumps({"cutoff": v.cutoff, "lengths": list(v.lengths)})
