"""
Vertex types [H, A] of L(G) and the action of symmetric automorphisms on them.

A symmetric Whitehead automorphism (H, x) with operative factor k conjugates
each H_j by an element x_j of H_k (x_k = 1). It is stored by the G_k elements
gamma_j with x_j = w_k gamma_j w_k^-1, so applying it to its own basis needs
no rewriting: the new conjugator of factor j is x_j w_j.
"""

import functools
import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from basis_norms import (
    Basis,
    Comparison,
    Images,
    apply_images,
    basis_element,
    basis_images,
    basis_to_json,
    canonical_conjugator,
    compare_bases,
    identity_images,
    inverse_images,
    move_value_tuples,
    norm_W,
    rewrite_in_basis,
    standard_basis,
)
from config import BALL_CAP, CUTOFF, ORBIT_CAP, ORDER_CAP, STABILIZER_CAP, get_logger
from group_core import (
    EMPTY,
    CapExceededError,
    FactorAuto,
    FreeProduct,
    Letter,
    Word,
    conjugate,
    factor_automorphisms,
    format_word,
    invert,
    multiply,
)
from whitehead_poset import (
    STAR,
    PointedTree,
    enumerate_pointed_trees,
    minimal_carrier,
    nuclear_tree,
    partitions_from_tree,
    poset_leq,
)

logger = get_logger("complex_builder")


class NoReductiveMoveError(RuntimeError):
    """A non-minimal vertex with no strictly reductive move."""


@dataclass(frozen=True)
class WhiteheadAuto:
    base: Basis
    operative: int
    values: Tuple[int, ...]

    def __post_init__(self):
        if self.values[self.operative - 1] != 0:
            raise ValueError("a move never conjugates its operative factor")

    def is_identity(self) -> bool:
        return not any(self.values)

    def label_values(self) -> Dict[int, int]:
        return {j: v for j, v in enumerate(self.values, start=1) if v}

    def conjugator(self, fp: FreeProduct, j: int) -> Word:
        """x_j, an element of H_k (empty at * and at the operative)."""
        if j == STAR or not self.values[j - 1]:
            return EMPTY
        return basis_element(fp, self.base, self.operative, self.values[j - 1])

    def inverse(self, fp: FreeProduct) -> "WhiteheadAuto":
        kf = fp.factor(self.operative)
        return WhiteheadAuto(self.base, self.operative, tuple(kf.inv(v) for v in self.values))

    def apply_to_basis(self, fp: FreeProduct) -> Basis:
        return Basis(tuple(
            canonical_conjugator(j, multiply(fp, self.conjugator(fp, j), w))
            for j, w in enumerate(self.base.conjugators, start=1)
        ))

    def describe(self, fp: FreeProduct) -> str:
        parts = [f"x{j}={format_word(self.conjugator(fp, j))}" for j in self.label_values()]
        return f"k={self.operative} " + " ".join(parts)


def move_from_conjugators(fp: FreeProduct, H: Basis, k: int,
                          words: Mapping[int, Word]) -> WhiteheadAuto:
    """Build (H, x) from conjugator words x_j, each required to lie in H_k."""
    wk = H.conjugator(k)
    values = [0] * fp.n
    for j, x in words.items():
        if j == STAR or not x:
            continue
        if j == k:
            raise ValueError("the operative factor is never conjugated")
        core = multiply(fp, invert(fp, wk), x, wk)
        if len(core) != 1 or core[0].factor != k:
            raise ValueError(f"conjugator for factor {j} is not in H_{k}")
        values[j - 1] = core[0].element
    return WhiteheadAuto(H, k, tuple(values))


Move = Union[WhiteheadAuto, FactorAuto]


def apply_auto(fp: FreeProduct, alpha, g: Word) -> Word:
    if isinstance(alpha, AutElement):
        return alpha.apply(fp, g)
    if isinstance(alpha, FactorAuto):
        return alpha.apply_word(g)
    pieces = []
    for i, piece in rewrite_in_basis(fp, alpha.base, g):
        x = alpha.conjugator(fp, i)
        pieces.append(conjugate(fp, x, piece) if x else piece)
    return multiply(fp, *pieces) if pieces else EMPTY


def _images_from(fp: FreeProduct, fn) -> Images:
    return tuple(
        tuple(fn((Letter(f.index, e),)) for e in range(1, f.order)) for f in fp.factors
    )


@dataclass(frozen=True)
class AutElement:
    """An element of the symmetric automorphism group, known by its generator images."""

    images: Images
    inverse_images: Images = field(compare=False, repr=False)
    moves: Tuple[Move, ...] = field(default=(), compare=False, repr=False)

    @classmethod
    def identity(cls, fp: FreeProduct) -> "AutElement":
        images = identity_images(fp)
        return cls(images, images, ())

    @classmethod
    def from_move(cls, fp: FreeProduct, move: Move) -> "AutElement":
        if isinstance(move, FactorAuto):
            inverse = move.inverse()
            return cls(_images_from(fp, move.apply_word), _images_from(fp, inverse.apply_word), (move,))
        inverse = move.inverse(fp)
        return cls(
            _images_from(fp, lambda g: apply_auto(fp, move, g)),
            _images_from(fp, lambda g: apply_auto(fp, inverse, g)),
            (move,),
        )

    @classmethod
    def from_moves(cls, fp: FreeProduct, moves: Iterable[Move]) -> "AutElement":
        """Left-to-right composition: the first move is applied first."""
        result = cls.identity(fp)
        for move in moves:
            result = result.then(fp, cls.from_move(fp, move))
        return result

    def apply(self, fp: FreeProduct, g: Word) -> Word:
        return apply_images(fp, self.images, g)

    def then(self, fp: FreeProduct, other: "AutElement") -> "AutElement":
        """self first, then other."""
        return AutElement(
            tuple(tuple(apply_images(fp, other.images, w) for w in row) for row in self.images),
            tuple(tuple(apply_images(fp, self.inverse_images, w) for w in row)
                  for row in other.inverse_images),
            self.moves + other.moves,
        )

    def inverse(self) -> "AutElement":
        return AutElement(self.inverse_images, self.images, ())

    def is_identity(self) -> bool:
        return all(len(w) == 1 and w[0] == (f, e)
                   for f, row in enumerate(self.images, start=1)
                   for e, w in enumerate(row, start=1))

    def power(self, fp: FreeProduct, m: int) -> "AutElement":
        base = self if m >= 0 else self.inverse()
        result = AutElement.identity(fp)
        for _ in range(abs(m)):
            result = result.then(fp, base)
        return result

    def longest_image(self) -> int:
        return max(len(w) for table in (self.images, self.inverse_images) for row in table for w in row)

    def order(self, fp: FreeProduct, cap: int = ORDER_CAP) -> Optional[int]:
        """Order if at most cap, else None.

        The powers of a finite-order element form a finite set, so their
        images stay short. A power with an image longer than cap times the
        element's own longest image (and than 2n + 1) counts as infinite order.
        """
        limit = max(cap * self.longest_image(), 2 * fp.n + 1)
        current = self
        for m in range(1, cap + 1):
            if current.is_identity():
                return m
            if current.longest_image() > limit:
                logger.debug("power %d outgrew %d letters; treating as infinite order", m, limit)
                return None
            current = current.then(fp, self)
        return None

    def key(self) -> Images:
        return self.images


def compose(fp: FreeProduct, outer: AutElement, inner: AutElement) -> AutElement:
    """outer after inner."""
    return inner.then(fp, outer)


def conjugate_by_basis(fp: FreeProduct, H: Basis, element: AutElement) -> AutElement:
    """phi_H element phi_H^-1: the same automorphism read in the basis H."""
    forward, backward = basis_images(fp, H), inverse_images(fp, H)
    return AutElement(
        _images_from(fp, lambda g: apply_images(
            fp, forward, element.apply(fp, apply_images(fp, backward, g)))),
        _images_from(fp, lambda g: apply_images(
            fp, forward, apply_images(fp, element.inverse_images, apply_images(fp, backward, g)))),
        (),
    )


def image_basis(fp: FreeProduct, phi, H: Basis) -> Basis:
    """The basis phi(H)."""
    if isinstance(phi, WhiteheadAuto) and phi.base == H:
        return phi.apply_to_basis(fp)
    conjugators = []
    for f in fp.factors:
        u = apply_auto(fp, phi, basis_element(fp, H, f.index, f.lam))
        half = len(u) // 2
        if len(u) % 2 == 0 or u[half].factor != f.index:
            raise ValueError(f"automorphism does not map H_{f.index} to a conjugate of G_{f.index}")
        conjugators.append(canonical_conjugator(f.index, u[:half]))
    return Basis(tuple(conjugators))


# ---------------------------------------------------------------------------
# vertex types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VertexType:
    """[H, A] stored by its canonical representative."""

    basis: Basis
    tree: PointedTree

    def key(self) -> Tuple:
        return (self.basis.key(), self.tree.code())

    def is_nuclear(self) -> bool:
        return self.tree.is_nuclear()

    def to_json(self) -> dict:
        return {
            "basis": basis_to_json(self.basis),
            "words": [format_word(w) for w in self.basis.conjugators],
            "tree": self.tree.code(),
        }


def carried_moves_at(fp: FreeProduct, H: Basis, T: PointedTree) -> List[WhiteheadAuto]:
    """Moves carried by (H, T): constant per petal, identity on the *-petal."""
    moves = []
    partitions = partitions_from_tree(T)
    for k in range(1, fp.n + 1):
        free = [petal for petal in partitions[k].petals if STAR not in petal]
        if not free:
            continue
        for combo in itertools.product(range(fp.factor(k).order), repeat=len(free)):
            if not any(combo):
                continue
            values = [0] * fp.n
            for petal, c in zip(free, combo):
                for j in petal:
                    values[j - 1] = c
            moves.append(WhiteheadAuto(H, k, tuple(values)))
    return moves


def carried_moves(fp: FreeProduct, v: VertexType) -> List[WhiteheadAuto]:
    return carried_moves_at(fp, v.basis, v.tree)


@lru_cache(maxsize=200_000)
def _orbit(fp: FreeProduct, H: Basis, T: PointedTree, cap: int) -> frozenset:
    if T.is_nuclear():
        return frozenset([H])
    seen = {H}
    queue = deque([H])
    while queue:
        current = queue.popleft()
        for move in carried_moves_at(fp, current, T):
            K = move.apply_to_basis(fp)
            if K not in seen:
                seen.add(K)
                if len(seen) > cap:
                    raise CapExceededError(f"carried orbit of {T.code()}", cap)
                queue.append(K)
    return frozenset(seen)


def carried_orbit(fp: FreeProduct, H: Basis, T: PointedTree, cap: int = ORBIT_CAP) -> frozenset:
    """All bases K with [K, T] = [H, T]."""
    return _orbit(fp, H, T, cap)


def canonical_vertex(fp: FreeProduct, basis: Basis, tree: PointedTree,
                     cap: int = ORBIT_CAP) -> VertexType:
    orbit = carried_orbit(fp, basis, tree, cap)
    return VertexType(min(orbit, key=Basis.key), tree)


def apply_to_vertex(fp: FreeProduct, phi, v: VertexType) -> VertexType:
    return canonical_vertex(fp, image_basis(fp, phi, v.basis), v.tree)


def fixes_vertex(fp: FreeProduct, phi, v: VertexType) -> bool:
    return image_basis(fp, phi, v.basis) in carried_orbit(fp, v.basis, v.tree)


def vertex_leq(fp: FreeProduct, u: VertexType, v: VertexType) -> bool:
    """u <= v: some common basis carries both with u's tree folded from v's."""
    if not poset_leq(u.tree, v.tree):
        return False
    return not carried_orbit(fp, u.basis, u.tree).isdisjoint(carried_orbit(fp, v.basis, v.tree))


def star_poset(fp: FreeProduct, v: VertexType) -> nx.DiGraph:
    """All [H_v, T] over every pointed tree, ordered by folding (transitively closed)."""
    if not v.is_nuclear():
        raise ValueError("star_poset expects a nuclear vertex")
    members = [canonical_vertex(fp, v.basis, T) for T in enumerate_pointed_trees(fp.n)]
    return _tree_order_poset(members)


def _tree_order_poset(members: Sequence[VertexType]) -> nx.DiGraph:
    poset = nx.DiGraph()
    poset.add_nodes_from(members)
    for a, b in itertools.permutations(members, 2):
        if poset_leq(a.tree, b.tree):
            poset.add_edge(a, b)
    return poset


# ---------------------------------------------------------------------------
# balls, reduction
# ---------------------------------------------------------------------------

def all_moves_at(fp: FreeProduct, H: Basis) -> Iterator[WhiteheadAuto]:
    """Every nontrivial Whitehead move at the nuclear vertex H."""
    for k in range(1, fp.n + 1):
        for values in move_value_tuples(fp, k):
            yield WhiteheadAuto(H, k, values)


@dataclass
class Ball:
    radius: int
    vertices: List[VertexType]
    norms: List[int]
    edges: List[Tuple[int, int]]
    index: Dict[Basis, int] = field(repr=False)

    def bases(self) -> List[Basis]:
        return [v.basis for v in self.vertices]

    def contains(self, H: Basis) -> bool:
        return H in self.index

    def norm_of(self, H: Basis) -> int:
        return self.norms[self.index[H]]

    def __len__(self):
        return len(self.vertices)


def enumerate_ball(fp: FreeProduct, W0: Optional[Sequence[Word]] = None, radius: Optional[int] = None,
                   cap: int = BALL_CAP) -> Ball:
    """Breadth-first search over nuclear vertices with ||H||_W0 <= radius."""
    W0 = list(W0) if W0 is not None else fp.lambdas()
    radius = fp.n + 4 if radius is None else radius
    if radius < fp.n:
        raise ValueError(f"radius {radius} is below n = {fp.n}")
    star = nuclear_tree(range(fp.n + 1))
    start = standard_basis(fp)
    index = {start: 0}
    vertices = [VertexType(start, star)]
    norms = [norm_W(fp, start, W0)]
    queue = deque([start])
    while queue:
        H = queue.popleft()
        for move in all_moves_at(fp, H):
            K = move.apply_to_basis(fp)
            if K in index:
                continue
            norm = norm_W(fp, K, W0)
            if norm > radius:
                continue
            if len(vertices) >= cap:
                raise CapExceededError("ball frontier", cap)
            index[K] = len(vertices)
            vertices.append(VertexType(K, star))
            norms.append(norm)
            queue.append(K)
    edges = shared_star_edges(fp, index)
    logger.info("ball radius %d in %s: %d vertices, %d edges", radius, fp.describe(), len(vertices), len(edges))
    return Ball(radius, vertices, norms, edges, index)


def shared_star_edges(fp: FreeProduct, index: Mapping[Basis, int]) -> List[Tuple[int, int]]:
    """Pairs of nuclear vertices that are both carried by one non-nuclear vertex type [K, T]."""
    edges = set()
    for T in enumerate_pointed_trees(fp.n):
        if T.is_nuclear():
            continue
        seen = set()
        for K in index:
            if K in seen:
                continue
            orbit = carried_orbit(fp, K, T)
            seen |= orbit
            members = sorted(index[B] for B in orbit if B in index)
            edges.update(itertools.combinations(members, 2))
    return sorted(edges)


def ball_to_jsonl(ball: Ball) -> str:
    lines = []
    for v, norm in zip(ball.vertices, ball.norms):
        record = v.to_json()
        record["norm"] = norm
        lines.append(json.dumps(record, sort_keys=True))
    return "\n".join(lines) + "\n"


def ball_to_dot(ball: Ball) -> str:
    lines = ["graph ball {"]
    for i, (v, norm) in enumerate(zip(ball.vertices, ball.norms)):
        label = "; ".join(format_word(w) for w in v.basis.conjugators)
        lines.append(f'  v{i} [label="{label}\\n{norm}"];')
    lines.extend(f"  v{a} -- v{b};" for a, b in ball.edges)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _strictly_less(fp: FreeProduct, K: Basis, H: Basis, norm: str, W0: Sequence[Word],
                   cutoff: int, factor_order: Optional[Sequence[int]]) -> bool:
    if norm == "w0":
        return norm_W(fp, K, W0) < norm_W(fp, H, W0)
    return compare_bases(fp, K, H, start=cutoff, factor_order=factor_order) is Comparison.LESS


def reductive_moves(fp: FreeProduct, v: VertexType, norm: str = "w0",
                    W0: Optional[Sequence[Word]] = None, cutoff: int = CUTOFF,
                    factor_order: Optional[Sequence[int]] = None) -> List[Tuple[WhiteheadAuto, VertexType]]:
    """Strictly norm-decreasing moves at a nuclear vertex, best first, with minimal carriers."""
    if not v.is_nuclear():
        raise ValueError("reductive moves are taken at nuclear vertices")
    W0 = list(W0) if W0 is not None else fp.lambdas()
    H = v.basis
    found = []
    for move in all_moves_at(fp, H):
        K = move.apply_to_basis(fp)
        if _strictly_less(fp, K, H, norm, W0, cutoff, factor_order):
            carrier = minimal_carrier(range(fp.n + 1), move.operative, move.label_values())
            found.append((move, K, canonical_vertex(fp, H, carrier)))
    if norm == "w0":
        found.sort(key=lambda item: (norm_W(fp, item[1], W0), item[1].key()))
    else:
        def order(a, b):
            result = compare_bases(fp, a[1], b[1], start=cutoff, factor_order=factor_order)
            if result is Comparison.EQUAL:
                return (a[1].key() > b[1].key()) - (a[1].key() < b[1].key())
            return -1 if result is Comparison.LESS else 1
        found.sort(key=functools.cmp_to_key(order))
    return [(move, carrier) for move, _, carrier in found]


@dataclass(frozen=True)
class ReductionStep:
    move: WhiteheadAuto
    vertex: VertexType
    norm: int


def reduce_to_minimal(fp: FreeProduct, v: VertexType, norm: str = "w0",
                      W0: Optional[Sequence[Word]] = None, cutoff: int = CUTOFF,
                      factor_order: Optional[Sequence[int]] = None,
                      max_steps: int = 10_000) -> List[ReductionStep]:
    """Descend by strictly reductive moves to the standard basis."""
    W0 = list(W0) if W0 is not None else fp.lambdas()
    path: List[ReductionStep] = []
    current = v
    while not current.basis.is_standard():
        if len(path) >= max_steps:
            raise CapExceededError("reduction steps", max_steps)
        moves = reductive_moves(fp, current, norm, W0, cutoff, factor_order)
        if not moves:
            raise NoReductiveMoveError(
                "no reductive move at " + "; ".join(format_word(w) for w in current.basis.conjugators))
        move = moves[0][0]
        K = move.apply_to_basis(fp)
        current = VertexType(K, current.tree)
        path.append(ReductionStep(move, current, norm_W(fp, K, W0)))
        logger.debug("step %d: %s -> norm %d", len(path), move.describe(fp), path[-1].norm)
    return path


def random_basis(fp: FreeProduct, steps: int, rng: np.random.Generator) -> Basis:
    """Apply `steps` uniformly chosen Whitehead moves to the standard basis."""
    H = standard_basis(fp)
    for _ in range(steps):
        moves = list(all_moves_at(fp, H))
        H = moves[int(rng.integers(len(moves)))].apply_to_basis(fp)
    return H


def reductive_star_intersection(fp: FreeProduct, v: VertexType, cutoff: int = CUTOFF,
                                factor_order: Optional[Sequence[int]] = None) -> nx.DiGraph:
    """st(v) intersected with the stars of nuclear vertices of smaller Z^G norm."""
    H = v.basis
    members = []
    for T in enumerate_pointed_trees(fp.n):
        if T.is_nuclear():
            continue
        orbit = carried_orbit(fp, H, T)
        if any(compare_bases(fp, K, H, start=cutoff, factor_order=factor_order) is Comparison.LESS
               for K in orbit if K != H):
            members.append(canonical_vertex(fp, H, T))
    return _tree_order_poset(members)


# ---------------------------------------------------------------------------
# stabilizers and the quotient
# ---------------------------------------------------------------------------

def close_group(fp: FreeProduct, generators: Sequence[AutElement], cap: int, what: str) -> List[AutElement]:
    identity = AutElement.identity(fp)
    seen = {identity: identity}
    queue = deque([identity])
    while queue:
        element = queue.popleft()
        for g in generators:
            product = element.then(fp, g)
            if product not in seen:
                seen[product] = product
                if len(seen) > cap:
                    raise CapExceededError(what, cap)
                queue.append(product)
    return sorted(seen.values(), key=AutElement.key)


def stabilizer(fp: FreeProduct, v: VertexType, cap: int = STABILIZER_CAP) -> List[AutElement]:
    """The group generated by carried moves and factor automorphisms that fix v."""
    candidates = [AutElement.from_move(fp, move) for move in carried_moves(fp, v)]
    for f in fp.factors:
        for psi in factor_automorphisms(f):
            if psi.is_identity():
                continue
            plain = AutElement.from_move(fp, psi)
            candidates.append(plain)
            if not v.basis.is_standard():
                candidates.append(conjugate_by_basis(fp, v.basis, plain))
    generators = [g for g in candidates if fixes_vertex(fp, g, v)]
    elements = close_group(fp, generators, cap, f"stabilizer of {v.tree.code()}")
    logger.debug("stabilizer of %s has order %d", v.tree.code(), len(elements))
    return elements


def simplex_stabilizer(fp: FreeProduct, chain: Sequence[VertexType],
                       cap: int = STABILIZER_CAP) -> List[AutElement]:
    if not chain:
        raise ValueError("empty simplex")
    return [g for g in stabilizer(fp, chain[0], cap)
            if all(fixes_vertex(fp, g, v) for v in chain[1:])]


def quotient_representative(fp: FreeProduct, v: VertexType) -> Tuple[PointedTree, AutElement]:
    """The automorphism phi_H^-1 carrying [H, T] to [H0, T]; the quotient is indexed by trees."""
    element = AutElement(inverse_images(fp, v.basis), basis_images(fp, v.basis), ())
    return v.tree, element


# ---------------------------------------------------------------------------
# automorphisms of product form  prod_j (H0, y^j) psi_j
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactoredElement:
    """y[j-1][i-1] in G_j is the conjugating value of part j at factor i; psi[j-1] in Aut(G_j)."""

    y: Tuple[Tuple[int, ...], ...]
    psi: Tuple[FactorAuto, ...]

    def part(self, fp: FreeProduct, j: int) -> AutElement:
        moves: List[Move] = []
        if not self.psi[j - 1].is_identity():
            moves.append(self.psi[j - 1])
        if any(self.y[j - 1]):
            moves.append(WhiteheadAuto(standard_basis(fp), j, self.y[j - 1]))
        return AutElement.from_moves(fp, moves)

    def to_aut(self, fp: FreeProduct, order: Optional[Sequence[int]] = None) -> AutElement:
        """Parts applied one after another, factor 1 first unless `order` says otherwise."""
        order = order if order is not None else range(1, fp.n + 1)
        result = AutElement.identity(fp)
        for j in order:
            result = result.then(fp, self.part(fp, j))
        return result

    def is_trivial(self) -> bool:
        return not any(any(row) for row in self.y) and all(p.is_identity() for p in self.psi)


def trivial_factored(fp: FreeProduct) -> FactoredElement:
    return FactoredElement(
        tuple(tuple(0 for _ in range(fp.n)) for _ in range(fp.n)),
        tuple(FactorAuto(f.index, tuple(range(f.order))) for f in fp.factors),
    )


def product_form_elements(fp: FreeProduct) -> Iterator[FactoredElement]:
    per_factor = []
    for f in fp.factors:
        others = [i for i in range(1, fp.n + 1) if i != f.index]
        options = []
        for combo in itertools.product(range(f.order), repeat=len(others)):
            row = [0] * fp.n
            for i, c in zip(others, combo):
                row[i - 1] = c
            for psi in factor_automorphisms(f):
                options.append((tuple(row), psi))
        per_factor.append(options)
    for choice in itertools.product(*per_factor):
        yield FactoredElement(tuple(r for r, _ in choice), tuple(p for _, p in choice))


def finite_order_elements(fp: FreeProduct, cap: int = 12) -> List[Tuple[FactoredElement, AutElement, int]]:
    """Nontrivial product-form elements of order at most cap."""
    found = []
    for factored in product_form_elements(fp):
        if factored.is_trivial():
            continue
        element = factored.to_aut(fp)
        m = element.order(fp, cap)
        if m is not None and m > 1:
            found.append((factored, element, m))
    logger.info("%s: %d finite-order product-form elements (order <= %d)", fp.describe(), len(found), cap)
    return found
