"""
Fixed points of finite subgroups F of the symmetric automorphism group.

F fixes a base vertex [H0, A] that is reduced in the fixed subcomplex L(G)^F.
Everything here is indexed by the pointed tree A: the labels at each depth,
the path J(i) from * to every label, the label sets I(a) of the unlabelled
vertices (blocks) and their stems. With a basis H written along A, each label
i gets a relative conjugator w_i with H_i = w(J(i)) G_i w(J(i))^-1, where
w(J(i)) = w_{z_1} ... w_{z_k} telescopes along the path.

Blocks of A are visited in breadth-first order from *, which puts every block
after the blocks on its path to *.
"""

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from basis_norms import (
    Basis,
    BasisError,
    basis_images,
    basis_length,
    canonical_conjugator,
    inverse_images,
    standard_basis,
)
from complex_builder import (
    AutElement,
    Ball,
    FactoredElement,
    VertexType,
    WhiteheadAuto,
    canonical_vertex,
    carried_moves_at,
    carried_orbit,
    close_group,
    finite_order_elements,
    fixes_vertex,
    image_basis,
    move_from_conjugators,
    vertex_leq,
)
from config import BLOCK_CUTOFF, STABILIZER_CAP, get_logger
from group_core import (
    EMPTY,
    CapExceededError,
    FactorAuto,
    FactorGroup,
    FreeProduct,
    Letter,
    Word,
    conjugate,
    cyclic_factor,
    format_word,
    free_product,
    invert,
    iter_elements,
    multiply,
    project,
    reduce_letters,
)
from topology import poset_join
from whitehead_poset import (
    STAR,
    PointedTree,
    coarsen_at,
    enumerate_pointed_trees,
    make_tree,
    partitions_from_tree,
    pointed_trees_on,
    poset_leq,
)

logger = get_logger("fixed_points")


class FactorizationError(ValueError):
    """An automorphism that is not a product of tree-ordered moves and factor automorphisms."""


class LiftError(ValueError):
    """A local move that cannot be lifted, or a move that cannot be restricted to a block."""


# ---------------------------------------------------------------------------
# tree indices
# ---------------------------------------------------------------------------

@dataclass
class TreeIndices:
    tree: PointedTree
    paths: Dict[int, Tuple[int, ...]]
    parent_block: Dict[int, int]
    stems: Tuple[int, ...]
    basis: Optional[Basis] = None
    relative: Dict[int, Word] = field(default_factory=dict)
    prefix: Dict[int, Word] = field(default_factory=dict)

    @property
    def labels(self) -> Tuple[int, ...]:
        return tuple(x for x in self.tree.labels if x != STAR)

    def level(self, i: int) -> int:
        return len(self.paths[i])

    def levels(self) -> Dict[int, List[int]]:
        """I_k: labels at distance 2k from *."""
        out: Dict[int, List[int]] = {}
        for i in self.labels:
            out.setdefault(self.level(i), []).append(i)
        return out

    def j_less(self, i: int) -> Tuple[int, ...]:
        return self.paths[i][:-1]

    def block_labels(self, a: int) -> Tuple[int, ...]:
        """I(a)"""
        return tuple(x for x in self.tree.blocks[a] if x != STAR)

    def neighbours(self, i: int) -> Tuple[int, ...]:
        """I(i) = I(a) for the block a just above i."""
        return self.block_labels(self.parent_block[i])

    def children(self, a: int) -> Tuple[int, ...]:
        return tuple(x for x in self.block_labels(a) if x != self.stems[a])

    def child_blocks(self, label: int) -> List[int]:
        return [b for b, stem in enumerate(self.stems) if stem == label]

    def subtree(self, label: int) -> List[int]:
        """label and every label below it."""
        out = [label]
        for b in self.child_blocks(label):
            for child in self.children(b):
                out.extend(self.subtree(child))
        return out

    def block_subtree(self, a: int) -> List[int]:
        return [x for child in self.children(a) for x in self.subtree(child)]

    def pw(self, label: int) -> Word:
        """w(J(label)); empty at *."""
        return EMPTY if label == STAR else self.prefix[label]


def tree_indices(fp: FreeProduct, tree: PointedTree, basis: Optional[Basis] = None) -> TreeIndices:
    g = tree.graph
    paths, parent = {}, {}
    for i in tree.labels:
        if i == STAR:
            continue
        path = nx.shortest_path(g, ("L", STAR), ("L", i))
        paths[i] = tuple(x for kind, x in path if kind == "L")[1:]
        parent[i] = path[-2][1]
    stems = tuple(nx.shortest_path(g, ("U", b), ("L", STAR))[1][1] for b in range(len(tree.blocks)))
    indices = TreeIndices(tree, paths, parent, stems, basis)
    if basis is not None:
        for i in sorted(paths, key=lambda x: (len(paths[x]), x)):
            above = indices.pw(paths[i][-2]) if len(paths[i]) > 1 else EMPTY
            w = canonical_conjugator(i, multiply(fp, invert(fp, above), basis.conjugator(i)))
            indices.relative[i] = w
            indices.prefix[i] = multiply(fp, above, w)
    return indices


# ---------------------------------------------------------------------------
# factorisation  phi = prod_j (H0, y^j) psi_j
# ---------------------------------------------------------------------------

def factor_element(fp: FreeProduct, phi: AutElement, indices: TreeIndices) -> FactoredElement:
    """Read y and psi off the generator images; conjugating letters must follow the paths of the tree."""
    y = [[0] * fp.n for _ in range(fp.n)]
    psi = []
    for f in fp.factors:
        i = f.index
        images = [0] * f.order
        conjugator = None
        for e in range(1, f.order):
            u = phi.images[i - 1][e - 1]
            half = len(u) // 2
            if len(u) % 2 == 0 or u[half].factor != i:
                raise FactorizationError(f"image of {i}:{e} is not a conjugate of G_{i}")
            c = u[:half]
            if conjugator is not None and c != conjugator:
                raise FactorizationError(f"G_{i} is not conjugated by a single element")
            if u[half + 1:] != invert(fp, c):
                raise FactorizationError(f"image of {i}:{e} is not a conjugate")
            conjugator = c
            images[e] = u[half].element
        psi.append(FactorAuto(i, tuple(images)))
        path = indices.j_less(i)
        position = 0
        for letter in conjugator:
            while position < len(path) and path[position] != letter.factor:
                position += 1
            if position == len(path):
                raise FactorizationError(f"conjugator of G_{i} leaves the path {path}")
            y[letter.factor - 1][i - 1] = letter.element
            position += 1
    result = FactoredElement(tuple(tuple(row) for row in y), tuple(psi))
    if result.to_aut(fp) != phi:
        raise FactorizationError("recomposed parts differ from the element")
    return result


# ---------------------------------------------------------------------------
# finite subgroups
# ---------------------------------------------------------------------------

@dataclass
class FSubgroup:
    fp: FreeProduct
    tree: PointedTree
    generators: Tuple[AutElement, ...]
    elements: Tuple[AutElement, ...]
    factored: Tuple[FactoredElement, ...]

    @property
    def base(self) -> VertexType:
        return VertexType(standard_basis(self.fp), self.tree)

    @property
    def order(self) -> int:
        return len(self.elements)

    @cached_property
    def indices(self) -> TreeIndices:
        return tree_indices(self.fp, self.tree)

    @cached_property
    def circ(self) -> "CircTables":
        return compute_circ(self)

    def generator_factors(self) -> List[FactoredElement]:
        lookup = dict(zip(self.elements, self.factored))
        return [lookup[g] for g in self.generators]


def is_fixed(fp: FreeProduct, F: FSubgroup, basis: Basis, tree: PointedTree) -> bool:
    orbit = carried_orbit(fp, basis, tree)
    return all(image_basis(fp, g, basis) in orbit for g in F.generators)


def is_reduced(fp: FreeProduct, F: FSubgroup, v: VertexType) -> bool:
    """No fixed vertex lies strictly below v."""
    lower = [T for T in enumerate_pointed_trees(fp.n) if T != v.tree and poset_leq(T, v.tree)]
    orbit = carried_orbit(fp, v.basis, v.tree)
    for T in lower:
        seen = set()
        for K in orbit:
            if K in seen:
                continue
            seen |= carried_orbit(fp, K, T)
            if is_fixed(fp, F, K, T):
                return False
    return True


def make_f_subgroup(fp: FreeProduct, tree: PointedTree, generators: Sequence[AutElement],
                    cap: int = STABILIZER_CAP, require_reduced: bool = True) -> FSubgroup:
    base = VertexType(standard_basis(fp), tree)
    generators = tuple(g for g in generators if not g.is_identity())
    for g in generators:
        if not fixes_vertex(fp, g, base):
            raise ValueError(f"generator does not fix [H0, {tree.code()}]")
    elements = tuple(close_group(fp, generators, cap, "finite subgroup"))
    indices = tree_indices(fp, tree)
    factored = tuple(factor_element(fp, e, indices) for e in elements)
    F = FSubgroup(fp, tree, generators, elements, factored)
    if require_reduced and not is_reduced(fp, F, base):
        raise ValueError(f"[H0, {tree.code()}] is not reduced in the fixed subcomplex")
    logger.debug("F of order %d fixing [H0, %s]", F.order, tree.code())
    return F


def parts_subgroup(F: FSubgroup) -> FSubgroup:
    """The subgroup generated by the parts (H0, y^j) psi_j of the generators of F."""
    fp = F.fp
    parts = [factored.part(fp, j) for factored in F.generator_factors() for j in range(1, fp.n + 1)]
    return make_f_subgroup(fp, F.tree, parts, require_reduced=False)


def constructed_subgroups(fp: FreeProduct, count: int = 3, cap: int = 12) -> List[FSubgroup]:
    """Cyclic subgroups from the finite-order search, each based at the first tree where it is reduced."""
    trees = enumerate_pointed_trees(fp.n)
    found: List[FSubgroup] = []
    seen = set()
    for _, element, _ in finite_order_elements(fp, cap):
        if len(found) >= count:
            break
        for T in trees:
            if not fixes_vertex(fp, element, VertexType(standard_basis(fp), T)):
                continue
            try:
                F = make_f_subgroup(fp, T, [element])
            except (ValueError, CapExceededError) as exc:
                logger.debug("skipping base %s: %s", T.code(), exc)
                continue
            key = (T, frozenset(F.elements))
            if key not in seen:
                seen.add(key)
                found.append(F)
            break
    logger.info("%s: constructed %d finite subgroups", fp.describe(), len(found))
    return found


def wide_blocks(indices: TreeIndices) -> List[int]:
    """Blocks with two or more labels besides * and the stem; only these have a nonempty local star."""
    return [a for a in range(len(indices.tree.blocks)) if len(indices.children(a)) >= 2]


def split_subgroups(fp: FreeProduct, min_wide: int = 1, cap: int = STABILIZER_CAP) -> Iterator[FSubgroup]:
    """<(H0, x)> for the first carried move x at each tree with min_wide wide blocks whose base is reduced."""
    H0 = standard_basis(fp)
    for T in enumerate_pointed_trees(fp.n):
        if len(wide_blocks(tree_indices(fp, T))) < min_wide:
            continue
        for move in carried_moves_at(fp, H0, T):
            try:
                F = make_f_subgroup(fp, T, [AutElement.from_move(fp, move)], cap)
            except (ValueError, CapExceededError) as exc:
                logger.debug("skipping %s at %s: %s", move.describe(fp), T.code(), exc)
                continue
            yield F
            break


# ---------------------------------------------------------------------------
# twisted-fixed subgroups
# ---------------------------------------------------------------------------

def twisted_fixed_subgroup(fp: FreeProduct, element: FactoredElement, j: int, k: int) -> Tuple[int, ...]:
    """{g in G_j : y^j_k g (y^j_k)^-1 = psi_j(g)}"""
    f = fp.factor(j)
    y = element.y[j - 1][k - 1]
    psi = element.psi[j - 1]
    return tuple(g for g in range(f.order) if f.conj(y, g) == psi.apply(g))


def _check_subgroup(f: FactorGroup, members: FrozenSet[int]) -> None:
    if 0 not in members or any(f.mul(a, b) not in members for a in members for b in members):
        raise ValueError(f"twisted-fixed set in factor {f.index} is not a subgroup")


@dataclass
class CircTables:
    tree: PointedTree
    pairs: Dict[Tuple[int, int], Tuple[int, ...]]
    block_sets: Dict[Tuple[int, int], Tuple[int, ...]]
    formal: Dict[Tuple[int, int], bool]
    lam: Dict[Tuple[int, int], int]
    groups: Tuple["BlockGroup", ...] = ()

    def circ(self, j: int, a: int) -> Tuple[int, ...]:
        return self.block_sets[(j, a)]

    def double_circ_order(self, j: int, a: int) -> int:
        return 2 if self.formal[(j, a)] else len(self.block_sets[(j, a)])


def compute_circ(F: FSubgroup, cutoff: int = BLOCK_CUTOFF) -> CircTables:
    fp = F.fp
    pairs = {}
    for j in range(1, fp.n + 1):
        f = fp.factor(j)
        for k in range(1, fp.n + 1):
            members = set(range(f.order))
            for element in F.factored:
                members &= set(twisted_fixed_subgroup(fp, element, j, k))
            _check_subgroup(f, frozenset(members))
            pairs[(j, k)] = tuple(sorted(members))

    indices = F.indices
    block_sets, formal, lam = {}, {}, {}
    for a in range(len(F.tree.blocks)):
        child = min(indices.children(a))
        for j in indices.block_labels(a):
            members = pairs[(j, child)]
            block_sets[(j, a)] = members
            formal[(j, a)] = len(members) == 1
            lam[(j, a)] = fp.factor(j).lam if formal[(j, a)] else members[1]
            if formal[(j, a)]:
                logger.debug("G°(%d, block %d) is trivial; using a formal Z/2", j, a)
    tables = CircTables(F.tree, pairs, block_sets, formal, lam)
    tables.groups = tuple(block_group(fp, indices, tables, a, cutoff) for a in range(len(F.tree.blocks)))
    return tables


# ---------------------------------------------------------------------------
# block groups G_a
# ---------------------------------------------------------------------------

def block_slots(indices: TreeIndices, a: int) -> Tuple[int, ...]:
    """Labels of I(a) with the stem first."""
    stem = indices.stems[a]
    head = (stem,) if stem != STAR else ()
    return head + tuple(sorted(x for x in indices.block_labels(a) if x != stem))


@dataclass
class BlockGroup:
    """G_a = *_{j in I(a)} G°°_{j,a} with its well-order, plus the full free factor on I(a)."""

    block: int
    stem: int
    slots: Tuple[int, ...]
    subgroups: Tuple[Tuple[int, ...], ...]
    formal: Tuple[bool, ...]
    local: FreeProduct
    full: FreeProduct
    elements: Tuple[Word, ...]

    def slot(self, label: int) -> int:
        try:
            return self.slots.index(label) + 1
        except ValueError:
            raise ValueError(f"label {label} is not in block {self.block}") from None

    def to_local(self, w: Word) -> Word:
        letters = []
        for l in w:
            s = self.slot(l.factor)
            members = self.subgroups[s - 1]
            if self.formal[s - 1] or l.element not in members:
                raise BasisError(f"letter {l.factor}:{l.element} is outside G°(block {self.block})")
            letters.append(Letter(s, members.index(l.element)))
        return reduce_letters(self.local, letters)

    def embed(self, u: Word, fp: FreeProduct) -> Word:
        """Local word to a word of G; a formal letter stands for the factor's lambda."""
        return reduce_letters(fp, (Letter(self.slots[l.factor - 1], self.subgroups[l.factor - 1][l.element])
                                   for l in u))


def block_group(fp: FreeProduct, indices: TreeIndices, tables: CircTables, a: int,
                cutoff: int = BLOCK_CUTOFF) -> BlockGroup:
    slots = block_slots(indices, a)
    factors, subgroups, formal = [], [], []
    for s, j in enumerate(slots, start=1):
        f = fp.factor(j)
        if tables.formal[(j, a)]:
            factors.append(cyclic_factor(s, 2))
            subgroups.append((0, f.lam))
            formal.append(True)
            continue
        members = tables.block_sets[(j, a)]
        position = {g: x for x, g in enumerate(members)}
        table = tuple(tuple(position[f.mul(g, h)] for h in members) for g in members)
        factors.append(FactorGroup(s, table, f"{f.name or 'G' + str(j)}°", "table", 1))
        subgroups.append(members)
        formal.append(False)
    local = free_product(factors)
    full = free_product(fp.factor(j) for j in slots)

    lambdas = [(Letter(s, 1),) for s in range(1, len(slots) + 1)]
    rest = (w for w in iter_elements(local) if w and w not in lambdas)
    elements = tuple(itertools.islice(itertools.chain(lambdas, rest), cutoff))
    return BlockGroup(a, indices.stems[a], slots, tuple(subgroups), tuple(formal), local, full, elements)


def block_norm(fp: FreeProduct, group: BlockGroup, basis: Basis) -> Tuple[int, ...]:
    """|g|_H for the first elements g of G_a."""
    return tuple(basis_length(fp, basis, group.embed(g, fp)) for g in group.elements)


def f_norm(fp: FreeProduct, basis: Basis, F: FSubgroup) -> Tuple[int, ...]:
    """Coordinates over the union of the G_a, blocks in tree order."""
    return tuple(itertools.chain.from_iterable(block_norm(fp, g, basis) for g in F.circ.groups))


# ---------------------------------------------------------------------------
# F-standard representatives
# ---------------------------------------------------------------------------

def is_F_standard(fp: FreeProduct, basis: Basis, tree: PointedTree, F: FSubgroup) -> bool:
    if tree != F.tree:
        return False
    pairs = F.circ.pairs
    indices = tree_indices(fp, tree, basis)
    for i in indices.labels:
        allowed = indices.neighbours(i)
        for letter in indices.relative[i]:
            if letter.factor not in allowed or letter.element not in pairs[(letter.factor, i)]:
                return False
    return True


def standard_representative(fp: FreeProduct, v: VertexType, F: FSubgroup) -> Optional[Tuple[Basis, PointedTree]]:
    if v.tree != F.tree:
        return None
    for K in sorted(carried_orbit(fp, v.basis, v.tree), key=Basis.key):
        if is_F_standard(fp, K, v.tree, F):
            return K, v.tree
    return None


def split_length(fp: FreeProduct, indices: TreeIndices, a: int, h: Word) -> Tuple[int, int]:
    """(2|w(J(i))|_H, |h|_H(a)) for h in the free factor on I(a), i the stem of a."""
    if indices.basis is None:
        raise ValueError("split_length needs indices built with a basis")
    labels = indices.block_labels(a)
    if any(l.factor not in labels for l in h):
        raise ValueError(f"word is not in the free factor on {labels}")
    stem = indices.stems[a]
    outer = 0 if stem == STAR else 2 * basis_length(fp, indices.basis, indices.pw(stem))
    slots = block_slots(indices, a)
    full = free_product(fp.factor(j) for j in slots)
    local = Basis(tuple(
        EMPTY if j == stem else tuple(Letter(slots.index(l.factor) + 1, l.element) for l in indices.relative[j])
        for j in slots
    ))
    inner = basis_length(full, local, tuple(Letter(slots.index(l.factor) + 1, l.element) for l in h))
    return outer, inner


def _conjugate_block(fp: FreeProduct, basis: Basis, indices: TreeIndices, a: int, g: int) -> Basis:
    """Conjugate everything below block a by w(J(i)) g w(J(i))^-1, i the stem."""
    i = indices.stems[a]
    x = conjugate(fp, indices.pw(i), (Letter(i, g),))
    return move_from_conjugators(fp, basis, i, {j: x for j in indices.block_subtree(a)}).apply_to_basis(fp)


def minimize_representative(fp: FreeProduct, basis: Basis, F: FSubgroup) -> Basis:
    """Walk the blocks in order, fixing each G_a-block at its least value."""
    tables = F.circ
    H = basis
    for group in tables.groups[1:]:
        a, i = group.block, group.stem
        if tables.formal[(i, a)]:
            continue
        indices = tree_indices(fp, F.tree, H)
        candidates = [H] + [_conjugate_block(fp, H, indices, a, g) for g in tables.block_sets[(i, a)][1:]]
        H = min(candidates, key=lambda K: (block_norm(fp, group, K), K.key()))
    return H


# ---------------------------------------------------------------------------
# frames: an F-standard basis with its block data
# ---------------------------------------------------------------------------

@dataclass
class StandardFrame:
    fp: FreeProduct
    F: FSubgroup
    basis: Basis
    indices: TreeIndices

    @property
    def tables(self) -> CircTables:
        return self.F.circ

    def group(self, a: int) -> BlockGroup:
        return self.tables.groups[a]

    def local_basis(self, a: int) -> Basis:
        """H_a in G_a: the stem stays put, every other w_j is read in G°°."""
        group = self.group(a)
        return Basis(tuple(
            EMPTY if j == group.stem else group.to_local(self.indices.relative[j]) for j in group.slots
        ))

    def norm(self) -> Tuple[int, ...]:
        return f_norm(self.fp, self.basis, self.F)


def standard_frame(fp: FreeProduct, F: FSubgroup, basis: Basis) -> StandardFrame:
    if not is_F_standard(fp, basis, F.tree, F):
        raise ValueError("basis is not F-standard")
    return StandardFrame(fp, F, basis, tree_indices(fp, F.tree, basis))


def local_norm(group: BlockGroup, local_basis: Basis) -> Tuple[int, ...]:
    return tuple(basis_length(group.local, local_basis, g) for g in group.elements)


def local_vertex_norm(group: BlockGroup, local_basis: Basis) -> Tuple[int, ...]:
    """Least local norm over the conjugations of all non-stem slots by the stem factor."""
    best = local_norm(group, local_basis)
    if group.stem == STAR or group.formal[0]:
        return best
    stem_order = group.local.factor(1).order
    for x in range(1, stem_order):
        values = (0,) + (x,) * (len(group.slots) - 1)
        moved = WhiteheadAuto(local_basis, 1, values).apply_to_basis(group.local)
        best = min(best, local_norm(group, moved))
    return best


# ---------------------------------------------------------------------------
# lifting and restricting moves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalMove:
    """A move of L(G_a): operative label k, and an element of G°_{k,a} per other label of the block."""

    block: int
    operative: int
    values: Tuple[Tuple[int, int], ...]

    def value(self, label: int) -> int:
        return dict(self.values).get(label, 0)

    def is_identity(self) -> bool:
        return not any(g for _, g in self.values)


def local_whitehead(frame: StandardFrame, move: LocalMove) -> WhiteheadAuto:
    group = frame.group(move.block)
    k = group.slot(move.operative)
    members = group.subgroups[k - 1]
    values = [0] * len(group.slots)
    for label, g in move.values:
        if not g:
            continue
        if group.formal[k - 1] or g not in members:
            raise LiftError(f"value {g} is outside G°({move.operative}, block {move.block})")
        values[group.slot(label) - 1] = members.index(g)
    return WhiteheadAuto(frame.local_basis(move.block), k, tuple(values))


def local_moves(frame: StandardFrame, a: int) -> Iterator[LocalMove]:
    """Nontrivial moves at H_a that leave the stem alone."""
    group = frame.group(a)
    for k in group.slots:
        if frame.tables.formal[(k, a)]:
            continue
        targets = [l for l in group.slots if l != k and l != group.stem]
        members = frame.tables.block_sets[(k, a)]
        for combo in itertools.product(members, repeat=len(targets)):
            if any(combo):
                yield LocalMove(a, k, tuple((l, g) for l, g in zip(targets, combo) if g))


def local_reductive_moves(frame: StandardFrame, a: int) -> List[LocalMove]:
    group = frame.group(a)
    H_a = frame.local_basis(a)
    current = local_vertex_norm(group, H_a)
    return [m for m in local_moves(frame, a)
            if local_vertex_norm(group, local_whitehead(frame, m).apply_to_basis(group.local)) < current]


def split_block(tree: PointedTree, a: int, k: int, values: Mapping[int, int]) -> PointedTree:
    """Replace block a by one block at k per value class (identity class keeps * and the stem)."""
    classes: Dict[int, List[int]] = {}
    for x in tree.blocks[a]:
        if x != k:
            classes.setdefault(values.get(x, 0), []).append(x)
    blocks = [b for position, b in enumerate(tree.blocks) if position != a]
    blocks.extend([k] + members for members in classes.values())
    return make_tree(blocks, tree.labels)


def lift_move(frame: StandardFrame, move: LocalMove) -> Tuple[WhiteheadAuto, PointedTree]:
    """The move of L(G) conjugating each subtree below a block label l by w(J(k)) g_l w(J(k))^-1."""
    fp, indices, a, k = frame.fp, frame.indices, move.block, move.operative
    labels = indices.block_labels(a)
    if k not in labels:
        raise LiftError(f"operative {k} is not in block {a}")
    stem = indices.stems[a]
    if frame.tables.formal[(k, a)] and not move.is_identity():
        raise LiftError(f"G°({k}, block {a}) is trivial")
    members = frame.tables.block_sets[(k, a)]
    words: Dict[int, Word] = {}
    for label, g in move.values:
        if label not in labels or label == k:
            raise LiftError(f"label {label} cannot carry a value at operative {k}")
        if label == stem and g:
            raise LiftError("a lifted move never conjugates the stem")
        if g not in members:
            raise LiftError(f"value {g} is outside G°({k}, block {a})")
        if g:
            x = conjugate(fp, indices.pw(k), (Letter(k, g),))
            words.update((j, x) for j in indices.subtree(label))
    auto = move_from_conjugators(fp, frame.basis, k, words)
    return auto, split_block(frame.F.tree, a, k, dict(move.values))


def restrict_move(frame: StandardFrame, alpha: WhiteheadAuto, a: int) -> LocalMove:
    fp, indices, k = frame.fp, frame.indices, alpha.operative
    if alpha.base != frame.basis:
        raise ValueError("move is not based at the frame's basis")
    labels = indices.block_labels(a)
    if k not in labels:
        raise LiftError(f"block {a} is not adjacent to operative {k}")
    prefix = indices.pw(k)
    back = invert(fp, prefix)
    members = frame.tables.block_sets[(k, a)]
    values = []
    for label in labels:
        if label == k:
            continue
        core = multiply(fp, back, alpha.conjugator(fp, label), prefix)
        if not core:
            continue
        if len(core) != 1 or core[0].factor != k:
            raise LiftError(f"conjugator at {label} is not in H_{k}")
        g = core[0].element
        if label == indices.stems[a]:
            raise LiftError("move conjugates the stem of the block")
        if g not in members:
            raise LiftError(f"value {g} is outside G°({k}, block {a})")
        values.append((label, g))
    return LocalMove(a, k, tuple(values))


def decompose_move(frame: StandardFrame, alpha: WhiteheadAuto) -> Tuple[List[LocalMove], bool]:
    """Restrictions to every block at the operative, and whether their lifts multiply back to alpha."""
    fp = frame.fp
    parts = [restrict_move(frame, alpha, a) for a in frame.F.tree.blocks_at(alpha.operative)]
    lifts = [AutElement.from_move(fp, lift_move(frame, m)[0]) for m in parts]
    target = AutElement.from_move(fp, alpha)
    forward = AutElement.identity(fp)
    for lifted in lifts:
        forward = forward.then(fp, lifted)
    backward = AutElement.identity(fp)
    for lifted in reversed(lifts):
        backward = backward.then(fp, lifted)
    return parts, forward == target and backward == target


def lowers_f_norm(frame: StandardFrame, alpha: WhiteheadAuto) -> bool:
    K = minimize_representative(frame.fp, alpha.apply_to_basis(frame.fp), frame.F)
    return f_norm(frame.fp, K, frame.F) < frame.norm()


def twisted_frames(fp: FreeProduct, F: FSubgroup, depth: int = 2) -> List[StandardFrame]:
    """
    Minimal frames at reduced fixed vertices [H, A] reached from H0 by up to `depth`
    lifted local moves, one frame per vertex, in discovery order.
    """
    tree = F.tree
    start = standard_frame(fp, F, standard_basis(fp))
    seen = {canonical_vertex(fp, start.basis, tree)}
    frames, layer = [start], [start]
    for _ in range(depth):
        following = []
        for frame in layer:
            for a in range(len(tree.blocks)):
                for move in local_moves(frame, a):
                    H = lift_move(frame, move)[0].apply_to_basis(fp)
                    v = canonical_vertex(fp, H, tree)
                    if v in seen:
                        continue
                    seen.add(v)
                    if not (is_fixed(fp, F, H, tree) and is_reduced(fp, F, v)):
                        continue
                    H = minimize_representative(fp, H, F)
                    if not is_F_standard(fp, H, tree, F):
                        logger.debug("lifted basis at %s is not F-standard", tree.code())
                        continue
                    following.append(standard_frame(fp, F, H))
        frames.extend(following)
        layer = following
    logger.debug("%d frames at %s within %d lifted moves", len(frames), tree.code(), depth)
    return frames


# ---------------------------------------------------------------------------
# fixed subcomplex
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedVertex:
    vertex: VertexType
    reduced: bool
    within_margin: bool


@dataclass
class FixedSubcomplex:
    vertices: List[FixedVertex]
    poset: nx.DiGraph

    def reduced(self, margin_only: bool = True) -> List[VertexType]:
        return [fv.vertex for fv in self.vertices if fv.reduced and (fv.within_margin or not margin_only)]

    def __len__(self):
        return len(self.vertices)


def fixed_subcomplex(fp: FreeProduct, ball: Ball, F: FSubgroup,
                     trees: Optional[Sequence[PointedTree]] = None) -> FixedSubcomplex:
    """Vertex types with a representative basis in the ball that every generator of F fixes."""
    trees = list(trees) if trees is not None else enumerate_pointed_trees(fp.n)
    found: List[FixedVertex] = []
    for T in trees:
        seen = set()
        for K in ball.bases():
            if K in seen:
                continue
            orbit = carried_orbit(fp, K, T)
            seen |= orbit
            if not all(image_basis(fp, g, K) in orbit for g in F.generators):
                continue
            vertex = VertexType(min(orbit, key=Basis.key), T)
            found.append(FixedVertex(vertex, is_reduced(fp, F, vertex), all(ball.contains(B) for B in orbit)))
    poset = nx.DiGraph()
    poset.add_nodes_from(fv.vertex for fv in found)
    for u, v in itertools.permutations([fv.vertex for fv in found], 2):
        if vertex_leq(fp, u, v):
            poset.add_edge(u, v)
    logger.info("fixed subcomplex of |F| = %d: %d vertices, %d reduced",
                F.order, len(found), sum(fv.reduced for fv in found))
    return FixedSubcomplex(found, poset)


# ---------------------------------------------------------------------------
# twisting identities
# ---------------------------------------------------------------------------

@dataclass
class TwistingReport:
    checked: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def verify_twisting(fp: FreeProduct, F: FSubgroup, basis: Basis, tree: PointedTree) -> TwistingReport:
    """Compare the parts of each generator in H0 (y) and in H (x) through the projections to the factors."""
    report = TwistingReport()
    report.checked += 1
    if tree != F.tree:
        report.violations.append(f"tree {tree.code()} differs from the base tree {F.tree.code()}")
        return report
    phi_H = AutElement(basis_images(fp, basis), inverse_images(fp, basis), ())
    indices = tree_indices(fp, tree, basis)
    for phi, y in zip(F.generators, F.generator_factors()):
        read_in_H = phi_H.then(fp, phi).then(fp, phi_H.inverse())
        try:
            x = factor_element(fp, read_in_H, indices)
        except FactorizationError as exc:
            report.violations.append(f"generator does not factor along the tree in H: {exc}")
            continue
        for i in indices.labels:
            moved = phi.apply(fp, indices.pw(i))
            back = invert(fp, indices.pw(i))
            for r in indices.labels:
                if r == i:
                    continue
                f = fp.factor(r)
                report.checked += 1
                lhs = project(fp, conjugate(fp, basis.conjugator(r), (Letter(r, x.y[r - 1][i - 1]),)), r)
                rhs = f.mul(f.mul(project(fp, moved, r), y.y[r - 1][i - 1]), project(fp, back, r))
                if lhs != rhs:
                    report.violations.append(f"i={i} r={r}: pi_r(x) = {lhs}, expected {rhs}")
    return report


def twisted_membership(fp: FreeProduct, F: FSubgroup, max_length: int = 4) -> TwistingReport:
    """
    For every generator phi, label k and word w of length <= max_length not ending in G_k:
    phi(w) = d w g_k d^-1 for some g_k in G_k exactly when every letter of w lies in some
    G°_{j,k} with j in I(k). d is the conjugator phi puts on G_k. The base must be
    reduced for <phi> alone, so F is expected to be cyclic.
    """
    report = TwistingReport()
    words = [w for w in itertools.takewhile(lambda w: len(w) <= max_length, iter_elements(fp)) if w]
    indices = F.indices
    for phi, factored in zip(F.generators, F.generator_factors()):
        for k in indices.labels:
            image = phi.images[k - 1][0]
            d = image[:len(image) // 2]
            allowed = {j: frozenset(twisted_fixed_subgroup(fp, factored, j, k)) for j in indices.neighbours(k)}
            for w in words:
                if w[-1].factor == k:
                    continue
                report.checked += 1
                rest = multiply(fp, invert(fp, w), invert(fp, d), phi.apply(fp, w), d)
                twisted = not rest or (len(rest) == 1 and rest[0].factor == k)
                member = all(l.element in allowed.get(l.factor, ()) for l in w)
                if twisted != member:
                    report.violations.append(
                        f"k={k} w={format_word(w)}: twisted conjugate {twisted}, letters in G° {member}")
    return report


# ---------------------------------------------------------------------------
# retraction chain
# ---------------------------------------------------------------------------

def _regions(indices: TreeIndices, k: int) -> List[Tuple[int, FrozenSet[int]]]:
    """Blocks at k with the petal of A(k) each one spans."""
    star_petal = partitions_from_tree(indices.tree)[k].star_petal
    out = []
    for a in indices.tree.blocks_at(k):
        if indices.stems[a] == k:
            out.append((a, frozenset(indices.block_subtree(a))))
        else:
            out.append((a, star_petal))
    return out


def _tree_poset(trees: Sequence[PointedTree]) -> nx.DiGraph:
    P = nx.DiGraph()
    P.add_nodes_from(trees)
    P.add_edges_from((s, t) for s, t in itertools.permutations(trees, 2) if poset_leq(s, t))
    return P


@dataclass
class RetractionData:
    basis: Basis
    tree: PointedTree
    ascending: List[PointedTree]
    r1: List[PointedTree]
    r2: List[PointedTree]
    r3: List[PointedTree]
    f1: Dict[PointedTree, PointedTree]
    f2: Dict[PointedTree, PointedTree]
    local_posets: List[nx.DiGraph]
    join: nx.DiGraph
    join_map: Dict[PointedTree, Tuple]
    is_isomorphism: bool

    @property
    def active_blocks(self) -> List[int]:
        return [a for a, P in enumerate(self.local_posets) if len(P)]

    def poset(self, which: str = "r1") -> nx.DiGraph:
        return _tree_poset(getattr(self, which))

    def retraction_checks(self) -> Dict[str, bool]:
        r2, r3 = set(self.r2), set(self.r3)
        return {
            "f1 lands in R2": all(t in r2 for t in self.f1.values()),
            "f1 descends": all(poset_leq(self.f1[t], t) for t in self.f1),
            "f1 idempotent": all(self.f1[self.f1[t]] == self.f1[t] for t in self.f1),
            "f2 lands in R3": all(t in r3 for t in self.f2.values()),
            "f2 descends": all(poset_leq(self.f2[t], t) for t in self.f2),
            "f2 idempotent": all(self.f2[self.f2[t]] == self.f2[t] for t in self.f2),
        }


class _Reductivity:
    """Memoised reductivity of based partitions at a minimal F-standard frame."""

    def __init__(self, frame: StandardFrame):
        self.frame = frame
        self.base = frame.norm()
        self.regions = {k: _regions(frame.indices, k) for k in frame.indices.labels}
        self._global: Dict[Tuple, bool] = {}
        self._local: Dict[Tuple, bool] = {}

    def region_of(self, k: int, petal: FrozenSet[int]) -> Tuple[int, FrozenSet[int]]:
        return next(region for region in self.regions[k] if petal <= region[1])

    def moving_petals(self, k: int, petals: Sequence[FrozenSet[int]],
                      region: Optional[int] = None) -> List[Tuple[FrozenSet[int], Tuple[int, ...]]]:
        tables = self.frame.tables
        out = []
        for petal in petals:
            if STAR in petal:
                continue
            a, _ = self.region_of(k, petal)
            if region is not None and a != region:
                continue
            if not tables.formal[(k, a)]:
                out.append((petal, tables.block_sets[(k, a)]))
        return out

    def reductive(self, k: int, petals: Tuple[FrozenSet[int], ...], region: Optional[int] = None) -> bool:
        key = (k, petals, region)
        if key not in self._global:
            self._global[key] = self._search(k, self.moving_petals(k, petals, region))
        return self._global[key]

    def _search(self, k: int, groups: List[Tuple[FrozenSet[int], Tuple[int, ...]]]) -> bool:
        fp, frame = self.frame.fp, self.frame
        prefix = frame.indices.pw(k)
        for combo in itertools.product(*(values for _, values in groups)):
            if not any(combo):
                continue
            words: Dict[int, Word] = {}
            for (petal, _), g in zip(groups, combo):
                if g:
                    x = conjugate(fp, prefix, (Letter(k, g),))
                    words.update((j, x) for j in petal)
            if lowers_f_norm(frame, move_from_conjugators(fp, frame.basis, k, words)):
                return True
        return False

    def local_reductive(self, a: int, k: int, petals: Tuple[FrozenSet[int], ...]) -> bool:
        key = (a, k, petals)
        if key in self._local:
            return self._local[key]
        frame, tables = self.frame, self.frame.tables
        group = frame.group(a)
        result = False
        if not tables.formal[(k, a)]:
            H_a = frame.local_basis(a)
            current = local_vertex_norm(group, H_a)
            moving = [p for p in petals if STAR not in p]
            members = tables.block_sets[(k, a)]
            for combo in itertools.product(members, repeat=len(moving)):
                if not any(combo):
                    continue
                values = tuple((x, g) for petal, g in zip(moving, combo) for x in sorted(petal) if g)
                moved = local_whitehead(frame, LocalMove(a, k, values)).apply_to_basis(group.local)
                if local_vertex_norm(group, moved) < current:
                    result = True
                    break
        self._local[key] = result
        return result


def retraction_chain(fp: FreeProduct, F: FSubgroup, basis: Basis) -> RetractionData:
    """R1 -> R2 -> R3 inside the star of the reduced vertex [basis, A], and R3 against the join of the local stars."""
    H = minimize_representative(fp, basis, F)
    frame = standard_frame(fp, F, H)
    A = F.tree
    indices = frame.indices
    labels = indices.labels
    reductivity = _Reductivity(frame)
    pa = partitions_from_tree(A)

    def petals(T: PointedTree, k: int) -> Tuple[FrozenSet[int], ...]:
        return partitions_from_tree(T)[k].petals

    def nontrivial(T: PointedTree, k: int) -> bool:
        return petals(T, k) != pa[k].petals

    def restricted(T: PointedTree, k: int, region: FrozenSet[int]) -> Tuple[FrozenSet[int], ...]:
        return tuple(p for p in petals(T, k) if p <= region)

    ascending = [B for B in enumerate_pointed_trees(fp.n) if B != A and poset_leq(A, B)]
    r1, r2 = [], []
    for B in ascending:
        moved = [k for k in labels if nontrivial(B, k)]
        verdicts = [reductivity.reductive(k, petals(B, k)) for k in moved]
        if any(verdicts):
            r1.append(B)
        if moved and all(verdicts):
            r2.append(B)

    f1 = {}
    for B in r1:
        T = B
        for k in labels:
            if nontrivial(B, k) and not reductivity.reductive(k, petals(B, k)):
                T = coarsen_at(T, k, pa[k].petals)
        f1[B] = T

    def bad_regions(T: PointedTree, k: int) -> List[FrozenSet[int]]:
        out = []
        for a, region in reductivity.regions[k]:
            inside = restricted(T, k, region)
            if len(inside) > 1 and not reductivity.reductive(k, petals(T, k), a):
                out.append(region)
        return out

    r3 = [B for B in r2 if not any(bad_regions(B, k) for k in labels)]
    f2 = {}
    for B in r2:
        T = B
        for k in labels:
            bad = bad_regions(T, k)
            if bad:
                kept = [p for p in petals(T, k) if not any(p <= region for region in bad)]
                T = coarsen_at(T, k, kept + bad)
        f2[B] = T

    local_posets, minima = [], []
    for a in range(len(A.blocks)):
        stem = indices.stems[a]
        block = indices.block_labels(a)
        local_labels = (STAR,) + tuple(sorted(block))
        if stem == STAR:
            minimum = make_tree([A.blocks[a]], local_labels)
            candidates = pointed_trees_on(local_labels)
        else:
            minimum = make_tree([(STAR, stem), block], local_labels)
            candidates = [T for T in pointed_trees_on(local_labels) if T.blocks[0] == (STAR, stem)]
        local_min = partitions_from_tree(minimum)
        members = []
        for T in candidates:
            if T == minimum:
                continue
            moved = [k for k in block if partitions_from_tree(T)[k].petals != local_min[k].petals]
            if all(reductivity.local_reductive(a, k, partitions_from_tree(T)[k].petals) for k in moved):
                members.append(T)
        local_posets.append(_tree_poset(members))
        minima.append(minimum)

    def restrict_tree(B: PointedTree) -> Tuple:
        entries = []
        for a in range(len(A.blocks)):
            stem = indices.stems[a]
            inside = [b for b in B.blocks if set(b) <= set(A.blocks[a])]
            if stem != STAR:
                inside.append((STAR, stem))
            local = make_tree(inside, (STAR,) + tuple(sorted(indices.block_labels(a))))
            if local != minima[a]:
                entries.append((a, local))
        return tuple(entries)

    join = poset_join(*local_posets)
    join_map = {B: restrict_tree(B) for B in r3}
    images = set(join_map.values())
    is_isomorphism = len(images) == len(r3) and images == set(join.nodes) and all(
        poset_leq(s, t) == join.has_edge(join_map[s], join_map[t])
        for s, t in itertools.permutations(r3, 2)
    )
    logger.info("retraction at %s: |R1|=%d |R2|=%d |R3|=%d, join of %d local stars, isomorphism=%s",
                A.code(), len(r1), len(r2), len(r3), sum(1 for P in local_posets if len(P)), is_isomorphism)
    return RetractionData(H, A, ascending, r1, r2, r3, f1, f2, local_posets, join, join_map, is_isomorphism)
