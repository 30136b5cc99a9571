"""
Pointed labelled bipartite trees and the folding order on them.

A tree on labels {*, 1, ..., n} (STAR = 0) is stored by its unlabelled
vertices: each unlabelled vertex is the sorted tuple of labels adjacent to it.
Labels are distinct, so this set of blocks determines the tree; blocks are kept
in breadth-first order from * (depth, then labels), which is the canonical form
and also the unlabelled-vertex order used by the fixed-point norms.
"""

import itertools
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from config import MAX_TREE_LABELS, get_logger
from group_core import CapExceededError

logger = get_logger("whitehead_poset")

STAR = 0

Block = Tuple[int, ...]


def label_name(label: int) -> str:
    return "*" if label == STAR else str(label)


@dataclass(frozen=True)
class BasedPartition:
    operative: int
    petals: Tuple[FrozenSet[int], ...]

    def petal_of(self, label: int) -> FrozenSet[int]:
        for petal in self.petals:
            if label in petal:
                return petal
        raise KeyError(label)

    @property
    def star_petal(self) -> FrozenSet[int]:
        return self.petal_of(STAR)

    def is_trivial(self) -> bool:
        return len(self.petals) == 1

    def refines(self, other: "BasedPartition") -> bool:
        """Every petal of self lies inside a petal of other."""
        return all(any(p <= q for q in other.petals) for p in self.petals)


def _sorted_petals(petals: Iterable[Iterable[int]]) -> Tuple[FrozenSet[int], ...]:
    return tuple(sorted((frozenset(p) for p in petals), key=lambda p: sorted(p)))


@dataclass(frozen=True)
class PointedTree:
    labels: Tuple[int, ...]
    blocks: Tuple[Block, ...]

    @property
    def n(self) -> int:
        return len(self.labels) - 1

    def is_nuclear(self) -> bool:
        return len(self.blocks) == 1

    def code(self) -> str:
        return "|".join(",".join(label_name(x) for x in block) for block in self.blocks)

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(("L", x) for x in self.labels)
        for b, block in enumerate(self.blocks):
            g.add_edges_from((("U", b), ("L", x)) for x in block)
        return g

    def blocks_at(self, label: int) -> List[int]:
        return [b for b, block in enumerate(self.blocks) if label in block]

    def __repr__(self):
        return f"PointedTree({self.code()})"


def _block_depths(labels: Sequence[int], blocks: Sequence[Block]) -> Dict[Block, int]:
    g = nx.Graph()
    g.add_nodes_from(("L", x) for x in labels)
    for block in blocks:
        g.add_edges_from((("U", block), ("L", x)) for x in block)
    distance = nx.single_source_shortest_path_length(g, ("L", STAR))
    return {block: distance[("U", block)] for block in blocks}


def make_tree(blocks: Iterable[Iterable[int]], labels: Optional[Iterable[int]] = None) -> PointedTree:
    """Validate and canonicalise a tree given by its blocks.

    Blocks of size < 2 (dangling unlabelled vertices) are pruned.
    """
    cleaned = sorted({tuple(sorted(set(b))) for b in blocks if len(set(b)) >= 2})
    if labels is None:
        labels = {x for b in cleaned for x in b} | {STAR}
    labels = tuple(sorted(set(labels)))
    if STAR not in labels:
        raise ValueError("tree must contain the base label *")
    for block in cleaned:
        if not set(block) <= set(labels):
            raise ValueError(f"block {block} uses unknown labels")
    if sum(len(b) - 1 for b in cleaned) != len(labels) - 1:
        raise ValueError("blocks do not form a tree (wrong edge count)")
    g = nx.Graph()
    g.add_nodes_from(("L", x) for x in labels)
    for block in cleaned:
        g.add_edges_from((("U", block), ("L", x)) for x in block)
    if len(labels) > 1 and not nx.is_tree(g):
        raise ValueError("blocks do not form a tree (disconnected)")
    if len(labels) > 1 and sum(1 for b in cleaned if STAR in b) != 1:
        raise ValueError("* must have valence 1")
    depth = _block_depths(labels, cleaned)
    ordered = tuple(sorted(cleaned, key=lambda b: (depth[b], b)))
    return PointedTree(labels, ordered)


def nuclear_tree(labels: Iterable[int]) -> PointedTree:
    labels = sorted(set(labels) | {STAR})
    return make_tree([labels], labels)


def tree_from_code(code: str) -> PointedTree:
    blocks = [
        [STAR if token == "*" else int(token) for token in part.split(",")]
        for part in code.split("|")
    ]
    return make_tree(blocks)


# ---------------------------------------------------------------------------
# partitions and order
# ---------------------------------------------------------------------------

@lru_cache(maxsize=100_000)
def partitions_from_tree(T: PointedTree) -> Dict[int, BasedPartition]:
    """The based partition A(k) for every label k: components of T - {k}."""
    result = {}
    for k in T.labels:
        g = T.graph.copy()
        g.remove_node(("L", k))
        petals = [
            {node[1] for node in component if node[0] == "L"}
            for component in nx.connected_components(g)
        ]
        result[k] = BasedPartition(k, _sorted_petals(p for p in petals if p))
    return result


def poset_leq(A: PointedTree, B: PointedTree) -> bool:
    """A <= B in the folding order: B's partitions refine A's at every label."""
    if A.labels != B.labels:
        raise ValueError("trees on different label sets")
    if A == B:
        return True
    pa, pb = partitions_from_tree(A), partitions_from_tree(B)
    return all(pb[k].refines(pa[k]) for k in A.labels)


def fold(T: PointedTree, merge: Iterable[Tuple[int, int]]) -> PointedTree:
    """Identify the unlabelled ends of edges (label, block index) at one label."""
    merge = set(merge)
    if not merge:
        raise ValueError("empty merge set")
    labels = {label for label, _ in merge}
    if len(labels) != 1:
        raise ValueError("merge edges must share one labelled vertex")
    label = labels.pop()
    indices = {b for _, b in merge}
    for b in indices:
        if not 0 <= b < len(T.blocks) or label not in T.blocks[b]:
            raise ValueError(f"block {b} is not adjacent to {label_name(label)}")
    merged = set().union(*(T.blocks[b] for b in indices))
    kept = [block for b, block in enumerate(T.blocks) if b not in indices]
    return make_tree(kept + [tuple(merged)], T.labels)


def coarsen_at(T: PointedTree, k: int, target: Iterable[Iterable[int]]) -> PointedTree:
    """Fold at k so that the partition at k becomes the coarsening `target` of T(k)."""
    target = [frozenset(p) for p in target]
    partition = partitions_from_tree(T)[k]
    groups: Dict[int, List[int]] = {}
    for b in T.blocks_at(k):
        side = partition.petal_of(next(x for x in T.blocks[b] if x != k))
        owner = next((i for i, p in enumerate(target) if side <= p), None)
        if owner is None:
            raise ValueError(f"target is not a coarsening of the partition at {label_name(k)}")
        groups.setdefault(owner, []).append(b)
    result = T
    for group in groups.values():
        if len(group) < 2:
            continue
        result = _fold_blocks(result, k, [T.blocks[b] for b in group])
    return result


def _fold_blocks(T: PointedTree, k: int, blocks: Sequence[Block]) -> PointedTree:
    indices = [T.blocks.index(b) for b in blocks]
    return fold(T, [(k, b) for b in indices])


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _set_partitions(items: Sequence[int]) -> Iterator[List[List[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _hang(root: int, labels: Sequence[int]) -> Iterator[List[Block]]:
    """All ways to hang `labels` below `root`, as lists of blocks."""
    if not labels:
        yield []
        return
    for parts in _set_partitions(sorted(labels)):
        options = [list(_hang_block(root, part)) for part in parts]
        for combo in itertools.product(*options):
            yield [block for blocks in combo for block in blocks]


def _hang_block(root: int, part: Sequence[int]) -> Iterator[List[Block]]:
    """One block at root containing a nonempty S of `part`; the rest hangs below S."""
    for size in range(1, len(part) + 1):
        for S in itertools.combinations(part, size):
            rest = [x for x in part if x not in S]
            for owners in itertools.product(S, repeat=len(rest)):
                below = {s: [x for x, o in zip(rest, owners) if o == s] for s in S}
                options = [list(_hang(s, below[s])) for s in S]
                for combo in itertools.product(*options):
                    yield [tuple(sorted((root,) + S))] + [b for blocks in combo for b in blocks]


def pointed_trees_on(labels: Iterable[int]) -> List[PointedTree]:
    labels = sorted(set(labels) | {STAR})
    others = [x for x in labels if x != STAR]
    if not others:
        raise ValueError("need at least one non-base label")
    trees = {make_tree(blocks, labels) for blocks in _hang_block(STAR, others)}
    return sorted(trees, key=lambda T: (len(T.blocks), T.blocks))


@lru_cache(maxsize=None)
def _trees(n: int) -> Tuple[PointedTree, ...]:
    return tuple(pointed_trees_on(range(n + 1)))


def enumerate_pointed_trees(n: int, cap: int = MAX_TREE_LABELS) -> List[PointedTree]:
    """Every pointed tree on {*, 1, ..., n}; nuclear tree first."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > cap:
        raise CapExceededError("pointed-tree enumeration label count", cap)
    trees = list(_trees(n))
    logger.debug("n=%d: %d pointed trees", n, len(trees))
    return trees


# ---------------------------------------------------------------------------
# carriers
# ---------------------------------------------------------------------------

def minimal_carrier(labels: Iterable[int], operative: int, values: Mapping[int, int]) -> PointedTree:
    """Coarsest tree carrying a move with the given per-label values at `operative`.

    The *-block holds * and k with every identity-valued label; each nontrivial
    value gets its own block at k.
    """
    labels = sorted(set(labels) | {STAR})
    classes: Dict[int, List[int]] = {}
    for x in labels:
        if x in (STAR, operative):
            continue
        classes.setdefault(values.get(x, 0), []).append(x)
    blocks = [[STAR, operative] + classes.pop(0, [])]
    blocks.extend([operative] + members for _, members in sorted(classes.items()))
    return make_tree(blocks, labels)


def is_carried(T: PointedTree, operative: int, values: Mapping[int, int]) -> bool:
    """Values constant on every petal of T(operative) and trivial on the *-petal."""
    partition = partitions_from_tree(T)[operative]
    for petal in partition.petals:
        seen = {values.get(x, 0) for x in petal if x != STAR}
        if STAR in petal:
            seen.add(0)
        if len(seen) > 1:
            return False
    return values.get(operative, 0) == 0


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def tree_to_dot(T: PointedTree, name: str = "tree") -> str:
    lines = [f"graph {name} {{"]
    for x in T.labels:
        lines.append(f'  "{label_name(x)}" [shape=box];')
    for b, block in enumerate(T.blocks):
        lines.append(f'  u{b} [shape=circle, label=""];')
        lines.extend(f'  u{b} -- "{label_name(x)}";' for x in block)
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_to_json(T: PointedTree) -> dict:
    return {
        "labels": [label_name(x) for x in T.labels],
        "code": T.code(),
        "adjacency": {f"u{b}": [label_name(x) for x in block] for b, block in enumerate(T.blocks)},
    }


def tree_from_json(data: Mapping) -> PointedTree:
    return tree_from_code(data["code"])


def trees_to_jsonl(trees: Iterable[PointedTree]) -> str:
    return "".join(json.dumps(tree_to_json(T), sort_keys=True) + "\n" for T in trees)
