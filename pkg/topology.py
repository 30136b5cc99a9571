"""
Order complexes of finite posets and the checks run on them: reduced integral
homology through Smith normal form, greedy free-face collapse, Euler
characteristic, and the join of posets.
"""

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form

from config import get_logger

logger = get_logger("topology")


class EmptyComplexError(ValueError):
    """An operation that needs at least one vertex got an empty complex."""


class Verdict(str, Enum):
    COLLAPSED = "collapsed-to-point"
    HOMOLOGY_TRIVIAL = "homology-trivial-only"
    NOT_CONTRACTIBLE = "not-contractible"


Simplex = FrozenSet[int]


def _node_key(node) -> Tuple:
    key = getattr(node, "key", None)
    if callable(key):
        return (0, key())
    return (1, repr(node))


@dataclass
class SimplicialComplex:
    vertices: Tuple[Hashable, ...]
    simplices: FrozenSet[Simplex]

    @classmethod
    def from_faces(cls, vertices: Sequence[Hashable], faces: Iterable[Iterable[int]]) -> "SimplicialComplex":
        """Downward closure of the given faces (vertex indices)."""
        closed = set()
        for face in faces:
            face = tuple(sorted(set(face)))
            if not face:
                continue
            if any(not 0 <= i < len(vertices) for i in face):
                raise ValueError(f"face {face} uses an unknown vertex")
            for size in range(1, len(face) + 1):
                closed.update(frozenset(c) for c in itertools.combinations(face, size))
        for i in range(len(vertices)):
            closed.add(frozenset([i]))
        return cls(tuple(vertices), frozenset(closed))

    @property
    def dimension(self) -> int:
        return max((len(s) for s in self.simplices), default=0) - 1

    def faces_of_dim(self, d: int) -> List[Tuple[int, ...]]:
        return sorted(tuple(sorted(s)) for s in self.simplices if len(s) == d + 1)

    def face_counts(self) -> List[int]:
        return [len(self.faces_of_dim(d)) for d in range(self.dimension + 1)]

    def maximal_faces(self) -> List[Tuple[int, ...]]:
        return sorted(
            tuple(sorted(s)) for s in self.simplices
            if not any(s < t for t in self.simplices if len(t) == len(s) + 1)
        )

    def is_empty(self) -> bool:
        return not self.simplices


@dataclass(frozen=True)
class HomologyProfile:
    """Reduced integral homology: free rank and torsion coefficients per dimension."""

    betti: Tuple[int, ...]
    torsion: Tuple[Tuple[int, ...], ...]
    euler: int

    def is_trivial(self) -> bool:
        return not any(self.betti) and not any(self.torsion)

    def first_nontrivial(self) -> Optional[int]:
        for d, (b, t) in enumerate(zip(self.betti, self.torsion)):
            if b or t:
                return d
        return None


@dataclass
class ContractibilityReport:
    verdict: Verdict
    remaining: int
    profile: Optional[HomologyProfile] = None
    witness: Optional[str] = None


# ---------------------------------------------------------------------------
# order complex
# ---------------------------------------------------------------------------

def order_complex(poset: nx.DiGraph) -> SimplicialComplex:
    """Chains of a finite poset (u -> v edges mean u < v) as simplices."""
    nodes = sorted(poset.nodes, key=_node_key)
    index = {node: i for i, node in enumerate(nodes)}
    comparability = nx.Graph()
    comparability.add_nodes_from(range(len(nodes)))
    comparability.add_edges_from((index[u], index[v]) for u, v in poset.edges if u != v)
    chains = (frozenset(c) for c in nx.enumerate_all_cliques(comparability))
    complex_ = SimplicialComplex(tuple(nodes), frozenset(chains))
    logger.debug("order complex: %d vertices, dimension %d", len(nodes), complex_.dimension)
    return complex_


def euler_characteristic(C: SimplicialComplex) -> int:
    return sum((-1) ** d * count for d, count in enumerate(C.face_counts()))


# ---------------------------------------------------------------------------
# homology
# ---------------------------------------------------------------------------

def boundary_matrix(C: SimplicialComplex, d: int) -> Matrix:
    """Boundary C_d -> C_{d-1}; for d = 0 the augmentation onto Z."""
    columns = C.faces_of_dim(d)
    if d == 0:
        return Matrix(1, len(columns), [1] * len(columns))
    rows = C.faces_of_dim(d - 1)
    row_index = {face: r for r, face in enumerate(rows)}
    M = Matrix.zeros(len(rows), len(columns))
    for c, face in enumerate(columns):
        for position in range(len(face)):
            M[row_index[face[:position] + face[position + 1:]], c] = (-1) ** position
    return M


def _invariant_factors(M: Matrix) -> List[int]:
    if M.rows == 0 or M.cols == 0:
        return []
    D = smith_normal_form(M, domain=ZZ)
    return [abs(int(D[i, i])) for i in range(min(D.rows, D.cols)) if D[i, i] != 0]


def homology(C: SimplicialComplex) -> HomologyProfile:
    if C.is_empty():
        raise EmptyComplexError("homology of an empty complex")
    top = C.dimension
    factors = [_invariant_factors(boundary_matrix(C, d)) for d in range(top + 2)]
    betti, torsion = [], []
    for d in range(top + 1):
        chains = len(C.faces_of_dim(d))
        betti.append(chains - len(factors[d]) - len(factors[d + 1]))
        torsion.append(tuple(f for f in factors[d + 1] if f > 1))
    return HomologyProfile(tuple(betti), tuple(torsion), euler_characteristic(C))


# ---------------------------------------------------------------------------
# collapsibility
# ---------------------------------------------------------------------------

def _collapse(C: SimplicialComplex) -> Tuple[set, int]:
    alive = set(C.simplices)
    cofaces: Dict[Simplex, set] = {s: set() for s in alive}
    for t in alive:
        if len(t) > 1:
            for v in t:
                cofaces[t - {v}].add(t)
    steps = 0
    progress = True
    while progress:
        progress = False
        for s in sorted(alive, key=lambda s: (-len(s), sorted(s))):
            if len(cofaces[s]) != 1:
                continue
            (t,) = cofaces[s]
            if cofaces[t]:
                continue
            for face in (s, t):
                alive.discard(face)
                if len(face) > 1:
                    for v in face:
                        cofaces[face - {v}].discard(face)
            steps += 1
            progress = True
            break
    return alive, steps


def certify_contractible(C: SimplicialComplex) -> ContractibilityReport:
    """Greedy free-face collapse, falling back to homology when it gets stuck."""
    if C.is_empty():
        raise EmptyComplexError("contractibility of an empty complex")
    remaining, steps = _collapse(C)
    if len(remaining) == 1:
        return ContractibilityReport(Verdict.COLLAPSED, 1)
    profile = homology(C)
    if profile.is_trivial():
        logger.warning("collapse stuck after %d steps with %d faces left; homology is trivial",
                       steps, len(remaining))
        return ContractibilityReport(Verdict.HOMOLOGY_TRIVIAL, len(remaining), profile)
    d = profile.first_nontrivial()
    witness = f"reduced H_{d}: rank {profile.betti[d]}, torsion {list(profile.torsion[d])}"
    return ContractibilityReport(Verdict.NOT_CONTRACTIBLE, len(remaining), profile, witness)


# ---------------------------------------------------------------------------
# joins
# ---------------------------------------------------------------------------

def _leq(P: nx.DiGraph, a, b) -> bool:
    return a == b or P.has_edge(a, b)


def poset_join(*posets: nx.DiGraph) -> nx.DiGraph:
    """Join of posets: every nonempty choice of factors with one element from each.

    Elements are tuples of (position, element) sorted by position; s <= t when the
    positions of s are among those of t and the entries compare below. For two
    factors these are P1, P1 x P2 and P2.
    """
    factors = [(position, sorted(P.nodes, key=_node_key)) for position, P in enumerate(posets) if len(P)]
    joined = nx.DiGraph()
    for size in range(1, len(factors) + 1):
        for chosen in itertools.combinations(factors, size):
            for entries in itertools.product(*(nodes for _, nodes in chosen)):
                joined.add_node(tuple((position, e) for (position, _), e in zip(chosen, entries)))
    for s, t in itertools.permutations(joined.nodes, 2):
        ts = dict(t)
        if all(position in ts and _leq(posets[position], e, ts[position]) for position, e in s):
            joined.add_edge(s, t)
    return joined


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def complex_to_json(C: SimplicialComplex) -> str:
    return json.dumps({
        "vertices": [str(v) for v in C.vertices],
        "facets": [list(face) for face in C.maximal_faces()],
    }, sort_keys=True)


def complex_from_json(text: str) -> SimplicialComplex:
    data = json.loads(text)
    return SimplicialComplex.from_faces(data["vertices"], data["facets"])


def homology_to_json(profile: HomologyProfile) -> dict:
    return {
        "betti": list(profile.betti),
        "torsion": [list(t) for t in profile.torsion],
        "euler": profile.euler,
    }


def poset_to_json(P: nx.DiGraph, label=str) -> dict:
    nodes = sorted(P.nodes, key=_node_key)
    index = {node: i for i, node in enumerate(nodes)}
    return {
        "elements": [label(node) for node in nodes],
        "relations": sorted([index[u], index[v]] for u, v in P.edges),
    }


def poset_from_relations(elements: Sequence[Hashable], relations: Iterable[Tuple[Hashable, Hashable]]) -> nx.DiGraph:
    """Transitively closed DiGraph from covering (or any) relations a < b."""
    P = nx.DiGraph()
    P.add_nodes_from(elements)
    P.add_edges_from(relations)
    return nx.transitive_closure_dag(P)
