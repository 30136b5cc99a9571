"""
Acceptance suites.

Each suite takes the free product, the run configuration and a seeded numpy
Generator, and returns a SuiteReport: number of checks, the failing ones with
their witnesses, wall time and warnings. `run_suites` is what `cli verify`
calls.
"""

import itertools
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from basis_norms import (
    Basis,
    Comparison,
    apply_images,
    basis_images,
    basis_length,
    compare_bases,
    standard_basis,
)
from complex_builder import (
    Ball,
    NoReductiveMoveError,
    VertexType,
    WhiteheadAuto,
    canonical_vertex,
    enumerate_ball,
    finite_order_elements,
    fixes_vertex,
    random_basis,
    reduce_to_minimal,
    reductive_star_intersection,
    stabilizer,
)
from config import RunConfig, get_logger
from fixed_points import (
    FSubgroup,
    LiftError,
    LocalMove,
    StandardFrame,
    block_slots,
    constructed_subgroups,
    decompose_move,
    fixed_subcomplex,
    lift_move,
    local_moves,
    local_reductive_moves,
    lowers_f_norm,
    parts_subgroup,
    restrict_move,
    retraction_chain,
    split_length,
    split_subgroups,
    standard_frame,
    standard_representative,
    twisted_frames,
    twisted_membership,
)
from group_core import FreeProduct, Letter, factor_automorphisms, format_word, free_product, iter_elements
from topology import (
    SimplicialComplex,
    Verdict,
    certify_contractible,
    homology,
    order_complex,
    poset_from_relations,
    poset_join,
)
from whitehead_poset import STAR, enumerate_pointed_trees, make_tree, nuclear_tree

logger = get_logger("verification")


@dataclass
class SuiteReport:
    name: str
    passed: bool = True
    checks: int = 0
    failures: List[dict] = field(default_factory=list)
    seconds: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def check(self, ok: bool, witness: Optional[dict] = None) -> bool:
        self.checks += 1
        if not ok:
            self.passed = False
            self.failures.append(witness or {})
        return ok

    def warn(self, message: str) -> None:
        logger.warning("%s: %s", self.name, message)
        self.warnings.append(message)

    def to_dict(self) -> dict:
        return asdict(self)


def _basis_text(H) -> str:
    return "; ".join(format_word(w) for w in H.conjugators)


@lru_cache(maxsize=8)
def _ball(fp: FreeProduct, radius: Optional[int], cap: int) -> Ball:
    return enumerate_ball(fp, radius=radius, cap=cap)


@lru_cache(maxsize=8)
def _subgroups(fp: FreeProduct, count: int) -> tuple:
    return tuple(constructed_subgroups(fp, count))


def _standard_frames(fp: FreeProduct, F: FSubgroup, ball: Ball, limit: int = 3) -> List[StandardFrame]:
    """Minimal-first F-standard representatives of reduced fixed vertices in the ball."""
    bases = [standard_basis(fp)]
    for fv in fixed_subcomplex(fp, ball, F, [F.tree]).vertices:
        if len(bases) >= limit:
            break
        if not (fv.reduced and fv.within_margin):
            continue
        found = standard_representative(fp, fv.vertex, F)
        if found is not None and found[0] not in bases:
            bases.append(found[0])
    return [standard_frame(fp, F, H) for H in bases]


# ---------------------------------------------------------------------------
# trees
# ---------------------------------------------------------------------------

def naive_tree_codes(n: int) -> set:
    """Every block system of total weight n on {*, 1..n} that is a tree with * a leaf."""
    labels = tuple(range(n + 1))
    subsets = [s for size in range(2, n + 2) for s in itertools.combinations(labels, size)]
    found = set()

    def extend(start: int, chosen: list, budget: int) -> None:
        if budget == 0:
            g = nx.Graph()
            g.add_nodes_from(("L", x) for x in labels)
            for b, block in enumerate(chosen):
                g.add_edges_from((("U", b), ("L", x)) for x in block)
            if nx.is_tree(g) and g.degree[("L", STAR)] == 1:
                found.add(make_tree(chosen, labels).code())
            return
        for position in range(start, len(subsets)):
            s = subsets[position]
            if len(s) - 1 <= budget:
                extend(position + 1, chosen + [s], budget - len(s) + 1)

    extend(0, [], n)
    return found


def suite_trees(fp: FreeProduct, config: RunConfig, rng: np.random.Generator, max_n: int = 5) -> SuiteReport:
    report = SuiteReport("trees")
    for n in range(1, max_n + 1):
        codes = [T.code() for T in enumerate_pointed_trees(n)]
        naive = naive_tree_codes(n)
        report.check(len(codes) == len(set(codes)), {"n": n, "problem": "duplicate trees"})
        report.check(set(codes) == naive, {
            "n": n,
            "missing": sorted(naive - set(codes)),
            "extra": sorted(set(codes) - naive),
        })
        logger.info("n=%d: %d pointed trees", n, len(codes))
    report.check(len(enumerate_pointed_trees(2)) == 3, {"n": 2, "expected": 3})
    return report


# ---------------------------------------------------------------------------
# nuclear vertices
# ---------------------------------------------------------------------------

def suite_minimal_vertex(fp: FreeProduct, config: RunConfig, rng: np.random.Generator) -> SuiteReport:
    report = SuiteReport("minimal-vertex")
    ball = _ball(fp, config.radius, config.cap_ball)
    minimal = [v for v, norm in zip(ball.vertices, ball.norms) if norm <= fp.n]
    report.check(len(minimal) == 1, {"vertices at norm <= n": [_basis_text(v.basis) for v in minimal]})
    report.check(all(v.basis.is_standard() for v in minimal), {"problem": "minimum is not the standard basis"})
    for v, norm in zip(ball.vertices, ball.norms):
        if not v.basis.is_standard():
            report.check(norm > fp.n, {"basis": _basis_text(v.basis), "norm": norm})
    logger.info("ball of %d vertices: %d at the minimum", len(ball), len(minimal))
    return report


def suite_peak_reduction(fp: FreeProduct, config: RunConfig, rng: np.random.Generator,
                         samples: int = 100, max_moves: int = 8) -> SuiteReport:
    report = SuiteReport("peak-reduction")
    star = nuclear_tree(range(fp.n + 1))
    for sample in range(samples):
        H = random_basis(fp, int(rng.integers(1, max_moves + 1)), rng)
        try:
            path = reduce_to_minimal(fp, VertexType(H, star), norm="zg", cutoff=config.cutoff)
        except NoReductiveMoveError as exc:
            report.check(False, {"sample": sample, "basis": _basis_text(H), "error": str(exc)})
            continue
        previous, descending = H, True
        for step in path:
            if compare_bases(fp, step.vertex.basis, previous, start=config.cutoff) is not Comparison.LESS:
                descending = False
            previous = step.vertex.basis
        report.check(descending and previous.is_standard(), {
            "sample": sample,
            "basis": _basis_text(H),
            "steps": len(path),
            "end": _basis_text(previous),
        })
    return report


def suite_local_contractibility(fp: FreeProduct, config: RunConfig, rng: np.random.Generator) -> SuiteReport:
    report = SuiteReport("local-contractibility")
    ball = _ball(fp, config.radius, config.cap_ball)
    for v, norm in zip(ball.vertices, ball.norms):
        if v.basis.is_standard() or norm > fp.n + 2:
            continue
        P = reductive_star_intersection(fp, v, cutoff=config.cutoff)
        if not report.check(len(P) > 0, {"basis": _basis_text(v.basis), "problem": "empty intersection"}):
            continue
        result = certify_contractible(order_complex(P))
        if result.verdict is Verdict.HOMOLOGY_TRIVIAL:
            report.warn(f"{_basis_text(v.basis)}: collapse stuck, homology trivial")
        report.check(result.verdict is not Verdict.NOT_CONTRACTIBLE, {
            "basis": _basis_text(v.basis),
            "verdict": result.verdict.value,
            "witness": result.witness,
        })
    return report


def suite_stabilizers(fp: FreeProduct, config: RunConfig, rng: np.random.Generator,
                      samples: int = 20) -> SuiteReport:
    report = SuiteReport("stabilizers")
    expected = int(np.prod([len(factor_automorphisms(f)) for f in fp.factors]))
    base = VertexType(standard_basis(fp), nuclear_tree(range(fp.n + 1)))
    order = len(stabilizer(fp, base))
    report.check(order == expected, {"vertex": "H0", "order": order, "expected": expected})

    ball = _ball(fp, config.radius, config.cap_ball)
    trees = enumerate_pointed_trees(fp.n)
    for _ in range(samples):
        H = ball.vertices[int(rng.integers(len(ball)))].basis
        T = trees[int(rng.integers(len(trees)))]
        v = canonical_vertex(fp, H, T)
        elements = stabilizer(fp, v)
        report.check(all(fixes_vertex(fp, g, v) for g in elements), {
            "basis": _basis_text(v.basis), "tree": T.code(), "order": len(elements),
        })
    return report


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

def suite_fixed_points(fp: FreeProduct, config: RunConfig, rng: np.random.Generator) -> SuiteReport:
    report = SuiteReport("fixed-points")
    ball = _ball(fp, config.radius, config.cap_ball)
    trees = enumerate_pointed_trees(fp.n)
    for factored, element, m in finite_order_elements(fp, min(12, config.cap_order)):
        hit = next((VertexType(K, T) for T in trees for K in ball.bases()
                    if fixes_vertex(fp, element, VertexType(K, T))), None)
        report.check(hit is not None, {"y": [list(row) for row in factored.y], "order": m})
    return report


def suite_f_standard(fp: FreeProduct, config: RunConfig, rng: np.random.Generator,
                     count: int = 3) -> SuiteReport:
    report = SuiteReport("f-standard")
    ball = _ball(fp, config.radius, config.cap_ball)
    subgroups = _subgroups(fp, count)
    if len(subgroups) < count:
        report.warn(f"only {len(subgroups)} finite subgroups could be based at a reduced vertex")
    for F in subgroups:
        fixed = fixed_subcomplex(fp, ball, F)
        inside = [fv for fv in fixed.vertices if fv.within_margin]
        reduced = {fv.vertex for fv in inside if fv.reduced}
        standard = {fv.vertex for fv in inside if standard_representative(fp, fv.vertex, F) is not None}
        report.check(reduced == standard, {
            "base": F.tree.code(),
            "reduced only": [v.to_json() for v in reduced - standard],
            "standard only": [v.to_json() for v in standard - reduced],
        })
        F2 = parts_subgroup(F)
        reduced2 = {fv.vertex for fv in fixed_subcomplex(fp, ball, F2).vertices if fv.within_margin and fv.reduced}
        report.check(reduced == reduced2, {
            "base": F.tree.code(),
            "problem": "parts subgroup has different reduced vertices",
            "difference": [v.to_json() for v in reduced ^ reduced2],
        })
        membership = twisted_membership(fp, F)
        report.check(membership.holds, {
            "base": F.tree.code(), "words": membership.checked, "violations": membership.violations[:5],
        })
    return report


def suite_word_length(fp: FreeProduct, config: RunConfig, rng: np.random.Generator,
                      count: int = 3, max_inner: int = 3) -> SuiteReport:
    report = SuiteReport("word-length")
    ball = _ball(fp, config.radius, config.cap_ball)
    for F in _subgroups(fp, count):
        for frame in _standard_frames(fp, F, ball):
            indices = frame.indices
            for a in range(len(F.tree.blocks)):
                slots = block_slots(indices, a)
                full = free_product(fp.factor(j) for j in slots)
                local = [() if j == indices.stems[a] else
                         tuple(Letter(slots.index(l.factor) + 1, l.element) for l in indices.relative[j])
                         for j in slots]
                images = basis_images(full, Basis(tuple(local)))
                for u in itertools.takewhile(lambda w: len(w) <= max_inner, iter_elements(full)):
                    if not u:
                        continue
                    h_local = apply_images(full, images, u)
                    h = tuple(Letter(slots[l.factor - 1], l.element) for l in h_local)
                    outer, inner = split_length(fp, indices, a, h)
                    total = basis_length(fp, frame.basis, h)
                    report.check(inner == len(u) and outer + inner == total, {
                        "basis": _basis_text(frame.basis), "block": a, "h": format_word(h),
                        "outer": outer, "inner": inner, "length": total,
                    })
    return report


def _ball_frames(fp: FreeProduct, config: RunConfig, count: int) -> Iterator[Tuple[FSubgroup, StandardFrame]]:
    """Frames of the constructed subgroups at reduced fixed vertices of the ball."""
    if count <= 0:
        return
    ball = _ball(fp, config.radius, config.cap_ball)
    for F in _subgroups(fp, count):
        for frame in _standard_frames(fp, F, ball):
            yield F, frame


def _split_frames(fp: FreeProduct, min_wide: int) -> Iterator[Tuple[FSubgroup, StandardFrame]]:
    """Frames reached by lifted local moves under subgroups of carried moves at trees with wide blocks."""
    for F in split_subgroups(fp, min_wide):
        for frame in twisted_frames(fp, F):
            yield F, frame


def _check_lifts(report: SuiteReport, frame: StandardFrame, samples: int) -> int:
    fp, lifted = frame.fp, 0
    for a in range(len(frame.F.tree.blocks)):
        for move in local_reductive_moves(frame, a):
            alpha, carrier = lift_move(frame, move)
            lifted += 1
            report.check(lowers_f_norm(frame, alpha), {
                "basis": _basis_text(frame.basis), "block": a, "move": alpha.describe(fp),
                "problem": "lift is not reductive",
            })
            report.check(restrict_move(frame, alpha, a) == move, {
                "block": a, "move": alpha.describe(fp), "problem": "restriction of the lift differs",
            })
    for alpha in _composite_moves(frame, samples):
        if not lowers_f_norm(frame, alpha):
            continue
        try:
            parts, holds = decompose_move(frame, alpha)
        except LiftError as exc:
            report.check(False, {"move": alpha.describe(fp), "error": str(exc)})
            continue
        report.check(holds, {"move": alpha.describe(fp), "problem": "product of lifts differs"})
        report.check(any(m in local_reductive_moves(frame, m.block) for m in parts if not m.is_identity()), {
            "move": alpha.describe(fp), "problem": "no reductive restriction",
        })
    return lifted


def suite_lift_restrict(fp: FreeProduct, config: RunConfig, rng: np.random.Generator,
                        count: int = 3, samples: int = 20) -> SuiteReport:
    """Lifts at ball frames, then at split-subgroup frames until `samples` reductive local moves are lifted."""
    report = SuiteReport("lift-restrict")
    lifted = 0
    for _, frame in _ball_frames(fp, config, count):
        lifted += _check_lifts(report, frame, samples)
    for _, frame in _split_frames(fp, min_wide=1):
        if lifted >= samples:
            break
        lifted += _check_lifts(report, frame, samples)
    logger.info("%d reductive local moves lifted", lifted)
    if fp.n >= 3:
        report.check(lifted >= samples, {"lifted": lifted, "required": samples})
    elif lifted < samples:
        report.warn(f"only {lifted} reductive local moves; wide blocks need n >= 3")
    return report


def _composite_moves(frame: StandardFrame, limit: int) -> List[WhiteheadAuto]:
    """Products over the blocks at k of lifted local moves (one per block, identity allowed)."""
    fp, tree = frame.fp, frame.F.tree
    out: List[WhiteheadAuto] = []
    for k in frame.indices.labels:
        options = []
        for a in tree.blocks_at(k):
            here = [m for m in local_moves(frame, a) if m.operative == k]
            options.append([LocalMove(a, k, ())] + here)
        for combo in itertools.product(*options):
            if all(m.is_identity() for m in combo):
                continue
            values = [0] * fp.n
            for m in combo:
                alpha, _ = lift_move(frame, m)
                values = [v or w for v, w in zip(values, alpha.values)]
            out.append(WhiteheadAuto(frame.basis, k, tuple(values)))
            if len(out) >= limit:
                return out
    return out


def _check_chain(report: SuiteReport, F: FSubgroup, frame: StandardFrame) -> int:
    """Verify the retraction chain at one frame; returns its number of active blocks."""
    data = retraction_chain(frame.fp, F, frame.basis)
    report.check(data.is_isomorphism, {
        "basis": _basis_text(data.basis), "tree": data.tree.code(),
        "R3": [T.code() for T in data.r3], "join size": data.join.number_of_nodes(),
    })
    for name, ok in data.retraction_checks().items():
        report.check(ok, {"basis": _basis_text(data.basis), "check": name})
    if data.r1:
        result = certify_contractible(order_complex(data.poset("r1")))
        if result.verdict is Verdict.HOMOLOGY_TRIVIAL:
            report.warn(f"R1 at {_basis_text(data.basis)}: collapse stuck, homology trivial")
        report.check(result.verdict is not Verdict.NOT_CONTRACTIBLE, {
            "basis": _basis_text(data.basis), "verdict": result.verdict.value, "witness": result.witness,
        })
    return len(data.active_blocks)


def suite_join_decomposition(fp: FreeProduct, config: RunConfig, rng: np.random.Generator,
                             count: int = 3, quota: int = 3) -> SuiteReport:
    """Two active blocks need two blocks of weight two, so the quota applies from n = 4 on."""
    report = SuiteReport("join-decomposition")
    two_block = 0
    for F, frame in _ball_frames(fp, config, count):
        if _check_chain(report, F, frame) >= 2:
            two_block += 1
    for F, frame in _split_frames(fp, min_wide=2):
        if two_block >= quota:
            break
        if _check_chain(report, F, frame) >= 2:
            two_block += 1
    logger.info("%d reduced vertices with two or more active blocks", two_block)
    if fp.n >= 4:
        report.check(two_block >= quota, {"two-block vertices": two_block, "required": quota})
    elif two_block < quota:
        report.warn(f"only {two_block} reduced vertices with two or more active blocks; these need n >= 4")
    return report


# ---------------------------------------------------------------------------
# homology fixtures
# ---------------------------------------------------------------------------

def sphere_antichain(tag: str) -> nx.DiGraph:
    return poset_from_relations([f"{tag}+", f"{tag}-"], [])


def suite_homology(fp: FreeProduct, config: RunConfig, rng: np.random.Generator) -> SuiteReport:
    report = SuiteReport("homology")
    point = homology(SimplicialComplex.from_faces(["p"], [[0]]))
    report.check(point.betti == (0,) and point.euler == 1, {"fixture": "point", "betti": point.betti})

    triangle = homology(SimplicialComplex.from_faces("abc", [[0, 1], [1, 2], [0, 2]]))
    report.check(triangle.betti == (0, 1), {"fixture": "triangle boundary", "betti": triangle.betti})

    tetrahedron = homology(SimplicialComplex.from_faces("abcd", itertools.combinations(range(4), 3)))
    report.check(tetrahedron.betti == (0, 0, 1) and tetrahedron.euler == 2, {
        "fixture": "tetrahedron boundary", "betti": tetrahedron.betti, "euler": tetrahedron.euler,
    })

    circle = homology(order_complex(poset_join(sphere_antichain("x"), sphere_antichain("y"))))
    report.check(circle.betti == (0, 1), {"fixture": "join of two 0-spheres", "betti": circle.betti})
    return report


SUITES: Dict[str, Callable[[FreeProduct, RunConfig, np.random.Generator], SuiteReport]] = {
    "trees": suite_trees,
    "minimal-vertex": suite_minimal_vertex,
    "peak-reduction": suite_peak_reduction,
    "local-contractibility": suite_local_contractibility,
    "stabilizers": suite_stabilizers,
    "fixed-points": suite_fixed_points,
    "f-standard": suite_f_standard,
    "word-length": suite_word_length,
    "lift-restrict": suite_lift_restrict,
    "join-decomposition": suite_join_decomposition,
    "homology": suite_homology,
}


def suite_names(selection: str) -> List[str]:
    if selection == "all":
        return list(SUITES)
    names = [s.strip() for s in selection.split(",") if s.strip()]
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)} or 'all'")
    return names


def run_suite(name: str, fp: FreeProduct, config: RunConfig) -> SuiteReport:
    """One suite with its own Generator seeded from the run seed."""
    rng = np.random.default_rng(config.seed)
    start = time.perf_counter()
    report = SUITES[name](fp, config, rng)
    report.seconds = round(time.perf_counter() - start, 3)
    status = "PASS" if report.passed else "FAIL"
    logger.info("%-22s %s  (%d checks, %.2fs)", name, status, report.checks, report.seconds)
    return report


def run_suites(fp: FreeProduct, config: RunConfig, names: Optional[Sequence[str]] = None) -> List[SuiteReport]:
    return [run_suite(name, fp, config) for name in (names or suite_names(config.suite))]
