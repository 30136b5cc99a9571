"""
Finite factor groups and the free product G = G_1 * ... * G_n.

Factors are given by Cayley tables (element 0 is the identity). Elements of G
are words in normal form: tuples of Letters whose neighbours come from
different factors and which never carry the identity. G is well-ordered
length-first, then lexicographically letter by letter.
"""

import itertools
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import AUT_CAP, MAX_TABLE_ORDER, get_logger

logger = get_logger("group_core")


class GroupSpecError(ValueError):
    """Malformed group-spec document."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class GroupAxiomError(GroupSpecError):
    """A Cayley table that does not define a group (or a bad designated element)."""

    def __init__(self, factor: int, axiom: str, line: Optional[int] = None):
        self.factor = factor
        self.axiom = axiom
        super().__init__(f"factor {factor}: {axiom}", line)


class CapExceededError(RuntimeError):
    """A configured resource cap was hit."""

    def __init__(self, what: str, limit: int):
        self.what = what
        self.limit = limit
        super().__init__(f"{what} exceeded cap {limit}")


class Letter(NamedTuple):
    factor: int
    element: int


Word = Tuple[Letter, ...]
EMPTY: Word = ()


def _check_table(index: int, table: Sequence[Sequence[int]], lam: int) -> None:
    try:
        t = np.asarray(table, dtype=np.int64)
    except ValueError as exc:
        raise GroupAxiomError(index, "table is not rectangular") from exc
    k = t.shape[0] if t.ndim == 2 else 0
    if t.ndim != 2 or t.shape != (k, k) or k == 0:
        raise GroupAxiomError(index, "table is not square")
    if k == 1:
        raise GroupAxiomError(index, "trivial factor (order 1)")
    if t.min() < 0 or t.max() >= k:
        raise GroupAxiomError(index, "table entry out of range")
    idx = np.arange(k)
    if not ((t[0] == idx).all() and (t[:, 0] == idx).all()):
        raise GroupAxiomError(index, "element 0 is not a two-sided identity")
    lhs = t[t]                                  # (ab)c
    rhs = t[idx[:, None, None], t[None, :, :]]  # a(bc)
    if not (lhs == rhs).all():
        raise GroupAxiomError(index, "not associative")
    if not ((np.sort(t, axis=1) == idx).all() and (np.sort(t, axis=0) == idx[:, None]).all()):
        raise GroupAxiomError(index, "missing inverses (table is not a latin square)")
    if not 0 < lam < k:
        raise GroupAxiomError(index, "lambda must be a non-identity element")


@dataclass(frozen=True)
class FactorGroup:
    """One finite factor G_i with its Cayley table and designated element lambda."""

    index: int
    table: Tuple[Tuple[int, ...], ...]
    name: str = ""
    kind: str = "table"
    lam: int = 1

    def __post_init__(self):
        _check_table(self.index, self.table, self.lam)

    @property
    def order(self) -> int:
        return len(self.table)

    @cached_property
    def inverses(self) -> Tuple[int, ...]:
        return tuple(row.index(0) for row in self.table)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return self.inverses[a]

    def conj(self, y: int, g: int) -> int:
        """y g y^-1"""
        return self.table[self.table[y][g]][self.inverses[y]]

    def element_order(self, a: int) -> int:
        m, x = 1, a
        while x != 0:
            x = self.table[x][a]
            m += 1
        return m

    def with_index(self, index: int) -> "FactorGroup":
        return FactorGroup(index, self.table, self.name, self.kind, self.lam)


def cyclic_factor(index: int, k: int, lam: int = 1) -> FactorGroup:
    table = tuple(tuple((i + j) % k for j in range(k)) for i in range(k))
    return FactorGroup(index, table, f"Z{k}", "cyclic", lam)


def sym3_factor(index: int, lam: int = 1) -> FactorGroup:
    perms = list(itertools.permutations(range(3)))
    position = {p: i for i, p in enumerate(perms)}
    # (p*q)(x) = p(q(x))
    table = tuple(
        tuple(position[tuple(p[q[x]] for x in range(3))] for q in perms) for p in perms
    )
    return FactorGroup(index, table, "S3", "sym", lam)


@dataclass(frozen=True)
class FreeProduct:
    factors: Tuple[FactorGroup, ...]

    def __post_init__(self):
        for position, f in enumerate(self.factors, start=1):
            if f.index != position:
                raise GroupSpecError(f"factor ids must be 1..n in order, found {f.index} at {position}")

    @property
    def n(self) -> int:
        return len(self.factors)

    def factor(self, i: int) -> FactorGroup:
        return self.factors[i - 1]

    @cached_property
    def letters(self) -> Tuple[Letter, ...]:
        return tuple(
            Letter(f.index, e) for f in self.factors for e in range(1, f.order)
        )

    def lambda_word(self, i: int) -> Word:
        return (Letter(i, self.factor(i).lam),)

    def lambdas(self) -> List[Word]:
        """The word list W0 = {lambda_1, ..., lambda_n}."""
        return [self.lambda_word(i) for i in range(1, self.n + 1)]

    def describe(self) -> str:
        return " * ".join(f.name or f"G{f.index}" for f in self.factors)


def free_product(factors: Iterable[FactorGroup]) -> FreeProduct:
    return FreeProduct(tuple(f.with_index(i) for i, f in enumerate(factors, start=1)))


# ---------------------------------------------------------------------------
# group-spec documents
# ---------------------------------------------------------------------------

def load_group_spec(text: str) -> FreeProduct:
    """Parse a group-spec document into a validated FreeProduct."""
    factors: List[dict] = []
    lambdas: Dict[int, Tuple[int, int]] = {}
    lines = text.splitlines()
    pos = 0
    while pos < len(lines):
        lineno = pos + 1
        line = lines[pos].split("#", 1)[0].strip()
        pos += 1
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "factor" and len(parts) == 3 and parts[1] == "cyclic":
                factors.append({"kind": "cyclic", "order": int(parts[2]), "line": lineno})
            elif parts[0] == "factor" and len(parts) == 3 and parts[1] == "sym":
                if parts[2] != "3":
                    raise GroupSpecError("only 'factor sym 3' is supported", lineno)
                factors.append({"kind": "sym", "order": 6, "line": lineno})
            elif parts[0] == "factor" and len(parts) == 4 and parts[1] == "table":
                order = int(parts[3])
                if not 1 <= order <= MAX_TABLE_ORDER:
                    raise GroupSpecError(f"table order must be 1..{MAX_TABLE_ORDER}", lineno)
                rows = []
                while len(rows) < order:
                    if pos >= len(lines):
                        raise GroupSpecError(f"expected {order} table rows", pos)
                    row_text = lines[pos].split("#", 1)[0].strip()
                    pos += 1
                    if not row_text:
                        continue
                    row = tuple(int(x) for x in row_text.split())
                    if len(row) != order:
                        raise GroupSpecError(f"row has {len(row)} entries, expected {order}", pos)
                    rows.append(row)
                factors.append({"kind": "table", "name": parts[2], "rows": tuple(rows), "line": lineno})
            elif parts[0] == "lambda" and len(parts) == 3:
                lambdas[int(parts[1])] = (int(parts[2]), lineno)
            else:
                raise GroupSpecError(f"unrecognised directive {line!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, GroupSpecError):
                raise
            raise GroupSpecError(f"expected integers in {line!r}", lineno) from exc

    if len(factors) < 2:
        raise GroupSpecError(f"need n ≥ 2 factors, found {len(factors)}")
    for index in lambdas:
        if not 1 <= index <= len(factors):
            raise GroupSpecError(f"lambda for unknown factor {index}", lambdas[index][1])

    built = []
    for index, spec in enumerate(factors, start=1):
        lam = lambdas.get(index, (1, None))[0]
        try:
            if spec["kind"] == "cyclic":
                built.append(cyclic_factor(index, spec["order"], lam))
            elif spec["kind"] == "sym":
                built.append(sym3_factor(index, lam))
            else:
                built.append(FactorGroup(index, spec["rows"], spec["name"], "table", lam))
        except GroupAxiomError as exc:
            raise GroupAxiomError(index, exc.axiom, spec["line"]) from exc
    fp = FreeProduct(tuple(built))
    logger.debug("loaded %s", fp.describe())
    return fp


def dump_group_spec(fp: FreeProduct) -> str:
    out = []
    for f in fp.factors:
        if f.kind == "cyclic":
            out.append(f"factor cyclic {f.order}")
        elif f.kind == "sym":
            out.append("factor sym 3")
        else:
            out.append(f"factor table {f.name or 'G' + str(f.index)} {f.order}")
            out.extend(" ".join(str(x) for x in row) for row in f.table)
    out.extend(f"lambda {f.index} {f.lam}" for f in fp.factors if f.lam != 1)
    return "\n".join(out) + "\n"


def load_group_file(path) -> FreeProduct:
    return load_group_spec(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------

def reduce_letters(fp: FreeProduct, letters: Iterable[Letter]) -> Word:
    """Normal form of an arbitrary letter sequence (stack-based fusion)."""
    stack: List[Letter] = []
    for factor, element in letters:
        if element == 0:
            continue
        if stack and stack[-1].factor == factor:
            fused = fp.factors[factor - 1].table[stack[-1].element][element]
            stack.pop()
            if fused:
                stack.append(Letter(factor, fused))
        else:
            stack.append(Letter(factor, element))
    return tuple(stack)


def multiply(fp: FreeProduct, *words: Word) -> Word:
    if len(words) == 2 and not words[0]:
        return words[1]
    return reduce_letters(fp, itertools.chain.from_iterable(words))


def invert(fp: FreeProduct, u: Word) -> Word:
    return tuple(Letter(l.factor, fp.factors[l.factor - 1].inverses[l.element]) for l in reversed(u))


def conjugate(fp: FreeProduct, x: Word, g: Word) -> Word:
    """x g x^-1"""
    return multiply(fp, x, g, invert(fp, x))


def is_normal(fp: FreeProduct, w: Sequence[Letter]) -> bool:
    for position, (factor, element) in enumerate(w):
        if not 1 <= factor <= fp.n or not 0 < element < fp.factor(factor).order:
            return False
        if position and w[position - 1][0] == factor:
            return False
    return True


def project(fp: FreeProduct, w: Word, r: int) -> int:
    """Image of w under the retraction G -> G_r that kills the other factors."""
    f = fp.factor(r)
    value = 0
    for factor, element in w:
        if factor == r:
            value = f.table[value][element]
    return value


def iter_elements(fp: FreeProduct, factor_order: Optional[Sequence[int]] = None) -> Iterator[Word]:
    """All elements of G in the well-order: by length, then letter by letter."""
    if factor_order is None:
        letters = fp.letters
    else:
        rank = {factor: r for r, factor in enumerate(factor_order)}
        if sorted(rank) != list(range(1, fp.n + 1)):
            raise ValueError(f"factor_order must be a permutation of 1..{fp.n}")
        letters = tuple(sorted(fp.letters, key=lambda l: (rank[l.factor], l.element)))
    yield EMPTY
    layer: List[Word] = [EMPTY]
    while layer:
        following = []
        for w in layer:
            last = w[-1].factor if w else 0
            following.extend(w + (l,) for l in letters if l.factor != last)
        yield from following
        layer = following


@lru_cache(maxsize=64)
def _element_prefix(fp: FreeProduct, count: int, factor_order: Optional[Tuple[int, ...]]) -> Tuple[Word, ...]:
    return tuple(itertools.islice(iter_elements(fp, factor_order), count))


def enumerate_elements(fp: FreeProduct, count: int,
                       factor_order: Optional[Sequence[int]] = None) -> List[Word]:
    """First `count` elements of G in the well-order (fewer if G is finite)."""
    if count < 1:
        raise ValueError("count must be at least 1")
    key = tuple(factor_order) if factor_order is not None else None
    return list(_element_prefix(fp, count, key))


def words_up_to_length(fp: FreeProduct, length: int) -> List[Word]:
    return list(itertools.takewhile(lambda w: len(w) <= length, iter_elements(fp)))


def format_word(w: Word) -> str:
    return " ".join(f"{l.factor}:{l.element}" for l in w) if w else "ε"


_LETTER = re.compile(r"^(\d+):(\d+)$")


def parse_word(fp: FreeProduct, text: str) -> Word:
    """Inverse of format_word; the result is reduced to normal form."""
    text = text.strip()
    if text in ("", "ε", "e", "1"):
        return EMPTY
    letters = []
    for token in text.split():
        match = _LETTER.match(token)
        if not match:
            raise ValueError(f"bad letter {token!r} (expected factor:element)")
        letter = Letter(int(match.group(1)), int(match.group(2)))
        if not 1 <= letter.factor <= fp.n or not 0 <= letter.element < fp.factor(letter.factor).order:
            raise ValueError(f"letter {token!r} out of range")
        letters.append(letter)
    return reduce_letters(fp, letters)


# ---------------------------------------------------------------------------
# factor automorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactorAuto:
    """An automorphism psi of a single factor, as an image permutation."""

    factor: int
    images: Tuple[int, ...]

    def apply(self, e: int) -> int:
        return self.images[e]

    def is_identity(self) -> bool:
        return all(i == x for i, x in enumerate(self.images))

    def inverse(self) -> "FactorAuto":
        inv = [0] * len(self.images)
        for e, image in enumerate(self.images):
            inv[image] = e
        return FactorAuto(self.factor, tuple(inv))

    def then(self, other: "FactorAuto") -> "FactorAuto":
        """self first, then other."""
        return FactorAuto(self.factor, tuple(other.images[x] for x in self.images))

    def apply_word(self, w: Word) -> Word:
        return tuple(
            Letter(l.factor, self.images[l.element]) if l.factor == self.factor else l for l in w
        )


def _span(f: FactorGroup, gens: Sequence[int]) -> set:
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = f.table[x][g]
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def _generating_set(f: FactorGroup) -> List[int]:
    gens: List[int] = []
    span = {0}
    for a in range(1, f.order):
        if a not in span:
            gens.append(a)
            span = _span(f, gens)
    return gens


def _extend_to_homomorphism(f: FactorGroup, gens: Sequence[int], images: Sequence[int]) -> Optional[Tuple[int, ...]]:
    mapping = {0: 0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for g, image in zip(gens, images):
            y = f.table[x][g]
            target = f.table[mapping[x]][image]
            if y not in mapping:
                mapping[y] = target
                queue.append(y)
            elif mapping[y] != target:
                return None
    m = np.array([mapping[e] for e in range(f.order)], dtype=np.int64)
    if len(set(m.tolist())) != f.order:
        return None
    t = np.asarray(f.table, dtype=np.int64)
    if not (m[t] == t[m[:, None], m[None, :]]).all():
        return None
    return tuple(m.tolist())


@lru_cache(maxsize=None)
def _automorphisms(f: FactorGroup, cap: int) -> Tuple[FactorAuto, ...]:
    if f.order > cap:
        raise CapExceededError(f"automorphism search for factor {f.index} (order {f.order})", cap)
    gens = _generating_set(f)
    candidates = [
        [e for e in range(1, f.order) if f.element_order(e) == f.element_order(g)] for g in gens
    ]
    found = set()
    for images in itertools.product(*candidates):
        mapping = _extend_to_homomorphism(f, gens, images)
        if mapping is not None:
            found.add(mapping)
    # the identity is the lexicographically smallest permutation
    return tuple(FactorAuto(f.index, images) for images in sorted(found))


def factor_automorphisms(f: FactorGroup, cap: int = AUT_CAP) -> List[FactorAuto]:
    """Aut(G_i) by backtracking over images of a generating set; identity first."""
    return list(_automorphisms(f, cap))
