"""Herbrand terms, well-formed partitions and the extension relation between them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union


@dataclass(frozen=True)
class Constant:
    name: str

    def key(self) -> tuple:
        return (0, self.name)

    @property
    def depth(self) -> int:
        return 0

    def __lt__(self, other: "Term") -> bool:
        return self.key() < other.key()

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Call:
    function: str
    args: tuple["Term", ...] = ()
    _key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_key", (1, self.function, tuple(a.key() for a in self.args)))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def depth(self) -> int:
        return 1 + max((a.depth for a in self.args), default=0)

    def key(self) -> tuple:
        return self._key

    def __lt__(self, other: "Term") -> bool:
        return self.key() < other.key()

    def __str__(self) -> str:
        return f"{self.function}({', '.join(str(a) for a in self.args)})"


Term = Union[Constant, Call]


def const(name: str) -> Constant:
    return Constant(name)


def call(function: str, *args: Term) -> Call:
    return Call(function, tuple(args))


def subterms(t: Term) -> frozenset[Term]:
    out: set[Term] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if u in out:
            continue
        out.add(u)
        if isinstance(u, Call):
            stack.extend(u.args)
    return frozenset(out)


def closure(terms: Iterable[Term]) -> frozenset[Term]:
    out: set[Term] = set()
    for t in terms:
        out |= subterms(t)
    return frozenset(out)


def default_representative(cell: Iterable[Term]) -> Term:
    """The constant of the cell if any, otherwise its least term."""
    return min(cell, key=lambda t: t.key())


class PartitionError(ValueError):
    pass


class Partition:
    """Immutable partition of a finite term set, one designated representative per cell.

    Cells are stored in a canonical order so equal partitions hash equally.
    Well-formedness is not enforced here; see `check_well_formed`.
    """

    __slots__ = ("cells", "reps", "_index", "_hash")

    def __init__(self, cells: Iterable[Iterable[Term]], reps: Mapping[Term, Term] | None = None):
        frozen = [frozenset(c) for c in cells]
        if any(not c for c in frozen):
            raise PartitionError("empty cell")
        seen: set[Term] = set()
        for c in frozen:
            if seen & c:
                raise PartitionError("cells are not disjoint")
            seen |= c
        pairs = []
        for c in frozen:
            rep = None
            if reps:
                chosen = {reps[t] for t in c if t in reps}
                if len(chosen) > 1:
                    raise PartitionError(f"conflicting representatives for one cell: {sorted(map(str, chosen))}")
                rep = next(iter(chosen), None)
            if rep is None:
                rep = default_representative(c)
            if rep not in c:
                raise PartitionError(f"representative {rep} outside its cell")
            pairs.append((tuple(sorted(c, key=lambda t: t.key())), rep))
        pairs.sort(key=lambda p: [t.key() for t in p[0]])
        self.cells: tuple[frozenset[Term], ...] = tuple(frozenset(p[0]) for p in pairs)
        self.reps: tuple[Term, ...] = tuple(p[1] for p in pairs)
        self._index = {t: i for i, c in enumerate(self.cells) for t in c}
        self._hash = hash((self.cells, self.reps))

    @classmethod
    def singletons(cls, terms: Iterable[Term]) -> "Partition":
        return cls([{t} for t in set(terms)])

    def terms(self) -> frozenset[Term]:
        return frozenset(self._index)

    def repset(self) -> frozenset[Term]:
        return frozenset(self.reps)

    def __contains__(self, t: Term) -> bool:
        return t in self._index

    def __len__(self) -> int:
        return len(self.cells)

    def cell_of(self, t: Term) -> frozenset[Term]:
        try:
            return self.cells[self._index[t]]
        except KeyError:
            raise PartitionError(f"term {t} is not in the partition") from None

    def rep(self, t: Term) -> Term:
        try:
            return self.reps[self._index[t]]
        except KeyError:
            raise PartitionError(f"term {t} is not in the partition") from None

    def same_cell(self, t1: Term, t2: Term) -> bool:
        return self._index[t1] == self._index[t2]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Partition) and self.cells == other.cells and self.reps == other.reps

    def __hash__(self) -> int:
        return self._hash

    def canonical(self) -> str:
        parts = []
        for cell, rep in zip(self.cells, self.reps):
            items = [("*" if t == rep else "") + str(t) for t in sorted(cell, key=lambda t: t.key())]
            parts.append("{" + ", ".join(items) + "}")
        return "[" + ", ".join(parts) + "]"

    __str__ = canonical

    def __repr__(self) -> str:
        return f"Partition({self.canonical()})"


def representative(t: Term, p: Partition) -> Term:
    return p.rep(t)


@dataclass(frozen=True)
class Violation:
    kind: str  # "constants" | "congruence" | "representative"
    message: str
    terms: tuple[Term, ...] = ()

    def __str__(self) -> str:
        return self.message


class _UnionFind:
    def __init__(self, items: Iterable[Term]):
        self.parent = {x: x for x in items}

    def find(self, x: Term) -> Term:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: Term, b: Term) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def congruence_closure(p: Partition) -> dict[Term, Term]:
    """Merge-and-propagate closure of the cells of `p`; returns term -> class root."""
    terms = p.terms()
    uf = _UnionFind(terms)
    for cell in p.cells:
        first, *rest = cell
        for t in rest:
            uf.union(first, t)
    calls = [t for t in terms if isinstance(t, Call) and all(a in terms for a in t.args)]
    changed = True
    while changed:
        changed = False
        sig: dict[tuple, Term] = {}
        for t in calls:
            s = (t.function, tuple(uf.find(a) for a in t.args))
            other = sig.setdefault(s, t)
            if other is not t and uf.union(other, t):
                changed = True
    return {t: uf.find(t) for t in terms}


def check_well_formed(p: Partition) -> list[Violation]:
    """Empty list means well-formed."""
    out: list[Violation] = []
    for cell in p.cells:
        consts = sorted((t for t in cell if isinstance(t, Constant)), key=lambda t: t.key())
        if len(consts) > 1:
            out.append(Violation("constants", f"cell holds several constants: {', '.join(map(str, consts))}", tuple(consts)))
    for cell, rep in zip(p.cells, p.reps):
        consts = [t for t in cell if isinstance(t, Constant)]
        if consts and rep not in consts:
            out.append(Violation("representative", f"cell with constant {consts[0]} is represented by {rep}", (rep,)))
    roots = congruence_closure(p)
    for cell in p.cells:
        for other in p.cells:
            if cell is other:
                continue
            a, b = next(iter(cell)), next(iter(other))
            if roots[a] == roots[b] and a.key() < b.key():
                out.append(Violation("congruence", f"congruence forces [{a}] = [{b}]", (a, b)))
    return out


def is_well_formed(p: Partition) -> bool:
    return not check_well_formed(p)


def _cell_map(p1: Partition, p2: Partition) -> list[int] | None:
    mapping = []
    for cell in p1.cells:
        idx = {p2._index.get(t) for t in cell}
        if len(idx) != 1 or None in idx:
            return None
        mapping.append(idx.pop())
    return mapping


def is_extension(p1: Partition, p2: Partition) -> bool:
    """Each cell of p1 sits inside its own distinct cell of p2."""
    m = _cell_map(p1, p2)
    return m is not None and len(set(m)) == len(m)


def is_embedding(p1: Partition, p2: Partition) -> bool:
    m = _cell_map(p1, p2)
    return m is not None and len(set(m)) == len(m) == len(p2.cells)


def iter_new_terms(known: Iterable[Term], incoming: Iterable[Term]) -> Iterator[Term]:
    """Terms of `incoming` (closed under subterms) absent from `known`, innermost first."""
    known = set(known)
    fresh = closure(incoming) - known
    yield from sorted(fresh, key=lambda t: (t.depth, t.key()))


class ServiceCallMap(Mapping[Call, Constant]):
    """Immutable record of the values that ground service calls returned."""

    __slots__ = ("_items", "_hash")

    def __init__(self, entries: Mapping[Call, Constant] | Iterable[tuple[Call, Constant]] = ()):
        items = dict(entries.items() if isinstance(entries, Mapping) else entries)
        for c, v in items.items():
            if not isinstance(c, Call) or not all(isinstance(a, Constant) for a in c.args):
                raise ValueError(f"service call map keys must be calls over constants, got {c}")
            if not isinstance(v, Constant):
                raise ValueError(f"service call {c} must map to a constant, got {v}")
        self._items = dict(sorted(items.items(), key=lambda kv: kv[0].key()))
        self._hash = hash(frozenset(self._items.items()))

    def __getitem__(self, c: Call) -> Constant:
        return self._items[c]

    def __iter__(self) -> Iterator[Call]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ServiceCallMap) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def extend(self, entries: Mapping[Call, Constant]) -> "ServiceCallMap":
        for c, v in entries.items():
            if c in self._items and self._items[c] != v:
                raise ValueError(f"{c} already evaluated to {self._items[c]}, not {v}")
        return ServiceCallMap({**self._items, **entries})

    def canonical(self) -> str:
        return "{" + ", ".join(f"{c} -> {v}" for c, v in self._items.items()) + "}"

    __str__ = canonical

    def __repr__(self) -> str:
        return f"ServiceCallMap({self.canonical()})"
