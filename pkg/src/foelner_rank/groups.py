"""Catalog of finitely generated amenable groups with exact normal forms.

The catalog is closed: free abelian groups ``Z^d``, products ``Z^d x C_o1 x ...``,
finite abelian groups, the discrete Heisenberg group ``H3`` and its reductions
mod m. Elements are tuples of integers in a canonical coordinate system, so
equality of normal forms is equality of group elements.

Heisenberg normal form: ``(a, b, c)`` stands for ``x^a y^b z^c`` with
``z = x y x^-1 y^-1`` central, giving the product rule

    (a, b, c) (a', b', c') = (a + a', b + b', c + c' - a' b).
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence

from .errors import ParseError, PreconditionError

FREE_ABELIAN = "FreeAbelian"
FREE_TIMES_FINITE = "FreeAbelianTimesFiniteAbelian"
FINITE_ABELIAN = "FiniteAbelian"
HEISENBERG = "Heisenberg3"
HEISENBERG_MOD = "Heisenberg3Mod"

_KINDS = (FREE_ABELIAN, FREE_TIMES_FINITE, FINITE_ABELIAN, HEISENBERG, HEISENBERG_MOD)

NF = tuple  # normal form: a tuple of ints


class _BallCache:
    """Incremental BFS from the identity; used for word lengths in H3."""

    def __init__(self, group: MarkedGroup):
        self.group = group
        self.dist = {group.identity_nf: 0}
        self.frontier = [group.identity_nf]
        self.radius = 0

    def grow_to(self, r: int):
        g = self.group
        gens = [g.gen_nf(s) for s in g.generators]
        while self.radius < r and self.frontier:
            nxt = []
            for u in self.frontier:
                for s in gens:
                    v = g.mul_nf(u, s)
                    if v not in self.dist:
                        self.dist[v] = self.radius + 1
                        nxt.append(v)
            self.frontier = nxt
            self.radius += 1


@dataclass(frozen=True)
class MarkedGroup:
    """A catalog group together with its ordered symmetric generating set.

    ``names`` labels the coordinates: free coordinates first, then finite
    cyclic ones (abelian kinds), or ``x, y, z`` for the Heisenberg kinds.
    """

    kind: str
    rank: int = 0
    orders: tuple[int, ...] = ()
    modulus: int = 0
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.rank < 0 or any(o < 2 for o in self.orders):
            raise ValueError("ranks must be >= 0 and finite orders >= 2")
        if self.kind in (HEISENBERG, HEISENBERG_MOD):
            if self.kind == HEISENBERG_MOD and self.modulus < 2:
                raise ValueError("Heisenberg modulus must be >= 2")
        elif self.rank + len(self.orders) == 0:
            raise ValueError("abelian group needs at least one coordinate")
        if not self.names:
            object.__setattr__(self, "names", self._default_names())
        if len(self.names) != self.ncoords:
            raise ValueError("one name per coordinate required")

    def _default_names(self) -> tuple[str, ...]:
        if self.kind in (HEISENBERG, HEISENBERG_MOD):
            return ("x", "y", "z")
        free = tuple(f"g{i}" for i in range(self.rank))
        if len(self.orders) == 1:
            return free + ("t",)
        return free + tuple(f"t{i}" for i in range(len(self.orders)))

    # -- structure -------------------------------------------------------

    @property
    def is_heisenberg(self) -> bool:
        return self.kind in (HEISENBERG, HEISENBERG_MOD)

    @property
    def ncoords(self) -> int:
        return 3 if self.is_heisenberg else self.rank + len(self.orders)

    @property
    def is_finite(self) -> bool:
        return self.kind in (FINITE_ABELIAN, HEISENBERG_MOD)

    @property
    def order(self) -> int | None:
        if self.kind == FINITE_ABELIAN:
            n = 1
            for o in self.orders:
                n *= o
            return n
        if self.kind == HEISENBERG_MOD:
            return self.modulus ** 3
        return None

    @cached_property
    def _moduli(self) -> tuple[int, ...]:
        # 0 marks a free (Z) coordinate
        if self.is_heisenberg:
            return (self.modulus,) * 3
        return (0,) * self.rank + self.orders

    @cached_property
    def _symbols(self) -> tuple[tuple[str, ...], dict[str, NF]]:
        gens: list[str] = []
        alias: dict[str, NF] = {}
        seen: set[NF] = set()
        for i, name in enumerate(self.names):
            e = [0] * self.ncoords
            e[i] = 1
            pos = self.reduce_nf(tuple(e))
            neg = self.inv_nf(pos)
            for sym, nf in ((name, pos), (f"{name}^-1", neg)):
                alias[sym] = nf
                if nf not in seen:
                    seen.add(nf)
                    gens.append(sym)
        return tuple(gens), alias

    @property
    def generators(self) -> tuple[str, ...]:
        """The symmetric generating set S, deduplicated by element."""
        return self._symbols[0]

    @property
    def degree(self) -> int:
        return len(self.generators)

    def gen_nf(self, symbol: str) -> NF:
        try:
            return self._symbols[1][symbol]
        except KeyError:
            raise ParseError(f"unknown generator symbol {symbol!r} for {self}") from None

    def inverse_symbol(self, symbol: str) -> str:
        """The symbol in S representing ``symbol^-1``."""
        target = self.inv_nf(self.gen_nf(symbol))
        for s in self.generators:
            if self._symbols[1][s] == target:
                return s
        raise AssertionError("S is not symmetric")  # pragma: no cover

    @cached_property
    def _ball_cache(self) -> _BallCache:
        return _BallCache(self)

    # -- arithmetic on normal forms ---------------------------------------

    @property
    def identity_nf(self) -> NF:
        return (0,) * self.ncoords

    def reduce_nf(self, nf: Sequence[int]) -> NF:
        return tuple(v % m if m else v for v, m in zip(nf, self._moduli))

    def mul_nf(self, u: NF, v: NF) -> NF:
        if self.is_heisenberg:
            a, b, c = u[0] + v[0], u[1] + v[1], u[2] + v[2] - v[0] * u[1]
            m = self.modulus
            return (a % m, b % m, c % m) if m else (a, b, c)
        return tuple((x + y) % m if m else x + y for x, y, m in zip(u, v, self._moduli))

    def inv_nf(self, u: NF) -> NF:
        if self.is_heisenberg:
            a, b, c = u
            # (a,b,c)^-1 = (-a, -b, -c - a b)
            r = (-a, -b, -c - a * b)
        else:
            r = tuple(-x for x in u)
        return self.reduce_nf(r)

    def word_length_nf(self, u: NF) -> int:
        if not self.is_heisenberg:
            total = 0
            for v, m in zip(u, self._moduli):
                total += min(v, m - v) if m else abs(v)
            return total
        cache = self._ball_cache
        while u not in cache.dist:
            if not cache.frontier:
                raise AssertionError("element outside the group")  # pragma: no cover
            cache.grow_to(cache.radius + 1)
        return cache.dist[u]

    # -- elements ----------------------------------------------------------

    def element(self, nf: Iterable[int]) -> GroupElement:
        nf = tuple(nf)
        if len(nf) != self.ncoords:
            raise ValueError(f"normal form {nf} has wrong length for {self}")
        return GroupElement(self, self.reduce_nf(nf))

    @property
    def identity(self) -> GroupElement:
        return GroupElement(self, self.identity_nf)

    def gen(self, symbol: str) -> GroupElement:
        return GroupElement(self, self.gen_nf(symbol))

    def elements(self) -> Iterator[GroupElement]:
        """All elements in sorted normal-form order (finite kinds only)."""
        if not self.is_finite:
            raise PreconditionError(f"{self} is infinite")
        for nf in itertools.product(*(range(m) for m in self._moduli)):
            yield GroupElement(self, nf)

    def __str__(self):
        if self.kind == HEISENBERG:
            return "H3"
        if self.kind == HEISENBERG_MOD:
            return f"H3 % {self.modulus}"
        parts = []
        if self.rank:
            parts.append(f"Z^{self.rank}")
        parts.extend(f"C{o}" for o in self.orders)
        return " x ".join(parts)


class GroupElement:
    """An element of a :class:`MarkedGroup`, stored by its normal form."""

    __slots__ = ("group", "nf")

    def __init__(self, group: MarkedGroup, nf: NF):
        self.group = group
        self.nf = nf

    def __mul__(self, other: GroupElement) -> GroupElement:
        if not isinstance(other, GroupElement):
            return NotImplemented
        if other.group is not self.group and other.group != self.group:
            raise ValueError("elements of different groups")
        return GroupElement(self.group, self.group.mul_nf(self.nf, other.nf))

    def inverse(self) -> GroupElement:
        return GroupElement(self.group, self.group.inv_nf(self.nf))

    def __pow__(self, k: int) -> GroupElement:
        base = self if k >= 0 else self.inverse()
        result = self.group.identity
        for _ in range(abs(k)):
            result = result * base
        return result

    @property
    def is_identity(self) -> bool:
        return self.nf == self.group.identity_nf

    def word_length(self) -> int:
        return self.group.word_length_nf(self.nf)

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.nf == other.nf and (self.group is other.group or self.group == other.group)

    def __hash__(self):
        return hash(self.nf)

    def __lt__(self, other: GroupElement):
        return self.nf < other.nf

    def __repr__(self):
        return f"<{self.group}: {self.nf}>"


class FiniteSubset:
    """Deduplicated finite set of group elements, sorted by normal form."""

    __slots__ = ("group", "elements", "_index")

    def __init__(self, group: MarkedGroup, elements: Iterable[GroupElement]):
        self.group = group
        uniq = {}
        for x in elements:
            if x.group != group:
                raise ValueError("element of a different group")
            uniq[x.nf] = x
        self.elements: tuple[GroupElement, ...] = tuple(uniq[k] for k in sorted(uniq))
        self._index = {x: i for i, x in enumerate(self.elements)}

    @classmethod
    def from_nfs(cls, group: MarkedGroup, nfs: Iterable[NF]) -> FiniteSubset:
        return cls(group, (GroupElement(group, group.reduce_nf(v)) for v in nfs))

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x):
        return x in self._index

    def index(self, x: GroupElement) -> int:
        return self._index[x]

    def translate(self, gamma: GroupElement) -> FiniteSubset:
        """The left translate ``gamma * F``."""
        return FiniteSubset(self.group, (gamma * x for x in self.elements))

    def __eq__(self, other):
        if not isinstance(other, FiniteSubset):
            return NotImplemented
        return self.group == other.group and self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def __le__(self, other: FiniteSubset):
        return all(x in other for x in self.elements)

    def __repr__(self):
        return f"FiniteSubset({self.group}, |F|={len(self)})"


@dataclass
class LabeledGraph:
    """Finite directed graph with edges labeled by generator symbols.

    ``out[v]`` maps a label to the unique target of the ``label``-edge leaving
    ``v`` (a partial S-action). ``points[v]`` is the group element behind
    vertex ``v`` when the graph comes from a group.
    """

    labels: tuple[str, ...]
    inverse: dict[str, str]
    out: list[dict[str, int]]
    points: tuple[GroupElement, ...] | None = None
    _point_index: dict[GroupElement, int] | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.out)

    def edges(self) -> Iterator[tuple[int, int, str]]:
        for v, nbrs in enumerate(self.out):
            for s, w in nbrs.items():
                yield v, w, s

    def num_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.out)

    def vertex_of(self, x: GroupElement) -> int:
        if self._point_index is None:
            self._point_index = {p: i for i, p in enumerate(self.points or ())}
        return self._point_index[x]

    def check(self) -> None:
        """Assert the label/inverse pairing: (x,y,s) present iff (y,x,s^-1) present."""
        for v, w, s in self.edges():
            if self.out[w].get(self.inverse[s]) != v:
                raise AssertionError(f"edge ({v},{w},{s}) lacks its inverse")


def make_group(spec) -> MarkedGroup:
    """Build a catalog group.

    ``spec`` is either a descriptor string (``"Z^2"``, ``"Z^1 x C2"``, ``"H3"``,
    ``"C2 x C3"``, ``"Z^2 % (5,5)"``) or a tuple such as ``("FreeAbelian", 2)``,
    ``("FreeAbelianTimesFiniteAbelian", 1, [2])``, ``("Heisenberg3",)`` or
    ``("FiniteAbelian", [2, 3])``.
    """
    if isinstance(spec, MarkedGroup):
        return spec
    if isinstance(spec, str):
        base, mod = parse_group(spec)
        return base if mod is None else quotient(base, mod)[0]
    kind, *params = spec
    try:
        if kind == FREE_ABELIAN:
            (d,) = params
            if d < 1:
                raise PreconditionError("FreeAbelian needs d >= 1")
            return MarkedGroup(FREE_ABELIAN, rank=d)
        if kind == FREE_TIMES_FINITE:
            d, orders = params
            if d < 1 or not orders or any(o < 2 for o in orders):
                raise PreconditionError("need d >= 1 and orders >= 2")
            return MarkedGroup(FREE_TIMES_FINITE, rank=d, orders=tuple(orders))
        if kind == FINITE_ABELIAN:
            (orders,) = params
            if not orders or any(o < 2 for o in orders):
                raise PreconditionError("finite orders must be >= 2")
            return MarkedGroup(FINITE_ABELIAN, orders=tuple(orders))
        if kind == HEISENBERG:
            if params:
                raise PreconditionError("Heisenberg3 takes no parameters")
            return MarkedGroup(HEISENBERG)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, PreconditionError):
            raise
        raise PreconditionError(f"bad parameters for {kind}: {params}") from exc
    raise PreconditionError(f"unknown group kind {kind!r}")


_FACTOR = re.compile(r"\s*(Z\^(\d+)|Z|C(\d+)|H3)\s*")


def parse_group(text: str) -> tuple[MarkedGroup, tuple[int, ...] | None]:
    """Parse a descriptor into ``(base group, quotient modulus or None)``.

    Grammar::

        group   := product [ '%' modulus ]
        product := factor ( 'x' factor )*
        factor  := 'Z^' INT | 'Z' | 'C' INT | 'H3'
        modulus := INT | '(' INT (',' INT)* ')'

    Free factors are merged into one ``Z^d`` regardless of position.
    """
    body, _, mod_txt = text.partition("%")
    rank, orders, heis = 0, [], False
    pos = 0
    pieces = body.split("x")
    for k, piece in enumerate(pieces):
        m = _FACTOR.fullmatch(piece)
        if not m:
            raise ParseError(f"bad group factor {piece.strip()!r}", pos, text)
        if m.group(1) == "H3":
            heis = True
        elif m.group(1).startswith("Z"):
            rank += int(m.group(2)) if m.group(2) else 1
        else:
            orders.append(int(m.group(3)))
        pos += len(piece) + 1
    if heis and (rank or orders or len(pieces) > 1):
        raise ParseError("H3 cannot be combined with other factors", 0, text)
    if heis:
        base = make_group((HEISENBERG,))
    elif rank and orders:
        base = make_group((FREE_TIMES_FINITE, rank, orders))
    elif rank:
        base = make_group((FREE_ABELIAN, rank))
    else:
        base = make_group((FINITE_ABELIAN, orders))
    if not mod_txt.strip():
        if "%" in text:
            raise ParseError("missing modulus after '%'", len(body) + 1, text)
        return base, None
    return base, parse_modulus(mod_txt, offset=len(body) + 1)


def parse_modulus(text: str, offset: int = 0) -> tuple[int, ...]:
    t = text.strip()
    if t.startswith("(") and t.endswith(")"):
        t = t[1:-1]
    try:
        vals = tuple(int(v) for v in t.split(","))
    except ValueError:
        raise ParseError(f"bad quotient modulus {text.strip()!r}", offset, text) from None
    return vals


def word_eval(g: MarkedGroup, word: Sequence[str]) -> GroupElement:
    """Left-to-right product of generator symbols; ``[]`` is the identity."""
    nf = g.identity_nf
    for sym in word:
        nf = g.mul_nf(nf, g.gen_nf(sym))
    return GroupElement(g, nf)


def bfs_layers(g: MarkedGroup, r: int) -> list[list[GroupElement]]:
    """Spheres S_0..S_r around the identity, by labeled BFS."""
    seen = {g.identity_nf}
    layers = [[g.identity]]
    gens = [g.gen_nf(s) for s in g.generators]
    for _ in range(r):
        nxt = []
        for x in layers[-1]:
            for s in gens:
                v = g.mul_nf(x.nf, s)
                if v not in seen:
                    seen.add(v)
                    nxt.append(GroupElement(g, v))
        if not nxt:
            break
        layers.append(nxt)
    return layers


def ball(g: MarkedGroup, r: int) -> FiniteSubset:
    if r < 0:
        raise PreconditionError("radius must be >= 0")
    return FiniteSubset(g, (x for layer in bfs_layers(g, r) for x in layer))


def ball_words(g: MarkedGroup, r: int) -> list[tuple[GroupElement, tuple[str, ...]]]:
    """Every element of B_r(1) with a geodesic word, in BFS order."""
    words = {g.identity_nf: ()}
    order = [(g.identity, ())]
    frontier = [g.identity_nf]
    for _ in range(r):
        nxt = []
        for u in frontier:
            for s in g.generators:
                v = g.mul_nf(u, g.gen_nf(s))
                if v not in words:
                    words[v] = words[u] + (s,)
                    order.append((GroupElement(g, v), words[v]))
                    nxt.append(v)
        frontier = nxt
    return order


def induced_labeled_graph(g: MarkedGroup, F: FiniteSubset | Iterable[GroupElement]) -> LabeledGraph:
    """Induced subgraph of Cay(g, S) on F; vertex ids follow sorted normal form."""
    if not isinstance(F, FiniteSubset):
        F = FiniteSubset(g, F)
    gens = [(s, g.gen_nf(s)) for s in g.generators]
    out = []
    for x in F.elements:
        nbrs = {}
        for s, snf in gens:
            y = GroupElement(g, g.mul_nf(x.nf, snf))
            j = F._index.get(y)
            if j is not None:
                nbrs[s] = j
        out.append(nbrs)
    inverse = {s: g.inverse_symbol(s) for s in g.generators}
    return LabeledGraph(g.generators, inverse, out, F.elements, F._index)


def cayley_graph(parent: MarkedGroup, q: MarkedGroup,
                 projection: Callable[[GroupElement], GroupElement]) -> LabeledGraph:
    """Cay(q, pi(S)) for a finite quotient q of parent, labeled by parent's S."""
    pts = tuple(q.elements())
    index = {x: i for i, x in enumerate(pts)}
    images = [(s, projection(parent.gen(s))) for s in parent.generators]
    out = [{s: index[x * img] for s, img in images} for x in pts]
    inverse = {s: parent.inverse_symbol(s) for s in parent.generators}
    return LabeledGraph(parent.generators, inverse, out, pts, index)


def quotient(g: MarkedGroup, modulus) -> tuple[MarkedGroup, Callable[[GroupElement], GroupElement]]:
    """Finite quotient and its projection.

    ``Z^d``: ``modulus`` is a length-d vector, N = m1 Z x ... x md Z (an int is
    broadcast). ``Z^d x finite``: the vector reduces the free part only.
    Finite abelian: each m_i must divide the i-th order. ``H3``: an int m,
    all three normal-form coordinates are reduced mod m.
    """
    if isinstance(modulus, int):
        modulus = (modulus,)
    modulus = tuple(int(m) for m in modulus)
    if any(m < 2 for m in modulus):
        raise PreconditionError("quotient modulus must be >= 2")
    if g.kind == HEISENBERG:
        if len(modulus) != 1:
            raise PreconditionError("H3 quotient takes a single modulus")
        q = MarkedGroup(HEISENBERG_MOD, modulus=modulus[0])
    elif g.kind in (FREE_ABELIAN, FREE_TIMES_FINITE):
        if len(modulus) == 1 and g.rank > 1:
            modulus = modulus * g.rank
        if len(modulus) != g.rank:
            raise PreconditionError(f"need {g.rank} moduli for {g}")
        q = MarkedGroup(FINITE_ABELIAN, orders=modulus + g.orders, names=g.names)
    elif g.kind == FINITE_ABELIAN:
        if len(modulus) == 1 and len(g.orders) > 1:
            modulus = modulus * len(g.orders)
        if len(modulus) != len(g.orders) or any(o % m for o, m in zip(g.orders, modulus)):
            raise PreconditionError(f"moduli {modulus} must divide orders {g.orders}")
        q = MarkedGroup(FINITE_ABELIAN, orders=modulus, names=g.names)
    else:
        raise PreconditionError(f"no quotients implemented for {g}")

    def projection(x: GroupElement) -> GroupElement:
        return q.element(x.nf)

    return q, projection


def quotient_diameter(q: MarkedGroup) -> int:
    """Diameter of Cay(q, S) (finite q)."""
    return len(bfs_layers(q, q.order)) - 1
