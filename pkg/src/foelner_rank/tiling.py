"""Quasitilings, Bratteli diagrams and Bratteli tiling systems.

The existence results behind these constructions use constants nobody can
compute, so everything here is verify-then-accept: a greedy tiler runs, its
output is checked against the required inequalities, and failures are
reported as data (or as :class:`BratteliError` when a build cannot finish).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from .errors import PreconditionError
from .folner import folner_set, isoperimetric
from .groups import (FiniteSubset, GroupElement, LabeledGraph, MarkedGroup,
                     induced_labeled_graph)


class BratteliError(RuntimeError):
    """No candidate within the retry budget met the tiling-system bounds."""


def as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


# -- shapes and placements ---------------------------------------------------

@dataclass(eq=False)
class TileShape:
    """A finite shape containing the identity; placements copy it into hosts."""

    id: str
    shape: FiniteSubset
    index: int | None = None   # Følner index when the shape is a canonical Følner set

    def __post_init__(self):
        if self.shape.group.identity not in self.shape:
            raise PreconditionError(f"tile shape {self.id} must contain the identity")

    @property
    def size(self) -> int:
        return len(self.shape)

    @property
    def elements(self) -> tuple[GroupElement, ...]:
        return self.shape.elements

    @property
    def is_singleton(self) -> bool:
        return self.size == 1

    @cached_property
    def _plan(self):
        """BFS spanning tree from the identity inside the shape, plus its internal edges."""
        g = self.shape.group
        idx = self.shape._index
        root = idx[g.identity]
        gens = [(s, g.gen_nf(s)) for s in g.generators]
        edges = []
        for i, x in enumerate(self.shape.elements):
            for s, snf in gens:
                j = idx.get(GroupElement(g, g.mul_nf(x.nf, snf)))
                if j is not None:
                    edges.append((i, s, j))
        adj: dict[int, list[tuple[str, int]]] = {}
        for i, s, j in edges:
            adj.setdefault(i, []).append((s, j))
        seen = {root}
        tree = []
        frontier = [root]
        while frontier:
            nxt = []
            for i in frontier:
                for s, j in adj.get(i, ()):
                    if j not in seen:
                        seen.add(j)
                        tree.append((j, i, s))
                        nxt.append(j)
            frontier = nxt
        if len(seen) != self.size:
            raise PreconditionError(f"tile shape {self.id} is not connected")
        return root, tree, edges

    def place(self, host: LabeledGraph, v: int) -> tuple[int, ...] | None:
        """Image of the shape anchored at host vertex ``v`` (identity -> v).

        Returns vertex ids aligned with ``self.elements``, or None unless the
        image is a labeled-isomorphic copy of the shape's induced graph.
        """
        root, tree, edges = self._plan
        img = [0] * self.size
        img[root] = v
        out = host.out
        for child, parent, s in tree:
            t = out[img[parent]].get(s)
            if t is None:
                return None
            img[child] = t
        imgset = set(img)
        if len(imgset) != self.size:
            return None
        for i, s, j in edges:
            if out[img[i]].get(s) != img[j]:
                return None
        if sum(1 for u in img for t in out[u].values() if t in imgset) != len(edges):
            return None
        return tuple(img)


@dataclass(frozen=True)
class Placement:
    shape_id: str
    anchor: int
    covered: tuple[int, ...]


@dataclass
class Tiling:
    host: LabeledGraph
    shapes: dict[str, TileShape]
    placements: list[Placement]
    eps: Fraction | None = None
    disjoint: bool = False

    @cached_property
    def covered(self) -> frozenset[int]:
        return frozenset(u for p in self.placements for u in p.covered)

    @property
    def uncovered(self) -> list[int]:
        cov = self.covered
        return [v for v in range(self.host.n) if v not in cov]

    @property
    def cover_ratio(self) -> Fraction:
        return Fraction(len(self.covered), self.host.n) if self.host.n else Fraction(1)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for p in self.placements:
            out[p.shape_id] = out.get(p.shape_id, 0) + 1
        return out

    def to_json(self) -> dict:
        pts = self.host.points
        def name(v):
            return list(pts[v].nf) if pts is not None else v
        return {
            "placements": [{"shape_id": p.shape_id, "anchor": name(p.anchor),
                            "covered": [name(u) for u in p.covered]} for p in self.placements],
            "uncovered": [name(u) for u in self.uncovered],
        }


def check_epsilon_cover(host, placements: Iterable[Placement], eps) -> tuple[bool, Fraction]:
    """ratio = |union of covered sets| / |host|; holds iff ratio > 1 - eps."""
    n = host if isinstance(host, int) else (host.n if isinstance(host, LabeledGraph) else len(host))
    union = set()
    for p in placements:
        union.update(p.covered)
    ratio = Fraction(len(union), n) if n else Fraction(1)
    return ratio > 1 - as_fraction(eps), ratio


def check_epsilon_disjoint(placements: Sequence[Placement], eps) -> tuple[bool, list[frozenset[int]]]:
    """Greedy first-claim witness B_i = A_i minus earlier claims.

    ``True`` certifies ε-disjointness. ``False`` only means the greedy
    witness failed; some other choice of B_i might still exist.
    """
    eps = as_fraction(eps)
    claimed: set[int] = set()
    witness = []
    holds = True
    for p in placements:
        B = frozenset(u for u in p.covered if u not in claimed)
        claimed.update(B)
        witness.append(B)
        if not Fraction(len(B), len(p.covered)) > 1 - eps:
            holds = False
    return holds, witness


def quasitile(host: LabeledGraph, shapes: Sequence[TileShape], eps=Fraction(1, 5),
              disjoint: bool = False, seed: int | None = None) -> Tiling:
    """Greedy multi-pass ε-quasitiling, largest shape first.

    Each shape gets two scans over the anchors: the first places only
    translates disjoint from everything so far, the second (skipped when
    ``disjoint``) also accepts translates less than an ε-fraction covered.
    Only labeled copies of the shape are placed. Anchors are scanned in
    vertex order, or in a seeded random order when ``seed`` is given.
    """
    eps = as_fraction(eps)
    order = sorted(shapes, key=lambda s: -s.size)
    anchors = list(range(host.n))
    if seed is not None:
        random.Random(seed).shuffle(anchors)
    covered = bytearray(host.n)
    placements = []
    for shape in order:
        limits = [1] if disjoint else [1, eps * shape.size]
        for limit in limits:
            for v in anchors:
                if limit == 1 and covered[v]:
                    continue
                img = shape.place(host, v)
                if img is None:
                    continue
                if sum(covered[u] for u in img) < limit:
                    placements.append(Placement(shape.id, v, img))
                    for u in img:
                        covered[u] = 1
    return Tiling(host, {s.id: s for s in order}, placements, eps, disjoint)


def box_shapes(g: MarkedGroup, sizes: Iterable[int], prefix: str = "S") -> list[TileShape]:
    return [TileShape(f"{prefix}{k}", folner_set(g, n), n) for k, n in enumerate(sizes)]


# -- Bratteli diagrams ---------------------------------------------------------

@dataclass
class BratteliDiagram:
    """Finite truncation: ``levels[n-1]`` lists the vertex ids of Z_n."""

    levels: list[list[str]]
    sizes: dict[str, int]
    K: dict[tuple[str, str], int]
    weights: dict[str, Fraction] | None = None

    def to_json(self) -> dict:
        from .report import frac_json
        return {
            "levels": [[{"id": v, "size": self.sizes[v]} for v in lvl] for lvl in self.levels],
            "multiplicities": [{"from": a, "to": b, "K": k} for (a, b), k in sorted(self.K.items())],
            "weights": None if self.weights is None else
            {v: frac_json(w) for v, w in sorted(self.weights.items())},
        }


@dataclass
class BratteliReport:
    size_residuals: list[dict[str, int]]
    harmonic_residuals: list[Fraction]
    weight_sums: list[Fraction]
    missing_outgoing: list[str]
    tol: Fraction
    sizes_ok: bool
    harmonic_ok: bool

    @property
    def ok(self) -> bool:
        return self.sizes_ok and self.harmonic_ok and not self.missing_outgoing

    @property
    def max_harmonic_residual(self) -> Fraction:
        return max(self.harmonic_residuals, default=Fraction(0))


def validate_bratteli(d: BratteliDiagram, tol=Fraction(0)) -> BratteliReport:
    """Exact size consistency plus harmonicity checked against ``tol``."""
    tol = as_fraction(tol)
    size_res = []
    missing = []
    for n in range(len(d.levels) - 1):
        lo, hi = d.levels[n], d.levels[n + 1]
        size_res.append({b: d.sizes[b] - sum(d.sizes[a] * d.K.get((a, b), 0) for a in lo) for b in hi})
        missing += [a for a in lo if not any(d.K.get((a, b), 0) > 0 for b in hi)]
    sizes_ok = all(v == 0 for lvl in size_res for v in lvl.values())
    harm = []
    sums = []
    if d.weights is not None:
        P = {v: as_fraction(w) for v, w in d.weights.items()}
        for n, lvl in enumerate(d.levels):
            sums.append(sum(P.get(v, Fraction(0)) for v in lvl))
            if n + 1 < len(d.levels):
                hi = d.levels[n + 1]
                res = Fraction(0)
                for a in lvl:
                    pushed = sum(Fraction(d.sizes[a] * d.K.get((a, b), 0), d.sizes[b]) * P.get(b, 0)
                                 for b in hi)
                    res = max(res, abs(P.get(a, Fraction(0)) - pushed))
                harm.append(res)
    harmonic_ok = all(r <= tol for r in harm)
    return BratteliReport(size_res, harm, sums, missing, tol, sizes_ok, harmonic_ok)


# -- Bratteli tiling systems -----------------------------------------------------

@dataclass(frozen=True)
class LevelTile:
    """A translate ``anchor * A`` of a level shape; ``elements`` follow A's order."""

    shape_id: str
    anchor: GroupElement
    elements: tuple[GroupElement, ...]


def singleton_id(n: int) -> str:
    return f"E{n}"


@dataclass
class BratteliTilingSystem:
    group: MarkedGroup
    levels: list[dict[str, TileShape]]
    partitions: dict[str, list[LevelTile]]
    weights: dict[str, Fraction] | None = None

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> dict[str, TileShape]:
        """Shapes of Z_n (1-based), singleton included."""
        if not 1 <= n <= self.depth:
            raise PreconditionError(f"level {n} not built (depth {self.depth})")
        return self.levels[n - 1]

    def shape(self, shape_id: str) -> TileShape:
        for lvl in self.levels:
            if shape_id in lvl:
                return lvl[shape_id]
        raise KeyError(shape_id)

    def level_of(self, shape_id: str) -> int:
        for n, lvl in enumerate(self.levels, 1):
            if shape_id in lvl:
                return n
        raise KeyError(shape_id)

    @cached_property
    def K(self) -> dict[tuple[str, str], int]:
        out: dict[tuple[str, str], int] = {}
        for b, tiles in self.partitions.items():
            for t in tiles:
                out[(t.shape_id, b)] = out.get((t.shape_id, b), 0) + 1
        return out

    def diagram(self) -> BratteliDiagram:
        return BratteliDiagram(
            [list(lvl) for lvl in self.levels],
            {sid: s.size for lvl in self.levels for sid, s in lvl.items()},
            dict(self.K), self.weights)

    def with_weights(self, weights: dict[str, Fraction]) -> BratteliTilingSystem:
        return BratteliTilingSystem(self.group, self.levels, self.partitions, dict(weights))

    def check_invariants(self) -> dict[str, bool]:
        """The three tiling-system invariants plus exact size consistency."""
        iso_ok = all(isoperimetric(s.shape) <= Fraction(1, 2 ** n)
                     for n, lvl in enumerate(self.levels, 1)
                     for s in lvl.values() if not s.is_singleton)
        single_ok = all(self.K.get((singleton_id(n - 1), b), 0) * 2 ** (n - 1) <= s.size
                        for n, lvl in enumerate(self.levels, 1) if n >= 2
                        for b, s in lvl.items() if not s.is_singleton)
        sizes_ok = validate_bratteli(self.diagram()).sizes_ok
        out = {"isoperimetric": iso_ok, "singleton_bound": single_ok, "size_consistency": sizes_ok}
        if self.weights is not None:
            e = [self.weights.get(singleton_id(n), Fraction(0)) for n in range(1, self.depth + 1)]
            out["singleton_weight_decreasing"] = all(b <= a for a, b in zip(e, e[1:]))
        return out

    def to_json(self) -> dict:
        d = self.diagram().to_json()
        d["shapes"] = {sid: {"level": n, "size": s.size,
                             "isoperimetric": str(isoperimetric(s.shape))}
                       for n, lvl in enumerate(self.levels, 1) for sid, s in lvl.items()}
        return d


def tile_shape_by(g: MarkedGroup, F: FiniteSubset, shapes: Sequence[TileShape],
                  single: str) -> list[LevelTile]:
    """Disjoint greedy tiling of F by ``shapes``; leftovers become ``single`` tiles."""
    host = induced_labeled_graph(g, F)
    t = quasitile(host, [s for s in shapes if not s.is_singleton], disjoint=True)
    pts = host.points
    tiles = [LevelTile(p.shape_id, pts[p.anchor], tuple(pts[u] for u in p.covered))
             for p in t.placements]
    tiles += [LevelTile(single, pts[v], (pts[v],)) for v in t.uncovered]
    return tiles


def default_driver(g: MarkedGroup) -> list[int]:
    """Candidate Følner indices: powers of two."""
    return [2 ** k for k in range(1, 13)]


def build_bratteli_tiling_system(g: MarkedGroup, depth: int, folner_driver=None,
                                 shapes_per_level: int = 1, retry_budget: int = 8) -> BratteliTilingSystem:
    """Bottom-up construction of a depth-``depth`` Bratteli tiling system.

    ``folner_driver`` is a sequence of candidates, each an int n (meaning
    ``folner_set(g, n)``) or a :class:`FiniteSubset` containing the identity.
    Level n takes the first candidates with i(F) <= 2^-n whose disjoint
    tiling by level n-1 shapes uses at most 2^-(n-1)|F| singletons; a
    candidate failing the singleton bound costs one escalation.
    """
    if depth < 1:
        raise PreconditionError("depth must be >= 1")
    cands = list(folner_driver if folner_driver is not None else default_driver(g))
    cache: dict[int, FiniteSubset] = {}

    def candidate(k):
        if k not in cache:
            c = cands[k]
            cache[k] = folner_set(g, c) if isinstance(c, int) else c
        return cache[k]

    levels: list[dict[str, TileShape]] = []
    partitions: dict[str, list[LevelTile]] = {}
    start = 0
    for n in range(1, depth + 1):
        thr = Fraction(1, 2 ** n)
        chosen: dict[str, TileShape] = {}
        escalations = 0
        failure = f"no candidate with i(F) <= 1/{2 ** n}"
        k = start
        while k < len(cands) and len(chosen) < shapes_per_level:
            F = candidate(k)
            k += 1
            if g.identity not in F or isoperimetric(F) > thr:
                continue
            sid = f"F{n}.{len(chosen) + 1}"
            if n >= 2:
                tiles = tile_shape_by(g, F, list(levels[-1].values()), singleton_id(n - 1))
                singles = sum(1 for t in tiles if t.shape_id == singleton_id(n - 1))
                if singles * 2 ** (n - 1) > len(F):
                    escalations += 1
                    failure = (f"singleton bound K(E{n - 1}, F) = {singles} > |F|/2^{n - 1} "
                               f"for |F| = {len(F)}")
                    if escalations > retry_budget:
                        break
                    continue
                partitions[sid] = tiles
            chosen[sid] = TileShape(sid, F, cands[k - 1] if isinstance(cands[k - 1], int) else None)
        if not chosen:
            raise BratteliError(f"level {n}: {failure}")
        start = k
        e = singleton_id(n)
        chosen[e] = TileShape(e, FiniteSubset(g, [g.identity]))
        if n >= 2:
            partitions[e] = [LevelTile(singleton_id(n - 1), g.identity, (g.identity,))]
        levels.append(chosen)
    return BratteliTilingSystem(g, levels, partitions)


# -- iterated tilings and empirical harmonic weights ------------------------------

@dataclass
class LevelCover:
    """Tiles of one level placed in a host: ``(shape_id, vertex tuple in shape order)``."""

    level: int
    tiles: list[tuple[str, tuple[int, ...]]]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for sid, _ in self.tiles:
            out[sid] = out.get(sid, 0) + 1
        return out


def refine(system: BratteliTilingSystem, cover: LevelCover) -> LevelCover:
    """Replace every level-l tile by its partition into level l-1 tiles."""
    if cover.level <= 1:
        raise PreconditionError("cannot refine below level 1")
    out = []
    for sid, verts in cover.tiles:
        B = system.shape(sid).shape
        for t in system.partitions[sid]:
            out.append((t.shape_id, tuple(verts[B.index(e)] for e in t.elements)))
    return LevelCover(cover.level - 1, out)


def cover_at(system: BratteliTilingSystem, cover: LevelCover, level: int) -> LevelCover:
    while cover.level > level:
        cover = refine(system, cover)
    return cover


@dataclass
class HarmonicStage:
    H: FiniteSubset
    level: int                     # deepest level whose checked tiling of H succeeded
    top: LevelCover | None
    weights: dict[str, Fraction]   # m_k(A) for every A in Z_1..Z_level
    host: LabeledGraph

    def cover(self, system: BratteliTilingSystem, level: int) -> LevelCover:
        return cover_at(system, self.top, level)


@dataclass
class HarmonicResult:
    stages: list[HarmonicStage]
    weights: dict[str, Fraction]

    @property
    def failures(self) -> list[int]:
        return [k for k, st in enumerate(self.stages) if st.top is None]


def tile_host_at_level(system: BratteliTilingSystem, host: LabeledGraph, level: int) -> LevelCover:
    shapes = [s for s in system.level(level).values() if not s.is_singleton]
    t = quasitile(host, shapes, disjoint=True)
    tiles = [(p.shape_id, p.covered) for p in t.placements]
    tiles += [(singleton_id(level), (v,)) for v in t.uncovered]
    return LevelCover(level, tiles)


def empirical_harmonic(system: BratteliTilingSystem, H_list: Sequence) -> HarmonicResult:
    """Frequencies m_k(A) = c_k(A)/|H_k| from iterated tilings of each H_k.

    Each H_k is tiled at the deepest level j whose disjoint tiling leaves
    fewer than 2^-j |H_k| singletons, then refined level by level through
    the system's partitions. The returned ``weights`` come from the last
    H_k and must cover every level.
    """
    g = system.group
    stages = []
    for H in H_list:
        if isinstance(H, int):
            H = folner_set(g, H)
        host = induced_labeled_graph(g, H)
        top = None
        for j in range(system.depth, 0, -1):
            cov = tile_host_at_level(system, host, j)
            singles = sum(1 for sid, _ in cov.tiles if sid == singleton_id(j))
            if singles * 2 ** j < len(H) or singles == 0:
                top = cov
                break
        weights: dict[str, Fraction] = {}
        level = 0
        if top is not None:
            level = top.level
            cov = top
            while True:
                counts = cov.counts()
                for sid in system.level(cov.level):
                    weights[sid] = Fraction(counts.get(sid, 0) * system.shape(sid).size, len(H))
                if cov.level == 1:
                    break
                cov = refine(system, cov)
        stages.append(HarmonicStage(H, level, top, weights, host))
    if not stages:
        raise PreconditionError("empty H list")
    last = stages[-1]
    if last.level < system.depth:
        raise PreconditionError(
            f"largest H (|H| = {len(last.H)}) only tiles up to level {last.level} of {system.depth}")
    return HarmonicResult(stages, dict(last.weights))
