"""Level maps into the ultramatricial tower and sofic representations.

Matrices use the row convention: the row of a basis vector e_x holds the
coefficients of its image, so right multiplication by ``a`` sends row x to
``Σ a_γ e_{xγ}``. With this convention products of level matrices match
products in the group ring (``M(a) M(b) = M(ab)`` away from boundaries).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import BoundViolation, PreconditionError
from .exactla import SparseMatrix, SparseMatrixBuilder
from .fields import Field
from .folner import boundary_depths, folner_set
from .groupring import GroupRingElement
from .groups import (GroupElement, LabeledGraph, MarkedGroup, ball_words,
                     cayley_graph, induced_labeled_graph, quotient)
from .rank import ConvergenceReport, RankEstimate, folner_rank_kernel
from .tiling import (BratteliTilingSystem, LevelCover, TileShape, as_fraction,
                     cover_at, quasitile, singleton_id, tile_host_at_level)

ULTRAMATRICIAL = "ultramatricial"
SOFIC = "sofic"


# -- level elements ------------------------------------------------------------

@dataclass(frozen=True)
class LevelElement:
    """An element of ⊕_{A in Z_i} Mat_{|A|}(K)."""

    level: int
    blocks: dict[str, SparseMatrix]
    field: Field

    def _zip(self, other: LevelElement, op) -> LevelElement:
        if self.level != other.level or self.blocks.keys() != other.blocks.keys():
            raise PreconditionError("level elements live on different levels")
        return LevelElement(self.level, {k: op(v, other.blocks[k]) for k, v in self.blocks.items()},
                            self.field)

    def __add__(self, other):
        return self._zip(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._zip(other, lambda x, y: x - y)

    def __mul__(self, other):
        return self._zip(other, lambda x, y: x @ y)

    def star(self) -> LevelElement:
        return LevelElement(self.level, {k: v.H for k, v in self.blocks.items()}, self.field)

    def ranks(self) -> dict[str, int]:
        return {k: v.rank() for k, v in self.blocks.items()}

    def is_zero(self) -> bool:
        return all(v.nnz == 0 for v in self.blocks.values())

    @classmethod
    def identity(cls, system: BratteliTilingSystem, i: int, field: Field) -> LevelElement:
        return cls(i, {k: SparseMatrix.identity(s.size, field) for k, s in system.level(i).items()},
                   field)

    @classmethod
    def zero(cls, system: BratteliTilingSystem, i: int, field: Field) -> LevelElement:
        return cls(i, {k: SparseMatrix.zeros(s.size, s.size, field)
                       for k, s in system.level(i).items()}, field)


def _boundary_sizes(system: BratteliTilingSystem, i: int, r: int) -> dict[str, int]:
    return {k: (len(boundary_depths(s.shape, r)) if r > 0 else 0)
            for k, s in system.level(i).items()}


def pi_level(a: GroupRingElement, system: BratteliTilingSystem, i: int) -> LevelElement:
    """Per shape A: e_x -> Σ a_γ e_{xγ} for x off the r-boundary of A, 0 on it."""
    if a.group != system.group:
        raise PreconditionError("element and tiling system use different groups")
    g = a.group
    r = a.support_radius()
    terms = [(y.nf, c) for y, c in a.terms.items()]
    blocks = {}
    for sid, A in system.level(i).items():
        F = A.shape
        depth = boundary_depths(F, r) if r > 0 else {}
        b = SparseMatrixBuilder(len(F), len(F), a.field)
        for row, x in enumerate(F.elements):
            if x in depth:
                continue
            for ynf, c in terms:
                b.add(row, F.index(GroupElement(g, g.mul_nf(x.nf, ynf))), c)
        blocks[sid] = b.build()
    return LevelElement(i, blocks, a.field)


def phi_embed(x: LevelElement, system: BratteliTilingSystem) -> LevelElement:
    """Diagonal embedding into level i+1: copy each A-block onto every A-tile of B."""
    i = x.level
    if i + 1 > system.depth:
        raise PreconditionError(f"level {i + 1} not built")
    blocks = {}
    for sid, B in system.level(i + 1).items():
        tiles = system.partitions.get(sid)
        if tiles is None:
            raise PreconditionError(f"no realized tiling for shape {sid}")
        b = SparseMatrixBuilder(B.size, B.size, x.field)
        for t in tiles:
            idx = [B.shape.index(e) for e in t.elements]
            for p, q, v in x.blocks[t.shape_id].items():
                b.set(idx[p], idx[q], v)
        blocks[sid] = b.build()
    return LevelElement(i + 1, blocks, x.field)


def _level_weights(system: BratteliTilingSystem, i: int, weights) -> dict[str, Fraction]:
    w = weights if weights is not None else system.weights
    if w is None:
        raise PreconditionError("no weights: run empirical_harmonic or pass weights")
    ids = system.level(i).keys()
    missing = [k for k in ids if k not in w]
    if missing:
        raise PreconditionError(f"weight/level mismatch: no weight for {missing}")
    return {k: as_fraction(w[k]) for k in ids}


def rk_phi(x: LevelElement, weights: dict[str, Fraction]) -> Fraction:
    """Σ_A m(A) rank(x_A)/|A|."""
    if weights.keys() != x.blocks.keys():
        raise PreconditionError("weight/level mismatch")
    ws = {k: as_fraction(v) for k, v in weights.items()}
    if sum(ws.values()) != 1:
        raise PreconditionError(f"weights sum to {sum(ws.values())}, not 1")
    return sum((ws[k] * Fraction(m.rank(), m.shape[0]) for k, m in x.blocks.items()),
               Fraction(0))


def level_rank(x: LevelElement, system: BratteliTilingSystem, weights=None) -> Fraction:
    return rk_phi(x, _level_weights(system, x.level, weights))


# -- defects ---------------------------------------------------------------------

@dataclass
class DefectResult:
    """A measured defect with the bound it is asserted against."""

    name: str
    level: int
    defect: Fraction
    bound: Fraction
    slack_terms: dict[str, Fraction] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.defect <= self.bound


def _assert(res: DefectResult) -> DefectResult:
    if not res.ok:
        raise BoundViolation(f"{res.name} at level {res.level}: defect {res.defect} > bound {res.bound}")
    return res


def cauchy_defect(a: GroupRingElement, system: BratteliTilingSystem, i: int,
                  weights=None) -> DefectResult:
    """rk_phi(phi(pi_i(a)) - pi_{i+1}(a)) at level i+1.

    Two bounds are reported: the closed-form cascade in terms of d = |S|
    and the sharper one with actual boundary sizes,
    Σ_B m(B) min(1, (|∂_r B| + Σ_A K(A,B)|∂_r A|)/|B|). The assertion uses
    the larger of the two.
    """
    m = _level_weights(system, i + 1, weights)
    r = a.support_radius()
    d = system.group.degree
    x = phi_embed(pi_level(a, system, i), system) - pi_level(a, system, i + 1)
    defect = rk_phi(x, m)
    h = Fraction(1, 2 ** (i + 1))
    grow = (d + 1) ** (r + 1)
    coarse = h + sum((m[b] * (h * grow + h + 2 * h * grow)
                      for b, B in system.level(i + 1).items() if not B.is_singleton), Fraction(0))
    bd_lo = _boundary_sizes(system, i, r)
    bd_hi = _boundary_sizes(system, i + 1, r)
    sharp = Fraction(0)
    for b, B in system.level(i + 1).items():
        lost = bd_hi[b] + sum(bd_lo[t.shape_id] for t in system.partitions[b])
        sharp += m[b] * min(Fraction(1), Fraction(lost, B.size))
    return _assert(DefectResult("cauchy", i, defect, max(coarse, sharp),
                                {"coarse": coarse, "sharp": sharp}))


def _boundary_bound(system: BratteliTilingSystem, i: int, radius: int,
                    m: dict[str, Fraction]) -> Fraction:
    bd = _boundary_sizes(system, i, radius)
    return sum((m[k] * Fraction(bd[k], A.size) for k, A in system.level(i).items()), Fraction(0))


def hom_defect(a: GroupRingElement, b: GroupRingElement, system: BratteliTilingSystem, i: int,
               weights=None) -> DefectResult:
    """rk_phi(pi_i(a) pi_i(b) - pi_i(ab)) against Σ_A m(A)|∂_{r+s}A|/|A|."""
    m = _level_weights(system, i, weights)
    x = pi_level(a, system, i) * pi_level(b, system, i) - pi_level(a * b, system, i)
    radius = a.support_radius() + b.support_radius()
    bound = _boundary_bound(system, i, radius, m)
    return _assert(DefectResult("hom", i, rk_phi(x, m), bound, {"boundary": bound}))


def star_defect(a: GroupRingElement, system: BratteliTilingSystem, i: int,
                weights=None) -> DefectResult:
    """rk_phi(pi_i(a*) - pi_i(a)*); a* has the same radius r, so the bound uses ∂_{2r}."""
    m = _level_weights(system, i, weights)
    x = pi_level(a.star(), system, i) - pi_level(a, system, i).star()
    bound = _boundary_bound(system, i, 2 * a.support_radius(), m)
    return _assert(DefectResult("star", i, rk_phi(x, m), bound, {"boundary": bound}))


def sum_defect(a: GroupRingElement, b: GroupRingElement, system: BratteliTilingSystem, i: int,
               weights=None) -> DefectResult:
    m = _level_weights(system, i, weights)
    x = pi_level(a, system, i) + pi_level(b, system, i) - pi_level(a + b, system, i)
    radius = max(a.support_radius(), b.support_radius())
    bound = _boundary_bound(system, i, radius, m)
    return _assert(DefectResult("sum", i, rk_phi(x, m), bound, {"boundary": bound}))


def rank_convergence(a: GroupRingElement, system: BratteliTilingSystem, i_list: Sequence[int],
                     reference: Fraction | None = None, reference_n: int = 16,
                     weights=None) -> ConvergenceReport:
    """rk_phi(pi_i(a)) per level against a Følner kernel reference value.

    Per level the slack is m(E_i) plus the boundary mass Σ_{|A|>1} m(A)|∂_r A|/|A|.
    """
    if reference is None:
        reference = folner_rank_kernel(a, [reference_n]).final.value
    r = a.support_radius()
    ests, gaps, bounds, slack_terms = [], [], [], []
    for i in sorted(i_list):
        m = _level_weights(system, i, weights)
        v = rk_phi(pi_level(a, system, i), m)
        e = m.get(singleton_id(i), Fraction(0))
        bd = _boundary_sizes(system, i, r)
        bmass = sum((m[k] * Fraction(bd[k], A.size)
                     for k, A in system.level(i).items() if not A.is_singleton), Fraction(0))
        ests.append(RankEstimate(v, ULTRAMATRICIAL, i, v.numerator, v.denominator,
                                 bound=e + bmass))
        gaps.append(abs(v - reference))
        bounds.append(e + bmass)
        slack_terms.append({"singleton": e, "boundary": bmass})
    return ConvergenceReport(ests, ULTRAMATRICIAL, gaps=gaps, bounds=bounds,
                             verdict="consistent" if all(g <= b for g, b in zip(gaps, bounds))
                             else "inconsistent",
                             extra={"reference": reference, "slack_terms": slack_terms})


# -- sofic graphs ------------------------------------------------------------------

@lru_cache(maxsize=64)
def _ball_plan(g: MarkedGroup, r: int):
    """BFS tree of B_r(1) as (child, parent, label) triples plus its internal edges."""
    bw = ball_words(g, r)
    elems = [e for e, _ in bw]
    index = {e: k for k, e in enumerate(elems)}
    by_word = {tuple(w): k for k, (_, w) in enumerate(bw)}
    tree = []
    for k, (_, w) in enumerate(bw):
        if w:
            tree.append((k, by_word[tuple(w[:-1])], w[-1]))
    edges = []
    for k, e in enumerate(elems):
        for s in g.generators:
            j = index.get(e * g.gen(s))
            if j is not None:
                edges.append((k, s, j))
    return tuple(elems), index, tuple(tree), tuple(edges)


@dataclass(eq=False)
class SoficGraph:
    """An S-labeled finite graph with cached ball-isomorphism data."""

    graph: LabeledGraph
    group: MarkedGroup
    _maps: dict[int, dict[int, tuple[int, ...]]] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    def ball_maps(self, r: int) -> dict[int, tuple[int, ...]]:
        """v -> image of B_r(1) (in ball order) for every v whose r-ball is a labeled copy."""
        if r in self._maps:
            return self._maps[r]
        elems, _, tree, edges = _ball_plan(self.group, r)
        out = self.graph.out
        size = len(elems)
        maps = {}
        for v in range(self.graph.n):
            img = [0] * size
            img[0] = v
            ok = True
            for child, parent, s in tree:
                t = out[img[parent]].get(s)
                if t is None:
                    ok = False
                    break
                img[child] = t
            if not ok or len(set(img)) != size:
                continue
            if all(out[img[i]].get(s) == img[j] for i, s, j in edges):
                imgset = set(img)
                if sum(1 for u in img for t in out[u].values() if t in imgset) == len(edges):
                    maps[v] = tuple(img)
        self._maps[r] = maps
        return maps

    def good(self, r: int) -> frozenset[int]:
        """V^r: vertices whose r-ball is labeled-isomorphic to B_r(1)."""
        if r <= 0:
            return frozenset(range(self.n))
        return frozenset(self.ball_maps(r))


def sofic_from_quotient(g: MarkedGroup, modulus, r: int | None = None) -> SoficGraph:
    q, proj = quotient(g, modulus)
    G = SoficGraph(cayley_graph(g, q, proj), g)
    if r is not None:
        G.good(r)
    return G


def sofic_from_folner(g: MarkedGroup, n: int, r: int | None = None) -> SoficGraph:
    G = SoficGraph(induced_labeled_graph(g, folner_set(g, n)), g)
    if r is not None:
        G.good(r)
    return G


def psi_map(a: GroupRingElement, G: SoficGraph) -> SparseMatrix:
    """Row v (v in V^r) holds a_γ at the vertex v·γ read off the ball isomorphism."""
    if a.group != G.group:
        raise PreconditionError("element and sofic graph use different groups")
    r = a.support_radius()
    b = SparseMatrixBuilder(G.n, G.n, a.field)
    if r == 0:
        c = a.coeff(a.group.identity)
        if c:
            for v in range(G.n):
                b.add(v, v, c)
        return b.build()
    _, index, _, _ = _ball_plan(G.group, r)
    cols = [(index[y], c) for y, c in a.terms.items()]
    for v, img in G.ball_maps(r).items():
        for k, c in cols:
            b.add(v, img[k], c)
    return b.build()


# -- tilings of sofic graphs ----------------------------------------------------------

@dataclass
class SoficTiling:
    """Level-``level`` tiles placed in G; uncovered vertices belong to no tile."""

    graph: SoficGraph
    system: BratteliTilingSystem
    cover: LevelCover
    checked: bool = True

    @property
    def level(self) -> int:
        return self.cover.level

    def at(self, k: int) -> LevelCover:
        return cover_at(self.system, self.cover, k)

    def frequencies(self, k: int) -> dict[str, Fraction]:
        """Q(A)/|V|: fraction of vertices covered by A-tiles at level k."""
        counts = self.at(k).counts()
        return {sid: Fraction(counts.get(sid, 0) * A.size, self.graph.n)
                for sid, A in self.system.level(k).items()}


def tile_sofic(G: SoficGraph, system: BratteliTilingSystem, level: int | None = None,
               covers: Sequence | None = None, eps=Fraction(1, 10)) -> SoficTiling:
    """Tile G by level shapes.

    Without ``covers`` G is tiled disjointly by the non-singleton shapes of
    ``level`` (default: the deepest level leaving at most a 2^-level fraction
    uncovered). With ``covers`` (harmonic stages carrying an H and its
    iterated tiling), G is ε-quasitiled by translates of the H's; each
    translate keeps only its level tiles lying inside its own greedy claim
    J_α, and everything else is left uncovered.
    """
    if covers is None:
        levels = [level] if level is not None else list(range(system.depth, 0, -1))
        fallback = None
        for lv in levels:
            cov = tile_host_at_level(system, G.graph, lv)
            keep = [(sid, vs) for sid, vs in cov.tiles if sid != singleton_id(lv)]
            left = G.n - sum(len(vs) for _, vs in keep)
            res = SoficTiling(G, system, LevelCover(lv, keep))
            if level is not None or left * 2 ** lv <= G.n:
                return res
            fallback = res
        fallback.checked = False
        return fallback
    lv = level if level is not None else min(st.level for st in covers)
    shapes, plans = [], {}
    for k, st in enumerate(covers):
        sid = f"H{k}"
        shapes.append(TileShape(sid, st.H))
        plans[sid] = (st.H, st.cover(system, lv))
    t = quasitile(G.graph, shapes, eps)
    claimed: set[int] = set()
    keep = []
    for p in t.placements:
        J = {u for u in p.covered if u not in claimed}
        claimed |= J
        H, cov = plans[p.shape_id]
        # cov vertices are H's host indices, which follow H's element order
        for sid, vs in cov.tiles:
            if sid == singleton_id(lv):
                continue
            img = tuple(p.covered[u] for u in vs)
            if all(u in J for u in img):
                keep.append((sid, img))
    return SoficTiling(G, system, LevelCover(lv, keep))


def tau_map(x: LevelElement, tiling: SoficTiling) -> SparseMatrix:
    """Place x's A-blocks on every level-k A-tile of G; zero elsewhere."""
    cover = tiling.at(x.level)
    b = SparseMatrixBuilder(tiling.graph.n, tiling.graph.n, x.field)
    for sid, vs in cover.tiles:
        for p, q, v in x.blocks[sid].items():
            b.set(vs[p], vs[q], v)
    return b.build()


def tau_rank_convergence(x: LevelElement, tilings: Sequence[SoficTiling],
                         weights=None) -> ConvergenceReport:
    """Per graph: |rank(tau(x))/|V| - rk_phi(x)| against Σ_A |Q(A)/|V| - m(A)|."""
    if not tilings:
        raise PreconditionError("no tilings given")
    system = tilings[0].system
    m = _level_weights(system, x.level, weights)
    target = rk_phi(x, m)
    ests, gaps, devs = [], [], []
    for t in tilings:
        M = tau_map(x, t)
        rk = M.rank()
        v = Fraction(rk, t.graph.n)
        q = t.frequencies(x.level)
        dev = sum((abs(q[k] - m[k]) for k in m), Fraction(0))
        gap = abs(v - target)
        if gap > dev:
            # |Σ (Q - m) rank/|A|| <= Σ |Q - m|; failing it means the tiling is broken
            raise BoundViolation(f"tau rank gap {gap} exceeds frequency deviation {dev}")
        ests.append(RankEstimate(v, SOFIC, t.graph.n, rk, t.graph.n, bound=dev))
        gaps.append(gap)
        devs.append(dev)
    return ConvergenceReport(ests, SOFIC, gaps=gaps, bounds=devs, verdict="consistent",
                             extra={"target": target})


@dataclass
class IdentityDefect:
    agree: int
    n: int
    rank_diff: int

    @property
    def agree_fraction(self) -> Fraction:
        return Fraction(self.agree, self.n)

    @property
    def rank_defect(self) -> Fraction:
        return Fraction(self.rank_diff, self.n)


def first_identity_defect(a: GroupRingElement, G: SoficGraph, tiling: SoficTiling,
                          k: int | None = None) -> IdentityDefect:
    """Compare psi(a) with its tiling-restricted variant tau(pi_k(a)) row by row."""
    k = tiling.level if k is None else k
    psi = psi_map(a, G)
    psi2 = tau_map(pi_level(a, tiling.system, k), tiling)
    agree = sum(1 for v in range(G.n) if psi.row(v) == psi2.row(v))
    res = IdentityDefect(agree, G.n, (psi - psi2).rank())
    if res.rank_defect > 1 - res.agree_fraction:
        raise BoundViolation(f"rank defect {res.rank_defect} > 1 - {res.agree_fraction}")
    return res
