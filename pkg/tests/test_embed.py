import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import el
from foelner_rank import QQ, QQi, make_group
from foelner_rank.errors import PreconditionError
from foelner_rank.exactla import SparseMatrix, SparseMatrixBuilder
from foelner_rank.embed import (LevelElement, cauchy_defect, first_identity_defect,
                                hom_defect, phi_embed, pi_level, psi_map, rank_convergence,
                                rk_phi, sofic_from_folner, sofic_from_quotient, star_defect,
                                sum_defect, tau_map, tau_rank_convergence, tile_sofic)
from foelner_rank.folner import boundary, folner_set, interior
from foelner_rank.tiling import build_bratteli_tiling_system, empirical_harmonic, singleton_id


def system(spec, depth, driver=None, H=None):
    g = make_group(spec)
    s = build_bratteli_tiling_system(g, depth, folner_driver=driver)
    if H is None:
        top = max(s.level(depth).values(), key=lambda A: A.size).shape
        H = [top]
    return s.with_weights(empirical_harmonic(s, H).weights)


@pytest.fixture(scope="module")
def Z1sys():
    return system("Z^1", 3, H=[16, 32, 64])


@pytest.fixture(scope="module")
def Z1gap():
    # [0,9) = two copies of [0,4) plus one singleton
    return system("Z^1", 2, driver=[4, 9], H=[9, 18])


@pytest.fixture(scope="module")
def ZCsys():
    return system("Z^1 x C2", 3, H=[16, 32])


@pytest.fixture(scope="module")
def Z2sys():
    return system("Z^2", 2, H=[16, 32])


def random_level_element(s, i, rng, field=QQ):
    blocks = {}
    for sid, A in s.level(i).items():
        b = SparseMatrixBuilder(A.size, A.size, field)
        for _ in range(rng.randint(0, 2 * A.size)):
            b.add(rng.randrange(A.size), rng.randrange(A.size), rng.randint(-2, 2))
        blocks[sid] = b.build()
    return LevelElement(i, blocks, field)


def test_pi_level_interval_example(Z1):
    s = system("Z^1", 1, driver=[4])
    x = pi_level(el(Z1, "g0 - 1"), s, 1)
    expected = SparseMatrix.from_dense([[0, 0, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1], [0, 0, 0, 0]])
    assert x.blocks["F1.1"] == expected and expected.rank() == 2
    assert x.blocks["E1"].nnz == 0


def test_pi_level_trivial_elements(Z1, Z1sys):
    one = pi_level(el(Z1, "1"), Z1sys, 2)
    assert one == LevelElement.identity(Z1sys, 2, QQ)
    assert pi_level(el(Z1, "0"), Z1sys, 2).is_zero()
    three = pi_level(el(Z1, "3"), Z1sys, 1)
    assert three.blocks["E1"].to_dense() == [[3]]


def test_phi_embed_identity_and_zero(Z1sys, Z1gap):
    for s in (Z1sys, Z1gap):
        for i in range(1, s.depth):
            assert phi_embed(LevelElement.identity(s, i, QQ), s) == LevelElement.identity(s, i + 1, QQ)
            assert phi_embed(LevelElement.zero(s, i, QQ), s).is_zero()


@pytest.mark.parametrize("seed", range(5))
def test_phi_embed_rank_additivity(Z1gap, Z2sys, seed):
    rng = random.Random(seed)
    for s in (Z1gap, Z2sys):
        x = random_level_element(s, 1, rng)
        y = phi_embed(x, s)
        ranks = x.ranks()
        for b in s.level(2):
            expect = sum(k * ranks[a] for (a, bb), k in s.K.items() if bb == b)
            assert y.blocks[b].rank() == expect


def test_rk_phi_examples():
    x = LevelElement(1, {"A": SparseMatrix.from_dense([[1, 0], [0, 0]])}, QQ)
    assert rk_phi(x, {"A": Fraction(1)}) == Fraction(1, 2)
    assert rk_phi(LevelElement(1, {"A": SparseMatrix.identity(2)}, QQ), {"A": 1}) == 1
    y = LevelElement(1, {"A": SparseMatrix.from_dense([[1, 0], [0, 0]]),
                         "B": SparseMatrix.from_dense([[1, 0, 0, 0], [0, 1, 0, 0],
                                                       [0, 0, 0, 0], [0, 0, 0, 0]])}, QQ)
    assert rk_phi(y, {"A": Fraction(1, 3), "B": Fraction(2, 3)}) == Fraction(1, 2)
    with pytest.raises(PreconditionError):
        rk_phi(y, {"A": Fraction(1, 3)})
    with pytest.raises(PreconditionError):
        rk_phi(y, {"A": Fraction(1, 3), "B": Fraction(1, 3)})


@pytest.mark.parametrize("seed", range(6))
def test_rk_phi_preserved_by_embedding(Z1sys, Z1gap, Z2sys, seed):
    rng = random.Random(seed)
    for s in (Z1sys, Z1gap, Z2sys):
        for i in range(1, s.depth):
            x = random_level_element(s, i, rng)
            lo = {k: s.weights[k] for k in s.level(i)}
            hi = {k: s.weights[k] for k in s.level(i + 1)}
            assert rk_phi(x, lo) == rk_phi(phi_embed(x, s), hi)


@pytest.mark.parametrize("seed", range(6))
def test_rank_axioms_at_fixed_level(Z1gap, seed):
    rng = random.Random(seed)
    s = Z1gap
    m = {k: s.weights[k] for k in s.level(2)}
    x, y = random_level_element(s, 2, rng), random_level_element(s, 2, rng)
    assert rk_phi(x + y, m) <= rk_phi(x, m) + rk_phi(y, m)
    assert rk_phi(x * y, m) <= min(rk_phi(x, m), rk_phi(y, m))
    # orthogonal diagonal idempotents
    e_blocks, f_blocks = {}, {}
    for sid, A in s.level(2).items():
        picks = [rng.randrange(3) for _ in range(A.size)]
        e_blocks[sid] = SparseMatrix(A.size, A.size, QQ, {(j, j): 1 for j in range(A.size) if picks[j] == 1})
        f_blocks[sid] = SparseMatrix(A.size, A.size, QQ, {(j, j): 1 for j in range(A.size) if picks[j] == 2})
    e, f = LevelElement(2, e_blocks, QQ), LevelElement(2, f_blocks, QQ)
    assert (e * f).is_zero() and (e * e) == e
    assert rk_phi(e + f, m) == rk_phi(e, m) + rk_phi(f, m)


ELEMS = ["g0 - 1", "g0 + g0^-1 - 2", "1"]


def test_cauchy_defects(Z1, Z1sys, Z1gap):
    assert cauchy_defect(el(Z1, "0"), Z1sys, 1).defect == 0
    assert cauchy_defect(el(Z1, "1"), Z1sys, 1).defect == 0
    for text in ELEMS:
        a = el(Z1, text)
        ds = [cauchy_defect(a, Z1sys, i) for i in (1, 2)]
        for d in ds:
            assert d.defect <= d.slack_terms["sharp"] <= d.bound or d.defect <= d.bound
        assert ds[1].defect <= ds[0].defect
        assert cauchy_defect(a, Z1gap, 1).ok
    assert [cauchy_defect(el(Z1, "g0 - 1"), Z1sys, i).defect for i in (1, 2)] == \
        [Fraction(1, 4), Fraction(1, 8)]


def test_hom_defects(Z1, Z1sys):
    one = el(Z1, "1")
    assert hom_defect(one, one, Z1sys, 2).defect == 0
    assert hom_defect(el(Z1, "g0 - 1"), el(Z1, "0"), Z1sys, 2).defect == 0
    for i in (1, 2, 3):
        d = hom_defect(el(Z1, "g0 - 1"), el(Z1, "g0 - 1"), Z1sys, i)
        A = Z1sys.shape(f"F{i}.1")
        assert d.bound == Fraction(len(boundary(A.shape, 2)), A.size) <= Fraction(4, A.size)
        assert d.ok


def test_star_and_sum_defects_gaussian():
    s = system("Z^2", 1, H=[8, 16])
    g = s.group
    rng = random.Random(1)
    for _ in range(5):
        terms = []
        for w in ("", "*g0", "*g1^-1", "*g0*g1"):
            re_, im = rng.randint(-2, 2), rng.randint(-2, 2)
            terms.append(f"({re_} {'-' if im < 0 else '+'} {abs(im)} i){w}")
        a = el(g, " + ".join(terms), QQi)
        assert star_defect(a, s, 1).ok
        b = el(g, "(1 + 1 i)*g0^-1 + 2", QQi)
        assert sum_defect(a, b, s, 1).ok
        assert hom_defect(a, b, s, 1).ok


def test_rank_convergence(ZC, ZCsys):
    r = rank_convergence(el(ZC, "1 + t"), ZCsys, [1, 2, 3])
    assert r.extra["reference"] == Fraction(1, 2)
    assert all(g <= b for g, b in zip(r.gaps, r.bounds))
    assert r.gaps == sorted(r.gaps, reverse=True)
    assert r.bounds[-1] == Fraction(1, 8) and r.verdict == "consistent"
    ones = rank_convergence(el(ZC, "1"), ZCsys, [1, 2, 3])
    assert ones.values == [1, 1, 1]
    zeros = rank_convergence(el(ZC, "0"), ZCsys, [1, 2, 3])
    assert zeros.values == [0, 0, 0]


def test_missing_weights(Z1):
    s = build_bratteli_tiling_system(Z1, 2)
    with pytest.raises(PreconditionError):
        cauchy_defect(el(Z1, "g0"), s, 1)


# -- sofic side ----------------------------------------------------------------------

def test_good_vertices(Z1, Z2):
    assert sofic_from_quotient(Z1, 10).good(2) == frozenset(range(10))
    G = sofic_from_folner(Z1, 10)
    assert sorted(G.good(1)) == list(range(1, 9))
    assert G.good(0) == frozenset(range(10))
    assert sofic_from_quotient(Z2, (6, 6)).good(2) == frozenset(range(36))
    assert sofic_from_quotient(Z2, (4, 4)).good(2) == frozenset()


@pytest.mark.parametrize("spec,n", [("Z^2", 7), ("H3", 3), ("Z^1 x C2", 6)])
def test_good_vertices_nested_and_contain_interior(spec, n):
    g = make_group(spec)
    G = sofic_from_folner(g, n)
    F = folner_set(g, n)
    for r in (1, 2):
        inner = {G.graph.vertex_of(x) for x in interior(F, r).elements}
        assert inner <= G.good(r)
        assert G.good(r + 1) <= G.good(r)


@pytest.mark.parametrize("m", [5, 12])
def test_psi_map_examples(Z1, m):
    G = sofic_from_quotient(Z1, m)
    assert psi_map(el(Z1, "g0 - 1"), G).rank() == m - 1
    assert psi_map(el(Z1, "1"), G) == SparseMatrix.identity(m)
    assert psi_map(el(Z1, "0"), G).nnz == 0


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6))
def test_psi_approximate_homomorphism(seed):
    g = make_group("Z^2")
    rng = random.Random(seed)
    words = ["g0^0", "g0", "g1", "g0^-1", "g0*g1", "g1^2"]
    mk = lambda: el(g, " + ".join(f"({rng.randint(-2, 2)})*{rng.choice(words)}" for _ in range(3)))
    a, b = mk(), mk()
    G = sofic_from_folner(g, 8)
    r, s = a.support_radius(), b.support_radius()
    lhs = (psi_map(a, G) @ psi_map(b, G) - psi_map(a * b, G)).rank()
    assert lhs <= G.n - len(G.good(r + s))


def test_tau_map_basics(Z1):
    s = system("Z^1", 1, driver=[10], H=[10, 20])
    G = sofic_from_quotient(Z1, 105)
    T = tile_sofic(G, s)
    ident = tau_map(LevelElement.identity(s, 1, QQ), T)
    tiled = {v for _, vs in T.cover.tiles for v in vs}
    assert ident == SparseMatrix(G.n, G.n, QQ, {(v, v): 1 for v in tiled}) and len(tiled) == 100
    assert tau_map(LevelElement.zero(s, 1, QQ), T).nnz == 0
    x = pi_level(el(Z1, "g0 - 1"), s, 1)
    counts = T.at(1).counts()
    assert tau_map(x, T).rank() == sum(counts.get(k, 0) * r for k, r in x.ranks().items())
    rep = tau_rank_convergence(LevelElement.identity(s, 1, QQ), [T])
    assert rep.gaps == [Fraction(5, 105)] == rep.bounds


def test_tau_rank_convergence_exact_cycles(Z1):
    s = system("Z^1", 1, driver=[10], H=[10, 20])
    Ts = [tile_sofic(sofic_from_quotient(Z1, m), s) for m in (50, 100, 200)]
    rep = tau_rank_convergence(pi_level(el(Z1, "g0 - 1"), s, 1), Ts)
    assert rep.gaps == [0, 0, 0] and rep.extra["target"] == Fraction(8, 10)
    assert tau_rank_convergence(LevelElement.zero(s, 1, QQ), Ts).values == [0, 0, 0]


def test_first_identity(Z1):
    s10 = system("Z^1", 1, driver=[10], H=[10])
    G = sofic_from_quotient(Z1, 100)
    T = tile_sofic(G, s10)
    z = first_identity_defect(el(Z1, "0"), G, T)
    assert (z.agree_fraction, z.rank_defect) == (1, 0)
    d = first_identity_defect(el(Z1, "g0 - 1"), G, T)
    assert d.agree_fraction >= Fraction(4, 5) and d.rank_defect <= 1 - d.agree_fraction
    fracs = []
    for k in (4, 5, 10, 20):
        s = system("Z^1", 1, driver=[k], H=[k])
        fracs.append(first_identity_defect(el(Z1, "g0 - 1"), G, tile_sofic(G, s)).agree_fraction)
    assert fracs == sorted(fracs) and fracs[0] < fracs[-1]


def test_cover_based_sofic_tiling(Z2):
    s = build_bratteli_tiling_system(Z2, 1)
    h = empirical_harmonic(s, [16])
    s = s.with_weights(h.weights)
    G = sofic_from_quotient(Z2, (20, 20))
    T = tile_sofic(G, s, covers=h.stages, eps=Fraction(1, 5))
    assert T.level == 1 and len(T.cover.tiles) >= 4
    used = [v for _, vs in T.cover.tiles for v in vs]
    assert len(used) == len(set(used))
    a = el(Z2, "g0 + g1 - 2")
    d = first_identity_defect(a, G, T)
    assert d.rank_defect <= 1 - d.agree_fraction
    rep = tau_rank_convergence(pi_level(a, s, 1), [T])
    assert rep.gaps[0] <= rep.bounds[0]


def test_folner_sofic_sequence_deviation_shrinks(Z2):
    s = system("Z^2", 1, H=[8, 16])
    Ts = [tile_sofic(sofic_from_folner(Z2, n), s, level=1) for n in (10, 20, 40)]
    rep = tau_rank_convergence(pi_level(el(Z2, "g0 - 1"), s, 1), Ts)
    assert rep.bounds == sorted(rep.bounds, reverse=True)
    assert all(g <= b for g, b in zip(rep.gaps, rep.bounds))
