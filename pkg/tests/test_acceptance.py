"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible without ``-s``)
and asserts its runtime budget next to the numerical checks.
"""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from conftest import el
from foelner_rank import QQ, QQi, make_group
from foelner_rank import cli
from foelner_rank.embed import (cauchy_defect, first_identity_defect, hom_defect, pi_level,
                                rank_convergence, rk_phi, sofic_from_quotient,
                                tau_rank_convergence, tile_sofic)
from foelner_rank.exactla import SparseMatrixBuilder, rank
from foelner_rank.fields import GaussianRational
from foelner_rank.folner import boundary, folner_set, isoperimetric
from foelner_rank.groupring import GroupRingMatrix
from foelner_rank.groups import induced_labeled_graph
from foelner_rank.rank import (folner_rank_image, folner_rank_kernel, image_estimate,
                               matrix_rank_estimate, quotient_rank)
from foelner_rank.tiling import (box_shapes, build_bratteli_tiling_system,
                                 check_epsilon_cover, check_epsilon_disjoint,
                                 empirical_harmonic, quasitile, singleton_id, validate_bratteli)


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(number, title, budget):
        t0 = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            dt = time.perf_counter() - t0
            ok = ok and dt < budget
            with capsys.disabled():
                print(f"\n[{'PASS' if ok else 'FAIL'}] AC{number} {title} ({dt:.2f}s / {budget}s)")
        assert dt < budget, f"runtime {dt:.2f}s exceeds {budget}s"
    return run


def boundary_mass(system, i, radius, m):
    """Σ m(A)|∂_r A|/|A| recomputed straight from the shapes."""
    out = Fraction(0)
    for k, A in system.level(i).items():
        if A.size > 1:
            out += m[k] * Fraction(len(boundary(A.shape, radius)) if radius else 0, A.size)
    return out


def level_weights(system, i):
    return {k: system.weights[k] for k in system.level(i)}


def test_ac1_zero_divisor_rank(criterion, ZC):
    with criterion(1, "zero-divisor rank 1+t is exactly 1/2", 5):
        a = el(ZC, "1 + t")
        assert folner_rank_kernel(a, [4, 8, 16, 32]).values == [Fraction(1, 2)] * 4
        for m in (5, 10, 20):
            assert quotient_rank(a, m).value == Fraction(1, 2)


def test_ac2_lueck_agreement(criterion, Z1):
    with criterion(2, "Lueck agreement for g0-1 at n = m = 40", 5):
        a = el(Z1, "g0 - 1")
        f = folner_rank_image(a, [40], s=1).final.value
        q = quotient_rank(a, 40).value
        assert (f, q) == (Fraction(38, 40), Fraction(39, 40))
        assert abs(f - q) == Fraction(1, 40) <= Fraction(5, 100)
        assert abs(1 - f) <= Fraction(5, 100) and abs(1 - q) <= Fraction(5, 100)


def test_ac3_matrix_rank(criterion, ZC):
    with criterion(3, "diag(g0-1, 1+t) converges to 3/2", 30):
        a, b = el(ZC, "g0 - 1"), el(ZC, "1 + t")
        D = GroupRingMatrix.diag([a, b])
        est = matrix_rank_estimate(D, [32]).final
        assert abs(est.value - Fraction(3, 2)) <= Fraction(1, 10)
        # block additivity: the diagonal estimate is the sum of the scalar ones
        F = folner_set(ZC, 32)
        s = D.support_radius()
        assert est.value == image_estimate(a, F, s).value + image_estimate(b, F, s).value


def test_ac4_properness(criterion):
    with criterion(4, "rank(AA*+BB*) >= max(rank A, rank B) on 200 Q(i) pairs", 10):
        rng = random.Random(4)

        def rand(rows, cols):
            bld = SparseMatrixBuilder(rows, cols, QQi)
            for i in range(rows):
                for j in range(cols):
                    if rng.random() < 0.5:
                        bld.add(i, j, GaussianRational(Fraction(rng.randint(-3, 3), rng.randint(1, 3)),
                                                       Fraction(rng.randint(-3, 3))))
            return bld.build()

        for _ in range(200):
            n = rng.randint(1, 6)
            A, B = rand(n, rng.randint(1, 6)), rand(n, rng.randint(1, 6))
            assert rank(A @ A.H + B @ B.H) >= max(rank(A), rank(B))


def test_ac5_quasitiling(criterion, Z2):
    with criterion(5, "quasitiling of Z^2 boxes, eps = 0.2", 30):
        eps = Fraction(1, 5)
        shapes = box_shapes(Z2, [8, 4])
        for n in (20, 40):
            host = induced_labeled_graph(Z2, folner_set(Z2, n))
            t = quasitile(host, shapes, eps)
            assert check_epsilon_disjoint(t.placements, eps)[0]
            holds, ratio = check_epsilon_cover(host, t.placements, eps)
            assert holds and ratio >= Fraction(4, 5)
        for n in (8, 16, 24):
            host = induced_labeled_graph(Z2, folner_set(Z2, n))
            assert quasitile(host, shapes, eps).cover_ratio == 1


def test_ac6_bratteli_invariants(criterion, Z1, Z2):
    with criterion(6, "Bratteli tiling-system invariants", 60):
        s = build_bratteli_tiling_system(Z1, 3)
        for n in range(1, 4):
            for k, A in s.level(n).items():
                if A.size > 1:
                    assert isoperimetric(A.shape) <= Fraction(1, 2 ** n)
        for n in range(2, 4):
            e_prev = singleton_id(n - 1)
            for (a, b), k in s.K.items():
                if a == e_prev and s.shape(b).size > 1:
                    assert k <= Fraction(s.shape(b).size, 2 ** (n - 1))
        for n in range(2, 4):
            for b, tiles in s.partitions.items():
                if s.level_of(b) == n:
                    assert sum(len(t.elements) for t in tiles) == s.shape(b).size
        assert all(s.check_invariants().values())
        h = empirical_harmonic(s, [16, 32, 64])
        rep = validate_bratteli(s.with_weights(h.weights).diagram())
        assert rep.sizes_ok and rep.max_harmonic_residual == 0

        s2 = build_bratteli_tiling_system(Z2, 2)
        h2 = empirical_harmonic(s2, [16, 32, 48])
        rep2 = validate_bratteli(s2.with_weights(h2.weights).diagram())
        assert rep2.sizes_ok and rep2.max_harmonic_residual <= Fraction(5, 100)


def test_ac7_cauchy_and_hom_defects(criterion, Z1):
    with criterion(7, "Cauchy and homomorphism defects within their bounds", 60):
        s = build_bratteli_tiling_system(Z1, 3)
        s = s.with_weights(empirical_harmonic(s, [16, 32, 64]).weights)
        elems = [el(Z1, t) for t in ("g0 - 1", "g0 + g0^-1 - 2", "1")]
        for a in elems:
            r = a.support_radius()
            defects = []
            for i in (1, 2):
                d = cauchy_defect(a, s, i)
                m = level_weights(s, i + 1)
                sharp = Fraction(0)
                for b, B in s.level(i + 1).items():
                    lost = len(boundary(B.shape, r)) if r else 0
                    for t in s.partitions[b]:
                        A = s.shape(t.shape_id)
                        lost += len(boundary(A.shape, r)) if r and A.size > 1 else 0
                    sharp += m[b] * min(Fraction(1), Fraction(lost, B.size))
                assert d.defect <= sharp
                defects.append(d.defect)
            assert defects[1] <= defects[0]
            if a != elems[2]:
                assert defects[1] < defects[0]
            for b in elems:
                for i in (1, 2, 3):
                    d = hom_defect(a, b, s, i)
                    bound = boundary_mass(s, i, r + b.support_radius(), level_weights(s, i))
                    assert d.bound == bound and d.defect <= bound


def test_ac8_level_rank_convergence(criterion, ZC):
    with criterion(8, "rk_phi(pi_i(1+t)) approaches 1/2", 60):
        s = build_bratteli_tiling_system(ZC, 3)
        s = s.with_weights(empirical_harmonic(s, [16, 32]).weights)
        a = el(ZC, "1 + t")
        rep = rank_convergence(a, s, [1, 2, 3], reference=Fraction(1, 2))
        for i, gap in zip((1, 2, 3), rep.gaps):
            m = level_weights(s, i)
            v = rk_phi(pi_level(a, s, i), m)
            slack = m.get(singleton_id(i), 0) + boundary_mass(s, i, a.support_radius(), m)
            assert abs(v - Fraction(1, 2)) == gap <= slack
        assert rep.gaps[-1] <= Fraction(1, 10)


def test_ac9_sofic_identities(criterion, Z1):
    with criterion(9, "sofic first identity and tau convergence on cycles", 60):
        s = build_bratteli_tiling_system(Z1, 1, folner_driver=[10])
        s = s.with_weights(empirical_harmonic(s, [10, 20]).weights)
        a = el(Z1, "g0 - 1")
        tilings = []
        for m in (50, 100, 200):
            G = sofic_from_quotient(Z1, m)
            T = tile_sofic(G, s)
            tilings.append(T)
            d = first_identity_defect(a, G, T)
            assert d.rank_defect <= 1 - d.agree_fraction
            assert d.agree_fraction >= Fraction(4, 5)
        rep = tau_rank_convergence(pi_level(a, s, 1), tilings)
        assert all(g <= b for g, b in zip(rep.gaps, rep.bounds))


ACCEPTANCE_COMMANDS = [
    ["rank", "--group", "Z^1 x C2", "--elem", "1 + t", "--n", "4,8,16,32"],
    ["luck", "--group", "Z^1", "--elem", "g0 - 1", "--m", "40", "--n", "40"],
    ["rank", "--group", "Z^1 x C2", "--matrix", "g0 - 1, 0; 0, 1 + t", "--n", "32"],
    ["quasitile", "--group", "Z^2", "--n", "40", "--shapes", "8,4", "--eps", "0.2", "--seed", "7"],
    ["bratteli", "--group", "Z^2", "--depth", "2", "--seed", "7"],
    ["embed-check", "--group", "Z^1", "--elem", "g0 - 1", "--depth", "3", "--seed", "7"],
    ["embed-check", "--group", "Z^1", "--elem", "g0 - 1", "--depth", "1", "--m", "50,100,200"],
]


def test_ac10_determinism(criterion):
    with criterion(10, "byte-identical JSON on rerun with the same seed", 120):
        for argv in ACCEPTANCE_COMMANDS:
            first = cli.run(argv)
            assert first[0] == 0, first[2]
            assert cli.run(argv) == first


def test_ac10_determinism_across_processes():
    import os
    import subprocess
    import sys
    argv = [sys.executable, "-m", "foelner_rank", *ACCEPTANCE_COMMANDS[4]]
    outs = set()
    for seed in ("1", "12345"):
        env = {**os.environ, "PYTHONHASHSEED": seed}
        outs.add(subprocess.run(argv, capture_output=True, env=env, check=True).stdout)
    assert len(outs) == 1
