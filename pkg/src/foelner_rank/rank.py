"""Rank estimators for elements and matrices over amenable group algebras.

Three estimators of the von Neumann rank of right multiplication by an
element (or a k x k matrix) over KΓ:

* ``folner_kernel``: 1 - dim{z on F_n : z a = 0} / |F_n|
* ``folner_image``:  dim(W_n a) / |F_n| with W_n spanned by F_n minus its s-boundary
* ``quotient``:      rank of the convolution operator on K[Γ/N]^k over |Γ/N|

All values are exact rationals. The per-stage bounds reported with the
Følner estimators are heuristic brackets; no convergence rate is known.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import PreconditionError
from .exactla import SparseMatrix, SparseMatrixBuilder
from .folner import boundary_depths, folner_set
from .groupring import GroupRingElement, GroupRingMatrix, as_matrix
from .groups import FiniteSubset, GroupElement, MarkedGroup, quotient, quotient_diameter

FOLNER_KERNEL = "folner_kernel"
FOLNER_IMAGE = "folner_image"
QUOTIENT = "quotient"


@dataclass(frozen=True)
class RankEstimate:
    """One stage of an estimator.

    ``numerator``/``denominator`` are the unreduced dimensions behind
    ``value`` (e.g. rank and |F_n|), so ``value * denominator == numerator``.
    """

    value: Fraction
    method: str
    parameter: int
    numerator: int
    denominator: int
    window: int | None = None
    k: int = 1
    bound: Fraction | None = None

    def __post_init__(self):
        if Fraction(self.numerator, self.denominator) != self.value:
            raise AssertionError("certificate does not match value")
        if not 0 <= self.value <= self.k:
            raise AssertionError(f"rank estimate {self.value} outside [0, {self.k}]")


@dataclass
class ConvergenceReport:
    estimates: list[RankEstimate]
    method: str
    gaps: list[Fraction] = field(default_factory=list)
    bounds: list[Fraction | None] = field(default_factory=list)
    verdict: str = "n/a"
    heuristic: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.gaps:
            vals = [e.value for e in self.estimates]
            self.gaps = [abs(b - a) for a, b in zip(vals, vals[1:])]
        if not self.bounds:
            self.bounds = [e.bound for e in self.estimates]

    @property
    def final(self) -> RankEstimate:
        return self.estimates[-1]

    @property
    def values(self) -> list[Fraction]:
        return [e.value for e in self.estimates]

    def by_method(self, method: str) -> list[RankEstimate]:
        return [e for e in self.estimates if e.method == method]


def _window_radius(r: int, s: int | None, strict: bool) -> int:
    if s is None:
        return r + 1 if strict else r
    if s < r:
        raise PreconditionError(f"window s={s} is smaller than the support radius {r}")
    return s


def window(F: FiniteSubset, s: int) -> list[GroupElement]:
    """F minus its s-boundary, in F's order."""
    if s <= 0:
        return list(F.elements)
    depth = boundary_depths(F, s)
    return [x for x in F.elements if x not in depth]


def _right_mult_into(b: SparseMatrixBuilder, a: GroupRingElement, sources, target_index,
                     col0: int = 0, row0: int = 0):
    g = a.group
    terms = [(y.nf, c) for y, c in a.terms.items()]
    for col, x in enumerate(sources):
        for ynf, c in terms:
            z = GroupElement(g, g.mul_nf(x.nf, ynf))
            b.add(row0 + target_index[z], col0 + col, c)


def right_mult_matrix(a: GroupRingElement, F: FiniteSubset, s: int) -> SparseMatrix:
    """Matrix of z -> z a from K^(F \\ ∂_s F) into K^F.

    Columns follow the window in F's order, rows follow F.
    """
    r = a.support_radius()
    if s < r:
        raise PreconditionError(f"window s={s} < support radius {r}: the image could leave F")
    W = window(F, s)
    b = SparseMatrixBuilder(len(F), len(W), a.field)
    _right_mult_into(b, a, W, F._index)
    return b.build()


def right_mult_block_matrix(D: GroupRingMatrix, F: FiniteSubset, s: int) -> SparseMatrix:
    """Right multiplication by a k x l matrix on row vectors, window^k -> F^l."""
    r = D.support_radius()
    if s < r:
        raise PreconditionError(f"window s={s} < support radius {r}")
    W = window(F, s)
    k, l = D.shape
    b = SparseMatrixBuilder(l * len(F), k * len(W), D.field)
    for i, j, e in D.entries():
        # (z_1..z_k) D has j-th component Σ_i z_i D_ij
        _right_mult_into(b, e, W, F._index, col0=i * len(W), row0=j * len(F))
    return b.build()


def image_estimate(a, F: FiniteSubset, s: int, parameter: int = 0) -> RankEstimate:
    D = as_matrix(a)
    M = right_mult_block_matrix(D, F, s)
    k = D.shape[0]
    lost = len(boundary_depths(F, s)) if s > 0 else 0
    # window loss plus boundary mass, per block
    bound = Fraction(k * 2 * lost, len(F))
    rk = M.rank()
    return RankEstimate(Fraction(rk, len(F)), FOLNER_IMAGE, parameter, rk, len(F),
                        window=s, k=k, bound=bound)


def kernel_estimate(a: GroupRingElement, F: FiniteSubset, parameter: int = 0) -> RankEstimate:
    """1 - dim V/|F| with V = {z supported on F : z a = 0} in KΓ (not truncated)."""
    g = a.group
    if not a.terms:
        return RankEstimate(Fraction(0), FOLNER_KERNEL, parameter, 0, len(F), bound=Fraction(0))
    targets: dict[GroupElement, int] = {}
    for x in F.elements:
        for y in a.terms:
            z = GroupElement(g, g.mul_nf(x.nf, y.nf))
            if z not in targets:
                targets[z] = len(targets)
    b = SparseMatrixBuilder(len(targets), len(F), a.field)
    _right_mult_into(b, a, F.elements, targets)
    M = b.build()
    kd = M.kernel_dim()
    r = a.support_radius()
    lost = len(boundary_depths(F, r)) if r > 0 else 0
    return RankEstimate(Fraction(len(F) - kd, len(F)), FOLNER_KERNEL, parameter,
                        len(F) - kd, len(F), bound=Fraction(2 * lost, len(F)))


def folner_rank_image(a: GroupRingElement, n_list: Sequence[int], s: int | None = None,
                      strict: bool = False) -> ConvergenceReport:
    """dim(W_n a)/|F_n| for each n; default window s = support radius (s = r+1 if strict)."""
    s = _window_radius(a.support_radius(), s, strict)
    ests = [image_estimate(a, folner_set(a.group, n), s, n) for n in sorted(n_list)]
    return ConvergenceReport(ests, FOLNER_IMAGE)


def folner_rank_kernel(a: GroupRingElement, n_list: Sequence[int]) -> ConvergenceReport:
    ests = [kernel_estimate(a, folner_set(a.group, n), n) for n in sorted(n_list)]
    return ConvergenceReport(ests, FOLNER_KERNEL)


def matrix_rank_estimate(D: GroupRingMatrix, n_list: Sequence[int], s: int | None = None,
                         strict: bool = False) -> ConvergenceReport:
    """Block image estimator; values lie in [0, k]."""
    D = as_matrix(D)
    if D.shape[0] != D.shape[1]:
        raise PreconditionError("matrix rank estimate needs a square matrix")
    s = _window_radius(D.support_radius(), s, strict)
    ests = [image_estimate(D, folner_set(D.group, n), s, n) for n in sorted(n_list)]
    return ConvergenceReport(ests, FOLNER_IMAGE)


def convolution_matrix(D: GroupRingMatrix, q: MarkedGroup, projection) -> SparseMatrix:
    """Right convolution by π(D) on row vectors in K[Γ/N]^k (columns = inputs)."""
    pts = list(q.elements())
    index = {x: i for i, x in enumerate(pts)}
    n = len(pts)
    k, l = D.shape
    b = SparseMatrixBuilder(l * n, k * n, D.field)
    for i, j, e in D.entries():
        terms = [(projection(y), c) for y, c in e.terms.items()]
        for col, x in enumerate(pts):
            for y, c in terms:
                b.add(j * n + index[x * y], i * n + col, c)
    return b.build()


def quotient_rank(D, modulus, warn: bool = True) -> RankEstimate:
    """rank(π(D) on K[Γ/N]^k) / |Γ/N|, i.e. k minus the normalized kernel dimension."""
    D = as_matrix(D)
    try:
        q, proj = quotient(D.group, modulus)
    except PreconditionError:
        raise
    except ValueError as exc:
        raise PreconditionError(f"quotient construction failed: {exc}") from exc
    if warn:
        r = D.support_radius()
        if quotient_diameter(q) <= 2 * r:
            warnings.warn(f"quotient {q} too small to be injective on supports of radius {r}",
                          stacklevel=2)
    M = convolution_matrix(D, q, proj)
    rk = M.rank()
    n = q.order
    param = modulus if isinstance(modulus, int) else max(modulus)
    return RankEstimate(Fraction(rk, n), QUOTIENT, param, rk, n, k=D.shape[0], bound=Fraction(0))


def quotient_reports(D, moduli: Iterable) -> ConvergenceReport:
    ests = [quotient_rank(D, m) for m in moduli]
    ests.sort(key=lambda e: e.denominator)
    return ConvergenceReport(ests, QUOTIENT)


def compare_report(D, folner_params: Sequence[int], quotient_params: Iterable,
                   s: int | None = None, strict: bool = False) -> ConvergenceReport:
    """Følner estimator against finite quotients.

    A 1 x 1 operand is measured with the untruncated kernel estimator, which
    is the Følner counterpart of the quotient kernel dimension; a k x k matrix
    uses the block image estimator. The verdict is ``consistent`` iff the final-stage gap is at most the sum
    of the two final-stage bounds. The quotient side carries bound 0: its
    estimate has no window loss, and no rate is known for it either.
    """
    D = as_matrix(D)
    quo = quotient_reports(D, quotient_params)
    if D.shape == (1, 1):
        fol = folner_rank_kernel(D.rows[0][0], folner_params)
    else:
        fol = matrix_rank_estimate(D, folner_params, s=s, strict=strict)
    f_last, q_last = fol.final, quo.final
    gap = abs(f_last.value - q_last.value)
    allowed = (f_last.bound or 0) + (q_last.bound or 0)
    verdict = "consistent" if gap <= allowed else "inconsistent"
    return ConvergenceReport(
        fol.estimates + quo.estimates, "compare",
        gaps=[gap], bounds=[allowed], verdict=verdict,
        extra={"final_gap": gap, "allowed": allowed,
               "folner_final": f_last.value, "quotient_final": q_last.value})
