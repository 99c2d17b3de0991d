"""Følner sets, r-boundaries and isoperimetric constants."""

from __future__ import annotations

import itertools
import warnings
from fractions import Fraction

from .errors import PreconditionError
from .groups import (FREE_ABELIAN, FREE_TIMES_FINITE, HEISENBERG, FiniteSubset,
                     GroupElement, MarkedGroup)

__all__ = ["FiniteSubset", "boundary", "boundary_depths", "isoperimetric", "folner_set"]


def boundary_depths(F: FiniteSubset, r: int) -> dict[GroupElement, int]:
    """Map x in F to d(x, complement of F) for every x with that distance <= r.

    Multi-source BFS inward from the complement; one pass per radius.
    """
    g = F.group
    gens = [g.gen_nf(s) for s in g.generators]
    depth: dict[GroupElement, int] = {}
    layer = []
    for x in F.elements:
        for s in gens:
            if GroupElement(g, g.mul_nf(x.nf, s)) not in F:
                depth[x] = 1
                layer.append(x)
                break
    for k in range(2, r + 1):
        nxt = []
        for x in layer:
            for s in gens:
                y = GroupElement(g, g.mul_nf(x.nf, s))
                if y in F and y not in depth:
                    depth[y] = k
                    nxt.append(y)
        if not nxt:
            break
        layer = nxt
    return depth


def boundary(F: FiniteSubset, r: int = 1) -> FiniteSubset:
    """∂_r F = {x in F : d(x, F^c) <= r}."""
    if r < 1:
        raise PreconditionError("boundary radius must be >= 1")
    return FiniteSubset(F.group, boundary_depths(F, r))


def interior(F: FiniteSubset, r: int) -> FiniteSubset:
    """F minus its r-boundary; F itself for r = 0."""
    if r <= 0:
        return F
    depth = boundary_depths(F, r)
    return FiniteSubset(F.group, (x for x in F.elements if x not in depth))


def isoperimetric(F: FiniteSubset) -> Fraction:
    if not len(F):
        raise PreconditionError("isoperimetric constant of the empty set")
    return Fraction(len(boundary_depths(F, 1)), len(F))


def folner_set(g: MarkedGroup, n: int) -> FiniteSubset:
    """Canonical n-th Følner set, anchored at the identity.

    ``[0,n)^d`` for Z^d, times the whole finite factor for products, and
    ``{0 <= a, b < n, 0 <= c < n^2}`` for H3. The quadratic c-range is what
    makes the H3 boxes Følner: with c-range n the boundary fraction stays bounded below.
    """
    if n < 1:
        raise PreconditionError("Følner index must be >= 1")
    if g.is_finite:
        warnings.warn(f"{g} is finite: returning the whole group", stacklevel=2)
        return FiniteSubset(g, g.elements())
    if g.kind == HEISENBERG:
        coords = itertools.product(range(n), range(n), range(n * n))
    elif g.kind in (FREE_ABELIAN, FREE_TIMES_FINITE):
        coords = itertools.product(*([range(n)] * g.rank), *(range(o) for o in g.orders))
    else:  # pragma: no cover
        raise PreconditionError(f"no Følner sets for {g}")
    return FiniteSubset.from_nfs(g, coords)
