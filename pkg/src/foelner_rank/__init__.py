"""Exact rank estimators over group algebras of amenable groups.

Følner-set and finite-quotient estimators of the von Neumann rank, together
with Bratteli tiling systems and the level maps built on them.
"""

from .errors import BoundViolation, ParseError, PreconditionError
from .fields import GF, QQ, QQi, Field, field_from_tag
from .folner import boundary, folner_set, interior, isoperimetric
from .groupring import (GroupRingElement, GroupRingMatrix, parse_element,
                        parse_matrix)
from .groups import (FiniteSubset, GroupElement, LabeledGraph, MarkedGroup,
                     make_group, parse_group, quotient)
from .exactla import SparseMatrix, rank_multimodular

__all__ = [
    "BoundViolation", "ParseError", "PreconditionError",
    "GF", "QQ", "QQi", "Field", "field_from_tag",
    "boundary", "folner_set", "interior", "isoperimetric",
    "GroupRingElement", "GroupRingMatrix", "parse_element", "parse_matrix",
    "FiniteSubset", "GroupElement", "LabeledGraph", "MarkedGroup",
    "make_group", "parse_group", "quotient",
    "SparseMatrix", "rank_multimodular",
]

__version__ = "0.1.0"
