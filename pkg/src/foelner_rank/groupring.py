"""Exact arithmetic in the group algebra KΓ and in matrices over it.

Element grammar (what :func:`parse_element` reads and ``str()`` writes)::

    element := ['-'] term (('+' | '-') term)*
    term    := factor ('*' factor)*
    factor  := INT ['/' INT] | '(' coefficient ')' | NAME ['^' ['-'] INT]
    coefficient := a sum of rationals and rational multiples of 'i'

Numeric factors multiply into the coefficient, generator powers into the
word; the bare number ``1`` is the identity element.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, PreconditionError
from .fields import QQ, Field
from .groups import GroupElement, MarkedGroup


class GroupRingElement:
    """Finitely supported sum ``Σ a_γ γ``; ``terms`` never holds zero coefficients."""

    __slots__ = ("group", "field", "terms")

    def __init__(self, group: MarkedGroup, field: Field = QQ,
                 terms: Mapping[GroupElement, object] | None = None):
        self.group = group
        self.field = field
        clean = {}
        for x, c in (terms or {}).items():
            c = field(c)
            if c:
                clean[x] = c
        self.terms: dict[GroupElement, object] = clean

    @classmethod
    def _raw(cls, group, field, terms):
        obj = cls.__new__(cls)
        obj.group, obj.field, obj.terms = group, field, terms
        return obj

    @classmethod
    def scalar(cls, group: MarkedGroup, field: Field, c) -> GroupRingElement:
        return cls(group, field, {group.identity: c})

    @classmethod
    def basis(cls, x: GroupElement, field: Field = QQ, c=1) -> GroupRingElement:
        return cls(x.group, field, {x: c})

    def _check(self, other: GroupRingElement):
        if self.field != other.field:
            raise PreconditionError(f"field mismatch: {self.field} vs {other.field}")
        if self.group is not other.group and self.group != other.group:
            raise PreconditionError(f"group mismatch: {self.group} vs {other.group}")

    def _lift(self, other):
        if isinstance(other, GroupRingElement):
            self._check(other)
            return other
        if isinstance(other, GroupElement):
            return GroupRingElement.basis(other, self.field)
        return GroupRingElement.scalar(self.group, self.field, other)

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for x, c in other.terms.items():
            v = terms.get(x)
            v = c if v is None else v + c
            if v:
                terms[x] = v
            else:
                terms.pop(x, None)
        return GroupRingElement._raw(self.group, self.field, terms)

    __radd__ = __add__

    def __neg__(self):
        return GroupRingElement._raw(self.group, self.field, {x: -c for x, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        """Convolution: (ab)_γ = Σ_{στ=γ} a_σ b_τ."""
        other = self._lift(other)
        g = self.group
        terms: dict[GroupElement, object] = {}
        for x, c in self.terms.items():
            for y, d in other.terms.items():
                z = GroupElement(g, g.mul_nf(x.nf, y.nf))
                v = terms.get(z)
                v = c * d if v is None else v + c * d
                if v:
                    terms[z] = v
                else:
                    terms.pop(z, None)
        return GroupRingElement._raw(g, self.field, terms)

    def __rmul__(self, other):
        return self._lift(other) * self

    def __pow__(self, k: int):
        result = GroupRingElement.scalar(self.group, self.field, 1)
        for _ in range(k):
            result = result * self
        return result

    def star(self) -> GroupRingElement:
        """(a*)_γ = conj(a_{γ^-1}); over GF(p) no conjugation is applied."""
        return GroupRingElement._raw(
            self.group, self.field, {x.inverse(): c.conjugate() for x, c in self.terms.items()})

    def coeff(self, x: GroupElement):
        return self.terms.get(x, self.field.zero)

    def support(self) -> list[GroupElement]:
        return sorted(self.terms)

    def support_radius(self) -> int:
        """Largest word length over the support (0 for the zero element)."""
        return max((x.word_length() for x in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, GroupRingElement):
            return self.field == other.field and self.group == other.group and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == GroupRingElement.scalar(self.group, self.field, other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __str__(self):
        return format_element(self)

    def __repr__(self):
        return f"GroupRingElement({self.group}, {self.field}, {format_element(self)!r})"


def gr_add(a: GroupRingElement, b: GroupRingElement) -> GroupRingElement:
    a._check(b)
    return a + b


def gr_mul(a: GroupRingElement, b: GroupRingElement) -> GroupRingElement:
    a._check(b)
    return a * b


def gr_star(a: GroupRingElement) -> GroupRingElement:
    return a.star()


# -- printing ---------------------------------------------------------------

def format_word(x: GroupElement) -> str:
    """Canonical word for a normal form: generator powers in coordinate order."""
    g = x.group
    parts = []
    for name, e in zip(g.names, x.nf):
        if e == 0:
            continue
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts) if parts else "1"


def term_order(x: GroupElement):
    return (x.word_length(), x.nf)


def format_element(a: GroupRingElement) -> str:
    """Canonical printer: terms by word length, then normal form."""
    if not a.terms:
        return "0"
    f = a.field
    out = []
    for x in sorted(a.terms, key=term_order):
        c = a.terms[x]
        neg = f.is_negative(c)
        mag = -c if neg else c
        word = format_word(x)
        coef = f.format(mag)
        if word == "1":
            body = coef
        elif coef == "1":
            body = word
        else:
            body = f"{coef}*{word}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f"{'-' if neg else '+'} {body}")
    return " ".join(out)


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(.))")


def _tokenize(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.lastindex is None:  # trailing whitespace
            break
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            toks.append(("int", int(m.group(1)), start))
        elif m.group(2) is not None:
            toks.append(("name", m.group(2), start))
        else:
            toks.append(("op", m.group(3), start))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


class _Parser:
    def __init__(self, g: MarkedGroup, field: Field, text: str):
        self.g, self.field, self.text = g, field, text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok[2], self.text)

    def expect_op(self, op):
        t = self.take()
        if t[0] != "op" or t[1] != op:
            self.fail(f"expected {op!r}", t)

    def element(self) -> GroupRingElement:
        g, f = self.g, self.field
        total = GroupRingElement(g, f)
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        elif self.peek()[:2] == ("op", "+"):
            self.take()
        while True:
            coef, word = self.term()
            total = total + GroupRingElement(g, f, {word: f(coef) * sign})
            t = self.peek()
            if t[0] == "end":
                return total
            if t[0] == "op" and t[1] in "+-":
                self.take()
                sign = 1 if t[1] == "+" else -1
            else:
                self.fail(f"unexpected {t[1]!r}")

    def term(self):
        coef = self.field.one
        word = self.g.identity
        while True:
            t = self.peek()
            if t[0] == "int":
                coef = coef * self.field(self.rational())
            elif t[0] == "op" and t[1] == "(":
                self.take()
                coef = coef * self.coefficient()
                self.expect_op(")")
            elif t[0] == "name":
                word = word * self.power()
            else:
                self.fail("expected a coefficient or generator")
            if self.peek()[:2] == ("op", "*"):
                self.take()
                continue
            return coef, word

    def rational(self) -> Fraction:
        t = self.take()
        if t[0] != "int":
            self.fail("expected an integer", t)
        num = t[1]
        if self.peek()[:2] == ("op", "/"):
            self.take()
            d = self.take()
            if d[0] != "int" or d[1] == 0:
                self.fail("expected a nonzero denominator", d)
            return Fraction(num, d[1])
        return Fraction(num)

    def coefficient(self):
        """Sum of signed rationals and rational multiples of i inside parentheses."""
        f = self.field
        total = f.zero
        first = True
        while True:
            t = self.peek()
            sign = 1
            if t[0] == "op" and t[1] in "+-":
                self.take()
                sign = -1 if t[1] == "-" else 1
            elif not first:
                return total
            first = False
            t = self.peek()
            val = Fraction(1)
            have_num = False
            if t[0] == "int":
                val = self.rational()
                have_num = True
                if self.peek()[:2] == ("op", "*"):
                    self.take()
            t = self.peek()
            if t[0] == "name" and t[1] == "i":
                self.take()
                if not f.has_conjugation:
                    self.fail(f"imaginary unit not available over {f}", t)
                total = total + f(0, sign * val)
            elif have_num:
                total = total + f(sign * val)
            else:
                self.fail("expected a number or 'i'")

    def power(self) -> GroupElement:
        t = self.take()
        name = t[1]
        if name not in self.g.names:
            self.fail(f"unknown generator {name!r}", t)
        x = self.g.gen(name)
        if self.peek()[:2] == ("op", "^"):
            self.take()
            neg = False
            if self.peek()[:2] == ("op", "-"):
                self.take()
                neg = True
            e = self.take()
            if e[0] != "int":
                self.fail("expected an integer exponent", e)
            return x ** (-e[1] if neg else e[1])
        return x


def parse_element(g: MarkedGroup, field: Field, text: str) -> GroupRingElement:
    if not text.strip():
        raise ParseError("empty element", 0, text)
    return _Parser(g, field, text).element()


# -- matrices ---------------------------------------------------------------

class GroupRingMatrix:
    """Rectangular matrix with entries in KΓ."""

    __slots__ = ("group", "field", "rows")

    def __init__(self, rows: Sequence[Sequence[GroupRingElement]],
                 group: MarkedGroup | None = None, field: Field | None = None):
        rows = [list(r) for r in rows]
        if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
            raise PreconditionError("matrix rows must be nonempty and of equal length")
        first = rows[0][0]
        self.group = group or first.group
        self.field = field or first.field
        for r in rows:
            for e in r:
                if e.field != self.field or e.group != self.group:
                    raise PreconditionError("entries must share group and field")
        self.rows = tuple(tuple(r) for r in rows)

    @classmethod
    def diag(cls, entries: Iterable[GroupRingElement]) -> GroupRingMatrix:
        entries = list(entries)
        g, f = entries[0].group, entries[0].field
        zero = GroupRingElement(g, f)
        return cls([[e if i == j else zero for j in range(len(entries))]
                    for i, e in enumerate(entries)])

    @classmethod
    def identity(cls, g: MarkedGroup, field: Field, k: int) -> GroupRingMatrix:
        return cls.diag([GroupRingElement.scalar(g, field, 1)] * k)

    @classmethod
    def zeros(cls, g: MarkedGroup, field: Field, k: int, l: int | None = None) -> GroupRingMatrix:
        z = GroupRingElement(g, field)
        return cls([[z] * (l or k) for _ in range(k)], g, field)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def _check(self, other):
        if self.field != other.field or self.group != other.group:
            raise PreconditionError("group/field mismatch")

    def __add__(self, other: GroupRingMatrix) -> GroupRingMatrix:
        self._check(other)
        if self.shape != other.shape:
            raise PreconditionError(f"shape mismatch {self.shape} vs {other.shape}")
        return GroupRingMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: GroupRingMatrix) -> GroupRingMatrix:
        return self + other.scaled(-1)

    def scaled(self, c) -> GroupRingMatrix:
        return GroupRingMatrix([[e * c for e in r] for r in self.rows])

    def __mul__(self, other: GroupRingMatrix) -> GroupRingMatrix:
        self._check(other)
        k, m = self.shape
        m2, l = other.shape
        if m != m2:
            raise PreconditionError(f"shape mismatch {self.shape} x {other.shape}")
        out = []
        for i in range(k):
            row = []
            for j in range(l):
                acc = GroupRingElement(self.group, self.field)
                for t in range(m):
                    acc = acc + self.rows[i][t] * other.rows[t][j]
                row.append(acc)
            out.append(row)
        return GroupRingMatrix(out)

    def star(self) -> GroupRingMatrix:
        """Conjugate transpose with gr_star entries."""
        k, l = self.shape
        return GroupRingMatrix([[self.rows[i][j].star() for i in range(k)] for j in range(l)])

    def support_radius(self) -> int:
        return max(e.support_radius() for r in self.rows for e in r)

    def entries(self):
        for i, r in enumerate(self.rows):
            for j, e in enumerate(r):
                yield i, j, e

    def __eq__(self, other):
        if not isinstance(other, GroupRingMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __str__(self):
        return "; ".join(", ".join(str(e) for e in r) for r in self.rows)


def grm_add(A: GroupRingMatrix, B: GroupRingMatrix) -> GroupRingMatrix:
    return A + B


def grm_mul(A: GroupRingMatrix, B: GroupRingMatrix) -> GroupRingMatrix:
    return A * B


def grm_star(A: GroupRingMatrix) -> GroupRingMatrix:
    return A.star()


def as_matrix(x) -> GroupRingMatrix:
    return x if isinstance(x, GroupRingMatrix) else GroupRingMatrix([[x]])


def parse_matrix(g: MarkedGroup, field: Field, text: str) -> GroupRingMatrix:
    """Rows separated by ``;``, entries by ``,``: ``"g0 - 1, 0; 0, 1 + t"``."""
    rows = []
    offset = 0
    for row_txt in text.split(";"):
        row = []
        col_off = offset
        for entry in row_txt.split(","):
            try:
                row.append(parse_element(g, field, entry))
            except ParseError as exc:
                pos = None if exc.pos is None else col_off + exc.pos
                raise ParseError(str(exc).split(" (at")[0], pos, text) from None
            col_off += len(entry) + 1
        rows.append(row)
        offset += len(row_txt) + 1
    try:
        return GroupRingMatrix(rows, g, field)
    except PreconditionError as exc:
        raise ParseError(str(exc), 0, text) from None
