"""Exact sparse linear algebra over QQ, GF(p) and QQ(i).

Rank is computed by sparse Gaussian elimination. Pivot choice follows the
Markowitz rule restricted to the currently shortest rows and shortest
columns: among their entries take the smallest (r_i - 1)(c_j - 1), ties
broken by lowest (row, col). Everything is exact; no floats are touched.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import ParseError, PreconditionError
from .fields import QQ, Field, GaussianRational, Mod, field_from_tag


class SparseMatrixBuilder:
    """Accumulates entries (summing duplicates); ``build()`` freezes the result."""

    def __init__(self, rows: int, cols: int, field: Field = QQ):
        self.rows, self.cols, self.field = rows, cols, field
        self._data: dict[int, dict[int, object]] = {}

    def add(self, i: int, j: int, v) -> None:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) outside {self.rows}x{self.cols}")
        row = self._data.setdefault(i, {})
        row[j] = row[j] + v if j in row else self.field(v)

    def set(self, i: int, j: int, v) -> None:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) outside {self.rows}x{self.cols}")
        self._data.setdefault(i, {})[j] = self.field(v)

    def build(self) -> SparseMatrix:
        data = {}
        for i, row in self._data.items():
            row = {j: v for j, v in row.items() if v}
            if row:
                data[i] = row
        self._data = {}
        return SparseMatrix._frozen(self.rows, self.cols, self.field, data)


class SparseMatrix:
    """Immutable sparse matrix: ``rows x cols`` with a dict-of-rows store."""

    __slots__ = ("rows", "cols", "field", "_data", "_rank")

    def __init__(self, rows: int, cols: int, field: Field = QQ,
                 entries: Mapping[tuple[int, int], object] | None = None):
        b = SparseMatrixBuilder(rows, cols, field)
        for (i, j), v in (entries or {}).items():
            b.add(i, j, v)
        m = b.build()
        self.rows, self.cols, self.field, self._data, self._rank = rows, cols, field, m._data, None

    @classmethod
    def _frozen(cls, rows, cols, field, data):
        obj = cls.__new__(cls)
        obj.rows, obj.cols, obj.field, obj._data, obj._rank = rows, cols, field, data, None
        return obj

    @classmethod
    def from_dense(cls, dense, field: Field = QQ) -> SparseMatrix:
        dense = [list(r) for r in dense]
        rows = len(dense)
        cols = len(dense[0]) if dense else 0
        return cls(rows, cols, field, {(i, j): v for i, r in enumerate(dense)
                                       for j, v in enumerate(r) if v})

    @classmethod
    def identity(cls, n: int, field: Field = QQ) -> SparseMatrix:
        return cls(n, n, field, {(i, i): 1 for i in range(n)})

    @classmethod
    def zeros(cls, rows: int, cols: int, field: Field = QQ) -> SparseMatrix:
        return cls._frozen(rows, cols, field, {})

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self._data.values())

    def __getitem__(self, ij):
        i, j = ij
        return self._data.get(i, {}).get(j, self.field.zero)

    def items(self) -> Iterable[tuple[int, int, object]]:
        for i in sorted(self._data):
            row = self._data[i]
            for j in sorted(row):
                yield i, j, row[j]

    def row(self, i: int) -> dict[int, object]:
        return dict(self._data.get(i, {}))

    def nonzero_rows(self) -> list[int]:
        return sorted(self._data)

    def to_dense(self) -> list[list]:
        out = [[self.field.zero] * self.cols for _ in range(self.rows)]
        for i, j, v in self.items():
            out[i][j] = v
        return out

    # -- algebra ------------------------------------------------------------

    def _same(self, other: SparseMatrix):
        if self.field != other.field:
            raise PreconditionError("field mismatch")

    def __add__(self, other: SparseMatrix) -> SparseMatrix:
        self._same(other)
        if self.shape != other.shape:
            raise PreconditionError(f"shape mismatch {self.shape} vs {other.shape}")
        b = SparseMatrixBuilder(self.rows, self.cols, self.field)
        for i, j, v in self.items():
            b.add(i, j, v)
        for i, j, v in other.items():
            b.add(i, j, v)
        return b.build()

    def __neg__(self) -> SparseMatrix:
        return self.scale(-1)

    def __sub__(self, other: SparseMatrix) -> SparseMatrix:
        return self + (-other)

    def scale(self, c) -> SparseMatrix:
        c = self.field(c)
        return SparseMatrix._frozen(self.rows, self.cols, self.field,
                                    {i: {j: v * c for j, v in r.items()} for i, r in self._data.items()}
                                    if c else {})

    def __matmul__(self, other: SparseMatrix) -> SparseMatrix:
        self._same(other)
        if self.cols != other.rows:
            raise PreconditionError(f"shape mismatch {self.shape} @ {other.shape}")
        b = SparseMatrixBuilder(self.rows, other.cols, self.field)
        for i, row in self._data.items():
            for t, v in row.items():
                for j, w in other._data.get(t, {}).items():
                    b.add(i, j, v * w)
        return b.build()

    def transpose(self) -> SparseMatrix:
        data: dict[int, dict[int, object]] = {}
        for i, j, v in self.items():
            data.setdefault(j, {})[i] = v
        return SparseMatrix._frozen(self.cols, self.rows, self.field, data)

    def conj_transpose(self) -> SparseMatrix:
        """M* (plain transpose over GF(p) and QQ)."""
        data: dict[int, dict[int, object]] = {}
        for i, j, v in self.items():
            data.setdefault(j, {})[i] = v.conjugate()
        return SparseMatrix._frozen(self.cols, self.rows, self.field, data)

    H = property(conj_transpose)

    def permuted(self, row_perm, col_perm) -> SparseMatrix:
        """Entry (i, j) moves to (row_perm[i], col_perm[j])."""
        return SparseMatrix._frozen(self.rows, self.cols, self.field,
                                    {row_perm[i]: {col_perm[j]: v for j, v in r.items()}
                                     for i, r in self._data.items()})

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self.field == other.field and self._data == other._data

    def __hash__(self):
        return hash((self.shape, tuple(self.items())))

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, {self.field}, nnz={self.nnz})"

    def rank(self) -> int:
        if self._rank is None:
            self._rank = rank(self)
        return self._rank

    def kernel_dim(self) -> int:
        return self.cols - self.rank()


def block_diag(blocks: Iterable[SparseMatrix], field: Field | None = None) -> SparseMatrix:
    blocks = list(blocks)
    field = field or (blocks[0].field if blocks else QQ)
    data: dict[int, dict[int, object]] = {}
    r0 = c0 = 0
    for blk in blocks:
        for i, j, v in blk.items():
            data.setdefault(r0 + i, {})[c0 + j] = v
        r0 += blk.rows
        c0 += blk.cols
    return SparseMatrix._frozen(r0, c0, field, data)


# -- elimination --------------------------------------------------------------

def _eliminate(rows: dict[int, dict[int, object]], p: int = 0) -> int:
    """Destructive rank computation. ``p > 0`` means int entries mod p."""
    cols: dict[int, set[int]] = {}
    for i, row in rows.items():
        for j in row:
            cols.setdefault(j, set()).add(i)
    r = 0
    while rows:
        min_rlen = min(len(row) for row in rows.values())
        min_clen = min(len(s) for s in cols.values())
        best = None
        for i, row in rows.items():
            rl = len(row)
            if rl == min_rlen:
                for j in row:
                    key = ((rl - 1) * (len(cols[j]) - 1), i, j)
                    if best is None or key < best:
                        best = key
        for j, s in cols.items():
            if len(s) == min_clen:
                for i in s:
                    key = ((len(rows[i]) - 1) * (min_clen - 1), i, j)
                    if key < best:
                        best = key
        _, pi, pj = best
        prow = rows.pop(pi)
        for j in prow:
            cols[j].discard(pi)
        pv = prow[pj]
        inv = pow(pv, -1, p) if p else None
        for k in list(cols[pj]):
            row = rows[k]
            if p:
                f = row[pj] * inv % p
            else:
                f = row[pj] / pv
            for j, v in prow.items():
                if j in row:
                    nv = (row[j] - f * v) % p if p else row[j] - f * v
                    if nv:
                        row[j] = nv
                    else:
                        del row[j]
                        cols[j].discard(k)
                else:
                    nv = (-f * v) % p if p else -f * v
                    row[j] = nv
                    cols[j].add(k)
            if not row:
                del rows[k]
        for j in prow:
            if not cols[j]:
                del cols[j]
        r += 1
    return r


def rank(M: SparseMatrix) -> int:
    """Exact rank over the matrix's own field."""
    rows = {i: dict(r) for i, r in M._data.items()}
    if M.field.p:
        p = M.field.p
        rows = {i: {j: v.r for j, v in r.items()} for i, r in rows.items()}
        return _eliminate(rows, p)
    return _eliminate(rows)


def kernel_dim(M: SparseMatrix) -> int:
    return M.cols - rank(M)


def _reduce_mod(v, p: int, sqrt_m1: int | None) -> int | None:
    """Image of a QQ / QQ(i) entry in GF(p), or None if a denominator vanishes."""
    if isinstance(v, GaussianRational):
        parts = (v.re, v.im)
    else:
        parts = (Fraction(v), Fraction(0))
    out = 0
    for q, unit in zip(parts, (1, sqrt_m1)):
        if not q:
            continue
        if q.denominator % p == 0:
            return None
        out += q.numerator * pow(q.denominator, -1, p) * unit
    return out % p


def prime_schedule(count: int, seed: int = 0, gaussian: bool = False,
                   lo: int = 2 ** 30, hi: int = 2 ** 31) -> list[int]:
    """Deterministic list of distinct random primes (p = 1 mod 4 when ``gaussian``)."""
    from sympy import nextprime

    rng = random.Random(seed)
    out: list[int] = []
    while len(out) < count:
        p = nextprime(rng.randrange(lo, hi))
        if gaussian and p % 4 != 1:
            continue
        if p not in out:
            out.append(p)
    return out


def rank_multimodular(M: SparseMatrix, primes: Iterable[int] | None = None, n_primes: int = 3,
                      seed: int = 0, mode: str = "probabilistic") -> tuple[int, str]:
    """Rank lower bound from reductions mod several primes.

    Each reduction can only lose rank, so the max over primes is a certified
    lower bound; it equals the rank unless every prime divides a nonzero
    maximal minor. Primes that kill a denominator are skipped. ``mode="exact"``
    additionally runs :func:`rank` and returns it with flag ``"exact"``.
    """
    if M.field.name not in ("QQ", "QQi"):
        raise PreconditionError("multimodular rank needs a QQ or QQ(i) matrix")
    gaussian = M.field.name == "QQi"
    if primes is None:
        primes = prime_schedule(n_primes, seed, gaussian)
    best = 0
    used = 0
    for p in primes:
        sqrt_m1 = None
        if gaussian:
            if p % 4 != 1:
                continue
            from sympy.ntheory import sqrt_mod
            sqrt_m1 = sqrt_mod(p - 1, p)
        rows = {}
        ok = True
        for i, r in M._data.items():
            red = {}
            for j, v in r.items():
                w = _reduce_mod(v, p, sqrt_m1)
                if w is None:
                    ok = False
                    break
                if w:
                    red[j] = w
            if not ok:
                break
            if red:
                rows[i] = red
        if not ok:
            continue
        used += 1
        best = max(best, _eliminate(rows, p))
    if mode == "exact":
        return rank(M), "exact"
    if not used:
        raise PreconditionError("every prime was rejected")
    return best, "probabilistic"


# -- text dump ---------------------------------------------------------------

def dump_matrix(M: SparseMatrix) -> str:
    """``rows cols field`` header, then one ``row col value`` line per entry."""
    lines = [f"{M.rows} {M.cols} {M.field.tag}"]
    for i, j, v in M.items():
        lines.append(f"{i} {j} {_fmt_value(M.field, v)}")
    return "\n".join(lines) + "\n"


def _fmt_value(field: Field, v) -> str:
    if isinstance(v, Mod):
        return str(v.r)
    if isinstance(v, GaussianRational):
        return f"{v.re}{'+' if v.im >= 0 else '-'}{abs(v.im)}i"
    return str(v)


def load_matrix(text: str) -> SparseMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ParseError("empty matrix dump", 0)
    try:
        r, c, tag = lines[0].split()
        field = field_from_tag(tag)
        b = SparseMatrixBuilder(int(r), int(c), field)
        for ln in lines[1:]:
            i, j, v = ln.split()
            b.add(int(i), int(j), _parse_value(field, v))
    except ValueError as exc:
        raise ParseError(f"bad matrix dump: {exc}", 0) from None
    return b.build()


def _parse_value(field: Field, v: str):
    if v.endswith("i"):
        body = v[:-1]
        k = max(body.rfind("+"), body.rfind("-"))
        if k <= 0:
            return field(0, Fraction(body or "1"))
        return field(Fraction(body[:k]), Fraction(body[k:]))
    return field(Fraction(v))
