"""Exact coefficient fields.

Three fields are supported, all exact:

* ``QQ``  -- rationals, elements are :class:`fractions.Fraction`
* ``GF(p)`` -- prime fields, elements are :class:`Mod`
* ``QQi`` -- Gaussian rationals Q(i), elements are :class:`GaussianRational`

Every element type supports ``+ - * /``, unary minus, ``bool`` (nonzero test)
and ``conjugate()``, so linear algebra code can stay field-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import re


class Mod:
    """Residue class modulo a prime ``p``; always stored in ``[0, p)``."""

    __slots__ = ("r", "p")

    def __init__(self, r: int, p: int):
        self.p = p
        self.r = r % p

    def _coerce(self, other):
        if isinstance(other, Mod):
            if other.p != self.p:
                raise ValueError(f"mixing GF({self.p}) and GF({other.p})")
            return other.r
        if isinstance(other, int):
            return other
        if isinstance(other, Fraction):
            return other.numerator * pow(other.denominator, -1, self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Mod(self.r + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Mod(self.r - o, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Mod(o - self.r, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else Mod(self.r * o, self.p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o % self.p == 0:
            raise ZeroDivisionError(f"division by zero in GF({self.p})")
        return Mod(self.r * pow(o, -1, self.p), self.p)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Mod(o, self.p) / self

    def __neg__(self):
        return Mod(-self.r, self.p)

    def __pos__(self):
        return self

    def __bool__(self):
        return self.r != 0

    def __eq__(self, other):
        if isinstance(other, Mod):
            return self.p == other.p and self.r == other.r
        if isinstance(other, int):
            return (self.r - other) % self.p == 0
        return NotImplemented

    def __hash__(self):
        return hash((self.r, self.p))

    def conjugate(self):
        # no involution on GF(p): the star falls back to the plain transpose
        return self

    def __repr__(self):
        return f"Mod({self.r}, {self.p})"


class GaussianRational:
    """``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _parts(other):
        if isinstance(other, GaussianRational):
            return other.re, other.im
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o[0], self.im + o[1])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o[0], self.im - o[1])

    def __rsub__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return GaussianRational(o[0] - self.re, o[1] - self.im)

    def __mul__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        c, d = o
        return GaussianRational(self.re * c - self.im * d, self.re * d + self.im * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        c, d = o
        norm = c * c + d * d
        if not norm:
            raise ZeroDivisionError("division by zero in QQ(i)")
        return GaussianRational((self.re * c + self.im * d) / norm,
                                (self.im * c - self.re * d) / norm)

    def __rtruediv__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return GaussianRational(*o) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return self.re == o[0] and self.im == o[1]

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"


def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Field:
    """Field tag plus element factory. Compare fields with ``==``."""

    name: str
    p: int = 0

    @property
    def tag(self) -> str:
        return self.name if not self.p else f"GF{self.p}"

    @property
    def has_conjugation(self) -> bool:
        return self.name == "QQi"

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def __call__(self, x, im=0):
        """Coerce an int, Fraction, str or field element into this field."""
        if isinstance(x, str):
            x = Fraction(x)
        if self.name == "QQ":
            if im:
                raise ValueError("QQ has no imaginary unit")
            if isinstance(x, GaussianRational):
                if x.im:
                    raise ValueError(f"{x!r} is not rational")
                return x.re
            return Fraction(x)
        if self.name == "QQi":
            if isinstance(x, GaussianRational):
                return x + GaussianRational(0, im) if im else x
            return GaussianRational(x, im)
        if im:
            raise ValueError(f"GF({self.p}) has no imaginary unit")
        if isinstance(x, Mod):
            if x.p != self.p:
                raise ValueError(f"{x!r} is not in GF({self.p})")
            return x
        q = Fraction(x)
        if q.denominator % self.p == 0:
            raise ZeroDivisionError(f"{q} has no image in GF({self.p})")
        return Mod(q.numerator * pow(q.denominator, -1, self.p), self.p)

    def format(self, c) -> str:
        """Coefficient in the element grammar (parenthesized for QQ(i) with im != 0)."""
        if isinstance(c, Mod):
            return str(c.r)
        if isinstance(c, GaussianRational):
            if not c.im:
                return _fmt_rational(c.re)
            im = c.im
            im_txt = "i" if abs(im) == 1 else f"{_fmt_rational(abs(im))} i"
            if not c.re:
                return f"({'-' if im < 0 else ''}{im_txt})"
            return f"({_fmt_rational(c.re)} {'-' if im < 0 else '+'} {im_txt})"
        return _fmt_rational(Fraction(c))

    def is_negative(self, c) -> bool:
        """True when the printer should emit ``- |c|`` instead of ``+ c``."""
        if isinstance(c, Mod):
            return False
        if isinstance(c, GaussianRational):
            return not c.im and c.re < 0
        return c < 0

    def __str__(self):
        return "QQ(i)" if self.name == "QQi" else (f"GF({self.p})" if self.p else "QQ")


QQ = Field("QQ")
QQi = Field("QQi")


@lru_cache(maxsize=None)
def GF(p: int) -> Field:
    from sympy.ntheory import isprime

    if not isprime(p):
        raise ValueError(f"GF({p}): {p} is not prime")
    return Field("GF", p)


_GF_TAG = re.compile(r"^GF\(?(\d+)\)?$")


def field_from_tag(tag: str) -> Field:
    """``QQ``, ``QQi`` / ``QQ(i)``, ``GF7`` / ``GF(7)``."""
    t = tag.strip()
    if t in ("QQ", "Q"):
        return QQ
    if t in ("QQi", "QQ(i)", "Q(i)"):
        return QQi
    m = _GF_TAG.match(t)
    if m:
        return GF(int(m.group(1)))
    raise ValueError(f"unknown field tag {tag!r}")
