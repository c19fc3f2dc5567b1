"""
Exact scalars: rationals and elements a + b*sqrt(d) of a real quadratic field.

Every mask coefficient, measure weight, matrix entry and eigenvector component
is a QuadScalar. Rationals are QuadScalars with b == 0 and are compatible with
any field; two irrational scalars must share the same d.

Text grammar (used by every exact dump and by mask files)::

    1/8                    rational
    1/8+1/8*sqrt(3)        a + b*sqrt(d)
    -1/8*sqrt(3)           pure irrational part
    sqrt(3)                unit coefficient may be omitted when parsing
"""
from __future__ import annotations

import math
import re
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

from dilation.exceptions import FieldMismatchError, ScalarParseError

Number = Union[int, Fraction]

_RATIONAL = r"\d+(?:/\d+)?"
_SCALAR_RE = re.compile(
    rf"^(?P<a>[+-]?{_RATIONAL}(?=[+-]|$))?"
    rf"(?:(?P<sign>[+-])?(?:(?P<b>{_RATIONAL})\*)?sqrt\((?P<d>\d+)\))?$"
)

_FLOAT_PRECISION = 60


@lru_cache(maxsize=None)
def is_squarefree(n: int) -> bool:
    """True for integers n > 1 with no repeated prime factor."""
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % (f * f) == 0:
            return False
        f += 1
    return True


def quad_sign(a: Number, b: Number, d: Optional[int]) -> int:
    """
    Exact sign of a + b*sqrt(d), without floating point.

    When a and b have opposite signs the larger of a^2 and d*b^2 wins; the two
    can never be equal because d is not a perfect square.
    """
    sa = (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if sb == 0 or d is None:
        return sa
    if sa == 0 or sa == sb:
        return sb
    return sa if a * a > d * b * b else sb


class QuadScalar:
    """Immutable exact element a + b*sqrt(d) with rational a, b."""

    __slots__ = ("_a", "_b", "_d")

    def __init__(self, a: Number = 0, b: Number = 0, d: Optional[int] = None):
        a = a if isinstance(a, Fraction) else Fraction(a)
        b = b if isinstance(b, Fraction) else Fraction(b)
        if b == 0:
            d = None
        elif d is None or not is_squarefree(int(d)):
            raise ValueError(f"sqrt parameter must be a square-free integer > 1, got {d!r}")
        self._a = a
        self._b = b
        self._d = int(d) if d is not None else None

    @classmethod
    def _raw(cls, a: Fraction, b: Fraction, d: Optional[int]) -> "QuadScalar":
        obj = object.__new__(cls)
        obj._a = a
        obj._b = b
        obj._d = d if b else None
        return obj

    @classmethod
    def sqrt(cls, d: int) -> "QuadScalar":
        return cls(0, 1, d)

    # ------------------------------------------------------------------
    # Accessors
    # ------------------------------------------------------------------

    @property
    def a(self) -> Fraction:
        return self._a

    @property
    def b(self) -> Fraction:
        return self._b

    @property
    def d(self) -> Optional[int]:
        return self._d

    @property
    def is_rational(self) -> bool:
        return self._b == 0

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    @staticmethod
    def _coerce(other) -> Optional["QuadScalar"]:
        if isinstance(other, QuadScalar):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadScalar._raw(Fraction(other), Fraction(0), None)
        return None

    def _join(self, other: "QuadScalar") -> Optional[int]:
        if other._d is None or self._d == other._d:
            return self._d
        if self._d is None:
            return other._d
        raise FieldMismatchError(f"cannot combine sqrt({self._d}) with sqrt({other._d})")

    # ------------------------------------------------------------------
    # Field operations
    # ------------------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadScalar._raw(self._a + o._a, self._b + o._b, self._join(o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadScalar._raw(self._a - o._a, self._b - o._b, self._join(o))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self._join(o)
        if d is None:
            return QuadScalar._raw(self._a * o._a, Fraction(0), None)
        return QuadScalar._raw(
            self._a * o._a + self._b * o._b * d,
            self._a * o._b + self._b * o._a,
            d,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __neg__(self) -> "QuadScalar":
        return QuadScalar._raw(-self._a, -self._b, self._d)

    def __pos__(self) -> "QuadScalar":
        return self

    def __abs__(self) -> "QuadScalar":
        return -self if self.sign() < 0 else self

    def __pow__(self, exponent: int) -> "QuadScalar":
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = QuadScalar._raw(Fraction(1), Fraction(0), None)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def conjugate(self) -> "QuadScalar":
        return QuadScalar._raw(self._a, -self._b, self._d)

    def norm(self) -> Fraction:
        """Field norm a^2 - d*b^2."""
        if self._d is None:
            return self._a * self._a
        return self._a * self._a - self._d * self._b * self._b

    def inverse(self) -> "QuadScalar":
        """(a + b*sqrt(d))^-1 = (a - b*sqrt(d)) / (a^2 - d*b^2)."""
        if not self:
            raise ZeroDivisionError("inverse of zero QuadScalar")
        n = self.norm()
        return QuadScalar._raw(self._a / n, -self._b / n, self._d)

    # ------------------------------------------------------------------
    # Order and comparison
    # ------------------------------------------------------------------

    def sign(self) -> int:
        return quad_sign(self._a, self._b, self._d)

    def __bool__(self) -> bool:
        return self._a != 0 or self._b != 0

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._a == o._a and self._b == o._b and (self._b == 0 or self._d == o._d)

    def __hash__(self) -> int:
        if self._b == 0:
            return hash(self._a)
        return hash((self._a, self._b, self._d))

    def __lt__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __le__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() <= 0

    def __gt__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() > 0

    def __ge__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() >= 0

    # ------------------------------------------------------------------
    # Approximation layer
    # ------------------------------------------------------------------

    def to_float(self) -> float:
        """
        Nearest double, for display and diagnostics only.

        Raises:
            OverflowError: value does not fit in a double
        """
        with localcontext() as ctx:
            ctx.prec = _FLOAT_PRECISION
            a = Decimal(self._a.numerator) / Decimal(self._a.denominator)
            if self._b == 0:
                value = a
            else:
                b = Decimal(self._b.numerator) / Decimal(self._b.denominator)
                root = Decimal(self._d).sqrt()
                if self.sign() != 0 and (self._a > 0) != (self._b > 0) and self._a != 0:
                    # opposite signs: use the conjugate form to avoid cancellation
                    n = self.norm()
                    value = (Decimal(n.numerator) / Decimal(n.denominator)) / (a - b * root)
                else:
                    value = a + b * root
        result = float(value)
        if math.isinf(result):
            raise OverflowError(f"{format_scalar(self)} does not fit in a double")
        return result

    def __float__(self) -> float:
        return self.to_float()

    def __repr__(self) -> str:
        return f"QuadScalar('{format_scalar(self)}')"

    def __str__(self) -> str:
        return format_scalar(self)


ZERO = QuadScalar(0)
ONE = QuadScalar(1)


def _format_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_scalar(x: Union[QuadScalar, Number]) -> str:
    """Canonical grammar string for an exact scalar."""
    if not isinstance(x, QuadScalar):
        return _format_rational(Fraction(x))
    if x.b == 0:
        return _format_rational(x.a)
    tail = f"{_format_rational(abs(x.b))}*sqrt({x.d})"
    if x.a == 0:
        return f"-{tail}" if x.b < 0 else tail
    return f"{_format_rational(x.a)}{'-' if x.b < 0 else '+'}{tail}"


def _parse_rational(text: str) -> Fraction:
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise ScalarParseError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den else 1)


def parse_scalar(text: str, d: Optional[int] = None) -> QuadScalar:
    """
    Parse the exact scalar grammar.

    Args:
        text: grammar string, whitespace ignored
        d: field parameter of the surrounding context; a sqrt(e) with e != d is rejected

    Returns:
        QuadScalar in canonical form

    Raises:
        ScalarParseError: text does not follow the grammar
        FieldMismatchError: the sqrt parameter disagrees with d
    """
    if not isinstance(text, str):
        raise ScalarParseError(f"expected a grammar string, got {type(text).__name__}")
    compact = "".join(text.split())
    match = _SCALAR_RE.match(compact)
    if not compact or match is None:
        raise ScalarParseError(f"invalid scalar {text!r}")

    a = _parse_rational(match["a"].lstrip("+")) if match["a"] is not None else Fraction(0)
    if match["d"] is None:
        return QuadScalar._raw(a, Fraction(0), None)

    root = int(match["d"])
    if not is_squarefree(root):
        raise ScalarParseError(f"sqrt({root}) is not a square-free integer > 1 in {text!r}")
    if d is not None and root != d:
        raise FieldMismatchError(f"{text!r} uses sqrt({root}) in a sqrt({d}) context")
    b = _parse_rational(match["b"]) if match["b"] is not None else Fraction(1)
    if match["sign"] == "-":
        b = -b
    return QuadScalar._raw(a, b, root)
