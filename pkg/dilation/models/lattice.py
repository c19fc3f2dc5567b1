"""
Dilation contexts and lattice arithmetic.

Two contexts are supported: the dyadic line (lattice Z, M = 2) and the
twin-dragon plane (Gaussian integers, M = 1 + i). Both have |det M| = 2 and
digit set {0, 1}. A lattice element g at scale n denotes the point M^-n g and
the sub-tile M^-n (g + T), where T is [0, 1] or the twin dragon.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, NamedTuple, Optional, Tuple

from dilation.exceptions import LatticeParseError
from dilation.models.scalarfield import QuadScalar


class LatticeElem(NamedTuple):
    """Integer (im == 0) or Gaussian integer re + im*i."""

    re: int
    im: int = 0

    def __add__(self, other: "LatticeElem") -> "LatticeElem":  # type: ignore[override]
        return LatticeElem(self.re + other[0], self.im + other[1])

    def __sub__(self, other: "LatticeElem") -> "LatticeElem":
        return LatticeElem(self.re - other[0], self.im - other[1])

    def __neg__(self) -> "LatticeElem":
        return LatticeElem(-self.re, -self.im)

    def norm_sq(self) -> int:
        return self.re * self.re + self.im * self.im


ORIGIN = LatticeElem(0, 0)
UNIT = LatticeElem(1, 0)

_REAL_RE = re.compile(r"^[+-]?\d+$")
_IMAG_RE = re.compile(r"^(?P<sign>[+-]?)(?P<mag>\d*)i$")
_COMPLEX_RE = re.compile(r"^(?P<re>[+-]?\d+)(?P<sign>[+-])(?P<mag>\d*)i$")


class Dilation(str, Enum):
    """Dilation context: which lattice, which M."""

    LINE = "line"
    PLANE = "plane"

    @property
    def det_abs(self) -> int:
        return 2

    @property
    def modulus_sq(self) -> int:
        """|M|^2: 4 on the line, 2 on the plane."""
        return 4 if self is Dilation.LINE else 2

    @property
    def modulus(self) -> QuadScalar:
        """|M| as an exact scalar: 2 or sqrt(2)."""
        return QuadScalar(2) if self is Dilation.LINE else QuadScalar.sqrt(2)

    def mul_m(self, g: LatticeElem) -> LatticeElem:
        if self is Dilation.LINE:
            return LatticeElem(2 * g.re, 0)
        return LatticeElem(g.re - g.im, g.re + g.im)

    def mul_m_power(self, g: LatticeElem, n: int) -> LatticeElem:
        for _ in range(n):
            g = self.mul_m(g)
        return g

    def div_m(self, g: LatticeElem) -> Optional[LatticeElem]:
        """g / M, or None when g is not in M*Gamma."""
        if self is Dilation.LINE:
            if g.re % 2:
                return None
            return LatticeElem(g.re // 2, 0)
        s = g.re + g.im
        if s % 2:
            return None
        return LatticeElem(s // 2, (g.im - g.re) // 2)

    def parity(self, g: LatticeElem) -> int:
        """0 for evens (g in M*Gamma), 1 for odds."""
        if self is Dilation.LINE:
            return g.re % 2
        return (g.re + g.im) % 2

    def elem(self, re: int, im: int = 0) -> LatticeElem:
        if self is Dilation.LINE and im:
            raise LatticeParseError(f"line lattice element cannot have imaginary part {im}")
        return LatticeElem(re, im)

    # ------------------------------------------------------------------
    # Text forms
    # ------------------------------------------------------------------

    def format_elem(self, g: LatticeElem) -> str:
        if self is Dilation.LINE or g.im == 0:
            return str(g.re)
        mag = "" if abs(g.im) == 1 else str(abs(g.im))
        if g.re == 0:
            return f"{'-' if g.im < 0 else ''}{mag}i"
        return f"{g.re}{'-' if g.im < 0 else '+'}{mag}i"

    def parse_elem(self, text: str) -> LatticeElem:
        compact = "".join(str(text).split())
        if _REAL_RE.match(compact):
            return LatticeElem(int(compact), 0)
        if self is Dilation.PLANE:
            m = _IMAG_RE.match(compact)
            if m:
                return LatticeElem(0, _signed(m["sign"], m["mag"]))
            m = _COMPLEX_RE.match(compact)
            if m:
                return LatticeElem(int(m["re"]), _signed(m["sign"], m["mag"]))
        raise LatticeParseError(f"invalid {self.value} lattice element {text!r}")

    def scaled_point(self, g: LatticeElem, n: int) -> Tuple[Fraction, Fraction]:
        """Exact coordinates of M^-n g."""
        if self is Dilation.LINE:
            return Fraction(g.re, 2**n), Fraction(0)
        x, y = Fraction(g.re), Fraction(g.im)
        for _ in range(n):
            x, y = (x + y) / 2, (y - x) / 2
        return x, y


def _signed(sign: str, mag: str) -> int:
    value = int(mag) if mag else 1
    return -value if sign == "-" else value


def greedy_expand(dilation: Dilation, g: LatticeElem, n: int) -> Tuple[LatticeElem, str]:
    """
    Strip n radix digits off g.

    Returns:
        (residue, digits) with g = M^n * residue + sum_j M^(n-j) gamma_j and
        digits = gamma_1 ... gamma_n (address order)
    """
    extracted = []
    for _ in range(n):
        gamma = dilation.parity(g)
        extracted.append("1" if gamma else "0")
        g = dilation.div_m(LatticeElem(g.re - gamma, g.im))  # type: ignore[assignment]
    return g, "".join(reversed(extracted))


@dataclass(frozen=True)
class RadixAddress:
    """Finite {0,1} digit string gamma_1 ... gamma_n addressing the sub-tile M^-n (g + T)."""

    digits: str
    dilation: Dilation

    def __post_init__(self):
        if any(c not in "01" for c in self.digits):
            raise LatticeParseError(f"radix address must be a 0/1 string, got {self.digits!r}")

    @property
    def depth(self) -> int:
        return len(self.digits)

    def lattice_key(self) -> LatticeElem:
        """g = sum_j M^(n-j) gamma_j."""
        g = ORIGIN
        for c in self.digits:
            g = self.dilation.mul_m(g)
            if c == "1":
                g = g + UNIT
        return g

    def point(self) -> Tuple[Fraction, Fraction]:
        return address_point(self)

    def __str__(self) -> str:
        return self.digits


def greedy_digits(dilation: Dilation, g: LatticeElem, n: int) -> Optional[RadixAddress]:
    """
    Canonical tile membership: the address of M^-n g inside T, or None.

    Boundary lattice points whose greedy residue is not 0 are reported as
    outside; they belong to an adjacent translate.
    """
    residue, digits = greedy_expand(dilation, g, n)
    if residue != ORIGIN:
        return None
    return RadixAddress(digits, dilation)


def address_point(address: RadixAddress) -> Tuple[Fraction, Fraction]:
    """Exact sum_j gamma_j M^-j as (x, y); y is 0 on the line."""
    x, y = Fraction(0), Fraction(0)
    line = address.dilation is Dilation.LINE
    for c in reversed(address.digits):
        if c == "1":
            x += 1
        if line:
            x = x / 2
        else:
            x, y = (x + y) / 2, (y - x) / 2
    return x, y


@dataclass
class TileValueMap:
    """Tile measures at scale n: g -> mu(M^-n (g + T))."""

    dilation: Dilation
    scale: int
    values: Dict[LatticeElem, QuadScalar] = field(default_factory=dict)

    def total(self) -> QuadScalar:
        return sum(self.values.values(), QuadScalar(0))

    def keys_sorted(self) -> Iterable[LatticeElem]:
        return sorted(self.values)

    def __len__(self) -> int:
        return len(self.values)
