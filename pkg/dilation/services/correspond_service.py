"""
Correspond Service - transport between the dyadic line and the twin dragon.

The binary expansion x = sum gamma_j 2^-j of a point in [0, 1) is mapped to the
twin-dragon point sum gamma_j (1+i)^-j with the same digits. Step functions on
dyadic intervals become step functions on sub-tiles; tile measures and the
Lebesgue measure are preserved.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import pandas as pd

from dilation.exceptions import EigenspaceError, LatticeParseError, NotApplicableError
from dilation.linalg import null_space, subtract_identity
from dilation.models.lattice import (
    Dilation,
    LatticeElem,
    RadixAddress,
    TileValueMap,
    address_point,
    greedy_digits,
)
from dilation.models.measure import CoefficientMask
from dilation.models.scalarfield import ZERO, QuadScalar, format_scalar

logger = logging.getLogger(__name__)


@dataclass
class LiftedFunction:
    """Twin-dragon step function at depth n, indexed by radix address."""

    depth: int
    values: Dict[str, QuadScalar] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class PointValues:
    """Exact values of the line scaling function at dyadic points up to 2^-depth."""

    depth: int
    values: Dict[Fraction, QuadScalar]

    def at(self, x: Fraction) -> QuadScalar:
        return self.values.get(Fraction(x), ZERO)


@dataclass
class DiscontinuityReport:
    """Limits of the lifted function at -i/2 from inside the sub-tiles T.01 and T.10."""

    along_t01: QuadScalar
    along_t10: QuadScalar

    @property
    def ratio(self) -> Optional[QuadScalar]:
        if not self.along_t01:
            return None
        return self.along_t10 / self.along_t01

    @property
    def discontinuous(self) -> bool:
        return self.along_t01 != self.along_t10

    def summary(self) -> str:
        ratio = self.ratio
        return (
            f"limit via T.01 = {format_scalar(self.along_t01)}, "
            f"via T.10 = {format_scalar(self.along_t10)}, "
            f"ratio = {format_scalar(ratio) if ratio is not None else 'undefined'}"
        )


def lift_dyadic(digits: str) -> Tuple[Fraction, Fraction]:
    """Twin-dragon point with the given binary digits."""
    return address_point(RadixAddress(digits, Dilation.PLANE))


def unlift_address(address: str) -> Fraction:
    """Dyadic rational sum gamma_j 2^-j with the digits of a twin-dragon address."""
    if any(c not in "01" for c in address):
        raise LatticeParseError(f"radix address must be a 0/1 string, got {address!r}")
    return address_point(RadixAddress(address, Dilation.LINE))[0]


class CorrespondService:
    """Service for line <-> plane transport and exact point values."""

    def lift_step_function(self, values: TileValueMap, density: bool = True) -> LiftedFunction:
        """
        Restrict a line step function to [0, 1) and re-index it by radix address.

        Args:
            values: Line tile measures at scale n
            density: Carry value * 2^n instead of the raw tile measure

        Returns:
            LiftedFunction with one entry per scale-n dyadic interval inside [0, 1)
        """
        if values.dilation is not Dilation.LINE:
            raise NotApplicableError("only line step functions can be lifted")
        n = values.scale
        factor = 2**n if density else 1
        lifted: Dict[str, QuadScalar] = {}
        for g in range(2**n):
            address = greedy_digits(Dilation.LINE, LatticeElem(g, 0), n)
            value = values.values.get(LatticeElem(g, 0), ZERO)
            lifted[address.digits] = value * factor  # type: ignore[union-attr]
        logger.debug(f"Lifted {len(lifted)} sub-tiles at depth {n}")
        return LiftedFunction(depth=n, values=lifted)

    @staticmethod
    def lifted_frame(lifted: LiftedFunction) -> pd.DataFrame:
        """Rows address, re, im, value_float; (re, im) is the sub-tile's corner point."""
        rows = []
        for address in sorted(lifted.values):
            x, y = lift_dyadic(address)
            rows.append(
                {
                    "address": address,
                    "re": float(x),
                    "im": float(y),
                    "value_float": lifted.values[address].to_float(),
                }
            )
        return pd.DataFrame(rows, columns=["address", "re", "im", "value_float"])

    # ------------------------------------------------------------------
    # Exact point values
    # ------------------------------------------------------------------

    def integer_values(self, mask: CoefficientMask) -> Dict[int, QuadScalar]:
        """
        phi at the integers of [kmin, kmax - 1], with phi(kmax) = 0 and sum = 1.

        phi(i) = 2 sum_j p_(2i - j) phi(j) on that range.

        Raises:
            NotApplicableError: plane mask
            EigenspaceError: the integer eigenproblem is not uniquely solvable
        """
        if mask.dilation is not Dilation.LINE:
            raise NotApplicableError("point values are computed on the line only")
        ks = [k.re for k in mask.support]
        lo, hi = min(ks), max(ks)
        grid = list(range(lo, hi))
        matrix = [[mask.p(LatticeElem(2 * i - j, 0)) * 2 for j in grid] for i in grid]
        basis = null_space(subtract_identity(matrix)) if grid else []
        if len(basis) != 1:
            raise EigenspaceError(len(basis), "integer point values")
        total = sum(basis[0], ZERO)
        if not total:
            raise EigenspaceError(len(basis), "integer values sum to zero")
        inv = total.inverse()
        return {i: v * inv for i, v in zip(grid, basis[0])}

    def point_values(self, mask: CoefficientMask, depth: int) -> PointValues:
        """
        Exact phi on the dyadic grid 2^-depth Z via phi(x) = 2 sum_k p_k phi(2x - k).
        """
        ints = self.integer_values(mask)
        values: Dict[Fraction, QuadScalar] = {Fraction(i): v for i, v in ints.items() if v}
        ks = [k.re for k in mask.support]
        lo, hi = min(ks), max(ks)
        for level in range(1, depth + 1):
            scale = 2**level
            for m in range(lo * scale + 1, hi * scale, 2):
                x = Fraction(m, scale)
                acc = ZERO
                for k, p in mask.items():
                    prev = values.get(2 * x - k.re)
                    if prev is not None:
                        acc = acc + p * prev
                acc = acc * 2
                if acc:
                    values[x] = acc
        return PointValues(depth=depth, values=values)

    def discontinuity_probe(self, mask: CoefficientMask) -> DiscontinuityReport:
        """
        Values of phi at 1/4 and 3/4.

        The lift maps .01 and .10111... to the same point -i/2, so these are
        its one-sided limits there; a ratio other than 1 means the lift is
        discontinuous at -i/2.
        """
        pv = self.point_values(mask, 2)
        report = DiscontinuityReport(along_t01=pv.at(Fraction(1, 4)), along_t10=pv.at(Fraction(3, 4)))
        logger.info(f"Discontinuity probe: {report.summary()}")
        return report

    @staticmethod
    def point_frame(pv: PointValues) -> pd.DataFrame:
        rows = [
            {"x": str(x), "value_exact": format_scalar(v), "value_float": v.to_float()}
            for x, v in sorted(pv.values.items())
        ]
        return pd.DataFrame(rows, columns=["x", "value_exact", "value_float"])

    def half_tile_frame(self, lifted: LiftedFunction) -> List[Tuple[str, float]]:
        """Mean lifted value on T0 and T1 (addresses starting with 0 and with 1)."""
        out = []
        for prefix in ("0", "1"):
            vals = [v.to_float() for a, v in lifted.values.items() if a.startswith(prefix)]
            out.append((prefix, sum(vals) / len(vals) if vals else 0.0))
        return out
