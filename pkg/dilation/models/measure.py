"""
Coefficient masks and discrete signed measures on M^-n Gamma.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

from dilation.exceptions import DilationMismatchError, MaskError
from dilation.models.lattice import ORIGIN, Dilation, LatticeElem
from dilation.models.scalarfield import ONE, ZERO, QuadScalar

HALF = QuadScalar(Fraction(1, 2))


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_APPLICABLE = "not_applicable"

    @property
    def ok(self) -> bool:
        return self is CheckStatus.PASS


@dataclass(frozen=True)
class CoefficientMask:
    """
    Finite map k -> p_k with sum p_k = 1 on a dilation context.

    Zero coefficients are dropped on construction, so ``support`` is exactly
    the set of k with p_k != 0. Insertion order is preserved.
    """

    dilation: Dilation
    coeffs: Dict[LatticeElem, QuadScalar]
    field_d: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        cleaned = {LatticeElem(*k): QuadScalar._coerce(p) for k, p in self.coeffs.items()}
        if any(p is None for p in cleaned.values()):
            raise MaskError("mask coefficients must be exact scalars")
        cleaned = {k: p for k, p in cleaned.items() if p}
        if not cleaned:
            raise MaskError("mask support is empty")
        if self.dilation is Dilation.LINE and any(k.im for k in cleaned):
            raise MaskError("line mask keys must be integers")
        for p in cleaned.values():
            if p.d is not None and self.field_d is not None and p.d != self.field_d:
                raise MaskError(f"coefficient {p} is outside the sqrt({self.field_d}) field")
        total = sum(cleaned.values(), ZERO)
        if total != ONE:
            raise MaskError(f"mask coefficients sum to {total}, expected 1")
        object.__setattr__(self, "coeffs", cleaned)

    @property
    def support(self) -> List[LatticeElem]:
        return list(self.coeffs)

    def p(self, k: LatticeElem) -> QuadScalar:
        return self.coeffs.get(k, ZERO)

    def items(self) -> Iterator[Tuple[LatticeElem, QuadScalar]]:
        return iter(self.coeffs.items())

    def __len__(self) -> int:
        return len(self.coeffs)

    def max_norm_sq(self, shifts: Tuple[int, ...] = (0,)) -> int:
        """max |k - delta|^2 over the support and the given real shifts delta."""
        return max(
            (k.re - delta) ** 2 + k.im**2 for k in self.coeffs for delta in shifts
        )


@dataclass
class DiscreteMeasure:
    """Scale-n signed measure: weight w at key g sits on the point M^-n g."""

    dilation: Dilation
    scale: int
    weights: Dict[LatticeElem, QuadScalar] = field(default_factory=dict)

    def __post_init__(self):
        self.weights = {g: w for g, w in self.weights.items() if w}

    def total_mass(self) -> QuadScalar:
        return sum(self.weights.values(), ZERO)

    def tv_norm(self) -> QuadScalar:
        return sum((abs(w) for w in self.weights.values()), ZERO)

    def sum_squares(self) -> QuadScalar:
        return sum((w * w for w in self.weights.values()), ZERO)

    def support(self) -> List[LatticeElem]:
        return sorted(self.weights)

    def weight(self, g: LatticeElem) -> QuadScalar:
        return self.weights.get(g, ZERO)

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.dilation is other.dilation
            and self.scale == other.scale
            and self.weights == other.weights
        )


def delta(dilation: Dilation, scale: int = 0) -> DiscreteMeasure:
    return DiscreteMeasure(dilation, scale, {ORIGIN: ONE})


def mask_mu1(mask: CoefficientMask) -> DiscreteMeasure:
    """mu_1 = sum_k p_k delta_{M^-1 k}."""
    return DiscreteMeasure(mask.dilation, 1, dict(mask.coeffs))


def pushforward_d(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Push forward by x -> M^-1 x: same keys, scale + 1."""
    return DiscreteMeasure(mu.dilation, mu.scale + 1, dict(mu.weights))


def rescale(mu: DiscreteMeasure, scale: int) -> DiscreteMeasure:
    """Re-key mu at a finer scale without moving any point."""
    if scale < mu.scale:
        raise ValueError(f"cannot coarsen scale {mu.scale} to {scale}")
    steps = scale - mu.scale
    return DiscreteMeasure(
        mu.dilation,
        scale,
        {mu.dilation.mul_m_power(g, steps): w for g, w in mu.weights.items()},
    )


def convolve(mu: DiscreteMeasure, nu: DiscreteMeasure) -> DiscreteMeasure:
    """Exact convolution at the finer of the two scales."""
    if mu.dilation is not nu.dilation:
        raise DilationMismatchError(f"cannot convolve {mu.dilation.value} with {nu.dilation.value}")
    scale = max(mu.scale, nu.scale)
    left, right = rescale(mu, scale), rescale(nu, scale)
    out: Dict[LatticeElem, QuadScalar] = defaultdict(lambda: ZERO)
    for x, wx in left.weights.items():
        for y, wy in right.weights.items():
            out[x + y] = out[x + y] + wx * wy
    return DiscreteMeasure(mu.dilation, scale, dict(out))


def tv_norm(mu: DiscreteMeasure) -> QuadScalar:
    return mu.tv_norm()


def total_mass(mu: DiscreteMeasure) -> QuadScalar:
    return mu.total_mass()


# ----------------------------------------------------------------------
# Condition checkers
# ----------------------------------------------------------------------


@dataclass
class ProbabilityReport:
    """Nonnegativity and even/odd coset sums of a mask, all exact."""

    all_nonneg: bool
    even_sum: QuadScalar
    odd_sum: QuadScalar
    negative_keys: List[LatticeElem] = field(default_factory=list)

    @property
    def absolutely_continuous_criterion(self) -> bool:
        return self.all_nonneg and self.even_sum == HALF and self.odd_sum == HALF

    @property
    def status(self) -> CheckStatus:
        return CheckStatus.PASS if self.absolutely_continuous_criterion else CheckStatus.FAIL


def check_probability(mask: CoefficientMask) -> ProbabilityReport:
    even, odd = ZERO, ZERO
    negatives = []
    for k, p in mask.items():
        if p.sign() < 0:
            negatives.append(k)
        if mask.dilation.parity(k):
            odd = odd + p
        else:
            even = even + p
    return ProbabilityReport(
        all_nonneg=not negatives, even_sum=even, odd_sum=odd, negative_keys=negatives
    )


@dataclass
class OrthonormalityReport:
    """Per-shift sums sum_k p_k p_{k+Mi}; pass iff 1/2 at i = 0 and 0 elsewhere."""

    shift_sums: Dict[LatticeElem, QuadScalar]
    worst_shift: Optional[LatticeElem] = None

    @property
    def passed(self) -> bool:
        return self.worst_shift is None

    @property
    def status(self) -> CheckStatus:
        return CheckStatus.PASS if self.passed else CheckStatus.FAIL


def check_orthonormality(mask: CoefficientMask) -> OrthonormalityReport:
    """
    Conjugate-quadrature-filter conditions.

    Only shifts i realised by some pair (k, k + Mi) inside the support are
    listed; every other shift sum is structurally zero.
    """
    dilation = mask.dilation
    shifts = {ORIGIN}
    for k in mask.support:
        for k2 in mask.support:
            i = dilation.div_m(k2 - k)
            if i is not None:
                shifts.add(i)

    sums: Dict[LatticeElem, QuadScalar] = {}
    worst = None
    for i in sorted(shifts):
        mi = dilation.mul_m(i)
        s = sum((p * mask.p(k + mi) for k, p in mask.items()), ZERO)
        sums[i] = s
        expected = HALF if i == ORIGIN else ZERO
        if s != expected and worst is None:
            worst = i
    return OrthonormalityReport(shift_sums=sums, worst_shift=worst)
