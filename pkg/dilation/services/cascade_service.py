"""
Cascade Service - discrete approximants mu_n of the dilation equation.

This service handles:
1. The one-step recursion mu_n -> mu_{n+1} (exact, integer kernel)
2. Support sets S_n and the support radius R
3. The brute-force digit-tuple oracle
4. Lemma-level verifiers (weight bounds, sum of squares, TV profile)
5. Floating-point diagnostics (convergence probe, float iterate)

Exact levels are carried as integer pairs over a common denominator:
w(g) = (A + B*sqrt(d)) / D^n, where D is the least common denominator of
the mask. QuadScalar values are only built when a caller asks for them.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd

from dilation.config import settings
from dilation.exceptions import ResourceLimitError
from dilation.models.lattice import Dilation, LatticeElem
from dilation.models.measure import (
    CheckStatus,
    CoefficientMask,
    DiscreteMeasure,
    check_orthonormality,
    check_probability,
)
from dilation.models.scalarfield import ZERO, QuadScalar, format_scalar, quad_sign
from dilation.services.parallel import map_chunks, merge_sums

logger = logging.getLogger(__name__)

PairMap = Dict[LatticeElem, Tuple[int, int]]

# Key packing for the sparse float iterate on the plane
_KEY_OFFSET = 1 << 30
_KEY_WIDTH = 1 << 31


@dataclass(frozen=True)
class ScaledMask:
    """Mask coefficients as integers over a common denominator: p_k = (a_k + b_k sqrt(d)) / D."""

    dilation: Dilation
    denominator: int
    d: int  # 0 for rational masks
    terms: Tuple[Tuple[LatticeElem, int, int], ...]

    @classmethod
    def from_mask(cls, mask: CoefficientMask) -> "ScaledMask":
        den = 1
        for p in mask.coeffs.values():
            den = math.lcm(den, p.a.denominator, p.b.denominator)
        d = next((p.d for p in mask.coeffs.values() if p.d is not None), 0)
        terms = tuple((k, int(p.a * den), int(p.b * den)) for k, p in mask.items())
        return cls(mask.dilation, den, d, terms)


@dataclass
class ScaledLevel:
    """mu_n in integer form: weight(g) = (A + B sqrt(d)) / denominator."""

    dilation: Dilation
    scale: int
    denominator: int
    d: int
    pairs: PairMap

    def _scalar(self, A: int, B: int) -> QuadScalar:
        return QuadScalar(Fraction(A, self.denominator), Fraction(B, self.denominator), self.d or None)

    def weight(self, g: LatticeElem) -> QuadScalar:
        A, B = self.pairs.get(g, (0, 0))
        return self._scalar(A, B)

    def to_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(
            self.dilation,
            self.scale,
            {g: self._scalar(A, B) for g, (A, B) in self.pairs.items()},
        )

    def total_mass(self) -> QuadScalar:
        return self._scalar(sum(A for A, _ in self.pairs.values()), sum(B for _, B in self.pairs.values()))

    def tv_norm(self) -> QuadScalar:
        sa = sb = 0
        d = self.d or None
        for A, B in self.pairs.values():
            s = quad_sign(A, B, d)
            sa += s * A
            sb += s * B
        return self._scalar(sa, sb)

    def sum_squares(self) -> QuadScalar:
        sa = sum(A * A + self.d * B * B for A, B in self.pairs.values())
        sb = sum(2 * A * B for A, B in self.pairs.values())
        den2 = self.denominator * self.denominator
        return QuadScalar(Fraction(sa, den2), Fraction(sb, den2), self.d or None)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class SupportBound:
    """Closed ball of radius R = max|k| / (|M| - 1) containing every S_n."""

    dilation: Dilation
    max_norm_sq: int
    radius_sq: QuadScalar

    @property
    def radius(self) -> float:
        return math.sqrt(self.radius_sq.to_float())

    def contains(self, key: LatticeElem, n: int) -> bool:
        """Exact test |M^-n key| <= R."""
        scaled = self.radius_sq * (self.dilation.modulus_sq**n)
        return (scaled - key.norm_sq()).sign() >= 0


@dataclass
class LemmaReport:
    """Outcome of a per-level exact verifier."""

    name: str
    status: CheckStatus
    levels_checked: int = 0
    worst_level: Optional[int] = None
    worst_key: Optional[LatticeElem] = None
    worst_value: Optional[float] = None
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status is CheckStatus.PASS


@dataclass
class FloatMeasure:
    """Floating-point mu_n for diagnostics; keys are ints (line) or (re, im) rows (plane)."""

    dilation: Dilation
    scale: int
    keys: np.ndarray
    weights: np.ndarray = field(repr=False)

    def points(self) -> np.ndarray:
        """Real points on the line, complex points on the plane."""
        if self.dilation is Dilation.LINE:
            return self.keys.astype(np.float64) / float(2**self.scale)
        z = self.keys[:, 0].astype(np.float64) + 1j * self.keys[:, 1].astype(np.float64)
        return z * (1 + 1j) ** (-self.scale)

    def tile_keys(self, scale: int) -> np.ndarray:
        """Greedy scale-`scale` tile key of every point (vectorized greedy_expand)."""
        steps = self.scale - scale
        if steps < 0:
            raise ValueError(f"cannot refine scale {self.scale} to {scale}")
        if self.dilation is Dilation.LINE:
            return np.floor_divide(self.keys, 2**steps)
        re = self.keys[:, 0].copy()
        im = self.keys[:, 1].copy()
        for _ in range(steps):
            gamma = (re + im) & 1
            re = re - gamma
            re, im = (re + im) // 2, (im - re) // 2
        return np.stack([re, im], axis=1)


def _add_pairs(x: Tuple[int, int], y: Tuple[int, int]) -> Tuple[int, int]:
    return x[0] + y[0], x[1] + y[1]


def _cascade_step(scaled: ScaledMask, items: Sequence[Tuple[LatticeElem, Tuple[int, int]]]) -> PairMap:
    """new[M g + k] += p_k * w[g] on a chunk of keys."""
    mul_m = scaled.dilation.mul_m
    d = scaled.d
    out: PairMap = {}
    for g, (A, B) in items:
        base = mul_m(g)
        for k, a, b in scaled.terms:
            key = LatticeElem(base.re + k.re, base.im + k.im)
            na = a * A + b * B * d
            nb = a * B + b * A
            cur = out.get(key)
            out[key] = (na, nb) if cur is None else (cur[0] + na, cur[1] + nb)
    return out


class CascadeService:
    """Service for the discrete cascade mu_n and its invariants."""

    def __init__(
        self,
        support_cap: Optional[int] = None,
        oracle_cap: Optional[int] = None,
        threads: Optional[int] = None,
        float_support_cap: Optional[int] = None,
    ):
        """
        Initialize cascade service.

        Args:
            support_cap: Maximum keys per exact measure or support set
            oracle_cap: Maximum digit tuples for enumerate_oracle
            threads: Worker count for per-level propagation
            float_support_cap: Maximum entries in float diagnostics
        """
        self.support_cap = support_cap if support_cap is not None else settings.support_cap
        self.oracle_cap = oracle_cap if oracle_cap is not None else settings.oracle_cap
        self.threads = threads if threads is not None else settings.threads
        self.float_support_cap = (
            float_support_cap if float_support_cap is not None else settings.float_support_cap
        )

    def _check_cap(self, what: str, size: int, cap: Optional[int] = None) -> None:
        cap = self.support_cap if cap is None else cap
        if size > cap:
            raise ResourceLimitError(what, size, cap)

    # ------------------------------------------------------------------
    # Exact iteration
    # ------------------------------------------------------------------

    def iterate_scaled(self, mask: CoefficientMask, n: int) -> Iterator[ScaledLevel]:
        """Yield mu_1 .. mu_n in integer form."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        scaled = ScaledMask.from_mask(mask)
        pairs: PairMap = {k: (a, b) for k, a, b in scaled.terms}
        den = scaled.denominator
        yield ScaledLevel(mask.dilation, 1, den, scaled.d, pairs)

        step = partial(_cascade_step, scaled)
        for level in range(2, n + 1):
            parts = map_chunks(step, list(pairs.items()), self.threads)
            merged = merge_sums(parts, _add_pairs)
            pairs = {g: v for g, v in merged.items() if v[0] or v[1]}
            self._check_cap(f"support of mu_{level}", len(pairs))
            den *= scaled.denominator
            logger.debug(f"mu_{level}: {len(pairs)} keys")
            yield ScaledLevel(mask.dilation, level, den, scaled.d, pairs)

    def iterate_levels(self, mask: CoefficientMask, n: int) -> Iterator[DiscreteMeasure]:
        for level in self.iterate_scaled(mask, n):
            yield level.to_measure()

    def iterate(self, mask: CoefficientMask, n: int) -> DiscreteMeasure:
        """
        Exact mu_n by the one-step recursion w_n(x) = sum_k p_k w_{n-1}(x - M^-n k).

        Raises:
            ResourceLimitError: support exceeds the configured cap
        """
        last = None
        for last in self.iterate_scaled(mask, n):
            pass
        logger.info(f"Computed mu_{n} for '{mask.name}': {len(last)} support points")
        return last.to_measure()

    # ------------------------------------------------------------------
    # Supports
    # ------------------------------------------------------------------

    def support_levels(self, mask: CoefficientMask, n: int) -> Iterator[Set[LatticeElem]]:
        """Yield S_1 .. S_n as scale-n key sets (weights ignored)."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        mul_m = mask.dilation.mul_m
        support = mask.support
        points = set(support)
        yield points
        for level in range(2, n + 1):
            nxt = set()
            for g in points:
                base = mul_m(g)
                for k in support:
                    nxt.add(LatticeElem(base.re + k.re, base.im + k.im))
            self._check_cap(f"S_{level}", len(nxt))
            points = nxt
            yield points

    def support_points(self, mask: CoefficientMask, n: int) -> Set[LatticeElem]:
        points: Set[LatticeElem] = set()
        for points in self.support_levels(mask, n):
            pass
        return points

    def support_radius(self, mask: CoefficientMask) -> SupportBound:
        """R = max|k| / (|M| - 1); on the plane R^2 = m (3 + 2 sqrt 2)."""
        m = mask.max_norm_sq()
        if mask.dilation is Dilation.LINE:
            radius_sq = QuadScalar(m)
        else:
            radius_sq = QuadScalar(3 * m, 2 * m, 2)
        return SupportBound(mask.dilation, m, radius_sq)

    def support_ball_contains(self, mask: CoefficientMask, key: LatticeElem, n: int) -> bool:
        return self.support_radius(mask).contains(key, n)

    # ------------------------------------------------------------------
    # Oracle
    # ------------------------------------------------------------------

    def enumerate_oracle(self, mask: CoefficientMask, n: int) -> DiscreteMeasure:
        """
        Brute-force w_n(x) = sum over digit tuples reaching x of prod p_{gamma_j}.

        Raises:
            ResourceLimitError: |support|^n exceeds the oracle cap
        """
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        items = list(mask.items())
        count = len(items) ** n
        self._check_cap("oracle digit tuples", count, self.oracle_cap)
        mul_m = mask.dilation.mul_m

        def walk(depth: int, key: LatticeElem, weight: QuadScalar, out: Dict) -> None:
            if depth == n:
                out[key] = out.get(key, ZERO) + weight
                return
            base = mul_m(key)
            for k, p in items:
                walk(depth + 1, LatticeElem(base.re + k.re, base.im + k.im), weight * p, out)

        def run(prefixes: Sequence[Tuple[LatticeElem, QuadScalar]]) -> Dict:
            out: Dict[LatticeElem, QuadScalar] = {}
            for k, p in prefixes:
                walk(1, k, p, out)
            return out

        parts = map_chunks(run, items, self.threads)
        weights = merge_sums(parts, lambda x, y: x + y)
        logger.debug(f"Oracle enumerated {count} tuples for n={n}")
        return DiscreteMeasure(mask.dilation, n, weights)

    # ------------------------------------------------------------------
    # Lemma verifiers
    # ------------------------------------------------------------------

    def verify_prob_bounds(self, mask: CoefficientMask, n: int) -> LemmaReport:
        """0 <= w_k(x) <= 2^-k for every level k <= n, exactly."""
        name = "weight bounds 0 <= w_n <= 2^-n"
        if not check_probability(mask).absolutely_continuous_criterion:
            return LemmaReport(
                name,
                CheckStatus.NOT_APPLICABLE,
                message="mask violates the probability / even-odd conditions",
            )
        d = None
        worst = (None, None, -math.inf)
        for level in self.iterate_scaled(mask, n):
            d = level.d or None
            two_n = 2**level.scale
            root = math.sqrt(level.d) if level.d else 0.0
            for g, (A, B) in level.pairs.items():
                lower_ok = quad_sign(A, B, d) >= 0
                upper_ok = quad_sign(level.denominator - two_n * A, -two_n * B, d) >= 0
                if not (lower_ok and upper_ok):
                    value = (A + B * root) / level.denominator
                    return LemmaReport(
                        name,
                        CheckStatus.FAIL,
                        levels_checked=level.scale,
                        worst_level=level.scale,
                        worst_key=g,
                        worst_value=value,
                        message=f"w_{level.scale} out of [0, 2^-{level.scale}] at key {g}",
                    )
                ratio = (A + B * root) * two_n / level.denominator
                if ratio > worst[2]:
                    worst = (level.scale, g, ratio)
        return LemmaReport(
            name,
            CheckStatus.PASS,
            levels_checked=n,
            worst_level=worst[0],
            worst_key=worst[1],
            worst_value=worst[2],
            message=f"max 2^n w_n = {worst[2]:.6g}",
        )

    def verify_sum_squares(self, mask: CoefficientMask, n: int) -> LemmaReport:
        """sum_x w_k(x)^2 = 2^-k for every level k <= n, exactly."""
        name = "sum of squares = 2^-n"
        if not check_orthonormality(mask).passed:
            return LemmaReport(
                name, CheckStatus.NOT_APPLICABLE, message="mask violates the orthonormality conditions"
            )
        for level in self.iterate_scaled(mask, n):
            sa = sum(A * A + level.d * B * B for A, B in level.pairs.values())
            sb = sum(A * B for A, B in level.pairs.values())
            if sa * 2**level.scale != level.denominator**2 or sb != 0:
                value = level.sum_squares().to_float()
                return LemmaReport(
                    name,
                    CheckStatus.FAIL,
                    levels_checked=level.scale,
                    worst_level=level.scale,
                    worst_value=value,
                    message=f"sum w_{level.scale}^2 = {value:.12g} != 2^-{level.scale}",
                )
        return LemmaReport(name, CheckStatus.PASS, levels_checked=n)

    def tv_profile(self, mask: CoefficientMask, n_max: int) -> pd.DataFrame:
        """
        Per-level TV norm against the bound sqrt(2^-n card S_n).

        Returns:
            DataFrame with columns n, card_support, card_ratio, tv, tv_exact, bound, bound_holds
        """
        rows = []
        levels = zip(self.iterate_scaled(mask, n_max), self.support_levels(mask, n_max))
        for level, points in levels:
            tv = level.tv_norm()
            card = len(points)
            ratio = QuadScalar(Fraction(card, 2**level.scale))
            rows.append(
                {
                    "n": level.scale,
                    "card_support": card,
                    "card_ratio": float(ratio.a),
                    "tv": tv.to_float(),
                    "tv_exact": format_scalar(tv),
                    "bound": math.sqrt(float(ratio.a)),
                    "bound_holds": (ratio - tv * tv).sign() >= 0,
                }
            )
        return pd.DataFrame(
            rows,
            columns=["n", "card_support", "card_ratio", "tv", "tv_exact", "bound", "bound_holds"],
        )

    # ------------------------------------------------------------------
    # Float diagnostics
    # ------------------------------------------------------------------

    def iterate_float(self, mask: CoefficientMask, n: int) -> FloatMeasure:
        """mu_n in double precision (dense convolution on the line, sparse on the plane)."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        coeffs = [(k, p.to_float()) for k, p in mask.items()]
        if mask.dilation is Dilation.LINE:
            kmin = min(k.re for k, _ in coeffs)
            kmax = max(k.re for k, _ in coeffs)
            filt = np.zeros(kmax - kmin + 1)
            for k, p in coeffs:
                filt[k.re - kmin] = p
            w = filt.copy()
            offset = kmin
            for level in range(2, n + 1):
                up = np.zeros(2 * len(w) - 1)
                up[::2] = w
                w = np.convolve(up, filt)
                offset = 2 * offset + kmin
                self._check_cap(f"float mu_{level}", len(w), self.float_support_cap)
            keys = np.arange(offset, offset + len(w), dtype=np.int64)
            return FloatMeasure(mask.dilation, n, keys, w)

        shifts = np.array([[k.re, k.im] for k, _ in coeffs], dtype=np.int64)
        probs = np.array([p for _, p in coeffs])
        keys = shifts.copy()
        w = probs.copy()
        for level in range(2, n + 1):
            base_re = keys[:, 0] - keys[:, 1]
            base_im = keys[:, 0] + keys[:, 1]
            re = (base_re[None, :] + shifts[:, 0:1]).ravel()
            im = (base_im[None, :] + shifts[:, 1:2]).ravel()
            ww = (probs[:, None] * w[None, :]).ravel()
            code = (re + _KEY_OFFSET) * _KEY_WIDTH + (im + _KEY_OFFSET)
            uniq, inverse = np.unique(code, return_inverse=True)
            w = np.bincount(inverse.reshape(-1), weights=ww, minlength=len(uniq))
            keys = np.stack([uniq // _KEY_WIDTH - _KEY_OFFSET, uniq % _KEY_WIDTH - _KEY_OFFSET], axis=1)
            self._check_cap(f"float mu_{level}", len(uniq), self.float_support_cap)
        return FloatMeasure(mask.dilation, n, keys, w)

    def _test_family(self, mask: CoefficientMask) -> List[Tuple[str, Callable[[np.ndarray], np.ndarray]]]:
        r = self.support_radius(mask).radius
        sigma = max(r / 4.0, 0.25)

        def bump(center: complex) -> Callable[[np.ndarray], np.ndarray]:
            return lambda x: np.exp(-np.abs(x - center) ** 2 / (2 * sigma**2))

        family: List[Tuple[str, Callable[[np.ndarray], np.ndarray]]] = [
            ("const", lambda x: np.ones(len(x)))
        ]
        if mask.dilation is Dilation.LINE:
            family.append(("x", lambda x: x))
            centers = [0.0, r / 2, r]
        else:
            family.append(("re", lambda z: z.real))
            family.append(("im", lambda z: z.imag))
            centers = [0.0, r / 2, 1j * r / 2]
        for c in centers:
            family.append((f"bump({c:.3g})", bump(c)))
        return family

    def convergence_probe(self, mask: CoefficientMask, n_max: int) -> pd.DataFrame:
        """
        Cauchy gaps |int f d mu_n - int f d mu_{n+1}| over a fixed test family.

        The family is: the constant 1, the coordinate function(s), and Gaussian
        bumps of width max(R/4, 1/4) centred inside the support ball.

        Returns:
            DataFrame with columns n, function, integral, gap (gap is NaN at n_max)
        """
        family = self._test_family(mask)
        integrals: Dict[str, List[float]] = {name: [] for name, _ in family}
        for n in range(1, n_max + 1):
            fm = self.iterate_float(mask, n)
            pts = fm.points()
            for fname, f in family:
                integrals[fname].append(float(np.dot(fm.weights, f(pts))))

        rows = []
        for fname, values in integrals.items():
            for i, value in enumerate(values):
                gap = abs(values[i + 1] - value) if i + 1 < len(values) else float("nan")
                rows.append({"n": i + 1, "function": fname, "integral": value, "gap": gap})
        return pd.DataFrame(rows, columns=["n", "function", "integral", "gap"])
