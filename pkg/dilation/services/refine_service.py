"""
Refine Service - tile measures at every scale from the scale-0 eigenvector.

value_{n+1}(h + M^n k) += p_k * value_n(h), i.e.
mu(M^-(n+1)(g + T)) = sum_k p_k mu(M^-n (g - M^n k + T)).
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from dilation.config import settings
from dilation.exceptions import NotApplicableError
from dilation.linalg import null_space, subtract_identity
from dilation.models.lattice import Dilation, LatticeElem, TileValueMap, greedy_expand
from dilation.models.measure import (
    CheckStatus,
    CoefficientMask,
    check_orthonormality,
    check_probability,
)
from dilation.models.scalarfield import ONE, ZERO, QuadScalar, format_scalar
from dilation.services.cascade_service import CascadeService, LemmaReport
from dilation.services.parallel import map_chunks, merge_sums
from dilation.services.transfer_service import TileSystem, TransferService, normalize_eigenvector

logger = logging.getLogger(__name__)


@dataclass
class HalfOpenReport:
    """Half-open tile system (z, z+1], z = -1 .. K-1, on the line."""

    tiles: List[int]
    dimension: int
    forced_zero: bool
    values: Optional[Dict[int, QuadScalar]] = None
    message: str = ""

    @property
    def consistent(self) -> bool:
        return self.dimension >= 1

    @property
    def extra_value(self) -> Optional[QuadScalar]:
        """mu(-1, 0] of the normalized solution (None unless the solution is unique)."""
        if self.values is None:
            return None
        return self.values.get(-1, ZERO)


def _refine_chunk(
    shifts: Sequence[Tuple[LatticeElem, QuadScalar]],
    items: Sequence[Tuple[LatticeElem, QuadScalar]],
) -> Dict[LatticeElem, QuadScalar]:
    out: Dict[LatticeElem, QuadScalar] = {}
    for h, v in items:
        for s, p in shifts:
            key = LatticeElem(h.re + s.re, h.im + s.im)
            cur = out.get(key)
            term = p * v
            out[key] = term if cur is None else cur + term
    return out


class RefineService:
    """Service for the conditional-expectation cascade."""

    def __init__(self, threads: Optional[int] = None, cascade: Optional[CascadeService] = None):
        self.threads = threads if threads is not None else settings.threads
        self.cascade = cascade or CascadeService(threads=self.threads)

    def refine_values(
        self, mask: CoefficientMask, base: TileValueMap, depth: int
    ) -> List[TileValueMap]:
        """
        Propagate scale-0 tile measures down to scales 1..depth.

        Args:
            mask: Coefficient mask
            base: Scale-0 tile measures (the normalized eigenvector)
            depth: Finest scale m

        Returns:
            One TileValueMap per scale 1..m; zero values are dropped
        """
        if base.scale != 0:
            raise ValueError(f"base must be at scale 0, got {base.scale}")
        dilation = mask.dilation
        current = dict(base.values)
        out: List[TileValueMap] = []
        for n in range(depth):
            shifts = [(dilation.mul_m_power(k, n), p) for k, p in mask.items()]
            parts = map_chunks(partial(_refine_chunk, shifts), list(current.items()), self.threads)
            merged = merge_sums(parts, lambda x, y: x + y)
            current = {g: v for g, v in merged.items() if v}
            out.append(TileValueMap(dilation, n + 1, current))
            logger.debug(f"scale {n + 1}: {len(current)} tiles")
        return out

    @staticmethod
    def density_exact(values: TileValueMap) -> Dict[LatticeElem, QuadScalar]:
        """value * 2^n: every scale-n tile has Lebesgue measure 2^-n."""
        factor = 2**values.scale
        return {g: v * factor for g, v in values.values.items()}

    @staticmethod
    def density_step(values: TileValueMap) -> Dict[LatticeElem, float]:
        factor = 2**values.scale
        return {g: v.to_float() * factor for g, v in values.values.items()}

    @staticmethod
    def mass_profile(levels: Sequence[TileValueMap]) -> List[QuadScalar]:
        return [level.total() for level in levels]

    def check_density_identity(
        self, mask: CoefficientMask, coarse: TileValueMap, fine: TileValueMap
    ) -> bool:
        """
        Averaged dilation equation: d_{n+1}(g) = 2 sum_k p_k d_n(g - M^n k), exact.
        """
        if fine.scale != coarse.scale + 1:
            raise ValueError("fine must be exactly one scale below coarse")
        dilation = mask.dilation
        coarse_d = self.density_exact(coarse)
        fine_d = self.density_exact(fine)
        shifts = [(dilation.mul_m_power(k, coarse.scale), p) for k, p in mask.items()]
        keys = set(fine_d)
        for h in coarse_d:
            keys.update(h + s for s, _ in shifts)
        for g in keys:
            rhs = 2 * sum((p * coarse_d.get(g - s, ZERO) for s, p in shifts), ZERO)
            if fine_d.get(g, ZERO) != rhs:
                return False
        return True

    def cascade_values(
        self, mask: CoefficientMask, base: TileValueMap, depth: int
    ) -> List[TileValueMap]:
        """
        Scale-n tile measures from the cascade: value_n(g) = sum_h w_n(h) value_0(g - h).

        mu = sum_h w_n(h) mu(M^n . - h), so the scale-n tile masses are mu_n
        convolved with the scale-0 ones. Shares no code with ``refine_values``.

        Returns:
            One TileValueMap per scale 1..depth
        """
        if base.scale != 0:
            raise ValueError(f"base must be at scale 0, got {base.scale}")
        if depth < 1:
            return []
        out: List[TileValueMap] = []
        for mu in self.cascade.iterate_levels(mask, depth):
            values: Dict[LatticeElem, QuadScalar] = {}
            for h, w in mu.weights.items():
                for z, v in base.values.items():
                    key = h + z
                    values[key] = values.get(key, ZERO) + w * v
            out.append(TileValueMap(mask.dilation, mu.scale, {g: v for g, v in values.items() if v}))
        return out

    # ------------------------------------------------------------------
    # Density theorems, finite form
    # ------------------------------------------------------------------

    def verify_density_bounds(
        self, mask: CoefficientMask, levels: Sequence[TileValueMap]
    ) -> LemmaReport:
        """0 <= value_n(g) 2^n <= 1 on every tile, for mass-1 values under the probability criterion."""
        name = "density bounds 0 <= d_n <= 1"
        if not check_probability(mask).absolutely_continuous_criterion:
            return LemmaReport(name, CheckStatus.NOT_APPLICABLE, message="probability criterion fails")
        if levels and levels[0].total() != ONE:
            return LemmaReport(
                name, CheckStatus.NOT_APPLICABLE, message="tile values are not normalized to mass 1"
            )
        worst_value = 0.0
        worst = (None, None)
        for level in levels:
            for g, d in self.density_exact(level).items():
                if d.sign() < 0 or (ONE - d).sign() < 0:
                    return LemmaReport(
                        name,
                        CheckStatus.FAIL,
                        levels_checked=level.scale,
                        worst_level=level.scale,
                        worst_key=g,
                        worst_value=d.to_float(),
                        message=f"density {format_scalar(d)} out of [0, 1] at scale {level.scale}",
                    )
                f = d.to_float()
                if f > worst_value:
                    worst_value, worst = f, (level.scale, g)
        return LemmaReport(
            name,
            CheckStatus.PASS,
            levels_checked=len(levels),
            worst_level=worst[0],
            worst_key=worst[1],
            worst_value=worst_value,
            message=f"max density {worst_value:.6g}",
        )

    def l2_profile(self, levels: Sequence[TileValueMap]) -> pd.DataFrame:
        """Squared L2 norm 2^n sum value_n^2 of each step function."""
        rows = []
        previous = None
        for level in levels:
            sq = sum((v * v for v in level.values.values()), ZERO) * (2**level.scale)
            rows.append(
                {
                    "n": level.scale,
                    "l2_sq": sq.to_float(),
                    "l2_sq_exact": format_scalar(sq),
                    "at_most_one": (ONE - sq).sign() >= 0,
                    "non_decreasing": previous is None or (sq - previous).sign() >= 0,
                }
            )
            previous = sq
        return pd.DataFrame(
            rows, columns=["n", "l2_sq", "l2_sq_exact", "at_most_one", "non_decreasing"]
        )

    def verify_l2_bound(self, mask: CoefficientMask, levels: Sequence[TileValueMap]) -> LemmaReport:
        name = "step-function L2 norm non-decreasing and <= 1"
        if not check_orthonormality(mask).passed:
            return LemmaReport(name, CheckStatus.NOT_APPLICABLE, message="orthonormality fails")
        if levels and levels[0].total() != ONE:
            return LemmaReport(
                name, CheckStatus.NOT_APPLICABLE, message="tile values are not normalized to mass 1"
            )
        profile = self.l2_profile(levels)
        bad = profile[~(profile["at_most_one"] & profile["non_decreasing"])]
        if not bad.empty:
            first = bad.iloc[0]
            return LemmaReport(
                name,
                CheckStatus.FAIL,
                levels_checked=len(levels),
                worst_level=int(first["n"]),
                worst_value=float(first["l2_sq"]),
                message=f"L2 profile violated at scale {int(first['n'])}",
            )
        last = float(profile["l2_sq"].iloc[-1]) if len(profile) else 0.0
        return LemmaReport(
            name, CheckStatus.PASS, levels_checked=len(levels), worst_value=last,
            message=f"||step||^2 = {last:.9f} at the finest scale",
        )

    # ------------------------------------------------------------------
    # Diagnostics
    # ------------------------------------------------------------------

    def refinement_consistency(
        self,
        mask: CoefficientMask,
        levels: Sequence[TileValueMap],
        n_float: int = 20,
    ) -> pd.DataFrame:
        """
        Integrate the float mu_{n_float} over scale-s tiles and compare with value_s.

        Returns:
            DataFrame with columns scale, tiles, max_abs_error
        """
        fm = self.cascade.iterate_float(mask, n_float)
        rows = []
        for level in levels:
            keys = fm.tile_keys(level.scale)
            if mask.dilation is Dilation.LINE:
                frame = pd.DataFrame({"re": keys, "im": 0, "w": fm.weights})
            else:
                frame = pd.DataFrame({"re": keys[:, 0], "im": keys[:, 1], "w": fm.weights})
            sums = frame.groupby(["re", "im"])["w"].sum()
            approx = {LatticeElem(int(re), int(im)): float(w) for (re, im), w in sums.items()}
            exact = {g: v.to_float() for g, v in level.values.items()}
            keys_all = set(approx) | set(exact)
            err = max((abs(approx.get(g, 0.0) - exact.get(g, 0.0)) for g in keys_all), default=0.0)
            rows.append({"scale": level.scale, "tiles": len(exact), "max_abs_error": err})
        return pd.DataFrame(rows, columns=["scale", "tiles", "max_abs_error"])

    def halfopen_consistency(self, mask: CoefficientMask) -> HalfOpenReport:
        """
        Rebuild the line tile system with half-open tiles (z, z+1], z = -1 .. K-1.

        The extra tile (-1, 0] is the atom at 0. Its component is forced to zero
        when every kernel vector vanishes there.

        Raises:
            NotApplicableError: plane mask, or support not inside {0, ..., K}
        """
        if mask.dilation is not Dilation.LINE:
            raise NotApplicableError("half-open tiles are only defined on the line")
        if min(k.re for k in mask.support) < 0:
            raise NotApplicableError("mask support must lie in {0, ..., K}")
        top = max(k.re for k in mask.support)
        tiles = list(range(-1, top))
        system = TileSystem(Dilation.LINE, tuple(LatticeElem(z, 0) for z in tiles))
        matrix = TransferService(threads=self.threads, cascade=self.cascade).build_matrix(system, mask)
        basis = null_space(subtract_identity(matrix.entries))
        forced_zero = all(not v[0] for v in basis) if basis else False

        values = None
        message = f"kernel dimension {len(basis)}"
        if len(basis) == 1:
            normalized = normalize_eigenvector(basis[0], "sum1")
            values = dict(zip(tiles, normalized))
            message += f"; mu(-1,0] = {format_scalar(values[-1])}"
        elif not basis:
            message = "extended half-open system is inconsistent (only the zero solution)"
            logger.warning(message)
        return HalfOpenReport(
            tiles=tiles, dimension=len(basis), forced_zero=forced_zero, values=values, message=message
        )

    # ------------------------------------------------------------------
    # Tabular form
    # ------------------------------------------------------------------

    @staticmethod
    def step_frame(levels: Sequence[TileValueMap]) -> pd.DataFrame:
        """
        Rows tile_key, scale, address_or_interval, value_exact, density_float.

        Line tiles are written as closed intervals [a,b]; plane tiles as
        residue:digits (the translate and the radix address inside it).
        """
        rows = []
        for level in levels:
            dilation = level.dilation
            factor = 2**level.scale
            for g in sorted(level.values):
                v = level.values[g]
                if dilation is Dilation.LINE:
                    a, b = Fraction(g.re, factor), Fraction(g.re + 1, factor)
                    where = f"[{a},{b}]"
                else:
                    residue, digits = greedy_expand(dilation, g, level.scale)
                    where = f"{dilation.format_elem(residue)}:{digits}"
                rows.append(
                    {
                        "dilation": dilation.value,
                        "tile_key": dilation.format_elem(g),
                        "scale": level.scale,
                        "address_or_interval": where,
                        "value_exact": format_scalar(v),
                        "density_float": v.to_float() * factor,
                    }
                )
        return pd.DataFrame(
            rows,
            columns=["dilation", "tile_key", "scale", "address_or_interval", "value_exact", "density_float"],
        )
