"""
Transfer Service - tile translates, transfer matrices and exact 1-eigenvectors.

This service handles:
1. Candidate translates inside the conservative bound B
2. Observed translates (greedy tile membership of S_n)
3. Push-out elimination of translates with certified zero measure
4. Transfer-matrix assembly from mu(z+T) = sum_k p_k [mu(Mz-k+T) + mu(Mz-k+1+T)]
5. Exact 1-eigenspace, normalization, column sums and the det identity sample check
6. The end-to-end solve pipeline with block-triangular reduction
"""
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence, Set, Union

import numpy as np
import pandas as pd

from dilation.config import settings
from dilation.exceptions import TileSystemError
from dilation.linalg import (
    Matrix,
    Vector,
    determinant,
    is_zero_block,
    mat_vec,
    null_space,
    submatrix,
    subtract_identity,
)
from dilation.models.lattice import ORIGIN, Dilation, LatticeElem, TileValueMap, greedy_expand
from dilation.models.measure import CoefficientMask
from dilation.models.scalarfield import ONE, ZERO, QuadScalar, format_scalar
from dilation.services.cascade_service import CascadeService
from dilation.services.parallel import map_chunks

logger = logging.getLogger(__name__)

NORMALIZE_MODES = ("sum1", "first1", "unit")

# Support of the four-coefficient plane family used by the det identity
FOUR_COEFFICIENT_KEYS = (
    LatticeElem(0, 0),
    LatticeElem(1, 0),
    LatticeElem(1, 1),
    LatticeElem(2, 1),
)


@dataclass(frozen=True)
class TileSystem:
    """Ordered translate list; the order fixes matrix row/column indexing."""

    dilation: Dilation
    translates: tuple

    def __post_init__(self):
        translates = tuple(LatticeElem(*z) for z in self.translates)
        if len(set(translates)) != len(translates):
            raise TileSystemError("tile system contains duplicate translates")
        if self.dilation is Dilation.LINE and any(z.im for z in translates):
            raise TileSystemError("line tile system must contain integers only")
        object.__setattr__(self, "translates", translates)

    def __len__(self) -> int:
        return len(self.translates)

    def __iter__(self):
        return iter(self.translates)

    def index(self) -> Dict[LatticeElem, int]:
        return {z: i for i, z in enumerate(self.translates)}

    def formatted(self) -> List[str]:
        return [self.dilation.format_elem(z) for z in self.translates]


@dataclass
class TransferMatrix:
    """Row i expresses mu(z_i + T) as sum_j A[i][j] mu(z_j + T)."""

    tiles: TileSystem
    entries: Matrix
    uncertified: List[LatticeElem] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.entries)

    def column_sums(self) -> List[QuadScalar]:
        return [sum((row[j] for row in self.entries), ZERO) for j in range(self.dim)]

    def block(self, rows: Sequence[LatticeElem], cols: Sequence[LatticeElem]) -> Matrix:
        idx = self.tiles.index()
        return submatrix(self.entries, [idx[z] for z in rows], [idx[z] for z in cols])

    def to_numpy(self) -> np.ndarray:
        return np.array([[x.to_float() for x in row] for row in self.entries], dtype=np.float64)

    def formatted(self) -> List[List[str]]:
        return [[format_scalar(x) for x in row] for row in self.entries]


@dataclass
class CandidateBound:
    """B = max |k - delta| * |M| / (|M| - 1), delta in {0, 1}; stored squared and exact."""

    dilation: Dilation
    max_norm_sq: int
    bound_sq: QuadScalar

    @property
    def bound(self) -> float:
        return math.sqrt(self.bound_sq.to_float())

    def contains(self, z: LatticeElem) -> bool:
        return (self.bound_sq - z.norm_sq()).sign() >= 0


@dataclass
class PushOutResult:
    survivors: Set[LatticeElem]
    eliminated: Set[LatticeElem]
    rounds: int


@dataclass
class EigenResult:
    dimension: int
    basis: List[Vector]


@dataclass
class ColumnSumReport:
    sums: List[QuadScalar]

    @property
    def all_one(self) -> bool:
        return all(s == ONE for s in self.sums)


@dataclass
class DetIdentitySample:
    label: str
    coeffs: Dict[str, str]
    lhs: QuadScalar
    rhs: QuadScalar

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


@dataclass
class DetIdentityReport:
    samples: List[DetIdentitySample]
    seed: int

    @property
    def passed(self) -> bool:
        return bool(self.samples) and all(s.equal for s in self.samples)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "sample": s.label,
                    "coeffs": ";".join(f"{k}:{v}" for k, v in s.coeffs.items()),
                    "det": format_scalar(s.lhs),
                    "identity": format_scalar(s.rhs),
                    "equal": s.equal,
                }
                for s in self.samples
            ],
            columns=["sample", "coeffs", "det", "identity", "equal"],
        )


@dataclass
class BlockReduction:
    system: TransferMatrix
    reduced: bool
    lower_left_zero: bool
    rest_det: Optional[QuadScalar]


@dataclass
class SolveResult:
    """Everything produced by the tile pipeline for one mask."""

    mask: CoefficientMask
    bound: CandidateBound
    candidates: Set[LatticeElem]
    observed: Set[LatticeElem]
    push_out: PushOutResult
    leading: TileSystem
    rest: TileSystem
    full_matrix: TransferMatrix
    matrix: TransferMatrix
    reduced: bool
    lower_left_zero: bool
    rest_det: Optional[QuadScalar]
    eigen: EigenResult
    normalize: str
    vector: Optional[list]
    column_sums: ColumnSumReport
    fixed_point_exact: bool

    @property
    def tiles(self) -> TileSystem:
        return self.matrix.tiles

    def tile_values(self, mode: str = "sum1") -> TileValueMap:
        """Exact scale-0 tile measures of the solved system (certified-zero tiles omitted)."""
        if self.eigen.dimension != 1:
            raise ValueError(f"1-eigenspace has dimension {self.eigen.dimension}")
        if mode == "unit":
            raise ValueError("unit normalization is not exact; use sum1 or first1")
        vector = normalize_eigenvector(self.eigen.basis[0], mode)
        return TileValueMap(
            self.mask.dilation, 0, {z: v for z, v in zip(self.tiles.translates, vector) if v}
        )


def dependency_row(z: LatticeElem, mask: CoefficientMask) -> Dict[LatticeElem, QuadScalar]:
    """
    Coefficients of mu(z + T) = sum_k p_k [mu(Mz - k + T) + mu(Mz - k + 1 + T)].

    Entries whose contributions cancel are dropped.
    """
    mz = mask.dilation.mul_m(z)
    row: Dict[LatticeElem, QuadScalar] = {}
    for k, p in mask.items():
        for delta in (0, 1):
            target = LatticeElem(mz.re - k.re + delta, mz.im - k.im)
            row[target] = row.get(target, ZERO) + p
    return {t: v for t, v in row.items() if v}


def normalize_eigenvector(v: Sequence[QuadScalar], mode: str = "sum1") -> list:
    """
    Scale a kernel vector.

    Args:
        v: exact vector
        mode: sum1 (components sum to 1), first1 (first component 1), unit (float, Euclidean norm 1)

    Raises:
        ZeroDivisionError: the normalizer is zero
    """
    if mode == "sum1":
        total = sum(v, ZERO)
        if not total:
            raise ZeroDivisionError("eigenvector components sum to zero")
        inv = total.inverse()
        return [x * inv for x in v]
    if mode == "first1":
        if not v or not v[0]:
            raise ZeroDivisionError("first eigenvector component is zero")
        inv = v[0].inverse()
        return [x * inv for x in v]
    if mode == "unit":
        arr = np.array([x.to_float() for x in v], dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if norm == 0.0:
            raise ZeroDivisionError("eigenvector has zero norm")
        return list(arr / norm)
    raise ValueError(f"unknown normalization {mode!r}; expected one of {NORMALIZE_MODES}")


def _residues(dilation: Dilation, n: int, keys: Sequence[LatticeElem]) -> Set[LatticeElem]:
    return {greedy_expand(dilation, g, n)[0] for g in keys}


class TransferService:
    """Service for the tile-translate eigenproblem."""

    def __init__(
        self,
        probe_depth: Optional[int] = None,
        threads: Optional[int] = None,
        cascade: Optional[CascadeService] = None,
    ):
        """
        Initialize transfer service.

        Args:
            probe_depth: n used for observed translates
            threads: Worker count for membership classification
            cascade: CascadeService supplying S_n (caps come from it)
        """
        self.probe_depth = probe_depth if probe_depth is not None else settings.probe_depth
        self.threads = threads if threads is not None else settings.threads
        self.cascade = cascade or CascadeService(threads=self.threads)

    # ------------------------------------------------------------------
    # Translate discovery
    # ------------------------------------------------------------------

    def candidate_bound(self, mask: CoefficientMask) -> CandidateBound:
        m = mask.max_norm_sq(shifts=(0, 1))
        if mask.dilation is Dilation.LINE:
            bound_sq = QuadScalar(4 * m)
        else:
            # (|M| / (|M| - 1))^2 = (2 + sqrt 2)^2 = 6 + 4 sqrt 2
            bound_sq = QuadScalar(6 * m, 4 * m, 2)
        return CandidateBound(mask.dilation, m, bound_sq)

    def candidate_translates(self, mask: CoefficientMask) -> Set[LatticeElem]:
        """All lattice points z with |z| <= B."""
        bound = self.candidate_bound(mask)
        r = math.isqrt(math.ceil(bound.bound_sq.to_float())) + 1
        ims = range(-r, r + 1) if mask.dilation is Dilation.PLANE else (0,)
        found = {
            LatticeElem(re, im)
            for re in range(-r, r + 1)
            for im in ims
            if bound.contains(LatticeElem(re, im))
        }
        logger.info(f"Candidate bound B = {bound.bound:.4f}: {len(found)} translates")
        return found

    def observed_translates(self, mask: CoefficientMask, n: Optional[int] = None) -> Set[LatticeElem]:
        """Translates z whose tile z + T captures some point of S_n by greedy membership."""
        n = self.probe_depth if n is None else n
        points = list(self.cascade.support_points(mask, n))
        parts = map_chunks(partial(_residues, mask.dilation, n), points, self.threads)
        observed = set().union(*parts)
        logger.info(f"Observed {len(observed)} translates from |S_{n}| = {len(points)}")
        return observed

    def push_out(self, mask: CoefficientMask, candidates: Iterable[LatticeElem]) -> PushOutResult:
        """
        Greatest fixed point: drop z whenever none of its dependencies is still alive.

        Every eliminated translate has mu(z + T) = 0.
        """
        alive = set(candidates)
        start = set(alive)
        deps = {z: list(dependency_row(z, mask)) for z in alive}
        rounds = 0
        while True:
            dead = {z for z in alive if not any(t in alive for t in deps[z])}
            if not dead:
                break
            alive -= dead
            rounds += 1
        logger.info(f"Push-out: {len(alive)} survivors after {rounds} rounds")
        return PushOutResult(survivors=alive, eliminated=start - alive, rounds=rounds)

    # ------------------------------------------------------------------
    # Matrices
    # ------------------------------------------------------------------

    def build_matrix(
        self,
        tiles: TileSystem,
        mask: CoefficientMask,
        survivors: Optional[Set[LatticeElem]] = None,
    ) -> TransferMatrix:
        """
        Assemble A restricted to the tile list.

        Args:
            tiles: Ordered translate list
            mask: Coefficient mask
            survivors: Push-out survivors; a dropped dependency inside this set is
                not certified zero and triggers a warning. None skips the check.
        """
        idx = tiles.index()
        entries = [[ZERO] * len(tiles) for _ in range(len(tiles))]
        uncertified: Set[LatticeElem] = set()
        for i, z in enumerate(tiles.translates):
            for target, value in dependency_row(z, mask).items():
                j = idx.get(target)
                if j is not None:
                    entries[i][j] = value
                elif survivors is not None and target in survivors:
                    uncertified.add(target)
        if uncertified:
            logger.warning(
                f"Dropped dependencies on {len(uncertified)} translate(s) not certified zero: "
                + ", ".join(tiles.dilation.format_elem(z) for z in sorted(uncertified))
            )
        return TransferMatrix(tiles=tiles, entries=entries, uncertified=sorted(uncertified))

    def one_eigenvectors(self, matrix: Union[TransferMatrix, Matrix]) -> EigenResult:
        """Exact basis of ker(A - I)."""
        entries = matrix.entries if isinstance(matrix, TransferMatrix) else matrix
        basis = null_space(subtract_identity(entries))
        return EigenResult(dimension=len(basis), basis=basis)

    def column_sum_check(self, matrix: Union[TransferMatrix, Matrix]) -> ColumnSumReport:
        entries = matrix.entries if isinstance(matrix, TransferMatrix) else matrix
        n = len(entries)
        return ColumnSumReport([sum((row[j] for row in entries), ZERO) for j in range(n)])

    def det_identity_check(
        self,
        prime_tiles: Sequence[LatticeElem],
        sample_count: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> DetIdentityReport:
        """
        Sample-check det(A' - I) = 1 - p0^3 p1 p_{1+i} p_{2+i}^3 on the block over prime_tiles.

        The D4-lift values and p0 = 1 are always included; random rational
        masks with sum 1 are drawn from a seeded generator.
        """
        sample_count = settings.det_samples if sample_count is None else sample_count
        seed = settings.seed if seed is None else seed
        rng = random.Random(seed)
        tiles = TileSystem(Dilation.PLANE, tuple(prime_tiles))

        root3 = QuadScalar.sqrt(3)
        fixed = [
            (
                "d4-lift",
                [(1 + root3) / 8, (3 + root3) / 8, (3 - root3) / 8, (1 - root3) / 8],
            ),
            ("p0=1", [ONE, ZERO, ZERO, ZERO]),
        ]
        drawn = []
        for i in range(sample_count):
            head = [QuadScalar(Fraction(rng.randint(-9, 9), rng.randint(1, 9))) for _ in range(3)]
            drawn.append((f"random-{i + 1}", head + [ONE - sum(head, ZERO)]))

        samples = []
        for label, values in fixed + drawn:
            mask = CoefficientMask(
                Dilation.PLANE, dict(zip(FOUR_COEFFICIENT_KEYS, values)), name=label
            )
            a_prime = self.build_matrix(tiles, mask)
            lhs = determinant(subtract_identity(a_prime.entries))
            p0, p1, p1i, p2i = values
            rhs = ONE - p0**3 * p1 * p1i * p2i**3
            samples.append(
                DetIdentitySample(
                    label=label,
                    coeffs={
                        Dilation.PLANE.format_elem(k): format_scalar(p)
                        for k, p in zip(FOUR_COEFFICIENT_KEYS, values)
                    },
                    lhs=lhs,
                    rhs=rhs,
                )
            )
        report = DetIdentityReport(samples=samples, seed=seed)
        logger.info(
            f"det identity: {sum(s.equal for s in samples)}/{len(samples)} samples equal (seed={seed})"
        )
        return report

    def probability_family_sweep(
        self, tiles: Sequence[LatticeElem], p_i_values: Iterable[Fraction]
    ) -> pd.DataFrame:
        """1-eigenspace dimension of the three-coefficient family p0 = 1/2, p1 = 1/2 - p_i."""
        system = TileSystem(Dilation.PLANE, tuple(tiles))
        rows = []
        for p_i in p_i_values:
            p_i = Fraction(p_i)
            mask = CoefficientMask(
                Dilation.PLANE,
                {
                    ORIGIN: QuadScalar(Fraction(1, 2)),
                    LatticeElem(1, 0): QuadScalar(Fraction(1, 2) - p_i),
                    LatticeElem(0, 1): QuadScalar(p_i),
                },
                name=f"p_i={p_i}",
            )
            eigen = self.one_eigenvectors(self.build_matrix(system, mask))
            rows.append({"p_i": str(p_i), "p1": str(Fraction(1, 2) - p_i), "dimension": eigen.dimension})
        return pd.DataFrame(rows, columns=["p_i", "p1", "dimension"])

    # ------------------------------------------------------------------
    # Pipeline
    # ------------------------------------------------------------------

    def order_tiles(
        self,
        observed: Set[LatticeElem],
        survivors: Set[LatticeElem],
        stored: Optional[Sequence[LatticeElem]] = None,
    ) -> tuple:
        """Leading block = observed translates, rest = other survivors; stored order first."""
        stored = list(stored or [])
        stored_set = set(stored)
        outside = [z for z in stored if z not in survivors]
        if outside:
            logger.warning(f"{len(outside)} stored translate(s) were pushed out and are ignored")
        if not observed <= survivors:
            logger.warning("observed translates not contained in push-out survivors")
        lead_set = observed & survivors
        leading = [z for z in stored if z in lead_set] + sorted(lead_set - stored_set)
        rest_set = survivors - lead_set
        rest = [z for z in stored if z in rest_set] + sorted(rest_set - stored_set)
        return leading, rest

    def reduce_system(self, full: TransferMatrix, n_leading: int) -> BlockReduction:
        """
        Drop the trailing translates when A = [[A, B], [0, A']] with det(A' - I) != 0.

        The first ``n_leading`` rows/columns of ``full`` form the leading block.
        """
        if not 0 <= n_leading <= full.dim:
            raise ValueError(f"leading block size {n_leading} outside 0..{full.dim}")
        dilation = full.tiles.dilation
        lead_idx = list(range(n_leading))
        rest_idx = list(range(n_leading, full.dim))

        lower_left_zero = is_zero_block(full.entries, rest_idx, lead_idx)
        rest_det = None
        reduced = False
        if not rest_idx:
            reduced = True
        elif lower_left_zero:
            rest_det = determinant(subtract_identity(submatrix(full.entries, rest_idx, rest_idx)))
            reduced = bool(rest_det)

        if not reduced:
            logger.warning("Block reduction not applicable; solving the full survivor system")
            return BlockReduction(full, False, lower_left_zero, rest_det)

        if rest_idx:
            logger.info(
                f"Block reduction: {len(rest_idx)} translate(s) carry zero measure "
                f"(det(A' - I) = {format_scalar(rest_det)})"
            )
        system = TransferMatrix(
            tiles=TileSystem(dilation, full.tiles.translates[:n_leading]),
            entries=submatrix(full.entries, lead_idx, lead_idx),
        )
        return BlockReduction(system, True, lower_left_zero, rest_det)

    def solve_mask(
        self,
        mask: CoefficientMask,
        tiles: Optional[Sequence[LatticeElem]] = None,
        normalize: str = "sum1",
    ) -> SolveResult:
        """
        Run candidates -> observed -> push-out -> build -> reduce -> kernel -> normalize.

        Args:
            mask: Coefficient mask
            tiles: Stored translate order (e.g. from the mask file)
            normalize: sum1, first1 or unit

        Returns:
            SolveResult; when the reduction applies, ``matrix`` is the leading block
        """
        if normalize not in NORMALIZE_MODES:
            raise ValueError(f"unknown normalization {normalize!r}")
        dilation = mask.dilation
        bound = self.candidate_bound(mask)
        candidates = self.candidate_translates(mask)
        observed = self.observed_translates(mask)
        pushed = self.push_out(mask, candidates)
        leading, rest = self.order_tiles(observed, pushed.survivors, tiles)

        all_tiles = TileSystem(dilation, tuple(leading + rest))
        full = self.build_matrix(all_tiles, mask, survivors=pushed.survivors)
        reduction = self.reduce_system(full, len(leading))
        system = reduction.system

        eigen = self.one_eigenvectors(system)
        fixed_point_exact = all(mat_vec(system.entries, v) == v for v in eigen.basis)
        vector = None
        if eigen.dimension == 1:
            vector = normalize_eigenvector(eigen.basis[0], normalize)
        else:
            logger.warning(f"1-eigenspace has dimension {eigen.dimension}; no normalized vector")

        return SolveResult(
            mask=mask,
            bound=bound,
            candidates=candidates,
            observed=observed,
            push_out=pushed,
            leading=TileSystem(dilation, tuple(leading)),
            rest=TileSystem(dilation, tuple(rest)),
            full_matrix=full,
            matrix=system,
            reduced=reduction.reduced,
            lower_left_zero=reduction.lower_left_zero,
            rest_det=reduction.rest_det,
            eigen=eigen,
            normalize=normalize,
            vector=vector,
            column_sums=self.column_sum_check(system),
            fixed_point_exact=fixed_point_exact,
        )
