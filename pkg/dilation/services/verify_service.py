"""
Verify Service - acceptance suite for one mask.

Rules are editable: each has a name, a description, a severity and an enabled
flag, and is checked by the method ``_check_<rule_id>``. A rule whose
precondition does not hold for the mask is skipped, not failed.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from dilation.config import settings
from dilation.exceptions import EigenspaceError, NotApplicableError
from dilation.models.lattice import Dilation, TileValueMap
from dilation.models.measure import CheckStatus, check_orthonormality, check_probability
from dilation.models.scalarfield import ONE
from dilation.schemas.report_schema import CheckResult, VerifyReport
from dilation.services.cascade_service import CascadeService, LemmaReport
from dilation.services.correspond_service import CorrespondService
from dilation.services.mask_service import LoadedMask
from dilation.services.refine_service import RefineService
from dilation.services.transfer_service import FOUR_COEFFICIENT_KEYS, SolveResult, TransferService

logger = logging.getLogger(__name__)

Outcome = Tuple[CheckStatus, str]

ORACLE_DEPTH = {Dilation.LINE: 8, Dilation.PLANE: 6}
REFINE_DEPTH = 8
CONSISTENCY_SCALES = 3
CONSISTENCY_FLOAT_DEPTH = 20


@dataclass
class VerifyRule:
    """A verification rule with its description."""

    name: str
    description: str
    severity: str = "error"  # "error", "warning", "info"
    enabled: bool = True


@dataclass
class SuiteReport:
    """Outcome of the suite for one mask."""

    mask: str
    dilation: str
    n: int
    seed: int
    total_checks: int = 0
    passed_checks: int = 0
    failed_checks: int = 0
    skipped_checks: int = 0
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    info: List[str] = field(default_factory=list)
    results: List[CheckResult] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        """Percentage of applicable checks that passed."""
        applicable = self.total_checks - self.skipped_checks
        if applicable == 0:
            return 0.0
        return (self.passed_checks / applicable) * 100

    @property
    def ok(self) -> bool:
        """No failed error-severity rule."""
        return not self.errors

    def to_schema(self) -> VerifyReport:
        return VerifyReport(
            mask=self.mask,
            dilation=self.dilation,
            n=self.n,
            total_checks=self.total_checks,
            passed_checks=self.passed_checks,
            failed_checks=self.failed_checks,
            skipped_checks=self.skipped_checks,
            success_rate=round(self.success_rate, 2),
            results=self.results,
            seed=self.seed,
        )

    def save_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_schema().model_dump(), indent=2) + "\n", encoding="utf-8")
        logger.info(f"✅ Report saved: {path}")
        return path


def _from_lemma(report: LemmaReport) -> Outcome:
    message = report.message or f"{report.levels_checked} level(s) checked"
    return report.status, message


class _SuiteRun:
    """Per-mask cache so rules share the expensive results."""

    def __init__(self, service: "VerifyService", loaded: LoadedMask, n: int, seed: int):
        self.service = service
        self.loaded = loaded
        self.mask = loaded.mask
        self.n = n
        self.seed = seed
        self._solve: Optional[SolveResult] = None
        self._levels: Optional[List[TileValueMap]] = None

    @property
    def solve(self) -> SolveResult:
        if self._solve is None:
            self._solve = self.service.transfer.solve_mask(self.mask, self.loaded.tiles, "sum1")
        return self._solve

    @property
    def levels(self) -> Optional[List[TileValueMap]]:
        """Scale 0 .. min(n, 8) tile values, None when the eigenvector is not unique."""
        if self._levels is None and self.solve.eigen.dimension == 1:
            base = self.solve.tile_values("sum1")
            depth = min(self.n, REFINE_DEPTH)
            self._levels = [base] + self.service.refine.refine_values(self.mask, base, depth)
        return self._levels


class VerifyService:
    """
    Acceptance suite.

    EDITABLE: add, change or disable rules in ``_init_rules``.
    """

    def __init__(
        self,
        cascade: Optional[CascadeService] = None,
        transfer: Optional[TransferService] = None,
        refine: Optional[RefineService] = None,
        correspond: Optional[CorrespondService] = None,
        det_samples: Optional[int] = None,
    ):
        self.cascade = cascade or CascadeService()
        self.transfer = transfer or TransferService(cascade=self.cascade)
        self.refine = refine or RefineService(cascade=self.cascade)
        self.correspond = correspond or CorrespondService()
        self.det_samples = det_samples if det_samples is not None else settings.det_samples
        self.rules = self._init_rules()

    def _init_rules(self) -> Dict[str, VerifyRule]:
        return {
            # === CASCADE ===
            "total_mass": VerifyRule(
                name="Total mass",
                description="mu_k has total mass exactly 1 for k <= n",
            ),
            "oracle_equivalence": VerifyRule(
                name="Oracle equivalence",
                description="The one-step recursion equals brute-force digit enumeration",
            ),
            "support_containment": VerifyRule(
                name="Support containment",
                description="supp(mu_k) lies in S_k, which lies in the ball of radius R",
            ),
            "weight_bounds": VerifyRule(
                name="Weight bounds",
                description="0 <= w_k <= 2^-k under the probability conditions",
            ),
            "sum_squares": VerifyRule(
                name="Sum of squares",
                description="sum w_k^2 = 2^-k under orthonormality",
            ),
            "tv_bound": VerifyRule(
                name="Total variation",
                description="TV(mu_k) <= sqrt(2^-k card S_k) under orthonormality; TV = 1 for nonnegative masks",
            ),
            # === TRANSFER ===
            "observed_in_survivors": VerifyRule(
                name="Observed translates survive",
                description="Every observed translate survives the push-out",
            ),
            "stored_tiles_survive": VerifyRule(
                name="Stored tiles survive",
                description="Translates stored in the mask file survive the push-out",
            ),
            "transfer_fixed_point": VerifyRule(
                name="Transfer fixed point",
                description="A has a nonzero exact 1-eigenvector",
            ),
            "eigenspace_one_dimensional": VerifyRule(
                name="Unique tile measures",
                description="The 1-eigenspace of the solved system is one-dimensional",
            ),
            "column_sums": VerifyRule(
                name="Column sums",
                description="Every column of the solved system sums to exactly 1",
            ),
            "det_identity": VerifyRule(
                name="Determinant identity",
                description="det(A' - I) = 1 - p0^3 p1 p_{1+i} p_{2+i}^3 on the zero-measure block",
            ),
            # === REFINE ===
            "mass_conservation": VerifyRule(
                name="Mass conservation",
                description="Refined tile values sum to exactly 1 at every scale",
            ),
            "density_identity": VerifyRule(
                name="Averaged dilation equation",
                description="d_{n+1}(g) = 2 sum_k p_k d_n(g - M^n k) exactly, d_n from the cascade and d_{n+1} refined",
            ),
            "density_bounds": VerifyRule(
                name="Density bounds",
                description="0 <= value_n 2^n <= 1 under the probability conditions",
            ),
            "l2_bound": VerifyRule(
                name="L2 profile",
                description="Step-function L2 norm non-decreasing and at most 1 under orthonormality",
            ),
            "refinement_consistency": VerifyRule(
                name="Refinement consistency",
                description="Float mu_20 integrated over scale <= 3 tiles matches the refined values",
            ),
            # === LINE ONLY ===
            "halfopen_consistency": VerifyRule(
                name="Half-open tiles",
                description="The half-open tile system on the line has a nonzero solution",
                severity="info",
            ),
            "point_values": VerifyRule(
                name="Point values",
                description="Exact dyadic point values and the discontinuity probe of the lift",
                severity="info",
            ),
        }

    # ------------------------------------------------------------------
    # Runner
    # ------------------------------------------------------------------

    def verify(self, loaded: LoadedMask, n: int, seed: Optional[int] = None) -> SuiteReport:
        """
        Run every enabled rule.

        Args:
            loaded: Mask plus stored tiles
            n: Cascade depth
            seed: Seed for sampled checks

        Returns:
            SuiteReport
        """
        seed = settings.seed if seed is None else seed
        run = _SuiteRun(self, loaded, n, seed)
        report = SuiteReport(mask=loaded.name, dilation=loaded.mask.dilation.value, n=n, seed=seed)
        logger.info(f"Verifying {loaded.name} (n={n}, seed={seed})")

        for rule_id, rule in self.rules.items():
            if not rule.enabled:
                continue
            report.total_checks += 1
            check_method = f"_check_{rule_id}"
            status, message = getattr(self, check_method)(run)
            report.results.append(
                CheckResult(
                    rule_id=rule_id,
                    name=rule.name,
                    severity=rule.severity,
                    status=status.value,
                    message=message,
                )
            )
            full_message = f"[{rule.name}] {message}"
            if status is CheckStatus.PASS:
                report.passed_checks += 1
                if rule.severity == "info":
                    report.info.append(f"ℹ️  {full_message}")
            elif status is CheckStatus.NOT_APPLICABLE:
                report.skipped_checks += 1
            else:
                report.failed_checks += 1
                if rule.severity == "error":
                    report.errors.append(f"❌ {full_message}")
                elif rule.severity == "warning":
                    report.warnings.append(f"⚠️  {full_message}")
                else:
                    report.info.append(f"ℹ️  {full_message}")
            logger.debug(f"{rule_id}: {status.value} ({message})")
        return report

    # ------------------------------------------------------------------
    # Cascade rules
    # ------------------------------------------------------------------

    def _check_total_mass(self, run: _SuiteRun) -> Outcome:
        for level in self.cascade.iterate_scaled(run.mask, run.n):
            if level.total_mass() != ONE:
                return CheckStatus.FAIL, f"total mass of mu_{level.scale} is {level.total_mass()}"
        return CheckStatus.PASS, f"mu_1 .. mu_{run.n} all have mass 1"

    def _check_oracle_equivalence(self, run: _SuiteRun) -> Outcome:
        depth = min(run.n, ORACLE_DEPTH[run.mask.dilation])
        while depth > 0 and len(run.mask) ** depth > self.cascade.oracle_cap:
            depth -= 1
        if depth == 0:
            return CheckStatus.NOT_APPLICABLE, "oracle cap too small for n = 1"
        for k, mu in enumerate(self.cascade.iterate_levels(run.mask, depth), start=1):
            if mu != self.cascade.enumerate_oracle(run.mask, k):
                return CheckStatus.FAIL, f"recursion and oracle differ at n = {k}"
        return CheckStatus.PASS, f"equal for 1 <= n <= {depth}"

    def _check_support_containment(self, run: _SuiteRun) -> Outcome:
        bound = self.cascade.support_radius(run.mask)
        levels = zip(self.cascade.iterate_scaled(run.mask, run.n), self.cascade.support_levels(run.mask, run.n))
        for level, points in levels:
            if not set(level.pairs) <= points:
                return CheckStatus.FAIL, f"supp(mu_{level.scale}) not inside S_{level.scale}"
            outside = [g for g in points if not bound.contains(g, level.scale)]
            if outside:
                return CheckStatus.FAIL, f"S_{level.scale} leaves the ball of radius {bound.radius:.4f}"
        return CheckStatus.PASS, f"inside the ball of radius {bound.radius:.4f}"

    def _check_weight_bounds(self, run: _SuiteRun) -> Outcome:
        return _from_lemma(self.cascade.verify_prob_bounds(run.mask, run.n))

    def _check_sum_squares(self, run: _SuiteRun) -> Outcome:
        return _from_lemma(self.cascade.verify_sum_squares(run.mask, run.n))

    def _check_tv_bound(self, run: _SuiteRun) -> Outcome:
        if check_orthonormality(run.mask).passed:
            profile = self.cascade.tv_profile(run.mask, run.n)
            if not profile["bound_holds"].all():
                bad = int(profile.loc[~profile["bound_holds"], "n"].iloc[0])
                return CheckStatus.FAIL, f"TV bound violated at n = {bad}"
            return CheckStatus.PASS, f"TV(mu_{run.n}) = {profile['tv'].iloc[-1]:.6g}"
        if check_probability(run.mask).all_nonneg:
            for level in self.cascade.iterate_scaled(run.mask, run.n):
                if level.tv_norm() != ONE:
                    return CheckStatus.FAIL, f"TV(mu_{level.scale}) != 1"
            return CheckStatus.PASS, "TV = 1 at every level"
        return CheckStatus.NOT_APPLICABLE, "mask is neither orthonormal nor nonnegative"

    # ------------------------------------------------------------------
    # Transfer rules
    # ------------------------------------------------------------------

    def _check_observed_in_survivors(self, run: _SuiteRun) -> Outcome:
        solve = run.solve
        missing = solve.observed - solve.push_out.survivors
        if missing:
            return CheckStatus.FAIL, f"{len(missing)} observed translate(s) pushed out"
        return CheckStatus.PASS, (
            f"{len(solve.observed)} observed, {len(solve.push_out.survivors)} survivors "
            f"of {len(solve.candidates)} candidates"
        )

    def _check_stored_tiles_survive(self, run: _SuiteRun) -> Outcome:
        if not run.loaded.tiles:
            return CheckStatus.NOT_APPLICABLE, "no stored tiles"
        lost = [z for z in run.loaded.tiles if z not in run.solve.push_out.survivors]
        if lost:
            return CheckStatus.FAIL, f"{len(lost)} stored translate(s) pushed out"
        return CheckStatus.PASS, f"all {len(run.loaded.tiles)} stored translates survive"

    def _check_transfer_fixed_point(self, run: _SuiteRun) -> Outcome:
        solve = run.solve
        if solve.eigen.dimension == 0:
            return CheckStatus.FAIL, "A - I is nonsingular"
        if not solve.fixed_point_exact:
            return CheckStatus.FAIL, "kernel vector is not an exact fixed point"
        return CheckStatus.PASS, f"{len(solve.tiles)}x{len(solve.tiles)} system, A v = v exactly"

    def _check_eigenspace_one_dimensional(self, run: _SuiteRun) -> Outcome:
        dim = run.solve.eigen.dimension
        if dim != 1:
            return CheckStatus.FAIL, f"1-eigenspace has dimension {dim}"
        return CheckStatus.PASS, "dimension 1"

    def _check_column_sums(self, run: _SuiteRun) -> Outcome:
        sums = run.solve.column_sums
        if not sums.all_one:
            off = sum(1 for s in sums.sums if s != ONE)
            return CheckStatus.FAIL, f"{off} column(s) do not sum to 1"
        return CheckStatus.PASS, f"all {len(sums.sums)} columns sum to 1"

    def _check_det_identity(self, run: _SuiteRun) -> Outcome:
        mask = run.mask
        if mask.dilation is not Dilation.PLANE or set(mask.support) != set(FOUR_COEFFICIENT_KEYS):
            return CheckStatus.NOT_APPLICABLE, "mask is not a four-coefficient plane mask"
        rest = run.solve.rest.translates
        if not rest:
            return CheckStatus.NOT_APPLICABLE, "no zero-measure block"
        report = self.transfer.det_identity_check(rest, self.det_samples, run.seed)
        equal = sum(s.equal for s in report.samples)
        status = CheckStatus.PASS if report.passed else CheckStatus.FAIL
        return status, f"{equal}/{len(report.samples)} samples equal (seed={run.seed})"

    # ------------------------------------------------------------------
    # Refine rules
    # ------------------------------------------------------------------

    def _check_mass_conservation(self, run: _SuiteRun) -> Outcome:
        levels = run.levels
        if levels is None:
            return CheckStatus.NOT_APPLICABLE, "tile measures are not unique"
        for level in levels:
            if level.total() != ONE:
                return CheckStatus.FAIL, f"scale {level.scale} sums to {level.total()}"
        return CheckStatus.PASS, f"scales 0 .. {levels[-1].scale} sum to 1"

    def _check_density_identity(self, run: _SuiteRun) -> Outcome:
        levels = run.levels
        if levels is None or len(levels) < 2:
            return CheckStatus.NOT_APPLICABLE, "no refined scales"
        # coarse side from the cascade, fine side from the refinement
        depth = len(levels) - 1
        coarse_levels = [levels[0]] + self.refine.cascade_values(run.mask, levels[0], depth - 1)
        for coarse, fine in zip(coarse_levels, levels[1:]):
            if not self.refine.check_density_identity(run.mask, coarse, fine):
                return CheckStatus.FAIL, f"identity fails between scales {coarse.scale} and {fine.scale}"
        return CheckStatus.PASS, f"cascade and refinement agree up to scale {levels[-1].scale}"

    def _check_density_bounds(self, run: _SuiteRun) -> Outcome:
        if run.levels is None:
            return CheckStatus.NOT_APPLICABLE, "tile measures are not unique"
        return _from_lemma(self.refine.verify_density_bounds(run.mask, run.levels))

    def _check_l2_bound(self, run: _SuiteRun) -> Outcome:
        if run.levels is None:
            return CheckStatus.NOT_APPLICABLE, "tile measures are not unique"
        return _from_lemma(self.refine.verify_l2_bound(run.mask, run.levels))

    def _check_refinement_consistency(self, run: _SuiteRun) -> Outcome:
        if run.mask.dilation is not Dilation.LINE:
            return CheckStatus.NOT_APPLICABLE, "float cascade at depth 20 is run on the line only"
        if run.levels is None:
            return CheckStatus.NOT_APPLICABLE, "tile measures are not unique"
        frame = self.refine.refinement_consistency(
            run.mask, run.levels[: CONSISTENCY_SCALES + 1], CONSISTENCY_FLOAT_DEPTH
        )
        worst = float(frame["max_abs_error"].max())
        status = CheckStatus.PASS if worst <= settings.float_tolerance else CheckStatus.FAIL
        return status, f"max |error| = {worst:.3g} over scales 0 .. {int(frame['scale'].max())}"

    # ------------------------------------------------------------------
    # Line-only rules
    # ------------------------------------------------------------------

    def _check_halfopen_consistency(self, run: _SuiteRun) -> Outcome:
        try:
            report = self.refine.halfopen_consistency(run.mask)
        except NotApplicableError as e:
            return CheckStatus.NOT_APPLICABLE, str(e)
        if not report.consistent:
            return CheckStatus.FAIL, report.message
        forced = "forced to 0" if report.forced_zero else "not forced to 0"
        return CheckStatus.PASS, f"{report.message}; mu(-1,0] {forced}"

    def _check_point_values(self, run: _SuiteRun) -> Outcome:
        try:
            probe = self.correspond.discontinuity_probe(run.mask)
        except (NotApplicableError, EigenspaceError) as e:
            return CheckStatus.NOT_APPLICABLE, str(e)
        return CheckStatus.PASS, probe.summary()

    # ------------------------------------------------------------------
    # Output
    # ------------------------------------------------------------------

    def print_report(self, report: SuiteReport, verbose: bool = True):
        """Print the suite report."""
        print("\n" + "=" * 70)
        print(f"📋 Verification: {report.mask}")
        print(f"📐 Dilation: {report.dilation.upper()}   n = {report.n}   seed = {report.seed}")
        print("=" * 70)

        print("\n📊 Statistics:")
        print(f"   ✅ Passed: {report.passed_checks}/{report.total_checks}")
        print(f"   ❌ Failed: {report.failed_checks}/{report.total_checks}")
        print(f"   ⏭️  Skipped: {report.skipped_checks}/{report.total_checks}")
        print(f"   🎯 Success rate: {report.success_rate:.1f}%")

        if report.errors:
            print(f"\n❌ ERRORS ({len(report.errors)}):")
            for error in report.errors:
                print(f"   {error}")

        if report.warnings:
            print(f"\n⚠️  WARNINGS ({len(report.warnings)}):")
            for warning in report.warnings:
                print(f"   {warning}")

        if verbose:
            if report.info:
                print(f"\nℹ️  INFO ({len(report.info)}):")
                for info in report.info:
                    print(f"   {info}")
            print("\n🔎 Rules:")
            marks = {"pass": "✅", "fail": "❌", "not_applicable": "⏭️ "}
            for result in report.results:
                print(f"   {marks.get(result.status, '?')} {result.rule_id}: {result.message}")

        print("\n" + "=" * 70)
