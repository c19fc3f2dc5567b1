#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Command-line interface for the dilation toolkit.

Every run is driven by a mask file (or the name of a bundled mask) and writes
its tables under --out-dir. Exit codes: 0 all requested checks pass, 1 a check
failed, 2 invalid input, exceeded cap or I/O error.
"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from types import SimpleNamespace

from dilation import __version__
from dilation.config import settings
from dilation.exceptions import DilationError, EigenspaceError
from dilation.models.lattice import Dilation
from dilation.models.measure import CheckStatus, check_orthonormality, check_probability
from dilation.models.scalarfield import ONE, format_scalar
from dilation.services.cascade_service import CascadeService
from dilation.services.correspond_service import CorrespondService
from dilation.services.export_service import ExportService, read_table, read_tile_values
from dilation.services.mask_service import MaskService
from dilation.services.refine_service import RefineService
from dilation.services.render_service import RasterSpec, RenderService, save_image
from dilation.services.transfer_service import (
    FOUR_COEFFICIENT_KEYS,
    NORMALIZE_MODES,
    TransferService,
)
from dilation.services.verify_service import VerifyService

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
MATRIX_PRINT_LIMIT = 16
SWEEP_VALUES = (Fraction(1, 8), Fraction(1, 4), Fraction(3, 8))


def _mark(ok: bool) -> str:
    return "✅" if ok else "❌"


def _rule(title: str):
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


def _services(args) -> SimpleNamespace:
    cascade = CascadeService(
        support_cap=args.support_cap,
        oracle_cap=args.oracle_cap,
        threads=args.threads,
    )
    return SimpleNamespace(
        masks=MaskService(),
        cascade=cascade,
        transfer=TransferService(
            probe_depth=getattr(args, "probe_depth", None), threads=args.threads, cascade=cascade
        ),
        refine=RefineService(threads=args.threads, cascade=cascade),
        correspond=CorrespondService(),
        export=ExportService(args.out_dir),
        render=RenderService(raster_depth_cap=args.raster_depth_cap),
    )


def _solve_levels(svc, loaded, depth: int):
    """Scale-0 sum1 tile values refined down to `depth`."""
    result = svc.transfer.solve_mask(loaded.mask, loaded.tiles, "sum1")
    if result.eigen.dimension != 1:
        raise EigenspaceError(result.eigen.dimension, "tile system")
    base = result.tile_values("sum1")
    return [base] + svc.refine.refine_values(loaded.mask, base, depth)


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def cmd_check(args) -> int:
    svc = _services(args)
    loaded = svc.masks.load(args.mask)
    mask = loaded.mask
    dilation = mask.dilation
    prob = check_probability(mask)
    ortho = check_orthonormality(mask)

    _rule(f"📋 Mask: {loaded.name} ({dilation.value}, {len(mask)} coefficients)")
    for k, p in mask.items():
        print(f"   p[{dilation.format_elem(k)}] = {format_scalar(p)}")

    print("\n📊 Probability conditions:")
    print(f"   {_mark(prob.all_nonneg)} all coefficients nonnegative")
    print(f"   even sum = {format_scalar(prob.even_sum)}, odd sum = {format_scalar(prob.odd_sum)}")
    print(f"   {_mark(prob.absolutely_continuous_criterion)} absolutely continuous criterion")

    print("\n📊 Orthonormality conditions:")
    for shift, value in ortho.shift_sums.items():
        print(f"   i = {dilation.format_elem(shift)}: sum p_k p_(k+Mi) = {format_scalar(value)}")
    print(f"   {_mark(ortho.passed)} orthonormal")
    print("=" * 70)

    failed = []
    if "probability" in args.require and not prob.absolutely_continuous_criterion:
        failed.append("probability")
    if "orthonormality" in args.require and not ortho.passed:
        failed.append("orthonormality")
    if failed:
        print(f"❌ Required condition(s) fail: {', '.join(failed)}")
        return 1
    return 0


def cmd_cascade(args) -> int:
    svc = _services(args)
    loaded = svc.masks.load(args.mask)
    mask, n = loaded.mask, args.n

    mu = svc.cascade.iterate(mask, n)
    svc.export.export_measure(mu, f"{loaded.name}_mu{n}.csv")
    profile = svc.cascade.tv_profile(mask, n)
    svc.export.export_table(profile, f"{loaded.name}_tv_profile.csv")

    _rule(f"📋 Cascade: {loaded.name}, n = {n}")
    print(f"   |supp mu_{n}| = {len(mu)}, total mass = {format_scalar(mu.total_mass())}")
    print(f"   TV(mu_{n}) = {profile['tv'].iloc[-1]:.9g} (bound {profile['bound'].iloc[-1]:.9g})")
    bound = svc.cascade.support_radius(mask)
    print(f"   support radius R = {bound.radius:.6g}")

    ok = True
    print("\n📊 Lemma checks:")
    for report in (svc.cascade.verify_prob_bounds(mask, n), svc.cascade.verify_sum_squares(mask, n)):
        print(f"   [{report.status.value}] {report.name}: {report.message}")
        ok &= report.status is not CheckStatus.FAIL
    if not check_orthonormality(mask).passed:
        print("   [not_applicable] TV bound: mask is not orthonormal")
    else:
        holds = bool(profile["bound_holds"].all())
        print(f"   [{'pass' if holds else 'fail'}] TV(mu_k) <= sqrt(2^-k card S_k) for k <= {n}")
        ok &= holds

    if args.oracle:
        equal = svc.cascade.enumerate_oracle(mask, n) == mu
        print(f"   {_mark(equal)} oracle enumeration {'matches' if equal else 'differs'}")
        ok &= equal

    if args.probe:
        probe = svc.cascade.convergence_probe(mask, n)
        svc.export.export_table(probe, f"{loaded.name}_convergence.csv")
        print(f"\n📈 Convergence probe: max gap at n = {n}: {probe.loc[probe['n'] == n, 'gap'].max():.3g}")
    print("=" * 70)
    return 0 if ok else 1


def cmd_tiles(args) -> int:
    svc = _services(args)
    loaded = svc.masks.load(args.mask)
    mask = loaded.mask
    dilation = mask.dilation
    transfer = svc.transfer

    bound = transfer.candidate_bound(mask)
    candidates = transfer.candidate_translates(mask)
    observed = transfer.observed_translates(mask)
    pushed = transfer.push_out(mask, candidates)
    leading, rest = transfer.order_tiles(observed, pushed.survivors, loaded.tiles)
    svc.export.export_tiles(dilation, leading + rest, f"{loaded.name}_tiles.csv")

    _rule(f"📋 Tile translates: {loaded.name}")
    print(f"   candidate bound B = {bound.bound:.4f} ({len(candidates)} candidates)")
    print(f"   observed at n = {transfer.probe_depth}: {len(observed)}")
    print(f"      {', '.join(dilation.format_elem(z) for z in leading)}")
    print(f"   push-out survivors: {len(pushed.survivors)} after {pushed.rounds} round(s)")
    if rest:
        print(f"      other survivors: {', '.join(dilation.format_elem(z) for z in rest)}")
    contained = observed <= pushed.survivors
    print(f"   {_mark(contained)} observed translates all survive the push-out")
    print("=" * 70)
    return 0 if contained else 1


def cmd_solve(args) -> int:
    svc = _services(args)
    loaded = svc.masks.load(args.mask)
    mask = loaded.mask
    dilation = mask.dilation
    normalize = args.normalize or loaded.normalize
    result = svc.transfer.solve_mask(mask, loaded.tiles, normalize)
    labels = result.tiles.formatted()

    _rule(f"📋 Transfer system: {loaded.name} ({len(labels)} translates, normalize={normalize})")
    if result.rest:
        status = "applied" if result.reduced else "not applicable"
        print(f"   block reduction {status}: lower-left block zero = {result.lower_left_zero}")
        if result.rest_det is not None:
            print(f"   det(A' - I) = {format_scalar(result.rest_det)}")
    if len(labels) <= MATRIX_PRINT_LIMIT:
        print("\n   A =")
        for label, row in zip(labels, result.matrix.formatted()):
            print(f"   [{label:>6}] " + "  ".join(row))
    svc.export.export_matrix(labels, result.matrix.entries, f"{loaded.name}_matrix.csv")

    print(f"\n📊 1-eigenspace dimension: {result.eigen.dimension}")
    if result.vector is not None:
        for label, x in zip(labels, result.vector):
            text = format_scalar(x) if normalize != "unit" else f"{x:.12g}"
            approx = x.to_float() if normalize != "unit" else x
            print(f"   mu({label} + T) = {text}  (~ {approx:.12g})")
        svc.export.export_vector(labels, result.vector, f"{loaded.name}_vector.csv")
    print(f"   {_mark(result.column_sums.all_one)} column sums all 1")
    print(f"   {_mark(result.fixed_point_exact)} A v = v exactly")

    ok = result.eigen.dimension == 1 and result.fixed_point_exact
    if dilation is Dilation.PLANE and set(mask.support) == set(FOUR_COEFFICIENT_KEYS) and result.rest:
        det = svc.transfer.det_identity_check(result.rest.translates, args.det_samples, args.seed)
        svc.export.export_table(det.to_frame(), f"{loaded.name}_det_identity.csv")
        equal = sum(s.equal for s in det.samples)
        print(f"   {_mark(det.passed)} det identity: {equal}/{len(det.samples)} samples (seed={det.seed})")
        ok &= det.passed

    if args.sweep:
        sweep = svc.transfer.probability_family_sweep(result.tiles.translates, SWEEP_VALUES)
        svc.export.export_table(sweep, f"{loaded.name}_sweep.csv")
        print("\n📈 Probability family p0 = 1/2:")
        for row in sweep.itertuples(index=False):
            print(f"   p_i = {row.p_i}, p_1 = {row.p1}: dimension {row.dimension}")
    print("=" * 70)
    return 0 if ok else 1


def cmd_refine(args) -> int:
    svc = _services(args)
    loaded = svc.masks.load(args.mask)
    levels = _solve_levels(svc, loaded, args.depth)
    frame = RefineService.step_frame(levels)
    svc.export.export_table(frame, f"{loaded.name}_refine_d{args.depth}.csv")

    _rule(f"📋 Refinement: {loaded.name}, scales 0 .. {args.depth}")
    ok = True
    for level in levels:
        total = level.total()
        densities = svc.refine.density_step(level).values()
        ok &= total == ONE
        print(
            f"   {_mark(total == ONE)} scale {level.scale}: {len(level)} tiles, "
            f"sum = {format_scalar(total)}, density in [{min(densities):.6g}, {max(densities):.6g}]"
        )
    for report in (
        svc.refine.verify_density_bounds(loaded.mask, levels),
        svc.refine.verify_l2_bound(loaded.mask, levels),
    ):
        print(f"   [{report.status.value}] {report.name}: {report.message}")
        ok &= report.status is not CheckStatus.FAIL
    print("=" * 70)
    return 0 if ok else 1


def cmd_correspond(args) -> int:
    svc = _services(args)
    loaded = svc.masks.load(args.mask)
    levels = _solve_levels(svc, loaded, args.depth)
    lifted = svc.correspond.lift_step_function(levels[-1])
    svc.export.export_table(
        svc.correspond.lifted_frame(lifted), f"{loaded.name}_lifted_d{args.depth}.csv"
    )

    _rule(f"📋 Line -> twin dragon: {loaded.name}, depth {args.depth}")
    print(f"   {len(lifted)} sub-tiles lifted")
    for prefix, mean in svc.correspond.half_tile_frame(lifted):
        print(f"   mean density on T{prefix}: {mean:.9g}")
    try:
        probe = svc.correspond.discontinuity_probe(loaded.mask)
    except EigenspaceError as e:
        print(f"   ⚠️  point values unavailable: {e}")
    else:
        print(f"   {probe.summary()}")
        print(f"   discontinuous at -i/2: {probe.discontinuous}")
    print("=" * 70)
    return 0


def cmd_render(args) -> int:
    svc = _services(args)
    spec = RasterSpec.from_px(args.px, colormap=args.colormap)
    df = read_table(args.dataset)
    if "address" in df.columns:
        values = {a: float(v) for a, v in zip(df["address"], df["value_float"])}
        image = svc.render.raster_addresses(values, spec, args.sample_depth)
    elif "tile_key" in df.columns:
        level = read_tile_values(args.dataset)[-1]
        if level.dilation is Dilation.LINE:
            image = svc.render.raster_step_function(level, spec)
        else:
            image = svc.render.raster_tile_values(
                svc.refine.density_step(level), level.scale, spec, args.sample_depth
            )
    else:
        raise DilationError(f"{args.dataset}: not a lifted or step-function dataset")
    out = Path(args.out)
    if not out.is_absolute() and out.parent == Path("."):
        out = Path(args.out_dir) / out
    save_image(image, out)
    print(f"✅ {out} ({spec.width}x{spec.height})")
    return 0


def cmd_verify(args) -> int:
    svc = _services(args)
    loaded = svc.masks.load(args.mask)
    suite = VerifyService(
        cascade=svc.cascade,
        transfer=svc.transfer,
        refine=svc.refine,
        correspond=svc.correspond,
        det_samples=args.det_samples,
    )
    report = suite.verify(loaded, args.n, seed=args.seed)
    suite.print_report(report, verbose=not args.quiet)
    report.save_json(Path(args.out_dir) / f"{loaded.name}_verify.json")
    return 0 if report.ok else 1


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.seed, help=f"Seed for sampled checks (default: {settings.seed})")
    common.add_argument("--threads", type=int, default=settings.threads, help="Worker threads (output does not depend on it)")
    common.add_argument("--support-cap", type=int, default=settings.support_cap, help="Max keys per exact measure")
    common.add_argument("--oracle-cap", type=int, default=settings.oracle_cap, help="Max digit tuples for the oracle")
    common.add_argument("--raster-depth-cap", type=int, default=settings.raster_depth_cap, help="Max sampling digits per raster")
    common.add_argument("--det-samples", type=int, default=settings.det_samples, help="Random masks for the det identity")
    common.add_argument("--out-dir", default=settings.output_dir, help="Output directory (env DILATION_OUTPUT_DIR)")
    common.add_argument("--log-level", default=settings.log_level, help="Logging level (default: %(default)s)")

    parser = argparse.ArgumentParser(
        prog="dilation",
        description="Exact cascade solvers for dilation equations on the line and the twin dragon",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:

  # Probability / orthonormality conditions of a bundled mask
  dilation check d4

  # Full acceptance suite
  dilation verify d4 --n 10

  # Exact interval measures of the D4 scaling function
  dilation solve d4 --normalize sum1

  # Exact eigenvector of the three-coefficient twin-dragon mask
  dilation solve dragon3 --normalize first1

  # D4 on [0, 1) carried to the twin dragon, then drawn
  dilation correspond d4 --depth 5 --out-dir out
  dilation render out/d4_lifted_d5.csv --out d4_dragon.ppm --px 512x512 --out-dir out
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="Probability and orthonormality conditions")
    p.add_argument("mask", help="Mask file or bundled mask name")
    p.add_argument(
        "--require",
        action="append",
        default=[],
        choices=["probability", "orthonormality"],
        help="Exit 1 unless this condition holds (repeatable)",
    )
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("cascade", parents=[common], help="Exact mu_n, TV profile and lemma checks")
    p.add_argument("mask")
    p.add_argument("--n", type=int, required=True, help="Cascade depth")
    p.add_argument("--oracle", action="store_true", help="Compare with brute-force enumeration")
    p.add_argument("--probe", action="store_true", help="Float convergence probe against test functions")
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("tiles", parents=[common], help="Candidate, observed and surviving translates")
    p.add_argument("mask")
    p.add_argument("--probe-depth", type=int, default=settings.probe_depth, help="n for observed translates")
    p.set_defaults(func=cmd_tiles)

    p = sub.add_parser("solve", parents=[common], help="Transfer matrix and exact 1-eigenvector")
    p.add_argument("mask")
    p.add_argument("--normalize", choices=NORMALIZE_MODES, help="Defaults to the mask file's setting")
    p.add_argument("--probe-depth", type=int, default=settings.probe_depth)
    p.add_argument("--sweep", action="store_true", help="Eigenspace dimension for p0 = 1/2, p_i in {1/8, 1/4, 3/8}")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("refine", parents=[common], help="Tile values and densities per scale")
    p.add_argument("mask")
    p.add_argument("--depth", type=int, required=True, help="Finest scale")
    p.add_argument("--probe-depth", type=int, default=settings.probe_depth)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("correspond", parents=[common], help="Lift a line step function to the twin dragon")
    p.add_argument("mask")
    p.add_argument("--depth", type=int, required=True, help="Refinement depth of the lifted step function")
    p.add_argument("--probe-depth", type=int, default=settings.probe_depth)
    p.set_defaults(func=cmd_correspond)

    p = sub.add_parser("render", parents=[common], help="Rasterize a lifted or step-function dataset")
    p.add_argument("dataset", help="CSV written by correspond or refine")
    p.add_argument("--out", required=True, help="Output .ppm / .pgm")
    p.add_argument("--px", default="512x512", help="Raster size WxH (default: %(default)s)")
    p.add_argument("--colormap", choices=["diverging", "gray"], default="diverging")
    p.add_argument("--sample-depth", type=int, help="Total digits of sampled points")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("verify", parents=[common], help="Run the acceptance suite")
    p.add_argument("mask")
    p.add_argument("--n", type=int, default=10, help="Cascade depth (default: %(default)s)")
    p.add_argument("--probe-depth", type=int, default=settings.probe_depth)
    p.add_argument("--quiet", action="store_true", help="Only statistics, errors and warnings")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    """Main function."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format=LOG_FORMAT,
        stream=sys.stderr,
    )

    try:
        return args.func(args)
    except (DilationError, OSError, ValueError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"❌ {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
