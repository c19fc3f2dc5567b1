"""
Tests for the refinement cascade of tile measures and its density checks.
"""
import pytest

from dilation.exceptions import NotApplicableError
from dilation.models.lattice import Dilation, LatticeElem, TileValueMap
from dilation.models.measure import CheckStatus
from dilation.models.scalarfield import ONE, ZERO
from dilation.services.mask_service import build_mask
from dilation.services.refine_service import RefineService

pytestmark = pytest.mark.integration


@pytest.fixture(scope="module")
def d4_levels(refine, load_mask, solved):
    base = solved("d4").tile_values("sum1")
    return [base] + refine.refine_values(load_mask("d4").mask, base, 8)


@pytest.fixture(scope="module")
def dragon3_levels(refine, load_mask, solved):
    base = solved("dragon3", "first1").tile_values("sum1")
    return [base] + refine.refine_values(load_mask("dragon3").mask, base, 8)


class TestRefineValues:
    def test_scale_one_matches_golden_decimals(self, d4_levels, golden):
        level = d4_levels[1]
        assert level.scale == 1
        expected = golden("d4")["scale1_values"]
        for g, value in enumerate(expected):
            assert level.values.get(LatticeElem(g, 0), ZERO).to_float() == pytest.approx(value, abs=1e-8)

    def test_scale_one_support(self, d4_levels):
        assert sorted(g.re for g in d4_levels[1].values) == list(range(6))

    @pytest.mark.parametrize("levels", ["d4_levels", "dragon3_levels"])
    def test_mass_is_conserved(self, request, levels):
        for level in request.getfixturevalue(levels):
            assert level.total() == ONE

    def test_density_identity_holds_exactly(self, refine, load_mask, d4_levels):
        mask = load_mask("d4").mask
        for coarse, fine in zip(d4_levels, d4_levels[1:]):
            assert refine.check_density_identity(mask, coarse, fine)

    def test_density_identity_detects_a_tampered_scale(self, refine, load_mask, d4_levels):
        coarse, fine = d4_levels[2], d4_levels[3]
        values = dict(fine.values)
        key = next(iter(values))
        values[key] = values[key] + ONE
        tampered = TileValueMap(fine.dilation, fine.scale, values)
        assert not refine.check_density_identity(load_mask("d4").mask, coarse, tampered)

    @pytest.mark.parametrize("name, levels, depth", [("d4", "d4_levels", 6), ("dragon3", "dragon3_levels", 4)])
    def test_cascade_convolution_agrees_with_refinement(self, request, refine, load_mask, name, levels, depth):
        refined = request.getfixturevalue(levels)
        from_cascade = refine.cascade_values(load_mask(name).mask, refined[0], depth)
        assert [level.scale for level in from_cascade] == list(range(1, depth + 1))
        for level in from_cascade:
            assert level.values == refined[level.scale].values, level.scale

    def test_density_identity_from_cascade_side(self, refine, load_mask, d4_levels):
        mask = load_mask("d4").mask
        coarse = refine.cascade_values(mask, d4_levels[0], 3)[-1]
        assert refine.check_density_identity(mask, coarse, d4_levels[4])
        doubled = TileValueMap(Dilation.LINE, 4, {g: v + v for g, v in d4_levels[4].values.items()})
        assert not refine.check_density_identity(mask, coarse, doubled)

    def test_density_identity_needs_adjacent_scales(self, refine, load_mask, d4_levels):
        with pytest.raises(ValueError):
            refine.check_density_identity(load_mask("d4").mask, d4_levels[1], d4_levels[3])

    def test_base_must_be_scale_zero(self, refine, load_mask, d4_levels):
        with pytest.raises(ValueError):
            refine.refine_values(load_mask("d4").mask, d4_levels[1], 2)

    def test_plane_keys_are_lattice_elements(self, dragon3_levels):
        level = dragon3_levels[4]
        assert level.dilation is Dilation.PLANE
        assert len(level) > len(dragon3_levels[0])


class TestDensityTheorems:
    def test_l2_profile_is_monotone_and_bounded(self, refine, d4_levels):
        profile = refine.l2_profile(d4_levels)
        assert list(profile["n"]) == list(range(9))
        assert profile["at_most_one"].all()
        assert profile["non_decreasing"].all()
        assert profile["l2_sq"].iloc[-1] <= 1.0

    def test_l2_bound_for_orthonormal_mask(self, refine, load_mask, d4_levels):
        report = refine.verify_l2_bound(load_mask("d4").mask, d4_levels)
        assert report.status is CheckStatus.PASS
        assert report.levels_checked == 9

    def test_l2_bound_not_applicable_without_orthonormality(self, refine, load_mask, dragon3_levels):
        report = refine.verify_l2_bound(load_mask("dragon3").mask, dragon3_levels)
        assert report.status is CheckStatus.NOT_APPLICABLE

    def test_density_bounds_for_probability_mask(self, refine, load_mask, dragon3_levels):
        report = refine.verify_density_bounds(load_mask("dragon3").mask, dragon3_levels)
        assert report.status is CheckStatus.PASS
        assert 0 < report.worst_value <= 1

    def test_density_bounds_not_applicable_for_signed_mask(self, refine, load_mask, d4_levels):
        report = refine.verify_density_bounds(load_mask("d4").mask, d4_levels)
        assert report.status is CheckStatus.NOT_APPLICABLE

    def test_density_bounds_need_mass_one(self, refine, load_mask, solved):
        first1 = solved("dragon3", "first1").tile_values("first1")
        report = refine.verify_density_bounds(load_mask("dragon3").mask, [first1])
        assert report.status is CheckStatus.NOT_APPLICABLE


class TestHalfOpen:
    def test_d4_extra_tile_is_forced_to_zero(self, refine, load_mask):
        report = refine.halfopen_consistency(load_mask("d4").mask)
        assert report.tiles == [-1, 0, 1, 2]
        assert report.consistent
        assert report.forced_zero
        assert report.extra_value == ZERO

    def test_point_mass_lives_on_the_extra_tile(self, refine):
        report = refine.halfopen_consistency(build_mask("line", {"0": "1"}))
        assert report.tiles == [-1]
        assert not report.forced_zero
        assert report.extra_value == ONE

    def test_plane_is_not_applicable(self, refine, load_mask):
        with pytest.raises(NotApplicableError):
            refine.halfopen_consistency(load_mask("dragon3").mask)

    def test_negative_support_is_not_applicable(self, refine):
        with pytest.raises(NotApplicableError):
            refine.halfopen_consistency(build_mask("line", {"-1": "1/2", "0": "1/2"}))


class TestFrames:
    def test_step_frame_line(self, d4_levels):
        frame = RefineService.step_frame(d4_levels[:2])
        assert list(frame.columns) == [
            "dilation", "tile_key", "scale", "address_or_interval", "value_exact", "density_float",
        ]
        first = frame.iloc[0]
        assert first["address_or_interval"] == "[0,1]"
        assert first["value_exact"] == "5/12+1/4*sqrt(3)"
        scale1 = frame[frame["scale"] == 1]
        assert scale1.iloc[1]["address_or_interval"] == "[1/2,1]"
        assert scale1.iloc[0]["density_float"] == pytest.approx(2 * 0.290170901, abs=1e-8)

    def test_density_step(self, refine, d4_levels):
        density = refine.density_step(d4_levels[1])
        assert density[LatticeElem(0, 0)] == pytest.approx(2 * 0.290170901, abs=1e-8)

    @pytest.mark.slow
    def test_refinement_consistency(self, refine, load_mask, d4_levels):
        frame = refine.refinement_consistency(load_mask("d4").mask, d4_levels[:4], n_float=20)
        assert list(frame["scale"]) == [0, 1, 2, 3]
        assert (frame["max_abs_error"] <= 1e-6).all()
