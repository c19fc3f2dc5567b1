"""
Tests for exact dyadic point values and the line to twin-dragon transport.
"""
from fractions import Fraction

import pytest

from dilation.exceptions import EigenspaceError, LatticeParseError, NotApplicableError
from dilation.models.lattice import Dilation, LatticeElem, TileValueMap
from dilation.models.scalarfield import ONE, QuadScalar, format_scalar, parse_scalar
from dilation.services.correspond_service import DiscontinuityReport, lift_dyadic, unlift_address
from dilation.services.mask_service import build_mask


@pytest.fixture(scope="module")
def d4_scale4(refine, load_mask, solved) -> TileValueMap:
    base = solved("d4").tile_values("sum1")
    return refine.refine_values(load_mask("d4").mask, base, 4)[-1]


class TestPointValues:
    @pytest.mark.unit
    def test_integer_values(self, correspond, load_mask, golden):
        values = correspond.integer_values(load_mask("d4").mask)
        expected = {int(i): parse_scalar(v) for i, v in golden("d4")["integer_values"].items()}
        assert values == expected
        assert sum(values.values(), QuadScalar(0)) == ONE

    @pytest.mark.unit
    def test_dyadic_values(self, correspond, load_mask, golden):
        pv = correspond.point_values(load_mask("d4").mask, 2)
        for x, v in golden("d4")["point_values"].items():
            assert pv.at(Fraction(x)) == parse_scalar(v), x

    @pytest.mark.unit
    def test_values_outside_the_support_are_zero(self, correspond, load_mask):
        pv = correspond.point_values(load_mask("d4").mask, 3)
        assert not pv.at(Fraction(-1, 8))
        assert not pv.at(Fraction(3))

    @pytest.mark.unit
    def test_point_frame(self, correspond, load_mask):
        frame = correspond.point_frame(correspond.point_values(load_mask("d4").mask, 1))
        assert list(frame.columns) == ["x", "value_exact", "value_float"]
        assert list(frame["x"]) == ["1/2", "1", "2", "5/2"]

    @pytest.mark.unit
    def test_plane_is_not_applicable(self, correspond, load_mask):
        with pytest.raises(NotApplicableError):
            correspond.integer_values(load_mask("dragon3").mask)

    @pytest.mark.unit
    def test_point_mass_has_no_integer_system(self, correspond, load_mask):
        with pytest.raises(EigenspaceError):
            correspond.integer_values(load_mask("dirac").mask)


@pytest.mark.unit
class TestDiscontinuity:
    def test_d4_lift_jumps_by_sqrt3(self, correspond, load_mask):
        report = correspond.discontinuity_probe(load_mask("d4").mask)
        assert report.ratio == QuadScalar.sqrt(3)
        assert report.discontinuous
        assert f"ratio = {format_scalar(QuadScalar.sqrt(3))}" in report.summary()

    def test_haar_lift_is_continuous_there(self, correspond, load_mask):
        report = correspond.discontinuity_probe(load_mask("uniform_line").mask)
        assert report.along_t01 == report.along_t10 == ONE
        assert not report.discontinuous
        assert report.ratio == ONE

    def test_zero_limit_has_no_ratio(self):
        report = DiscontinuityReport(along_t01=QuadScalar(0), along_t10=ONE)
        assert report.ratio is None
        assert "undefined" in report.summary()


@pytest.mark.unit
class TestAddresses:
    def test_lift_dyadic(self):
        assert lift_dyadic("1") == (Fraction(1, 2), Fraction(-1, 2))
        assert lift_dyadic("") == (Fraction(0), Fraction(0))

    def test_unlift_address(self):
        assert unlift_address("110") == Fraction(3, 4)
        assert unlift_address("01") == Fraction(1, 4)

    def test_unlift_rejects_other_digits(self):
        with pytest.raises(LatticeParseError):
            unlift_address("012")

    def test_quarter_points_meet_at_minus_half_i(self):
        # .01 lands on -i/2; .10111... tends to the same point
        assert lift_dyadic("01") == (Fraction(0), Fraction(-1, 2))
        x, y = lift_dyadic("10" + "1" * 24)
        assert abs(float(x)) < 1e-3 and abs(float(y) + 0.5) < 1e-3


@pytest.mark.integration
class TestLift:
    def test_one_sub_tile_per_dyadic_interval(self, correspond, d4_scale4):
        lifted = correspond.lift_step_function(d4_scale4)
        assert lifted.depth == 4
        assert len(lifted) == 16
        assert all(len(a) == 4 for a in lifted.values)

    def test_values_follow_the_digits(self, correspond, d4_scale4):
        lifted = correspond.lift_step_function(d4_scale4)
        raw = correspond.lift_step_function(d4_scale4, density=False)
        # address 0110 is the interval [6/16, 7/16]
        assert raw.values["0110"] == d4_scale4.values[LatticeElem(6, 0)]
        assert lifted.values["0110"] == raw.values["0110"] * 16

    def test_lifted_frame(self, correspond, d4_scale4):
        frame = correspond.lifted_frame(correspond.lift_step_function(d4_scale4))
        assert list(frame.columns) == ["address", "re", "im", "value_float"]
        assert frame["address"].iloc[0] == "0000"
        row = frame[frame["address"] == "1000"].iloc[0]
        assert (row["re"], row["im"]) == (0.5, -0.5)

    def test_half_tile_means(self, correspond):
        values = TileValueMap(
            Dilation.LINE,
            1,
            {LatticeElem(0, 0): QuadScalar(Fraction(1, 4)), LatticeElem(1, 0): QuadScalar(Fraction(3, 4))},
        )
        means = dict(correspond.half_tile_frame(correspond.lift_step_function(values)))
        assert means["0"] == pytest.approx(0.5)
        assert means["1"] == pytest.approx(1.5)

    def test_plane_values_cannot_be_lifted(self, correspond):
        values = TileValueMap(Dilation.PLANE, 0, {LatticeElem(0, 0): ONE})
        with pytest.raises(NotApplicableError):
            correspond.lift_step_function(values)

    def test_point_mass_probe_is_not_available(self, correspond):
        with pytest.raises(EigenspaceError):
            correspond.discontinuity_probe(build_mask("line", {"0": "1"}))
