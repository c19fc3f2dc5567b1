"""
Tests for lattice arithmetic, radix addresses and greedy tile membership.
"""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dilation.exceptions import LatticeParseError
from dilation.models.lattice import (
    ORIGIN,
    Dilation,
    LatticeElem,
    RadixAddress,
    TileValueMap,
    address_point,
    greedy_digits,
    greedy_expand,
)
from dilation.models.scalarfield import QuadScalar

pytestmark = pytest.mark.unit

coords = st.integers(min_value=-500, max_value=500)
gaussian = st.builds(LatticeElem, coords, coords)
integers = st.builds(lambda re: LatticeElem(re, 0), coords)
digit_strings = st.text(alphabet="01", min_size=0, max_size=14)


class TestArithmetic:
    @given(gaussian)
    def test_plane_div_inverts_mul(self, g):
        plane = Dilation.PLANE
        assert plane.div_m(plane.mul_m(g)) == g
        assert plane.parity(plane.mul_m(g)) == 0

    @given(integers)
    def test_line_div_inverts_mul(self, g):
        line = Dilation.LINE
        assert line.div_m(line.mul_m(g)) == g

    @given(gaussian)
    def test_odd_elements_have_no_quotient(self, g):
        plane = Dilation.PLANE
        odd = plane.mul_m(g) + LatticeElem(1, 0)
        assert plane.parity(odd) == 1
        assert plane.div_m(odd) is None

    def test_plane_multiplication_is_by_one_plus_i(self):
        # (2 + 3i)(1 + i) = -1 + 5i
        assert Dilation.PLANE.mul_m(LatticeElem(2, 3)) == LatticeElem(-1, 5)
        assert Dilation.PLANE.mul_m_power(LatticeElem(1, 0), 2) == LatticeElem(0, 2)

    def test_modulus(self):
        assert Dilation.LINE.modulus_sq == 4
        assert Dilation.PLANE.modulus_sq == 2
        assert Dilation.PLANE.modulus * Dilation.PLANE.modulus == QuadScalar(2)
        assert Dilation.LINE.det_abs == Dilation.PLANE.det_abs == 2

    @given(gaussian, st.integers(min_value=0, max_value=8))
    def test_scaled_point_inverts_dilation(self, g, n):
        plane = Dilation.PLANE
        assert plane.scaled_point(plane.mul_m_power(g, n), n) == (Fraction(g.re), Fraction(g.im))


class TestTextForms:
    @pytest.mark.parametrize(
        "text, elem",
        [
            ("3", LatticeElem(3, 0)),
            ("-2", LatticeElem(-2, 0)),
            ("i", LatticeElem(0, 1)),
            ("-i", LatticeElem(0, -1)),
            ("2i", LatticeElem(0, 2)),
            ("1-2i", LatticeElem(1, -2)),
            ("-1+i", LatticeElem(-1, 1)),
            (" 2 + i ", LatticeElem(2, 1)),
        ],
    )
    def test_parse_plane(self, text, elem):
        assert Dilation.PLANE.parse_elem(text) == elem

    @given(gaussian)
    def test_plane_round_trip(self, g):
        plane = Dilation.PLANE
        assert plane.parse_elem(plane.format_elem(g)) == g

    @given(integers)
    def test_line_round_trip(self, g):
        line = Dilation.LINE
        assert line.parse_elem(line.format_elem(g)) == g

    @pytest.mark.parametrize("text", ["i", "1+i", "x", "", "1.5"])
    def test_line_rejects_non_integers(self, text):
        with pytest.raises(LatticeParseError):
            Dilation.LINE.parse_elem(text)

    def test_line_elem_rejects_imaginary_part(self):
        with pytest.raises(LatticeParseError):
            Dilation.LINE.elem(1, 1)


class TestRadix:
    @given(digit_strings)
    def test_greedy_digits_inverts_lattice_key(self, digits):
        for dilation in Dilation:
            address = RadixAddress(digits, dilation)
            found = greedy_digits(dilation, address.lattice_key(), len(digits))
            assert found is not None
            assert found.digits == digits

    @given(gaussian, st.integers(min_value=0, max_value=10))
    def test_greedy_expand_reconstructs(self, g, n):
        plane = Dilation.PLANE
        residue, digits = greedy_expand(plane, g, n)
        rebuilt = plane.mul_m_power(residue, n) + RadixAddress(digits, plane).lattice_key()
        assert rebuilt == g

    def test_digits_are_in_address_order(self):
        # 6 = 110 in binary: gamma_1 = 1, gamma_2 = 1, gamma_3 = 0
        address = greedy_digits(Dilation.LINE, LatticeElem(6, 0), 3)
        assert address.digits == "110"
        assert address.point() == (Fraction(3, 4), Fraction(0))

    def test_line_points_outside_the_unit_interval(self):
        assert greedy_digits(Dilation.LINE, LatticeElem(8, 0), 3) is None
        assert greedy_expand(Dilation.LINE, LatticeElem(-1, 0), 3) == (LatticeElem(-1, 0), "111")

    def test_plane_address_points(self):
        # 1/(1+i) = (1 - i)/2 and the all-ones tail tends to -i
        assert address_point(RadixAddress("1", Dilation.PLANE)) == (Fraction(1, 2), Fraction(-1, 2))
        assert address_point(RadixAddress("01", Dilation.PLANE)) == (Fraction(0), Fraction(-1, 2))
        x, y = address_point(RadixAddress("1" * 20, Dilation.PLANE))
        assert abs(float(x)) < 1e-2 and abs(float(y) + 1) < 1e-2

    def test_origin_is_its_own_residue(self):
        assert greedy_expand(Dilation.PLANE, ORIGIN, 5) == (ORIGIN, "00000")

    def test_invalid_address(self):
        with pytest.raises(LatticeParseError):
            RadixAddress("012", Dilation.PLANE)


class TestTileValueMap:
    def test_total_and_order(self):
        values = TileValueMap(
            Dilation.LINE,
            1,
            {LatticeElem(1, 0): QuadScalar(Fraction(1, 4)), LatticeElem(0, 0): QuadScalar(Fraction(3, 4))},
        )
        assert values.total() == 1
        assert list(values.keys_sorted()) == [LatticeElem(0, 0), LatticeElem(1, 0)]
        assert len(values) == 2
