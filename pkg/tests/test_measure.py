"""
Tests for coefficient masks, discrete measures and the condition checkers.
"""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dilation.exceptions import DilationMismatchError, MaskError
from dilation.models.lattice import ORIGIN, Dilation, LatticeElem
from dilation.models.measure import (
    CheckStatus,
    CoefficientMask,
    DiscreteMeasure,
    check_orthonormality,
    check_probability,
    convolve,
    delta,
    mask_mu1,
    pushforward_d,
    rescale,
)
from dilation.models.scalarfield import ONE, ZERO, QuadScalar
from dilation.services.mask_service import build_mask

pytestmark = pytest.mark.unit

small = st.fractions(min_value=-3, max_value=3, max_denominator=8)
weights = st.lists(small, min_size=1, max_size=5)


def _measure(values, scale, dilation=Dilation.LINE):
    return DiscreteMeasure(dilation, scale, {LatticeElem(i, 0): QuadScalar(v) for i, v in enumerate(values)})


class TestCoefficientMask:
    def test_zero_coefficients_are_dropped(self):
        mask = build_mask("line", {"0": "1", "1": "0"})
        assert mask.support == [LatticeElem(0, 0)]
        assert len(mask) == 1

    def test_sum_must_be_one(self):
        with pytest.raises(MaskError):
            build_mask("line", {"0": "1/2", "1": "1/4"})

    def test_empty_support(self):
        with pytest.raises(MaskError):
            CoefficientMask(Dilation.LINE, {LatticeElem(0, 0): ZERO})

    def test_line_keys_must_be_real(self):
        with pytest.raises(MaskError):
            CoefficientMask(Dilation.LINE, {LatticeElem(0, 1): ONE})

    def test_field_must_match(self):
        with pytest.raises(MaskError):
            CoefficientMask(
                Dilation.LINE,
                {LatticeElem(0, 0): QuadScalar(1, 1, 2), LatticeElem(1, 0): QuadScalar(0, -1, 2)},
                field_d=3,
            )

    def test_max_norm_with_shifts(self, load_mask):
        mask = load_mask("dragon4").mask
        assert mask.max_norm_sq() == 5
        assert mask.max_norm_sq(shifts=(0, 1)) == 5
        assert load_mask("d4").mask.max_norm_sq(shifts=(0, 1)) == 9


class TestDiscreteMeasure:
    def test_zero_weights_are_dropped(self):
        mu = DiscreteMeasure(Dilation.LINE, 0, {ORIGIN: ONE, LatticeElem(1, 0): ZERO})
        assert len(mu) == 1
        assert mu.weight(LatticeElem(1, 0)) == ZERO

    def test_norms(self):
        mu = _measure([Fraction(3, 2), Fraction(-1, 2)], 1)
        assert mu.total_mass() == ONE
        assert mu.tv_norm() == QuadScalar(2)
        assert mu.sum_squares() == QuadScalar(Fraction(5, 2))

    def test_rescale_keeps_points(self):
        mu = _measure([1, 2], 1)
        finer = rescale(mu, 3)
        assert finer.weights == {LatticeElem(0, 0): QuadScalar(1), LatticeElem(4, 0): QuadScalar(2)}
        with pytest.raises(ValueError):
            rescale(mu, 0)

    def test_pushforward_and_mu1(self, load_mask):
        mask = load_mask("d4").mask
        mu1 = mask_mu1(mask)
        assert mu1.scale == 1
        assert mu1.total_mass() == ONE
        assert pushforward_d(mu1).scale == 2
        assert pushforward_d(mu1).weights == mu1.weights

    def test_convolution_with_delta_is_identity(self):
        mu = _measure([Fraction(1, 3), Fraction(2, 3)], 2)
        assert convolve(mu, delta(Dilation.LINE)) == mu

    def test_convolution_dilation_mismatch(self):
        with pytest.raises(DilationMismatchError):
            convolve(delta(Dilation.LINE), delta(Dilation.PLANE))

    @given(weights, weights, st.integers(min_value=0, max_value=3), st.integers(min_value=0, max_value=3))
    def test_convolution_multiplies_mass_and_bounds_tv(self, a, b, sa, sb):
        mu, nu = _measure(a, sa), _measure(b, sb)
        out = convolve(mu, nu)
        assert out.scale == max(sa, sb)
        assert out.total_mass() == mu.total_mass() * nu.total_mass()
        assert out.tv_norm() <= mu.tv_norm() * nu.tv_norm()


class TestConditions:
    def test_d4_is_orthonormal_not_probability(self, load_mask):
        mask = load_mask("d4").mask
        prob = check_probability(mask)
        assert not prob.all_nonneg
        assert prob.negative_keys == [LatticeElem(3, 0)]
        assert prob.even_sum == QuadScalar(Fraction(1, 2))
        assert prob.status is CheckStatus.FAIL

        ortho = check_orthonormality(mask)
        assert ortho.passed
        assert ortho.shift_sums[ORIGIN] == QuadScalar(Fraction(1, 2))
        assert ortho.shift_sums[LatticeElem(1, 0)] == ZERO
        assert ortho.status.ok

    def test_dragon3_is_probability_not_orthonormal(self, load_mask):
        mask = load_mask("dragon3").mask
        prob = check_probability(mask)
        assert prob.absolutely_continuous_criterion
        assert prob.odd_sum == QuadScalar(Fraction(1, 2))
        assert not check_orthonormality(mask).passed

    def test_dragon4_lift_is_orthonormal(self, load_mask):
        assert check_orthonormality(load_mask("dragon4").mask).passed

    def test_dirac_fails_both(self, load_mask):
        mask = load_mask("dirac").mask
        assert not check_probability(mask).absolutely_continuous_criterion
        report = check_orthonormality(mask)
        assert not report.passed
        assert report.worst_shift == ORIGIN

    def test_haar_satisfies_both(self, load_mask):
        for name in ("uniform_line", "haar_plane"):
            mask = load_mask(name).mask
            assert check_probability(mask).absolutely_continuous_criterion
            assert check_orthonormality(mask).passed
