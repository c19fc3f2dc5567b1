"""Domain models: exact scalars, lattices, masks and measures."""
from dilation.models.lattice import (
    Dilation,
    LatticeElem,
    RadixAddress,
    TileValueMap,
    address_point,
    greedy_digits,
    greedy_expand,
)
from dilation.models.measure import (
    CheckStatus,
    CoefficientMask,
    DiscreteMeasure,
    check_orthonormality,
    check_probability,
    convolve,
    mask_mu1,
    pushforward_d,
)
from dilation.models.scalarfield import QuadScalar, format_scalar, parse_scalar

__all__ = [
    "Dilation",
    "LatticeElem",
    "RadixAddress",
    "TileValueMap",
    "address_point",
    "greedy_digits",
    "greedy_expand",
    "CheckStatus",
    "CoefficientMask",
    "DiscreteMeasure",
    "check_orthonormality",
    "check_probability",
    "convolve",
    "mask_mu1",
    "pushforward_d",
    "QuadScalar",
    "format_scalar",
    "parse_scalar",
]
