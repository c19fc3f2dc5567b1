"""
Render Service - rasters of twin-dragon step functions and 1D step plots.

Plane data is drawn by sampling every sub-tile at a fixed digit depth and
averaging the samples that fall in each pixel. Colors use a diverging map
anchored at zero (white): positive values shade to dark blue, negative values
to yellow. Images are written as binary PPM (RGB) or PGM (grayscale).
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Tuple, Union

import numpy as np
from PIL import Image

from dilation.config import settings
from dilation.exceptions import EmptyDataError, ResourceLimitError
from dilation.models.lattice import Dilation, LatticeElem, RadixAddress, TileValueMap

logger = logging.getLogger(__name__)

Viewport = Tuple[Fraction, Fraction, Fraction, Fraction]

ZERO_COLOR = np.array([255, 255, 255], dtype=np.float64)
POSITIVE_COLOR = np.array([8, 48, 107], dtype=np.float64)
NEGATIVE_COLOR = np.array([250, 200, 20], dtype=np.float64)
BACKGROUND_COLOR = np.array([200, 200, 200], dtype=np.uint8)

COLORMAPS = ("diverging", "gray")
DEFAULT_EXTRA_DIGITS = 10


@dataclass(frozen=True)
class RasterSpec:
    """Pixel size, viewport (xmin, xmax, ymin, ymax) and colormap of a raster."""

    width: int
    height: int
    viewport: Optional[Viewport] = None
    colormap: str = "diverging"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"raster size must be at least 1x1, got {self.width}x{self.height}")
        if self.viewport is not None:
            xmin, xmax, ymin, ymax = self.viewport
            if not (xmin < xmax and ymin < ymax):
                raise ValueError(f"empty viewport {self.viewport}")
        if self.colormap not in COLORMAPS:
            raise ValueError(f"unknown colormap {self.colormap!r}; expected one of {COLORMAPS}")

    @classmethod
    def from_px(cls, px: str, **kwargs) -> "RasterSpec":
        """Parse 'WxH'."""
        try:
            w, h = (int(part) for part in px.lower().split("x"))
        except ValueError as e:
            raise ValueError(f"expected WxH, got {px!r}") from e
        return cls(width=w, height=h, **kwargs)


def diverging_colors(values: np.ndarray, vmax: Optional[float] = None) -> np.ndarray:
    """Map values to RGB rows; 0 -> white, +vmax -> dark blue, -vmax -> yellow."""
    if vmax is None:
        vmax = float(np.max(np.abs(values))) if values.size else 0.0
    t = np.zeros_like(values) if vmax == 0.0 else np.clip(np.abs(values) / vmax, 0.0, 1.0)
    target = np.where((values < 0)[:, None], NEGATIVE_COLOR, POSITIVE_COLOR)
    rgb = ZERO_COLOR * (1.0 - t[:, None]) + target * t[:, None]
    return np.rint(rgb).astype(np.uint8)


def suffix_points(depth: int) -> np.ndarray:
    """All points sum_j gamma_j (1+i)^-j over digit strings of the given length."""
    pts = np.zeros(1, dtype=np.complex128)
    step = 1.0 + 0.0j
    for _ in range(depth):
        step = step / (1 + 1j)
        pts = np.concatenate([pts, pts + step])
    return pts


def save_image(image: np.ndarray, path: Union[str, Path]) -> Path:
    """Write uint8 (H, W, 3) as P6 or (H, W) as P5."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(path, format="PPM")
    logger.info(f"✅ Image saved: {path} ({image.shape[1]}x{image.shape[0]})")
    return path


class RenderService:
    """Service rasterizing tile data."""

    def __init__(self, raster_depth_cap: Optional[int] = None):
        self.raster_depth_cap = (
            raster_depth_cap if raster_depth_cap is not None else settings.raster_depth_cap
        )

    def raster_addresses(
        self, values: Mapping[str, float], spec: RasterSpec, sample_depth: Optional[int] = None
    ) -> np.ndarray:
        """Rasterize address-indexed twin-dragon data (all addresses of one depth)."""
        if not values:
            raise EmptyDataError("no addresses to render")
        depths = {len(a) for a in values}
        if len(depths) != 1:
            raise ValueError(f"addresses of mixed depth {sorted(depths)}")
        depth = depths.pop()
        keyed = {RadixAddress(a, Dilation.PLANE).lattice_key(): v for a, v in values.items()}
        return self.raster_tile_values(keyed, depth, spec, sample_depth)

    def raster_tile_values(
        self,
        values: Mapping[LatticeElem, float],
        scale: int,
        spec: RasterSpec,
        sample_depth: Optional[int] = None,
    ) -> np.ndarray:
        """
        Rasterize scale-n plane tile data.

        Args:
            values: key g -> value on the sub-tile M^-n (g + T)
            scale: n
            spec: Raster size, viewport and colormap
            sample_depth: Total digits of the sampled points (n + extra digits)

        Returns:
            uint8 array (H, W, 3) for the diverging map, (H, W) for gray

        Raises:
            EmptyDataError: no values
            ResourceLimitError: sample_depth above raster_depth_cap
        """
        if not values:
            raise EmptyDataError("no tile values to render")
        if sample_depth is None:
            sample_depth = min(self.raster_depth_cap, scale + DEFAULT_EXTRA_DIGITS)
        sample_depth = max(sample_depth, scale)
        if sample_depth > self.raster_depth_cap:
            raise ResourceLimitError("raster sampling depth", sample_depth, self.raster_depth_cap)

        keys = sorted(values)
        shrink = (1 + 1j) ** (-scale)
        base = np.array([complex(g.re, g.im) for g in keys], dtype=np.complex128) * shrink
        cell = suffix_points(sample_depth - scale) * shrink
        points = (base[:, None] + cell[None, :]).ravel()
        samples = np.repeat(np.array([values[g] for g in keys], dtype=np.float64), cell.size)
        logger.debug(f"Rasterizing {points.size} samples from {len(keys)} tiles")

        if spec.viewport is None:
            xmin, xmax = float(points.real.min()), float(points.real.max())
            ymin, ymax = float(points.imag.min()), float(points.imag.max())
            pad = 0.02 * max(xmax - xmin, ymax - ymin, 1e-9)
            xmin, xmax, ymin, ymax = xmin - pad, xmax + pad, ymin - pad, ymax + pad
        else:
            xmin, xmax, ymin, ymax = (float(v) for v in spec.viewport)

        w, h = spec.width, spec.height
        px = np.floor((points.real - xmin) / (xmax - xmin) * w).astype(np.int64)
        py = np.floor((ymax - points.imag) / (ymax - ymin) * h).astype(np.int64)
        inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
        flat = py[inside] * w + px[inside]
        sums = np.bincount(flat, weights=samples[inside], minlength=w * h)
        counts = np.bincount(flat, minlength=w * h)
        covered = counts > 0
        means = np.zeros(w * h, dtype=np.float64)
        means[covered] = sums[covered] / counts[covered]

        if spec.colormap == "gray":
            gray = np.full(w * h, 255, dtype=np.uint8)
            if covered.any():
                lo, hi = means[covered].min(), means[covered].max()
                span = hi - lo
                level = np.zeros(covered.sum()) if span == 0 else (means[covered] - lo) / span
                gray[covered] = np.rint(255 * (1.0 - level)).astype(np.uint8)
            return gray.reshape(h, w)

        rgb = np.tile(BACKGROUND_COLOR, (w * h, 1))
        if covered.any():
            rgb[covered] = diverging_colors(means[covered])
        return rgb.reshape(h, w, 3)

    def raster_step_function(self, values: TileValueMap, spec: RasterSpec) -> np.ndarray:
        """
        Plot a line step function as a grayscale bar chart of its densities.

        Bars are black on white; the zero line is mid-gray.
        """
        if values.dilation is not Dilation.LINE:
            raise ValueError("step plots are drawn for line step functions")
        if not values.values:
            raise EmptyDataError("no tile values to plot")
        n = values.scale
        factor = 2**n
        keys = sorted(g.re for g in values.values)
        density = {g.re: v.to_float() * factor for g, v in values.values.items()}

        if spec.viewport is None:
            xmin, xmax = keys[0] / factor, (keys[-1] + 1) / factor
            lo, hi = min(0.0, *density.values()), max(0.0, *density.values())
            pad = 0.05 * max(hi - lo, 1e-9)
            ymin, ymax = lo - pad, hi + pad
        else:
            xmin, xmax, ymin, ymax = (float(v) for v in spec.viewport)

        w, h = spec.width, spec.height
        xs = xmin + (np.arange(w) + 0.5) * (xmax - xmin) / w
        cols = np.array([density.get(int(k), 0.0) for k in np.floor(xs * factor)])
        ys = ymax - (np.arange(h) + 0.5) * (ymax - ymin) / h
        y = ys[:, None]
        bar = ((y >= 0) & (y <= cols[None, :])) | ((y <= 0) & (y >= cols[None, :]))
        image = np.full((h, w), 255, dtype=np.uint8)
        image[bar] = 0
        zero_row = int(np.floor((ymax - 0.0) / (ymax - ymin) * h))
        if 0 <= zero_row < h:
            image[zero_row, :] = 128
        return image
