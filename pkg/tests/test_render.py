"""
Tests for rasters of twin-dragon data and line step plots.
"""
import numpy as np
import pytest

from dilation.exceptions import EmptyDataError, ResourceLimitError
from dilation.models.lattice import Dilation, LatticeElem, TileValueMap
from dilation.models.scalarfield import QuadScalar
from dilation.services.render_service import (
    NEGATIVE_COLOR,
    POSITIVE_COLOR,
    RasterSpec,
    RenderService,
    diverging_colors,
    save_image,
    suffix_points,
)

pytestmark = pytest.mark.unit


@pytest.fixture
def render() -> RenderService:
    return RenderService(raster_depth_cap=14)


class TestRasterSpec:
    def test_from_px(self):
        spec = RasterSpec.from_px("64x32")
        assert (spec.width, spec.height) == (64, 32)
        assert spec.colormap == "diverging"

    @pytest.mark.parametrize("px", ["64", "ax3", "0x5", "10x-1"])
    def test_bad_sizes(self, px):
        with pytest.raises(ValueError):
            RasterSpec.from_px(px)

    def test_bad_viewport_and_colormap(self):
        with pytest.raises(ValueError):
            RasterSpec(8, 8, viewport=(1, 0, 0, 1))
        with pytest.raises(ValueError):
            RasterSpec(8, 8, colormap="jet")


class TestColors:
    def test_diverging_map_anchors(self):
        rgb = diverging_colors(np.array([0.0, 2.0, -2.0]))
        assert rgb[0].tolist() == [255, 255, 255]
        assert rgb[1].tolist() == POSITIVE_COLOR.astype(int).tolist()
        assert rgb[2].tolist() == NEGATIVE_COLOR.astype(int).tolist()

    def test_all_zero_is_white(self):
        assert (diverging_colors(np.zeros(4)) == 255).all()

    def test_suffix_points(self):
        pts = suffix_points(2)
        assert pts.size == 4
        assert np.allclose(pts, [0, 0.5 - 0.5j, -0.5j, 0.5 - 1j])


class TestPlaneRasters:
    def test_address_raster_has_both_signs(self, render):
        image = render.raster_addresses({"0": 1.0, "1": -1.0}, RasterSpec(32, 32), sample_depth=10)
        assert image.shape == (32, 32, 3)
        assert image.dtype == np.uint8
        pixels = {tuple(p) for p in image.reshape(-1, 3).tolist()}
        assert tuple(POSITIVE_COLOR.astype(int)) in pixels
        assert tuple(NEGATIVE_COLOR.astype(int)) in pixels

    def test_constant_data_is_monochrome_in_gray(self, render):
        values = {LatticeElem(0, 0): 0.5, LatticeElem(1, 0): 0.5}
        image = render.raster_tile_values(values, 1, RasterSpec(24, 16, colormap="gray"))
        assert image.shape == (16, 24)
        assert np.unique(image).tolist() == [255]

    def test_empty_data(self, render):
        with pytest.raises(EmptyDataError):
            render.raster_tile_values({}, 0, RasterSpec(8, 8))
        with pytest.raises(EmptyDataError):
            render.raster_addresses({}, RasterSpec(8, 8))

    def test_mixed_address_depths(self, render):
        with pytest.raises(ValueError):
            render.raster_addresses({"0": 1.0, "10": 1.0}, RasterSpec(8, 8))

    def test_depth_cap(self, render):
        with pytest.raises(ResourceLimitError):
            render.raster_tile_values({LatticeElem(0, 0): 1.0}, 0, RasterSpec(8, 8), sample_depth=15)
        with pytest.raises(ResourceLimitError):
            render.raster_tile_values({LatticeElem(0, 0): 1.0}, 16, RasterSpec(8, 8))


class TestStepPlots:
    def test_step_plot_has_bars_and_zero_line(self, render):
        values = TileValueMap(
            Dilation.LINE,
            1,
            {LatticeElem(0, 0): QuadScalar(1), LatticeElem(1, 0): QuadScalar(-1)},
        )
        image = render.raster_step_function(values, RasterSpec(40, 30))
        assert image.shape == (30, 40)
        assert (image == 0).any()
        assert (image == 128).all(axis=1).any()

    def test_plane_values_are_rejected(self, render):
        values = TileValueMap(Dilation.PLANE, 0, {LatticeElem(0, 0): QuadScalar(1)})
        with pytest.raises(ValueError):
            render.raster_step_function(values, RasterSpec(8, 8))


class TestSaveImage:
    def test_rgb_is_p6(self, tmp_path):
        path = save_image(np.zeros((4, 5, 3), dtype=np.uint8), tmp_path / "a.ppm")
        data = path.read_bytes()
        assert data.startswith(b"P6")
        assert b"5 4" in data[:20]

    def test_gray_is_p5(self, tmp_path):
        path = save_image(np.full((3, 3), 255, dtype=np.uint8), tmp_path / "sub" / "b.pgm")
        assert path.read_bytes().startswith(b"P5")
