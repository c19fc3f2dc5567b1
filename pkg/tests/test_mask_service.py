"""
Tests for loading, validating and saving mask files.
"""
import json

import pytest

from dilation.exceptions import MaskError
from dilation.models.lattice import Dilation, LatticeElem
from dilation.services.mask_service import BUNDLED_MASKS, MaskService

pytestmark = pytest.mark.unit


def _write(path, payload) -> str:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


@pytest.mark.parametrize("name", BUNDLED_MASKS)
def test_bundled_masks_load(mask_service, name):
    loaded = mask_service.load(name)
    assert loaded.name == name
    assert loaded.source.endswith(f"{name}.json")


def test_stored_tiles_and_normalization(mask_service):
    loaded = mask_service.load("dragon3")
    assert loaded.mask.dilation is Dilation.PLANE
    assert loaded.tiles[:3] == [LatticeElem(0, 0), LatticeElem(0, 1), LatticeElem(1, 1)]
    assert loaded.normalize == "first1"


def test_save_and_load_back(mask_service, tmp_path):
    original = mask_service.load("d4")
    path = mask_service.save(original, tmp_path / "copy.json")
    again = mask_service.load(path)
    assert again.mask.coeffs == original.mask.coeffs
    assert again.mask.field_d == 3
    assert again.tiles == original.tiles
    assert path.read_text(encoding="utf-8").endswith("}\n")


def test_integer_keys_and_values_are_accepted(mask_service, tmp_path):
    ref = _write(
        tmp_path / "ints.json",
        {"dilation": "line", "coeffs": [{"k": 0, "p": 1}]},
    )
    loaded = mask_service.load(ref)
    assert loaded.name == "ints"
    assert loaded.tiles is None


@pytest.mark.parametrize(
    "payload",
    [
        {"dilation": "line", "coeffs": []},
        {"dilation": "torus", "coeffs": [{"k": "0", "p": "1"}]},
        {"dilation": "line", "coeffs": [{"k": "0", "p": "1"}], "colour": "red"},
        {"dilation": "line", "coeffs": [{"k": "0", "p": "1"}], "normalize": "max"},
        {"dilation": "line", "coeffs": [{"k": True, "p": "1"}]},
    ],
)
def test_schema_errors(mask_service, tmp_path, payload):
    with pytest.raises(MaskError):
        mask_service.load(_write(tmp_path / "bad.json", payload))


@pytest.mark.parametrize(
    "payload",
    [
        {"dilation": "line", "coeffs": [{"k": "0", "p": "1/2"}, {"k": "0", "p": "1/2"}]},
        {"dilation": "line", "coeffs": [{"k": "i", "p": "1"}]},
        {"dilation": "line", "coeffs": [{"k": "0", "p": "1/2+sqrt(2)"}], "field_d": 3},
        {"dilation": "line", "coeffs": [{"k": "0", "p": "1/3"}]},
        {"dilation": "line", "coeffs": [{"k": "0", "p": "1"}], "tiles": ["0", "0"]},
    ],
)
def test_coefficient_errors(mask_service, tmp_path, payload):
    with pytest.raises(MaskError):
        mask_service.load(_write(tmp_path / "bad.json", payload))


def test_invalid_json(mask_service, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(MaskError, match="invalid JSON"):
        mask_service.load(path)


def test_missing_file(tmp_path):
    with pytest.raises(MaskError, match="mask not found"):
        MaskService(masks_dir=tmp_path).load("d4")
