"""
Mask Service - load, validate and save coefficient mask files.

Masks can be addressed by path or by the name of a bundled mask under
``masks/`` (``d4``, ``dragon4``, ``dragon3``, ``haar_plane``,
``uniform_line``, ``dirac``).
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import ValidationError

from dilation.exceptions import DilationError, MaskError
from dilation.models.lattice import Dilation, LatticeElem
from dilation.models.measure import CoefficientMask
from dilation.models.scalarfield import QuadScalar, format_scalar, parse_scalar
from dilation.schemas.mask_schema import CoefficientEntry, MaskFile

logger = logging.getLogger(__name__)

MASKS_DIR = Path(__file__).resolve().parents[2] / "masks"

BUNDLED_MASKS = ("d4", "dragon4", "dragon3", "haar_plane", "uniform_line", "dirac")


@dataclass
class LoadedMask:
    """A validated mask plus the metadata stored alongside it."""

    mask: CoefficientMask
    tiles: Optional[List[LatticeElem]] = None
    normalize: str = "sum1"
    source: str = ""
    description: str = ""

    @property
    def name(self) -> str:
        return self.mask.name


class MaskService:
    """Service for reading and writing mask files."""

    def __init__(self, masks_dir: Optional[Union[str, Path]] = None):
        """
        Initialize mask service.

        Args:
            masks_dir: Directory holding bundled masks (defaults to the repository masks/)
        """
        self.masks_dir = Path(masks_dir) if masks_dir else MASKS_DIR

    def resolve(self, ref: Union[str, Path]) -> Path:
        """Map a path or bundled-mask name to an existing file."""
        path = Path(ref)
        if path.is_file():
            return path
        for candidate in (self.masks_dir / f"{ref}.json", self.masks_dir / str(ref)):
            if candidate.is_file():
                return candidate
        stem = path.name.split(".")[0]
        candidate = self.masks_dir / f"{stem}.json"
        if candidate.is_file():
            return candidate
        raise MaskError(f"mask not found: {ref}")

    def load(self, ref: Union[str, Path]) -> LoadedMask:
        """
        Load and validate a mask file.

        Args:
            ref: File path or bundled mask name

        Returns:
            LoadedMask with exact coefficients and optional stored tile order

        Raises:
            MaskError: file missing, malformed, or coefficients invalid
        """
        path = self.resolve(ref)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise MaskError(f"{path}: invalid JSON ({e})") from e
        try:
            schema = MaskFile.model_validate(raw)
        except ValidationError as e:
            raise MaskError(f"{path}: {e.error_count()} validation error(s)\n{e}") from e

        loaded = self.from_schema(schema, default_name=path.stem)
        loaded.source = str(path)
        logger.info(
            f"Loaded mask '{loaded.name}' ({loaded.mask.dilation.value}, "
            f"{len(loaded.mask)} coefficients) from {path}"
        )
        return loaded

    def from_schema(self, schema: MaskFile, default_name: str = "") -> LoadedMask:
        dilation = Dilation(schema.dilation)
        coeffs: Dict[LatticeElem, QuadScalar] = {}
        try:
            for entry in schema.coeffs:
                k = dilation.parse_elem(entry.k)
                if k in coeffs:
                    raise MaskError(f"duplicate coefficient key {entry.k}")
                coeffs[k] = parse_scalar(entry.p, schema.field_d)
            tiles = [dilation.parse_elem(t) for t in schema.tiles] if schema.tiles else None
        except MaskError:
            raise
        except DilationError as e:
            raise MaskError(str(e)) from e

        if tiles is not None and len(set(tiles)) != len(tiles):
            raise MaskError("stored tile list contains duplicates")

        mask = CoefficientMask(
            dilation=dilation,
            coeffs=coeffs,
            field_d=schema.field_d,
            name=schema.name or default_name,
        )
        return LoadedMask(
            mask=mask,
            tiles=tiles,
            normalize=schema.normalize,
            description=schema.description or "",
        )

    def to_schema(self, loaded: LoadedMask) -> MaskFile:
        mask = loaded.mask
        dilation = mask.dilation
        return MaskFile(
            name=mask.name or None,
            description=loaded.description or None,
            dilation=dilation.value,
            field_d=mask.field_d,
            coeffs=[
                CoefficientEntry(k=dilation.format_elem(k), p=format_scalar(p))
                for k, p in mask.items()
            ],
            tiles=[dilation.format_elem(t) for t in loaded.tiles] if loaded.tiles else None,
            normalize=loaded.normalize,
        )

    def save(self, loaded: LoadedMask, path: Union[str, Path]) -> Path:
        """Write a mask file (pretty-printed JSON, LF line endings)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = self.to_schema(loaded).model_dump(exclude_none=True)
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        logger.info(f"Saved mask '{loaded.name}' to {path}")
        return path


def build_mask(
    dilation: Union[str, Dilation],
    coeffs: Dict[str, str],
    field_d: Optional[int] = None,
    name: str = "",
) -> CoefficientMask:
    """Build a mask from text keys and grammar strings."""
    dilation = Dilation(dilation)
    parsed = {dilation.parse_elem(k): parse_scalar(p, field_d) for k, p in coeffs.items()}
    return CoefficientMask(dilation=dilation, coeffs=parsed, field_d=field_d, name=name)
