"""
Export Service - write tables and exact dumps to CSV, and read them back.

Exact cells use the scalar grammar (``3/8+1/8*sqrt(3)``) and lattice elements
their text form (``1-2i``); reading with ``dtype=str`` and re-parsing gives back
the same values. Files use LF line endings.
"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from dilation.config import settings
from dilation.linalg import Matrix, Vector
from dilation.models.lattice import Dilation, LatticeElem, TileValueMap
from dilation.models.measure import DiscreteMeasure
from dilation.models.scalarfield import QuadScalar, format_scalar, parse_scalar
from dilation.schemas.report_schema import MeasureDumpHeader

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MEASURE_COLUMNS = ["key", "scale", "weight_exact", "weight_float"]
VECTOR_COLUMNS = ["tile", "value_exact", "value_float"]


def write_frame(df: pd.DataFrame, path: PathLike) -> Path:
    """Write a DataFrame as CSV with LF line endings; parent directories are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"✅ CSV saved: {path} ({len(df)} rows)")
    return path


def read_table(path: PathLike) -> pd.DataFrame:
    """Read any dump with every cell kept as text."""
    return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")


# ----------------------------------------------------------------------
# Frames
# ----------------------------------------------------------------------


def measure_frame(mu: DiscreteMeasure) -> pd.DataFrame:
    rows = [
        {
            "key": mu.dilation.format_elem(g),
            "scale": mu.scale,
            "weight_exact": format_scalar(w),
            "weight_float": w.to_float(),
        }
        for g, w in sorted(mu.weights.items())
    ]
    return pd.DataFrame(rows, columns=MEASURE_COLUMNS)


def matrix_frame(labels: Sequence[str], entries: Matrix) -> pd.DataFrame:
    """Row-major matrix: first column holds the row translate, one column per translate."""
    rows = []
    for label, row in zip(labels, entries):
        record = {"tile": label}
        record.update({col: format_scalar(x) for col, x in zip(labels, row)})
        rows.append(record)
    return pd.DataFrame(rows, columns=["tile", *labels])


def vector_frame(labels: Sequence[str], vector: Sequence) -> pd.DataFrame:
    rows = []
    for label, x in zip(labels, vector):
        exact = isinstance(x, QuadScalar)
        rows.append(
            {
                "tile": label,
                "value_exact": format_scalar(x) if exact else "",
                "value_float": x.to_float() if exact else float(x),
            }
        )
    return pd.DataFrame(rows, columns=VECTOR_COLUMNS)


# ----------------------------------------------------------------------
# Readers
# ----------------------------------------------------------------------


def read_exact_matrix(path: PathLike) -> Tuple[List[str], Matrix]:
    df = read_table(path)
    labels = list(df.columns[1:])
    entries = [[parse_scalar(df.at[i, col]) for col in labels] for i in range(len(df))]
    return labels, entries


def read_exact_vector(path: PathLike) -> Tuple[List[str], Vector]:
    df = read_table(path)
    return list(df["tile"]), [parse_scalar(x) for x in df["value_exact"]]


def header_path(path: PathLike) -> Path:
    """Sidecar next to a measure dump: ``mu4.csv`` -> ``mu4.header.json``."""
    path = Path(path)
    return path.with_name(f"{path.stem}.header.json")


def write_measure(mu: DiscreteMeasure, path: PathLike) -> Path:
    """Write the measure CSV plus its header sidecar."""
    path = write_frame(measure_frame(mu), path)
    header = MeasureDumpHeader(dilation=mu.dilation.value, scale=mu.scale, support_size=len(mu))
    header_path(path).write_text(header.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_measure(
    path: PathLike, dilation: Optional[Dilation] = None, scale: Optional[int] = None
) -> DiscreteMeasure:
    """
    Read a measure dump.

    Lattice and scale come from the header sidecar when it exists, otherwise
    from the arguments (and the ``scale`` column of a non-empty dump).

    Raises:
        ValueError: invalid sidecar, or no way to tell the lattice or the scale
    """
    sidecar = header_path(path)
    if sidecar.is_file():
        try:
            header = MeasureDumpHeader.model_validate_json(sidecar.read_text(encoding="utf-8"))
        except ValidationError as e:
            raise ValueError(f"invalid measure header {sidecar}: {e.errors()[0]['msg']}") from e
        dilation, scale = Dilation(header.dilation), header.scale
    if dilation is None:
        raise ValueError(f"{path}: no header sidecar; pass the dilation")
    df = read_table(path)
    if df.empty:
        if scale is None:
            raise ValueError(f"{path}: empty dump without a header sidecar; pass the scale")
        return DiscreteMeasure(dilation, scale, {})
    weights = {dilation.parse_elem(k): parse_scalar(w) for k, w in zip(df["key"], df["weight_exact"])}
    return DiscreteMeasure(dilation, int(df["scale"].iloc[0]), weights)


def read_tile_values(path: PathLike) -> List[TileValueMap]:
    """Read a step-function dump back into one TileValueMap per scale."""
    df = read_table(path)
    out: List[TileValueMap] = []
    for scale, group in df.groupby(df["scale"].astype(int), sort=True):
        dilation = Dilation(group["dilation"].iloc[0])
        values = {
            dilation.parse_elem(k): parse_scalar(v)
            for k, v in zip(group["tile_key"], group["value_exact"])
        }
        out.append(TileValueMap(dilation, int(scale), values))
    return out


class ExportService:
    """Service writing result files under one output directory."""

    def __init__(self, output_dir: Optional[PathLike] = None):
        self.output_dir = Path(output_dir if output_dir is not None else settings.output_dir)

    def path_for(self, name: str) -> Path:
        return self.output_dir / name

    def export_table(self, df: pd.DataFrame, name: str) -> Path:
        return write_frame(df, self.path_for(name))

    def export_measure(self, mu: DiscreteMeasure, name: str) -> Path:
        return write_measure(mu, self.path_for(name))

    def export_matrix(self, labels: Sequence[str], entries: Matrix, name: str) -> Path:
        return write_frame(matrix_frame(labels, entries), self.path_for(name))

    def export_vector(self, labels: Sequence[str], vector: Sequence, name: str) -> Path:
        return write_frame(vector_frame(labels, vector), self.path_for(name))

    def export_tiles(self, dilation: Dilation, translates: Sequence[LatticeElem], name: str) -> Path:
        df = pd.DataFrame(
            {"index": range(len(translates)), "translate": [dilation.format_elem(z) for z in translates]}
        )
        return write_frame(df, self.path_for(name))
