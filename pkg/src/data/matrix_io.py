"""
QoS matrix and metadata ingestion.

Reads the WS-DREAM dense response-time layout (one row per user,
whitespace-separated values, -1 for a missing observation) or a long-format
CSV, and the user/service region tables.
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError as PydanticValidationError

from src.models.qos import EntityKind, EntityMeta, MetadataTable, QosMatrix
from src.utils.errors import DataError, ParseError, ValidationError
from src.utils.io import atomic_write_csv, atomic_write_text
from src.utils.logger import get_logger

MISSING_SENTINEL = -1.0
SHAPE_PREFIX = "# shape "

MatrixFormat = Literal["matrix-text", "csv"]
MetadataFormat = Literal["csv", "wsdream"]

logger = get_logger("data")


def _require_file(path: Union[str, Path]) -> Path:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"file not found: {p}")
    return p


def _parse_matrix_text(path: Path) -> QosMatrix:
    rows: List[np.ndarray] = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, 1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                row = np.array([float(t) for t in tokens], dtype=np.float64)
            except ValueError as e:
                raise ParseError(f"non-numeric value in {path.name}: {e}", line_number) from e
            if width is None:
                width = row.size
            elif row.size != width:
                raise ParseError(
                    f"row has {row.size} values, expected {width}", line_number
                )
            bad = (row < 0) & (row != MISSING_SENTINEL)
            if np.any(bad) or not np.all(np.isfinite(row)):
                col = int(np.flatnonzero(bad | ~np.isfinite(row))[0])
                raise ValidationError(
                    f"line {line_number}, column {col + 1}: invalid QoS value {row[col]}"
                )
            rows.append(row)

    if not rows:
        raise ParseError(f"{path.name} holds no matrix rows", 1)

    return QosMatrix.from_dense(np.vstack(rows), missing=MISSING_SENTINEL)


def _read_shape_line(path: Path) -> Optional[Tuple[int, int]]:
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith(SHAPE_PREFIX):
        return None
    try:
        n_users, n_services = (int(t) for t in first[len(SHAPE_PREFIX):].split())
    except ValueError as e:
        raise ParseError(f"malformed shape line in {path.name}: {first.strip()!r}", 1) from e
    return n_users, n_services


def _parse_matrix_csv(path: Path, shape: Optional[Tuple[int, int]]) -> QosMatrix:
    stored = _read_shape_line(path)
    skip = 1 if stored is not None else 0
    try:
        frame = pd.read_csv(path, skiprows=skip)
    except pd.errors.EmptyDataError as e:
        raise ParseError(f"{path.name} is empty", 1) from e
    except pd.errors.ParserError as e:
        raise ParseError(f"{path.name}: {e}") from e

    missing = {"user", "service", "value"} - set(frame.columns)
    if missing:
        raise ParseError(f"{path.name} lacks columns {sorted(missing)}", 1)
    if frame.empty and stored is None:
        raise ParseError(f"{path.name} holds no entries", 2)

    values = frame["value"].to_numpy(dtype=np.float64)
    keep = values != MISSING_SENTINEL
    if np.any(values[keep] < 0) or not np.all(np.isfinite(values[keep])):
        row = int(np.flatnonzero(keep & ((values < 0) | ~np.isfinite(values)))[0])
        # +2: header line and 1-based numbering
        raise ValidationError(f"line {row + 2 + skip}: invalid QoS value {values[row]}")

    users = frame["user"].to_numpy(dtype=np.int64)
    services = frame["service"].to_numpy(dtype=np.int64)
    if shape is not None:
        n_users, n_services = shape
    elif stored is not None:
        n_users, n_services = stored
    else:
        n_users, n_services = int(users.max()) + 1, int(services.max()) + 1
    return QosMatrix(
        n_users=n_users,
        n_services=n_services,
        users=users[keep],
        services=services[keep],
        values=values[keep],
    )


def load_matrix(
    path: Union[str, Path],
    format: MatrixFormat = "matrix-text",
    shape: Optional[Tuple[int, int]] = None,
) -> QosMatrix:
    """
    Load a QoS matrix.

    Args:
        path: Matrix file
        format: "matrix-text" (WS-DREAM dense layout) or "csv" (user,service,value)
        shape: (n_users, n_services) for CSV input. Defaults to the file's
            "# shape" line, else the largest indices. Ignored for matrix-text, whose layout carries the shape.

    Returns:
        QosMatrix with sentinel cells removed

    Raises:
        DataError: If the file is missing
        ParseError: If a row is malformed (names the line number) or the file is empty
        ValidationError: If a value is negative without being the sentinel
    """
    p = _require_file(path)
    try:
        if format == "matrix-text":
            matrix = _parse_matrix_text(p)
        elif format == "csv":
            matrix = _parse_matrix_csv(p, shape)
        else:
            raise DataError(f"unknown matrix format {format!r}")
    except PydanticValidationError as e:
        raise ValidationError(f"{p.name}: {e.errors()[0]['msg']}") from e

    logger.info(
        f"Loaded {p.name}: {matrix.n_users} users x {matrix.n_services} services, "
        f"{len(matrix)} observed entries"
    )
    return matrix


def save_matrix(
    matrix: QosMatrix, path: Union[str, Path], format: MatrixFormat = "matrix-text"
) -> Path:
    """
    Save a QoS matrix so that load_matrix reproduces it exactly.

    Args:
        matrix: Matrix to write
        path: Destination file
        format: "matrix-text" (dense, -1 sentinel) or "csv" (a "# shape" line,
            then the observed entries)

    Returns:
        The written path
    """
    if format == "matrix-text":
        dense = matrix.to_dense(missing=MISSING_SENTINEL)
        lines = ["\t".join(f"{v:.17g}" for v in row) for row in dense]
        return atomic_write_text(path, "\n".join(lines) + "\n")
    if format == "csv":
        frame = pd.DataFrame(
            {"user": matrix.users, "service": matrix.services, "value": matrix.values}
        )
        body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        return atomic_write_text(
            path, f"{SHAPE_PREFIX}{matrix.n_users} {matrix.n_services}\n{body}"
        )
    raise DataError(f"unknown matrix format {format!r}")


def _read_metadata_frame(path: Path, fmt: MetadataFormat, kind: EntityKind) -> pd.DataFrame:
    if fmt == "csv":
        try:
            frame = pd.read_csv(path, dtype={"region": str}, keep_default_na=False)
        except pd.errors.EmptyDataError as e:
            raise ParseError(f"{path.name} is empty", 1) from e
        if not {"index", "region"} <= set(frame.columns):
            raise ParseError(f"{path.name} must have 'index,region' header", 1)
        return frame[["index", "region"]]

    # WS-DREAM userlist.txt / wslist.txt: tab-separated, bracketed headers,
    # a dashed rule below the header row.
    frame = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False)
    frame.columns = [c.strip().strip("[]").strip() for c in frame.columns]
    id_column = "User ID" if kind == EntityKind.USER else "Service ID"
    if id_column not in frame.columns or "Country" not in frame.columns:
        raise ParseError(f"{path.name} lacks '[{id_column}]' or '[Country]' columns", 1)
    frame = frame[~frame[id_column].str.strip().str.startswith(("-", "="))]
    frame = frame[frame[id_column].str.strip() != ""]
    return pd.DataFrame({"index": frame[id_column].str.strip(), "region": frame["Country"]})


def load_metadata(
    path: Union[str, Path], kind: EntityKind, fmt: MetadataFormat = "csv"
) -> MetadataTable:
    """
    Load user or service region metadata.

    Region strings are interned in first-appearance order; index 0 is
    reserved for unknown or blank regions.

    Args:
        path: Metadata file
        kind: EntityKind.USER or EntityKind.SERVICE
        fmt: "csv" (index,region with header) or "wsdream" (userlist/wslist layout)

    Returns:
        MetadataTable

    Raises:
        ValidationError: If an entity index appears twice
    """
    p = _require_file(path)
    kind = EntityKind(kind)
    frame = _read_metadata_frame(p, fmt, kind)

    vocabulary: List[str] = [""]
    lookup: Dict[str, int] = {}
    seen: Dict[int, int] = {}
    entities: List[EntityMeta] = []

    for row_number, (raw_index, raw_region) in enumerate(
        zip(frame["index"], frame["region"]), 2
    ):
        try:
            index = int(raw_index)
        except (TypeError, ValueError) as e:
            raise ParseError(f"entity index {raw_index!r} is not an integer", row_number) from e
        if index < 0:
            raise ValidationError(f"line {row_number}: negative entity index {index}")
        if index in seen:
            raise ValidationError(
                f"duplicate {kind.value} index {index} (lines {seen[index]} and {row_number})"
            )
        seen[index] = row_number

        region = str(raw_region).strip()
        if not region:
            region_index = 0
        else:
            if region not in lookup:
                lookup[region] = len(vocabulary)
                vocabulary.append(region)
            region_index = lookup[region]
        entities.append(EntityMeta(entity_index=index, region_index=region_index, kind=kind))

    logger.info(
        f"Loaded {len(entities)} {kind.value} metadata rows from {p.name}, "
        f"{len(vocabulary) - 1} regions"
    )
    return MetadataTable(kind=kind, entities=entities, vocabulary=vocabulary)


def save_metadata(table: MetadataTable, path: Union[str, Path]) -> Path:
    """Write a metadata table as ``index,region`` CSV."""
    frame = pd.DataFrame(
        {
            "index": [m.entity_index for m in table.entities],
            "region": [table.vocabulary[m.region_index] for m in table.entities],
        }
    )
    return atomic_write_csv(path, frame)
