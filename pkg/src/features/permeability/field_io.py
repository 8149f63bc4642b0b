import csv
import json
import logging
import os
from typing import Tuple

import numpy as np

from src.core.errors import FieldFormatError
from src.core.grid import GridSpec
from src.features.permeability.coefficients import CoefficientField

logger = logging.getLogger(__name__)

HEADER_KEYS = ("ell", "L", "beta", "F", "k_bg")


def _paths(stem: str) -> Tuple[str, str]:
    return f"{stem}.json", f"{stem}.csv"


def export_field(field: CoefficientField, stem: str) -> Tuple[str, str]:
    """Writes `<stem>.json` (header) and `<stem>.csv` (one value per cell)."""
    header_path, values_path = _paths(stem)
    os.makedirs(os.path.dirname(os.path.abspath(stem)), exist_ok=True)
    header = {
        "ell": field.grid.ell,
        "L": field.grid.L,
        "beta": field.metadata.get("beta"),
        "F": field.metadata.get("F"),
        "k_bg": field.metadata.get("k_bg"),
    }
    with open(header_path, "w", encoding="utf-8") as handle:
        json.dump(header, handle, indent=2, sort_keys=True)
        handle.write("\n")
    with open(values_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for value in field.cell_k:
            writer.writerow([repr(float(value))])
    logger.info(f"Exported field with N={field.grid.N} to '{values_path}'")
    return header_path, values_path


def import_field(stem: str) -> CoefficientField:
    header_path, values_path = _paths(stem)
    try:
        with open(header_path, "r", encoding="utf-8") as handle:
            header = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise FieldFormatError(f"unreadable field header: {e}", path=header_path) from e
    missing = [key for key in HEADER_KEYS if key not in header]
    if missing:
        raise FieldFormatError(f"field header lacks {missing}", path=header_path)
    grid = GridSpec(ell=int(header["ell"]), L=float(header["L"]))

    values = []
    with open(values_path, "r", newline="", encoding="utf-8") as handle:
        for line_number, row in enumerate(csv.reader(handle), start=1):
            if len(row) != 1:
                raise FieldFormatError(f"expected one value per line, got {row!r}", path=values_path, line=line_number)
            try:
                value = float(row[0])
            except ValueError:
                raise FieldFormatError(f"unparsable value {row[0]!r}", path=values_path, line=line_number) from None
            if not value > 0:
                raise FieldFormatError(f"permeability must be positive, got {value}", path=values_path, line=line_number)
            values.append(value)
    if len(values) != grid.N:
        raise FieldFormatError(f"expected {grid.N} values for ell={grid.ell}, found {len(values)}", path=values_path)

    metadata = {key: header[key] for key in ("beta", "F", "k_bg") if header[key] is not None}
    return CoefficientField(grid, np.array(values), metadata)
