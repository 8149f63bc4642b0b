import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

from src.config.config_manager import PROJECT_ROOT, config_manager

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """numpy scalars and tuples to JSON-native values."""
    if hasattr(value, "item") and not isinstance(value, (list, dict)):
        try:
            return value.item()
        except (TypeError, ValueError):
            pass
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _cell(value: Any) -> str:
    value = _plain(value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


class FileManager:
    """Handles output paths and deterministic JSON/CSV writing."""

    def __init__(self, output_directory: Optional[str] = None):
        self.output_directory = output_directory or self._get_output_directory()

    def _get_output_directory(self) -> str:
        """Output directory from config; relative paths resolve against the project root."""
        configured_dir = config_manager.get("OUTPUT", "output_directory", fallback="results")
        if os.path.isabs(configured_dir):
            return configured_dir
        abs_path = str(PROJECT_ROOT / configured_dir)
        logger.debug(f"Relative output directory '{configured_dir}' resolved to '{abs_path}'")
        return abs_path

    def set_output_directory(self, directory: Optional[str]):
        self.output_directory = os.path.abspath(directory) if directory else self._get_output_directory()

    def _ensure_directory_exists(self, dir_path: str):
        try:
            os.makedirs(dir_path, exist_ok=True)
        except OSError as e:
            logger.error(f"Failed to create directory '{dir_path}': {e}", exc_info=True)
            raise

    def get_save_path(self, filename: str, extension: Optional[str] = None) -> str:
        """
        Full path for an output file, creating the output directory if needed.

        Args:
            filename: Base name of the file.
            extension: Extension without the leading dot.
        """
        self._ensure_directory_exists(self.output_directory)
        full_filename = f"{filename}.{extension.lstrip('.')}" if extension else filename
        return os.path.join(self.output_directory, full_filename)

    def write_json(self, filename: str, payload: Dict[str, Any]) -> str:
        path = self.get_save_path(filename, "json")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(_plain(payload), f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Wrote {path}")
        return path

    def write_csv(self, filename: str, rows: Iterable[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> str:
        """Writes dict rows; columns default to the keys of the first row."""
        rows: List[Dict[str, Any]] = list(rows)
        if columns is None:
            columns = list(rows[0].keys()) if rows else []
        path = self.get_save_path(filename, "csv")
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row.get(c)) for c in columns])
        logger.info(f"Wrote {path} ({len(rows)} rows)")
        return path


# --- Singleton Instance ---
file_manager = FileManager()
