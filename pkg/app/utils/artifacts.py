"""
Single writer for experiment outputs: fixed-precision CSV/JSON, text and SVG files, and a
manifest of content hashes.
"""

import csv
import hashlib
import io
import json
import logging
import math
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

SIGNIFICANT_DIGITS = 12
_PACKAGES = ("numpy", "scipy", "shapely", "triangle", "matplotlib", "pydantic")


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.{SIGNIFICANT_DIGITS}g}"


def to_plain(obj: Any) -> Any:
    """JSON-ready copy with floats rounded to the fixed precision and non-finite values as null."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(format_float(x)) if math.isfinite(x) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in _PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


class ArtifactWriter:
    def __init__(self, directory: Path, formats: Optional[Sequence[str]] = None):
        self.logger = logging.getLogger(__name__)
        self.directory = Path(directory)
        self.formats = set(formats) if formats is not None else {"csv", "json", "svg", "txt"}
        self.files: Dict[str, str] = {}

    def enabled(self, fmt: str) -> bool:
        return fmt in self.formats

    def _write(self, name: str, data: str) -> Path:
        path = self.directory / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(data, encoding="utf-8")
        self.files[name] = hashlib.sha256(data.encode("utf-8")).hexdigest()
        self.logger.info(f"Wrote {path}")
        return path

    def write_text(self, name: str, text: str) -> Optional[Path]:
        if not self.enabled("txt"):
            return None
        return self._write(name, text)

    def write_json(self, name: str, payload: Any) -> Optional[Path]:
        if not self.enabled("json"):
            return None
        return self._write(name, json.dumps(to_plain(payload), indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Optional[Path]:
        if not self.enabled("csv"):
            return None
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
        return self._write(name, buffer.getvalue())

    def write_svg(self, name: str, svg: str) -> Optional[Path]:
        if not self.enabled("svg"):
            return None
        return self._write(name, svg)

    def write_manifest(self, command: str, config_hash: str, seed: int) -> Path:
        manifest = {
            "command": command,
            "config_hash": config_hash,
            "seed": seed,
            "versions": package_versions(),
            "files": dict(sorted(self.files.items())),
        }
        path = self.directory / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @property
    def written(self) -> List[str]:
        return sorted(self.files)
