"""
JSON Schema validation for configuration mappings.

Schemas are ``<name>.json`` files under the repository's ``schemas``
directory, parsed once per validator.  Every violation is reported with the
path of the offending key, e.g. ``merge/skip_mode: 'bitmap' is not one of
['counts', 'wavelet']``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict

import jsonschema

logger = logging.getLogger(__name__)

SCHEMAS_DIR = Path(__file__).resolve().parent.parent / "schemas"


class ConfigValidator:
    """Check settings mappings against the schemas directory."""

    def __init__(self, schemas_base: str | Path = SCHEMAS_DIR) -> None:
        self.schemas_base = Path(schemas_base)
        self.cache: Dict[str, Dict[str, Any]] = {}

    def load_schema(self, name: str) -> Dict[str, Any]:
        if name not in self.cache:
            path = self.schemas_base / f"{name}.json"
            try:
                self.cache[name] = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                logger.error(f"cannot load schema {path}: {exc}")
                raise
        return self.cache[name]

    def validate(self, data: Any, schema_name: str) -> Dict[str, Any]:
        """
        Returns ``{"valid": bool, "errors": [str]}``; errors are sorted by path
        and a schema that cannot be loaded counts as a single error.
        """
        try:
            schema = self.load_schema(schema_name)
        except (OSError, ValueError) as exc:
            return {"valid": False, "errors": [str(exc)]}
        checker = jsonschema.Draft7Validator(schema)
        errors = [
            f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}"
            for e in sorted(checker.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
        ]
        return {"valid": not errors, "errors": errors}
