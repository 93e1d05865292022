"""Per-disease cure guidance in English and Bengali, keyed by class.

The knowledge base is a UTF-8 JSON file; a default with placeholder
curative text ships with the package (the schema is the contract, the
prose is editorial and meant to be replaced by an agronomist).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dataset import CLASS_KEYS

_FIELDS = ("disease_name_en", "disease_name_bn", "cure_en", "cure_bn", "medicine")


class KbValidationError(ValueError):
    """Base class for remedy knowledge-base validation failures."""


class MissingClassError(KbValidationError):
    pass


class DuplicateKeyError(KbValidationError):
    pass


class EmptyFieldError(KbValidationError):
    pass


@dataclass(frozen=True)
class RemedyEntry:
    class_key: str
    disease_name_en: str
    disease_name_bn: str
    cure_en: str
    cure_bn: str
    medicine: str


def default_kb_path() -> Path:
    return Path(str(resources.files("carrot_cure") / "data" / "remedy_kb.json"))


def parse_remedy_kb(text: str, source: str = "<kb>") -> dict[str, RemedyEntry]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise KbValidationError(f"{source}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("classes"), list):
        raise KbValidationError(f"{source}: expected an object with a 'classes' list")

    entries: dict[str, RemedyEntry] = {}
    for row in payload["classes"]:
        if not isinstance(row, dict) or "key" not in row:
            raise KbValidationError(f"{source}: every class entry needs a 'key'")
        key = row["key"]
        if key not in CLASS_KEYS:
            raise KbValidationError(f"{source}: unknown class key {key!r}")
        if key in entries:
            raise DuplicateKeyError(f"{source}: duplicate entry for class {key!r}")
        for f in _FIELDS:
            value = row.get(f)
            if not isinstance(value, str) or not value.strip():
                raise EmptyFieldError(f"{source}: class {key!r} has empty field {f!r}")
        entries[key] = RemedyEntry(class_key=key, **{f: row[f] for f in _FIELDS})

    missing = [k for k in CLASS_KEYS if k not in entries]
    if missing:
        raise MissingClassError(f"{source}: missing class entries: {', '.join(missing)}")
    return entries


def load_remedy_kb(path: Path | str) -> dict[str, RemedyEntry]:
    path = Path(path)
    if not path.is_file():
        raise KbValidationError(f"remedy knowledge base not found: {path}")
    return parse_remedy_kb(path.read_text(encoding="utf-8"), source=str(path))
