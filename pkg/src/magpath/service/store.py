"""Content-addressed artifact storage for the HTTP service.

Every artifact (dataset, MAG, matrix, cluster set) is a JSON document
whose id is a digest of its canonical serialization: identical inputs
land on identical ids, which makes repeated POSTs idempotent and
results trivially cacheable.  Dataset names live in a separate index
so that human-friendly naming stays decoupled from content identity.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path


class UnknownId(KeyError):
    pass


class DuplicateName(ValueError):
    pass


def _canonical(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


class ArtifactStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        (self.root / "objects").mkdir(parents=True, exist_ok=True)
        self._names_path = self.root / "names.json"
        self._lock = threading.Lock()
        if not self._names_path.exists():
            self._names_path.write_text("{}")

    # -- objects -----------------------------------------------------

    def put(self, kind: str, doc: dict) -> str:
        """Store a document; returns its content id (stable across
        re-puts of the same content)."""
        payload = {"kind": kind, **doc}
        object_id = hashlib.sha256(_canonical(payload)).hexdigest()[:16]
        path = self.root / "objects" / f"{object_id}.json"
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(_canonical(payload))
            tmp.replace(path)
        return object_id

    def get(self, object_id: str, kind: str | None = None) -> dict:
        path = self.root / "objects" / f"{object_id}.json"
        if not object_id or not path.exists():
            raise UnknownId(object_id)
        doc = json.loads(path.read_text())
        if kind is not None and doc.get("kind") != kind:
            raise UnknownId(object_id)
        return doc

    def exists(self, object_id: str) -> bool:
        return (self.root / "objects" / f"{object_id}.json").exists()

    # -- dataset names -----------------------------------------------

    def _names(self) -> dict:
        return json.loads(self._names_path.read_text())

    def register_name(self, name: str, object_id: str) -> None:
        with self._lock:
            names = self._names()
            if name in names and names[name] != object_id:
                raise DuplicateName(name)
            names[name] = object_id
            self._names_path.write_text(json.dumps(names, indent=2, sort_keys=True))

    def name_of(self, object_id: str) -> str | None:
        for name, oid in self._names().items():
            if oid == object_id:
                return name
        return None

    def datasets(self) -> dict[str, str]:
        """name -> id of every registered dataset."""
        return dict(sorted(self._names().items()))
