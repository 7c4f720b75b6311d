"""Replica location service: logical file name -> physical replicas."""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError


@dataclass(frozen=True, order=True)
class Replica:
    lfn: str
    site: str
    pfn: str


def _check_token(what: str, value: str) -> None:
    if not value or any(ch.isspace() for ch in value):
        raise ValueError(f"{what} must be non-empty without whitespace: {value!r}")


class ReplicaCatalog:
    """Single local index of replicas. PFNs are opaque strings."""

    def __init__(self, replicas=()):
        self.entries: dict[str, set[tuple[str, str]]] = {}
        self.lock = threading.RLock()
        for r in replicas:
            self.register(r.lfn, r.site, r.pfn)

    def __eq__(self, other):
        if not isinstance(other, ReplicaCatalog):
            return NotImplemented
        return self.entries == other.entries

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def __contains__(self, lfn: str) -> bool:
        return lfn in self.entries

    def register(self, lfn: str, site: str, pfn: str) -> ReplicaCatalog:
        for what, value in (("lfn", lfn), ("site", site), ("pfn", pfn)):
            _check_token(what, value)
        with self.lock:
            self.entries.setdefault(lfn, set()).add((site, pfn))
        return self

    def lookup(self, lfn: str) -> frozenset[tuple[str, str]]:
        return frozenset(self.entries.get(lfn, ()))

    def unregister(self, lfn: str, site: str) -> ReplicaCatalog:
        with self.lock:
            current = self.entries.get(lfn)
            if current is None:
                return self
            current.difference_update({pair for pair in current if pair[0] == site})
            if not current:
                del self.entries[lfn]
        return self

    def replicas(self) -> list[Replica]:
        return sorted(Replica(lfn, site, pfn) for lfn, pairs in self.entries.items() for site, pfn in pairs)

    def snapshot(self) -> ReplicaCatalog:
        """A copy that later writes to ``self`` do not affect."""
        copy = ReplicaCatalog()
        with self.lock:
            copy.entries = {lfn: set(pairs) for lfn, pairs in self.entries.items()}
        return copy

    def dumps(self) -> str:
        return "".join(f"{r.lfn} {r.site} {r.pfn}\n" for r in self.replicas())

    @classmethod
    def loads(cls, text: str) -> ReplicaCatalog:
        rc = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 3:
                raise FormatError(lineno, f"expected '<lfn> <site> <pfn>', got {line!r}")
            rc.register(*fields)
        return rc

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(self.dumps(), encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> ReplicaCatalog:
        return cls.loads(Path(path).read_text(encoding="utf-8"))
