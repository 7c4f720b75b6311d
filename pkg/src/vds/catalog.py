"""The virtual data catalog: transformations, derivations, and who produces what."""

from __future__ import annotations

import os
import threading
from pathlib import Path
from typing import Iterable

from .errors import ConflictingProducer, DuplicateName, FormatError, UnknownTransformation, VdlSyntaxError, VdsError
from .vdl import Binding, Derivation, Transformation, VdlObject, bind_derivation, parse_vdl, serialize_vdl

FORMAT_HEADER = "# vdc-format 1"


class VirtualDataCatalog:
    """In-memory VDC with a single-producer index over output files.

    A derivation may be inserted before its transformation; the dangling
    reference only surfaces when something binds the derivation.
    """

    def __init__(self, objects: Iterable[VdlObject] = ()):
        self.transformations: dict[str, Transformation] = {}
        self.derivations: dict[str, Derivation] = {}
        self.producer_index: dict[str, str] = {}
        self._lock = threading.RLock()
        for obj in objects:
            self.insert(obj)

    def __eq__(self, other):
        if not isinstance(other, VirtualDataCatalog):
            return NotImplemented
        return (
            self.transformations == other.transformations
            and self.derivations == other.derivations
            and self.producer_index == other.producer_index
        )

    def __len__(self) -> int:
        return len(self.transformations) + len(self.derivations)

    def __repr__(self) -> str:
        return f"VirtualDataCatalog({len(self.transformations)} TR, {len(self.derivations)} DV)"

    def insert(self, obj: VdlObject) -> VirtualDataCatalog:
        """Add one object; re-inserting an identical object is a no-op."""
        with self._lock:
            if isinstance(obj, Transformation):
                existing = self.transformations.get(obj.name)
                if existing is not None:
                    if existing != obj:
                        raise DuplicateName(obj.name)
                    return self
                self.transformations[obj.name] = obj
                return self

            existing = self.derivations.get(obj.name)
            if existing is not None:
                if existing != obj:
                    raise DuplicateName(obj.name)
                return self
            outputs = obj.output_files
            for lfn in outputs:
                owner = self.producer_index.get(lfn)
                if owner is not None:
                    raise ConflictingProducer(lfn, owner, obj.name)
            if len(set(outputs)) != len(outputs):
                dup = next(lfn for lfn in outputs if outputs.count(lfn) > 1)
                raise ConflictingProducer(dup, obj.name, obj.name)
            self.derivations[obj.name] = obj
            for lfn in outputs:
                self.producer_index[lfn] = obj.name
            return self

    def insert_all(self, objects: Iterable[VdlObject]) -> int:
        n = 0
        for obj in objects:
            self.insert(obj)
            n += 1
        return n

    def find_producer(self, lfn: str) -> Derivation | None:
        name = self.producer_index.get(lfn)
        return None if name is None else self.derivations[name]

    def bind(self, dv_name: str) -> Binding:
        dv = self.derivations[dv_name]
        tr = self.transformations.get(dv.transformation_name)
        if tr is None:
            raise UnknownTransformation(dv.name, dv.transformation_name)
        return bind_derivation(dv, tr)

    def objects(self) -> list[VdlObject]:
        """Transformations then derivations, each sorted by name."""
        trs = [self.transformations[k] for k in sorted(self.transformations)]
        dvs = [self.derivations[k] for k in sorted(self.derivations)]
        return [*trs, *dvs]

    def dumps(self) -> str:
        return FORMAT_HEADER + "\n" + serialize_vdl(self.objects())

    @classmethod
    def loads(cls, text: str) -> VirtualDataCatalog:
        first = text.split("\n", 1)[0].rstrip("\r")
        if first != FORMAT_HEADER:
            raise FormatError(1, f"missing {FORMAT_HEADER!r} header")
        try:
            objects = parse_vdl(text)
        except VdlSyntaxError as exc:
            raise FormatError(exc.line, exc.message) from exc
        catalog = cls()
        for obj in objects:
            try:
                catalog.insert(obj)
            except VdsError as exc:
                raise FormatError(0, f"{exc.kind}: {exc}") from exc
        return catalog

    def save(self, path: str | os.PathLike) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with self._lock:
            tmp.write_text(self.dumps(), encoding="utf-8")
            os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> VirtualDataCatalog:
        return cls.loads(Path(path).read_text(encoding="utf-8"))
