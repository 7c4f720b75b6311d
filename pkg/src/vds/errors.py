"""Exception hierarchy shared by every vds module.

Every error raised on purpose by the package derives from :class:`VdsError`,
so callers (the CLI in particular) can catch one type and report the
concrete class name.
"""

from __future__ import annotations


class VdsError(Exception):
    """Base class for all virtual data system errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# -- VDL -------------------------------------------------------------------


class VdlError(VdsError):
    pass


class VdlSyntaxError(VdlError):
    """Malformed VDL text, positioned at a 1-based line and column."""

    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")


class DuplicateFormal(VdlSyntaxError):
    pass


class DuplicateActual(VdlSyntaxError):
    pass


class BindError(VdlError):
    pass


class MissingActual(BindError):
    def __init__(self, formal: str):
        self.formal = formal
        super().__init__(f"no actual supplied for formal {formal!r}")


class UnknownActual(BindError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"actual {name!r} matches no formal")


class ClassMismatch(BindError):
    def __init__(self, formal: str, expected: str, got: str):
        self.formal = formal
        self.expected = expected
        self.got = got
        super().__init__(f"formal {formal!r} is {expected}, got {got}")


# -- catalogs --------------------------------------------------------------


class DuplicateName(VdsError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"{name!r} already present with different content")


class ConflictingProducer(VdsError):
    def __init__(self, lfn: str, existing_dv: str, new_dv: str):
        self.lfn = lfn
        self.existing_dv = existing_dv
        self.new_dv = new_dv
        super().__init__(f"{lfn!r} is already produced by {existing_dv}; {new_dv} cannot also produce it")


class FormatError(VdsError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


# -- planning --------------------------------------------------------------


class UnknownTransformation(VdsError):
    def __init__(self, dv: str, transformation: str):
        self.dv = dv
        self.transformation = transformation
        super().__init__(f"derivation {dv} references unknown transformation {transformation}")


class UnknownTarget(VdsError):
    def __init__(self, target: str):
        self.target = target
        super().__init__(f"{target!r} is neither a derivation nor a producible file")


class CycleDetected(VdsError):
    def __init__(self, path: list[str]):
        self.path = list(path)
        super().__init__("dependency cycle: " + " -> ".join(path))


class MissingReplica(VdsError):
    def __init__(self, lfn: str):
        self.lfn = lfn
        super().__init__(f"no replica of {lfn!r} at any site")


class UnsatisfiableInput(VdsError):
    def __init__(self, lfn: str, consumer: str):
        self.lfn = lfn
        self.consumer = consumer
        super().__init__(f"{consumer} needs {lfn!r} but its producer was pruned without a replica")


class UnknownSite(VdsError):
    def __init__(self, site: str):
        self.site = site
        super().__init__(f"unknown site {site!r}")


# -- production ------------------------------------------------------------


class UnknownProject(VdsError):
    def __init__(self, project: str):
        self.project = project
        super().__init__(f"no production request for project {project!r}")


class LogFormatError(VdsError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


# -- scheduling ------------------------------------------------------------


class DuplicateTarget(VdsError):
    def __init__(self, target: str):
        self.target = target
        super().__init__(f"{target} is already queued or active")


class UnknownJob(VdsError):
    def __init__(self, target: str):
        self.target = target
        super().__init__(f"no active job for {target}")


class ConcretizationFailed(VdsError):
    def __init__(self, target: str, cause: VdsError):
        self.target = target
        self.cause = cause
        super().__init__(f"{target}: {cause.kind}: {cause}")


class ConfigError(VdsError):
    pass
