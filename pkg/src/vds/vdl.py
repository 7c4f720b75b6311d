"""Virtual Data Language: transformations (TR) and derivations (DV).

Grammar accepted by :func:`parse_vdl`::

    file        := (tr | dv | comment)*
    tr          := "TR" ident "(" formal ("," formal)* ")" "{" template* "}"
    formal      := class ident
    class       := "input" | "output" | "none"
    template    := "argument" "=" "${" class ":" ident "}" ";"
    dv          := "DV" ident "->" ident "(" actual ("," actual)* ")" ";"
    actual      := ident "=" ( string | "@{" class ":" string "}" )
    string      := '"' chars-with-backslash-escapes '"'
    comment     := "#" to-end-of-line

Parsing and binding are separate passes: a derivation can be parsed (and
catalogued) before the transformation it calls is known.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .errors import ClassMismatch, DuplicateActual, DuplicateFormal, MissingActual, UnknownActual, UnknownTransformation, VdlSyntaxError

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class ArgClass(str, enum.Enum):
    INPUT = "input"
    OUTPUT = "output"
    NONE = "none"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FormalArg:
    name: str
    cls: ArgClass


@dataclass(frozen=True)
class Literal:
    value: str


@dataclass(frozen=True)
class FileRef:
    cls: ArgClass
    lfn: str

    def __post_init__(self):
        if self.cls is ArgClass.NONE:
            raise ValueError("file references are input or output, never none")
        if not is_lfn(self.lfn):
            raise ValueError(f"invalid logical file name {self.lfn!r}")


Value = Union[Literal, FileRef]


def is_lfn(text: str) -> bool:
    return bool(text) and not any(ch.isspace() for ch in text)


@dataclass(frozen=True)
class Transformation:
    name: str
    formals: tuple[FormalArg, ...]
    argument_template: tuple[tuple[ArgClass, str], ...] = ()

    def formal(self, name: str) -> FormalArg | None:
        for f in self.formals:
            if f.name == name:
                return f
        return None


@dataclass(eq=True)
class Derivation:
    """One invocation of a transformation.

    ``actuals`` is keyed by formal name; declaration order is kept for
    serialization but ignored by equality.
    """

    name: str
    transformation_name: str
    actuals: dict[str, Value] = field(default_factory=dict)

    def files(self, cls: ArgClass) -> list[str]:
        return [v.lfn for v in self.actuals.values() if isinstance(v, FileRef) and v.cls is cls]

    @property
    def input_files(self) -> list[str]:
        return self.files(ArgClass.INPUT)

    @property
    def output_files(self) -> list[str]:
        return self.files(ArgClass.OUTPUT)


VdlObject = Union[Transformation, Derivation]


# -- lexer -----------------------------------------------------------------

_PUNCT = ("${", "@{", "->", "(", ")", "{", "}", ",", ";", "=", ":")


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "string", "punct", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(count: int) -> None:
        nonlocal i, line, col
        for ch in text[i : i + count]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += count

    while i < n:
        ch = text[i]
        if ch.isspace():
            advance(1)
            continue
        if ch == "#":
            end = text.find("\n", i)
            advance((n if end < 0 else end) - i)
            continue
        if ch == '"':
            start_line, start_col = line, col
            advance(1)
            chars: list[str] = []
            while True:
                if i >= n:
                    raise VdlSyntaxError(start_line, start_col, "unterminated string")
                c = text[i]
                if c == "\\":
                    if i + 1 >= n:
                        raise VdlSyntaxError(line, col, "dangling backslash in string")
                    chars.append(text[i + 1])
                    advance(2)
                elif c == '"':
                    advance(1)
                    break
                else:
                    chars.append(c)
                    advance(1)
            tokens.append(_Token("string", "".join(chars), start_line, start_col))
            continue
        m = IDENT_RE.match(text, i)
        if m:
            tokens.append(_Token("ident", m.group(), line, col))
            advance(m.end() - i)
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(_Token("punct", p, line, col))
                advance(len(p))
                break
        else:
            raise VdlSyntaxError(line, col, f"unexpected character {ch!r}")
    tokens.append(_Token("eof", "", line, col))
    return tokens


# -- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise VdlSyntaxError(tok.line, tok.col, f"{message}, found {found}")

    def punct(self, p: str) -> _Token:
        tok = self.tok
        if tok.kind != "punct" or tok.text != p:
            self.fail(f"expected {p!r}")
        self.pos += 1
        return tok

    def ident(self, what: str = "identifier") -> _Token:
        tok = self.tok
        if tok.kind != "ident":
            self.fail(f"expected {what}")
        self.pos += 1
        return tok

    def keyword(self, word: str) -> _Token:
        tok = self.tok
        if tok.kind != "ident" or tok.text != word:
            self.fail(f"expected {word!r}")
        self.pos += 1
        return tok

    def string(self) -> _Token:
        tok = self.tok
        if tok.kind != "string":
            self.fail("expected string")
        self.pos += 1
        return tok

    def arg_class(self) -> ArgClass:
        tok = self.ident("argument class")
        try:
            return ArgClass(tok.text)
        except ValueError:
            self.fail("expected input, output or none", tok)

    def at_punct(self, p: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == p

    def parse(self) -> list[VdlObject]:
        objects: list[VdlObject] = []
        while self.tok.kind != "eof":
            if self.tok.kind == "ident" and self.tok.text == "TR":
                objects.append(self.transformation())
            elif self.tok.kind == "ident" and self.tok.text == "DV":
                objects.append(self.derivation())
            else:
                self.fail("expected TR or DV")
        return objects

    def transformation(self) -> Transformation:
        self.keyword("TR")
        name = self.ident("transformation name").text
        self.punct("(")
        formals: list[FormalArg] = []
        seen: set[str] = set()
        while True:
            cls = self.arg_class()
            tok = self.ident("formal name")
            if tok.text in seen:
                raise DuplicateFormal(tok.line, tok.col, f"formal {tok.text!r} declared twice in {name}")
            seen.add(tok.text)
            formals.append(FormalArg(tok.text, cls))
            if self.at_punct(","):
                self.pos += 1
                continue
            self.punct(")")
            break
        by_name = {f.name: f for f in formals}
        self.punct("{")
        template: list[tuple[ArgClass, str]] = []
        while not self.at_punct("}"):
            self.keyword("argument")
            self.punct("=")
            self.punct("${")
            cls = self.arg_class()
            self.punct(":")
            ref = self.ident("formal name")
            formal = by_name.get(ref.text)
            if formal is None:
                raise VdlSyntaxError(ref.line, ref.col, f"template refers to undeclared formal {ref.text!r}")
            if formal.cls is not cls:
                raise VdlSyntaxError(ref.line, ref.col, f"template class {cls} disagrees with formal {ref.text!r} ({formal.cls})")
            self.punct("}")
            self.punct(";")
            template.append((cls, ref.text))
        self.punct("}")
        return Transformation(name, tuple(formals), tuple(template))

    def derivation(self) -> Derivation:
        self.keyword("DV")
        name = self.ident("derivation name").text
        self.punct("->")
        tr_name = self.ident("transformation name").text
        self.punct("(")
        actuals: dict[str, Value] = {}
        while True:
            key = self.ident("formal name")
            if key.text in actuals:
                raise DuplicateActual(key.line, key.col, f"actual {key.text!r} given twice in {name}")
            self.punct("=")
            if self.at_punct("@{"):
                self.pos += 1
                cls_tok = self.tok
                cls = self.arg_class()
                if cls is ArgClass.NONE:
                    raise VdlSyntaxError(cls_tok.line, cls_tok.col, "file reference class must be input or output")
                self.punct(":")
                lfn = self.string()
                if not is_lfn(lfn.text):
                    raise VdlSyntaxError(lfn.line, lfn.col, f"invalid logical file name {lfn.text!r}")
                self.punct("}")
                actuals[key.text] = FileRef(cls, lfn.text)
            else:
                actuals[key.text] = Literal(self.string().text)
            if self.at_punct(","):
                self.pos += 1
                continue
            self.punct(")")
            break
        self.punct(";")
        return Derivation(name, tr_name, actuals)


def parse_vdl(text: str) -> list[VdlObject]:
    """Parse VDL text into transformations and derivations, in declaration order.

    Raises :class:`~vds.errors.VdlSyntaxError` (with line and column) on
    malformed input and :class:`~vds.errors.DuplicateFormal` when a
    transformation repeats a formal name.
    """
    return _Parser(text).parse()


# -- serializer ------------------------------------------------------------


def quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_transformation(tr: Transformation) -> str:
    formals = ", ".join(f"{f.cls} {f.name}" for f in tr.formals)
    lines = [f"TR {tr.name}( {formals} )", "{"]
    lines += [f"  argument = ${{{cls}:{name}}};" for cls, name in tr.argument_template]
    lines.append("}")
    return "\n".join(lines)


def serialize_derivation(dv: Derivation) -> str:
    parts = []
    for key, value in dv.actuals.items():
        if isinstance(value, FileRef):
            parts.append(f"  {key}=@{{{value.cls}:{quote(value.lfn)}}}")
        else:
            parts.append(f"  {key}={quote(value.value)}")
    return f"DV {dv.name}->{dv.transformation_name}(\n" + ",\n".join(parts) + " );"


def serialize_vdl(objects: Iterable[VdlObject]) -> str:
    chunks = []
    for obj in objects:
        if isinstance(obj, Transformation):
            chunks.append(serialize_transformation(obj))
        else:
            chunks.append(serialize_derivation(obj))
    return "".join(chunk + "\n" for chunk in chunks)


# -- binding ---------------------------------------------------------------


@dataclass(frozen=True)
class Binding:
    derivation: str
    transformation: str
    values: Mapping[str, Value]
    formals: tuple[FormalArg, ...]

    def _of(self, cls: ArgClass) -> dict[str, Value]:
        return {f.name: self.values[f.name] for f in self.formals if f.cls is cls}

    @property
    def inputs(self) -> frozenset[str]:
        return frozenset(v.lfn for v in self._of(ArgClass.INPUT).values())

    @property
    def outputs(self) -> frozenset[str]:
        return frozenset(v.lfn for v in self._of(ArgClass.OUTPUT).values())

    @property
    def params(self) -> dict[str, str]:
        return {k: v.value for k, v in self._of(ArgClass.NONE).items()}


def bind_derivation(dv: Derivation, tr: Transformation) -> Binding:
    """Check ``dv`` against ``tr`` and resolve every formal to its actual."""
    if dv.transformation_name != tr.name:
        raise UnknownTransformation(dv.name, dv.transformation_name)
    formal_names = {f.name for f in tr.formals}
    for key in dv.actuals:
        if key not in formal_names:
            raise UnknownActual(key)
    values: dict[str, Value] = {}
    for formal in tr.formals:
        if formal.name not in dv.actuals:
            raise MissingActual(formal.name)
        value = dv.actuals[formal.name]
        if isinstance(value, Literal):
            if formal.cls is not ArgClass.NONE:
                raise ClassMismatch(formal.name, str(formal.cls), "literal")
        elif value.cls is not formal.cls:
            raise ClassMismatch(formal.name, str(formal.cls), f"{value.cls} file")
        values[formal.name] = value
    return Binding(dv.name, tr.name, values, tr.formals)
