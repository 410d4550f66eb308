"""Parser for the line-oriented ``.dsm`` disassembled-class format.

The format carries exactly what downstream analysis needs: class identity,
field declarations, and method bodies as opaque (opcode, operands) tokens.
Only ``invoke`` instructions are interpreted, since permission analysis
works from framework API invocations.  Everything else round-trips
verbatim through :func:`render_class_file`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DsmSyntaxError, DuplicateField

# A framework API invocation target: dotted path plus argument descriptor.
API_RE = re.compile(r"[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)+\([^)]*\)")
REGISTER_RE = re.compile(r"[vp][0-9]+")

ApiSignature = str


def is_api_signature(token: str) -> bool:
    """True when token is a canonical API signature (class has >= 2 segments)."""
    if API_RE.fullmatch(token) is None or token.count("(") != 1:
        return False
    dotted = token[: token.index("(")]
    return dotted.count(".") >= 2


def split_api_signature(sig: ApiSignature) -> tuple[str, str, str]:
    """Split ``pkg.Class.method(desc)`` into (class, method, descriptor)."""
    head, _, descriptor = sig.partition("(")
    dotted, _, method = head.rpartition(".")
    return dotted, method, descriptor.rstrip(")")


@dataclass(frozen=True)
class FieldDecl:
    name: str
    descriptor: str
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class Instruction:
    opcode: str
    operands: tuple[str, ...] = ()

    @property
    def api(self) -> ApiSignature | None:
        for op in self.operands:
            if API_RE.fullmatch(op):
                return op
        return None

    @property
    def registers(self) -> tuple[str, ...]:
        return tuple(op for op in self.operands if REGISTER_RE.fullmatch(op))


@dataclass(frozen=True)
class MethodDecl:
    name: str
    descriptor: str
    body: tuple[Instruction, ...] = ()
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ClassUnit:
    class_name: str
    super_name: str | None = None
    fields: tuple[FieldDecl, ...] = ()
    methods: tuple[MethodDecl, ...] = ()


def _significant(lines: list[str]) -> list[tuple[int, str]]:
    # Blank lines and '#' comments are ignored anywhere.
    out = []
    for number, raw in enumerate(lines, 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        out.append((number, stripped))
    return out


def _split_decl(line: str, lineno: int, directive: str) -> tuple[tuple[str, ...], str, str]:
    # Last token is the descriptor, the one before is the name, the rest flags.
    parts = line.split()[1:]
    if len(parts) < 2:
        raise DsmSyntaxError(lineno, f"{directive} needs a name and a descriptor")
    return tuple(parts[:-2]), parts[-2], parts[-1]


def parse_class_file(text: str | bytes) -> ClassUnit:
    """Parse one ``.dsm`` document; raises DsmSyntaxError with a line number."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows = _significant(text.split("\n"))
    eof_line = text.count("\n") + 1

    if not rows:
        raise DsmSyntaxError(eof_line, "expected .class declaration")
    pos = 0

    lineno, line = rows[pos]
    tokens = line.split()
    if tokens[0] != ".class" or len(tokens) != 2:
        raise DsmSyntaxError(lineno, "expected '.class <name>'")
    class_name = tokens[1]
    pos += 1

    super_name: str | None = None
    if pos < len(rows) and rows[pos][1].split()[0] == ".super":
        lineno, line = rows[pos]
        tokens = line.split()
        if len(tokens) != 2:
            raise DsmSyntaxError(lineno, "expected '.super <name>'")
        super_name = tokens[1]
        pos += 1

    fields: list[FieldDecl] = []
    methods: list[MethodDecl] = []
    seen_fields: set[tuple[str, str]] = set()
    closed = False

    while pos < len(rows):
        lineno, line = rows[pos]
        tokens = line.split()
        head = tokens[0]
        if line == ".end class":
            pos += 1
            closed = True
            break
        if head == ".field":
            flags, name, descriptor = _split_decl(line, lineno, ".field")
            if (name, descriptor) in seen_fields:
                raise DuplicateField(
                    f"line {lineno}: field {name} {descriptor} declared twice in {class_name}"
                )
            seen_fields.add((name, descriptor))
            fields.append(FieldDecl(name, descriptor, flags))
            pos += 1
        elif head == ".method":
            flags, name, descriptor = _split_decl(line, lineno, ".method")
            pos += 1
            body: list[Instruction] = []
            while True:
                if pos >= len(rows):
                    raise DsmSyntaxError(eof_line, "expected '.end method'")
                lineno, line = rows[pos]
                if line == ".end method":
                    pos += 1
                    break
                tokens = line.split()
                if tokens[0].startswith("."):
                    raise DsmSyntaxError(lineno, "expected instruction or '.end method'")
                instr = Instruction(tokens[0], tuple(tokens[1:]))
                if instr.opcode == "invoke":
                    api = instr.api
                    if api is None or not is_api_signature(api):
                        raise DsmSyntaxError(
                            lineno, "invoke requires a well-formed API signature operand"
                        )
                body.append(instr)
                pos += 1
            methods.append(MethodDecl(name, descriptor, tuple(body), flags))
        elif head == ".super":
            raise DsmSyntaxError(lineno, "'.super' is only allowed directly after '.class'")
        else:
            raise DsmSyntaxError(lineno, "expected '.field', '.method' or '.end class'")

    if not closed:
        raise DsmSyntaxError(eof_line, "expected '.end class'")
    if pos < len(rows):
        raise DsmSyntaxError(rows[pos][0], "content after '.end class'")
    return ClassUnit(class_name, super_name, tuple(fields), tuple(methods))


def render_class_file(unit: ClassUnit) -> str:
    """Pretty-print a ClassUnit so that re-parsing reproduces it exactly."""
    out = [f".class {unit.class_name}"]
    if unit.super_name is not None:
        out.append(f".super {unit.super_name}")
    for f in unit.fields:
        out.append(" ".join((".field", *f.flags, f.name, f.descriptor)))
    for m in unit.methods:
        out.append(" ".join((".method", *m.flags, m.name, m.descriptor)))
        for instr in m.body:
            out.append(" ".join((instr.opcode, *instr.operands)))
        out.append(".end method")
    out.append(".end class")
    return "\n".join(out) + "\n"


def extract_api_invocations(unit: ClassUnit) -> set[ApiSignature]:
    """Deduplicated API signatures invoked anywhere in the class."""
    calls: set[ApiSignature] = set()
    for method in unit.methods:
        for instr in method.body:
            if instr.opcode == "invoke":
                api = instr.api
                if api is not None:
                    calls.add(api)
    return calls
