"""Quantum kernel intermediate representation and its textual DSL.

A kernel is a named, parameterized circuit.  Sources look like::

    kernel ansatz(t) qubits 2 {
      X q0;
      Ry(t) q1;
      CNOT q1 q0;
    }

Angles are radians.  Measurement is terminal per qubit.  Kernels are
immutable; `bind` and the append helpers return new kernels.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import ParseError, ValidationError

if TYPE_CHECKING:
    from .pauli import PauliString


class GateKind(Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    S = "S"
    Sdg = "Sdg"
    T = "T"
    Rx = "Rx"
    Ry = "Ry"
    Rz = "Rz"
    CNOT = "CNOT"
    CZ = "CZ"
    Measure = "Measure"


TWO_QUBIT_GATES = {GateKind.CNOT, GateKind.CZ}
ROTATION_GATES = {GateKind.Rx, GateKind.Ry, GateKind.Rz}
_GATE_BY_NAME = {g.value: g for g in GateKind}

# Basis change appended before measuring in the X/Y/Z eigenbasis.
_BASIS_CHANGE = {"X": (GateKind.H,), "Y": (GateKind.Sdg, GateKind.H), "Z": ()}


@dataclass(frozen=True)
class Instruction:
    kind: GateKind
    qubits: tuple
    param: float | str | None = None

    def __post_init__(self):
        arity = 2 if self.kind in TWO_QUBIT_GATES else 1
        if len(self.qubits) != arity:
            raise ValidationError(
                f"{self.kind.value} takes {arity} qubit(s), got {len(self.qubits)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValidationError(f"{self.kind.value} operands must be distinct qubits")
        if self.kind in ROTATION_GATES:
            if self.param is None:
                raise ValidationError(f"{self.kind.value} requires an angle parameter")
            if isinstance(self.param, float) and not math.isfinite(self.param):
                raise ValidationError(f"non-finite angle {self.param!r}")
        elif self.param is not None:
            raise ValidationError(f"{self.kind.value} takes no parameter")

    def is_bound(self) -> bool:
        return not isinstance(self.param, str)


@dataclass(frozen=True)
class Kernel:
    name: str
    params: tuple
    num_qubits: int
    body: tuple

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValidationError("kernel needs at least one qubit")
        if len(set(self.params)) != len(self.params):
            raise ValidationError("duplicate parameter names")
        measured = set()
        for instr in self.body:
            for q in instr.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValidationError(
                        f"qubit index q{q} out of range for {self.num_qubits}-qubit kernel"
                    )
                if q in measured:
                    raise ValidationError(
                        f"instruction on q{q} after its measurement (measurement is terminal)"
                    )
            if isinstance(instr.param, str) and instr.param not in self.params:
                raise ValidationError(f"unknown parameter {instr.param!r}")
            if instr.kind is GateKind.Measure:
                measured.add(instr.qubits[0])

    def is_measured(self) -> bool:
        return any(i.kind is GateKind.Measure for i in self.body)

    def measured_qubits(self) -> tuple:
        return tuple(sorted(i.qubits[0] for i in self.body if i.kind is GateKind.Measure))

    def is_bound(self) -> bool:
        return all(i.is_bound() for i in self.body)

    def bind(self, values: Sequence[float]) -> "Kernel":
        """Substitute literal angles for named parameters; result has no params."""
        if len(values) != len(self.params):
            raise ValidationError(
                f"kernel {self.name!r} takes {len(self.params)} parameter(s), got {len(values)}"
            )
        for v in values:
            if not math.isfinite(v):
                raise ValidationError(f"non-finite parameter value {v!r}")
        table = dict(zip(self.params, (float(v) for v in values)))
        body = tuple(
            replace(i, param=table[i.param]) if isinstance(i.param, str) else i
            for i in self.body
        )
        return Kernel(self.name, (), self.num_qubits, body)

    def with_instructions(self, extra: Iterable[Instruction]) -> "Kernel":
        return Kernel(self.name, self.params, self.num_qubits, self.body + tuple(extra))

    def with_measurement_basis(self, string: "PauliString") -> "Kernel":
        """Append basis changes then measurements for the string's support."""
        if self.params:
            raise ValidationError("cannot add measurements to a kernel with free parameters")
        if self.is_measured():
            raise ValidationError("kernel is already measured")
        extra = []
        for q, kind in string.ops:
            if q >= self.num_qubits:
                raise ValidationError(f"qubit {q} outside the {self.num_qubits}-qubit kernel")
            for gate in _BASIS_CHANGE[kind]:
                extra.append(Instruction(gate, (q,)))
        for q, _ in string.ops:
            extra.append(Instruction(GateKind.Measure, (q,)))
        return self.with_instructions(extra)

    def to_source(self) -> str:
        lines = [f"kernel {self.name}({','.join(self.params)}) qubits {self.num_qubits} {{"]
        for instr in self.body:
            gate = instr.kind.value
            if instr.param is not None:
                arg = instr.param if isinstance(instr.param, str) else f"{instr.param:.17g}"
                gate = f"{gate}({arg})"
            operands = " ".join(f"q{q}" for q in instr.qubits)
            lines.append(f"  {gate} {operands};")
        lines.append("}")
        return "\n".join(lines)

    def __str__(self):
        return self.to_source()


def append_measurement_basis(kernel: Kernel, string: "PauliString") -> Kernel:
    return kernel.with_measurement_basis(string)


def print_kernel(kernel: Kernel) -> str:
    return kernel.to_source()


# ---------------------------------------------------------------------------
# DSL parsing

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_NUM_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class _Lexer:
    def __init__(self, text: str):
        self.tokens = []
        line, col = 1, 1
        i = 0
        while i < len(text):
            ch = text[i]
            if ch == "\n":
                line += 1
                col = 1
                i += 1
                continue
            if ch in " \t\r":
                i += 1
                col += 1
                continue
            if text.startswith("//", i):
                j = text.find("\n", i)
                i = len(text) if j < 0 else j
                continue
            m = _NUM_RE.match(text, i)
            if m and ch.isdigit() or (ch == "." and m):
                self.tokens.append(("num", m.group(), line, col))
                col += len(m.group())
                i = m.end()
                continue
            m = _IDENT_RE.match(text, i)
            if m:
                self.tokens.append(("ident", m.group(), line, col))
                col += len(m.group())
                i = m.end()
                continue
            if ch in "(){};,-":
                self.tokens.append(("punct", ch, line, col))
                i += 1
                col += 1
                continue
            raise ParseError(f"unexpected character {ch!r}", (line, col))
        self.pos = 0
        self.end = (line, col)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def where(self):
        tok = self.peek()
        return (tok[2], tok[3]) if tok else self.end

    def expect(self, text, what=None):
        tok = self.next()
        if tok is None or tok[1] != text:
            raise ParseError(
                f"expected {what or text!r}, got {tok[1]!r}" if tok else f"expected {what or text!r}",
                (tok[2], tok[3]) if tok else self.end,
            )
        return tok

    def expect_kind(self, kind, what):
        tok = self.next()
        if tok is None or tok[0] != kind:
            raise ParseError(
                f"expected {what}, got {tok[1]!r}" if tok else f"expected {what}",
                (tok[2], tok[3]) if tok else self.end,
            )
        return tok


def _parse_operand(lx: _Lexer) -> int:
    tok = lx.expect_kind("ident", "qubit operand like q0")
    if not re.fullmatch(r"q\d+", tok[1]):
        raise ParseError(f"expected qubit operand like q0, got {tok[1]!r}", (tok[2], tok[3]))
    return int(tok[1][1:])


def parse_kernel(text: str) -> Kernel:
    """Parse a kernel DSL source into a validated Kernel."""
    lx = _Lexer(text)
    lx.expect("kernel")
    name = lx.expect_kind("ident", "kernel name")[1]
    lx.expect("(")
    params = []
    tok = lx.peek()
    if tok is not None and tok[1] != ")":
        while True:
            params.append(lx.expect_kind("ident", "parameter name")[1])
            tok = lx.next()
            if tok is None or tok[1] not in ",)":
                raise ParseError("expected ',' or ')'", (tok[2], tok[3]) if tok else lx.end)
            if tok[1] == ")":
                break
    else:
        lx.expect(")")
    lx.expect("qubits")
    ntok = lx.expect_kind("num", "qubit count")
    if not ntok[1].isdigit():
        raise ParseError(f"qubit count must be an integer, got {ntok[1]!r}", (ntok[2], ntok[3]))
    num_qubits = int(ntok[1])
    lx.expect("{")
    body = []
    while True:
        tok = lx.peek()
        if tok is None:
            raise ParseError("unterminated kernel body", lx.end)
        if tok[1] == "}":
            lx.next()
            break
        gtok = lx.expect_kind("ident", "gate name")
        kind = _GATE_BY_NAME.get(gtok[1])
        if kind is None:
            raise ParseError(f"unknown gate {gtok[1]!r}", (gtok[2], gtok[3]))
        param = None
        if lx.peek() is not None and lx.peek()[1] == "(":
            lx.next()
            ptok = lx.peek()
            if ptok is not None and ptok[1] == "-":
                lx.next()
                vtok = lx.expect_kind("num", "angle")
                param = -float(vtok[1])
            elif ptok is not None and ptok[0] == "num":
                lx.next()
                param = float(ptok[1])
            elif ptok is not None and ptok[0] == "ident":
                lx.next()
                param = ptok[1]
            else:
                raise ParseError("expected angle literal or parameter name", lx.where())
            lx.expect(")")
        qubits = [_parse_operand(lx)]
        while lx.peek() is not None and lx.peek()[0] == "ident" and re.fullmatch(r"q\d+", lx.peek()[1]):
            qubits.append(_parse_operand(lx))
        lx.expect(";")
        try:
            instr = Instruction(kind, tuple(qubits), param)
        except ValidationError as e:
            raise ParseError(str(e), (gtok[2], gtok[3])) from e
        body.append(instr)
    if lx.peek() is not None:
        tok = lx.peek()
        raise ParseError(f"trailing input {tok[1]!r}", (tok[2], tok[3]))
    try:
        return Kernel(name, tuple(params), num_qubits, tuple(body))
    except ValidationError as e:
        raise ParseError(str(e)) from e


def parse_kernel_file(path: str) -> Kernel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kernel(fh.read())


def bind(kernel: Kernel, values: Sequence[float]) -> Kernel:
    return kernel.bind(values)


def identity_kernel(num_qubits: int, name: str = "identity") -> Kernel:
    return Kernel(name, (), num_qubits, ())
