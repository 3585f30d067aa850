"""Sparse Pauli observable algebra.

An observable is a weighted sum of Pauli strings.  Strings are stored
sparsely (identity factors omitted), values are immutable, and every
operation returns a new object, so observables can be shared freely
across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from .errors import ParseError, ValidationError

if TYPE_CHECKING:
    from .kernel import Kernel

DEFAULT_TOL = 1e-12
DENSE_QUBIT_CAP = 12

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Single-qubit products: (a, b) -> (phase, a*b).
_CYCLE = {
    ("X", "Y"): (1j, "Z"),
    ("Y", "Z"): (1j, "X"),
    ("Z", "X"): (1j, "Y"),
    ("Y", "X"): (-1j, "Z"),
    ("Z", "Y"): (-1j, "X"),
    ("X", "Z"): (-1j, "Y"),
}
_PRODUCT = {}
for _a in "IXYZ":
    for _b in "IXYZ":
        if _a == "I":
            _PRODUCT[(_a, _b)] = (1, _b)
        elif _b == "I":
            _PRODUCT[(_a, _b)] = (1, _a)
        elif _a == _b:
            _PRODUCT[(_a, _b)] = (1, "I")
        else:
            _PRODUCT[(_a, _b)] = _CYCLE[(_a, _b)]


@dataclass(frozen=True)
class PauliString:
    """Tensor product of non-identity Paulis, as ((qubit, kind), ...) sorted by qubit."""

    ops: tuple = ()

    def __post_init__(self):
        qubits = [q for q, _ in self.ops]
        if qubits != sorted(set(qubits)):
            raise ValidationError(f"qubit indices not sorted/unique: {self.ops}")
        for q, kind in self.ops:
            if q < 0:
                raise ValidationError(f"negative qubit index {q}")
            if kind not in ("X", "Y", "Z"):
                raise ValidationError(f"invalid Pauli kind {kind!r} (identity must be omitted)")

    @classmethod
    def from_map(cls, ops: Mapping[int, str]) -> "PauliString":
        return cls(tuple(sorted((q, k) for q, k in ops.items() if k != "I")))

    @property
    def qubits(self) -> tuple:
        return tuple(q for q, _ in self.ops)

    def op_on(self, qubit: int) -> str:
        for q, kind in self.ops:
            if q == qubit:
                return kind
        return "I"

    def mul(self, other: "PauliString"):
        """Return (phase, product string) under the Pauli multiplication table."""
        phase = 1 + 0j
        out = {}
        for q, kind in self.ops:
            out[q] = kind
        for q, kind in other.ops:
            p, k = _PRODUCT[(out.get(q, "I"), kind)]
            phase *= p
            if k == "I":
                out.pop(q, None)
            else:
                out[q] = k
        return phase, PauliString.from_map(out)

    def qubitwise_commutes(self, other: "PauliString") -> bool:
        mine = dict(self.ops)
        for q, kind in other.ops:
            if mine.get(q, kind) != kind:
                return False
        return True

    def __str__(self):
        if not self.ops:
            return "I"
        return " ".join(f"{kind}{q}" for q, kind in self.ops)


@dataclass(frozen=True)
class PauliTerm:
    coefficient: complex
    string: PauliString

    def __post_init__(self):
        c = complex(self.coefficient)
        if not (np.isfinite(c.real) and np.isfinite(c.imag)):
            raise ValidationError(f"non-finite coefficient {self.coefficient!r}")
        object.__setattr__(self, "coefficient", c)


def _fmt_float(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _string_sort_key(s: PauliString):
    return (tuple(q for q, _ in s.ops), tuple(k for _, k in s.ops))


class PauliObservable:
    """Weighted sum of Pauli strings, at most one term per distinct string."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable = ()):
        acc = {}
        for t in terms:
            if isinstance(t, PauliTerm):
                coeff, string = t.coefficient, t.string
            else:
                coeff, string = t
                coeff = complex(coeff)
            if not (np.isfinite(coeff.real) and np.isfinite(coeff.imag)):
                raise ValidationError(f"non-finite coefficient {coeff!r}")
            acc[string] = acc.get(string, 0j) + coeff
        self._terms = {s: c for s, c in acc.items() if c != 0}

    @classmethod
    def identity(cls, coefficient=1.0) -> "PauliObservable":
        return cls([(coefficient, PauliString())])

    @property
    def terms(self) -> tuple:
        return tuple(
            PauliTerm(self._terms[s], s)
            for s in sorted(self._terms, key=_string_sort_key)
        )

    def num_qubits(self) -> int:
        indices = [q for s in self._terms for q in s.qubits]
        return 1 + max(indices) if indices else 0

    def identity_coefficient(self) -> complex:
        return self._terms.get(PauliString(), 0j)

    def simplify(self, tol: float = DEFAULT_TOL) -> "PauliObservable":
        if tol < 0:
            raise ValidationError("tolerance must be non-negative")
        return PauliObservable(
            (c, s) for s, c in self._terms.items() if abs(c) > tol
        )

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, PauliObservable):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "PauliObservable") -> "PauliObservable":
        return PauliObservable(
            [(c, s) for s, c in self._terms.items()]
            + [(c, s) for s, c in other._terms.items()]
        )

    def __sub__(self, other: "PauliObservable") -> "PauliObservable":
        return self + other.scale(-1)

    def scale(self, factor: complex) -> "PauliObservable":
        return PauliObservable((c * factor, s) for s, c in self._terms.items())

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        out = []
        for sa, ca in self._terms.items():
            for sb, cb in other._terms.items():
                phase, s = sa.mul(sb)
                out.append((ca * cb * phase, s))
        return PauliObservable(out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    def to_string(self) -> str:
        if not self._terms:
            return "(0,0) I"
        parts = []
        for term in self.terms:
            body = str(term.string)
            c = term.coefficient
            if c == 1:
                parts.append(body)
            else:
                parts.append(f"({_fmt_float(c.real)},{_fmt_float(c.imag)}) {body}")
        return " + ".join(parts)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"PauliObservable({self.to_string()!r})"

    def to_dense(self, num_qubits: int | None = None) -> np.ndarray:
        """Dense 2^n x 2^n matrix; qubit 0 is the most significant tensor factor."""
        n = self.num_qubits() if num_qubits is None else num_qubits
        n = max(n, 1)
        if n < self.num_qubits():
            raise ValidationError(
                f"matrix width {n} smaller than observable width {self.num_qubits()}"
            )
        if n > DENSE_QUBIT_CAP:
            raise ValidationError(f"dense matrix limited to {DENSE_QUBIT_CAP} qubits, got {n}")
        dim = 2**n
        out = np.zeros((dim, dim), dtype=complex)
        for s, c in self._terms.items():
            m = np.ones((1, 1), dtype=complex)
            for q in range(n):
                m = np.kron(m, _MATRICES[s.op_on(q)])
            out += c * m
        return out

    def observe(self, kernel: "Kernel"):
        """Produce one measured kernel per non-identity term.

        Returns (pairs, offset): `pairs` is a list of (PauliTerm, measured
        Kernel); `offset` is the summed coefficient of identity terms,
        carried analytically instead of running a no-op circuit.
        """
        if kernel.is_measured():
            raise ValidationError("observe requires an unmeasured kernel")
        if kernel.num_qubits < self.num_qubits():
            raise ValidationError(
                f"kernel has {kernel.num_qubits} qubits, observable needs {self.num_qubits()}"
            )
        pairs = []
        offset = 0j
        for term in self.terms:
            if not term.string.ops:
                offset += term.coefficient
            else:
                pairs.append((term, kernel.with_measurement_basis(term.string)))
        return pairs, offset

    def group_commuting(self) -> list:
        """Greedy partition into qubit-wise commuting groups."""
        groups = []
        for term in self.terms:
            for g in groups:
                if all(term.string.qubitwise_commutes(t.string) for t in g):
                    g.append(term)
                    break
            else:
                groups.append([term])
        return [PauliObservable(g) for g in groups]


# ---------------------------------------------------------------------------
# parsing

_NUM_RE = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN_RE = re.compile(
    rf"(?P<num>{_NUM_RE})|(?P<factor>[XYZ]\d+)|(?P<ident>I)|(?P<punct>[+\-(),])|(?P<bad>\S)"
)


def _tokenize(text: str):
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        if m.lastgroup == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", m.start())
        tokens.append((m.lastgroup, m.group(), m.start()))
    return tokens


class _TokenStream:
    def __init__(self, tokens, length):
        self.tokens = tokens
        self.pos = 0
        self.length = length

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def here(self):
        tok = self.peek()
        return tok[2] if tok is not None else self.length

    def expect(self, text):
        tok = self.next()
        if tok is None or tok[1] != text:
            raise ParseError(f"expected {text!r}", tok[2] if tok else self.length)
        return tok


def _parse_signed_number(ts: _TokenStream) -> float:
    sign = 1.0
    tok = ts.peek()
    if tok is not None and tok[1] in "+-":
        ts.next()
        sign = -1.0 if tok[1] == "-" else 1.0
        tok = ts.peek()
    if tok is None or tok[0] != "num":
        raise ParseError("expected number", ts.here())
    ts.next()
    return sign * float(tok[1])


def _parse_coefficient(ts: _TokenStream) -> complex | None:
    tok = ts.peek()
    if tok is None:
        return None
    if tok[0] == "num":
        ts.next()
        return complex(float(tok[1]), 0.0)
    if tok[1] == "(":
        ts.next()
        re_part = _parse_signed_number(ts)
        ts.expect(",")
        im_part = _parse_signed_number(ts)
        ts.expect(")")
        return complex(re_part, im_part)
    return None


def parse_pauli(text: str) -> PauliObservable:
    """Parse an observable string, e.g. ``"X0 X1 + (0.5,0) Z0 Z1"``."""
    if not text or not text.strip():
        raise ParseError("empty observable string", 0)
    ts = _TokenStream(_tokenize(text), len(text))
    terms = []
    sign = 1.0
    tok = ts.peek()
    if tok is not None and tok[1] in "+-":  # tolerate a leading sign
        ts.next()
        sign = -1.0 if tok[1] == "-" else 1.0
    while True:
        coeff = _parse_coefficient(ts)
        if coeff is None:
            coeff = 1 + 0j
        coeff *= sign
        ops = {}
        phase = 1 + 0j
        saw_factor = False
        while True:
            tok = ts.peek()
            if tok is None or tok[1] in "+-":
                break
            ts.next()
            if tok[0] == "ident":  # literal I
                saw_factor = True
                continue
            if tok[0] != "factor":
                raise ParseError(f"expected Pauli factor, got {tok[1]!r}", tok[2])
            saw_factor = True
            kind, q = tok[1][0], int(tok[1][1:])
            p, k = _PRODUCT[(ops.get(q, "I"), kind)]
            phase *= p
            if k == "I":
                ops.pop(q, None)
            else:
                ops[q] = k
        if not saw_factor:
            raise ParseError("term has no Pauli factor", ts.here())
        terms.append((coeff * phase, PauliString.from_map(ops)))
        tok = ts.next()
        if tok is None:
            break
        sign = -1.0 if tok[1] == "-" else 1.0
    return PauliObservable(terms)


# ---------------------------------------------------------------------------
# estimation

def expectation_from_counts(term: PauliTerm, counts: Mapping[str, float],
                            measured_qubits=None) -> float:
    """Parity-weighted average of measurement outcomes for one term.

    `counts` maps bitstrings (measured qubits ascending, qubit 0 leftmost)
    to shot counts, or to real weights for quasi-distributions.  The
    estimate uses Re(coefficient).
    """
    if not counts:
        raise ValidationError("empty counts")
    support = term.string.qubits
    if measured_qubits is None:
        measured_qubits = support
    measured = sorted(measured_qubits)
    positions = [measured.index(q) for q in support if q in measured]
    if len(positions) != len(support):
        raise ValidationError(
            f"counts do not cover the term support {support} (measured {measured})"
        )
    total = 0.0
    acc = 0.0
    for bits, weight in counts.items():
        if len(bits) != len(measured):
            raise ValidationError(
                f"bitstring {bits!r} does not match measured qubits {measured}"
            )
        parity = sum(bits[p] == "1" for p in positions) % 2
        total += weight
        acc += -weight if parity else weight
    if total == 0:
        raise ValidationError("counts sum to zero")
    return term.coefficient.real * acc / total
