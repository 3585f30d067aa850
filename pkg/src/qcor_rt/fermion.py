"""Second-quantized fermionic observables and the Jordan-Wigner transform.

Normal ordering puts all creation operators before annihilation operators,
creations ascending by site and annihilations ascending, with a sign flip
per transposition and contraction terms from {c_i, c†_i} = 1.  Mode j maps
to qubit j; the Jordan-Wigner Z-string acts on qubits 0..j-1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ParseError, ValidationError
from .pauli import PauliObservable, PauliString

DENSE_MODE_CAP = 10

_ANNIHILATE = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
_CREATE = _ANNIHILATE.T.conj()
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class LadderOp:
    site: int
    dagger: bool

    def __post_init__(self):
        if self.site < 0:
            raise ValidationError(f"negative mode index {self.site}")

    def conjugate(self) -> "LadderOp":
        return LadderOp(self.site, not self.dagger)

    def __str__(self):
        return f"{self.site}^" if self.dagger else f"{self.site}"


@dataclass(frozen=True)
class FermionTerm:
    coefficient: complex
    ops: tuple

    def __post_init__(self):
        c = complex(self.coefficient)
        if not (np.isfinite(c.real) and np.isfinite(c.imag)):
            raise ValidationError(f"non-finite coefficient {self.coefficient!r}")
        object.__setattr__(self, "coefficient", c)

    def __str__(self):
        body = " ".join(str(op) for op in self.ops)
        return body if body else "1"


class FermionObservable:
    """Sum of ladder-operator products; op order within a term is significant."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable = ()):
        acc = {}
        for t in terms:
            if isinstance(t, FermionTerm):
                coeff, ops = t.coefficient, t.ops
            else:
                coeff, ops = t
                ops = tuple(ops)
                coeff = complex(coeff)
            acc[ops] = acc.get(ops, 0j) + coeff
        self._terms = {ops: c for ops, c in acc.items() if c != 0}

    @property
    def terms(self) -> tuple:
        return tuple(
            FermionTerm(self._terms[ops], ops)
            for ops in sorted(self._terms, key=_term_sort_key)
        )

    def num_modes(self) -> int:
        sites = [op.site for ops in self._terms for op in ops]
        return 1 + max(sites) if sites else 0

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, FermionObservable):
            return NotImplemented
        return self._terms == other._terms

    def __add__(self, other: "FermionObservable") -> "FermionObservable":
        return FermionObservable(
            [(c, ops) for ops, c in self._terms.items()]
            + [(c, ops) for ops, c in other._terms.items()]
        )

    def scale(self, factor: complex) -> "FermionObservable":
        return FermionObservable((c * factor, ops) for ops, c in self._terms.items())

    def conjugate(self) -> "FermionObservable":
        """Hermitian conjugate: reverse each product, dagger each op."""
        return FermionObservable(
            (c.conjugate(), tuple(op.conjugate() for op in reversed(ops)))
            for ops, c in self._terms.items()
        )

    def __str__(self):
        if not self._terms:
            return "(0,0)"
        parts = []
        for term in self.terms:
            c = term.coefficient
            if not term.ops:
                # identity terms print as a parenthesized coefficient so the
                # output re-parses (a bare integer would read as an operator)
                parts.append(_fmt_coeff(c, force_complex=True))
            elif c == 1:
                parts.append(str(term))
            else:
                parts.append(f"{_fmt_coeff(c)} {term}")
        return " + ".join(parts)


def _term_sort_key(ops: tuple):
    return (len(ops), tuple((op.site, not op.dagger) for op in ops))


def _fmt_coeff(c: complex, force_complex: bool = False) -> str:
    if c.imag == 0 and not force_complex:
        return repr(c.real)  # repr keeps a '.', so it re-parses as a coefficient
    return f"({repr(c.real)},{repr(c.imag)})"


# ---------------------------------------------------------------------------
# parsing

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_FTOKEN_RE = re.compile(
    rf"(?P<num>{_NUM})(?P<dag>\^)?|(?P<punct>[+\-(),^])|(?P<bad>\S)"
)


def parse_fermion(text: str) -> FermionObservable:
    """Parse a fermion string such as ``"1.0 0^ 1^ 1 0"``.

    A factor ``<site>^`` is a creation operator, ``<site>`` an
    annihilation operator; an optional leading coefficient may be real or
    ``(re,im)``.  Factor order is preserved.
    """
    if not text or not text.strip():
        raise ParseError("empty fermion string", 0)
    tokens = []
    for m in _FTOKEN_RE.finditer(text):
        if m.lastgroup == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", m.start())
        tokens.append(m)
    terms = []
    i = 0
    sign = 1.0
    if i < len(tokens) and tokens[i].group() in "+-":
        sign = -1.0 if tokens[i].group() == "-" else 1.0
        i += 1

    while True:
        if i >= len(tokens):
            raise ParseError("expected a term", len(text))
        coeff = 1 + 0j
        tok = tokens[i]
        if tok.group() in "+-":  # explicit sign on the coefficient
            sign *= -1.0 if tok.group() == "-" else 1.0
            i += 1
            if i >= len(tokens):
                raise ParseError("expected a term", len(text))
            tok = tokens[i]
        # Coefficients are "(re,im)" or a real with a '.' or exponent;
        # bare integers are always mode indices ("1 0^" is c_1 c†_0).
        if tok.group() == "(":
            i += 1
            re_part, i = _signed_number(tokens, i, text)
            if i >= len(tokens) or tokens[i].group() != ",":
                raise ParseError("expected ',' in complex coefficient",
                                 tokens[i].start() if i < len(tokens) else len(text))
            i += 1
            im_part, i = _signed_number(tokens, i, text)
            if i >= len(tokens) or tokens[i].group() != ")":
                raise ParseError("expected ')' in complex coefficient",
                                 tokens[i].start() if i < len(tokens) else len(text))
            i += 1
            coeff = complex(re_part, im_part)
        elif (tok.group("num") is not None and not tok.group("dag")
              and ("." in tok.group() or "e" in tok.group().lower())):
            coeff = complex(float(tok.group("num")), 0.0)
            i += 1
        ops = []
        while i < len(tokens) and tokens[i].group("num") is not None:
            m = tokens[i]
            site_text = m.group("num")
            if not site_text.isdigit():
                raise ParseError(f"mode index must be an integer, got {site_text!r}",
                                 m.start())
            ops.append(LadderOp(int(site_text), bool(m.group("dag"))))
            i += 1
        terms.append((sign * coeff, tuple(ops)))
        if i >= len(tokens):
            break
        tok = tokens[i]
        if tok.group() not in "+-":
            raise ParseError(f"expected '+' or '-', got {tok.group()!r}", tok.start())
        sign = -1.0 if tok.group() == "-" else 1.0
        i += 1
    return FermionObservable(terms)


def _signed_number(tokens, i, text):
    sign = 1.0
    if i < len(tokens) and tokens[i].group() in "+-":
        sign = -1.0 if tokens[i].group() == "-" else 1.0
        i += 1
    if i >= len(tokens) or tokens[i].group("num") is None or tokens[i].group("dag"):
        raise ParseError("expected number",
                         tokens[i].start() if i < len(tokens) else len(text))
    return sign * float(tokens[i].group("num")), i + 1


# ---------------------------------------------------------------------------
# normal ordering

def normal_order(obs: FermionObservable) -> FermionObservable:
    """Rewrite using {c_i, c†_j} = δ_ij into canonical normal-ordered form."""
    out = []
    work = [(c, list(ops)) for ops, c in obs._terms.items()]
    while work:
        coeff, ops = work.pop()
        swapped = False
        for i in range(len(ops) - 1):
            a, b = ops[i], ops[i + 1]
            if not a.dagger and b.dagger:
                # c_i c†_j = δ_ij - c†_j c_i
                if a.site == b.site:
                    contracted = ops[:i] + ops[i + 2:]
                    work.append((coeff, contracted))
                work.append((-coeff, ops[:i] + [b, a] + ops[i + 2:]))
                swapped = True
                break
            if a.dagger == b.dagger:
                if a.site == b.site:
                    # c†c† or cc with equal sites vanishes
                    swapped = True
                    break
                if a.site > b.site:
                    # same-species operators anticommute: sort ascending
                    work.append((-coeff, ops[:i] + [b, a] + ops[i + 2:]))
                    swapped = True
                    break
        if not swapped:
            out.append((coeff, tuple(ops)))
    return FermionObservable(out)


# ---------------------------------------------------------------------------
# transforms and the dense oracle

def _jw_ladder(op: LadderOp) -> PauliObservable:
    """c†_j -> (X_j - iY_j)/2 · Z_{j-1}..Z_0 (plus sign for c_j)."""
    zs = tuple((k, "Z") for k in range(op.site))
    x_string = PauliString(zs + ((op.site, "X"),))
    y_string = PauliString(zs + ((op.site, "Y"),))
    y_coeff = -0.5j if op.dagger else 0.5j
    return PauliObservable([(0.5, x_string), (y_coeff, y_string)])


def jordan_wigner(obs: FermionObservable) -> PauliObservable:
    """Map a fermionic observable onto Pauli strings; result is simplified."""
    total = PauliObservable()
    for ops, coeff in obs._terms.items():
        product = PauliObservable.identity(coeff)
        for op in ops:
            product = product * _jw_ladder(op)
        total = total + product
    return total.simplify()


def fermion_to_dense(obs: FermionObservable, n_modes: int) -> np.ndarray:
    """Literal dense-matrix construction of the observable (test oracle)."""
    if n_modes > DENSE_MODE_CAP:
        raise ValidationError(f"dense fermion oracle capped at {DENSE_MODE_CAP} modes")
    n = max(n_modes, obs.num_modes(), 1)
    if n > DENSE_MODE_CAP:
        raise ValidationError(f"dense fermion oracle capped at {DENSE_MODE_CAP} modes")
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for ops, coeff in obs._terms.items():
        m = coeff * np.eye(dim, dtype=complex)
        for op in ops:
            m = m @ _ladder_dense(op, n)
        out += m
    return out


def _ladder_dense(op: LadderOp, n: int) -> np.ndarray:
    local = _CREATE if op.dagger else _ANNIHILATE
    m = np.ones((1, 1), dtype=complex)
    for k in range(n):
        if k < op.site:
            m = np.kron(m, _Z)
        elif k == op.site:
            m = np.kron(m, local)
        else:
            m = np.kron(m, np.eye(2, dtype=complex))
    return m
