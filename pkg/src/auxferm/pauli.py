"""Exact algebra of phased Pauli strings.

A :class:`PauliTerm` is ``phase * coeff * P`` where ``phase`` is one of the
four units ``{+1, -1, +1j, -1j}``, ``coeff`` is a non-negative real number and
``P`` is a tensor product of single-qubit Paulis stored sparsely as sorted
``(qubit, letter)`` pairs.  Qubit indices are plain non-negative integers.

A :class:`PauliSum` is an exactly merged collection of terms.  No floating
threshold is applied when merging: coefficients only cancel when they are
exactly equal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy import sparse

PHASES = (1, 1j, -1, -1j)
LETTERS = ("X", "Y", "Z")

# (a, b) -> (power of i, product letter) for a*b on a single qubit
_SINGLE = {
    ("X", "X"): (0, None), ("Y", "Y"): (0, None), ("Z", "Z"): (0, None),
    ("X", "Y"): (1, "Z"), ("Y", "Z"): (1, "X"), ("Z", "X"): (1, "Y"),
    ("Y", "X"): (3, "Z"), ("Z", "Y"): (3, "X"), ("X", "Z"): (3, "Y"),
}

_PHASE_TEXT = {1: "+", -1: "-", 1j: "+i", -1j: "-i"}
_TEXT_PHASE = {v: k for k, v in _PHASE_TEXT.items()}


def _phase_power(phase: complex) -> int:
    for k, p in enumerate(PHASES):
        if phase == p:
            return k
    raise ValueError(f"phase must be one of +1, -1, +i, -i, got {phase!r}")


def _normalize_letters(letters) -> tuple[tuple[int, str], ...]:
    if isinstance(letters, Mapping):
        items = letters.items()
    else:
        items = letters
    out = {}
    for q, a in items:
        q = int(q)
        if q < 0:
            raise ValueError(f"negative qubit index {q}")
        if a in ("I", None):
            continue
        if a not in LETTERS:
            raise ValueError(f"unknown Pauli letter {a!r}")
        if q in out:
            raise ValueError(f"qubit {q} given twice")
        out[q] = a
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class PauliTerm:
    """``phase * coeff * (tensor product of letters)``.

    Negative coefficients are folded into the phase on construction, so the
    stored ``coeff`` is always ``>= 0`` and dataclass equality is canonical
    equality.
    """

    letters: tuple[tuple[int, str], ...] = ()
    phase: complex = 1
    coeff: float = 1.0

    def __post_init__(self):
        letters = _normalize_letters(self.letters)
        k = _phase_power(self.phase)
        coeff = float(self.coeff)
        if not math.isfinite(coeff):
            raise ValueError("coefficient must be finite")
        if coeff < 0:
            coeff = -coeff
            k = (k + 2) % 4
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "phase", PHASES[k])
        object.__setattr__(self, "coeff", coeff)

    @classmethod
    def from_dict(cls, letters: Mapping[int, str], phase: complex = 1, coeff: float = 1.0):
        return cls(tuple(letters.items()), phase, coeff)

    @classmethod
    def identity(cls, coeff: float = 1.0, phase: complex = 1) -> "PauliTerm":
        return cls((), phase, coeff)

    @classmethod
    def single(cls, letter: str, qubit: int) -> "PauliTerm":
        return cls(((qubit, letter),))

    @classmethod
    def z_string(cls, qubits: Iterable[int]) -> "PauliTerm":
        """Product of ``Z`` over ``qubits``; repeated indices cancel."""
        counts: dict[int, int] = {}
        for q in qubits:
            counts[q] = counts.get(q, 0) ^ 1
        return cls(tuple((q, "Z") for q, odd in counts.items() if odd))

    @cached_property
    def as_dict(self) -> dict[int, str]:
        return dict(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.letters)

    @property
    def value(self) -> complex:
        """The complex prefactor ``phase * coeff``."""
        return self.phase * self.coeff

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (1, -1)

    @property
    def masks(self) -> tuple[int, int]:
        """Bit masks ``(x, z)``: X sets x, Z sets z, Y sets both."""
        return self._masks

    @cached_property
    def _masks(self) -> tuple[int, int]:
        x = z = 0
        for q, a in self.letters:
            if a in "XY":
                x |= 1 << q
            if a in "YZ":
                z |= 1 << q
        return x, z

    def scaled(self, factor: complex) -> "PauliTerm":
        """Multiply by a unit phase or a real number."""
        if factor in PHASES and not isinstance(factor, bool):
            return PauliTerm(self.letters, self.phase * factor, self.coeff)
        if isinstance(factor, complex):
            if factor.imag != 0:
                raise ValueError("only unit phases or real scalars can scale a PauliTerm")
            factor = factor.real
        return PauliTerm(self.letters, self.phase, self.coeff * factor)

    def __neg__(self) -> "PauliTerm":
        return self.scaled(-1)

    def __mul__(self, other):
        if isinstance(other, PauliTerm):
            return pauli_mul(self, other)
        if isinstance(other, PauliSum):
            return PauliSum([self]) * other
        return self.scaled(other)

    def __rmul__(self, other):
        return self.scaled(other)

    def dagger(self) -> "PauliTerm":
        return PauliTerm(self.letters, self.phase.conjugate(), self.coeff)

    def __str__(self) -> str:
        return format_term(self)

    def to_matrix(self, n_qubits: int) -> np.ndarray:
        """Dense matrix with qubit 0 as the least significant bit."""
        return pauli_matrix(self, n_qubits)

    def to_sparse(self, n_qubits: int):
        return pauli_sparse(self, n_qubits)


def pauli_mul(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Canonical product ``a * b`` with exact phase tracking."""
    power = _phase_power(a.phase) + _phase_power(b.phase)
    letters = dict(a.letters)
    for q, lb in b.letters:
        la = letters.get(q)
        if la is None:
            letters[q] = lb
            continue
        k, c = _SINGLE[(la, lb)]
        power += k
        if c is None:
            del letters[q]
        else:
            letters[q] = c
    return PauliTerm(tuple(letters.items()), PHASES[power % 4], a.coeff * b.coeff)


def commutes(a: PauliTerm, b: PauliTerm) -> bool:
    """True iff ``a*b == b*a`` (even number of anticommuting overlaps)."""
    ax, az = a.masks
    bx, bz = b.masks
    return (bin(ax & bz).count("1") + bin(az & bx).count("1")) % 2 == 0


def weight(a: PauliTerm) -> int:
    return len(a.letters)


def is_hermitian(a: PauliTerm) -> bool:
    return a.is_hermitian


class PauliSum:
    """Immutable linear combination of Pauli strings.

    Terms with the same letters are merged by adding their complex
    prefactors exactly; the merged prefactor is stored as at most two terms,
    one real-phased and one imaginary-phased.  Exact zeros are dropped.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[PauliTerm] = ()):
        acc: dict[tuple, list[float]] = {}
        order: list[tuple] = []
        for t in terms:
            if not isinstance(t, PauliTerm):
                raise TypeError(f"expected PauliTerm, got {type(t).__name__}")
            key = t.letters
            if key not in acc:
                acc[key] = [0.0, 0.0]
                order.append(key)
            v = t.value
            acc[key][0] += v.real
            acc[key][1] += v.imag
        out = []
        for key in order:
            re_, im_ = acc[key]
            if re_ != 0:
                out.append(PauliTerm(key, 1, re_))
            if im_ != 0:
                out.append(PauliTerm(key, 1j, im_))
        out.sort(key=_sort_key)
        self._terms = tuple(out)

    @property
    def terms(self) -> tuple[PauliTerm, ...]:
        return self._terms

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, PauliTerm):
            other = PauliSum([other])
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(self._terms)

    def __add__(self, other) -> "PauliSum":
        if isinstance(other, PauliTerm):
            other = [other]
        return PauliSum([*self._terms, *other])

    def __sub__(self, other) -> "PauliSum":
        if isinstance(other, PauliTerm):
            other = [other]
        return PauliSum([*self._terms, *(-t for t in other)])

    def __neg__(self) -> "PauliSum":
        return PauliSum(-t for t in self._terms)

    def __mul__(self, other) -> "PauliSum":
        if isinstance(other, PauliTerm):
            other = PauliSum([other])
        if isinstance(other, PauliSum):
            return PauliSum(pauli_mul(a, b) for a in self._terms for b in other._terms)
        z = complex(other)
        out = []
        if z.real:
            out += [t.scaled(z.real) for t in self._terms]
        if z.imag:
            out += [t.scaled(1j).scaled(z.imag) for t in self._terms]
        return PauliSum(out)

    def __rmul__(self, other) -> "PauliSum":
        if isinstance(other, PauliTerm):
            return PauliSum([other]) * self
        return self * other

    def dagger(self) -> "PauliSum":
        return PauliSum(t.dagger() for t in self._terms)

    @property
    def is_hermitian(self) -> bool:
        return all(t.is_hermitian for t in self._terms)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({q for t in self._terms for q in t.support}))

    def max_weight(self) -> int:
        return max((weight(t) for t in self._terms), default=0)

    def n_qubits_needed(self) -> int:
        s = self.support
        return s[-1] + 1 if s else 0

    def to_matrix(self, n_qubits: int) -> np.ndarray:
        dim = 1 << n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self._terms:
            out += pauli_matrix(t, n_qubits)
        return out

    def to_sparse(self, n_qubits: int) -> sparse.csr_matrix:
        dim = 1 << n_qubits
        out = sparse.csr_matrix((dim, dim), dtype=complex)
        for t in self._terms:
            out = out + pauli_sparse(t, n_qubits)
        return out

    def __repr__(self) -> str:
        return "PauliSum([" + ", ".join(repr(str(t)) for t in self._terms) + "])"

    def __str__(self) -> str:
        return "\n".join(format_term(t) for t in self._terms) if self._terms else "0"


def _sort_key(t: PauliTerm):
    return (len(t.letters), t.letters, _phase_power(t.phase))


def _pauli_entries(term: PauliTerm, n_qubits: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if term.support and term.support[-1] >= n_qubits:
        raise ValueError("term acts outside the register")
    dim = 1 << n_qubits
    x, z = term.masks
    idx = np.arange(dim)
    n_y = bin(x & z).count("1")
    parity = np.zeros(dim, dtype=np.int64)
    zz = z
    q = 0
    while zz:
        if zz & 1:
            parity ^= (idx >> q) & 1
        zz >>= 1
        q += 1
    # <idx ^ x| P |idx> = i^{n_y} (-1)^{popcount(idx & z)}
    vals = term.value * (1j ** n_y) * (1 - 2 * parity)
    return idx ^ x, idx, vals


def pauli_matrix(term: PauliTerm, n_qubits: int) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix; qubit 0 is the least significant bit."""
    rows, cols, vals = _pauli_entries(term, n_qubits)
    out = np.zeros((1 << n_qubits,) * 2, dtype=complex)
    out[rows, cols] = vals
    return out


def pauli_sparse(term: PauliTerm, n_qubits: int) -> sparse.csr_matrix:
    """Same matrix in CSR form (one nonzero per column)."""
    rows, cols, vals = _pauli_entries(term, n_qubits)
    dim = 1 << n_qubits
    return sparse.csr_matrix((vals.astype(complex), (rows, cols)), shape=(dim, dim))


_TERM_RE = re.compile(r"^([+-]i?)([0-9.eE+-]+)$")
_FACTOR_RE = re.compile(r"^([XYZ])(\d+)$")


def format_term(t: PauliTerm, digits: int | None = None) -> str:
    """Render as ``<phase><coeff> <letter><index> ...``, e.g. ``+0.5 X0 X4``.

    ``digits`` rounds the coefficient to that many significant digits;
    the default keeps the exact repr.
    """
    coeff = repr(t.coeff) if digits is None else f"{t.coeff:.{digits}g}"
    head = f"{_PHASE_TEXT[t.phase]}{coeff}"
    body = " ".join(f"{a}{q}" for q, a in t.letters)
    return f"{head} {body}" if body else head


def parse_term(text: str) -> PauliTerm:
    """Inverse of :func:`format_term`."""
    parts = text.split()
    if not parts:
        raise ValueError("empty Pauli term")
    m = _TERM_RE.match(parts[0])
    if not m:
        raise ValueError(f"bad phase/coefficient field {parts[0]!r}")
    phase = _TEXT_PHASE[m.group(1)]
    coeff = float(m.group(2))
    letters = []
    for p in parts[1:]:
        f = _FACTOR_RE.match(p)
        if not f:
            raise ValueError(f"bad Pauli factor {p!r}")
        letters.append((int(f.group(2)), f.group(1)))
    qs = [q for q, _ in letters]
    if qs != sorted(set(qs)):
        raise ValueError("qubit indices must be strictly ascending")
    return PauliTerm(tuple(letters), phase, coeff)
