"""Jordan-Wigner images of physical and auxiliary fermionic modes.

Modes are ordered site-major: on site ``i`` the physical mode (register 0)
is followed by the auxiliary registers ``1..nu``, then site ``i+1`` starts.
Sites are 1-based, registers 0-based, qubits 0-based::

    qubit_index(i, l) = (i - 1) * (nu + 1) + l

The lowering operator of mode ``(i, l)`` is ``S_i Z_{i,<l} (X - iY)/2`` with
``S_i`` the Z string over every qubit of sites ``1..i-1``.  Since
``(X - iY)/2 = |1><0|``, a qubit in ``|0>`` is an *occupied* mode and the
number operator is ``(1 + Z)/2``.  The all-zeros basis state is used as the
reference state ``|0_aux>`` for auxiliary-state preparation; the stabilizer
eigen-relations used there hold for any reference state.

Majorana operators are ``c = b + b^dag`` and ``d = -i (b - b^dag)``.  Their
Pauli images (and signs) are obtained by expanding these definitions, never
written down by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .pauli import PauliSum, PauliTerm


@dataclass(frozen=True)
class ModeLayout:
    n_sites: int
    n_aux: int = 0

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if self.n_aux < 0:
            raise ValueError("n_aux must be non-negative")

    @property
    def registers(self) -> int:
        return self.n_aux + 1

    @property
    def n_qubits(self) -> int:
        return self.registers * self.n_sites

    def check_site(self, site: int) -> None:
        if not 1 <= site <= self.n_sites:
            raise ValueError(f"site {site} outside 1..{self.n_sites}")

    def check_register(self, register: int) -> None:
        if not 0 <= register <= self.n_aux:
            raise ValueError(f"register {register} outside 0..{self.n_aux}")

    def qubit_index(self, site: int, register: int = 0) -> int:
        self.check_site(site)
        self.check_register(register)
        return (site - 1) * self.registers + register

    def site_of(self, qubit: int) -> int:
        return qubit // self.registers + 1

    def register_of(self, qubit: int) -> int:
        return qubit % self.registers

    def site_qubits(self, site: int) -> range:
        start = self.qubit_index(site, 0)
        return range(start, start + self.registers)

    def physical_qubits(self) -> list[int]:
        return [self.qubit_index(i, 0) for i in range(1, self.n_sites + 1)]

    def aux_qubits(self) -> list[int]:
        return [q for q in range(self.n_qubits) if q % self.registers]


@dataclass(frozen=True)
class MajoranaLabel:
    kind: str  # "c" or "d"
    site: int
    register: int = 0

    def __post_init__(self):
        if self.kind not in ("c", "d"):
            raise ValueError(f"Majorana kind must be 'c' or 'd', got {self.kind!r}")


def jw_string(layout: ModeLayout, site: int) -> PauliTerm:
    """``S_site``: Z on every qubit of the sites preceding ``site``."""
    layout.check_site(site)
    return PauliTerm.z_string(range(layout.qubit_index(site, 0)))


def register_prefix(layout: ModeLayout, site: int, register: int) -> PauliTerm:
    """``Z_{site,<register}``: Z on registers ``0..register-1`` of ``site``."""
    base = layout.qubit_index(site, 0)
    layout.check_register(register)
    return PauliTerm.z_string(range(base, base + register))


def lowering(layout: ModeLayout, site: int, register: int = 0) -> PauliSum:
    q = layout.qubit_index(site, register)
    string = jw_string(layout, site) * register_prefix(layout, site, register)
    local = PauliSum([PauliTerm.single("X", q).scaled(0.5), PauliTerm.single("Y", q).scaled(0.5).scaled(-1j)])
    return string * local


def raising(layout: ModeLayout, site: int, register: int = 0) -> PauliSum:
    return lowering(layout, site, register).dagger()


annihilation = lowering
creation = raising


@lru_cache(maxsize=4096)
def majorana(layout: ModeLayout, label: MajoranaLabel) -> PauliTerm:
    """JW image of ``c_i^(l)`` or ``d_i^(l)`` as a single Hermitian Pauli term."""
    b = lowering(layout, label.site, label.register)
    bd = b.dagger()
    op = b + bd if label.kind == "c" else (b - bd) * (-1j)
    (term,) = op.terms
    return term


def majorana_c(layout: ModeLayout, site: int, register: int = 0) -> PauliTerm:
    return majorana(layout, MajoranaLabel("c", site, register))


def majorana_d(layout: ModeLayout, site: int, register: int = 0) -> PauliTerm:
    return majorana(layout, MajoranaLabel("d", site, register))


def all_majoranas(layout: ModeLayout) -> list[MajoranaLabel]:
    return [
        MajoranaLabel(kind, i, l)
        for i in range(1, layout.n_sites + 1)
        for l in range(layout.registers)
        for kind in ("c", "d")
    ]


def number_op(layout: ModeLayout, site: int) -> PauliSum:
    """``n_i = a_i^dag a_i = (1 + Z_i^(0))/2``."""
    return raising(layout, site) * lowering(layout, site)


def jw_hopping(layout: ModeLayout, i: int, j: int) -> PauliSum:
    """``a_i^dag a_j + a_j^dag a_i`` for ``i < j``."""
    if not i < j:
        raise ValueError(f"hopping needs i < j, got ({i}, {j})")
    layout.check_site(i)
    layout.check_site(j)
    fwd = raising(layout, i) * lowering(layout, j)
    return fwd + fwd.dagger()


def ladder_product(layout: ModeLayout, ops) -> PauliSum:
    """Product of ladder operators, ``ops`` = [(site, is_creation), ...] left to right."""
    out = PauliSum([PauliTerm.identity()])
    for site, dag in ops:
        out = out * (raising(layout, site) if dag else lowering(layout, site))
    return out
