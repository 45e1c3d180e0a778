"""Dense statevector oracle.

Conventions: qubit 0 is the least significant bit of the amplitude index,
and a qubit in ``|0>`` holds an *occupied* mode (``n = (1 + Z)/2``).  The
all-zeros basis state is used as the reference Fock state for preparation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from .circuits import GateSchedule
from .encoder import EncodedHamiltonian, encode_hamiltonian, physical_operator
from .fermion import ModeLayout, majorana_c, majorana_d
from .pauli import PauliSum, PauliTerm, commutes
from .stabilizers import LayerAssignment, build_stabilizer

log = logging.getLogger(__name__)

JOINT_CAP = 20
EXP_CAP = 14
PREP_CAP = 24
LAMBDA_CAP = 12


class CapExceeded(ValueError):
    """A dense computation would exceed its qubit cap."""


class PreparationError(RuntimeError):
    """The auxiliary state could not be brought into the stabilizer space."""


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapExceeded(f"{what} needs {n} qubits, cap is {cap}")


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(f"need {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        amp = np.zeros(1 << n_qubits, dtype=complex)
        amp[0] = 1
        return cls(n_qubits, amp)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amp = np.zeros(1 << n_qubits, dtype=complex)
        amp[index] = 1
        return cls(n_qubits, amp)

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> "StateVector":
        v = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
        return cls(n_qubits, v / np.linalg.norm(v))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.n_qubits, self.amplitudes / nrm)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|``; global phase is quotiented out."""
    return abs(a.overlap(b))


# --------------------------------------------------------- Pauli action


def _parity(idx: np.ndarray, mask: int) -> np.ndarray:
    return (np.bitwise_count(idx & mask) & 1).astype(np.int64)


def _apply_term(amp: np.ndarray, term: PauliTerm, idx: np.ndarray) -> np.ndarray:
    x, z = term.masks
    n_y = bin(x & z).count("1")
    out = np.empty_like(amp)
    out[idx ^ x] = (term.value * 1j**n_y) * (1 - 2 * _parity(idx, z)) * amp
    return out


def apply_pauli_sum(state: StateVector, op) -> StateVector:
    """Exact (unnormalized) action of a PauliTerm or PauliSum."""
    if isinstance(op, PauliTerm):
        op = PauliSum([op])
    if op.support and op.support[-1] >= state.n_qubits:
        raise ValueError(f"operator acts on qubit {op.support[-1]}, state has {state.n_qubits}")
    idx = np.arange(1 << state.n_qubits)
    out = np.zeros_like(state.amplitudes)
    for t in op:
        out += _apply_term(state.amplitudes, t, idx)
    return StateVector(state.n_qubits, out)


def expectation(state: StateVector, op) -> complex:
    return state.overlap(apply_pauli_sum(state, op))


def pauli_exp(state: StateVector, term: PauliTerm, theta: float) -> StateVector:
    """``exp(-i theta term) |state>`` for a Hermitian term (closed form)."""
    if not term.is_hermitian:
        raise ValueError("closed-form exponential needs a Hermitian term")
    a = theta * term.coeff * term.phase.real
    unit = PauliTerm(term.letters)
    moved = apply_pauli_sum(state, unit).amplitudes
    return StateVector(state.n_qubits, math.cos(a) * state.amplitudes - 1j * math.sin(a) * moved)


def _local_matrix(op: PauliSum, qubits: Sequence[int]) -> np.ndarray:
    pos = {q: k for k, q in enumerate(qubits)}
    mat = np.zeros((1 << len(qubits),) * 2, dtype=complex)
    for t in op:
        mat += PauliTerm(tuple((pos[q], a) for q, a in t.letters), t.phase, t.coeff).to_matrix(len(qubits))
    return mat


def _apply_local(amp: np.ndarray, n: int, u: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """``u`` on ``qubits`` of ``amp`` (shape ``(2^n,)`` or ``(2^n, batch)``)."""
    k = len(qubits)
    batch = amp.shape[1:]
    psi = amp.reshape([2] * n + list(batch))
    axes = [n - 1 - q for q in qubits][::-1]
    moved = np.moveaxis(psi, axes, range(k))
    shape = moved.shape
    res = (u @ moved.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(res, range(k), axes).reshape(amp.shape)


def apply_local_unitary(state: StateVector, u: np.ndarray, qubits: Sequence[int]) -> StateVector:
    """Apply a ``2^k x 2^k`` matrix on ``qubits`` (first listed = low bit)."""
    return StateVector(state.n_qubits, _apply_local(state.amplitudes, state.n_qubits, u, qubits))


def apply_term_exp(state: StateVector, op: PauliSum, tau: float) -> StateVector:
    """``exp(-i tau op)``: product of closed forms when the strings commute,
    otherwise a dense exponential on the operator's support."""
    terms = list(op)
    if all(commutes(a, b) for i, a in enumerate(terms) for b in terms[i + 1:]):
        out = state
        for t in terms:
            out = pauli_exp(out, t, tau)
        return out
    qubits = op.support
    _check_cap(len(qubits), EXP_CAP, "local exponential")
    return apply_local_unitary(state, expm(-1j * tau * _local_matrix(op, qubits)), qubits)


def exact_evolve(hamiltonian: PauliSum, time: float, state: StateVector, cap: int = EXP_CAP) -> StateVector:
    """Dense ``exp(-i H T) |state>``."""
    _check_cap(state.n_qubits, min(cap, EXP_CAP), "dense exponential")
    u = expm(-1j * time * hamiltonian.to_matrix(state.n_qubits))
    return StateVector(state.n_qubits, u @ state.amplitudes)


def _layer_ops(layers) -> list[list[PauliSum]]:
    if isinstance(layers, EncodedHamiltonian):
        return list(layers.layers.values())
    if isinstance(layers, Mapping):
        return [layers[k] for k in sorted(layers)]
    return [list(l) for l in layers]


def trotter_evolve(layers, tau: float, steps: int, state: StateVector) -> StateVector:
    """``steps`` repetitions of the color-ordered product of per-term
    exponentials.  ``layers`` is an EncodedHamiltonian, a mapping
    ``color -> [PauliSum]`` or a sequence of such lists."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    ops = _layer_ops(layers)
    out = state
    for _ in range(steps):
        for layer in ops:
            for op in layer:
                if op.support and op.support[-1] >= out.n_qubits:
                    raise ValueError("operator does not fit the state")
                out = apply_term_exp(out, op, tau)
    return out


# ------------------------------------------------- fermionic reordering


def block_mode_map(layout: ModeLayout) -> np.ndarray:
    """``pi[m]``: interleaved qubit of block mode ``m``.

    Block order lists the ``N`` physical modes first, then the auxiliary
    modes site by site (registers ``1..nu``).
    """
    n, nu = layout.n_sites, layout.n_aux
    pi = [layout.qubit_index(i, 0) for i in range(1, n + 1)]
    pi += [layout.qubit_index(i, l) for i in range(1, n + 1) for l in range(1, nu + 1)]
    return np.array(pi, dtype=np.int64)


@dataclass(frozen=True)
class Reorder:
    """Signed permutation ``R`` with ``R a_block(m) R^dag = a(pi(m))``."""

    layout: ModeLayout
    target: np.ndarray  # block index -> interleaved index
    sign: np.ndarray

    @classmethod
    def build(cls, layout: ModeLayout) -> "Reorder":
        return _build_reorder(layout)

    @classmethod
    def _compute(cls, layout: ModeLayout) -> "Reorder":
        n = layout.n_qubits
        _check_cap(n, JOINT_CAP, "fermionic reorder")
        pi = block_mode_map(layout)
        idx = np.arange(1 << n, dtype=np.int64)
        occ = [1 - ((idx >> m) & 1) for m in range(n)]
        target = np.zeros_like(idx)
        expo = np.zeros_like(idx)
        for m in range(n):
            target |= (1 - occ[m]) << pi[m]
            expo += occ[m] * int(pi[m] - m)
            for mp in range(m):
                if pi[mp] > pi[m]:
                    expo += occ[m] * occ[mp]
        return cls(layout, target, 1 - 2 * (expo & 1))

    def forward(self, amp: np.ndarray) -> np.ndarray:
        out = np.zeros_like(amp)
        out[self.target] = self.sign * amp
        return out

    def backward(self, amp: np.ndarray) -> np.ndarray:
        return self.sign * amp[self.target]

    def embed(self, phys: StateVector, aux_block: StateVector) -> StateVector:
        """Joint state ``R (|aux> (x) |phys>)`` in the interleaved layout."""
        n = self.layout.n_sites
        if phys.n_qubits != n or aux_block.n_qubits != self.layout.n_qubits - n:
            raise ValueError("state sizes do not match the layout")
        block = np.kron(aux_block.amplitudes, phys.amplitudes)
        return StateVector(self.layout.n_qubits, self.forward(block))

    def block_matrix(self, joint: StateVector) -> np.ndarray:
        """Amplitudes reshaped to ``(aux index, physical index)``."""
        n = self.layout.n_sites
        return self.backward(joint.amplitudes).reshape(-1, 1 << n)


@lru_cache(maxsize=8)
def _build_reorder(layout: ModeLayout) -> Reorder:
    return Reorder._compute(layout)


def physical_layout(layout: ModeLayout) -> ModeLayout:
    return ModeLayout(layout.n_sites, 0)


# ------------------------------------------------------- preparation


SignRecord = dict


def prep_order(assignment: LayerAssignment) -> list[tuple[int, int]]:
    """Edges in ascending (color, tail) order."""
    return sorted(assignment.edges, key=lambda e: (assignment.color(e), assignment.orientation(e)))


def _unsigned(layout, assignment, e) -> PauliTerm:
    p = build_stabilizer(layout, assignment, e)
    return p.scaled(assignment.sign(e))


def stabilizer_expectations(state: StateVector, layout: ModeLayout, assignment: LayerAssignment,
                            signs: Mapping | None = None) -> dict:
    """``<s_e P_e>`` for every edge (``s_e`` from ``signs``, default +1)."""
    out = {}
    for e in assignment.edges:
        s = 1 if signs is None else signs.get(e, 1)
        out[e] = s * expectation(state, _unsigned(layout, assignment, e)).real
    return out


def aux_sector_dimension(layout: ModeLayout, assignment: LayerAssignment) -> int:
    """Dimension of the joint +1 space of the (commuting, consistent)
    stabilizers, divided by the physical dimension."""
    rows = []
    for e in assignment.edges:
        x, z = _unsigned(layout, assignment, e).masks
        rows.append((x << layout.n_qubits) | z)
    rank = 0
    rows = list(rows)
    while rows:
        pivot = rows.pop()
        if not pivot:
            continue
        rank += 1
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if (r >> top) & 1 else r for r in rows]
    return 1 << (layout.n_qubits - rank - layout.n_sites)


@dataclass
class PrepResult:
    joint: StateVector
    aux_block: StateVector
    signs: SignRecord
    expectations: dict
    skipped: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    sector_dimension: int = 0


def _finish(layout, assignment, joint, signs, skipped, outcomes, tol) -> PrepResult:
    ex = stabilizer_expectations(joint, layout, assignment, signs)
    bad = {e: v for e, v in ex.items() if abs(v - 1) > tol}
    if bad:
        raise PreparationError(f"sign-adjusted stabilizers not +1: {bad}")
    reorder = Reorder.build(layout)
    mat = reorder.block_matrix(joint)
    aux = StateVector(layout.n_qubits - layout.n_sites, mat[:, 0].copy())
    if abs(aux.norm - 1) > 1e-10:
        raise PreparationError("physical register left its reference state")
    dim = aux_sector_dimension(layout, assignment)
    log.info("aux sector dimension of the stabilizer projector: %d", dim)
    return PrepResult(joint, aux, dict(signs), ex, skipped, outcomes, dim)


def prepare_aux_oracle(layout: ModeLayout, assignment: LayerAssignment, tol: float = 1e-10,
                       branches: Mapping | None = None) -> PrepResult:
    """Apply ``(c_tail - i d_head)/sqrt(2)`` edge by edge to ``|0...0>``.

    A factor is skipped when the state already has ``<P> = +1`` (it would
    annihilate the state; this happens when closing a cycle).  Signs are
    then read off the final expectations.  ``branches`` maps edges to 1 to
    apply ``(c + i d)/sqrt(2)`` instead, replaying measurement outcomes.
    """
    _check_cap(layout.n_qubits, PREP_CAP, "oracle preparation")
    if layout.n_aux < assignment.nu:
        raise ValueError(f"layout has {layout.n_aux} registers, assignment needs {assignment.nu}")
    state = StateVector.zeros(layout.n_qubits)
    skipped = []
    for e in prep_order(assignment):
        p = _unsigned(layout, assignment, e)
        pre = expectation(state, p).real
        flip = bool(branches and branches.get(e, 0))
        if (pre if not flip else -pre) > 1 - 1e-9:
            skipped.append(e)
            log.debug("edge %s already stabilized, factor skipped", e)
            continue
        l = assignment.register(e)
        tail, head = assignment.orientation(e)
        op = PauliSum([majorana_c(layout, tail, l), majorana_d(layout, head, l).scaled(1j if flip else -1j)])
        state = apply_pauli_sum(state, op)
        nrm = state.norm
        if nrm < 1e-8:
            raise PreparationError(f"factor for edge {e} annihilated the state")
        state = StateVector(state.n_qubits, state.amplitudes / nrm)
    signs = {}
    for e in assignment.edges:
        v = expectation(state, _unsigned(layout, assignment, e)).real
        if abs(abs(v) - 1) > tol:
            raise PreparationError(f"edge {e} is not an eigenstate: <P> = {v}")
        signs[e] = 1 if v > 0 else -1
    return _finish(layout, assignment, state, signs, skipped, [], tol)


def _h_on(amp: np.ndarray, anc_bit: int) -> np.ndarray:
    lo = amp[:anc_bit]
    hi = amp[anc_bit:]
    return np.concatenate([(lo + hi), (lo - hi)]) / math.sqrt(2)


def prepare_aux_measured(layout: ModeLayout, assignment: LayerAssignment, seed: int, tol: float = 1e-10) -> PrepResult:
    """Ancilla-assisted preparation with Born-rule measurements.

    Per edge: ``H_anc U H_anc`` with ``U = |0><0| c_tail + |1><1| (-i d_head)``,
    then measure the ancilla (outcome 1 redefines ``P -> -P``) and reset it.
    A later factor's ``c_tail`` flips every earlier stabilizer it
    anticommutes with; that flip is tracked classically in the record.
    """
    n = layout.n_qubits
    _check_cap(n + 1, PREP_CAP, "measured preparation")
    if layout.n_aux < assignment.nu:
        raise ValueError(f"layout has {layout.n_aux} registers, assignment needs {assignment.nu}")
    order = prep_order(assignment)
    streams = np.random.SeedSequence(seed).spawn(max(len(order), 1))
    dim = 1 << n
    amp = np.zeros(2 * dim, dtype=complex)
    amp[0] = 1
    signs: dict = {}
    outcomes = []
    stabs = {e: _unsigned(layout, assignment, e) for e in order}
    for k, e in enumerate(order):
        l = assignment.register(e)
        tail, head = assignment.orientation(e)
        c = majorana_c(layout, tail, l)
        d = majorana_d(layout, head, l)
        amp = _h_on(amp, dim)
        psi0 = StateVector(n, amp[:dim])
        psi1 = StateVector(n, amp[dim:])
        amp = np.concatenate([apply_pauli_sum(psi0, c).amplitudes,
                              apply_pauli_sum(psi1, d.scaled(-1j)).amplitudes])
        amp = _h_on(amp, dim)
        p1 = float(np.vdot(amp[dim:], amp[dim:]).real)
        rng = np.random.default_rng(streams[k])
        outcome = int(rng.random() < p1)
        branch = amp[dim:] if outcome else amp[:dim]
        nrm = np.linalg.norm(branch)
        if nrm < 1e-8:
            raise PreparationError(f"measurement branch for edge {e} has zero norm")
        amp = np.concatenate([branch / nrm, np.zeros(dim, dtype=complex)])
        outcomes.append((e, outcome))
        for f in signs:
            if not commutes(c, stabs[f]):
                signs[f] = -signs[f]
        signs[e] = -1 if outcome else 1
    joint = StateVector(n, amp[:dim])
    return _finish(layout, assignment, joint, signs, [], outcomes, tol)


def align_signs(state: StateVector, layout: ModeLayout, assignment: LayerAssignment,
                from_signs: Mapping, to_signs: Mapping) -> StateVector:
    """Apply ``c_tail`` for every edge whose sign differs; each such
    Majorana flips exactly that one stabilizer."""
    out = state
    for e in assignment.edges:
        if from_signs.get(e, 1) != to_signs.get(e, 1):
            tail, _ = assignment.orientation(e)
            out = apply_pauli_sum(out, majorana_c(layout, tail, assignment.register(e)))
    return out


# ----------------------------------------------------- gate execution


_ONE = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
}
_CTRL = {"CX": "X", "CY": "Y", "CZ": "Z"}


def _gate_matrix(g) -> tuple[np.ndarray, tuple[int, ...]]:
    if g.kind == "RZ":
        a = g.param / 2
        return np.diag([np.exp(-1j * a), np.exp(1j * a)]), g.qubits
    if g.kind in _ONE:
        return _ONE[g.kind], g.qubits
    u = np.eye(4, dtype=complex)
    # qubits (control, target): control is the low bit of the local index
    t = _ONE[_CTRL[g.kind]]
    u[np.ix_([1, 3], [1, 3])] = t
    return u, g.qubits


def apply_schedule(state: StateVector, schedule: GateSchedule, rng: np.random.Generator | None = None):
    """Run a schedule; measurements collapse the state and are returned."""
    out = state
    outcomes = []
    for g in schedule.gates:
        if g.kind == "MEASURE":
            (q,) = g.qubits
            bit = (np.arange(1 << out.n_qubits) >> q) & 1
            p1 = float(np.sum(np.abs(out.amplitudes[bit == 1]) ** 2))
            r = (rng or np.random.default_rng(0)).random()
            o = int(r < p1)
            amp = np.where(bit == o, out.amplitudes, 0)
            out = StateVector(out.n_qubits, amp / np.linalg.norm(amp))
            outcomes.append((q, o))
            continue
        u, qs = _gate_matrix(g)
        out = apply_local_unitary(out, u, qs)
    if schedule.global_phase:
        out = StateVector(out.n_qubits, out.amplitudes * np.exp(1j * schedule.global_phase))
    return out, outcomes


def schedule_unitary(schedule: GateSchedule, n_qubits: int) -> np.ndarray:
    """Dense unitary of a measurement-free schedule."""
    _check_cap(n_qubits, EXP_CAP, "schedule unitary")
    if any(g.kind == "MEASURE" for g in schedule.gates):
        raise ValueError("schedule contains measurements")
    mat = np.eye(1 << n_qubits, dtype=complex)
    for g in schedule.gates:
        if max(g.qubits) >= n_qubits:
            raise ValueError(f"gate {g} does not fit {n_qubits} qubits")
        u, qs = _gate_matrix(g)
        mat = _apply_local(mat, n_qubits, u, qs)
    return mat * np.exp(1j * schedule.global_phase)


def operator_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b, 2))


# ------------------------------------------------------- verification


def physical_layers(encoded: EncodedHamiltonian, layout0: ModeLayout | None = None) -> dict[int, list[PauliSum]]:
    """Untransformed terms grouped exactly like ``encoded``."""
    layout0 = layout0 or physical_layout(encoded.layout)
    out: dict[int, list[PauliSum]] = {}
    for t in encoded.terms:
        out.setdefault(t.layer, []).append(physical_operator(layout0, t.term))
    return dict(sorted(out.items()))


def trace_distance_pure(rho_vectors: np.ndarray, target: np.ndarray) -> float:
    """Trace distance between ``rho = M M^dag`` and ``|target><target|``."""
    rho = rho_vectors @ rho_vectors.conj().T
    sigma = np.outer(target, target.conj())
    ev = np.linalg.eigvalsh(rho - sigma)
    return float(0.5 * np.sum(np.abs(ev)))


@dataclass
class EquivalenceReport:
    per_term_fidelity: float
    full_fidelity: float
    aux_invariance: float
    stabilizer_drift: float
    signs: SignRecord


def equivalence_check(model, layout: ModeLayout, assignment: LayerAssignment, psi_phys: StateVector,
                      tau: float, steps: int, prep: PrepResult | None = None,
                      signs: Mapping | None = None) -> EquivalenceReport:
    """Compare encoded joint evolution with physical evolution next to the
    untouched auxiliary state.

    ``signs`` overrides the stabilizer signs used to encode (for negative
    controls); by default the prepared record is used.
    """
    _check_cap(layout.n_qubits, JOINT_CAP, "joint system")
    prep = prep or prepare_aux_oracle(layout, assignment)
    asg = assignment.with_signs(prep.signs if signs is None else signs)
    encoded = encode_hamiltonian(model, layout, asg)
    layout0 = physical_layout(layout)
    reorder = Reorder.build(layout)
    joint0 = reorder.embed(psi_phys, prep.aux_block)

    per_term = 1.0
    for t in encoded.terms:
        got = apply_term_exp(joint0, t.operator, tau)
        ref = reorder.embed(apply_term_exp(psi_phys, physical_operator(layout0, t.term), tau), prep.aux_block)
        per_term = min(per_term, fidelity(ref, got))

    got = trotter_evolve(encoded, tau, steps, joint0)
    ref_phys = trotter_evolve(physical_layers(encoded, layout0), tau, steps, psi_phys)
    full = fidelity(reorder.embed(ref_phys, prep.aux_block), got)
    aux = trace_distance_pure(reorder.block_matrix(got), prep.aux_block.amplitudes)
    before = stabilizer_expectations(joint0, layout, asg, None)
    after = stabilizer_expectations(got, layout, asg, None)
    drift = max((abs(after[e] - before[e]) for e in before), default=0.0)
    return EquivalenceReport(per_term, full, aux, drift, dict(asg.signs))


SCALING_STEPS = (4, 8, 16, 32, 64)


def trotter_scaling(model, layout: ModeLayout, assignment: LayerAssignment, prep: PrepResult,
                    psi_phys: StateVector, time: float = 1.0, steps: Sequence[int] = SCALING_STEPS):
    """``[(M, error)]`` at fixed total ``time`` and the fitted log-log slope.

    The error is ``|| U_trotter psi - exp(-i H T) psi ||``.  It is measured on
    the joint system when that fits the dense-exponential cap, otherwise on
    the physical system (the two agree on the code space).  The slope is
    ``None`` when every error is below ``1e-12`` (commuting layers).
    """
    enc = encode_hamiltonian(model, layout, assignment.with_signs(prep.signs))
    if layout.n_qubits <= EXP_CAP:
        start = Reorder.build(layout).embed(psi_phys, prep.aux_block)
        layers = enc.layers
    else:
        start = psi_phys
        layers = physical_layers(enc)
    ham = PauliSum([p for ops in _layer_ops(layers) for op in ops for p in op])
    exact = exact_evolve(ham, time, start)
    rows = []
    for m in steps:
        got = trotter_evolve(layers, time / m, m, start)
        rows.append((int(m), float(np.linalg.norm(got.amplitudes - exact.amplitudes))))
    errs = np.array([e for _, e in rows])
    if np.all(errs < 1e-12):
        return rows, None
    slope = float(np.polyfit(np.log([m for m, _ in rows]), np.log(np.maximum(errs, 1e-300)), 1)[0])
    return rows, slope


def commutator_lambda(layers, n_qubits: int, basis: np.ndarray | None = None) -> float:
    """``sum_{g < d} || [h_g, h_d] ||_2`` (spectral norms).

    With ``basis`` (orthonormal columns, e.g. from :func:`code_space_basis`)
    each commutator is compressed to that subspace first.  Layers are kept
    sparse; only the compressed or final commutators are made dense.
    """
    _check_cap(n_qubits, LAMBDA_CAP, "commutator norm")
    mats = []
    for layer in _layer_ops(layers):
        m = sparse.csr_matrix((1 << n_qubits,) * 2, dtype=complex)
        for op in layer:
            m = m + op.to_sparse(n_qubits)
        mats.append(m if basis is None else m @ basis)
    total = 0.0
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            if basis is None:
                c = (mats[a] @ mats[b] - mats[b] @ mats[a]).toarray()
            else:
                # layers are Hermitian, so V^+ A B V = (A V)^+ (B V)
                c = mats[a].conj().T @ mats[b] - mats[b].conj().T @ mats[a]
            total += float(np.max(np.abs(np.linalg.eigvalsh(1j * c)), initial=0.0))
    return total


def stabilizer_projector(layout: ModeLayout, assignment: LayerAssignment, signs: Mapping | None = None) -> np.ndarray:
    """Dense projector onto the signed stabilizer space."""
    n = layout.n_qubits
    _check_cap(n, LAMBDA_CAP, "projector")
    return _apply_projector(layout, assignment, signs, np.eye(1 << n, dtype=complex))


def _apply_projector(layout, assignment, signs, cols: np.ndarray) -> np.ndarray:
    for e in assignment.edges:
        s = 1 if signs is None else signs.get(e, 1)
        cols = (cols + s * (_unsigned(layout, assignment, e).to_sparse(layout.n_qubits) @ cols)) / 2
    return cols


def code_space_basis(layout: ModeLayout, assignment: LayerAssignment, signs: Mapping | None = None,
                     seed: int = 0) -> np.ndarray:
    """Orthonormal basis (columns) of the signed stabilizer space.

    The projector is applied to a few more random vectors than the space
    dimension; the leading left singular vectors span its range.
    """
    n = layout.n_qubits
    _check_cap(n, LAMBDA_CAP, "code space")
    r = aux_sector_dimension(layout, assignment) << layout.n_sites
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal((1 << n, r + 4)) + 1j * rng.standard_normal((1 << n, r + 4))
    u, s, _ = np.linalg.svd(_apply_projector(layout, assignment, signs, probe), full_matrices=False)
    if s[r - 1] < 1e-6 * s[0] or (len(s) > r and s[r] > 1e-8 * s[0]):
        raise PreparationError("stabilizer space has an unexpected dimension")
    return u[:, :r]


def check_line(name: str, value: float, threshold: float, passed: bool) -> str:
    return f"CHECK {name} {value:.12g} {threshold:.12g} {'PASS' if passed else 'FAIL'}"
