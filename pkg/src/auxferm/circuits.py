"""Gate-level schedules and depth accounting.

Schedules are lists of layers, each a list of gates on pairwise disjoint
qubits.  Depth is the two-qubit depth: the longest chain of multi-qubit
gates along per-qubit dependencies, summed over barrier-separated segments.
Single-qubit gates never add to it (they fit between two-qubit layers); the
plain layer count is reported next to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .fermion import ModeLayout, jw_string, majorana_c, majorana_d
from .pauli import PauliTerm, pauli_mul, weight

SINGLE = {"H", "X", "Y", "Z", "S", "SDG", "RZ", "MEASURE"}
MULTI = {"CX", "CY", "CZ"}


@dataclass(frozen=True)
class Gate:
    """One gate.  Controlled gates list ``(control, target)``.

    ``RZ`` with ``param=theta`` is ``exp(-i theta Z / 2)``.
    """

    kind: str
    qubits: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        if self.kind not in SINGLE | MULTI:
            raise ValueError(f"unknown gate {self.kind!r}")
        want = 2 if self.kind in MULTI else 1
        if len(self.qubits) != want or len(set(self.qubits)) != want:
            raise ValueError(f"{self.kind} needs {want} distinct qubits, got {self.qubits}")
        if self.kind == "RZ" and (self.param is None or not math.isfinite(self.param)):
            raise ValueError("RZ needs a finite angle")

    @property
    def is_multi(self) -> bool:
        return self.kind in MULTI

    def __str__(self) -> str:
        args = ",".join(map(str, self.qubits))
        return f"{self.kind}({args})" if self.param is None else f"{self.kind}[{self.param:.12g}]({args})"


@dataclass
class GateSchedule:
    layers: list[list[Gate]] = field(default_factory=list)
    ancilla_count: int = 0
    global_phase: float = 0.0
    meta: dict = field(default_factory=dict)
    barriers: tuple[int, ...] = ()

    def __post_init__(self):
        for k, layer in enumerate(self.layers):
            used = [q for g in layer for q in g.qubits]
            if len(used) != len(set(used)):
                raise ValueError(f"layer {k} uses a qubit twice: {[str(g) for g in layer]}")

    @classmethod
    def from_gates(cls, gates: Iterable[Gate], **kw) -> "GateSchedule":
        """ASAP placement preserving the per-qubit gate order."""
        layers: list[list[Gate]] = []
        front: dict[int, int] = {}
        for g in gates:
            k = max((front.get(q, 0) for q in g.qubits), default=0)
            if k == len(layers):
                layers.append([])
            layers[k].append(g)
            for q in g.qubits:
                front[q] = k + 1
        return cls(layers, **kw)

    @property
    def gates(self) -> list[Gate]:
        return [g for layer in self.layers for g in layer]

    @property
    def depth(self) -> int:
        cuts = [0, *self.barriers, len(self.layers)]
        total = 0
        for a, b in zip(cuts, cuts[1:]):
            front: dict[int, int] = {}
            for layer in self.layers[a:b]:
                for g in layer:
                    k = max(front.get(q, 0) for q in g.qubits) + g.is_multi
                    for q in g.qubits:
                        front[q] = k
            total += max(front.values(), default=0)
        return total

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def multi_qubit_layers(self) -> int:
        """Layers holding a multi-qubit gate (an upper bound on ``depth``)."""
        return sum(1 for layer in self.layers if any(g.is_multi for g in layer))

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(sorted({q for g in self.gates for q in g.qubits}))

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def then(self, other: "GateSchedule") -> "GateSchedule":
        """Sequential composition with a barrier between the two parts."""
        k = len(self.layers)
        cuts = [*self.barriers, *([k] if self.layers and other.layers else []), *(k + b for b in other.barriers)]
        return GateSchedule(
            [list(l) for l in self.layers] + [list(l) for l in other.layers],
            max(self.ancilla_count, other.ancilla_count),
            self.global_phase + other.global_phase,
            {**self.meta, **other.meta},
            tuple(cuts),
        )

    def __str__(self) -> str:
        return "\n".join(" ".join(str(g) for g in layer) for layer in self.layers)


def merge(schedules: Sequence[GateSchedule]) -> GateSchedule:
    """ASAP merge: parts on disjoint qubits run in parallel."""
    gates = [g for s in schedules for g in s.gates]
    return GateSchedule.from_gates(
        gates,
        ancilla_count=sum(s.ancilla_count for s in schedules),
        global_phase=sum(s.global_phase for s in schedules),
    )


def sequence(schedules: Sequence[GateSchedule]) -> GateSchedule:
    out = GateSchedule()
    for s in schedules:
        out = out.then(s)
    return out


# ------------------------------------------------------------- primitives


def parity_tree(qubits: Sequence[int]) -> list[Gate]:
    """Balanced CX tree leaving the parity of ``qubits`` on the first one."""
    q = list(qubits)
    gates = []
    step = 1
    while step < len(q):
        for idx in range(0, len(q), 2 * step):
            if idx + step < len(q):
                gates.append(Gate("CX", (q[idx + step], q[idx])))
        step *= 2
    return gates


def pauli_gadget(term: PauliTerm, angle: float) -> GateSchedule:
    """``exp(-i angle term)`` for a Hermitian Pauli term.

    Basis change to Z, CX tree onto the lowest support qubit, ``RZ`` on that
    qubit, then the mirror image.  A weight-0 term only adds a global phase.
    """
    if not term.is_hermitian:
        raise ValueError("gadget needs a Hermitian term (phase +1 or -1)")
    if not math.isfinite(angle):
        raise ValueError("angle must be finite")
    phi = angle * term.coeff * term.phase.real
    if weight(term) == 0:
        return GateSchedule(global_phase=-phi)
    qs = [q for q, _ in term.letters]
    pre, post = [], []
    for q, a in term.letters:
        if a == "X":
            pre.append(Gate("H", (q,)))
            post.append(Gate("H", (q,)))
        elif a == "Y":
            pre += [Gate("SDG", (q,)), Gate("H", (q,))]
            post += [Gate("H", (q,)), Gate("S", (q,))]
    tree = parity_tree(qs)
    gates = pre + tree + [Gate("RZ", (qs[0],), 2 * phi)] + tree[::-1] + post
    return GateSchedule.from_gates(gates)


def cz_fanout(control: int, targets: Iterable[int]) -> GateSchedule:
    """``prod_t CZ(control, t)`` in two-qubit depth ``2 ceil(log2 n) + 1``.

    The targets' parity is gathered onto one target with a CX tree, a single
    CZ applies ``(-1)^(control * parity)`` and the tree is undone.  This is
    exact because the product of CZs only depends on that parity.
    """
    ts = sorted(set(targets))
    if control in ts:
        raise ValueError("control qubit cannot be a target")
    if not ts:
        return GateSchedule()
    tree = parity_tree(ts)
    return GateSchedule.from_gates(tree + [Gate("CZ", (control, ts[0]))] + tree[::-1])


_PHASE_GATE = {1: [], -1: ["Z"], 1j: ["S"], -1j: ["SDG"]}


def controlled_pauli(control: int, term: PauliTerm, on_zero: bool = False) -> GateSchedule:
    """Apply the unitary Pauli ``term`` (any unit phase, coeff 1) when the
    control is ``|1>`` (or ``|0>`` with ``on_zero``)."""
    if abs(term.coeff - 1) > 1e-12:
        raise ValueError("controlled Pauli needs a unit coefficient")
    if control in term.support:
        raise ValueError("control qubit overlaps the Pauli support")
    flip = [Gate("X", (control,))] if on_zero else []
    gates = list(flip)
    gates += [Gate(k, (control,)) for k in _PHASE_GATE[term.phase]]
    for q, a in term.letters:
        if a == "X":
            gates.append(Gate("CX", (control, q)))
        elif a == "Y":
            gates.append(Gate("CY", (control, q)))
    zs = [q for q, a in term.letters if a == "Z"]
    gates += cz_fanout(control, zs).gates
    gates += flip
    return GateSchedule.from_gates(gates)


# ------------------------------------------------- ordered preparation


def z_block(layout: ModeLayout, site: int, upto: int | None = None) -> PauliTerm:
    """Z on registers ``0..upto`` (default: all) of ``site``."""
    base = layout.qubit_index(site, 0)
    top = layout.n_aux if upto is None else upto
    return PauliTerm.z_string(range(base, base + top + 1))


def tilde_ops(layout: ModeLayout, register: int, k: int) -> tuple[PauliTerm, PauliTerm]:
    """String-free replacements ``(c~_{2k-1}, d~_{2k})`` for ordered pair ``k``.

    With ``F_k = c_{2k-1} - i d_{2k} = S_{2k-1} G_k`` and
    ``Zs_k = (Z_{2k-1,<=nu} Z_{2k,<=nu})^(N/2 - k)``,
    ``c~ = Lc Zs_k`` and ``d~ = Z_{2k-1,<=nu} Ld Zs_k`` satisfy
    ``prod_k (c~_k -/+ i d~_k) = prod_k (c_{2k-1} -/+ i d_{2k})``.
    """
    n = layout.n_sites
    if n % 2:
        raise ValueError("ordered pairs need an even number of sites")
    if not 1 <= k <= n // 2:
        raise ValueError(f"block index {k} out of range 1..{n // 2}")
    a, b = 2 * k - 1, 2 * k
    lc = pauli_mul(jw_string(layout, a), majorana_c(layout, a, register))
    ld = pauli_mul(jw_string(layout, b), majorana_d(layout, b, register))
    zs = PauliTerm.identity()
    if (n // 2 - k) % 2:
        zs = pauli_mul(z_block(layout, a), z_block(layout, b))
    c_t = pauli_mul(lc, zs)
    d_t = pauli_mul(pauli_mul(z_block(layout, a), ld), zs)
    return c_t, d_t


def closed_form_tilde_weights(nu: int, register: int) -> tuple[int, int]:
    """Closed-form tilde weights, reported next to the counted ones."""
    return min(register, nu - register), min(register + nu, 2 * nu - register)


def ordered_block(layout: ModeLayout, register: int, k: int, ancilla: int, measure: bool = True) -> GateSchedule:
    """``H`` on the ancilla, controlled ``c~`` on ``|0>``, controlled
    ``-i d~`` on ``|1>``, ``H`` again, then measurement."""
    c_t, d_t = tilde_ops(layout, register, k)
    gates = [Gate("H", (ancilla,))]
    gates += controlled_pauli(ancilla, c_t, on_zero=True).gates
    gates += controlled_pauli(ancilla, d_t.scaled(-1j)).gates
    gates.append(Gate("H", (ancilla,)))
    if measure:
        gates.append(Gate("MEASURE", (ancilla,)))
    return GateSchedule.from_gates(gates)


def ordered_prep_schedule(layout: ModeLayout, register: int, n_sites: int | None = None, measure: bool = True) -> GateSchedule:
    """All ``N/2`` blocks of the ordered preparation, run in parallel.

    Ancilla ``k`` sits at qubit ``layout.n_qubits + k - 1``.  Odd ``N`` is
    padded with one inert ancilla (no gates), recorded in ``meta``.
    """
    n = layout.n_sites if n_sites is None else n_sites
    if n != layout.n_sites:
        raise ValueError("n_sites must match the layout")
    if not 1 <= register <= layout.n_aux:
        raise ValueError(f"register {register} out of range 1..{layout.n_aux}")
    padded = n % 2 == 1
    work = layout if not padded else ModeLayout(n - 1, layout.n_aux)
    blocks = []
    for k in range(1, n // 2 + 1):
        blocks.append(ordered_block(work, register, k, layout.n_qubits + k - 1, measure))
    out = merge(blocks)
    out.ancilla_count = (n + 1) // 2
    out.meta = {"padded": padded, "blocks": n // 2, "register": register}
    return out


# ------------------------------------------------------ cost formulas


@dataclass(frozen=True)
class DepthCost:
    depth: float
    ancillas: int
    kind: str
    formula: str


PERMUTATION_MODES = ("with_measurement", "without_measurement")


def permutation_cost(n_modes: int, chi: int, mode: str = "with_measurement", constant: float = 1.0) -> DepthCost:
    """Closed-form cost of one fermionic permutation (model, not measured)."""
    if n_modes < 1 or chi < 1:
        raise ValueError("n_modes and chi must be positive")
    if mode == "with_measurement":
        return DepthCost(constant * math.log2(n_modes), (math.ceil(chi / 2) + 1) * n_modes, "formula", "a*log2(N)")
    if mode == "without_measurement":
        return DepthCost(constant * math.log2(chi * n_modes) ** 2, 0, "formula", "a*log2(chi*N)^2")
    raise ValueError(f"mode must be one of {PERMUTATION_MODES}")


# ---------------------------------------------------------- time steps


def layer_schedule(terms, tau: float) -> GateSchedule:
    """Gadgets of one color layer, merged ASAP.

    ``terms`` are PauliSums; strings within a term run one after another
    and disjoint terms run in parallel.
    """
    gates = []
    phase = 0.0
    for op in terms:
        for p in op:
            g = pauli_gadget(p, tau)
            gates += g.gates
            phase += g.global_phase
    return GateSchedule.from_gates(gates, global_phase=phase)


def trotter_step_schedule(encoded, tau: float) -> GateSchedule:
    """Colors one after another; within a color all gadgets run ASAP."""
    from .encoder import layer_violations

    bad = layer_violations(encoded)
    if bad:
        raise ValueError(f"layer invariant broken: {bad[:5]}")
    out = GateSchedule()
    per_color = {}
    for g, ops in encoded.layers.items():
        s = layer_schedule(ops, tau)
        per_color[g] = s.depth
        out = out.then(s)
    out.meta = {"per_color_depth": per_color}
    return out


@dataclass
class DepthReport:
    n_sites: int
    chi: int
    nu: int
    steps: int
    prep_measured: int
    prep_formula: float
    per_step_depth: int
    per_color_depth: dict
    ancilla_total: int
    rows: list = field(default_factory=list)
    padded: bool = False
    tilde_weights: list = field(default_factory=list)

    @property
    def prep_depth(self) -> float:
        return self.prep_measured + self.prep_formula

    def total_depth(self, m: int | None = None) -> float:
        m = self.steps if m is None else m
        return self.prep_depth + m * self.per_step_depth

    def table(self) -> str:
        head = ("Operation", "Depth", "Ancillas", "Kind")
        body = [(r[0], f"{r[1]:.12g}", str(r[2]), r[3]) for r in self.rows]
        widths = [max(len(x[i]) for x in [head, *body]) for i in range(4)]
        fmt = "  ".join("{:<%d}" % w for w in widths)
        lines = [fmt.format(*head), fmt.format(*("-" * w for w in widths))]
        lines += [fmt.format(*r) for r in body]
        return "\n".join(line.rstrip() for line in lines) + "\n"

    def csv(self) -> str:
        lines = ["operation,depth,ancillas,kind"]
        lines += [f"{r[0]},{r[1]:.12g},{r[2]},{r[3]}" for r in self.rows]
        return "\n".join(lines) + "\n"


def full_depth_report(
    encoded,
    steps: int = 1,
    tau: float = 0.1,
    permutation_mode: str = "with_measurement",
    permutation_constant: float = 1.0,
) -> DepthReport:
    """Measured depths for realized schedules plus formula rows for the
    permutations.  ``prep = 2 nu (ordered prep + permutation)``."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    layout, asg = encoded.layout, encoded.assignment
    n, nu, chi = layout.n_sites, asg.nu, asg.chi
    ord_depth = 0
    padded = False
    weights = []
    if nu:
        sched_layout = ModeLayout(n, max(nu, layout.n_aux))
        for l in range(1, nu + 1):
            s = ordered_prep_schedule(sched_layout, l)
            ord_depth = max(ord_depth, s.depth)
            padded = s.meta["padded"]
            if n >= 2:
                work = sched_layout if n % 2 == 0 else ModeLayout(n - 1, sched_layout.n_aux)
                c_t, d_t = tilde_ops(work, l, 1)
                weights.append((l, weight(c_t), weight(d_t), *closed_form_tilde_weights(nu, l)))
    costs = {m: permutation_cost(n, max(chi, 1), m, permutation_constant) for m in PERMUTATION_MODES}
    perm = costs[permutation_mode]
    step = trotter_step_schedule(encoded, tau)
    per_color = step.meta["per_color_depth"]
    prep_measured = 2 * nu * ord_depth
    prep_formula = 2 * nu * perm.depth if nu else 0.0
    ancillas = (2 * nu + 1) * n + (n + 1) // 2 if nu else n
    one_color = max(per_color.values(), default=0)
    rows = [
        ("Introducing auxiliary fermions", 0, math.ceil(chi / 2) * n, "measured"),
        ("Ordered state preparation C_ord^(l)", ord_depth, (n + 1) // 2, "measured"),
    ]
    for m, label in zip(PERMUTATION_MODES, ("with measurement", "without measurement")):
        rows.append((f"Fermion permutation U_sigma ({label})", costs[m].depth, costs[m].ancillas, "formula"))
    rows.append(("One-color Trotter layer exp(-i tau h_alpha)", one_color, 0, "measured"))
    rows.append(("Full Trotter layer exp(-i H tau)", step.depth, 0, "measured"))
    rows.append(("Preparation total (measured part)", prep_measured, ancillas, "measured"))
    rows.append(("Preparation total (permutation part)", prep_formula, 0, "formula"))
    rep = DepthReport(n, chi, nu, steps, prep_measured, prep_formula, step.depth, per_color, ancillas,
                      rows, padded, weights)
    rows.append((f"Total depth (M={steps})", rep.total_depth(), ancillas, "formula" if prep_formula else "measured"))
    return rep

