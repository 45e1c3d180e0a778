"""Stabilizer transformation of fermionic terms into local Pauli sums.

Every even term ``h`` is replaced by ``h * P_1 * ... * P_n`` where the
stabilizers ``P`` carry the same Jordan-Wigner strings as ``h``; on the joint
``+1`` eigenspace of the stabilizers this leaves the dynamics unchanged while
the strings cancel.

Two independent routes compute the transformed operators:

* the *string-free* route multiplies short site-local pieces and tracks the
  sign of moving every ``S_i`` string to the left (hopping, four-fermion and
  SYK terms);
* the *full-string* route multiplies complete Jordan-Wigner images with
  :func:`~auxferm.pauli.pauli_mul` (:func:`transform_general_even`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .fermion import (
    ModeLayout,
    jw_string,
    ladder_product,
    lowering,
    majorana,
    majorana_c,
    majorana_d,
    MajoranaLabel,
    number_op,
    raising,
)
from .pauli import PauliSum, PauliTerm, commutes, format_term, pauli_mul, weight
from .stabilizers import (
    Edge,
    InteractionGraph,
    LayerAssignment,
    build_stabilizer,
    majorana_site,
    norm_edge,
)

KINDS = ("hopping", "density_density", "four_fermion", "majorana_quartic", "general_even")


class MissingStabilizerError(KeyError):
    """A term needs a stabilizer edge the assignment does not provide."""


class LayerOverlapError(ValueError):
    """Two non-commuting terms with overlapping support share a layer."""


class SupportError(ValueError):
    """A transformed term is not confined to its host sites."""


@dataclass(frozen=True)
class FermionTerm:
    """One Hamiltonian term.

    ``modes`` by kind:

    * ``hopping``: ``(i, j)``, meaning ``coeff * (a_i^dag a_j + a_j^dag a_i)``
    * ``density_density``: ``(i, j)``, meaning ``coeff * n_i n_j``
    * ``four_fermion``: ``(i, j, k, l)``, meaning
      ``coeff * (a_i^dag a_j^dag a_k a_l + h.c.)``
    * ``majorana_quartic``: four Majorana indices ``m`` (site ``ceil(m/2)``,
      ``c`` for odd and ``d`` for even ``m``), meaning ``coeff * g_1 g_2 g_3 g_4``
    * ``general_even``: ``((site, is_creation), ...)`` read left to right,
      meaning ``coeff * (monomial + h.c.)``; ``pairs`` lists the stabilizer
      pairing of the sites.
    """

    kind: str
    modes: tuple
    coeff: float = 1.0
    pairs: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        arity = {"hopping": 2, "density_density": 2, "four_fermion": 4, "majorana_quartic": 4}
        modes = tuple(tuple(m) if isinstance(m, (list, tuple)) else int(m) for m in self.modes)
        if self.kind in arity and len(modes) != arity[self.kind]:
            raise ValueError(f"{self.kind} needs {arity[self.kind]} indices, got {len(modes)}")
        if self.kind != "general_even" and len(set(modes)) != len(modes):
            raise ValueError(f"{self.kind} indices must be distinct: {modes}")
        if self.kind == "general_even" and (not modes or len(modes) % 2):
            raise ValueError("general_even needs a non-empty even number of ladder operators")
        coeff = float(self.coeff)
        if coeff != coeff or coeff in (float("inf"), float("-inf")):
            raise ValueError("coefficient must be finite")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "pairs", tuple(tuple(int(x) for x in p) for p in self.pairs))

    @property
    def sites(self) -> tuple[int, ...]:
        if self.kind == "majorana_quartic":
            return tuple(sorted({majorana_site(m)[1] for m in self.modes}))
        if self.kind == "general_even":
            return tuple(sorted({s for s, _ in self.modes}))
        return tuple(sorted(set(self.modes)))


def hopping(i: int, j: int, t: float = 1.0) -> FermionTerm:
    return FermionTerm("hopping", (i, j), t)


def density_density(i: int, j: int, v: float = 1.0) -> FermionTerm:
    return FermionTerm("density_density", (i, j), v)


def four_fermion(i: int, j: int, k: int, l: int, u: float = 1.0) -> FermionTerm:
    return FermionTerm("four_fermion", (i, j, k, l), u)


def majorana_quartic(a: int, b: int, c: int, d: int, j: float = 1.0) -> FermionTerm:
    return FermionTerm("majorana_quartic", (a, b, c, d), j)


def general_even(ops: Sequence[tuple[int, bool]], pairs: Sequence[tuple[int, int]], coeff: float = 1.0):
    return FermionTerm("general_even", tuple((int(s), bool(d)) for s, d in ops), coeff, tuple(pairs))


def stabilizer_edges(term: FermionTerm) -> list[Edge]:
    """Site pairs whose stabilizers the transformation of ``term`` uses."""
    k, m = term.kind, term.modes
    if k == "hopping":
        return [norm_edge(*m)]
    if k == "density_density":
        return []
    if k == "four_fermion":
        i, j, kk, l = m
        return [norm_edge(i, kk), norm_edge(j, l)]
    if k == "majorana_quartic":
        out = []
        for a, b in (m[:2], m[2:]):
            sa, sb = majorana_site(a)[1], majorana_site(b)[1]
            if sa != sb:
                out.append(norm_edge(sa, sb))
        return out
    return [norm_edge(a, b) for a, b in term.pairs if a != b]


def graph_edges(term: FermionTerm) -> list[Edge]:
    """Edges a term contributes to the interaction graph."""
    if term.kind == "density_density":
        return [norm_edge(*term.modes)]
    return stabilizer_edges(term)


def build_interaction_graph(n_sites: int, terms: Iterable[FermionTerm]) -> InteractionGraph:
    edges = set()
    for t in terms:
        edges.update(graph_edges(t))
    return InteractionGraph(n_sites, frozenset(edges))


# ------------------------------------------------------- string-free route


def _local(layout: ModeLayout, site: int, op) -> PauliSum:
    """Strip ``S_site`` from a full Jordan-Wigner image."""
    return PauliSum([jw_string(layout, site)]) * op


def string_free_product(layout: ModeLayout, factors: Sequence[tuple[int, PauliSum]]) -> PauliSum:
    """Product of odd operators ``S_{s_k} L_k`` without building any ``S``.

    ``factors`` lists ``(site, L_k)`` left to right, each ``L_k`` odd and
    supported on its site.  Moving ``S_{s_b}`` left past ``L_a`` (``a < b``)
    costs ``-1`` exactly when ``s_b > s_a``.  Every site must occur an even
    number of times so that the strings cancel.
    """
    counts: dict[int, int] = {}
    for s, _ in factors:
        counts[s] = counts.get(s, 0) + 1
    if any(c % 2 for c in counts.values()):
        raise SupportError(f"site multiplicities {counts} leave a Jordan-Wigner string")
    sites = [s for s, _ in factors]
    swaps = sum(1 for a in range(len(sites)) for b in range(a + 1, len(sites)) if sites[b] > sites[a])
    out = PauliSum([PauliTerm.identity(phase=-1 if swaps % 2 else 1)])
    for _, loc in factors:
        out = out * loc
    return out


def _stabilizer_factors(layout, assignment, edge):
    """``(sign * i, [(tail, c_local), (head, d_local)])`` of one stabilizer."""
    if edge not in assignment:
        raise MissingStabilizerError(f"edge {edge} has no stabilizer")
    l = assignment.register(edge)
    if layout.n_aux < l:
        raise ValueError(f"layout has {layout.n_aux} auxiliary registers, edge needs {l}")
    tail, head = assignment.orientation(edge)
    c = _local(layout, tail, majorana_c(layout, tail, l))
    d = _local(layout, head, majorana_d(layout, head, l))
    return 1j * assignment.sign(edge), [(tail, c), (head, d)]


def _ladder_local(layout, site, dag):
    op = raising(layout, site) if dag else lowering(layout, site)
    return site, _local(layout, site, op)


def transform_hopping(layout: ModeLayout, assignment: LayerAssignment, i: int, j: int, t: float = 1.0) -> PauliSum:
    """``t (a_i^dag a_j + a_j^dag a_i) P_ij^(l)``, confined to sites ``i, j``."""
    if i == j:
        raise ValueError("hopping needs two distinct sites")
    pref, stab = _stabilizer_factors(layout, assignment, (i, j))
    fwd = string_free_product(layout, [_ladder_local(layout, i, True), _ladder_local(layout, j, False), *stab])
    bwd = string_free_product(layout, [_ladder_local(layout, j, True), _ladder_local(layout, i, False), *stab])
    return (fwd + bwd) * (pref * t)


def transform_density_density(layout: ModeLayout, i: int, j: int, v: float = 1.0) -> PauliSum:
    """``v n_i n_j = (v/4)(1 + Z_i)(1 + Z_j)``; already local."""
    if i == j:
        raise ValueError("density-density term needs two distinct sites")
    if v == 0:
        return PauliSum()
    return number_op(layout, i) * number_op(layout, j) * v


def a_dag_p_a(layout: ModeLayout, assignment: LayerAssignment, i: int, k: int) -> PauliSum:
    """``a_i^dag P_ik a_k`` with the stabilizer of edge ``(i, k)``."""
    pref, stab = _stabilizer_factors(layout, assignment, (i, k))
    return string_free_product(
        layout, [_ladder_local(layout, i, True), *stab, _ladder_local(layout, k, False)]
    ) * pref


def transform_four_fermion(
    layout: ModeLayout, assignment: LayerAssignment, i: int, j: int, k: int, l: int, u: float = 1.0
) -> PauliSum:
    """``u (a_i^dag a_j^dag a_k a_l + h.c.) P_ik P_jl = -u (AB + (AB)^dag)``.

    ``A = a_i^dag P_ik a_k`` and ``B = a_j^dag P_jl a_l`` are each local.
    """
    if len({i, j, k, l}) != 4:
        raise ValueError("four-fermion term needs four distinct sites")
    ab = a_dag_p_a(layout, assignment, i, k) * a_dag_p_a(layout, assignment, j, l)
    return (ab + ab.dagger()) * (-u)


def _physical_majorana_local(layout, m):
    kind, site = majorana_site(m)
    return site, _local(layout, site, majorana(layout, MajoranaLabel(kind, site, 0)))


def transform_syk_quartic(layout: ModeLayout, assignment: LayerAssignment, labels, j: float = 1.0) -> PauliSum:
    """``j g_a g_b g_c g_d P_ab P_cd``; same-site pairs need no stabilizer."""
    labels = tuple(int(m) for m in labels)
    if len(labels) != 4 or len(set(labels)) != 4:
        raise ValueError("SYK term needs four distinct Majorana indices")
    if j == 0:
        return PauliSum()
    factors = [_physical_majorana_local(layout, m) for m in labels]
    pref = 1
    for a, b in (labels[:2], labels[2:]):
        sa, sb = majorana_site(a)[1], majorana_site(b)[1]
        if sa == sb:
            continue
        p, stab = _stabilizer_factors(layout, assignment, (sa, sb))
        pref *= p
        factors.extend(stab)
    return string_free_product(layout, factors) * (pref * j)


# ------------------------------------------------------- full-string route


def transform_general_even(
    layout: ModeLayout,
    assignment: LayerAssignment,
    ops: Sequence[tuple[int, bool]],
    pairs: Sequence[tuple[int, int]],
    coeff: float = 1.0,
    hermitian: bool = True,
) -> PauliSum:
    """``coeff (monomial [+ h.c.]) * prod P_pair`` via complete JW strings.

    ``pairs`` must cover the sites of ``ops`` (as a multiset); same-site
    pairs use no stabilizer.  The result is checked to be supported on the
    host sites only.
    """
    ops = [(int(s), bool(d)) for s, d in ops]
    if not ops or len(ops) % 2:
        raise ValueError("need a non-empty even number of ladder operators")
    paired = sorted(x for p in pairs for x in p)
    if paired != sorted(s for s, _ in ops):
        raise ValueError(f"pairs {list(pairs)} do not cover the modes {ops}")
    mono = ladder_product(layout, ops)
    if hermitian:
        mono = mono + mono.dagger()
    out = mono * coeff
    for a, b in pairs:
        if a == b:
            continue
        if (a, b) not in assignment:
            raise MissingStabilizerError(f"edge {(a, b)} has no stabilizer")
        out = out * build_stabilizer(layout, assignment, (a, b))
    hosts = {s for s, _ in ops}
    stray = [q for q in out.support if layout.site_of(q) not in hosts]
    if stray:
        raise SupportError(f"transformed term acts on qubits {stray} outside sites {sorted(hosts)}")
    return out


# --------------------------------------------------------------- assembly


def physical_operator(layout: ModeLayout, term: FermionTerm) -> PauliSum:
    """Untransformed Jordan-Wigner image of ``term`` on ``layout``."""
    k, m, c = term.kind, term.modes, term.coeff
    if k == "hopping":
        i, j = sorted(m)
        fwd = raising(layout, i) * lowering(layout, j)
        return (fwd + fwd.dagger()) * c
    if k == "density_density":
        return number_op(layout, m[0]) * number_op(layout, m[1]) * c
    if k == "four_fermion":
        i, j, kk, l = m
        mono = ladder_product(layout, [(i, True), (j, True), (kk, False), (l, False)])
        return (mono + mono.dagger()) * c
    if k == "majorana_quartic":
        out = PauliSum([PauliTerm.identity(c)])
        for x in m:
            kind, site = majorana_site(x)
            out = out * majorana(layout, MajoranaLabel(kind, site, 0))
        return out
    mono = ladder_product(layout, m)
    return (mono + mono.dagger()) * c


def stabilizer_product(layout: ModeLayout, assignment: LayerAssignment, term: FermionTerm) -> PauliTerm:
    out = PauliTerm.identity()
    for e in stabilizer_edges(term):
        out = pauli_mul(out, build_stabilizer(layout, assignment, e))
    return out


def transform_term(layout: ModeLayout, assignment: LayerAssignment, term: FermionTerm) -> PauliSum:
    k, m, c = term.kind, term.modes, term.coeff
    for e in stabilizer_edges(term):
        if e not in assignment:
            raise MissingStabilizerError(f"{k} term {m} needs stabilizer edge {e}")
    if k == "hopping":
        return transform_hopping(layout, assignment, m[0], m[1], c)
    if k == "density_density":
        return transform_density_density(layout, m[0], m[1], c)
    if k == "four_fermion":
        return transform_four_fermion(layout, assignment, *m, c)
    if k == "majorana_quartic":
        return transform_syk_quartic(layout, assignment, m, c)
    return transform_general_even(layout, assignment, m, term.pairs, c)


def weight_formula(assignment: LayerAssignment, term: FermionTerm) -> dict[str, int]:
    """Closed-form weights for ``term``.

    ``bound`` counts ``2 + 2l`` per stabilized pair (``2`` for a same-site
    pair); ``linear`` is the ``2n + sum(l)`` expression, reported alongside
    for general terms.
    """
    regs = [assignment.register(e) for e in stabilizer_edges(term)]
    k = term.kind
    if k == "hopping":
        return {"exact": 2 * (regs[0] + 1), "bound": 2 * (regs[0] + 1)}
    if k == "density_density":
        return {"bound": 2}
    if k in ("four_fermion", "majorana_quartic"):
        full = regs + [0] * (2 - len(regs))
        return {"bound": 4 + 2 * full[0] + 2 * full[1]}
    n = len(term.modes) // 2
    return {"bound": 2 * n + 2 * sum(regs), "linear": 2 * n + sum(regs)}


@dataclass
class EncodedTerm:
    term: FermionTerm
    operator: PauliSum
    layer: int
    stabilizer_refs: list[Edge]
    weight: int
    formula: dict[str, int]

    @property
    def support(self) -> tuple[int, ...]:
        return self.operator.support


@dataclass
class EncodedHamiltonian:
    """Transformed terms grouped into Trotter layers."""

    layout: ModeLayout
    assignment: LayerAssignment
    terms: list[EncodedTerm] = field(default_factory=list)

    @property
    def layers(self) -> dict[int, list[PauliSum]]:
        out: dict[int, list[PauliSum]] = {}
        for t in self.terms:
            out.setdefault(t.layer, []).append(t.operator)
        return dict(sorted(out.items()))

    def layer_terms(self) -> dict[int, list[EncodedTerm]]:
        out: dict[int, list[EncodedTerm]] = {}
        for t in self.terms:
            out.setdefault(t.layer, []).append(t)
        return dict(sorted(out.items()))

    @property
    def stabilizer_refs(self) -> list[list[Edge]]:
        return [t.stabilizer_refs for t in self.terms]

    @property
    def weight_audit(self) -> list[int]:
        return [t.weight for t in self.terms]

    def layer_sums(self) -> dict[int, PauliSum]:
        return {g: PauliSum([p for op in ops for p in op]) for g, ops in self.layers.items()}

    def total(self) -> PauliSum:
        return PauliSum([p for t in self.terms for p in t.operator])

    def max_weight(self, kind: str | None = None) -> int:
        return max((t.weight for t in self.terms if kind in (None, t.term.kind)), default=0)

    def dump(self) -> str:
        lines = []
        for t in sorted(self.terms, key=lambda x: x.layer):
            for p in t.operator:
                lines.append(f"layer {t.layer} weight {weight(p)} {format_term(p, 12)}")
        return "".join(line + "\n" for line in lines)


def _ops_commute(a: PauliSum, b: PauliSum) -> bool:
    """Exact operator commutation (strings may anticommute pairwise)."""
    if all(commutes(x, y) for x in a for y in b):
        return True
    return not (a * b - b * a)


def _conflict(a: EncodedTerm, b: EncodedTerm) -> bool:
    if not set(a.support) & set(b.support):
        return False
    return not _ops_commute(a.operator, b.operator)


def layer_violations(encoded: EncodedHamiltonian) -> list[tuple[int, int, int]]:
    """``(layer, i, j)`` for overlapping, non-commuting terms in one layer."""
    bad = []
    for g, items in encoded.layer_terms().items():
        for a in range(len(items)):
            for b in range(a + 1, len(items)):
                if _conflict(items[a], items[b]):
                    bad.append((g, encoded.terms.index(items[a]), encoded.terms.index(items[b])))
    return bad


def encode_hamiltonian(model, layout: ModeLayout, assignment: LayerAssignment) -> EncodedHamiltonian:
    """Transform every term and group the results into Trotter layers.

    Hopping and density-density terms go to the layer of their edge color, so
    a layer holds vertex-disjoint edges (hopping and density terms on the same
    edge commute).  Terms with several stabilizers start at the color of their
    first edge and move to the first layer where they overlap nothing.
    """
    terms = model.terms if hasattr(model, "terms") else list(model)
    enc = EncodedHamiltonian(layout, assignment)
    by_layer: dict[int, list[EncodedTerm]] = {}
    for term in terms:
        op = transform_term(layout, assignment, term)
        if not op:
            continue
        if not op.is_hermitian:
            raise AssertionError(f"transformed {term.kind} term is not Hermitian")
        refs = stabilizer_edges(term)
        et = EncodedTerm(term, op, 0, refs, op.max_weight(), weight_formula(assignment, term))
        edges = graph_edges(term)
        if term.kind in ("hopping", "density_density") and edges[0] in assignment:
            et.layer = assignment.color(edges[0])
        else:
            start = assignment.color(edges[0]) if edges and edges[0] in assignment else 1
            candidates = [start, *range(1, max(assignment.chi, start) + len(terms) + 2)]
            et.layer = next(g for g in candidates if not any(_conflict(et, o) for o in by_layer.get(g, [])))
        by_layer.setdefault(et.layer, []).append(et)
        enc.terms.append(et)
    bad = layer_violations(enc)
    if bad:
        raise LayerOverlapError(f"overlapping non-commuting terms in layers: {bad[:5]}")
    return enc
