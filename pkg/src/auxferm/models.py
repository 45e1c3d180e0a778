"""Example models, instance generators and the model file format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoder import (
    FermionTerm,
    build_interaction_graph,
    density_density,
    four_fermion,
    hopping,
    majorana_quartic,
)
from .fermion import ModeLayout
from .stabilizers import InteractionGraph, InteractionHypergraph, LayerAssignment, layer_assignment

MODEL_KINDS = ("hopping", "fermi_hubbard", "sparse_syk", "general")


class InfeasibleError(ValueError):
    """No instance exists for the requested parameters."""


class ModelFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass
class FermionModel:
    n_sites: int
    terms: list[FermionTerm]
    graph: InteractionGraph | InteractionHypergraph | None = None
    kind: str = "general"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_sites < 0 or (self.n_sites == 0 and self.terms):
            raise ValueError("a model with terms needs at least one site")
        for t in self.terms:
            hi = 2 * self.n_sites if t.kind == "majorana_quartic" else self.n_sites
            flat = [s for s, _ in t.modes] if t.kind == "general_even" else list(t.modes)
            if any(not 1 <= m <= hi for m in flat):
                raise ValueError(f"{t.kind} term {t.modes} indexes outside 1..{hi}")

    def interaction_graph(self) -> InteractionGraph:
        """Stabilizer graph: every edge some term needs (plus density edges)."""
        return build_interaction_graph(self.n_sites, self.terms)

    def assignment(self) -> LayerAssignment:
        return layer_assignment(self.interaction_graph())

    def layout(self, assignment: LayerAssignment | None = None) -> ModeLayout:
        asg = assignment or self.assignment()
        return ModeLayout(self.n_sites, asg.nu)


# ----------------------------------------------------------- generators


def random_regular_graph(n: int, d: int, seed: int = 0, max_attempts: int = 5000) -> InteractionGraph:
    """Simple ``d``-regular graph on ``n`` vertices (Steger-Wormald pairing).

    Stubs are paired one random pair at a time and pairs that would create a
    loop or a repeated edge are redrawn; a dead end restarts the attempt.
    Attempt ``k`` uses the ``k``-th spawned stream of ``seed``.  Dense
    requests (``2d > n - 1``) sample the sparser complement instead.
    """
    if n < 1 or d < 0:
        raise InfeasibleError("need n >= 1 and d >= 0")
    if (n * d) % 2:
        raise InfeasibleError(f"n*d = {n * d} is odd")
    if d >= n and d > 0:
        raise InfeasibleError(f"degree {d} needs more than {n} vertices")
    if d == 0:
        return InteractionGraph(n, frozenset())
    if 2 * d > n - 1:
        comp = random_regular_graph(n, n - 1 - d, seed, max_attempts).edges
        full = {(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)}
        return InteractionGraph(n, frozenset(full - comp))
    for child in np.random.SeedSequence(seed).spawn(max_attempts):
        edges = _pair_stubs(n, d, np.random.default_rng(child))
        if edges is not None:
            return InteractionGraph(n, frozenset(edges))
    raise RuntimeError(f"no simple {d}-regular graph on {n} vertices after {max_attempts} attempts")


def _pair_stubs(n: int, d: int, rng: np.random.Generator) -> set | None:
    stubs = list(np.repeat(np.arange(1, n + 1), d))
    edges: set = set()
    while stubs:
        for _ in range(10 * len(stubs)):
            a, b = rng.choice(len(stubs), size=2, replace=False)
            u, v = int(stubs[a]), int(stubs[b])
            if u != v and (min(u, v), max(u, v)) not in edges:
                break
        else:
            return None
        edges.add((min(u, v), max(u, v)))
        for k in sorted((a, b), reverse=True):
            stubs[k] = stubs[-1]
            stubs.pop()
    return edges


def hopping_model(graph: InteractionGraph, t: float = 1.0) -> FermionModel:
    return FermionModel(graph.n_vertices, [hopping(i, j, t) for i, j in graph.sorted_edges()], graph, "hopping")


def fermi_hubbard_model(graph: InteractionGraph, t: float = 1.0, v: float = 1.0) -> FermionModel:
    """One hopping and one density-density term per edge."""
    edges = graph.sorted_edges()
    terms = [hopping(i, j, t) for i, j in edges]
    if v != 0:
        terms += [density_density(i, j, v) for i, j in edges]
    return FermionModel(graph.n_vertices, terms, graph, "fermi_hubbard" if v != 0 else "hopping")


def random_regular_hypergraph(n_majorana: int, d: int, seed: int = 0, max_attempts: int = 20000) -> InteractionHypergraph:
    """4-uniform ``d``-regular hypergraph by the configuration model with
    full rejection of degenerate or repeated hyperedges."""
    if n_majorana < 4 and d > 0:
        raise InfeasibleError("need at least four Majoranas")
    if n_majorana % 2:
        raise InfeasibleError("the number of Majoranas must be even")
    if (n_majorana * d) % 4:
        raise InfeasibleError(f"n*d = {n_majorana * d} is not divisible by 4")
    if d == 0:
        return InteractionHypergraph(n_majorana, frozenset())
    stubs = np.repeat(np.arange(1, n_majorana + 1), d)
    for child in np.random.SeedSequence(seed).spawn(max_attempts):
        groups = np.random.default_rng(child).permutation(stubs).reshape(-1, 4)
        hedges = set()
        ok = True
        for g in groups:
            key = tuple(sorted(int(x) for x in g))
            if len(set(key)) < 4 or key in hedges:
                ok = False
                break
            hedges.add(key)
        if ok:
            return InteractionHypergraph(n_majorana, frozenset(hedges))
    raise RuntimeError(f"no {d}-regular 4-uniform hypergraph on {n_majorana} vertices after {max_attempts} attempts")


def sparse_syk_model(n_majorana: int, d: int, seed: int = 0, coupling_scale: float = 1.0) -> FermionModel:
    """Sparse quartic SYK model with couplings uniform on ``[-J, J]``."""
    hyper_rng, coupling_rng = np.random.SeedSequence(seed).spawn(2)
    h = random_regular_hypergraph(n_majorana, d, int(hyper_rng.generate_state(1)[0]))
    rng = np.random.default_rng(coupling_rng)
    edges = sorted(h.hyperedges)
    js = rng.uniform(-coupling_scale, coupling_scale, size=len(edges))
    terms = [majorana_quartic(*e, float(j)) for e, j in zip(edges, js)]
    return FermionModel(max(n_majorana // 2, 1), terms, h, "sparse_syk", {"coupling": "uniform", "J": coupling_scale})


def cycle_graph(n: int) -> InteractionGraph:
    return InteractionGraph(n, frozenset((min(i, i % n + 1), max(i, i % n + 1)) for i in range(1, n + 1)))


# ---------------------------------------------------------- file format


def parse_model(text: str) -> FermionModel:
    """Parse ``model <kind>`` / ``modes <N>`` / term lines.

    Term lines: ``hop i j t``, ``nn i j V``, ``syk i j k l J`` (Majorana
    indices ``1..2N``) and ``quartic i j k l U`` (four-fermion term).
    """
    kind = None
    n = None
    terms: list[FermionTerm] = []
    arity = {"hop": 3, "nn": 3, "syk": 5, "quartic": 5}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0]
        try:
            if head == "model":
                if kind is not None or len(tok) != 2:
                    raise ModelFormatError("expected a single 'model <kind>' header", no)
                if tok[1] not in MODEL_KINDS:
                    raise ModelFormatError(f"unknown model kind {tok[1]!r}", no)
                kind = tok[1]
            elif head == "modes":
                if n is not None or len(tok) != 2:
                    raise ModelFormatError("expected a single 'modes <N>' line", no)
                n = int(tok[1])
                if n < 1:
                    raise ModelFormatError("modes must be positive", no)
            elif head in arity:
                if kind is None or n is None:
                    raise ModelFormatError("term before 'model' and 'modes' headers", no)
                if len(tok) != arity[head] + 1:
                    raise ModelFormatError(f"'{head}' takes {arity[head]} arguments", no)
                idx = [int(x) for x in tok[1:-1]]
                c = float(tok[-1])
                hi = 2 * n if head == "syk" else n
                if any(not 1 <= i <= hi for i in idx):
                    raise ModelFormatError(f"index out of range 1..{hi}", no)
                builder = {"hop": hopping, "nn": density_density, "syk": majorana_quartic, "quartic": four_fermion}[head]
                terms.append(builder(*idx, c))
            else:
                raise ModelFormatError(f"unknown directive {head!r}", no)
        except ModelFormatError:
            raise
        except ValueError as exc:
            raise ModelFormatError(str(exc), no) from None
    if kind is None and n is None:
        return FermionModel(0, [], None, "general")
    if kind is None or n is None:
        raise ModelFormatError("missing 'model' or 'modes' header")
    return FermionModel(n, terms, None, kind)


def format_model(model: FermionModel) -> str:
    """Inverse of :func:`parse_model`; coefficients are written losslessly."""
    lines = [f"model {model.kind}", f"modes {model.n_sites}"]
    tag = {"hopping": "hop", "density_density": "nn", "majorana_quartic": "syk", "four_fermion": "quartic"}
    for t in model.terms:
        if t.kind not in tag:
            raise ValueError(f"{t.kind} terms have no file representation")
        lines.append(" ".join([tag[t.kind], *map(str, t.modes), repr(t.coeff)]))
    return "\n".join(lines) + "\n"


# -------------------------------------------------------- generator spec


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    sizes: tuple[int, ...]
    degree: int
    seed: int
    params: dict

    def build(self, n: int | None = None) -> FermionModel:
        n = self.sizes[0] if n is None else n
        p = self.params
        if self.kind == "cycle":
            return fermi_hubbard_model(cycle_graph(n), p.get("t", 1.0), p.get("V", 0.0))
        if self.kind in ("hopping", "fermi_hubbard"):
            g = random_regular_graph(n, self.degree, self.seed)
            if self.kind == "hopping":
                return hopping_model(g, p.get("t", 1.0))
            return fermi_hubbard_model(g, p.get("t", 1.0), p.get("V", 1.0))
        if self.kind == "sparse_syk":
            return sparse_syk_model(2 * n, self.degree, self.seed, p.get("J", 1.0))
        raise InfeasibleError(f"unknown generator {self.kind!r}")


GENERATORS = ("hopping", "fermi_hubbard", "sparse_syk", "cycle")


def parse_generator(spec: str, default_seed: int = 0) -> GeneratorSpec:
    """``KIND:N=..,d=..,seed=..`` with optional ``t``, ``V``, ``J``.

    ``N`` may list several sizes separated by ``/``.  For ``sparse_syk``
    ``N`` counts sites (``2N`` Majoranas); ``cycle`` ignores ``d``.
    """
    if ":" not in spec:
        raise ModelFormatError(f"generator spec {spec!r} lacks 'KIND:'")
    kind, _, rest = spec.partition(":")
    if kind not in GENERATORS:
        raise ModelFormatError(f"unknown generator {kind!r}; choose from {', '.join(GENERATORS)}")
    vals: dict[str, str] = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq or not val:
            raise ModelFormatError(f"bad generator field {item!r}")
        vals[key.strip()] = val.strip()
    unknown = set(vals) - {"N", "d", "seed", "t", "V", "J"}
    if unknown:
        raise ModelFormatError(f"unknown generator fields {sorted(unknown)}")
    try:
        sizes = tuple(int(x) for x in vals.get("N", "").split("/") if x)
        degree = int(vals.get("d", "2" if kind == "cycle" else "3"))
        seed = int(vals.get("seed", default_seed))
        params = {k: float(vals[k]) for k in ("t", "V", "J") if k in vals}
    except ValueError as exc:
        raise ModelFormatError(f"bad generator value: {exc}") from None
    if not sizes:
        raise ModelFormatError("generator spec needs N=...")
    return GeneratorSpec(kind, sizes, degree, seed, params)
