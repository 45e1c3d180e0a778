"""Interaction graphs, edge coloring and stabilizer construction.

Pipeline::

    graph --edge_color--> coloring --assign_layers--> LayerAssignment
    LayerAssignment --build_stabilizer--> P_ij^(l) = s * i c_i^(l) d_j^(l)

Two colors share one auxiliary register (colors ``2l-1`` and ``2l`` live on
register ``l``).  Their union has maximum degree two, so it splits into paths
and cycles which are oriented head-to-tail; every vertex then has at most one
outgoing and one incoming edge per register and all stabilizers commute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .fermion import ModeLayout, majorana_c, majorana_d
from .pauli import PauliTerm, commutes, pauli_mul

Edge = tuple[int, int]


class GraphFormatError(ValueError):
    """Malformed graph or hypergraph text."""


def norm_edge(i: int, j: int) -> Edge:
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop ({i}, {j})")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class InteractionGraph:
    """Simple undirected graph on vertices ``1..n_vertices``."""

    n_vertices: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        edges = frozenset(norm_edge(i, j) for i, j in self.edges)
        for i, j in edges:
            if not (1 <= i <= self.n_vertices and 1 <= j <= self.n_vertices):
                raise ValueError(f"edge ({i}, {j}) outside 1..{self.n_vertices}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int]]) -> "InteractionGraph":
        return cls(n_vertices, frozenset(edges))

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def adjacency(self) -> dict[int, set[int]]:
        adj = {v: set() for v in range(1, self.n_vertices + 1)}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def degrees(self) -> dict[int, int]:
        return {v: len(n) for v, n in self.adjacency().items()}

    @property
    def max_degree(self) -> int:
        return max(self.degrees().values(), default=0)

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "InteractionGraph":
        return InteractionGraph(self.n_vertices, self.edges | {norm_edge(*e) for e in extra})


@dataclass(frozen=True)
class InteractionHypergraph:
    """4-uniform hypergraph on Majorana indices ``1..n_majorana``."""

    n_majorana: int
    hyperedges: tuple = ()

    def __post_init__(self):
        if self.n_majorana % 2:
            raise ValueError("n_majorana must be even")
        seen = set()
        out = []
        for h in self.hyperedges:
            h = tuple(sorted(int(x) for x in h))
            if len(h) != 4 or len(set(h)) != 4:
                raise ValueError(f"hyperedge {h} must have 4 distinct indices")
            if not all(1 <= x <= self.n_majorana for x in h):
                raise ValueError(f"hyperedge {h} outside 1..{self.n_majorana}")
            if h not in seen:
                seen.add(h)
                out.append(h)
        object.__setattr__(self, "hyperedges", tuple(out))

    def degrees(self) -> dict[int, int]:
        deg = {m: 0 for m in range(1, self.n_majorana + 1)}
        for h in self.hyperedges:
            for m in h:
                deg[m] += 1
        return deg


def majorana_pairs(h: InteractionHypergraph) -> list[tuple[Edge, Edge]]:
    """Per hyperedge ``i<j<k<l`` the split ``((i, j), (k, l))``."""
    return [((a, b), (c, d)) for a, b, c, d in h.hyperedges]


def split_hyperedges(h: InteractionHypergraph) -> InteractionGraph:
    """Majorana-level stabilizer graph; shared pairs are merged."""
    edges = set()
    for p, q in majorana_pairs(h):
        edges.add(p)
        edges.add(q)
    return InteractionGraph(h.n_majorana, frozenset(edges))


def majorana_site(m: int) -> tuple[str, int]:
    """Majorana index ``m`` lives on site ``ceil(m/2)``: odd -> c, even -> d."""
    return ("c" if m % 2 else "d"), (m + 1) // 2


def site_graph(majorana_graph: InteractionGraph) -> InteractionGraph:
    """Project a Majorana-level graph onto physical sites.

    Pairs hosted by a single site carry no Jordan-Wigner string and need no
    stabilizer, so they are dropped.
    """
    edges = set()
    for a, b in majorana_graph.edges:
        sa, sb = majorana_site(a)[1], majorana_site(b)[1]
        if sa != sb:
            edges.add(norm_edge(sa, sb))
    return InteractionGraph(majorana_graph.n_vertices // 2, frozenset(edges))


# ---------------------------------------------------------------- coloring


def edge_color(g: InteractionGraph, exact_budget: int = 20000) -> dict[Edge, int]:
    """Proper edge coloring with at most ``max_degree + 1`` colors.

    A budgeted search for a ``max_degree`` coloring runs first; if it gives
    up, the Misra-Gries construction guarantees ``max_degree + 1``.
    """
    if exact_budget > 0:
        found = delta_coloring(g, exact_budget)
        if found is not None:
            return found
    return misra_gries(g)


def delta_coloring(g: InteractionGraph, budget: int = 20000) -> dict[Edge, int] | None:
    """Backtracking search for a coloring with ``max_degree`` colors.

    Edges are picked by saturation (most distinct colors around them, then
    lowest index).  Returns ``None`` when no coloring is found within
    ``budget`` assignments.
    """
    edges = g.sorted_edges()
    k = g.max_degree
    at: dict[int, set[int]] = {v: set() for v in range(1, g.n_vertices + 1)}
    col: dict[Edge, int] = {}
    steps = 0

    def pick():
        best, key = None, None
        for e in edges:
            if e in col:
                continue
            sat = len(at[e[0]] | at[e[1]])
            if key is None or sat > key:
                best, key = e, sat
        return best

    def solve() -> bool:
        nonlocal steps
        e = pick()
        if e is None:
            return True
        used = at[e[0]] | at[e[1]]
        for c in range(1, k + 1):
            if c in used:
                continue
            steps += 1
            if steps > budget:
                return False
            col[e] = c
            at[e[0]].add(c)
            at[e[1]].add(c)
            if solve():
                return True
            del col[e]
            at[e[0]].discard(c)
            at[e[1]].discard(c)
            if steps > budget:
                return False
        return False

    return dict(col) if solve() else None


def misra_gries(g: InteractionGraph) -> dict[Edge, int]:
    """Proper edge coloring with at most ``max_degree + 1`` colors.

    Misra-Gries fan rotation: every edge is colored in turn, inverting one
    alternating path and rotating one fan when no color is free at both ends.
    """
    adj = g.adjacency()
    palette = range(1, g.max_degree + 2)
    at: dict[int, dict[int, int]] = {v: {} for v in adj}  # vertex -> color -> neighbor
    col: dict[Edge, int] = {}

    def free(v: int) -> int:
        for c in palette:
            if c not in at[v]:
                return c
        raise AssertionError("no free color")  # unreachable with deg+1 colors

    def paint(u: int, v: int, c: int) -> None:
        col[norm_edge(u, v)] = c
        at[u][c] = v
        at[v][c] = u

    def scrape(u: int, v: int) -> int:
        c = col.pop(norm_edge(u, v))
        del at[u][c]
        del at[v][c]
        return c

    def is_fan(u: int, fan: list[int]) -> bool:
        for a, b in zip(fan, fan[1:]):
            e = norm_edge(u, b)
            if e not in col or col[e] in at[a]:
                return False
        return True

    for u, v in g.sorted_edges():
        fan = [v]
        while True:
            last = fan[-1]
            nxt = None
            for w in sorted(adj[u]):
                e = norm_edge(u, w)
                if w in fan or e not in col:
                    continue
                if col[e] not in at[last]:
                    nxt = w
                    break
            if nxt is None:
                break
            fan.append(nxt)
        c = free(u)
        d = free(fan[-1])
        if d in at[u]:
            # invert the cd-path starting at u along its d-edge
            path = []
            x, want = u, d
            while want in at[x]:
                y = at[x][want]
                path.append((x, y))
                x, want = y, (c if want == d else d)
            old = [scrape(a, b) for a, b in path]
            for (a, b), oc in zip(path, old):
                paint(a, b, c if oc == d else d)
        k = next(
            idx for idx, w in enumerate(fan) if d not in at[w] and is_fan(u, fan[: idx + 1])
        )
        shifted = [scrape(u, fan[i]) for i in range(1, k + 1)]
        for i in range(k):
            paint(u, fan[i], shifted[i])
        paint(u, fan[k], d)
    return col


def is_proper_coloring(coloring: Mapping[Edge, int]) -> bool:
    seen = set()
    for (i, j), c in coloring.items():
        for v in (i, j):
            if (v, c) in seen:
                return False
            seen.add((v, c))
    return True


def color_classes(coloring: Mapping[Edge, int]) -> dict[int, list[Edge]]:
    classes: dict[int, list[Edge]] = {}
    for e, c in sorted(coloring.items()):
        classes.setdefault(c, []).append(e)
    return classes


# ---------------------------------------------------------- orientation


def _check_matching(edges: Iterable[Edge], name: str) -> None:
    seen = set()
    for i, j in edges:
        if i in seen or j in seen:
            raise ValueError(f"{name} is not a matching (vertex shared at edge ({i}, {j}))")
        seen.update((i, j))


def orient_layer_pair(e_a: Iterable[Edge], e_b: Iterable[Edge] = ()) -> dict[Edge, tuple[int, int]]:
    """Head-to-tail orientation of the paths and cycles of ``e_a | e_b``.

    Paths start at their lower-index endpoint; cycles start at their lowest
    vertex and proceed towards its lower-index neighbour.
    """
    e_a = [norm_edge(*e) for e in e_a]
    e_b = [norm_edge(*e) for e in e_b]
    _check_matching(e_a, "first matching")
    _check_matching(e_b, "second matching")
    if set(e_a) & set(e_b):
        raise ValueError("matchings share an edge")
    adj: dict[int, list[int]] = {}
    for i, j in e_a + e_b:
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)

    out: dict[Edge, tuple[int, int]] = {}
    visited: set[int] = set()

    def walk(start: int, first: int) -> None:
        prev, cur = start, first
        out[norm_edge(prev, cur)] = (prev, cur)
        visited.add(start)
        while True:
            visited.add(cur)
            nxt = [w for w in adj[cur] if w != prev and norm_edge(cur, w) not in out]
            if not nxt:
                return
            prev, cur = cur, nxt[0]
            out[norm_edge(prev, cur)] = (prev, cur)

    # paths first (they have degree-1 endpoints)
    for v in sorted(adj):
        if v not in visited and len(adj[v]) == 1:
            walk(v, adj[v][0])
    for v in sorted(adj):
        if v not in visited:
            walk(v, min(adj[v]))
    return out


# -------------------------------------------------------- layer assignment


@dataclass(frozen=True)
class LayerAssignment:
    """Coloring, orientation and register packing of a stabilizer graph."""

    chi: int
    nu: int
    color_of: Mapping[Edge, int]
    oriented: Mapping[Edge, tuple[int, int]]
    layer_of_color: Mapping[int, int]
    signs: Mapping[Edge, int] = field(default_factory=dict)

    def __contains__(self, edge) -> bool:
        try:
            return norm_edge(*edge) in self.color_of
        except ValueError:
            return False

    @property
    def edges(self) -> list[Edge]:
        return sorted(self.color_of)

    def color(self, edge) -> int:
        return self.color_of[self._key(edge)]

    def register(self, edge) -> int:
        return self.layer_of_color[self.color(edge)]

    def orientation(self, edge) -> tuple[int, int]:
        return self.oriented[self._key(edge)]

    def sign(self, edge) -> int:
        return self.signs.get(self._key(edge), 1)

    def edges_of_color(self, color: int) -> list[Edge]:
        return sorted(e for e, c in self.color_of.items() if c == color)

    def edges_of_register(self, register: int) -> list[Edge]:
        return sorted(e for e, c in self.color_of.items() if self.layer_of_color[c] == register)

    def with_signs(self, signs: Mapping[Edge, int]) -> "LayerAssignment":
        merged = dict(self.signs)
        for e, s in signs.items():
            if s not in (1, -1):
                raise ValueError("stabilizer signs must be +1 or -1")
            merged[self._key(e)] = s
        return replace(self, signs=merged)

    def _key(self, edge) -> Edge:
        key = norm_edge(*edge)
        if key not in self.color_of:
            raise KeyError(f"edge {edge} has no stabilizer assignment")
        return key


def assign_layers(coloring: Mapping[Edge, int]) -> LayerAssignment:
    """Pack colors ``2l-1, 2l`` into register ``l`` and orient each register."""
    coloring = {norm_edge(*e): c for e, c in coloring.items()}
    if not is_proper_coloring(coloring):
        raise ValueError("coloring is not proper")
    relabel = {c: k for k, c in enumerate(sorted(set(coloring.values())), start=1)}
    color_of = {e: relabel[c] for e, c in coloring.items()}
    chi = len(relabel)
    nu = math.ceil(chi / 2)
    layer_of_color = {c: (c + 1) // 2 for c in range(1, chi + 1)}
    classes = color_classes(color_of)
    oriented: dict[Edge, tuple[int, int]] = {}
    for l in range(1, nu + 1):
        oriented.update(orient_layer_pair(classes.get(2 * l - 1, []), classes.get(2 * l, [])))
    return LayerAssignment(chi, nu, color_of, oriented, layer_of_color, {})


def layer_assignment(g: InteractionGraph) -> LayerAssignment:
    return assign_layers(edge_color(g))


# ----------------------------------------------------------- stabilizers


def build_stabilizer(layout: ModeLayout, assignment: LayerAssignment, edge) -> PauliTerm:
    """``s * i * c_tail^(l) * d_head^(l)`` for the oriented ``edge``."""
    l = assignment.register(edge)
    if layout.n_aux < assignment.nu:
        raise ValueError(f"layout has {layout.n_aux} auxiliary registers, need {assignment.nu}")
    tail, head = assignment.orientation(edge)
    p = pauli_mul(majorana_c(layout, tail, l), majorana_d(layout, head, l)).scaled(1j)
    return p.scaled(assignment.sign(edge))


def all_stabilizers(layout: ModeLayout, assignment: LayerAssignment) -> dict[Edge, PauliTerm]:
    return {e: build_stabilizer(layout, assignment, e) for e in assignment.edges}


def verify_layer_commutation(stabilizers) -> list[tuple]:
    """Pairs of stabilizers that fail to commute (empty for a valid assignment).

    ``stabilizers`` is a mapping ``key -> PauliTerm`` or a sequence of terms
    (then the keys are positions).
    """
    items = list(stabilizers.items()) if isinstance(stabilizers, Mapping) else list(enumerate(stabilizers))
    bad = []
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            if not commutes(items[a][1], items[b][1]):
                bad.append((items[a][0], items[b][0]))
    return bad


# ---------------------------------------------------------------- file IO


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def parse_graph(text: str) -> InteractionGraph:
    """``graph <N>`` followed by ``edge <i> <j>`` lines (1-based)."""
    n = None
    edges = []
    for no, tok in _lines(text):
        try:
            if tok[0] == "graph" and len(tok) == 2 and n is None:
                n = int(tok[1])
            elif tok[0] == "edge" and len(tok) == 3 and n is not None:
                edges.append(norm_edge(int(tok[1]), int(tok[2])))
            else:
                raise GraphFormatError(f"line {no}: unexpected {' '.join(tok)!r}")
        except ValueError as exc:
            raise GraphFormatError(f"line {no}: {exc}") from None
    if n is None:
        raise GraphFormatError("missing 'graph <N>' header")
    try:
        return InteractionGraph(n, frozenset(edges))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def format_graph(g: InteractionGraph) -> str:
    return "".join([f"graph {g.n_vertices}\n", *(f"edge {i} {j}\n" for i, j in g.sorted_edges())])


def parse_hypergraph(text: str) -> InteractionHypergraph:
    """``hypergraph <M>`` followed by ``hedge <i> <j> <k> <l>`` lines."""
    m = None
    hedges = []
    for no, tok in _lines(text):
        try:
            if tok[0] == "hypergraph" and len(tok) == 2 and m is None:
                m = int(tok[1])
            elif tok[0] == "hedge" and len(tok) == 5 and m is not None:
                hedges.append(tuple(int(x) for x in tok[1:]))
            else:
                raise GraphFormatError(f"line {no}: unexpected {' '.join(tok)!r}")
        except ValueError as exc:
            raise GraphFormatError(f"line {no}: {exc}") from None
    if m is None:
        raise GraphFormatError("missing 'hypergraph <M>' header")
    try:
        return InteractionHypergraph(m, tuple(hedges))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def format_hypergraph(h: InteractionHypergraph) -> str:
    return "".join(
        [f"hypergraph {h.n_majorana}\n", *(f"hedge {a} {b} {c} {d}\n" for a, b, c, d in h.hyperedges)]
    )
