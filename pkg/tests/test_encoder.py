import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auxferm.encoder import (
    FermionTerm,
    MissingStabilizerError,
    SupportError,
    density_density,
    encode_hamiltonian,
    four_fermion,
    general_even,
    hopping,
    layer_violations,
    majorana_quartic,
    physical_operator,
    stabilizer_edges,
    stabilizer_product,
    string_free_product,
    transform_general_even,
    transform_term,
)
from auxferm.fermion import ModeLayout
from auxferm.models import cycle_graph, fermi_hubbard_model, random_regular_graph, sparse_syk_model
from auxferm.pauli import PauliSum, weight
from auxferm.stabilizers import InteractionGraph, assign_layers, layer_assignment


def _setup(g):
    asg = layer_assignment(g)
    return asg, ModeLayout(g.n_vertices, asg.nu)


def _same(a: PauliSum, b: PauliSum) -> bool:
    return not (a - b)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("n, d", [(6, 3), (8, 3), (8, 4)])
def test_hopping_weight_and_identity(n, d, seed):
    g = random_regular_graph(n, d, seed)
    asg, lay = _setup(g)
    for i, j in g.sorted_edges():
        t = hopping(i, j, 0.7)
        op = transform_term(lay, asg, t)
        l = asg.register((i, j))
        assert op.max_weight() == 2 * (l + 1)
        assert all(weight(p) == 2 * (l + 1) for p in op)
        assert _same(op, physical_operator(lay, t) * stabilizer_product(lay, asg, t))
        assert _same(op, transform_general_even(lay, asg, [(i, True), (j, False)], [(i, j)], 0.7))


def test_hopping_support_is_local():
    g = random_regular_graph(8, 3, 1)
    asg, lay = _setup(g)
    for i, j in g.sorted_edges():
        sites = {lay.site_of(q) for q in transform_term(lay, asg, hopping(i, j)).support}
        assert sites == {i, j}


def test_density_density_is_weight_two():
    lay = ModeLayout(4, 1)
    op = transform_term(lay, layer_assignment(cycle_graph(4)), density_density(1, 3, 2.0))
    assert op.max_weight() == 2
    assert _same(op, physical_operator(lay, density_density(1, 3, 2.0)))


@st.composite
def four_site_terms(draw):
    sites = draw(st.permutations(range(1, 7)))
    return tuple(sites[:4])


@given(four_site_terms(), st.floats(-2, 2).filter(lambda x: abs(x) > 1e-3))
@settings(max_examples=40, deadline=None)
def test_four_fermion_routes_agree(sites, u):
    i, j, k, l = sites
    g = InteractionGraph.from_edges(6, [(i, k), (j, l), *[(a, a % 6 + 1) for a in range(1, 7)]])
    asg, lay = _setup(g)
    t = four_fermion(i, j, k, l, u)
    op = transform_term(lay, asg, t)
    assert op.is_hermitian
    assert _same(op, physical_operator(lay, t) * stabilizer_product(lay, asg, t))
    ops = [(i, True), (j, True), (k, False), (l, False)]
    assert _same(op, transform_general_even(lay, asg, ops, [(i, k), (j, l)], u))
    bound = 4 + 2 * asg.register((i, k)) + 2 * asg.register((j, l))
    assert op.max_weight() <= bound
    assert {lay.site_of(q) for q in op.support} <= {i, j, k, l}


@pytest.mark.parametrize("seed", range(5))
def test_syk_terms(seed):
    model = sparse_syk_model(12, 2, seed)
    g = model.interaction_graph()
    asg, lay = _setup(g)
    for t in model.terms:
        op = transform_term(lay, asg, t)
        assert op.is_hermitian
        assert _same(op, physical_operator(lay, t) * stabilizer_product(lay, asg, t))
        regs = [asg.register(e) for e in (g.edges & set(stabilizer_edges(t)))] + [0, 0]
        assert op.max_weight() <= 4 + 2 * regs[0] + 2 * regs[1]
        assert {lay.site_of(q) for q in op.support} <= set(t.sites)


def test_syk_same_site_pair_needs_no_stabilizer():
    # Majoranas 1, 2 share site 1; only the (2, 3) site pair is stabilized
    t = majorana_quartic(1, 2, 5, 6)
    assert stabilizer_edges(t) == []
    lay = ModeLayout(3, 0)
    asg = assign_layers({})
    op = transform_term(lay, asg, t)
    assert _same(op, physical_operator(lay, t))


def test_missing_stabilizer():
    lay = ModeLayout(4, 1)
    with pytest.raises(MissingStabilizerError):
        transform_term(lay, layer_assignment(cycle_graph(4)), hopping(1, 3))


def test_string_free_rejects_odd_site_count():
    lay = ModeLayout(3)
    with pytest.raises(SupportError):
        string_free_product(lay, [(1, PauliSum()), (2, PauliSum())])


def test_general_term_support_check():
    g = InteractionGraph.from_edges(4, [(1, 2), (2, 3), (3, 4)])
    asg, lay = _setup(g)
    # pairing (1,3) is not an edge: no stabilizer available
    with pytest.raises(MissingStabilizerError):
        transform_general_even(lay, asg, [(1, True), (3, False)], [(1, 3)])
    with pytest.raises(ValueError):
        transform_general_even(lay, asg, [(1, True), (2, False)], [(1, 3)])


def test_general_even_six_body():
    g = InteractionGraph.from_edges(6, [(1, 2), (3, 4), (5, 6), (2, 3), (4, 5)])
    asg, lay = _setup(g)
    t = general_even([(1, True), (3, True), (5, True), (2, False), (4, False), (6, False)], [(1, 2), (3, 4), (5, 6)], 0.3)
    op = transform_term(lay, asg, t)
    assert op.is_hermitian
    assert {lay.site_of(q) for q in op.support} <= set(range(1, 7))
    assert _same(op, physical_operator(lay, t) * stabilizer_product(lay, asg, t))


@pytest.mark.parametrize("kind, modes", [("hopping", (1,)), ("hopping", (1, 1)), ("nope", (1, 2)), ("general_even", ((1, True),))])
def test_term_validation(kind, modes):
    with pytest.raises(ValueError):
        FermionTerm(kind, modes)


def test_fermi_hubbard_layers_follow_colors():
    model = fermi_hubbard_model(random_regular_graph(8, 3, 2), 1.0, 2.0)
    g = model.interaction_graph()
    asg, lay = _setup(g)
    enc = encode_hamiltonian(model, lay, asg)
    assert layer_violations(enc) == []
    assert set(enc.layers) == set(range(1, asg.chi + 1))
    for t in enc.terms:
        assert t.layer == asg.color(t.term.modes)
    assert enc.total().is_hermitian
    assert enc.max_weight("density_density") == 2


def test_syk_layering_has_no_conflicts():
    model = sparse_syk_model(16, 2, 7)
    asg, lay = _setup(model.interaction_graph())
    enc = encode_hamiltonian(model, lay, asg)
    assert layer_violations(enc) == []
    assert len(enc.terms) == len(model.terms)


def test_dump_format():
    model = fermi_hubbard_model(cycle_graph(4), 1.0, 2.0)
    asg, lay = _setup(model.interaction_graph())
    lines = encode_hamiltonian(model, lay, asg).dump().splitlines()
    assert lines[0] == "layer 1 weight 4 -0.5 X0 X1 Y2 Y3"
    assert all(line.startswith("layer ") for line in lines)


def test_weight_audit_matches_operators():
    model = fermi_hubbard_model(random_regular_graph(6, 3, 0))
    asg, lay = _setup(model.interaction_graph())
    enc = encode_hamiltonian(model, lay, asg)
    assert enc.weight_audit == [t.operator.max_weight() for t in enc.terms]
    for t in enc.terms:
        if t.term.kind == "hopping":
            assert t.weight == t.formula["exact"]
