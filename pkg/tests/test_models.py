import math
from collections import Counter

import pytest

from auxferm.encoder import encode_hamiltonian
from auxferm.models import (
    FermionModel,
    InfeasibleError,
    ModelFormatError,
    cycle_graph,
    fermi_hubbard_model,
    format_model,
    parse_generator,
    parse_model,
    random_regular_graph,
    random_regular_hypergraph,
    sparse_syk_model,
)


@pytest.mark.parametrize("n, d", [(4, 2), (6, 3), (8, 3), (10, 4), (12, 5), (7, 0)])
def test_regular_graph_is_simple_and_regular(n, d):
    for seed in range(5):
        g = random_regular_graph(n, d, seed)
        assert Counter(g.degrees().values()) == ({d: n} if n else {})
        assert all(i < j for i, j in g.edges)


def test_four_vertices_degree_two_is_a_cycle():
    g = random_regular_graph(4, 2, 0)
    assert len(g.edges) == 4 and set(g.degrees().values()) == {2}


def test_regular_graph_is_deterministic():
    assert random_regular_graph(12, 3, 9) == random_regular_graph(12, 3, 9)
    assert random_regular_graph(12, 3, 9) != random_regular_graph(12, 3, 10)


@pytest.mark.parametrize("n, d", [(3, 1), (4, 4), (5, 3)])
def test_regular_graph_infeasible(n, d):
    with pytest.raises(InfeasibleError):
        random_regular_graph(n, d)


def test_regular_graph_budget():
    # seed 0 dead-ends on its first pairing attempt
    with pytest.raises(RuntimeError):
        random_regular_graph(8, 3, 0, max_attempts=1)
    assert len(random_regular_graph(8, 3, 0).edges) == 12


@pytest.mark.parametrize("n, d", [(6, 5), (8, 5), (16, 6), (9, 6)])
def test_dense_regular_graph_via_complement(n, d):
    g = random_regular_graph(n, d, 1)
    assert set(g.degrees().values()) == {d}
    assert len(g.edges) == n * d // 2


def test_fermi_hubbard_counts():
    model = fermi_hubbard_model(cycle_graph(4), 1.0, 2.0)
    kinds = Counter(t.kind for t in model.terms)
    assert kinds == {"hopping": 4, "density_density": 4}
    assert model.kind == "fermi_hubbard"
    pure = fermi_hubbard_model(cycle_graph(4), 1.0, 0.0)
    assert {t.kind for t in pure.terms} == {"hopping"} and pure.kind == "hopping"


@pytest.mark.parametrize("d", [2, 3, 4])
def test_fermi_hubbard_register_count(d):
    for seed in range(6):
        model = fermi_hubbard_model(random_regular_graph(10, d, seed))
        assert model.assignment().nu <= math.ceil((d + 1) / 2)


def test_syk_hyperedge_counts():
    model = sparse_syk_model(8, 2, 0)
    assert len(model.terms) == 4
    deg = Counter(m for t in model.terms for m in t.modes)
    assert deg == {m: 2 for m in range(1, 9)}
    assert model.n_sites == 4


def test_syk_empty_when_degree_zero():
    model = sparse_syk_model(8, 0, 0)
    assert model.terms == []


def test_syk_couplings_in_range_and_reproducible():
    a = sparse_syk_model(16, 3, 5, coupling_scale=0.5)
    b = sparse_syk_model(16, 3, 5, coupling_scale=0.5)
    assert a.terms == b.terms
    assert all(-0.5 <= t.coeff <= 0.5 for t in a.terms)


@pytest.mark.parametrize("n, d", [(6, 1), (7, 4), (10, 3), (2, 1)])
def test_syk_infeasible(n, d):
    with pytest.raises(InfeasibleError):
        sparse_syk_model(n, d, 0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_syk_site_degree_and_registers(d):
    for n in (8, 12, 16):
        for seed in range(8):
            try:
                model = sparse_syk_model(n, d, seed)
            except InfeasibleError:
                continue
            g = model.interaction_graph()
            asg = model.assignment()
            assert g.max_degree <= 2 * d
            assert asg.nu <= d + 1
            if asg.chi <= 2 * d:
                assert asg.nu <= d
            encode_hamiltonian(model, model.layout(asg), asg)


def test_syk_register_count_can_exceed_degree():
    # this site graph has maximum degree 4 but needs five colors
    model = sparse_syk_model(20, 2, 4)
    asg = model.assignment()
    assert model.interaction_graph().max_degree == 4
    assert (asg.chi, asg.nu) == (5, 3)


def test_hypergraph_rejects_repeats():
    h = random_regular_hypergraph(12, 2, 3)
    assert len(h.hyperedges) == 6
    assert all(len(set(e)) == 4 for e in h.hyperedges)


def test_model_roundtrip():
    model = fermi_hubbard_model(cycle_graph(4), 1.25, -0.5)
    again = parse_model(format_model(model))
    assert again.terms == model.terms and again.n_sites == 4 and again.kind == "fermi_hubbard"
    syk = sparse_syk_model(8, 2, 1)
    assert parse_model(format_model(syk)).terms == syk.terms


def test_model_file_comments_and_blank_lines():
    text = "# header\nmodel hopping\n\nmodes 3  # three sites\nhop 1 2 1.0\nhop 2 3 -0.5\n"
    model = parse_model(text)
    assert [t.modes for t in model.terms] == [(1, 2), (2, 3)]


def test_empty_model_file():
    model = parse_model("")
    assert model.terms == [] and model.n_sites == 0


@pytest.mark.parametrize(
    "text, line",
    [
        ("model hopping\nmodes 3\nhop 1 2\n", 3),
        ("model hopping\nmodes 3\nhop 1 4 1\n", 3),
        ("model hopping\nmodes 3\nhop 1 1 1\n", 3),
        ("model nope\n", 1),
        ("model hopping\nmodes x\n", 2),
        ("hop 1 2 1\n", 1),
        ("model hopping\nmodes 2\nsyk 1 2 3 5 1\n", 3),
        ("model hopping\nmodes 2\nfoo 1\n", 3),
    ],
)
def test_model_parse_errors(text, line):
    with pytest.raises(ModelFormatError) as err:
        parse_model(text)
    assert err.value.line == line


def test_missing_header():
    with pytest.raises(ModelFormatError):
        parse_model("model hopping\n")


def test_model_rejects_out_of_range_terms():
    from auxferm.encoder import hopping

    with pytest.raises(ValueError):
        FermionModel(2, [hopping(1, 3)])


def test_generator_spec():
    spec = parse_generator("fermi_hubbard:N=8/16,d=3,seed=4,V=2")
    assert spec.sizes == (8, 16) and spec.degree == 3 and spec.seed == 4 and spec.params == {"V": 2.0}
    model = spec.build(16)
    assert model.n_sites == 16 and len(model.terms) == 48
    assert parse_generator("hopping:N=6", default_seed=7).seed == 7
    syk = parse_generator("sparse_syk:N=4,d=2,seed=1").build()
    assert syk.n_sites == 4 and len(syk.terms) == 4
    assert len(parse_generator("cycle:N=5").build().terms) == 5


@pytest.mark.parametrize("bad", ["hopping", "ring:N=4", "hopping:N=4,k=2", "hopping:d=3", "hopping:N=x", "hopping:N"])
def test_generator_spec_errors(bad):
    with pytest.raises(ModelFormatError):
        parse_generator(bad)
