import numpy as np
import pytest
from scipy.linalg import expm

from auxferm.encoder import encode_hamiltonian
from auxferm.fermion import ModeLayout, lowering
from auxferm.models import cycle_graph, fermi_hubbard_model, hopping_model, random_regular_graph
from auxferm.pauli import PauliSum, PauliTerm
from auxferm.sim import (
    CapExceeded,
    Reorder,
    StateVector,
    apply_pauli_sum,
    apply_term_exp,
    block_mode_map,
    aux_sector_dimension,
    check_line,
    commutator_lambda,
    equivalence_check,
    exact_evolve,
    expectation,
    fidelity,
    pauli_exp,
    physical_layers,
    prepare_aux_measured,
    prepare_aux_oracle,
    code_space_basis,
    stabilizer_projector,
    trace_distance_pure,
    trotter_evolve,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def test_statevector_validation():
    with pytest.raises(ValueError):
        StateVector(2, np.ones(3))
    psi = StateVector.random(3, rng())
    assert psi.norm == pytest.approx(1)
    assert fidelity(psi, psi) == pytest.approx(1)


@pytest.mark.parametrize("letters", [{0: "X"}, {1: "Y", 2: "Z"}, {0: "Z", 1: "X", 2: "Y"}])
def test_pauli_action_and_exp(letters):
    p = PauliTerm.from_dict(letters, -1, 0.8)
    psi = StateVector.random(3, rng(1))
    np.testing.assert_allclose(apply_pauli_sum(psi, p).amplitudes, p.to_matrix(3) @ psi.amplitudes, atol=1e-12)
    assert expectation(psi, p) == pytest.approx(np.vdot(psi.amplitudes, p.to_matrix(3) @ psi.amplitudes))
    want = expm(-1j * 0.4 * p.to_matrix(3)) @ psi.amplitudes
    np.testing.assert_allclose(pauli_exp(psi, p, 0.4).amplitudes, want, atol=1e-12)


def test_term_exp_non_commuting_uses_dense():
    op = PauliSum([PauliTerm.single("X", 0), PauliTerm.single("Z", 0).scaled(0.5)])
    psi = StateVector.random(2, rng(2))
    want = expm(-1j * 0.3 * op.to_matrix(2)) @ psi.amplitudes
    np.testing.assert_allclose(apply_term_exp(psi, op, 0.3).amplitudes, want, atol=1e-12)


def test_trotter_zero_steps_is_identity():
    psi = StateVector.random(2, rng(3))
    out = trotter_evolve({1: [PauliSum([PauliTerm.single("X", 0)])]}, 0.2, 0, psi)
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes)


def test_exact_evolve_cap():
    with pytest.raises(CapExceeded):
        exact_evolve(PauliSum(), 1.0, StateVector.zeros(15))


@pytest.mark.parametrize("n, nu", [(2, 1), (3, 1), (2, 2)])
def test_reorder_maps_block_modes(n, nu):
    lay = ModeLayout(n, nu)
    r = Reorder.build(lay)
    nq = lay.n_qubits
    flat = ModeLayout(nq, 0)
    mat = np.zeros((1 << nq,) * 2, dtype=complex)
    mat[r.target, np.arange(1 << nq)] = r.sign
    pi = block_mode_map(lay)
    for m in range(nq):
        a_block = lowering(flat, m + 1).to_matrix(nq)
        a_inter = lowering(flat, int(pi[m]) + 1).to_matrix(nq)
        np.testing.assert_allclose(mat @ a_block @ mat.conj().T, a_inter, atol=1e-12)


def test_reorder_roundtrip():
    lay = ModeLayout(3, 1)
    r = Reorder.build(lay)
    phys = StateVector.random(3, rng(4))
    aux = StateVector.random(3, rng(5))
    joint = r.embed(phys, aux)
    np.testing.assert_allclose(r.block_matrix(joint), np.outer(aux.amplitudes, phys.amplitudes), atol=1e-12)


@pytest.mark.parametrize("graph", [cycle_graph(4), cycle_graph(5), random_regular_graph(6, 3, 0)])
def test_oracle_preparation(graph):
    asg = hopping_model(graph).assignment()
    lay = ModeLayout(graph.n_vertices, asg.nu)
    prep = prepare_aux_oracle(lay, asg)
    assert all(abs(v - 1) < 1e-10 for v in prep.expectations.values())
    assert set(prep.signs) == set(asg.edges)
    assert prep.sector_dimension == aux_sector_dimension(lay, asg)


@pytest.mark.parametrize("seed", range(8))
def test_measured_preparation_and_replay(seed):
    g = cycle_graph(5)
    asg = hopping_model(g).assignment()
    lay = ModeLayout(5, asg.nu)
    meas = prepare_aux_measured(lay, asg, seed)
    assert all(abs(v - 1) < 1e-10 for v in meas.expectations.values())
    replay = prepare_aux_oracle(lay, asg, branches=dict(meas.outcomes))
    assert replay.signs == meas.signs
    assert fidelity(replay.joint, meas.joint) == pytest.approx(1, abs=1e-10)


def test_measured_preparation_is_seed_deterministic():
    asg = hopping_model(cycle_graph(4)).assignment()
    lay = ModeLayout(4, asg.nu)
    a = prepare_aux_measured(lay, asg, 11)
    b = prepare_aux_measured(lay, asg, 11)
    assert a.outcomes == b.outcomes
    np.testing.assert_array_equal(a.joint.amplitudes, b.joint.amplitudes)


def _fh4():
    model = fermi_hubbard_model(cycle_graph(4), 1.0, 1.3)
    asg = model.assignment()
    return model, asg, model.layout(asg)


def test_equivalence_on_four_cycle():
    model, asg, lay = _fh4()
    psi = StateVector.random(4, rng(6))
    rep = equivalence_check(model, lay, asg, psi, 0.41, 4)
    assert rep.per_term_fidelity > 1 - 1e-10
    assert rep.full_fidelity > 1 - 1e-10
    assert rep.aux_invariance < 1e-8
    assert rep.stabilizer_drift < 1e-8


def test_corrupted_sign_breaks_equivalence():
    model, asg, lay = _fh4()
    prep = prepare_aux_oracle(lay, asg)
    bad = dict(prep.signs)
    bad[(1, 2)] = -bad[(1, 2)]
    rep = equivalence_check(model, lay, asg, StateVector.random(4, rng(7)), 0.41, 4, prep=prep, signs=bad)
    assert rep.full_fidelity < 0.99


def test_lambda_on_code_space():
    model, asg, lay = _fh4()
    prep = prepare_aux_oracle(lay, asg)
    enc = encode_hamiltonian(model, lay, asg.with_signs(prep.signs))
    lam_enc = commutator_lambda(enc.layers, lay.n_qubits, code_space_basis(lay, asg, prep.signs))
    lam_phys = commutator_lambda(physical_layers(enc), 4)
    assert lam_phys > 0.1
    assert lam_enc == pytest.approx(lam_phys, abs=1e-8)


def test_projector_is_rank_of_code_space():
    model, asg, lay = _fh4()
    proj = stabilizer_projector(lay, asg, prepare_aux_oracle(lay, asg).signs)
    rank = round(np.trace(proj).real)
    assert rank == (1 << lay.n_sites) * aux_sector_dimension(lay, asg)


def test_trace_distance_pure():
    v = np.array([1, 0], dtype=complex)
    assert trace_distance_pure(v.reshape(2, 1), v) == pytest.approx(0)
    w = np.array([0, 1], dtype=complex)
    assert trace_distance_pure(w.reshape(2, 1), v) == pytest.approx(1)


def test_check_line_format():
    assert check_line("x", 1.5e-13, 1e-10, True) == "CHECK x 1.5e-13 1e-10 PASS"
    assert check_line("y", 2, 1, False).endswith("FAIL")


def test_code_space_basis_spans_projector_range():
    model, asg, lay = _fh4()
    signs = prepare_aux_measured(lay, asg, seed=3).signs
    v = code_space_basis(lay, asg, signs)
    assert np.allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-10)
    assert np.allclose(v @ v.conj().T, stabilizer_projector(lay, asg, signs), atol=1e-10)
