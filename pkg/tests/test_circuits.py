import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from auxferm.circuits import (
    Gate,
    GateSchedule,
    controlled_pauli,
    cz_fanout,
    full_depth_report,
    ordered_prep_schedule,
    parity_tree,
    pauli_gadget,
    permutation_cost,
    tilde_ops,
    trotter_step_schedule,
)
from auxferm.encoder import encode_hamiltonian
from auxferm.fermion import ModeLayout, majorana_c, majorana_d
from auxferm.models import cycle_graph, fermi_hubbard_model, random_regular_graph
from auxferm.pauli import PauliSum, PauliTerm
from auxferm.sim import StateVector, apply_schedule, expectation, operator_distance, schedule_unitary, trotter_evolve

N_Q = 5
letters_st = st.dictionaries(st.integers(0, N_Q - 1), st.sampled_from("XYZ"), min_size=1, max_size=N_Q)


@given(letters_st, st.sampled_from([1, -1]), st.floats(0.1, 2.0), st.floats(-3, 3))
@settings(max_examples=60, deadline=None)
def test_gadget_unitary(letters, sign, coeff, angle):
    p = PauliTerm.from_dict(letters, sign, coeff)
    got = schedule_unitary(pauli_gadget(p, angle), N_Q)
    want = expm(-1j * angle * p.to_matrix(N_Q))
    assert operator_distance(got, want) < 1e-10


def test_gadget_identity_term_is_phase():
    s = pauli_gadget(PauliTerm.identity(0.5), 0.3)
    assert s.depth == 0 and s.global_phase == pytest.approx(-0.15)


def test_gadget_rejects_antihermitian():
    with pytest.raises(ValueError):
        pauli_gadget(PauliTerm.from_dict({0: "X"}, 1j), 0.1)


@pytest.mark.parametrize("w", [1, 2, 3, 4, 5, 8])
@pytest.mark.parametrize("pattern", ["X", "XY", "YZX"])
def test_gadget_depth_is_logarithmic(w, pattern):
    p = PauliTerm.from_dict({q: pattern[q % len(pattern)] for q in range(w)})
    assert pauli_gadget(p, 0.1).depth == 2 * math.ceil(math.log2(w))


def test_barrier_separates_segments():
    a = GateSchedule.from_gates([Gate("CX", (0, 1))])
    b = GateSchedule.from_gates([Gate("CX", (2, 3))])
    assert a.then(b).depth == 2
    assert GateSchedule.from_gates(a.gates + b.gates).depth == 1


@pytest.mark.parametrize("n_targets", [1, 2, 3, 5, 8])
def test_cz_fanout(n_targets):
    targets = list(range(1, n_targets + 1))
    s = cz_fanout(0, targets)
    n = n_targets + 1
    want = np.eye(1 << n, dtype=complex)
    for t in targets:
        want = want @ np.diag([-1 if (k & 1) and (k >> t) & 1 else 1 for k in range(1 << n)])
    assert operator_distance(schedule_unitary(s, n), want) < 1e-10
    assert s.depth == 2 * math.ceil(math.log2(n_targets)) + 1


def test_cz_fanout_rejects_control_in_targets():
    with pytest.raises(ValueError):
        cz_fanout(1, [1, 2])


@pytest.mark.parametrize("on_zero", [False, True])
@pytest.mark.parametrize("phase", [1, -1, 1j, -1j])
def test_controlled_pauli(on_zero, phase):
    p = PauliTerm.from_dict({1: "X", 2: "Y", 3: "Z"}, phase)
    u = schedule_unitary(controlled_pauli(0, p, on_zero), 4)
    pm = p.to_matrix(4)
    proj1 = np.diag([k & 1 for k in range(16)]).astype(complex)
    proj0 = np.eye(16) - proj1
    active, idle = (proj0, proj1) if on_zero else (proj1, proj0)
    assert operator_distance(u, active @ pm + idle) < 1e-10


def test_parity_tree_collects_parity():
    gates = parity_tree([0, 1, 2, 3, 4])
    s = GateSchedule.from_gates(gates)
    assert s.depth == 3
    for k in range(32):
        out, _ = apply_schedule(StateVector.basis(5, k), s)
        idx = int(np.argmax(np.abs(out.amplitudes)))
        assert idx & 1 == bin(k).count("1") % 2


def test_schedule_rejects_overlapping_layer():
    with pytest.raises(ValueError):
        GateSchedule([[Gate("H", (0,)), Gate("CX", (0, 1))]])


def test_depth_counts_multi_qubit_layers():
    s = GateSchedule.from_gates([Gate("H", (0,)), Gate("CX", (0, 1)), Gate("H", (2,)), Gate("CZ", (1, 2))])
    assert s.depth == 2 and s.n_layers == 3 and s.multi_qubit_layers == 2
    both = s.then(s)
    assert both.depth == 4


@pytest.mark.parametrize("n, nu", [(2, 1), (4, 1), (4, 2), (6, 3)])
def test_tilde_identity(n, nu):
    lay = ModeLayout(n, nu)
    for l in range(1, nu + 1):
        for sgn in (-1j, 1j):
            full = PauliSum([PauliTerm.identity()])
            tilde = PauliSum([PauliTerm.identity()])
            for k in range(1, n // 2 + 1):
                full = full * PauliSum([majorana_c(lay, 2 * k - 1, l), majorana_d(lay, 2 * k, l).scaled(sgn)])
                c_t, d_t = tilde_ops(lay, l, k)
                tilde = tilde * PauliSum([c_t, d_t.scaled(sgn)])
            assert not (full - tilde)


@pytest.mark.parametrize("n, nu", [(4, 1), (4, 2), (5, 1), (6, 1)])
def test_ordered_prep_makes_pair_eigenstates(n, nu):
    lay = ModeLayout(n, nu)
    for l in range(1, nu + 1):
        s = ordered_prep_schedule(lay, l)
        assert s.ancilla_count == (n + 1) // 2 and s.meta["padded"] == bool(n % 2)
        nq = lay.n_qubits + (n + 1) // 2
        for seed in range(3):
            state, outcomes = apply_schedule(StateVector.zeros(nq), s, np.random.default_rng(seed))
            record = dict(outcomes)
            for k in range(1, n // 2 + 1):
                p = majorana_c(lay, 2 * k - 1, l) * majorana_d(lay, 2 * k, l) * 1j
                sign = -1 if record[lay.n_qubits + k - 1] else 1
                assert expectation(state, p).real == pytest.approx(sign, abs=1e-10)


def test_ordered_prep_depth_independent_of_n():
    depths = {ordered_prep_schedule(ModeLayout(n, 2), 2).depth for n in (4, 8, 16, 32)}
    assert len(depths) == 1


def test_permutation_cost_modes():
    a = permutation_cost(64, 3, "with_measurement", 2.0)
    assert a.depth == pytest.approx(12.0) and a.ancillas == 3 * 64 and a.kind == "formula"
    b = permutation_cost(64, 3, "without_measurement")
    assert b.depth == pytest.approx(math.log2(192) ** 2) and b.ancillas == 0
    with pytest.raises(ValueError):
        permutation_cost(64, 3, "teleport")


def _encoded(model):
    asg = model.assignment()
    return encode_hamiltonian(model, model.layout(asg), asg)


def test_trotter_step_schedule_matches_evolution():
    enc = _encoded(fermi_hubbard_model(cycle_graph(4), 1.0, 1.5))
    tau = 0.37
    step = trotter_step_schedule(enc, tau)
    n = enc.layout.n_qubits
    psi = StateVector.random(n, np.random.default_rng(4))
    got, _ = apply_schedule(psi, step)
    want = trotter_evolve(enc.layers, tau, 1, psi)
    assert np.allclose(got.amplitudes, want.amplitudes, atol=1e-10)


def test_hop_layer_depth_is_two_gadgets():
    enc = _encoded(fermi_hubbard_model(cycle_graph(4), 1.0, 0.0))
    step = trotter_step_schedule(enc, 0.1)
    # weight-4 strings: tree depth 2 each way, two strings per hopping term
    assert set(step.meta["per_color_depth"].values()) == {8}
    assert step.depth == 16


def test_depth_report_arithmetic():
    enc = _encoded(fermi_hubbard_model(random_regular_graph(8, 3, 0)))
    rep = full_depth_report(enc, steps=7)
    assert rep.total_depth() == rep.prep_depth + 7 * rep.per_step_depth
    assert rep.total_depth(0) == rep.prep_depth
    assert rep.prep_measured == 2 * rep.nu * [r for r in rep.rows if r[0].startswith("Ordered")][0][1]
    assert rep.ancilla_total == (2 * rep.nu + 1) * 8 + 4
    names = [r[0] for r in rep.rows]
    assert "Full Trotter layer exp(-i H tau)" in names
    assert rep.csv().startswith("operation,depth,ancillas,kind\n")
    with pytest.raises(ValueError):
        full_depth_report(enc, steps=-1)


def test_per_step_depth_constant_across_sizes():
    depths = set()
    for n in (8, 16, 32):
        depths.add(trotter_step_schedule(_encoded(fermi_hubbard_model(random_regular_graph(n, 3, 1), 1.0, 0.0)), 0.1).depth)
    assert len(depths) == 1
