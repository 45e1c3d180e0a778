"""Local qubit encodings of fermionic Hamiltonians with auxiliary modes."""

from .pauli import PauliSum, PauliTerm, commutes, format_term, parse_term, pauli_mul, weight
from .fermion import MajoranaLabel, ModeLayout, jw_string, lowering, majorana, number_op, raising
from .stabilizers import (
    InteractionGraph,
    InteractionHypergraph,
    LayerAssignment,
    assign_layers,
    build_stabilizer,
    edge_color,
    layer_assignment,
)
from .encoder import EncodedHamiltonian, FermionTerm, encode_hamiltonian
from .models import FermionModel, fermi_hubbard_model, random_regular_graph, sparse_syk_model

__version__ = "0.1.0"
