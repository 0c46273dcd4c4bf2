"""Finite-graph Bose-Hubbard thermal states and their classical (mean-field)
limit: exact Fock-space computations, classical Gibbs measures, and harnesses
that measure how fast the quantum quantities approach the classical ones."""

from .graph import Graph, GraphError, complete, cycle, parse_graph, path
from .fock import (
    FockBasis,
    FockOperator,
    ModelParams,
    bose_hubbard_hamiltonian,
    weyl_operator,
)
from .thermal import GibbsState, expectation, gibbs_state, kms_pair

__version__ = "0.1.0"
