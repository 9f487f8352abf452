"""Desk-scale laboratory for spectral gaps of verifier circuits, clock
Hamiltonians, estimators, phase estimation, and configuration-graph spectra."""

from .circuits import (
    AcceptOperator,
    GateOp,
    PromiseParams,
    VerifierCircuit,
    accept_operator,
    apply_circuit,
    classical_witness_extend,
    distinct_prob_transform,
    flag_qubit_transform,
    gate,
    read_circuit,
    uqcma_query_schedule,
    write_circuit,
)
from .clock import (
    ClockHamiltonian,
    HistoryState,
    build_clock,
    epsilon_schedule,
    history_state,
    predicted_spectrum,
    unperturbed_gap,
)
from .configgraph import (
    ConfigGraph,
    ModifiedGraph,
    ReversibleTM,
    ata_spectrum,
    block_spectra,
    build_config_graph,
    characteristic_poly,
    modify_graph,
    no_case_gap_check,
    read_tm,
)
from .estimators import (
    CoolingPlan,
    DecisionOutcome,
    PowerPlan,
    asymmetric_decide,
    choose_power,
    cooling_decide,
    decide_power,
    postqma_margin,
    thermal_expectation,
    trace_power,
)
from .linalg import SparseHermitian, read_coo, write_coo
from .phase_estimation import (
    PhaseEstPlan,
    choose_time,
    convex_energy_bound,
    gs_description_verify,
    min_accept_gap,
    one_bit_pe_accept,
    pe_gap_bound,
)
from .schrieffer_wolff import (
    PerturbationSplit,
    effective_hamiltonian,
    low_energy_projector,
    split_from_parts,
    sw_unitary,
    truncation_error_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
