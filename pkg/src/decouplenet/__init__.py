"""Almost-decoupling of weighted directed topologies and consensus analysis of
linear multi-agent systems over switching graphs."""
from .consensus import (
    AgentSystem,
    ConsensusVerdict,
    SimulationTrace,
    check_consensus,
    decouple_schedule,
    eta,
    hurwitz_check,
    robustness_probe,
    robustness_sweep,
    simulate,
    simulate_decoupled,
    subsystem_stability_probe,
    swarm_deviation,
)
from .decoupler import (
    DecoupledSystem,
    DiagonalizabilityReport,
    PerturbationResult,
    assess_diagonalizability,
    construct_perturbation,
    decouple,
)
from .estimator import AlmostDecoupler
from .graph import (
    TopologySchedule,
    WeightedDigraph,
    graph_at,
    has_spanning_tree,
    laplacian,
    spanning_tree_gap_intervals,
)
from .linalg import (
    Polynomial,
    SchurForm,
    char_poly,
    discriminant,
    eigenvalues,
    frobenius_distance,
    resultant,
    schur_decompose,
    solve_min_norm,
)

__version__ = "0.1.0"
