"""Label propagation clustering on sparse graphs."""

from ._accel import JIT_ENABLED, backend_name
from .cover import Cover
from .engine import RunConfig, RunResult, active_passive_run, check_equilibrium, derive_seeds, run, run_many
from .generators import (block_model, erdos_renyi, karate_club, nested_planted_partition, overlapping_cliques,
                         planted_partition, split_grid, triangular_grid)
from .graph import (Coloring, Graph, GraphError, Partition, build_graph, connected_components, from_arrays,
                    greedy_coloring, induced_subgraph, is_refinement, meet, quotient_graph, signed_reweight,
                    split_into_components)
from .objectives import (cut_weight, degeneracy_stats, hamiltonian, modularity_q, nmi, objective_f,
                         objective_report, penalty)
from .pipelines import (Hierarchy, Method, consensus, copra, defensive_then_offensive, hierarchy_agglomerate,
                        hierarchy_refine, memory_lpa, two_step_equivalence)
from .rules import Rule, RuleError, apm_lambda

__version__ = "0.1.0"

__all__ = [
    "JIT_ENABLED", "backend_name", "Cover", "RunConfig", "RunResult", "active_passive_run",
    "check_equilibrium", "derive_seeds", "run", "run_many", "block_model", "erdos_renyi", "karate_club",
    "nested_planted_partition", "overlapping_cliques", "planted_partition", "split_grid", "triangular_grid",
    "Coloring", "Graph", "GraphError", "Partition", "build_graph", "connected_components", "from_arrays",
    "greedy_coloring", "induced_subgraph", "is_refinement", "meet", "quotient_graph", "signed_reweight",
    "split_into_components", "cut_weight", "degeneracy_stats", "hamiltonian", "modularity_q", "nmi",
    "objective_f", "objective_report", "penalty", "Hierarchy", "Method", "consensus", "copra",
    "defensive_then_offensive", "hierarchy_agglomerate", "hierarchy_refine", "memory_lpa",
    "two_step_equivalence", "Rule", "RuleError", "apm_lambda",
]
