"""Max-entropy duals, LP/SDP log-barrier identities and fiber densities of
linear moment maps, with independent numerical oracles."""

from .errors import *  # noqa: F401,F403
from .maxent_core import (  # noqa: F401
    BoxQuadrature,
    DualResult,
    LPOrthant,
    MaxentProblem,
    SDPCone,
    SolverOptions,
    Status,
    log_partition,
    log_partition_derivatives,
    optimal_density_at,
    solve_dual,
    theta_and_perspective,
)

__version__ = "0.1.0"
