"""Block space-time least-squares ReLU network method for scalar conservation laws.

The package solves u_t + div f(u) = 0 by minimizing a discrete least-squares
functional over ReLU networks, one space-time block at a time.  The interior
residual is measured by a discrete divergence operator built from composite
midpoint/trapezoidal quadrature of control-volume surface integrals, which
stays accurate across solution discontinuities.
"""

from .divergence import DivergenceConfig, classify_cells, convergence_study, div_t_1d, div_t_2d
from .flux import FluxModel, builtin_flux, custom_flux, total_flux
from .geometry import (
    BlockSpec,
    BoundaryFace,
    IntegrationMesh,
    SpaceTimeDomain,
    build_blocks,
    build_mesh,
)
from .loss import BlockLoss, BlockLossSpec, block_loss, trace_restriction
from .network import (
    MlpParameters,
    evaluate,
    evaluate_batch,
    init_first_block,
    load_checkpoint,
    loss_gradient,
    parameter_count,
    save_checkpoint,
    warm_start,
)
from .oracles import (
    ExactSolution,
    ReferenceSolution,
    characteristic_solution,
    exact_2d_burgers_reference,
    relative_l2_error,
    riemann_burgers,
    riemann_cubic_osher,
    riemann_quartic,
    weno3_rk4_reference,
)
from .quadrature import CompositeRule, RuleKind, integrate_1d, integrate_2d
from .trainer import (
    AdamState,
    BlockSolveResult,
    TrainingConfig,
    TrainingDivergence,
    adam_step,
    solve_all_blocks,
    solve_block,
)

__version__ = "0.1.0"
