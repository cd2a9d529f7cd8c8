"""poolblend: pooling-network modeling and global optimization toolkit.

Build a layered blending network, generate its flow model, relax it with
McCormick envelopes strengthened by pooling-specific valid inequalities,
find incumbents through a mixed-binary restriction, and close the gap with
spatial branch & cut.  Instance generators and a benchmark harness round
the package out.
"""

from .network import Edge, Network, Node, NodeLayer
from .model import (
    BilinearTerm,
    Constraint,
    Domain,
    LinearExpr,
    Model,
    Sense,
    Variable,
)
from .pq import (
    IndexSets,
    PQModel,
    build_pq,
    index_set_il,
    index_set_ilj,
    index_set_ij,
    index_set_jk,
    index_set_lj,
    rebuild,
)
from .mccormick import EnvelopeEntry, RelaxedModel, refresh_bounds, relax
from .cuts import (
    CutBlock,
    TripletParams,
    add_all_pooling_inequalities,
    add_valid_cuts,
    generate_valid_cuts,
)
from .restriction import (
    RestrictedModel,
    RestrictionSpec,
    RestoredSolution,
    derive_fractional_flows,
    install_restriction,
    uninstall_restriction,
)
from .simplex import LPResult, LPStatus, solve_lp
from .solve import (
    GapSpec,
    MIPResult,
    SolveOptions,
    SolveReport,
    branch_and_cut,
    initial_primal_search,
    relative_gap,
    solve_mip,
)
from .generate import GenSpec, generate_instance
from .bench import (
    CONFIGS,
    ProfilePoint,
    RunRecord,
    performance_profile,
    run_batch,
    shifted_geomean,
)
from . import instances

__version__ = "1.0.0"
