"""Symmetrization cost of quantum states under finite-group symmetries."""

from .core import (
    DEFAULT_CAP,
    DEFAULT_TOL,
    PLUS_INFINITY,
    DensityOperator,
    ProbabilityVector,
    ToleranceConfig,
    fannes_bound,
    fannes_eta,
    hermitian_eig,
    jacobi_eigh,
    pure_state,
    relative_entropy,
    shannon_entropy,
    trace_distance,
    trace_norm,
    von_neumann_entropy,
)
from .errors import *  # noqa: F401,F403
from .group_rep import (
    FiniteGroup,
    GroupRep,
    SymmetricBasis,
    TwirlChannel,
    collective_twirl,
    is_symmetric,
    is_symmetry_preserving,
    make_cyclic_rep,
    make_explicit_rep,
    product_rep,
    symmetric_basis,
    twirl,
)
from .measures import collective_ref_series, lemma_entropy_invariance_check, ref_closed_form, ref_variational
from .protocol import (
    UnitaryEnsemble,
    chernoff_bound_trial,
    converse_audit,
    exhaustive_ensemble,
    rate_sweep,
    residual_asymmetry,
    sample_ensemble,
)
from .typicality import typical_projector, typical_set

__version__ = "0.1.0"
