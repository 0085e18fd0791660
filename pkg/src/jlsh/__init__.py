"""LSH families for the angular distance built from random projections.

Dense Gaussian, dense random-sign and sparse feature-hashing projections
feed two generic minhash constructions (argmax and sign pattern), with
an amplification calculus, a multi-table index, and an experiment
harness. See README.md for the CLI and the acceptance suite.
"""

__version__ = "0.1.0"

from ._backend import active_backend
from .core import (
    DimensionError,
    DistanceKind,
    DomainError,
    DuplicateIdError,
    FormatError,
    InfeasibleError,
    JlshError,
    UsageError,
    ZeroNormError,
    distance,
    dot,
    norm,
    normalize,
    sample_pair_at_angle,
    sample_unit_vector,
)
from .projections import (
    DenseProjection,
    ExplicitFhMapping,
    SparseSignedProjection,
    apply,
    apply_with_mapping,
    fh_norm_scale_estimate,
    make_feature_hashing,
    make_gaussian,
    make_sign_dense,
    materialize,
)
from .families import (
    CrossPolytope,
    DirectionalFH,
    FastCrossPolytope,
    FeatureHashing,
    Hyperplane,
    MinhashFamily,
    Voronoi,
    argmax_hash,
    cross_polytope_hash,
    family_hash,
    family_range,
    format_family,
    hyperplane_collision_prob,
    parse_family,
    sign_hash,
)
from .amplify import (
    AmplifiedScheme,
    SensitivityTarget,
    amplified_probability,
    estimate_base_probability,
    neutral_deviation,
    solve_parameters,
)
from .index import (
    LshIndex,
    QueryStats,
    build_index,
    load_index,
    occupancy_report,
    query_candidates,
    query_knn,
    save_index,
)

__all__ = [name for name in dir() if not name.startswith("_")]
