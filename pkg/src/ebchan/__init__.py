"""Construction and analysis of entanglement breaking quantum channels.

Builds channels with prescribed nullspaces, tests channels for mixed-unitary
structure through their canonical complements, and constructs private
algebras from multiplicative-domain projections.
"""

from .operator_core import (
    Tolerance,
    DEFAULT_TOL,
    OperatorSubspace,
    trace_inner_product,
    orthonormalize,
    orthogonal_complement,
    kernel_of_linear_map,
    projection_onto_span,
    zero_subspace,
    full_subspace,
    traceless_subspace,
)
from .channel import (
    Channel,
    KrausMap,
    HolevoForm,
    ChannelReport,
    dual,
    holevo_to_kraus,
    canonical_complement,
    diagonal_range_to_holevo,
    eb_check,
    identity_channel,
    depolarizing,
    werner_holevo3,
    spontaneous_emission,
    biunitary,
    mixed_unitary_channel,
    builtin_channel,
    haar_unitary,
    random_density,
    random_channel,
)
from .nullspace import (
    SynthesisRecipe,
    channel_nullspace,
    synthesize_annihilator,
    biunitary_nullspace,
)
from .mixed_unitary import (
    MixedUnitaryDecomposition,
    ObstructionReport,
    traceless_complement_range,
    verify_diag_zero_isometry,
    obstruction_report,
    search_mixed_unitary,
    build_privatizing_channel,
    mixing_isometry,
)
from .privacy import (
    KrausPartition,
    PrivatizationCertificate,
    is_projection_in_mult_domain,
    kraus_partition,
    offdiag_annihilation_check,
    rank_one_private_algebra,
    constant_diagonal_algebra,
    same_rank_private_algebra,
    example_family,
    verify_private,
)

__version__ = "0.1.0"
