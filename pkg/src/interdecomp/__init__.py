"""Interaction decomposition toolkit.

Decides when a poset-indexed family of subspaces (or a poset-indexed
diagram of Hilbert spaces) splits into pairwise-orthogonal interaction
pieces, and applies the same machinery to graphical-model factor spaces
and Gaussian polynomial chaos.
"""

from .chaos import (
    ChaosError,
    GaussianModel,
    chaos_filtration,
    chaos_pieces,
    hermite_ito,
    monomial_basis,
    parse_monomial,
    wick_moment,
)
from .decomposition import (
    DecompositionResult,
    IntersectionReport,
    SubspaceFamily,
    check_intersection_property,
    decompose,
    family_from_pieces,
    interaction_subspaces,
    meet_semilattice_shortcut,
    mobius_gaps,
    mobius_projections,
)
from .diagrams import (
    DiagramError,
    IsometryDiagram,
    check_intersection_property_functor,
    decompose_functor,
    diagram_from_family,
    diagram_from_pieces,
    naturality_defect,
    validate_diagram,
)
from .gibbs import (
    DiscreteModel,
    GibbsState,
    ModelError,
    Potential,
    class_closure,
    factor_family,
    factor_subspace,
    factorization_test,
    gibbs_from_potential,
    hierarchical_subspace,
)
from .posets import (
    LowerSet,
    Poset,
    PosetError,
    antichain,
    chain,
    poset_from_json,
    poset_to_json,
    power_set,
)
from .spaces import (
    AmbientSpace,
    Subspace,
    Tolerance,
    contains,
    intersect,
    join,
    matrix_from_json,
    matrix_to_json,
    max_ambient_dim,
    span,
    subspace_eq,
)

__version__ = "0.1.0"
