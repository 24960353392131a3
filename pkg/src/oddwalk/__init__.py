"""Odd-power return probabilities, the spectrum of P at -1 and eps-bipartite balls
on finite weighted graphs."""

from .eps import (
    BipartiteCertificate,
    EpsBall,
    EpsView,
    bipartition,
    eps_ball,
    eps_boundary,
    eps_distance,
    eps_view,
    odd_walk_oracle,
    parity_partition_of_ball,
)
from .generators import GraphSpec, generate, lazify, parse_spec
from .graph import (
    GraphConstants,
    GraphError,
    WeightedGraph,
    apply_laplacian,
    apply_markov,
    build_graph,
    kernel_entry,
    local_finiteness_degree,
    lp_norm,
    read_edge_list,
)
from .kernel import (
    IteratedKernel,
    closed_path_product_check,
    diag_mass,
    dvl_p2_check,
    iterate_kernel,
    lb_infimum,
)
from .riesz import (
    QuasiDistance,
    SubgaussianFit,
    gaffney_check,
    generalized_gradient,
    gradient,
    half_inverse_laplacian,
    kernel_domination_check,
    lemma_pdv_check,
    power_quasidistance,
    riesz_norm,
    sigma_rescale,
    ue_fit,
    validate_quasidistance,
)
from .spectral import (
    SpectralReport,
    WitnessFunction,
    analyticity_constants,
    build_witness,
    defect_bound_check,
    equivalence_report,
    gap_at_minus_one,
    spectrum,
)
from .volume import (
    BallRecord,
    GrowthFit,
    ball_volume,
    find_small_boundary_ball,
    fit_growth,
    implication_check,
)

__version__ = "0.1.0"

__all__ = [
    "BallRecord",
    "BipartiteCertificate",
    "EpsBall",
    "EpsView",
    "GraphConstants",
    "GraphError",
    "GraphSpec",
    "GrowthFit",
    "IteratedKernel",
    "QuasiDistance",
    "SpectralReport",
    "SubgaussianFit",
    "WeightedGraph",
    "WitnessFunction",
    "analyticity_constants",
    "apply_laplacian",
    "apply_markov",
    "ball_volume",
    "bipartition",
    "build_graph",
    "build_witness",
    "closed_path_product_check",
    "defect_bound_check",
    "diag_mass",
    "dvl_p2_check",
    "eps_ball",
    "eps_boundary",
    "eps_distance",
    "eps_view",
    "equivalence_report",
    "find_small_boundary_ball",
    "fit_growth",
    "gaffney_check",
    "gap_at_minus_one",
    "generalized_gradient",
    "generate",
    "gradient",
    "half_inverse_laplacian",
    "implication_check",
    "iterate_kernel",
    "kernel_domination_check",
    "kernel_entry",
    "lazify",
    "lb_infimum",
    "lemma_pdv_check",
    "local_finiteness_degree",
    "lp_norm",
    "odd_walk_oracle",
    "parity_partition_of_ball",
    "parse_spec",
    "power_quasidistance",
    "read_edge_list",
    "riesz_norm",
    "sigma_rescale",
    "spectrum",
    "ue_fit",
    "validate_quasidistance",
]
