"""Multiresolution construction and sampling of centered Gaussian Markov processes."""

__version__ = "0.1.0"

from gmschauder.basis import Basis, BasisElement, basis_for, coefficients, partial_covariance, phi, psi, psi00  # noqa: E402
from gmschauder.process import (  # noqa: E402
    BridgeLaw,
    DegenerateIncrementError,
    ProcessSpec,
    ProcessSpecError,
    bridge_law,
    covariance,
    make_custom,
    make_ou,
    make_wiener,
    parse_process,
    transition_density,
)
from gmschauder.sampler import (  # noqa: E402
    PathSample,
    SeedKey,
    conditional_expectation_path,
    refine,
    sample_by_refinement,
    sample_coefficients,
    sample_paths,
    synthesize_path,
)
from gmschauder.tree import SupportTree, general_tree, prefix_order_times, uniform_tree  # noqa: E402
