"""Continuous-time quantum walks and Markov chains from 2-adic Schrodinger equations."""

from .errors import ContractError, ModelParseError, NumericalContractError
from .evolution import (
    HeatGenerator,
    SpectralDecomposition,
    TransitionMatrix,
    born_transitions,
    heat_evolve,
    heat_generator,
    propagate,
    spectral_decompose,
    transition_matrix,
)
from .functions import TestFunction, embed, inner_product, project_average
from .model import ModelSpec, parse_model, write_model
from .operators import (
    AdjacencyMatrix,
    BiWeights,
    HermitianHamiltonian,
    RadialProfile,
    biweighted_hamiltonian,
    convolution_hamiltonian,
    discretize_kernel,
    graph_hamiltonian,
    hermiticity_defect,
    vladimirov_indicator,
)
from .padic import BallIndex, SupportSet, refine_indices, ultra_distance, valuation2
from .scaling import RefinementReport, convergence_study, refine_hamiltonian

__version__ = "0.1.0"
