"""Fusion of estimates with unknown cross-covariances.

Bayesian Monte Carlo MMSE fusion under a Wishart prior on the joint
covariance, with covariance intersection and full-information optimal
fusion as baselines.
"""

from .blocks import DiagonalBlocks, JointCovariance, OffDiagonalBlocks, assemble, split
from .errors import (
    DimensionMismatch,
    DomainError,
    FusionError,
    InvalidDof,
    NotPositiveDefinite,
    OutOfSupport,
    SingularDenominator,
    WeightSumError,
)
from .fusion import (
    Estimate,
    FusedEstimate,
    bayesian_mc_fusion,
    ci_fusion,
    fast_ci_fusion,
    fast_ci_weights,
    optimal_fusion,
    optimal_weights,
    two_node_fusion,
)
from .rng import RandomStream

__version__ = "0.1.0"
