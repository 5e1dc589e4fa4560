"""Optimal monotone contention resolution for uniform and partition matroids."""
from .matroids import (
    ElementSet,
    FractionalPoint,
    GroundSet,
    GroundSetMismatch,
    PartitionMatroid,
    PolytopeViolation,
    UniformMatroid,
    in_polytope,
    is_independent,
    rank,
    support,
)
from .scheme import (
    SchemeOutcome,
    SubsetDistribution,
    alpha,
    balancedness_c,
    balancedness_limit,
    enumerate_distribution,
    marginal,
    mean_on,
    partition_balancedness,
    q_weight,
    select,
    select_partition,
)

__version__ = "0.1.0"
