"""Monotone submodular maximization over matroids with a Poisson-clocked greedy swap process."""

from .matroid import (GraphicMatroid, OracleMatroid, PartitionMatroid, UniformMatroid,
                      base_exchange_map, greedy_max_weight_base, uniform_random_base,
                      verify_matroid_axioms)
from .poisson import RunReport, SwapDecision, run_gs_poisson
from .submodular import (CoverageFunction, ExtensionOracle, ModularFunction, ScaledBasePoint,
                         ValueOracle, exact_multilinear, gradient_at_scaled_base)

__all__ = [
    "CoverageFunction", "ExtensionOracle", "GraphicMatroid", "ModularFunction", "OracleMatroid",
    "PartitionMatroid", "RunReport", "ScaledBasePoint", "SwapDecision", "UniformMatroid",
    "ValueOracle", "base_exchange_map", "exact_multilinear", "gradient_at_scaled_base",
    "greedy_max_weight_base", "run_gs_poisson", "uniform_random_base", "verify_matroid_axioms",
]
