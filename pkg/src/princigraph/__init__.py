"""Elastic principal graphs grown by topological grammars."""

from .energy import (DataSet, Partition, approximation_energy, graph_energy,
                     star_spring_decomposition, total_energy)
from .estimator import ElasticPrincipalGraph
from .factorized import FactorizedModel, apply_to_factor, enumerate_factor_applications, grow_complex
from .grammar import (Application, GrowthConfig, Moduli, apply, enumerate_applications,
                      evaluate_application, grow, preselect)
from .graph import (Edge, ElasticGraph, ProductGraph, Star, cartesian_product, copies_of_factor,
                    derive_primitive_stars, expand)
from .optimizer import (FitReport, SolverConfig, assemble_system, fit, partition_data,
                        pca_initialize, solve_embedding)

__version__ = "0.1.0"

__all__ = [
    "Application", "DataSet", "Edge", "ElasticGraph", "ElasticPrincipalGraph", "FactorizedModel",
    "FitReport", "GrowthConfig", "Moduli", "Partition", "ProductGraph", "SolverConfig", "Star",
    "apply", "apply_to_factor", "approximation_energy", "assemble_system", "cartesian_product",
    "copies_of_factor", "derive_primitive_stars", "enumerate_applications",
    "enumerate_factor_applications", "evaluate_application", "expand", "fit", "graph_energy",
    "grow", "grow_complex", "partition_data", "pca_initialize", "preselect", "solve_embedding",
    "star_spring_decomposition", "total_energy",
]
