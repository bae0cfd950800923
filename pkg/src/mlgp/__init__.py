"""Multilevel Gaussian-process emulation: nested designs, allocation, benchmarking."""
from .kernel import KernelSpec, matern_correlation, correlation_matrix, cross_correlation
from .lowdisc import DomainBox, NestedDesign, build_nested_design, halton_point, halton_points
from .gp import ModelSpec, LevelData, MultilevelEmulator, krige_fit, krige_predict, multilevel_fit, multilevel_predict
from .allocator import (BudgetProblem, CostModel, DesignStructure, PrecisionProblem, budget_allocation,
                        geometric_mf_design, precision_allocation, single_level_design)

__version__ = "0.1.0"

__all__ = [
    "KernelSpec", "matern_correlation", "correlation_matrix", "cross_correlation",
    "DomainBox", "NestedDesign", "build_nested_design", "halton_point", "halton_points",
    "ModelSpec", "LevelData", "MultilevelEmulator", "krige_fit", "krige_predict", "multilevel_fit", "multilevel_predict",
    "BudgetProblem", "CostModel", "DesignStructure", "PrecisionProblem", "budget_allocation",
    "geometric_mf_design", "precision_allocation", "single_level_design",
]
