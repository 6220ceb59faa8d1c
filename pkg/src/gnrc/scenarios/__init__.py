"""Built-in example families with analytic oracles."""

from .graphlike import GraphLikeBuild, GraphLikeScenario, build_graphlike
from .multiplication import (
    MultiplicationBuild,
    MultiplicationScenario,
    build_multiplication,
    example_a,
    example_b,
    mult_sup_conditions,
    named_example,
    weidmann_exercise,
)
from .unit_interval import (
    UnitIntervalBuild,
    UnitIntervalLimit,
    UnitIntervalScenario,
    build_unit_interval,
    eigenvalue_convergence,
    unit_interval_norm_table,
    winfty_order_experiment,
)

FAMILIES = {
    "multiplication": "multiplication operators on subsets of a common grid "
                      "(examples A, B, weidmann); natural parent",
    "unit_interval": "path graphs with hat-function identification converging to "
                     "the Neumann Laplacian on [0, 1]; associated parent",
    "graphlike": "thin tubes around a star graph, bumpy or embedded; "
                 "associated parent of the normalized identification",
}

__all__ = [
    "FAMILIES",
    "GraphLikeBuild",
    "GraphLikeScenario",
    "MultiplicationBuild",
    "MultiplicationScenario",
    "UnitIntervalBuild",
    "UnitIntervalLimit",
    "UnitIntervalScenario",
    "build_graphlike",
    "build_multiplication",
    "build_unit_interval",
    "eigenvalue_convergence",
    "example_a",
    "example_b",
    "mult_sup_conditions",
    "named_example",
    "unit_interval_norm_table",
    "weidmann_exercise",
    "winfty_order_experiment",
]
