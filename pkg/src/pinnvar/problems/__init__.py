"""Benchmark problems behind a single interface."""

from .base import Domain, Problem, TrainDefaults
from .poisson import (
    PoissonProblem,
    poisson_ansatz,
    poisson_reference,
    poisson_residual,
    poisson_source,
)
from .burgers import (
    BurgersProblem,
    burgers_ansatz,
    burgers_reference,
    burgers_residual,
    VISCOSITY,
)
from .elasticity import (
    ElasticityParams,
    ElasticityProblem,
    elasticity_ansatz,
    elasticity_body_force,
    elasticity_residuals,
    manufactured_fields,
)

_REGISTRY = {
    "poisson": PoissonProblem,
    "burgers": BurgersProblem,
    "elasticity": ElasticityProblem,
}


def get_problem(name):
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose from {sorted(_REGISTRY)}"
        ) from None


def problem_names():
    return sorted(_REGISTRY)

__all__ = [
    "Domain", "Problem", "TrainDefaults",
    "PoissonProblem", "BurgersProblem", "ElasticityProblem",
    "ElasticityParams", "poisson_ansatz", "poisson_reference",
    "poisson_residual", "poisson_source", "burgers_ansatz",
    "burgers_reference", "burgers_residual", "VISCOSITY",
    "elasticity_ansatz", "elasticity_body_force", "elasticity_residuals",
    "manufactured_fields",
    "get_problem", "problem_names",
]
