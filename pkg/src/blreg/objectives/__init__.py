from .base import BaseObjective, Evaluation, ProblemConfig
from .deformation import DeformationObjective
from .state import StateObjective

__all__ = [
    "BaseObjective",
    "Evaluation",
    "ProblemConfig",
    "StateObjective",
    "DeformationObjective",
]
