"""Sensitivity-sampling coresets for projective clustering."""

from .coreset import Coreset, CoresetPlan, draw, mix_floor, plan_size, uniform_profile
from .errors import CapabilityError, CoresetError, InputError
from .evaluation import evaluate
from .fitters import FitResult, exact_fit, fit, fit_jflat, fit_kcenters, fit_kflats, fit_klines
from .geometry import (
    DistanceConfig,
    JFlat,
    KJFlatSet,
    KLineSet,
    KPointSet,
    PointSet,
    cost,
    dist_point_shape,
    project_set,
)
from .sensitivity import (
    SensitivityProfile,
    conditioned_basis,
    exact_sensitivity_oracle,
    lowerbound_instance,
    reduce,
    sens_empirical,
    sens_kcenters,
    sens_subspace,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "Coreset",
    "CoresetError",
    "CoresetPlan",
    "DistanceConfig",
    "FitResult",
    "InputError",
    "JFlat",
    "KJFlatSet",
    "KLineSet",
    "KPointSet",
    "PointSet",
    "SensitivityProfile",
    "conditioned_basis",
    "cost",
    "dist_point_shape",
    "draw",
    "evaluate",
    "exact_fit",
    "exact_sensitivity_oracle",
    "fit",
    "fit_jflat",
    "fit_kcenters",
    "fit_kflats",
    "fit_klines",
    "lowerbound_instance",
    "mix_floor",
    "plan_size",
    "project_set",
    "reduce",
    "sens_empirical",
    "sens_kcenters",
    "sens_subspace",
    "uniform_profile",
]
