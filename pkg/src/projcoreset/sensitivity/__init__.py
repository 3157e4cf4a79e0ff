from .bounds import ConditionedBasis, conditioned_basis, hyperplane_bounds, sens_kcenters, sens_subspace
from .lowerbound import lowerbound_instance, lowerbound_ratios, lowerbound_table, lowerbound_total
from .oracle import exact_sensitivity_oracle, sens_empirical
from .profile import SensitivityProfile
from .reduction import ReducedInstance, reduce

__all__ = [
    "ConditionedBasis",
    "ReducedInstance",
    "SensitivityProfile",
    "conditioned_basis",
    "exact_sensitivity_oracle",
    "hyperplane_bounds",
    "lowerbound_instance",
    "lowerbound_ratios",
    "lowerbound_table",
    "lowerbound_total",
    "reduce",
    "sens_empirical",
    "sens_kcenters",
    "sens_subspace",
]
