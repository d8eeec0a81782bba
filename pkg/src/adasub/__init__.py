"""Adaptive submodular optimization: greedy policies, bounds and exact checks."""

from .bounds import BoundCertificate, bound_trace, opt_upper_bound
from .cascade import CascadeGraph, CascadeObjective, CascadePrior
from .errors import (AdasubError, AlreadySelected, Exhausted, InconsistentObservation,
                     InfeasibleQuota, InstanceError, MalformedPolicy, SupportTooLarge, TooLarge,
                     UnknownItem)
from .greedy import (Engine, LazyQueue, PolicyMetrics, PolicyNode, PolicyTree, SelectionRule,
                     StoppingRule, build_policy, evaluate_policy, execute_policy, greedy_step,
                     lazy_greedy_step)
from .io import Instance, instance_from_dict, instance_to_dict, load_instance, save_instance
from .model import (EMPTY, IndependentPrior, Item, PartialRealization, Prior, TabularPrior,
                    condition, consistent, enumerate_support, point_mass_prior, sample)
from .objectives import (Backend, CoverageObjective, Evaluator, MarginalBenefit, Objective,
                         SetFunctionObjective, VersionSpaceObjective, expected_value, f_max,
                         make_deterministic, marginal, value)
from .verify import (CheckReport, OracleResult, check_adaptive_monotone, check_adaptive_submodular,
                     classic_greedy, oracle_cover, oracle_max)

__version__ = "0.1.0"
