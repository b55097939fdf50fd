"""Bergman kernels, metrics, and Berezin statistical models on bounded domains.

Constructs Bergman kernels (closed-form, Laurent, or numerically
orthonormalized), evaluates the Bergman metric and its pullbacks, builds the
Berezin probability model with its moments, and verifies the variance-based
Schwarz inequality, its equality characterization, gradient-norm identities,
and boundary constancy values at desk scale.
"""

from .berezin import (BerezinDensity, MomentResult, covariance, density, dlogP, expectation,
                      fisher_pullback, normalization_residual, reproducing_check, variance)
from .domains import (Annulus, Ball, DomainSpec, General, Polydisc, Product, TangentVector,
                      as_point, bidisc, contains, domain_from_json, unit_disc)
from .gradient import (BoundaryScan, RepImage, boundary_constancy_scan, grad_logP_norm,
                       invariance_check, rep_equality_check, representative_map)
from .kernels import (BasisPair, KernelHandle, closed_form_kernel, laurent_kernel,
                      numeric_kernel, separates_points_check, special_basis)
from .maps import MapError, MapSpec, constant_map, identity_map, mobius_automorphism
from .metric import (MetricTensor, finite_difference_check, metric_at, metric_norm_sq,
                     metric_pair, oneform_norm)
from .quadrature import QuadRule, build_rule, integrate, pairwise_sum
from .scenarios import (Report, ScenarioError, builtin_scenario, list_builtin, run_scenario)
from .schwarz import (DomainContext, EqualityReport, GlobalComparison, GlobalConstant,
                      SchwarzRecord, SuzukiReport, analytic_gradient_sup, builtin_map_suite,
                      equality_classifier, global_constant, make_context, pullback_metric,
                      suzuki_condition_check, variance_bound, verify_global, verify_pointwise)

__version__ = "0.1.0"
