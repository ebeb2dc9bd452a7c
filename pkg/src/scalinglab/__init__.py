"""Numerical laboratory for Kobayashi geometry and the scaling method on
strongly pseudoconvex domains in C^N.

Submodules
----------
linalg          complex vectors/operators: Gram-Schmidt, polar, Loewner order
domains         defining functions, Levi forms, boundary normalization
kobayashi       metric/distance brackets, localization estimates
automorphisms   ball Moebius group, Cayley transform, orbit schedules
scaling         per-index stages, calibrated scaling sequences, diagnostics
lemmas          verification suites and the full theorem replay
runner          JSON-config experiment driver and CLI
"""

from .automorphisms import OrbitSchedule, ball_mobius, cayley, orbit_to_boundary
from .domains import (
    DefiningFunction,
    DomainSpec,
    NormalizedDomain,
    PeakFunction,
    ball_domain,
    ellipsoid_domain,
    enclosing_ball,
    is_strongly_pseudoconvex,
    levi_form,
    linear_peak,
    make_domain,
    normalize_at,
    peak_verify,
    perturbed_ball_domain,
    ray_boundary_point,
    siegel_domain,
)
from .holomap import HoloMap, compose, identity_map
from .kobayashi import (
    AnalyticDisc,
    MetricEstimate,
    ball_distance,
    ball_metric,
    distance,
    kobayashi_ball_membership,
    localization_check,
    metric_lower,
    metric_upper,
    poincare_u,
    poincare_u_inv,
    sample_kobayashi_ball,
)
from .lemmas import (
    IterationTrace,
    SelfMapFamily,
    ball_convergence_check,
    disc_lemma_check,
    empirical_delta,
    invert_by_iteration,
    linear_contraction_family,
    main_theorem_pipeline,
    mobius_unitary_family,
    surjectivity_radius,
)
from .linalg import flag_preserving, gram_schmidt, operator_geq, polar_decompose
from .report import Report, ReportEntry
from .scaling import (
    ScalingStage,
    ScalingState,
    build_L,
    build_stage,
    calibrate,
    compose_pipeline,
    hausdorff_to_siegel,
    run_ball_pipeline,
    run_synthetic_pipeline,
    scaling_diagnostics,
    schedule_radius,
)

__version__ = "0.1.0"
