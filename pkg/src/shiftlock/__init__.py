"""Exact ergodic optimization on full shifts.

Cylinder functions, decay-weighted metrics, maximizing periodic orbit
measures via max-plus algebra on de Bruijn graphs, certified normal
forms, and the lock-in perturbation that makes a chosen periodic orbit
the unique optimizer of an entire norm ball.
"""

from .aseq import (
    ASequence,
    CustomTable,
    Dyadic,
    Geometric,
    TriangularDyadic,
    lacunarize,
)
from .cylinder import (
    CylinderFunction,
    NormReport,
    a_distance,
    a_distance_to_orbit,
    a_distance_to_orbit_truncated,
    a_norm,
    birkhoff_sum,
    compose_shift,
    constant,
    ergodic_average,
    index_word,
    lift_depth,
    lip_a,
    norm_report,
    sup_norm,
    tail_variation,
    variation,
    word_index,
)
from .jsonio import (
    RunManifest,
    frac_str,
    parse_frac,
    plan_from_obj,
    plan_to_obj,
    read_json,
    write_json,
)
from .lockin import (
    BackwardWalk,
    EnumerationOverflow,
    LockinConstants,
    LockinReport,
    PerturbationPlan,
    ShadowGapReport,
    TrialResult,
    adversarial_perturbation,
    backward_walk,
    build_perturbation,
    choose_k,
    constants,
    cycle_to_orbit,
    empirical_lockin_radius,
    lockin_report,
    lockin_trial,
    offcycle_distance_gap,
    sample_perturbation,
    shadow_gap_check,
)
from .maxplus import (
    CertificateError,
    DeBruijnGraph,
    MaxMeanResult,
    NormalForm,
    SubAction,
    apply_phi,
    build_graph,
    karp_max_mean,
    max_mean_cycle,
    maximizing_support,
    normal_form,
    oracle_max,
    sub_action,
)
from .verify import (
    InstanceGenerator,
    SuiteReport,
    replay,
    run_all,
    run_suite,
    suite_names,
)
from .shift import (
    OrbitSegment,
    PeriodicOrbit,
    Point,
    d,
    d_to_orbit,
    first_disagreement,
    follows_in_order,
    iterate,
    min_separation,
    minimal_recurrence,
    orbit_of,
    periodic_point,
    periodic_point_from_recurrence,
    point,
    prepend,
    shadows,
    shift,
    stays_close,
    unique_closest,
)

__version__ = "0.1.0"

__all__ = [
    "ASequence",
    "BackwardWalk",
    "CertificateError",
    "CustomTable",
    "CylinderFunction",
    "DeBruijnGraph",
    "Dyadic",
    "EnumerationOverflow",
    "Geometric",
    "InstanceGenerator",
    "LockinConstants",
    "LockinReport",
    "MaxMeanResult",
    "NormReport",
    "NormalForm",
    "OrbitSegment",
    "PerturbationPlan",
    "PeriodicOrbit",
    "Point",
    "RunManifest",
    "ShadowGapReport",
    "SubAction",
    "SuiteReport",
    "TriangularDyadic",
    "TrialResult",
    "a_distance",
    "adversarial_perturbation",
    "backward_walk",
    "build_perturbation",
    "choose_k",
    "constants",
    "cycle_to_orbit",
    "empirical_lockin_radius",
    "frac_str",
    "lockin_report",
    "lockin_trial",
    "offcycle_distance_gap",
    "parse_frac",
    "plan_from_obj",
    "plan_to_obj",
    "read_json",
    "replay",
    "run_all",
    "run_suite",
    "sample_perturbation",
    "shadow_gap_check",
    "suite_names",
    "write_json",
    "a_distance_to_orbit",
    "a_distance_to_orbit_truncated",
    "a_norm",
    "apply_phi",
    "birkhoff_sum",
    "build_graph",
    "compose_shift",
    "constant",
    "d",
    "d_to_orbit",
    "ergodic_average",
    "first_disagreement",
    "follows_in_order",
    "index_word",
    "iterate",
    "karp_max_mean",
    "lacunarize",
    "lift_depth",
    "lip_a",
    "max_mean_cycle",
    "maximizing_support",
    "min_separation",
    "minimal_recurrence",
    "norm_report",
    "normal_form",
    "oracle_max",
    "orbit_of",
    "periodic_point",
    "periodic_point_from_recurrence",
    "point",
    "prepend",
    "shadows",
    "shift",
    "stays_close",
    "sub_action",
    "sup_norm",
    "tail_variation",
    "unique_closest",
    "variation",
    "word_index",
]
