"""bellmeter: how much locality or free choice survives a Bell experiment.

The package measures, for two-party behaviours P(a,b|x,y), the largest
hidden-variable mass that can stay local — equivalently, freely chosen —
both in closed form from the CHSH values and by linear programming over
the local polytope; builds the hidden-variable models that witness the
bounds; generates two-qubit quantum behaviours; and simulates models
trial by trial with reproducible streams.
"""

from __future__ import annotations

from ._kernels import BACKEND
from .behaviour import (
    DEFAULT_TOLERANCE,
    OUTCOME_VALUES,
    Behaviour,
    SettingsDistribution,
    SignallingWitness,
    Tolerance,
    ValidationReport,
    Violation,
    behaviour_from_jsonable,
    behaviour_to_jsonable,
    correlator,
    is_non_signalling,
    marginal_alice,
    marginal_bob,
    mix,
    settings_from_jsonable,
    validate,
    validate_settings,
)
from .chsh import (
    CHSH_SIGNS,
    ChshReport,
    chsh_report,
    chsh_values,
    measure_from_smax,
    pairwise_bound_check,
    s_max_value,
)
from .errors import (
    BellmeterError,
    DomainError,
    ModelError,
    SolverError,
    StructureError,
)
from .hvmodel import (
    FactorizedTables,
    HVModel,
    LambdaClassification,
    ModelMeasures,
    classify,
    compose,
    dilate,
    dilation_index,
    dilation_label,
    make_model,
    measures,
    model_from_jsonable,
    model_to_jsonable,
    readjust_settings,
    reconstruct_behaviour,
    reconstruct_settings,
    restrict,
    trivial_free_model,
    validate_model,
)
from .jsonio import dump_json, parse_json
from .lp import LpProblem, LpSolution, solve
from .polytope import (
    LocalContent,
    LocalDeterministicVertex,
    PrBox,
    PrBoxDecomposition,
    decompose_onto_pr_box,
    enumerate_local_vertices,
    local_content_lp,
    mix_extremal,
    pr_box,
    pr_boxes,
    sample_nonsignalling,
)
from .quantum import (
    BellExpression,
    ChainedAnalysis,
    MeasurementBasis,
    TwoQubitPureState,
    bell_expression,
    born_behaviour,
    chained_analysis,
    chained_expression,
    chained_settings,
    chsh_optimal_settings,
    evaluate_expression,
    free_choice_upper_bound,
    free_fraction_floor,
    maximally_entangled,
    tsirelson_settings,
)
from .rng import SplitMix64
from .sim import SimConfig, SimResult, run, run_trial_range

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BellExpression",
    "BellmeterError",
    "Behaviour",
    "CHSH_SIGNS",
    "ChainedAnalysis",
    "ChshReport",
    "DEFAULT_TOLERANCE",
    "DomainError",
    "FactorizedTables",
    "HVModel",
    "LambdaClassification",
    "LocalContent",
    "LocalDeterministicVertex",
    "LpProblem",
    "LpSolution",
    "MeasurementBasis",
    "ModelError",
    "ModelMeasures",
    "OUTCOME_VALUES",
    "PrBox",
    "PrBoxDecomposition",
    "SettingsDistribution",
    "SignallingWitness",
    "SimConfig",
    "SimResult",
    "SolverError",
    "SplitMix64",
    "StructureError",
    "Tolerance",
    "TwoQubitPureState",
    "ValidationReport",
    "Violation",
    "behaviour_from_jsonable",
    "behaviour_to_jsonable",
    "bell_expression",
    "born_behaviour",
    "chained_analysis",
    "chained_expression",
    "chained_settings",
    "chsh_optimal_settings",
    "chsh_report",
    "chsh_values",
    "classify",
    "compose",
    "correlator",
    "decompose_onto_pr_box",
    "dilate",
    "dilation_index",
    "dilation_label",
    "dump_json",
    "enumerate_local_vertices",
    "evaluate_expression",
    "free_choice_upper_bound",
    "free_fraction_floor",
    "is_non_signalling",
    "local_content_lp",
    "make_model",
    "marginal_alice",
    "marginal_bob",
    "maximally_entangled",
    "measure_from_smax",
    "measures",
    "mix",
    "mix_extremal",
    "model_from_jsonable",
    "model_to_jsonable",
    "pairwise_bound_check",
    "parse_json",
    "pr_box",
    "pr_boxes",
    "readjust_settings",
    "reconstruct_behaviour",
    "reconstruct_settings",
    "restrict",
    "run",
    "run_trial_range",
    "s_max_value",
    "sample_nonsignalling",
    "settings_from_jsonable",
    "solve",
    "trivial_free_model",
    "validate",
    "validate_model",
    "validate_settings",
]
