"""safeteleop — safety-and-passivity input filter for teleoperated systems.

The plant is dynamically extended with an integrator on the input,
u_dot = phi(x, u, t) + v, so that both a recursive control-barrier chain
(safety of a keep-out set) and an integral control-barrier function
(passivity with respect to a storage function) become single affine
constraint rows in the new input v.  A min-norm quadratic program picks the
smallest v satisfying the enabled rows each control tick; the result is a
human teleoperation signal that is minimally modified to keep the closed
loop safe and passive.
"""

from .dynamics import DoubleIntegratorDrag, ExtendedState, SystemModel, eval_extended, eval_f
from .barrier import ClassK, ConstraintRow, DiskBarrier, eval_h_chain, row_residual, safety_row
from .passivity import (
    PassivityBarrier,
    QuadraticStorage,
    StorageFunction,
    eval_hu,
    passivity_budget,
    passivity_row,
    prefix_budget_min,
)
from .tracking import ConstantInput, FeedbackLaw, HumanInput, LiveInput, PDLaw, PiecewiseInput, TrackingGain, phi, tracking_error, uhat
from .qpsolver import InfeasibilityCertificate, QpSolution, brute_force_oracle, solve_min_norm
from .filtering import FilterDecision, FilterMode, decide, filter_step, parse_mode
from .scenario import (
    HumanInputSpec,
    Scenario,
    ScenarioError,
    default_scenario,
    dump_scenario,
    load_scenario,
    parse_scenario,
    preset_scenario,
    serialize_scenario,
)
from .sim import SimResult, Stepper, TraceRecord, read_trace, rk4_step, run_scenario, write_trace
from .service import (
    ServiceCore,
    StateFrame,
    decode_command,
    decode_frame,
    encode_error,
    encode_frame,
    encode_hello,
    serve_forever,
)

__version__ = "0.1.0"

__all__ = [
    "SystemModel", "DoubleIntegratorDrag", "ExtendedState", "eval_f", "eval_extended",
    "ClassK", "DiskBarrier", "ConstraintRow", "eval_h_chain", "safety_row", "row_residual",
    "StorageFunction", "QuadraticStorage", "PassivityBarrier", "eval_hu", "passivity_row",
    "passivity_budget", "prefix_budget_min",
    "FeedbackLaw", "PDLaw", "HumanInput", "ConstantInput", "PiecewiseInput", "LiveInput",
    "TrackingGain", "phi", "tracking_error", "uhat",
    "QpSolution", "InfeasibilityCertificate", "solve_min_norm", "brute_force_oracle",
    "FilterMode", "FilterDecision", "parse_mode", "decide", "filter_step",
    "Scenario", "ScenarioError", "HumanInputSpec", "parse_scenario", "serialize_scenario",
    "load_scenario", "dump_scenario", "default_scenario", "preset_scenario",
    "SimResult", "Stepper", "TraceRecord", "rk4_step", "run_scenario", "write_trace", "read_trace",
    "StateFrame", "ServiceCore", "encode_frame", "decode_frame", "encode_hello",
    "encode_error", "decode_command", "serve_forever",
    "__version__",
]
