"""adrom: static and online-adaptive reduced-order models for 1-D transport problems."""

from .adaptive import (
    AadeimConfig,
    AadeimResult,
    BasisUpdateResult,
    ResidualReport,
    WindowBuffer,
    adapt_samples,
    adeim_update,
    estimate_column,
    run_aadeim,
)
from .config import RunConfig, build_model, builtin_config_path, load_config, parse_config, serialize_config
from .diagnostics import (
    EvalLedger,
    ProbeSpec,
    ledger_summary,
    probe_series,
    relative_error,
    svd_decay_report,
)
from .linalg import gen_eig_max, lstsq, orthonormalize, pivoted_qr_pivots, pod
from .models import (
    AdvectionModel,
    AdvectionParams,
    FlameModel,
    FlameParams,
    FullModel,
    PulseProfile,
    TimeSpec,
    run_full_model,
)
from .static import VariableLayout, deim_step, run_static, select_points

__version__ = "0.1.0"

__all__ = [
    "AadeimConfig",
    "AadeimResult",
    "AdvectionModel",
    "AdvectionParams",
    "BasisUpdateResult",
    "EvalLedger",
    "FlameModel",
    "FlameParams",
    "FullModel",
    "ProbeSpec",
    "PulseProfile",
    "ResidualReport",
    "RunConfig",
    "TimeSpec",
    "VariableLayout",
    "WindowBuffer",
    "adapt_samples",
    "adeim_update",
    "build_model",
    "builtin_config_path",
    "deim_step",
    "estimate_column",
    "gen_eig_max",
    "ledger_summary",
    "load_config",
    "lstsq",
    "orthonormalize",
    "parse_config",
    "pivoted_qr_pivots",
    "pod",
    "probe_series",
    "relative_error",
    "run_aadeim",
    "run_full_model",
    "run_static",
    "select_points",
    "serialize_config",
    "svd_decay_report",
]
