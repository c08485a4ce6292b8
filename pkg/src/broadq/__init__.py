"""broadq: gate fidelities, broadcastability, and fidelity floors for quantum channels."""

from .bounds import (
    AssessmentReport,
    ConvergenceError,
    EBDistanceResult,
    FidelityFloor,
    assessment_report,
    channel_distance_bound,
    eb_distance,
    fidelity_floor,
    nearest_eb_channel,
)
from .channels import (
    BUILTIN_CHANNELS,
    ChoiState,
    KrausChannel,
    StinespringDilation,
    apply,
    apply_via_choi,
    as_choi,
    as_kraus,
    builtin,
    choi_distance,
    choi_to_kraus,
    kraus_to_choi,
    mix,
    stinespring,
    stinespring_to_kraus,
)
from .extendibility import (
    BroadcastChannel,
    ExtendibilityCertificate,
    ExtensionProblem,
    HierarchyLevel,
    PPTResult,
    broadcasting_channel_from_extension,
    is_entanglement_breaking,
    is_ppt,
    local_map,
    max_broadcast_number,
)
from .metrics import (
    DistanceReport,
    FidelityReport,
    avg_gate_distance,
    avg_gate_fidelity,
    gate_reports,
    min_gate_fidelity,
)
from .states import (
    DensityMatrix,
    HilbertSpec,
    PureState,
    fidelity,
    haar_pure,
    maximally_mixed,
    partial_trace,
    partial_transpose,
    tensor,
    trace_distance,
)

__all__ = [
    "AssessmentReport",
    "BUILTIN_CHANNELS",
    "BroadcastChannel",
    "ChoiState",
    "ConvergenceError",
    "DensityMatrix",
    "DistanceReport",
    "EBDistanceResult",
    "ExtendibilityCertificate",
    "ExtensionProblem",
    "FidelityFloor",
    "FidelityReport",
    "HierarchyLevel",
    "HilbertSpec",
    "KrausChannel",
    "PPTResult",
    "PureState",
    "StinespringDilation",
    "apply",
    "apply_via_choi",
    "as_choi",
    "as_kraus",
    "assessment_report",
    "avg_gate_distance",
    "avg_gate_fidelity",
    "broadcasting_channel_from_extension",
    "builtin",
    "channel_distance_bound",
    "choi_distance",
    "choi_to_kraus",
    "eb_distance",
    "fidelity",
    "fidelity_floor",
    "gate_reports",
    "haar_pure",
    "is_entanglement_breaking",
    "is_ppt",
    "kraus_to_choi",
    "local_map",
    "max_broadcast_number",
    "maximally_mixed",
    "min_gate_fidelity",
    "mix",
    "nearest_eb_channel",
    "partial_trace",
    "partial_transpose",
    "stinespring",
    "stinespring_to_kraus",
    "tensor",
    "trace_distance",
]

__version__ = "0.1.0"
