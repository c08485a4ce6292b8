"""Distance to the entanglement-breaking set and the gate-fidelity floor.

The floor answers the question a bare fidelity number cannot: how large a
gate fidelity is guaranteed by the channel's broadcastability alone,
regardless of how good or bad the realization is.  For a channel E and a
modeled worst-case noise N,

    avg_fidelity(E, N) >= 1 - d * D(choi_E, choi_EB) - d * avg_distance(EB, N)

for ANY entanglement-breaking comparison point EB, since state fidelity obeys
F >= 1 - D and the trace distance obeys the triangle inequality, while
D(E[rho], EB[rho]) <= d * D(choi_E, choi_EB) pointwise.  The comparison point
used here is the Frobenius projection of the Choi state onto the PPT set;
that projection is generally NOT the trace-distance minimizer, but the bound
only needs a certified upper bound on the distance, so any entanglement-
breaking point keeps the floor valid.  Floors are clamped at zero: the bound
can be vacuous for weakly-broadcastable channels, which is itself the point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChoiState, KrausChannel, apply, as_choi, as_kraus, choi_to_kraus
from .extendibility import HierarchyLevel, _proj_psd, max_broadcast_number
from .metrics import (
    DEFAULT_QUAD_NODES,
    FidelityReport,
    avg_gate_distance,
    avg_gate_fidelity,
    min_gate_fidelity,
)
from .states import (
    DensityMatrix,
    HilbertSpec,
    partial_trace_raw,
    partial_transpose_raw,
    trace_distance,
    trace_distance_matrices,
)

EB_PROJECTION_TOL = 1e-10
EB_MAX_ITERATIONS = 100_000
BOUND_SLACK = 1e-9


class ConvergenceError(RuntimeError):
    """A projection loop failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True)
class EBDistanceResult:
    """Projection of a Choi state onto the entanglement-breaking set.

    ``trace_distance_upper`` is the exact trace distance to the projected
    point, hence a certified upper bound on the minimum distance to the set.
    ``ppt_exact`` records whether PPT equals separability at these dimensions
    (true on 2⊗2); otherwise the set is the PPT relaxation.
    """

    nearest_eb_choi: DensityMatrix
    frobenius_distance: float
    trace_distance_upper: float
    ppt_exact: bool

    def __post_init__(self):
        if self.trace_distance_upper < 0.0:
            raise ValueError("trace distance cannot be negative")


@dataclass(frozen=True)
class FidelityFloor:
    """The guaranteed lower bound on gate fidelity against modeled noise."""

    channel_id: str
    k_level: HierarchyLevel | None
    delta_eb: float
    noise_gap: float
    floor: float

    def __post_init__(self):
        if not 0.0 <= self.floor <= 1.0:
            raise ValueError(f"floor must be in [0, 1], got {self.floor}")
        if self.floor > max(0.0, 1.0 - self.delta_eb) + 1e-12:
            raise ValueError("floor cannot exceed 1 - delta_eb")


@dataclass(frozen=True)
class AssessmentReport:
    """Measured gate fidelities next to the floor they must exceed."""

    avg_fidelity: FidelityReport
    min_fidelity: FidelityReport
    floor: FidelityFloor
    margin: float
    verdict: str


def _proj_ppt(x: np.ndarray, dims) -> np.ndarray:
    """Frobenius projection onto {X : partial transpose of X is PSD}.

    The partial transpose is an isometry of the Frobenius inner product, so
    transposing, clamping to the PSD cone, and transposing back is exact.
    """
    pt = partial_transpose_raw(x, dims, 1)
    return partial_transpose_raw(_proj_psd(pt), dims, 1)


def _proj_tp_marginal(x: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    """Frobenius projection onto {Hermitian X : tr_B X = I/d_a}."""
    x = 0.5 * (x + x.conj().T)
    tr_b = partial_trace_raw(x, (d_a, d_b), keep=(0,))
    return x - np.kron(tr_b - np.eye(d_a) / d_a, np.eye(d_b)) / d_b


def eb_distance(
    channel,
    *,
    tol: float = EB_PROJECTION_TOL,
    max_iterations: int = EB_MAX_ITERATIONS,
) -> EBDistanceResult:
    """Project the Choi state onto {PSD} ∩ {PPT} ∩ {trace 1, tr_B = I/d_a}.

    Runs cyclic Dykstra projections under the Frobenius norm and returns the
    projected point together with its exact trace distance from the original
    Choi state.  On 2⊗2 the PPT set equals the separable set, so the result
    is a genuine entanglement-breaking channel; in higher dimensions it is
    the PPT relaxation and is flagged as such.
    """
    choi = as_choi(channel)
    d_a, d_b = choi.d_a, choi.d_b
    dims = (d_a, d_b)
    chi = choi.matrix
    x = chi.copy()
    corrections = [np.zeros_like(x) for _ in range(3)]
    projections = (
        lambda m: _proj_psd(m),
        lambda m: _proj_ppt(m, dims),
        lambda m: _proj_tp_marginal(m, d_a, d_b),
    )
    residual = np.inf
    for _ in range(max_iterations):
        x_prev = x
        for j, proj in enumerate(projections):
            shifted = x + corrections[j]
            x = proj(shifted)
            corrections[j] = shifted - x
        psd_defect = -min(float(np.linalg.eigvalsh(x)[0]), 0.0)
        ppt_defect = -min(float(np.linalg.eigvalsh(partial_transpose_raw(x, dims, 1))[0]), 0.0)
        movement = float(np.linalg.norm(x - x_prev))
        residual = max(psd_defect, ppt_defect, movement)
        if psd_defect <= tol and ppt_defect <= tol and movement <= tol:
            break
    else:
        raise ConvergenceError("entanglement-breaking projection did not converge", residual)
    nearest = DensityMatrix(HilbertSpec(dims), x)
    return EBDistanceResult(
        nearest_eb_choi=nearest,
        frobenius_distance=float(np.linalg.norm(chi - x)),
        trace_distance_upper=float(trace_distance_matrices(chi, x)),
        ppt_exact=(d_a == 2 and d_b == 2),
    )


def channel_distance_bound(e, rho: DensityMatrix, eb, verify: bool = True) -> float:
    """The output-distance bound d * D(choi_e, choi_eb).

    With ``verify`` the left side D(e[rho], eb[rho]) is evaluated on the
    given state and checked against the bound.
    """
    e_k, eb_k = as_kraus(e), as_kraus(eb)
    if (e_k.d_in, e_k.d_out) != (eb_k.d_in, eb_k.d_out):
        raise ValueError("channels must share dimensions")
    if rho.space.total != e_k.d_in:
        raise ValueError(
            f"dimension mismatch: channel input {e_k.d_in}, state {rho.space.total}"
        )
    right = e_k.d_in * trace_distance(as_choi(e_k).choi, as_choi(eb_k).choi)
    if verify:
        left = trace_distance(apply(e_k, rho), apply(eb_k, rho))
        if left > right + BOUND_SLACK:
            raise ValueError(
                f"distance bound violated: output distance {left:.12g} exceeds "
                f"d * choi distance {right:.12g}"
            )
    return right


def nearest_eb_channel(result: EBDistanceResult) -> KrausChannel:
    """Kraus form of the projected entanglement-breaking comparison point."""
    dm = result.nearest_eb_choi
    d_a, d_b = dm.space.dims
    return choi_to_kraus(ChoiState(dm, d_a, d_b))


def fidelity_floor(
    e,
    noise,
    *,
    channel_id: str = "channel",
    nodes: tuple[int, int] = DEFAULT_QUAD_NODES,
    k_max: int = 2,
    eb: EBDistanceResult | None = None,
    k_level: HierarchyLevel | None = None,
    compute_k_level: bool = True,
) -> FidelityFloor:
    """floor = max(0, 1 - d*D(choi_e, choi_EB*) - d*avg_distance(EB*, noise)).

    ``eb`` and ``k_level`` accept precomputed values so sweeps over many noise
    models can reuse the per-channel work; the floor value itself never
    depends on the hierarchy level.
    """
    e_k = as_kraus(e)
    noise_k = as_kraus(noise)
    d = e_k.d_in
    eb_result = eb if eb is not None else eb_distance(e_k)
    delta_eb = d * eb_result.trace_distance_upper
    gap = avg_gate_distance(nearest_eb_channel(eb_result), noise_k, method="quadrature", nodes=nodes)
    noise_gap = d * gap.value
    floor = max(0.0, 1.0 - delta_eb - noise_gap)
    if k_level is None and compute_k_level:
        k_level = max_broadcast_number(e_k, k_max)
    return FidelityFloor(
        channel_id=channel_id,
        k_level=k_level,
        delta_eb=delta_eb,
        noise_gap=noise_gap,
        floor=floor,
    )


def _verdict_text(avg: float, floor: FidelityFloor, margin: float) -> str:
    level = "unknown" if floor.k_level is None else str(floor.k_level)
    lines = [
        f"measured average gate fidelity {avg:.6f} against a guaranteed floor of "
        f"{floor.floor:.6f} (margin {margin:+.6f}); shortfall from ideal {1.0 - avg:.6f}.",
        f"broadcast level of the ideal channel: {level}.",
    ]
    if floor.floor > 0.0:
        lines.append(
            "any realization at least as good as the modeled worst case already reaches "
            f"{floor.floor:.6f}, so only the margin above the floor is evidence of quality; "
            "a high fidelity by itself is not."
        )
    else:
        lines.append(
            "the floor is vacuous (clamped at zero) for this weakly-broadcastable channel: "
            "its gate fidelities are not propped up by broadcastability, so the measured "
            "value carries the full weight of the assessment."
        )
    return " ".join(lines)


def assessment_report(
    e,
    realized,
    noise,
    *,
    channel_id: str = "channel",
    method: str = "quadrature",
    nodes: tuple[int, int] = DEFAULT_QUAD_NODES,
    k_max: int = 2,
    n_samples: int = 10_000,
    seed: int = 0,
) -> AssessmentReport:
    """Fidelity of the realized channel against the ideal one, with the floor
    computed from the modeled worst-case noise for context."""
    avg = avg_gate_fidelity(e, realized, method=method, nodes=nodes, n_samples=n_samples, seed=seed)
    worst = min_gate_fidelity(e, realized)
    floor = fidelity_floor(e, noise, channel_id=channel_id, nodes=nodes, k_max=k_max)
    margin = avg.value - floor.floor
    return AssessmentReport(
        avg_fidelity=avg,
        min_fidelity=worst,
        floor=floor,
        margin=margin,
        verdict=_verdict_text(avg.value, floor, margin),
    )
