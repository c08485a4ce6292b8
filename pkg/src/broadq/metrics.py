"""Gate-level figures of merit between two channels.

The average gate fidelity is the Haar average of the state fidelity between
the two channel outputs over pure inputs; the minimum gate fidelity is the
minimum over pure inputs.  Restricting to pure inputs loses nothing for the
minimum: fidelity is jointly concave, so the minimum over all input states is
attained at an extreme point of the state set, i.e. at a pure state.

Estimators are deterministic given their configuration.  Monte Carlo
pre-generates the whole sample list from the seed and reduces with exact
(fsum) summation, so the result is independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, apply_raw, as_kraus
from .states import HilbertSpec, PureState, fidelity_matrices, trace_distance_matrices

DEFAULT_MC_SAMPLES = 10_000
DEFAULT_SEED = 0
DEFAULT_QUAD_NODES = (32, 64)
GRID_RESOLUTION = (200, 400)
REFINEMENT_STEPS = 50
REFINEMENT_TOL = 1e-10
ASCENT_STARTS = 8
ASCENT_STEPS = 400

_MC_NAMES = {"mc", "monte_carlo"}
_QUAD_NAMES = {"quad", "quadrature", "bloch_quadrature"}


@dataclass(frozen=True)
class FidelityReport:
    """A gate-fidelity value plus the estimator that produced it."""

    value: float
    estimator: str  # "monte_carlo" | "quadrature" | "grid_min"
    n_samples: int | None = None
    seed: int | None = None
    scheme: str | None = None
    resolution: tuple[int, int] | None = None
    refinement: int | None = None
    std_error: float | None = None
    minimizer: PureState | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"value must be in [0, 1], got {self.value}")
        if (self.std_error is not None) != (self.estimator == "monte_carlo"):
            raise ValueError("std_error is present exactly for monte_carlo estimates")
        if self.std_error is not None and self.std_error < 0.0:
            raise ValueError("std_error must be nonnegative")


@dataclass(frozen=True)
class DistanceReport:
    """A gate-distance value plus the estimator that produced it."""

    value: float
    estimator: str
    n_samples: int | None = None
    seed: int | None = None
    scheme: str | None = None
    std_error: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"value must be in [0, 1], got {self.value}")
        if (self.std_error is not None) != (self.estimator == "monte_carlo"):
            raise ValueError("std_error is present exactly for monte_carlo estimates")


def haar_samples(dim: int, n: int, seed: int) -> np.ndarray:
    """n Haar-random pure states as rows of an (n, dim) complex array."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def bloch_nodes(n_polar: int = 32, n_azimuth: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on the Bloch sphere: Gauss-Legendre in cos(theta),
    uniform in phi.  Returns (states, weights) with weights summing to 1."""
    u, w_u = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    cos_half = np.sqrt((1.0 + u) / 2.0)
    sin_half = np.sqrt((1.0 - u) / 2.0)
    amps = np.empty((n_polar * n_azimuth, 2), dtype=complex)
    amps[:, 0] = np.repeat(cos_half, n_azimuth)
    amps[:, 1] = np.repeat(sin_half, n_azimuth) * np.exp(1j * np.tile(phi, n_polar))
    weights = np.repeat(w_u / 2.0, n_azimuth) / n_azimuth
    return amps, weights


def _density_batch(amps: np.ndarray) -> np.ndarray:
    return amps[:, :, None] * amps.conj()[:, None, :]


def _pointwise_values(e: KrausChannel, f: KrausChannel, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rhos = _density_batch(amps)
    a = apply_raw(e, rhos)
    b = apply_raw(f, rhos)
    return fidelity_matrices(a, b), trace_distance_matrices(a, b)


def _stable_mean(values: np.ndarray) -> float:
    return math.fsum(float(v) for v in values) / len(values)


def _stable_dot(weights: np.ndarray, values: np.ndarray) -> float:
    return math.fsum(float(w) * float(v) for w, v in zip(weights, values))


def _check_pair(e, f) -> tuple[KrausChannel, KrausChannel]:
    e, f = as_kraus(e), as_kraus(f)
    if (e.d_in, e.d_out) != (f.d_in, f.d_out):
        raise ValueError(
            f"dimension mismatch: ({e.d_in}, {e.d_out}) vs ({f.d_in}, {f.d_out})"
        )
    return e, f


def _average_pair(
    e,
    f,
    method: str,
    n_samples: int,
    seed: int,
    nodes: tuple[int, int],
    worst_case: bool = False,
) -> tuple[FidelityReport, DistanceReport]:
    """Shared evaluation path: one batch of channel applications covers both
    the fidelity and the distance report."""
    e, f = _check_pair(e, f)
    if method in _MC_NAMES:
        amps = haar_samples(e.d_in, n_samples, seed)
        fids, dists = _pointwise_values(e, f, amps)
        f_mean = _stable_mean(fids)
        d_val = float(dists.max()) if worst_case else _stable_mean(dists)
        f_err = float(np.sqrt(np.var(fids, ddof=1) / n_samples)) if n_samples > 1 else 0.0
        d_err = 0.0 if worst_case else (
            float(np.sqrt(np.var(dists, ddof=1) / n_samples)) if n_samples > 1 else 0.0
        )
        f_rep = FidelityReport(
            value=min(max(f_mean, 0.0), 1.0), estimator="monte_carlo",
            n_samples=n_samples, seed=seed, std_error=f_err,
        )
        d_rep = DistanceReport(
            value=min(max(d_val, 0.0), 1.0), estimator="monte_carlo",
            n_samples=n_samples, seed=seed, std_error=d_err,
        )
        return f_rep, d_rep
    if method in _QUAD_NAMES:
        if e.d_in != 2:
            raise ValueError("bloch quadrature is only available for qubit channels")
        amps, weights = bloch_nodes(*nodes)
        fids, dists = _pointwise_values(e, f, amps)
        scheme = f"gauss_legendre_{nodes[0]}x{nodes[1]}"
        f_val = min(max(_stable_dot(weights, fids), 0.0), 1.0)
        d_val = float(dists.max()) if worst_case else min(max(_stable_dot(weights, dists), 0.0), 1.0)
        f_rep = FidelityReport(value=f_val, estimator="quadrature", scheme=scheme)
        d_rep = DistanceReport(value=d_val, estimator="quadrature", scheme=scheme)
        return f_rep, d_rep
    raise ValueError(f"unknown method {method!r}; use 'mc' or 'quad'")


def avg_gate_fidelity(
    e,
    f,
    method: str = "monte_carlo",
    seed: int = DEFAULT_SEED,
    n_samples: int = DEFAULT_MC_SAMPLES,
    nodes: tuple[int, int] = DEFAULT_QUAD_NODES,
) -> FidelityReport:
    """Average of the state fidelity F(E[psi], F[psi]) over Haar-random pure inputs.

    ``method`` is 'mc'/'monte_carlo' or 'quad'/'quadrature' (qubits only).
    """
    f_rep, _ = _average_pair(e, f, method, n_samples, seed, nodes)
    return f_rep


def avg_gate_distance(
    e,
    f,
    method: str = "monte_carlo",
    seed: int = DEFAULT_SEED,
    n_samples: int = DEFAULT_MC_SAMPLES,
    nodes: tuple[int, int] = DEFAULT_QUAD_NODES,
    worst_case: bool = False,
) -> DistanceReport:
    """Average (or, with ``worst_case``, maximum) trace distance between channel outputs."""
    _, d_rep = _average_pair(e, f, method, n_samples, seed, nodes, worst_case=worst_case)
    return d_rep


def gate_reports(
    e,
    f,
    method: str = "quadrature",
    seed: int = DEFAULT_SEED,
    n_samples: int = DEFAULT_MC_SAMPLES,
    nodes: tuple[int, int] = DEFAULT_QUAD_NODES,
) -> tuple[FidelityReport, DistanceReport]:
    """Average fidelity and average distance from a single evaluation pass."""
    return _average_pair(e, f, method, n_samples, seed, nodes)


def _bloch_amps(theta: float, phi: float) -> np.ndarray:
    return np.array([np.cos(theta / 2.0), np.sin(theta / 2.0) * np.exp(1j * phi)], dtype=complex)


def _min_qubit(e: KrausChannel, f: KrausChannel) -> FidelityReport:
    n_t, n_p = GRID_RESOLUTION
    thetas = np.pi * (np.arange(n_t) + 0.5) / n_t
    phis = 2.0 * np.pi * np.arange(n_p) / n_p
    tt = np.repeat(thetas, n_p)
    pp = np.tile(phis, n_t)
    amps = np.empty((n_t * n_p, 2), dtype=complex)
    amps[:, 0] = np.cos(tt / 2.0)
    amps[:, 1] = np.sin(tt / 2.0) * np.exp(1j * pp)
    fids, _ = _pointwise_values(e, f, amps)
    best = int(np.argmin(fids))  # argmin keeps the lowest grid index on ties
    theta, phi = float(tt[best]), float(pp[best])
    value = float(fids[best])

    def point(th, ph):
        fid, _ = _pointwise_values(e, f, _bloch_amps(th, ph)[None, :])
        return float(fid[0])

    step_t = np.pi / n_t
    step_p = 2.0 * np.pi / n_p
    for _ in range(REFINEMENT_STEPS):
        moved = False
        for d_t, d_p in ((step_t, 0.0), (-step_t, 0.0), (0.0, step_p), (0.0, -step_p)):
            cand = point(theta + d_t, phi + d_p)
            if cand < value - REFINEMENT_TOL:
                value, theta, phi = cand, theta + d_t, phi + d_p
                moved = True
        if not moved:
            step_t *= 0.5
            step_p *= 0.5
            if step_t < 1e-12:
                break
    minimizer = PureState(HilbertSpec((2,)), _bloch_amps(theta, phi))
    return FidelityReport(
        value=min(max(value, 0.0), 1.0), estimator="grid_min",
        resolution=GRID_RESOLUTION, refinement=REFINEMENT_STEPS, minimizer=minimizer,
    )


def _min_general(e: KrausChannel, f: KrausChannel) -> FidelityReport:
    """Multi-start projected gradient descent on the unit sphere of amplitudes."""
    d = e.d_in

    def value(amps: np.ndarray) -> float:
        fid, _ = _pointwise_values(e, f, amps[None, :])
        return float(fid[0])

    starts = [np.eye(d, dtype=complex)[i] for i in range(min(d, 2))]
    starts.extend(haar_samples(d, ASCENT_STARTS - len(starts), seed=7))
    best_val, best_vec = np.inf, None
    eps = 1e-6
    for vec in starts:
        v = np.array(vec, dtype=complex)
        v /= np.linalg.norm(v)
        cur = value(v)
        step = 0.5
        for _ in range(ASCENT_STEPS):
            grad = np.zeros(d, dtype=complex)
            for j in range(d):
                bump = np.zeros(d, dtype=complex)
                bump[j] = eps
                g_re = (value((v + bump) / np.linalg.norm(v + bump)) - cur) / eps
                g_im = (value((v + 1j * bump) / np.linalg.norm(v + 1j * bump)) - cur) / eps
                grad[j] = g_re + 1j * g_im
            grad -= v * np.real(v.conj() @ grad)  # tangent component only
            if np.linalg.norm(grad) < 1e-12:
                break
            cand = v - step * grad
            cand /= np.linalg.norm(cand)
            new = value(cand)
            if new < cur - 1e-14:
                v, cur = cand, new
            else:
                step *= 0.5
                if step < 1e-10:
                    break
        if cur < best_val:
            best_val, best_vec = cur, v
    minimizer = PureState(HilbertSpec((d,)), best_vec)
    return FidelityReport(
        value=min(max(best_val, 0.0), 1.0), estimator="grid_min",
        resolution=(ASCENT_STARTS, ASCENT_STEPS), refinement=0, minimizer=minimizer,
    )


def min_gate_fidelity(e, f, method: str = "auto") -> FidelityReport:
    """Minimum of F(E[psi], F[psi]) over pure inputs, with the minimizer reported.

    Qubit channels use a dense (theta, phi) grid followed by shrinking-step
    coordinate descent; other dimensions use multi-start projected descent.
    """
    e, f = _check_pair(e, f)
    if method == "auto":
        method = "grid" if e.d_in == 2 else "ascent"
    if method == "grid":
        if e.d_in != 2:
            raise ValueError("grid minimization is only available for qubit channels")
        return _min_qubit(e, f)
    if method == "ascent":
        return _min_general(e, f)
    raise ValueError(f"unknown method {method!r}; use 'grid', 'ascent', or 'auto'")
