"""Density matrices over finite-dimensional Hilbert spaces and the measures between them.

Conventions used throughout the package:

* Subsystem ordering is row-major: in a tensor product the FIRST factor is the
  slowest-varying index, so ``kron(A, B)`` places ``A`` on the first subsystem.
* Fidelity is the non-squared Uhlmann fidelity ``tr sqrt(sqrt(rho) sigma sqrt(rho))``,
  which satisfies ``F >= 1 - D`` against the trace distance ``D``.
* Matrix square roots are taken by Hermitian eigendecomposition with negative
  eigenvalues clamped to zero before the square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-9
NORM_TOL = 1e-12


@dataclass(frozen=True)
class HilbertSpec:
    """Ordered subsystem dimensions of a finite-dimensional Hilbert space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive integers, got {dims}")
        if self.total < 2:
            raise ValueError(f"total dimension must be at least 2, got {self.total}")

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __repr__(self) -> str:
        return f"HilbertSpec(dims={self.dims})"


def _as_complex_matrix(matrix, n: int) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or infinite entries")
    return m


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive-semidefinite Hermitian matrix on a :class:`HilbertSpec`.

    Hermiticity, unit trace, and numerical positivity (minimum eigenvalue
    >= -1e-9) are enforced at construction; degenerate inputs never reach the
    operations below.
    """

    space: HilbertSpec
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix, self.space.total)
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("matrix is not Hermitian within tolerance 1e-10")
        if abs(m.trace() - 1.0) > TRACE_TOL:
            raise ValueError(f"trace must be 1 within 1e-10, got {m.trace():.6g}")
        lowest = float(np.linalg.eigvalsh(m)[0])
        if lowest < -EIGENVALUE_TOL:
            raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {lowest:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.space.dims})"


@dataclass(frozen=True)
class PureState:
    """Unit vector of amplitudes on a :class:`HilbertSpec`."""

    space: HilbertSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (self.space.total,):
            raise ValueError(f"expected {self.space.total} amplitudes, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("amplitudes contain NaN or infinite entries")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise ValueError("amplitudes are not normalized within 1e-12")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def density(self) -> DensityMatrix:
        """The projector |psi><psi| as a DensityMatrix."""
        v = self.amplitudes
        return DensityMatrix(self.space, np.outer(v, v.conj()))

    def __repr__(self) -> str:
        return f"PureState(dims={self.space.dims})"


def maximally_mixed(space: HilbertSpec) -> DensityMatrix:
    """The state I/d on the given space."""
    n = space.total
    return DensityMatrix(space, np.eye(n) / n)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Tensor product, with subsystem lists concatenated in order."""
    space = HilbertSpec(a.space.dims + b.space.dims)
    return DensityMatrix(space, np.kron(a.matrix, b.matrix))


def _check_same_space(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.space.total != sigma.space.total:
        raise ValueError(
            f"dimension mismatch: {rho.space.dims} (total {rho.space.total}) vs "
            f"{sigma.space.dims} (total {sigma.space.total})"
        )


def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    """Hermitian square root with negative eigenvalues clamped to zero.

    Eigenvalues below 64*eps relative to the largest one are zeroed as well:
    they are indistinguishable from zero at machine precision, and taking
    their square root would otherwise turn eps-level noise into sqrt(eps)
    errors.  Accepts a batch with shape (..., d, d).
    """
    w, v = np.linalg.eigh(matrix)
    cutoff = 64.0 * np.finfo(float).eps * np.clip(w[..., -1:], 0.0, None)
    w = np.sqrt(np.where(w < cutoff, 0.0, w))
    return (v * w[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def fidelity_matrices(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Non-squared Uhlmann fidelity tr sqrt(sqrt(a) b sqrt(a)) on raw arrays.

    Evaluated as the trace norm of sqrt(a) @ sqrt(b), which is the same
    quantity but keeps spurious near-zero eigenvalues at machine precision
    instead of sqrt(machine precision).  Batched over leading axes; values
    are clamped into [0, 1].
    """
    product = sqrtm_psd(a) @ sqrtm_psd(b)
    f = np.linalg.svd(product, compute_uv=False).sum(axis=-1)
    return np.clip(f, 0.0, 1.0)


def trace_distance_matrices(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Half the trace norm of the Hermitian difference, batched over leading axes."""
    w = np.linalg.eigvalsh(a - b)
    return 0.5 * np.abs(w).sum(axis=-1)


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)), non-squared, in [0, 1]."""
    _check_same_space(rho, sigma)
    return float(fidelity_matrices(rho.matrix, sigma.matrix))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Trace distance ||rho - sigma||_1 / 2, in [0, 1]."""
    _check_same_space(rho, sigma)
    return float(trace_distance_matrices(rho.matrix, sigma.matrix))


def partial_trace_raw(matrix: np.ndarray, dims: Iterable[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a raw square matrix over the subsystems not in ``keep``."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if any(i < 0 or i >= n for i in keep):
        raise ValueError(f"subsystem index out of range: keep={keep}, {n} subsystems")
    t = matrix.reshape(dims + dims)
    for idx in sorted(set(range(n)) - set(keep), reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=idx, axis2=idx + cur)
    d_kept = math.prod(dims[i] for i in keep)
    return t.reshape(d_kept, d_kept)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the kept subsystems (indices into ``rho.space.dims``)."""
    reduced = partial_trace_raw(rho.matrix, rho.space.dims, keep)
    kept_dims = tuple(rho.space.dims[i] for i in sorted(set(keep)))
    return DensityMatrix(HilbertSpec(kept_dims), reduced)


def partial_transpose_raw(matrix: np.ndarray, dims: Iterable[int], subsystem: int) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    if subsystem < 0 or subsystem >= n:
        raise ValueError(f"subsystem index {subsystem} out of range for {n} subsystems")
    t = matrix.reshape(dims + dims)
    t = np.swapaxes(t, subsystem, subsystem + n)
    d = math.prod(dims)
    return t.reshape(d, d)


def partial_transpose(rho: DensityMatrix, subsystem: int) -> np.ndarray:
    """Transpose applied to one tensor factor.

    Returns a raw Hermitian trace-one matrix; it is generally NOT positive
    semidefinite, which is exactly what the PPT test inspects.
    """
    return partial_transpose_raw(rho.matrix, rho.space.dims, subsystem)


def haar_pure(space: HilbertSpec, seed: int) -> PureState:
    """Haar-distributed pure state: a normalized vector of iid complex Gaussians.

    The same seed always yields the same state.
    """
    rng = np.random.default_rng(seed)
    n = space.total
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return PureState(space, v / np.linalg.norm(v))
