"""Channel representations (Kraus, Choi, Stinespring) and conversions between them.

The Choi state of a channel E acting on a d-dimensional system is the
trace-one state ``(1 ⊗ E)|phi+><phi+|`` with ``|phi+> = sum_i |ii> / sqrt(d)``;
the channel acts on the SECOND tensor factor.  The inverse direction is
``E[rho] = d_A * tr_A[ choi (rho^T ⊗ I) ]`` with the transpose taken in the
computational basis, the same basis that defines ``|phi+>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import (
    DensityMatrix,
    HilbertSpec,
    partial_trace_raw,
    trace_distance,
)

COMPLETENESS_TOL = 1e-9
UNITARITY_TOL = 1e-9
KRAUS_RANK_CUTOFF = 1e-10

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by Kraus operators K_i with sum_i K_i^dag K_i = I."""

    d_in: int
    d_out: int
    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.d_in < 1 or self.d_out < 1:
            raise ValueError("channel dimensions must be positive")
        ops = []
        for idx, op in enumerate(self.kraus_ops):
            m = np.array(op, dtype=complex)
            if m.shape != (self.d_out, self.d_in):
                raise ValueError(
                    f"kraus operator {idx} has shape {m.shape}, expected "
                    f"({self.d_out}, {self.d_in})"
                )
            if not np.all(np.isfinite(m)):
                raise ValueError(f"kraus operator {idx} contains non-finite entries")
            m.setflags(write=False)
            ops.append(m)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        total = sum(m.conj().T @ m for m in ops)
        defect = np.abs(total - np.eye(self.d_in)).max()
        if defect > COMPLETENESS_TOL:
            raise ValueError(
                f"kraus operators are not trace-preserving: completeness defect {defect:.3g}"
            )
        object.__setattr__(self, "kraus_ops", tuple(ops))

    def __repr__(self) -> str:
        return f"KrausChannel(d_in={self.d_in}, d_out={self.d_out}, n_ops={len(self.kraus_ops)})"


@dataclass(frozen=True)
class ChoiState:
    """The Choi state of a channel: a DensityMatrix on the bipartite space [d_a, d_b].

    Trace preservation of the channel shows up as ``tr_B choi = I/d_a``,
    checked at construction; positivity is complete positivity.
    """

    choi: DensityMatrix
    d_a: int
    d_b: int

    def __post_init__(self):
        if self.choi.space.dims != (self.d_a, self.d_b):
            raise ValueError(
                f"choi space {self.choi.space.dims} does not match ({self.d_a}, {self.d_b})"
            )
        marginal = partial_trace_raw(self.choi.matrix, (self.d_a, self.d_b), keep=(0,))
        defect = np.abs(marginal - np.eye(self.d_a) / self.d_a).max()
        if defect > COMPLETENESS_TOL:
            raise ValueError(
                f"choi marginal on the input side is not I/d: defect {defect:.3g} "
                "(channel would not be trace-preserving)"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self.choi.matrix

    def __repr__(self) -> str:
        return f"ChoiState(d_a={self.d_a}, d_b={self.d_b})"


@dataclass(frozen=True)
class StinespringDilation:
    """A channel realized as a unitary on system plus ancilla started in |0>."""

    d_system: int
    d_ancilla: int
    unitary: np.ndarray

    def __post_init__(self):
        n = self.d_system * self.d_ancilla
        u = np.array(self.unitary, dtype=complex)
        if u.shape != (n, n):
            raise ValueError(f"unitary has shape {u.shape}, expected ({n}, {n})")
        defect = np.abs(u @ u.conj().T - np.eye(n)).max()
        if defect > UNITARITY_TOL:
            raise ValueError(f"matrix is not unitary: defect {defect:.3g}")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    def __repr__(self) -> str:
        return f"StinespringDilation(d_system={self.d_system}, d_ancilla={self.d_ancilla})"


def apply(channel: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Apply the channel: sum_i K_i rho K_i^dag."""
    if rho.space.total != channel.d_in:
        raise ValueError(
            f"dimension mismatch: channel input {channel.d_in}, state {rho.space.total}"
        )
    out = apply_raw(channel, rho.matrix)
    return DensityMatrix(HilbertSpec((channel.d_out,)), out)


def apply_raw(channel: KrausChannel, rho: np.ndarray) -> np.ndarray:
    """Channel action on raw arrays, batched over leading axes of ``rho``."""
    out = np.zeros(rho.shape[:-2] + (channel.d_out, channel.d_out), dtype=complex)
    for k in channel.kraus_ops:
        out += k @ rho @ k.conj().T
    return out


def kraus_to_choi(channel: KrausChannel) -> ChoiState:
    """Choi state (1 ⊗ E)|phi+><phi+| of the channel; E acts on the second factor."""
    d_in, d_out = channel.d_in, channel.d_out
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in channel.kraus_ops:
        v = k.T.reshape(-1)  # component (i, a) = K[a, i] at flat index i*d_out + a
        choi += np.outer(v, v.conj())
    choi /= d_in
    return ChoiState(DensityMatrix(HilbertSpec((d_in, d_out)), choi), d_in, d_out)


def choi_to_kraus(choi: ChoiState) -> KrausChannel:
    """Kraus operators from the scaled eigenvectors of the Choi matrix.

    Eigenvalues below 1e-10 are dropped; Kraus sets are non-unique, so equality
    of channels is always asserted at the Choi level.
    """
    d_a, d_b = choi.d_a, choi.d_b
    w, v = np.linalg.eigh(choi.matrix)
    if w[0] < -1e-8:
        raise ValueError(f"choi matrix is not PSD: min eigenvalue {w[0]:.3g}")
    ops = []
    for lam, vec in zip(w, v.T):
        if lam < KRAUS_RANK_CUTOFF:
            continue
        ops.append(np.sqrt(d_a * lam) * vec.reshape(d_a, d_b).T)
    return KrausChannel(d_a, d_b, tuple(ops))


def apply_via_choi(choi: ChoiState, rho: DensityMatrix) -> DensityMatrix:
    """Apply the channel through its Choi state: d_A tr_A[choi (rho^T ⊗ I)]."""
    if rho.space.total != choi.d_a:
        raise ValueError(f"dimension mismatch: choi input {choi.d_a}, state {rho.space.total}")
    t = choi.matrix.reshape(choi.d_a, choi.d_b, choi.d_a, choi.d_b)
    out = choi.d_a * np.einsum("iajb,ij->ab", t, rho.matrix)
    return DensityMatrix(HilbertSpec((choi.d_b,)), out)


def stinespring(channel: KrausChannel) -> StinespringDilation:
    """Dilate to a unitary on system ⊗ ancilla with the ancilla starting in |0>.

    The isometry columns are V|s>|0> = sum_i K_i|s> ⊗ |i>; the remaining
    columns are completed by Gram-Schmidt over the standard basis in
    lexicographic order, so the output is reproducible.
    """
    if channel.d_in != channel.d_out:
        raise ValueError("stinespring dilation requires d_in == d_out")
    d = channel.d_in
    n_ops = len(channel.kraus_ops)
    d_anc = max(n_ops, 1)
    n = d * d_anc
    u = np.zeros((n, n), dtype=complex)
    for s in range(d):
        col = np.zeros(n, dtype=complex)
        for i, k in enumerate(channel.kraus_ops):
            col[i::d_anc] = k[:, s]  # component (s', i) at flat index s'*d_anc + i
        u[:, s * d_anc] = col
    basis = [u[:, s * d_anc] for s in range(d)]
    free_cols = [s * d_anc + a for s in range(d) for a in range(1, d_anc)]
    filled = 0
    for pivot in range(n):
        if filled == len(free_cols):
            break
        cand = np.zeros(n, dtype=complex)
        cand[pivot] = 1.0
        for b in basis:
            cand -= b * (b.conj() @ cand)
        norm = np.linalg.norm(cand)
        if norm > 1e-7:
            cand /= norm
            # second pass keeps the completion orthonormal to working precision
            for b in basis:
                cand -= b * (b.conj() @ cand)
            cand /= np.linalg.norm(cand)
            basis.append(cand)
            u[:, free_cols[filled]] = cand
            filled += 1
    if filled != len(free_cols):
        raise ValueError("failed to complete the isometry to a unitary")
    return StinespringDilation(d, d_anc, u)


def stinespring_to_kraus(dilation: StinespringDilation) -> KrausChannel:
    """Recover Kraus operators K_i = (I ⊗ <i|) U (I ⊗ |0>) from a dilation."""
    d, d_anc = dilation.d_system, dilation.d_ancilla
    u = dilation.unitary.reshape(d, d_anc, d, d_anc)
    ops = tuple(u[:, i, :, 0] for i in range(d_anc))
    return KrausChannel(d, d, ops)


def mix(a: KrausChannel, b: KrausChannel, weight: float) -> KrausChannel:
    """Convex mixture: Kraus set {sqrt(1-w) A_i} ∪ {sqrt(w) B_j}.

    The Choi state is the same convex mixture of the two Choi states.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight must be in [0, 1], got {weight}")
    if (a.d_in, a.d_out) != (b.d_in, b.d_out):
        raise ValueError("mixed channels must share dimensions")
    ops = []
    if weight < 1.0:
        ops.extend(np.sqrt(1.0 - weight) * k for k in a.kraus_ops)
    if weight > 0.0:
        ops.extend(np.sqrt(weight) * k for k in b.kraus_ops)
    return KrausChannel(a.d_in, a.d_out, tuple(ops))


def choi_distance(a: ChoiState, b: ChoiState) -> float:
    """Trace distance between two Choi states."""
    return trace_distance(a.choi, b.choi)


def as_kraus(channel) -> KrausChannel:
    """Coerce any of the three representations to Kraus form."""
    if isinstance(channel, KrausChannel):
        return channel
    if isinstance(channel, ChoiState):
        return choi_to_kraus(channel)
    if isinstance(channel, StinespringDilation):
        return stinespring_to_kraus(channel)
    raise TypeError(f"not a channel representation: {type(channel).__name__}")


def as_choi(channel) -> ChoiState:
    """Coerce any of the three representations to Choi form."""
    if isinstance(channel, ChoiState):
        return channel
    return kraus_to_choi(as_kraus(channel))


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel(dim, dim, (np.eye(dim),))


def unitary_channel(u) -> KrausChannel:
    u = np.array(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("unitary must be a square matrix")
    if np.abs(u @ u.conj().T - np.eye(u.shape[0])).max() > UNITARITY_TOL:
        raise ValueError("matrix is not unitary within tolerance")
    return KrausChannel(u.shape[0], u.shape[0], (u,))


def depolarizing_channel(rate: float) -> KrausChannel:
    """Qubit depolarizer E[rho] = (1-r) rho + r I/2."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"depolarizing rate must be in [0, 1], got {rate}")
    ops = [np.sqrt(1.0 - 3.0 * rate / 4.0) * np.eye(2)]
    ops.extend(np.sqrt(rate / 4.0) * p for p in (PAULI_X, PAULI_Y, PAULI_Z))
    return KrausChannel(2, 2, tuple(op for op in ops if np.abs(op).max() > 0))


def xz_flip_channel(p: float) -> KrausChannel:
    """E[rho] = (1-p) rho + p/2 (X rho X + Z rho Z): X and Z flips, p/2 each."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {p}")
    ops = [np.sqrt(1.0 - p) * np.eye(2), np.sqrt(p / 2.0) * PAULI_X, np.sqrt(p / 2.0) * PAULI_Z]
    return KrausChannel(2, 2, tuple(op for op in ops if np.abs(op).max() > 0))


def noisy_xz_flip_channel(p: float, r: float) -> KrausChannel:
    """xz_flip(p) under depolarizing noise: (1-r) xz_flip(p)[rho] + r I/2."""
    return mix(xz_flip_channel(p), depolarizing_channel(1.0), r)


def amplitude_damping_channel(gamma: float) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"damping rate must be in [0, 1], got {gamma}")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausChannel(2, 2, (k0, k1))


BUILTIN_CHANNELS = {
    "identity": identity_channel,
    "unitary": unitary_channel,
    "depolarizing": depolarizing_channel,
    "xz_flip": xz_flip_channel,
    "noisy_xz_flip": noisy_xz_flip_channel,
    "amplitude_damping": amplitude_damping_channel,
}


def builtin(name: str, **params) -> KrausChannel:
    """Construct a builtin channel by name.

    Known names: identity(dim), unitary(u), depolarizing(rate), xz_flip(p),
    noisy_xz_flip(p, r), amplitude_damping(gamma).
    """
    try:
        factory = BUILTIN_CHANNELS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_CHANNELS))
        raise ValueError(f"unknown builtin channel {name!r}; known: {known}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for builtin {name!r}: {exc}") from None
