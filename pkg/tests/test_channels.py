import numpy as np
import pytest

from broadq.channels import (
    ChoiState,
    KrausChannel,
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
from broadq.states import DensityMatrix, HilbertSpec, fidelity, haar_pure

from oracles import (
    BELL,
    PAULI,
    bloch_density,
    ginibre_density,
    haar_unitary,
    random_kraus_ops,
    xz_flip_bell_weights,
    xz_flip_bloch_scale,
)

QUBIT = HilbertSpec((2,))
PHI_PLUS = np.outer(BELL[:, 0], BELL[:, 0].conj())


def random_channel(seed, d=2, n_ops=3) -> KrausChannel:
    rng = np.random.default_rng(seed)
    return KrausChannel(d, d, random_kraus_ops(rng, d, n_ops))


class TestKrausChannel:
    def test_rejects_non_trace_preserving(self):
        with pytest.raises(ValueError, match="trace-preserving"):
            KrausChannel(2, 2, (0.9 * np.eye(2),))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError, match="shape"):
            KrausChannel(2, 2, (np.eye(3),))

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="at least one"):
            KrausChannel(2, 2, ())


class TestApply:
    def test_identity(self):
        rho = haar_pure(QUBIT, seed=0).density()
        assert np.abs(apply(builtin("identity", dim=2), rho).matrix - rho.matrix).max() < 1e-14

    def test_full_depolarizer(self):
        zero = DensityMatrix(QUBIT, np.diag([1.0, 0.0]))
        out = apply(builtin("depolarizing", rate=1.0), zero)
        assert np.abs(out.matrix - np.eye(2) / 2).max() < 1e-14

    def test_xz_flip_bloch_scaling(self):
        # Pauli algebra: conjugation by X negates (y, z), by Z negates (x, y)
        p = 2.0 / 3.0
        n = np.array([0.48, -0.6, 0.64])
        rho = DensityMatrix(QUBIT, bloch_density(n))
        out = apply(builtin("xz_flip", p=p), rho).matrix
        expected = bloch_density(xz_flip_bloch_scale(p) * n)
        assert np.abs(out - expected).max() < 1e-12
        bloch_len = np.linalg.norm(xz_flip_bloch_scale(p) * n)
        assert abs(bloch_len - 1.0 / 3.0) < 1e-12

    def test_output_is_valid_density_matrix(self):
        # DensityMatrix construction enforces the CPTP invariants
        rng = np.random.default_rng(1)
        for trial in range(1000):
            channel = random_channel(seed=trial, n_ops=1 + trial % 4)
            rho = DensityMatrix(QUBIT, ginibre_density(rng, 2))
            apply(channel, rho)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            apply(builtin("identity", dim=2), DensityMatrix(HilbertSpec((3,)), np.eye(3) / 3))


class TestKrausToChoi:
    def test_identity_gives_maximally_entangled(self):
        choi = kraus_to_choi(builtin("identity", dim=2))
        assert np.abs(choi.matrix - PHI_PLUS).max() < 1e-14

    def test_full_depolarizer_gives_maximally_mixed(self):
        choi = kraus_to_choi(builtin("depolarizing", rate=1.0))
        assert np.abs(choi.matrix - np.eye(4) / 4).max() < 1e-14

    def test_xz_flip_is_bell_diagonal(self):
        for p in (0.2, 2.0 / 3.0, 0.9):
            choi = kraus_to_choi(builtin("xz_flip", p=p))
            in_bell = BELL.conj().T @ choi.matrix @ BELL
            assert np.abs(in_bell - np.diag(np.diagonal(in_bell))).max() < 1e-12
            assert np.abs(np.diagonal(in_bell).real - xz_flip_bell_weights(p)).max() < 1e-12


class TestChoiToKraus:
    def test_maximally_entangled_gives_identity(self):
        ops = choi_to_kraus(as_choi(builtin("identity", dim=2))).kraus_ops
        assert len(ops) == 1
        phase = ops[0][0, 0] / abs(ops[0][0, 0])
        assert np.abs(ops[0] / phase - np.eye(2)).max() < 1e-12

    def test_maximally_mixed_gives_four_operators(self):
        ops = choi_to_kraus(as_choi(builtin("depolarizing", rate=1.0))).kraus_ops
        assert len(ops) == 4  # completeness is checked at construction

    def test_round_trip(self):
        choi = as_choi(builtin("xz_flip", p=1.0 / 3.0))
        again = kraus_to_choi(choi_to_kraus(choi))
        assert np.abs(again.matrix - choi.matrix).max() < 1e-10

    def test_random_round_trips(self):
        for seed in range(50):
            channel = random_channel(seed, n_ops=1 + seed % 4)
            choi = kraus_to_choi(channel)
            back = kraus_to_choi(choi_to_kraus(choi))
            assert choi_distance(choi, back) < 1e-8


class TestApplyViaChoi:
    def test_identity(self):
        rho = haar_pure(QUBIT, seed=5).density()
        out = apply_via_choi(as_choi(builtin("identity", dim=2)), rho)
        assert np.abs(out.matrix - rho.matrix).max() < 1e-12

    def test_xz_flip_on_basis_state(self):
        choi = as_choi(builtin("xz_flip", p=2.0 / 3.0))
        zero = DensityMatrix(QUBIT, np.diag([1.0, 0.0]))
        out = apply_via_choi(choi, zero)
        assert np.abs(out.matrix - np.diag([2.0 / 3.0, 1.0 / 3.0])).max() < 1e-12

    def test_agreement_with_kraus_application(self):
        rng = np.random.default_rng(2)
        channel = random_channel(seed=77)
        choi = kraus_to_choi(channel)
        for _ in range(100):
            rho = DensityMatrix(QUBIT, ginibre_density(rng, 2))
            direct = apply(channel, rho).matrix
            via = apply_via_choi(choi, rho).matrix
            assert np.abs(direct - via).max() < 1e-9


class TestStinespring:
    def test_identity_reconstruction(self):
        channel = builtin("identity", dim=2)
        dil = stinespring(channel)
        assert dil.d_ancilla == 1
        assert choi_distance(as_choi(stinespring_to_kraus(dil)), as_choi(channel)) < 1e-12

    def test_full_depolarizer(self):
        channel = builtin("depolarizing", rate=1.0)
        dil = stinespring(channel)
        assert dil.unitary.shape == (8, 8)
        assert choi_distance(as_choi(stinespring_to_kraus(dil)), as_choi(channel)) < 1e-10

    def test_xz_flip(self):
        channel = builtin("xz_flip", p=2.0 / 3.0)
        dil = stinespring(channel)
        assert dil.d_ancilla == 3
        assert choi_distance(as_choi(stinespring_to_kraus(dil)), as_choi(channel)) < 1e-10

    def test_deterministic(self):
        channel = builtin("amplitude_damping", gamma=0.3)
        assert np.array_equal(stinespring(channel).unitary, stinespring(channel).unitary)

    def test_random_reconstructions(self):
        for seed in range(30):
            channel = random_channel(seed + 1000, n_ops=1 + seed % 4)
            dil = stinespring(channel)
            assert choi_distance(as_choi(stinespring_to_kraus(dil)), as_choi(channel)) < 1e-8


class TestMix:
    def test_endpoints(self):
        a, b = builtin("xz_flip", p=0.3), builtin("amplitude_damping", gamma=0.5)
        assert choi_distance(as_choi(mix(a, b, 0.0)), as_choi(a)) < 1e-12
        assert choi_distance(as_choi(mix(a, b, 1.0)), as_choi(b)) < 1e-12

    def test_choi_linearity(self):
        rng = np.random.default_rng(3)
        for seed in range(20):
            a, b = random_channel(3 * seed), random_channel(3 * seed + 1)
            w = float(rng.uniform())
            mixed = kraus_to_choi(mix(a, b, w)).matrix
            expected = (1 - w) * kraus_to_choi(a).matrix + w * kraus_to_choi(b).matrix
            assert np.abs(mixed - expected).max() < 1e-12

    def test_noisy_xz_flip_is_the_depolarized_mixture(self):
        p, r = 0.4, 0.35
        got = kraus_to_choi(builtin("noisy_xz_flip", p=p, r=r)).matrix
        expected = (1 - r) * kraus_to_choi(builtin("xz_flip", p=p)).matrix + r * np.eye(4) / 4
        assert np.abs(got - expected).max() < 1e-12

    def test_weight_out_of_range(self):
        a = builtin("identity", dim=2)
        with pytest.raises(ValueError, match="weight"):
            mix(a, a, 1.5)


class TestBuiltin:
    def test_xz_flip_at_zero_is_identity(self):
        gap = choi_distance(as_choi(builtin("xz_flip", p=0.0)), as_choi(builtin("identity", dim=2)))
        assert gap < 1e-14

    def test_noisy_xz_flip_at_zero_noise(self):
        p = 0.55
        assert (
            choi_distance(as_choi(builtin("noisy_xz_flip", p=p, r=0.0)), as_choi(builtin("xz_flip", p=p)))
            < 1e-14
        )

    def test_unitary(self):
        u = haar_unitary(np.random.default_rng(4), 2)
        channel = builtin("unitary", u=u)
        rho = haar_pure(QUBIT, seed=9).density()
        assert np.abs(apply(channel, rho).matrix - u @ rho.matrix @ u.conj().T).max() < 1e-12

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown builtin"):
            builtin("teleporter")

    def test_bad_params(self):
        with pytest.raises(ValueError):
            builtin("depolarizing", rate=1.5)
        with pytest.raises(ValueError):
            builtin("xz_flip", p=-0.1)
        with pytest.raises(ValueError, match="bad parameters"):
            builtin("xz_flip", q=0.5)

    def test_amplitude_damping_fixed_point(self):
        out = apply(builtin("amplitude_damping", gamma=1.0), DensityMatrix(QUBIT, np.diag([0.0, 1.0])))
        assert np.abs(out.matrix - np.diag([1.0, 0.0])).max() < 1e-12


class TestChoiState:
    def test_rejects_non_trace_preserving_marginal(self):
        biased = np.diag([0.5, 0.3, 0.1, 0.1])
        with pytest.raises(ValueError, match="marginal"):
            ChoiState(DensityMatrix(HilbertSpec((2, 2)), biased), 2, 2)

    def test_as_kraus_round_trip(self):
        channel = builtin("xz_flip", p=0.25)
        again = as_kraus(kraus_to_choi(channel))
        assert choi_distance(as_choi(again), as_choi(channel)) < 1e-10


def test_fidelity_between_channel_outputs_uses_bloch_geometry():
    # apply() composed with state fidelity matches the collinear closed form
    from oracles import fidelity_collinear

    p, r = 0.5, 0.6
    psi = haar_pure(QUBIT, seed=21)
    a = apply(builtin("xz_flip", p=p), psi.density())
    b = apply(builtin("noisy_xz_flip", p=p, r=r), psi.density())
    n = np.array(
        [
            2 * (psi.amplitudes[0].conjugate() * psi.amplitudes[1]).real,
            2 * (psi.amplitudes[0].conjugate() * psi.amplitudes[1]).imag,
            abs(psi.amplitudes[0]) ** 2 - abs(psi.amplitudes[1]) ** 2,
        ]
    )
    s = np.linalg.norm(xz_flip_bloch_scale(p) * n)
    assert abs(fidelity(a, b) - fidelity_collinear(s, (1 - r) * s)) < 1e-11
