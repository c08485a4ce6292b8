import numpy as np
import pytest

from broadq.channels import KrausChannel, builtin
from broadq.metrics import (
    DistanceReport,
    FidelityReport,
    avg_gate_distance,
    avg_gate_fidelity,
    gate_reports,
    min_gate_fidelity,
)

from oracles import PAULI, curve_point, haar_unitary, min_fidelity_grid_oracle, random_kraus_ops

INV_SQRT2 = 1.0 / np.sqrt(2.0)

# frozen from the 1D adaptive-quadrature oracle (curve_point), abs err < 1e-12
CURVE_ORACLE_VALUES = {
    (1.0 / 3.0, 0.3): (0.994845526511992, 0.085459978807807),
    (1.0 / 3.0, 0.7): (0.975222938452146, 0.199406617218217),
    (1.0 / 3.0, 1.0): (0.952317874046255, 0.284866596026024),
    (0.0, 1.0): (0.707106781186548, 0.5),
    (2.0 / 3.0, 1.0): (0.985598559653489, 1.0 / 6.0),
}


def random_channel(seed, d=2, n_ops=3) -> KrausChannel:
    rng = np.random.default_rng(seed)
    return KrausChannel(d, d, random_kraus_ops(rng, d, n_ops))


class TestAvgGateFidelity:
    def test_self_fidelity_is_one(self):
        e = builtin("xz_flip", p=0.3)
        assert abs(avg_gate_fidelity(e, e, method="quad").value - 1.0) <= 1e-10
        assert abs(avg_gate_fidelity(e, e, method="mc", n_samples=500).value - 1.0) <= 1e-10

    def test_identity_vs_full_depolarizer(self):
        # the integrand is the constant 1/sqrt(2), so quadrature is exact
        got = avg_gate_fidelity(builtin("identity", dim=2), builtin("depolarizing", rate=1.0), method="quad")
        assert abs(got.value - INV_SQRT2) < 1e-12
        mc = avg_gate_fidelity(
            builtin("identity", dim=2), builtin("depolarizing", rate=1.0), method="mc", n_samples=100_000
        )
        assert abs(mc.value - INV_SQRT2) < 0.002

    def test_transpose_approximation_point(self):
        p = 2.0 / 3.0
        got = avg_gate_fidelity(builtin("xz_flip", p=p), builtin("noisy_xz_flip", p=p, r=1.0), method="quad")
        expected = (np.sqrt(2.0 / 3.0) + np.sqrt(1.0 / 3.0)) / np.sqrt(2.0)
        assert abs(got.value - expected) < 1e-12
        assert abs(got.value - 0.9856) < 5e-4

    @pytest.mark.parametrize("p,r", sorted(CURVE_ORACLE_VALUES))
    def test_against_independent_quadrature_oracle(self, p, r):
        frozen_f, frozen_d = CURVE_ORACLE_VALUES[(p, r)]
        live_f, live_d = curve_point(p, r)
        assert abs(live_f - frozen_f) < 1e-11 and abs(live_d - frozen_d) < 1e-11
        f_rep, d_rep = gate_reports(
            builtin("xz_flip", p=p), builtin("noisy_xz_flip", p=p, r=r), method="quad"
        )
        assert abs(f_rep.value - frozen_f) < 1e-9
        assert abs(d_rep.value - frozen_d) < 1e-9

    def test_quadrature_rejected_beyond_qubits(self):
        e = KrausChannel(3, 3, (np.eye(3),))
        with pytest.raises(ValueError, match="qubit"):
            avg_gate_fidelity(e, e, method="quad")

    def test_monte_carlo_determinism(self):
        e, f = builtin("xz_flip", p=0.2), builtin("amplitude_damping", gamma=0.4)
        a = avg_gate_fidelity(e, f, method="mc", n_samples=2000, seed=3)
        b = avg_gate_fidelity(e, f, method="mc", n_samples=2000, seed=3)
        c = avg_gate_fidelity(e, f, method="mc", n_samples=2000, seed=4)
        assert a.value == b.value
        assert a.value != c.value

    def test_unknown_method(self):
        e = builtin("identity", dim=2)
        with pytest.raises(ValueError, match="method"):
            avg_gate_fidelity(e, e, method="magic")

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            avg_gate_fidelity(builtin("identity", dim=2), KrausChannel(3, 3, (np.eye(3),)))


class TestMinGateFidelity:
    def test_self_minimum_is_one(self):
        e = builtin("amplitude_damping", gamma=0.2)
        assert abs(min_gate_fidelity(e, e).value - 1.0) < 1e-9

    def test_constant_integrand(self):
        got = min_gate_fidelity(builtin("identity", dim=2), builtin("depolarizing", rate=1.0))
        assert abs(got.value - INV_SQRT2) < 1e-10

    def test_dephasing_minimized_on_equator(self):
        # F(psi, dephased psi) = sqrt((1 + nz^2)/2); minimum 1/sqrt(2) at nz = 0
        dephasing = KrausChannel(2, 2, (np.sqrt(0.5) * np.eye(2), np.sqrt(0.5) * PAULI["z"]))
        identity = builtin("identity", dim=2)
        from broadq.channels import apply_raw

        oracle = min_fidelity_grid_oracle(
            lambda rho: apply_raw(identity, rho), lambda rho: apply_raw(dephasing, rho)
        )
        got = min_gate_fidelity(identity, dephasing)
        assert abs(oracle - INV_SQRT2) < 1e-5  # 10^6-point grid resolution
        assert abs(got.value - INV_SQRT2) < 1e-10
        assert got.value <= oracle + 1e-9
        nz = abs(got.minimizer.amplitudes[0]) ** 2 - abs(got.minimizer.amplitudes[1]) ** 2
        assert abs(nz) < 1e-5

    def test_minimizer_achieves_reported_value(self):
        from broadq.channels import apply
        from broadq.states import fidelity

        e, f = builtin("xz_flip", p=0.7), builtin("amplitude_damping", gamma=0.3)
        rep = min_gate_fidelity(e, f)
        rho = rep.minimizer.density()
        assert abs(fidelity(apply(e, rho), apply(f, rho)) - rep.value) < 1e-9

    def test_minimum_bounds_the_average(self):
        for seed in range(10):
            e, f = random_channel(2 * seed), random_channel(2 * seed + 1)
            avg = avg_gate_fidelity(e, f, method="quad").value
            low = min_gate_fidelity(e, f).value
            assert low <= avg + 1e-9

    def test_general_dimension_path(self):
        e = KrausChannel(3, 3, (np.eye(3),))
        u = np.diag([1.0, 1.0, -1.0]).astype(complex)
        f = KrausChannel(3, 3, (u,))
        rep = min_gate_fidelity(e, f)
        # |<psi|U|psi>| minimized at equal superposition of the +1/-1 sectors -> 0
        assert rep.value < 0.05
        assert rep.estimator == "grid_min"


class TestAvgGateDistance:
    def test_self_distance_is_zero(self):
        e = builtin("xz_flip", p=0.4)
        assert avg_gate_distance(e, e, method="quad").value <= 1e-12

    def test_identity_vs_full_depolarizer(self):
        got = avg_gate_distance(builtin("identity", dim=2), builtin("depolarizing", rate=1.0), method="quad")
        assert abs(got.value - 0.5) < 1e-12

    @pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
    def test_pure_vs_depolarized_is_half_r(self, r):
        got = avg_gate_distance(builtin("xz_flip", p=0.0), builtin("noisy_xz_flip", p=0.0, r=r), method="quad")
        assert abs(got.value - r / 2.0) < 1e-12

    def test_worst_case_dominates_mean(self):
        e, f = builtin("xz_flip", p=0.3), builtin("amplitude_damping", gamma=0.5)
        mean = avg_gate_distance(e, f, method="quad").value
        worst = avg_gate_distance(e, f, method="quad", worst_case=True).value
        assert worst >= mean - 1e-12


class TestGateLevelInequalities:
    def test_fuchs_van_de_graaf_lower(self):
        for seed in range(20):
            e, f = random_channel(3 * seed), random_channel(3 * seed + 2)
            fa = avg_gate_fidelity(e, f, method="quad").value
            da = avg_gate_distance(e, f, method="quad").value
            assert 1.0 - fa <= da + 1e-10

    def test_monte_carlo_matches_quadrature(self):
        for seed in range(20):
            e, f = random_channel(5 * seed), random_channel(5 * seed + 1)
            quad = avg_gate_fidelity(e, f, method="quad").value
            mc = avg_gate_fidelity(e, f, method="mc", n_samples=20_000, seed=seed)
            assert abs(mc.value - quad) <= 3.0 * mc.std_error

    def test_unitary_invariance_of_the_average(self):
        rng = np.random.default_rng(12)
        e, f = builtin("xz_flip", p=0.3), builtin("amplitude_damping", gamma=0.4)
        base = avg_gate_fidelity(e, f, method="quad").value
        for _ in range(5):
            u, v = haar_unitary(rng, 2), haar_unitary(rng, 2)
            rot_e = KrausChannel(2, 2, tuple(u @ k @ v for k in e.kraus_ops))
            rot_f = KrausChannel(2, 2, tuple(u @ k @ v for k in f.kraus_ops))
            assert abs(avg_gate_fidelity(rot_e, rot_f, method="quad").value - base) < 1e-9


class TestReports:
    def test_std_error_present_iff_monte_carlo(self):
        with pytest.raises(ValueError, match="std_error"):
            FidelityReport(value=0.5, estimator="quadrature", std_error=0.1)
        with pytest.raises(ValueError, match="std_error"):
            FidelityReport(value=0.5, estimator="monte_carlo")
        with pytest.raises(ValueError, match="std_error"):
            DistanceReport(value=0.5, estimator="monte_carlo")

    def test_value_range(self):
        with pytest.raises(ValueError, match="value"):
            FidelityReport(value=1.5, estimator="quadrature")

    def test_metadata(self):
        rep = avg_gate_fidelity(
            builtin("identity", dim=2), builtin("identity", dim=2), method="mc", n_samples=100, seed=7
        )
        assert rep.estimator == "monte_carlo" and rep.n_samples == 100 and rep.seed == 7
        quad = avg_gate_fidelity(builtin("identity", dim=2), builtin("identity", dim=2), method="quad")
        assert quad.scheme == "gauss_legendre_32x64"
