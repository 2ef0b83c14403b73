"""Unit tests for the coarse-grained master equation."""
import numpy as np
import pytest

from helpers import random_density
from zenosim.dynamics import ProtocolSpec, interval_step_operators
from zenosim.lindblad import (
    LindbladParams, RateCoefficients, drive_unitary, first_order_kraus,
    kraus_step, lindblad_rhs, lindblad_samples, propagate_lindblad,
    rates_from_angle,
)
from zenosim.statespace import (
    DensityOperator, InvariantError, Ket, OSCILLATOR, SpaceConfig,
    apply_kraus, fock_state,
)


class TestRates:
    @pytest.mark.parametrize("phi,expected", [
        (np.pi, (0.5, 1.0, 1.5)),
        (2 * np.pi, (0.0, 2.0, 4.0)),
        (4 * np.pi, (0.0, 0.0, 0.0)),
        # At phi = pi/2: transfer 1/4, partial 1 - sqrt(1/2).
        (np.pi / 2, (0.25, 1.0 - np.sqrt(0.5),
                     (1.0 - np.sqrt(0.5)) ** 2 + 0.25)),
    ])
    def test_frozen_values(self, phi, expected):
        rates = rates_from_angle(phi)
        np.testing.assert_allclose(rates, expected, atol=1e-12)

    def test_consistency_identity(self, rng):
        for phi in rng.uniform(0, 8 * np.pi, size=20):
            t, p, d = rates_from_angle(phi)
            assert d == pytest.approx(p * p + t, abs=1e-14)
            assert t >= 0 and p >= 0 and d >= 0

    def test_transfer_period(self, rng):
        for phi in rng.uniform(0, 2 * np.pi, size=5):
            a, b = rates_from_angle(phi), rates_from_angle(phi + 2 * np.pi)
            assert a.transfer == pytest.approx(b.transfer, abs=1e-12)


class TestLindbladParams:
    def test_from_angle_roundtrip(self):
        params = LindbladParams.from_angle(np.pi, 0.5, level=2,
                                           drive_amplitude=0.004j)
        assert params.kappa == pytest.approx(2.0)
        assert params.tau == pytest.approx(0.5)
        assert (params.transfer, params.dephasing_partial, params.dephasing) \
            == pytest.approx((0.5, 1.0, 1.5))
        assert params.level == 2

    def test_consistency_enforced(self):
        with pytest.raises(ValueError, match="inconsistent"):
            LindbladParams(kappa=1.0, transfer=0.5, dephasing_partial=1.0,
                           dephasing=1.0, level=2)

    def test_validation(self):
        with pytest.raises(ValueError, match="tau"):
            LindbladParams.from_angle(np.pi, 0.0, level=2)
        with pytest.raises(ValueError, match="kappa"):
            LindbladParams(kappa=0.0, transfer=0.5, dephasing_partial=1.0,
                           dephasing=1.5, level=2)
        with pytest.raises(ValueError, match=">= 0"):
            LindbladParams(kappa=1.0, transfer=-0.1, dephasing_partial=0.0,
                           dephasing=-0.1, level=2)
        with pytest.raises(ValueError, match="level"):
            LindbladParams(kappa=1.0, transfer=0.0, dephasing_partial=0.0,
                           dephasing=0.0, level=0)


class TestFirstOrderKraus:
    def test_elements_frozen(self, small_space):
        ops = first_order_kraus(np.pi, 2, small_space)
        inv_sqrt2 = 2 ** -0.5
        assert ops["h"][2, 2] == pytest.approx(0.0, abs=1e-15)
        assert ops["h"][3, 3] == 1.0
        assert ops["g"][2, 2] == pytest.approx(inv_sqrt2)
        assert ops["e"][1, 2] == pytest.approx(inv_sqrt2)
        assert np.count_nonzero(ops["g"]) == 1
        assert np.count_nonzero(ops["e"]) == 1

    def test_completeness_identity(self, rng, small_space):
        for phi in rng.uniform(0, 4 * np.pi, size=6):
            ops = first_order_kraus(phi, 3, small_space)
            total = sum(w.conj().T @ w for w in ops.values())
            np.testing.assert_allclose(total, np.eye(small_space.fock_dim),
                                       atol=1e-15)

    def test_level_bounds(self, small_space):
        with pytest.raises(ValueError):
            first_order_kraus(np.pi, 0, small_space)
        with pytest.raises(ValueError):
            first_order_kraus(np.pi, 10, small_space)


class TestKrausStep:
    def test_matches_exact_channel_without_drive(self, rng, small_space):
        # For zero drive in the resonant frame the leading-order interval
        # operators reproduce the exact channel (not just approximate it).
        phi, tau = 1.234, 2.0
        spec = ProtocolSpec.from_tau(tau=tau, rabi_angles={3: phi}, n_max=10,
                                     sub_samples=1)
        exact = interval_step_operators(spec)
        approx_ops = first_order_kraus(phi, 3, small_space)
        identity = drive_unitary(0j, tau, small_space.fock_dim)
        rho = DensityOperator(random_density(rng, 11), OSCILLATOR)
        via_exact = apply_kraus(list(exact), rho.matrix)
        via_approx = kraus_step(rho, approx_ops, identity).matrix
        np.testing.assert_allclose(via_approx, via_exact, atol=1e-12)

    def test_drive_error_shrinks_with_displacement(self, rng, small_space):
        # With a drive the leading-order step deviates at O(phi * beta).
        phi = np.pi
        rho = DensityOperator.from_ket(fock_state(3, small_space))
        errors = []
        for beta in (0.1, 0.05):
            tau = beta / 0.005
            spec = ProtocolSpec.from_tau(tau=tau, rabi_angles={3: phi},
                                         n_max=10, drive_amplitude=0.005j,
                                         sub_samples=1)
            exact = apply_kraus(list(interval_step_operators(spec)), rho.matrix)
            ops = first_order_kraus(phi, 3, small_space)
            u = drive_unitary(0.005j, tau, small_space.fock_dim)
            approx = kraus_step(rho, ops, u).matrix
            errors.append(np.max(np.abs(approx - exact)))
        assert errors[1] < errors[0] < 0.05

    def test_requires_oscillator_state(self, rng, small_space):
        ops = first_order_kraus(np.pi, 2, small_space)
        bad = DensityOperator(random_density(rng, 11), "bipartite")
        with pytest.raises(InvariantError, match="oscillator"):
            kraus_step(bad, ops, np.eye(11))


class TestDriveUnitary:
    def test_displaces_vacuum(self):
        # After time tau the vacuum is coherent with P(1) = b^2 exp(-b^2),
        # b = |alpha| tau.
        alpha, tau, dim = 0.005j, 60.0, 40
        u = drive_unitary(alpha, tau, dim)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(dim), atol=1e-12)
        b = abs(alpha) * tau
        vacuum = np.zeros(dim)
        vacuum[0] = 1.0
        p1 = abs((u @ vacuum)[1]) ** 2
        assert p1 == pytest.approx(b ** 2 * np.exp(-b ** 2), abs=1e-9)


class TestGeneratorRhs:
    def params(self, drive=0j):
        return LindbladParams.from_angle(2.0, 0.8, level=3,
                                         drive_amplitude=drive)

    def test_trace_free_and_hermiticity_preserving(self, rng):
        params = self.params(drive=0.004j)
        rho = random_density(rng, 8)
        out = lindblad_rhs(rho, params)
        assert abs(out.trace()) < 1e-14
        np.testing.assert_allclose(out, out.conj().T, atol=1e-14)

    def test_population_flow_frozen(self):
        # From |z><z|: population leaves z at rate kappa * transfer and
        # lands on z - 1; dephasing moves no population.
        params = self.params()
        rho = np.zeros((8, 8), dtype=complex)
        rho[3, 3] = 1.0
        out = lindblad_rhs(rho, params)
        rate = params.kappa * params.transfer
        assert out[3, 3] == pytest.approx(-rate, abs=1e-14)
        assert out[2, 2] == pytest.approx(rate, abs=1e-14)
        assert abs(out).sum() == pytest.approx(2 * rate, abs=1e-12)

    def test_coherence_damping_frozen(self):
        # The (z, z-1) coherence decays at kappa (transfer + dephasing) / 2.
        params = self.params()
        op = np.zeros((8, 8), dtype=complex)
        op[3, 2] = 1.0
        out = lindblad_rhs(op, params)
        expected = -0.5 * params.kappa * (params.transfer + params.dephasing)
        assert out[3, 2] == pytest.approx(expected, abs=1e-14)

    def test_structured_matches_dense(self, rng):
        from zenosim.lindblad import _structured_rhs_factory
        for drive in (0j, 0.004j, 0.001 - 0.003j):
            params = self.params(drive=drive)
            rhs = _structured_rhs_factory(params, 8)
            for _ in range(3):
                rho = random_density(rng, 8)
                np.testing.assert_allclose(rhs(rho), lindblad_rhs(rho, params),
                                           atol=1e-14)


class TestIntegration:
    def test_population_decay_closed_form(self):
        params = LindbladParams.from_angle(2.0, 0.8, level=3)
        space = SpaceConfig(n_max=7)
        rho0 = DensityOperator.from_ket(fock_state(3, space))
        total = 2.5 * params.tau
        traj = propagate_lindblad(rho0, params, total, samples=10)
        expected = np.exp(-params.kappa * params.transfer * traj.times)
        np.testing.assert_allclose(traj.populations[:, 3], expected, rtol=1e-6)

    def test_coherence_decay_closed_form(self):
        params = LindbladParams.from_angle(1.1, 0.5, level=2)
        space = SpaceConfig(n_max=5)
        ket = Ket.normalized([0.0, 1.0, 1.0, 0.0, 0.0, 0.0], OSCILLATOR)
        rho0 = DensityOperator.from_ket(ket)
        total = 1.5 * params.tau
        samples = list(lindblad_samples(rho0.matrix, params, total, samples=6))
        rate = 0.5 * params.kappa * (params.transfer + params.dephasing)
        for t, mat in samples:
            assert abs(mat[2, 1]) == pytest.approx(0.5 * np.exp(-rate * t),
                                                   rel=1e-6)

    def test_fourth_order_convergence(self):
        params = LindbladParams.from_angle(2.5, 1.0, level=2,
                                           drive_amplitude=0.005j)
        space = SpaceConfig(n_max=6)
        rho0 = DensityOperator.from_ket(fock_state(2, space))
        total = 2.0

        def final(dt):
            out = None
            for _, mat in lindblad_samples(rho0.matrix, params, total,
                                           dt=dt, samples=1):
                out = mat
            return out

        reference = final(1.0 / 160.0)
        err_coarse = np.max(np.abs(final(1.0 / 20.0) - reference))
        err_fine = np.max(np.abs(final(1.0 / 40.0) - reference))
        assert err_fine < err_coarse / 8.0

    def test_step_guards(self):
        params = LindbladParams.from_angle(np.pi, 1.0, level=2)
        rho = np.eye(4, dtype=complex) / 4.0
        with pytest.raises(ValueError, match="tau/10"):
            next(lindblad_samples(rho, params, 1.0, dt=0.2))
        with pytest.raises(ValueError, match="dt must be > 0"):
            next(lindblad_samples(rho, params, 1.0, dt=0.0))
        with pytest.raises(ValueError, match="total_time"):
            next(lindblad_samples(rho, params, 0.0))
        hot = LindbladParams(kappa=1.0, transfer=3.0, dephasing_partial=1.0,
                             dephasing=4.0, level=1)
        with pytest.raises(ValueError, match="reduce dt"):
            next(lindblad_samples(rho, hot, 1.0, dt=0.1))

    def test_trajectory_layout_and_store_policies(self):
        params = LindbladParams.from_angle(np.pi, 1.0, level=2)
        space = SpaceConfig(n_max=6)
        rho0 = DensityOperator.from_ket(fock_state(2, space))
        traj = propagate_lindblad(rho0, params, 3.0, samples=10)
        assert traj.times.shape[0] == 11
        np.testing.assert_array_equal(traj.boundary_indices, [0, 10])
        assert traj.escape_level == 2
        assert len(traj.states) == 2  # boundary policy: first and last
        assert np.all(np.diff(traj.escape_population) < 0)  # pure decay
        all_states = propagate_lindblad(rho0, params, 3.0, samples=10,
                                        store_states="all")
        assert len(all_states.states) == 11
        none = propagate_lindblad(rho0, params, 3.0, samples=10,
                                  store_states="none")
        assert len(none.states) == 1
        np.testing.assert_allclose(none.final_state.matrix,
                                   traj.final_state.matrix, atol=1e-14)

    def test_sample_grid_is_exact(self):
        params = LindbladParams.from_angle(np.pi, 0.7, level=1)
        rho = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
        times = [t for t, _ in lindblad_samples(rho, params, 2.1, samples=3)]
        np.testing.assert_allclose(times, [0.0, 0.7, 1.4, 2.1], atol=1e-12)

    def test_state_guards_flag(self):
        # Differences (traceless operators) propagate with guards off.
        params = LindbladParams.from_angle(np.pi, 0.5, level=1)
        delta = np.zeros((4, 4), dtype=complex)
        delta[0, 0], delta[1, 1] = 1.0, -1.0
        out = list(lindblad_samples(delta, params, 1.0, samples=2,
                                    state_guards=False))
        assert len(out) == 3
        assert abs(out[-1][1].trace()) < 1e-12


def test_rate_coefficients_namedtuple():
    rates = RateCoefficients(0.5, 1.0, 1.5)
    assert rates.transfer == 0.5
    assert rates.dephasing == 1.5
