import math

import numpy as np
import pytest

from becmirror import (
    HomodyneRecord,
    NumericalError,
    ProbeCavity,
    StabilityError,
    ValidationError,
    build_diffusion,
    build_drift,
    ensemble_covariance,
    homodyne_output,
    homodyne_weights,
    logarithmic_negativity,
    reconstruct_correlations,
    reduce_to_modes,
    simulate_trajectories,
    simulate_trajectory,
    solve_steady_covariance,
)

from support import entangled_model, mild_model

DAMPED_DRIFT = np.array([[-0.5, 1.0], [-1.0, -0.5]])


def damped_diffusion(n_th: float) -> np.ndarray:
    return 0.5 * (2.0 * n_th + 1.0) * np.eye(2)


@pytest.fixture(scope="module")
def entangled_system():
    params = entangled_model()
    drift = build_drift(params)
    diffusion = build_diffusion(params)
    cov = solve_steady_covariance(drift, diffusion)
    return params, drift, diffusion, cov


@pytest.fixture(scope="module")
def relaxation_ensemble(entangled_system):
    _, drift, diffusion, _ = entangled_system
    return simulate_trajectories(
        drift, diffusion, None, dt=1e-3, horizon=260.0, seed=5, n_trajectories=10
    )


@pytest.fixture(scope="module")
def probe_configs():
    mirror = ProbeCavity(0.05, 1.0, 0.08, 0.0)
    bec = ProbeCavity(0.05, 1.0, 0.0, 0.08)
    both = ProbeCavity(0.05, 1.0, 0.08, 0.08)
    return [
        (mirror, 0.0),
        (mirror, math.pi / 2.0),
        (bec, 0.0),
        (bec, math.pi / 2.0),
        (both, math.pi / 4.0),
    ]


@pytest.fixture(scope="module")
def stationary_record_sets(entangled_system, probe_configs):
    _, drift, diffusion, cov = entangled_system
    sets = []
    for stream in range(10):
        traj = simulate_trajectory(
            drift, diffusion, cov, dt=1e-3, horizon=300.0, seed=99, stream=stream
        )
        sets.append(
            [
                homodyne_output(traj, probe, phase, noise_seed=7000 + stream * 10 + c,
                                stride=200)
                for c, (probe, phase) in enumerate(probe_configs)
            ]
        )
    return sets


class TestSimulateTrajectory:
    def test_deterministic_for_identical_seeds(self):
        kwargs = dict(dt=0.02, horizon=10.0, seed=11, stream=3)
        a = simulate_trajectory(DAMPED_DRIFT, damped_diffusion(0.5), None, **kwargs)
        b = simulate_trajectory(DAMPED_DRIFT, damped_diffusion(0.5), None, **kwargs)
        np.testing.assert_array_equal(a.samples, b.samples)
        np.testing.assert_array_equal(a.times, b.times)

    def test_streams_are_distinct(self):
        a = simulate_trajectory(
            DAMPED_DRIFT, damped_diffusion(0.5), None, dt=0.02, horizon=10.0, seed=11
        )
        b = simulate_trajectory(
            DAMPED_DRIFT, damped_diffusion(0.5), None,
            dt=0.02, horizon=10.0, seed=11, stream=1,
        )
        assert not np.array_equal(a.samples, b.samples)

    def test_zero_noise_zero_start_stays_zero(self):
        traj = simulate_trajectory(
            DAMPED_DRIFT, np.zeros((2, 2)), None, dt=0.02, horizon=5.0, seed=0
        )
        np.testing.assert_array_equal(traj.samples, np.zeros_like(traj.samples))

    def test_grid_shape(self):
        traj = simulate_trajectory(
            DAMPED_DRIFT, damped_diffusion(0.0), None, dt=0.01, horizon=2.0, seed=1
        )
        assert traj.samples.shape == (2, 201)
        assert traj.times[0] == 0.0
        assert traj.times[-1] == pytest.approx(2.0)
        np.testing.assert_allclose(np.diff(traj.times), 0.01)

    def test_rejects_unstable_drift(self):
        with pytest.raises(StabilityError):
            simulate_trajectory(
                np.eye(2), damped_diffusion(0.0), None, dt=0.01, horizon=1.0, seed=0
            )

    def test_rejects_oversized_step_before_running(self):
        with pytest.raises(ValidationError, match="gate"):
            simulate_trajectory(
                DAMPED_DRIFT, damped_diffusion(0.0), None, dt=0.2, horizon=1.0, seed=0
            )

    def test_initial_covariance_sampling(self):
        cov0 = np.diag([4.0, 9.0])
        starts = [
            simulate_trajectory(
                DAMPED_DRIFT, damped_diffusion(0.0), cov0,
                dt=0.02, horizon=0.1, seed=2, stream=s,
            ).samples[:, 0]
            for s in range(400)
        ]
        sample_cov = np.cov(np.array(starts).T, bias=True)
        assert sample_cov[0, 0] == pytest.approx(4.0, rel=0.25)
        assert sample_cov[1, 1] == pytest.approx(9.0, rel=0.25)

    def test_rejects_indefinite_initial_covariance(self):
        with pytest.raises(ValidationError, match="positive semidefinite"):
            simulate_trajectory(
                DAMPED_DRIFT, damped_diffusion(0.0), -np.eye(2),
                dt=0.02, horizon=1.0, seed=0,
            )


class TestEnsembleCovariance:
    def test_zero_noise_gives_zero_covariance(self):
        trajs = simulate_trajectories(
            DAMPED_DRIFT, np.zeros((2, 2)), None,
            dt=0.02, horizon=50.0, seed=3, n_trajectories=2,
        )
        estimate, stderr = ensemble_covariance(trajs, burn_in=10.0)
        np.testing.assert_array_equal(estimate, np.zeros((2, 2)))
        np.testing.assert_array_equal(stderr, np.zeros((2, 2)))

    def test_single_damped_mode_thermalizes(self):
        n_th = 1.5
        trajs = simulate_trajectories(
            DAMPED_DRIFT, damped_diffusion(n_th), None,
            dt=0.01, horizon=400.0, seed=4, n_trajectories=4,
        )
        estimate, stderr = ensemble_covariance(trajs, burn_in=20.0)
        target = (n_th + 0.5) * np.eye(2)
        assert np.all(np.abs(estimate - target) <= 3.0 * stderr + 1e-12)

    def test_full_system_matches_lyapunov_within_3_sigma(
        self, entangled_system, relaxation_ensemble
    ):
        _, _, _, cov = entangled_system
        estimate, stderr = ensemble_covariance(relaxation_ensemble, burn_in=60.0)
        z = np.abs(estimate - cov) / np.where(stderr > 0, stderr, 1.0)
        assert np.max(z) <= 3.0

    def test_insufficient_batches_rejected(self):
        traj = simulate_trajectory(
            DAMPED_DRIFT, damped_diffusion(0.0), None, dt=0.02, horizon=5.0, seed=6
        )
        with pytest.raises(ValidationError, match="trajectories"):
            ensemble_covariance([traj], burn_in=4.0, batch_length=1.0)

    def test_burn_in_longer_than_horizon_rejected(self):
        traj = simulate_trajectory(
            DAMPED_DRIFT, damped_diffusion(0.0), None, dt=0.02, horizon=5.0, seed=6
        )
        with pytest.raises(ValidationError, match="burn_in"):
            ensemble_covariance([traj], burn_in=10.0)

    def test_weak_convergence_rate(self):
        # Error against the exact fixed point falls like 1/sqrt(samples) over
        # three decades of accumulated time (stationary start, no burn-in).
        target = (0.5 + 0.5) * np.eye(2)
        errors = []
        horizons = [12.5, 125.0, 1250.0]
        for horizon in horizons:
            reps = []
            for rep in range(3):
                trajs = simulate_trajectories(
                    DAMPED_DRIFT, damped_diffusion(0.5), target,
                    dt=0.02, horizon=horizon, seed=100 + rep, n_trajectories=8,
                )
                estimate, _ = ensemble_covariance(
                    trajs, burn_in=0.0, batch_length=horizon / 8.0
                )
                reps.append(np.linalg.norm(estimate - target))
            errors.append(np.mean(reps))
        slope = np.polyfit(np.log(horizons), np.log(errors), 1)[0]
        assert -0.75 <= slope <= -0.25

    def test_randomized_battery_matches_lyapunov(self):
        # Strongly damped random systems: ensemble estimate within 3.5 sigma
        # elementwise of the algebraic steady state.  dt stays well below the
        # per-mode mean-square limit so the discretization bias is buried in
        # the statistical error.
        rng = np.random.default_rng(77)
        for index in range(5):
            drift = rng.normal(size=(4, 4))
            drift -= (float(np.max(np.linalg.eigvals(drift).real))
                      + rng.uniform(1.0, 2.0)) * np.eye(4)
            root = rng.normal(size=(4, 4))
            diffusion = root @ root.T / 4.0
            cov = solve_steady_covariance(drift, diffusion)
            eigs = np.linalg.eigvals(drift)
            dt_ms = float(np.min(2.0 * np.abs(eigs.real) / np.abs(eigs) ** 2))
            dt = min(0.02 / float(np.max(np.abs(eigs))), 0.05 * dt_ms)
            slowest = abs(float(np.max(eigs.real)))
            trajs = simulate_trajectories(
                drift, diffusion, cov, dt=dt, horizon=40.0 / slowest,
                seed=500 + index, n_trajectories=4,
            )
            estimate, stderr = ensemble_covariance(trajs, burn_in=0.0)
            z = np.abs(estimate - cov) / np.where(stderr > 0, stderr, 1.0)
            assert np.max(z) <= 3.5

    def test_step_refinement_within_statistical_error(self):
        target = (0.5 + 0.5) * np.eye(2)
        results = []
        for dt in (0.02, 0.01):
            trajs = simulate_trajectories(
                DAMPED_DRIFT, damped_diffusion(0.5), target,
                dt=dt, horizon=500.0, seed=42, n_trajectories=6,
            )
            results.append(ensemble_covariance(trajs, burn_in=0.0))
        (coarse, err_c), (fine, err_f) = results
        combined = np.sqrt(err_c**2 + err_f**2)
        assert np.all(np.abs(coarse - fine) <= 3.0 * combined + 1e-12)


class TestHomodyneOutput:
    def test_requires_noise_seed(self):
        traj = simulate_trajectory(
            build_drift(mild_model()), build_diffusion(mild_model()), None,
            dt=0.025, horizon=5.0, seed=1,
        )
        probe = ProbeCavity(0.05, 1.0, 0.08, 0.0)
        with pytest.raises(ValidationError, match="noise_seed"):
            homodyne_output(traj, probe, 0.0, noise_seed=None)

    def test_vacuum_passthrough_variance(self):
        # Decoupled probe: the record is pure input noise with per-sample
        # quadrature variance 1/(2 dt_record).
        params = mild_model()
        traj = simulate_trajectory(
            build_drift(params), build_diffusion(params), None,
            dt=0.025, horizon=2500.0, seed=8,
        )
        probe = ProbeCavity(0.05, 1.0, 0.0, 0.0)
        record = homodyne_output(traj, probe, 0.7, noise_seed=12, stride=8)
        expected = 1.0 / (2.0 * record.dt)
        assert record.dt == pytest.approx(0.2)
        assert np.var(record.values) == pytest.approx(expected, rel=0.05)

    def test_mirror_only_signal_content(self):
        # Strong deterministic signal, no diffusion: the record must equal the
        # rotating-frame mirror momentum up to the vacuum noise floor.
        params = mild_model()
        drift = build_drift(params)
        amp = 1e4
        traj = simulate_trajectory(
            drift, np.zeros((6, 6)), amp * np.eye(6),
            dt=0.025, horizon=40.0, seed=9,
        )
        probe = ProbeCavity(0.05, 1.0, 0.08, 0.0)
        record = homodyne_output(traj, probe, 0.0, noise_seed=13, stride=4)
        times = record.times
        q_m = traj.samples[0, ::4]
        p_m = traj.samples[1, ::4]
        rotated_momentum = np.sin(times) * q_m + np.cos(times) * p_m
        expected = -(0.08 / (2.0 * 0.05)) * rotated_momentum
        noise_floor = math.sqrt(1.0 / (2.0 * record.dt))
        assert np.max(np.abs(record.values - expected)) <= 6.0 * noise_floor

    def test_phase_selects_quadrature(self):
        params = mild_model()
        traj = simulate_trajectory(
            build_drift(params), np.zeros((6, 6)), 1e4 * np.eye(6),
            dt=0.025, horizon=40.0, seed=10,
        )
        probe = ProbeCavity(0.05, 1.0, 0.08, 0.0)
        q_record = homodyne_output(traj, probe, math.pi / 2.0, noise_seed=14, stride=4)
        q_m = traj.samples[0, ::4]
        p_m = traj.samples[1, ::4]
        rotated_position = np.cos(q_record.times) * q_m - np.sin(q_record.times) * p_m
        expected = (0.08 / (2.0 * 0.05)) * rotated_position
        noise_floor = math.sqrt(1.0 / (2.0 * q_record.dt))
        assert np.max(np.abs(q_record.values - expected)) <= 6.0 * noise_floor

    def test_weights_shape_and_scale(self):
        probe = ProbeCavity(0.05, 1.0, 0.08, 0.04)
        times = np.linspace(0.0, 10.0, 101)
        weights = homodyne_weights(probe, 0.3, 1.0, times)
        assert weights.shape == (4, 101)
        norms = np.linalg.norm(weights, axis=0)
        expected = np.hypot(0.08, 0.04) / (2.0 * 0.05)
        np.testing.assert_allclose(norms, expected, rtol=1e-12)


def _constant_record_sets(states, configs, times, dt, noise_seed_base=None):
    """Records for time-constant lab-frame states (synthetic test inputs)."""
    sets = []
    for index, state in enumerate(states):
        records = []
        for c, (probe, phase) in enumerate(configs):
            weights = homodyne_weights(probe, phase, probe.detuning1, times)
            values = weights.T @ state
            seed = None
            if noise_seed_base is not None:
                seed = noise_seed_base + index * len(configs) + c
                rng = np.random.Generator(
                    np.random.Philox(np.random.SeedSequence([seed]))
                )
                sigma = math.sqrt(1.0 / (2.0 * dt))
                xi = rng.standard_normal((2, len(times))) * sigma
                values = values + math.cos(phase) * xi[0] + math.sin(phase) * xi[1]
            records.append(
                HomodyneRecord(
                    times=times, values=values, phase=phase, probe=probe,
                    rotation=probe.detuning1, dt=dt, noise_seed=seed,
                )
            )
        sets.append(records)
    return sets


class TestReconstructCorrelations:
    def test_noiseless_synthetic_exact_recovery(self, probe_configs):
        rng = np.random.default_rng(21)
        target = np.array(
            [
                [0.9, 0.1, 0.2, -0.1],
                [0.1, 0.7, 0.0, 0.15],
                [0.2, 0.0, 0.8, -0.05],
                [-0.1, 0.15, -0.05, 1.1],
            ]
        )
        root = np.linalg.cholesky(target)
        # Eight deterministic states whose empirical second moment is exactly
        # the target: +-2 L e_i.
        states = [sign * 2.0 * root[:, i] for i in range(4) for sign in (1.0, -1.0)]
        times = np.linspace(0.0, 40.0, 300)
        sets = _constant_record_sets(states, probe_configs, times, dt=0.1)
        estimate, stderr = reconstruct_correlations(sets, noise_variance=0.0)
        np.testing.assert_allclose(estimate, target, atol=1e-8)

    def test_vacuum_records_recover_half_identity(self, probe_configs):
        rng = np.random.default_rng(22)
        states = list(rng.normal(scale=math.sqrt(0.5), size=(500, 4)))
        times = np.linspace(0.0, 40.0, 200)
        sets = _constant_record_sets(
            states, probe_configs, times, dt=0.2, noise_seed_base=50_000
        )
        estimate, stderr = reconstruct_correlations(sets)
        z = np.abs(estimate - 0.5 * np.eye(4)) / np.where(stderr > 0, stderr, 1.0)
        assert np.max(z) <= 4.0

    def test_full_pipeline_covariance_and_negativity(
        self, entangled_system, stationary_record_sets
    ):
        _, _, _, cov = entangled_system
        reduced = reduce_to_modes(cov)
        estimate, stderr = reconstruct_correlations(stationary_record_sets)
        z = np.abs(estimate - reduced.cov) / np.where(stderr > 0, stderr, 1.0)
        assert np.max(z) <= 3.5

        negativity_true = logarithmic_negativity(reduced)
        negativity_est = logarithmic_negativity(0.5 * (estimate + estimate.T))
        # Propagate the reconstruction error bars through the negativity by
        # resampling perturbed covariance estimates.
        rng = np.random.default_rng(1)
        spread = []
        for _ in range(200):
            perturbed = estimate + rng.normal(size=(4, 4)) * stderr
            perturbed = 0.5 * (perturbed + perturbed.T)
            try:
                spread.append(logarithmic_negativity(perturbed))
            except NumericalError:
                continue
        sigma = max(float(np.std(spread)), 1e-6)
        assert negativity_true > 0.0
        assert abs(negativity_est - negativity_true) <= 3.0 * sigma

    def test_rank_deficient_configuration_reported(self):
        probe = ProbeCavity(0.05, 1.0, 0.08, 0.0)
        configs = [(probe, 0.0)]
        states = [np.ones(4), -np.ones(4)]
        times = np.linspace(0.0, 2.0, 40)
        sets = _constant_record_sets(states, configs, times, dt=0.05)
        with pytest.raises(ValidationError, match="q_a"):
            reconstruct_correlations(sets, noise_variance=0.0)

    def test_requires_two_trajectories(self, probe_configs):
        times = np.linspace(0.0, 2.0, 20)
        sets = _constant_record_sets([np.ones(4)], probe_configs, times, dt=0.1)
        with pytest.raises(ValidationError, match="2"):
            reconstruct_correlations(sets, noise_variance=0.0)

    def test_duplicate_noise_seeds_rejected(self, probe_configs):
        times = np.linspace(0.0, 2.0, 20)
        sets = _constant_record_sets(
            [np.ones(4), np.zeros(4)], probe_configs, times, dt=0.1,
            noise_seed_base=77,
        )
        clashing = [
            [
                HomodyneRecord(
                    times=r.times, values=r.values, phase=r.phase, probe=r.probe,
                    rotation=r.rotation, dt=r.dt, noise_seed=123,
                )
                for r in records
            ]
            for records in sets
        ]
        with pytest.raises(ValidationError, match="distinct"):
            reconstruct_correlations(clashing)

    def test_mismatched_configurations_rejected(self, probe_configs):
        times = np.linspace(0.0, 2.0, 20)
        sets = _constant_record_sets(
            [np.ones(4), np.zeros(4)], probe_configs, times, dt=0.1,
            noise_seed_base=88,
        )
        swapped = [sets[0], list(reversed(sets[1]))]
        with pytest.raises(ValidationError, match="configurations"):
            reconstruct_correlations(swapped)
