"""Monte-Carlo trajectory engine and homodyne readout model.

The linear quadrature Langevin system is integrated as an Ito SDE with the
Euler-Maruyama scheme, R <- R + M R dt + sqrt(dt) L xi, where L L^T = D and
xi is standard normal.  Input noises are discretized as independent Gaussian
increments whose variances match the symmetrized correlators, so ensemble
covariances of long runs estimate the Lyapunov steady state and serve as an
independent oracle for it.

Randomness comes from numpy's counter-based Philox bit generator with
explicit ``(seed, stream)`` keys; identical keys reproduce trajectories
bit-for-bit and distinct streams are statistically independent, so
trajectories parallelize without shared state.

A weak second cavity reads out the joint mirror-condensate motion: after
adiabatic elimination its output field is

    c_out = (i / (2 kappa1)) (G_mc1 b~ - G_ac1 a~) + c_in,

where the tildes are slow variables in the frame rotating at the probe
detuning.  Homodyning this output at chosen local-oscillator phases gives
linear combinations of the mirror and condensate quadratures, and the full
reduced covariance matrix is recovered by least squares from the record
correlations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import QUADRATURES, check_stability_eigen
from .errors import NumericalError, StabilityError, ValidationError

logger = logging.getLogger(__name__)

#: Euler-Maruyama step-size gate relative to the fastest eigenvalue
MAX_DT_FRACTION = 0.05

_NOISE_BLOCK = 8192


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass(frozen=True)
class TrajectoryRecord:
    """One realization of the quadrature fluctuations on a uniform grid."""

    times: np.ndarray
    samples: np.ndarray  # shape (6, len(times))
    dt: float
    seed: int
    stream: int


@dataclass(frozen=True)
class ProbeCavity:
    """Readout cavity parameters.

    The probe is treated as a pure readout map: its backaction on the system
    is neglected, which assumes the probe drive is much weaker than the main
    one (``weak_probe``).  The adiabatic readout formula further assumes the
    probe detuning is set to the mechanical frequency and dominates the probe
    linewidth and couplings; :meth:`validity` reports those flags.
    """

    kappa1: float
    detuning1: float
    G_mc1: float
    G_ac1: float
    weak_probe: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa1) and self.kappa1 > 0):
            raise ValidationError(f"kappa1 must be > 0, got {self.kappa1!r}")
        for name in ("G_mc1", "G_ac1"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be >= 0, got {value!r}")
        if not (math.isfinite(self.detuning1) and self.detuning1 > 0):
            raise ValidationError(f"detuning1 must be > 0, got {self.detuning1!r}")

    def validity(self) -> dict[str, bool]:
        dominates = self.detuning1 > 10.0 * max(self.kappa1, self.G_mc1, self.G_ac1)
        return {"detuning_dominates": dominates, "weak_probe": self.weak_probe}


@dataclass(frozen=True)
class HomodyneRecord:
    """Homodyne samples of the probe output at one local-oscillator phase."""

    times: np.ndarray
    values: np.ndarray
    phase: float
    probe: ProbeCavity
    rotation: float
    dt: float
    noise_seed: int | None


def simulate_trajectory(
    drift: np.ndarray,
    diffusion: np.ndarray,
    cov0: np.ndarray | None,
    *,
    dt: float,
    horizon: float,
    seed: int,
    stream: int = 0,
) -> TrajectoryRecord:
    """Integrate one Euler-Maruyama trajectory of the quadrature SDE.

    Parameters
    ----------
    drift, diffusion : numpy.ndarray
        Drift matrix (must be strictly Hurwitz) and diagonal diffusion matrix.
    cov0 : numpy.ndarray or None
        Covariance of the Gaussian initial state; ``None`` starts from the
        origin.
    dt : float
        Step size; must satisfy dt <= 0.05 / max|eigenvalue| (checked before
        running).  For weakly damped oscillator modes the scheme is
        mean-square stable only below 2 |Re l| / |l|^2 per eigenvalue l, and
        its stationary covariance carries an O(dt) bias that grows near that
        limit; choose dt accordingly when estimating covariances.
    horizon : float
        Total simulated time; the record holds round(horizon/dt) + 1 samples
        including t = 0.
    seed, stream : int
        Philox key; identical keys give bit-identical trajectories.
    """
    drift = np.asarray(drift, dtype=float)
    diffusion = np.asarray(diffusion, dtype=float)
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt!r}")
    if horizon <= 0:
        raise ValidationError(f"horizon must be > 0, got {horizon!r}")
    report = check_stability_eigen(drift)
    if not report.is_stable:
        raise StabilityError(
            "trajectory simulation requires a strictly stable drift matrix "
            f"(spectral abscissa {report.spectral_abscissa:.6e})"
        )
    fastest = float(np.max(np.abs(report.eigenvalues)))
    dt_max = MAX_DT_FRACTION / fastest
    if dt > dt_max:
        raise ValidationError(
            f"dt={dt:.3e} exceeds the Euler-Maruyama gate {dt_max:.3e} "
            f"(0.05 / max|eigenvalue|)"
        )
    n_steps = int(round(horizon / dt))

    rng = _rng(seed, stream)
    dim = drift.shape[0]
    state = np.zeros(dim)
    if cov0 is not None:
        cov0 = np.asarray(cov0, dtype=float)
        evals, evecs = np.linalg.eigh(0.5 * (cov0 + cov0.T))
        if np.min(evals) < -1e-10 * max(1.0, float(np.max(np.abs(evals)))):
            raise ValidationError("cov0 is not positive semidefinite")
        root = evecs * np.sqrt(np.clip(evals, 0.0, None))
        state = root @ rng.standard_normal(dim)

    step_mat = drift * dt
    diagonal_noise = np.allclose(diffusion, np.diag(np.diag(diffusion)))
    if diagonal_noise:
        noise_amp = np.sqrt(np.clip(np.diag(diffusion), 0.0, None)) * math.sqrt(dt)
    else:
        # General PSD diffusion: L with L L^T = D via an eigendecomposition.
        evals, evecs = np.linalg.eigh(0.5 * (diffusion + diffusion.T))
        if np.min(evals) < -1e-10 * max(1.0, float(np.max(np.abs(evals)))):
            raise ValidationError("diffusion matrix is not positive semidefinite")
        noise_root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) * math.sqrt(dt)

    samples = np.empty((dim, n_steps + 1))
    samples[:, 0] = state
    blowup = 1e12 * max(1.0, float(np.linalg.norm(diffusion)), float(np.abs(state).max()))
    k = 0
    while k < n_steps:
        block = min(_NOISE_BLOCK, n_steps - k)
        noise = rng.standard_normal((dim, block))
        if not diagonal_noise:
            noise = noise_root @ noise
        for j in range(block):
            if diagonal_noise:
                state = state + step_mat @ state + noise_amp * noise[:, j]
            else:
                state = state + step_mat @ state + noise[:, j]
            samples[:, k + j + 1] = state
        k += block
        if not np.abs(state).max() < blowup:
            raise NumericalError(
                f"trajectory norm blew up after {k} steps; reduce dt"
            )
    times = np.arange(n_steps + 1) * dt
    return TrajectoryRecord(times=times, samples=samples, dt=dt, seed=seed, stream=stream)


def simulate_trajectories(
    drift: np.ndarray,
    diffusion: np.ndarray,
    cov0: np.ndarray | None,
    *,
    dt: float,
    horizon: float,
    seed: int,
    n_trajectories: int,
    first_stream: int = 0,
) -> list[TrajectoryRecord]:
    """Independent trajectories on consecutive streams of one seed."""
    return [
        simulate_trajectory(
            drift, diffusion, cov0, dt=dt, horizon=horizon, seed=seed, stream=s
        )
        for s in range(first_stream, first_stream + n_trajectories)
    ]


def ensemble_covariance(
    trajectories: Sequence[TrajectoryRecord],
    burn_in: float,
    *,
    batch_length: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Stationary covariance estimate with batch-means standard errors.

    Samples before ``burn_in`` are dropped; the remainder of each trajectory
    is split into contiguous batches, each batch contributes its mean outer
    product, and the estimate and elementwise standard errors come from the
    scatter of the batch matrices.  The fluctuations have zero mean by
    construction, so raw second moments are used (no mean removal and hence
    no autocorrelation-induced mean bias).

    ``batch_length`` defaults to a sixteenth of the post-burn-in span; it
    should exceed the system decorrelation time for the standard errors to
    be trustworthy.
    """
    if not trajectories:
        raise ValidationError("at least one trajectory is required")
    dt = trajectories[0].dt
    for traj in trajectories:
        if traj.dt != dt:
            raise ValidationError("trajectories must share a common dt")
    span = min(traj.times[-1] for traj in trajectories) - burn_in
    if span <= 0:
        raise ValidationError(
            f"burn_in {burn_in!r} consumes the whole trajectory; "
            "simulate a longer horizon"
        )
    if batch_length is None:
        batch_length = span / 16.0
    per_batch = max(1, int(round(batch_length / dt)))

    batches: list[np.ndarray] = []
    for traj in trajectories:
        start = int(math.ceil(burn_in / dt))
        data = traj.samples[:, start:]
        n_batches = data.shape[1] // per_batch
        for b in range(n_batches):
            chunk = data[:, b * per_batch : (b + 1) * per_batch]
            batches.append(chunk @ chunk.T / chunk.shape[1])
    if len(trajectories) == 1 and len(batches) < 8:
        raise ValidationError(
            f"a single trajectory yielded only {len(batches)} batches; "
            "use >= 2 trajectories or a horizon of at least "
            f"{burn_in + 8 * per_batch * dt:.3g} with this batch length"
        )
    if len(batches) < 2:
        raise ValidationError(
            "need at least 2 batches for a standard error; "
            "lengthen the trajectories or shrink batch_length"
        )
    stack = np.stack(batches)
    estimate = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / math.sqrt(len(batches))
    estimate = 0.5 * (estimate + estimate.T)
    stderr = 0.5 * (stderr + stderr.T)
    return estimate, stderr


def homodyne_weights(
    probe: ProbeCavity, phase: float, rotation: float, times: np.ndarray
) -> np.ndarray:
    """Lab-frame weights mapping (q_m, p_m, q_a, p_a) to the homodyne signal.

    Writing the adiabatic probe output as
    c_out = (i / (2 kappa1)) (G_mc1 b~ - G_ac1 a~) + c_in with slow variables
    o~(t) = o(t) exp(i rotation t), the phase-``phase`` quadrature of the
    signal part is a time-dependent linear form w(t)^T R(t); this returns w
    as a (4, len(times)) array.
    """
    g = 1.0 / (2.0 * probe.kappa1)
    w_rot = g * np.array(
        [
            math.sin(phase) * probe.G_mc1,
            -math.cos(phase) * probe.G_mc1,
            -math.sin(phase) * probe.G_ac1,
            math.cos(phase) * probe.G_ac1,
        ]
    )
    angles = rotation * np.asarray(times, dtype=float)
    c, s = np.cos(angles), np.sin(angles)
    weights = np.empty((4, len(angles)))
    # Per mode, lab weights are Rot(angle)^T applied to the rotating-frame pair.
    weights[0] = c * w_rot[0] + s * w_rot[1]
    weights[1] = -s * w_rot[0] + c * w_rot[1]
    weights[2] = c * w_rot[2] + s * w_rot[3]
    weights[3] = -s * w_rot[2] + c * w_rot[3]
    return weights


def homodyne_output(
    traj: TrajectoryRecord,
    probe: ProbeCavity,
    phase: float,
    noise_seed: int | None,
    stride: int = 1,
) -> HomodyneRecord:
    """Homodyne record of the probe output for one trajectory.

    The slow-variable rotation is applied in post-processing at the probe
    detuning frequency; an independently seeded vacuum input-noise stream of
    per-sample quadrature variance 1/(2 dt_record) is added on top of the
    signal.  ``stride`` subsamples the trajectory grid, modelling a detector
    of bandwidth 1/(2 dt_record) with dt_record = stride * traj.dt; without
    it the vacuum noise floor at the integrator resolution would swamp any
    finite record.

    Raises
    ------
    ValidationError
        If ``noise_seed`` is missing; the readout noise stream must be
        explicitly seeded for reproducibility.
    """
    if noise_seed is None:
        raise ValidationError("noise_seed is required for the probe input noise")
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    flags = probe.validity()
    if not all(flags.values()):
        bad = sorted(name for name, ok in flags.items() if not ok)
        logger.warning("probe outside its validity regime: %s", ", ".join(bad))
    times = traj.times[::stride]
    dt_record = traj.dt * stride
    weights = homodyne_weights(probe, phase, probe.detuning1, times)
    signal = np.einsum("jk,jk->k", weights, traj.samples[:4, ::stride])
    rng = _rng(noise_seed)
    sigma = math.sqrt(1.0 / (2.0 * dt_record))
    xi_q, xi_p = rng.standard_normal((2, len(times))) * sigma
    noise = math.cos(phase) * xi_q + math.sin(phase) * xi_p
    return HomodyneRecord(
        times=times,
        values=signal + noise,
        phase=phase,
        probe=probe,
        rotation=probe.detuning1,
        dt=dt_record,
        noise_seed=noise_seed,
    )


_UNIQUE_ENTRIES = [(i, j) for i in range(4) for j in range(i, 4)]


def _entry_label(i: int, j: int) -> str:
    return f"{QUADRATURES[i]}*{QUADRATURES[j]}"


def reconstruct_correlations(
    record_sets: Sequence[Sequence[HomodyneRecord]],
    *,
    noise_variance: float | None = None,
    max_times: int = 2000,
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares estimate of the reduced covariance from homodyne records.

    Equal-time products of the records are linear in the ten unique entries
    of the reduced covariance matrix through the known (time-dependent) gain
    map, so a least-squares inversion recovers them.  The inversion runs per
    trajectory and the final estimate and standard errors come from the
    scatter of the per-trajectory solutions, which are independent by
    construction.

    Parameters
    ----------
    record_sets : sequence of sequences
        One inner sequence per independent trajectory, each holding records
        of the *same* configurations (phase, probe, grid) in the same order.
        Records within one trajectory must carry distinct noise seeds so
        cross products are free of noise bias.
    noise_variance : float, optional
        Per-sample variance of each record's own noise, subtracted from
        same-record products.  Defaults to 1/(2 dt_record) as produced by
        :func:`homodyne_output`; pass 0.0 for noiseless synthetic records.
    max_times : int
        Time indices are evenly subsampled down to this many rows per record
        pair to bound the least-squares system size.

    Returns
    -------
    (estimate, stderr)
        4x4 symmetric covariance estimate over (q_m, p_m, q_a, p_a) and the
        elementwise standard errors.

    Raises
    ------
    ValidationError
        If fewer than two trajectories are supplied, configurations are
        inconsistent across trajectories, noise seeds collide, or the
        configuration set leaves covariance entries unidentifiable (the
        message lists them).
    """
    if len(record_sets) < 2:
        raise ValidationError("need records from >= 2 independent trajectories")
    n_cfg = len(record_sets[0])
    if n_cfg == 0:
        raise ValidationError("record sets are empty")
    first = record_sets[0]
    for records in record_sets:
        if len(records) != n_cfg:
            raise ValidationError("every trajectory must carry the same configurations")
        for rec, ref in zip(records, first):
            if (
                rec.phase != ref.phase
                or rec.probe != ref.probe
                or rec.dt != ref.dt
                or len(rec.times) != len(ref.times)
            ):
                raise ValidationError(
                    "record configurations differ across trajectories"
                )
        seeds = [rec.noise_seed for rec in records]
        if noise_variance != 0.0 and len(set(seeds)) != len(seeds):
            raise ValidationError("noise seeds within a trajectory must be distinct")

    if noise_variance is None:
        noise_variance = 1.0 / (2.0 * first[0].dt)
    n_times = len(first[0].times)
    stride = max(1, n_times // max_times)
    t_idx = np.arange(0, n_times, stride)
    times = first[0].times[t_idx]

    weights = [
        homodyne_weights(rec.probe, rec.phase, rec.rotation, times) for rec in first
    ]

    rows: list[np.ndarray] = []
    for i in range(n_cfg):
        for j in range(i, n_cfg):
            wi, wj = weights[i], weights[j]
            coeff = np.empty((len(t_idx), len(_UNIQUE_ENTRIES)))
            for col, (p, q) in enumerate(_UNIQUE_ENTRIES):
                if p == q:
                    coeff[:, col] = wi[p] * wj[p]
                else:
                    coeff[:, col] = wi[p] * wj[q] + wi[q] * wj[p]
            rows.append(coeff)
    design = np.vstack(rows)

    rank = np.linalg.matrix_rank(
        design, tol=1e-10 * max(1.0, float(np.abs(design).max()))
    )
    if rank < len(_UNIQUE_ENTRIES):
        _, _, vt = np.linalg.svd(design)
        null = vt[rank:]
        missing = sorted(
            {
                _entry_label(*_UNIQUE_ENTRIES[col])
                for row in null
                for col in np.nonzero(np.abs(row) > 1e-8)[0]
            }
        )
        raise ValidationError(
            "configuration set cannot identify covariance entries: "
            + ", ".join(missing)
            + "; add local-oscillator phases or coupling configurations"
        )
    pinv = np.linalg.pinv(design)

    solutions = []
    for records in record_sets:
        values = np.stack([rec.values[t_idx] for rec in records])
        targets = []
        for i in range(n_cfg):
            for j in range(i, n_cfg):
                products = values[i] * values[j]
                if i == j:
                    products = products - noise_variance
                targets.append(products)
        solutions.append(pinv @ np.concatenate(targets))
    stack = np.stack(solutions)
    mean = stack.mean(axis=0)
    sem = stack.std(axis=0, ddof=1) / math.sqrt(len(record_sets))

    estimate = np.zeros((4, 4))
    stderr = np.zeros((4, 4))
    for col, (p, q) in enumerate(_UNIQUE_ENTRIES):
        estimate[p, q] = estimate[q, p] = mean[col]
        stderr[p, q] = stderr[q, p] = sem[col]
    return estimate, stderr
