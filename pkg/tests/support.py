"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from becmirror import ModelParams, PhysicalInput

TWO_PI = 2.0 * np.pi


def reference_input(**overrides) -> PhysicalInput:
    """Canonical experimental configuration used across the tests."""
    kwargs = dict(
        cavity_length=1e-3,
        laser_wavelength=1000e-9,
        laser_power=50e-3,
        mirror_mass=4e-12,
        mirror_frequency=TWO_PI * 1e6,
        mirror_damping=TWO_PI * 100.0,
        temperature=10e-6,
        finesse=1e4,
        bec_coupling=100.0,
        bec_frequency=TWO_PI * 1e6,
        effective_detuning=TWO_PI * 2e6,
    )
    kwargs.update(overrides)
    return PhysicalInput(**kwargs)


def mild_model(**overrides) -> ModelParams:
    """Stable, well-conditioned model in units of the mirror frequency."""
    kwargs = dict(
        om_m=1.0,
        om_a=1.0,
        gamma=0.1,
        kappa=0.8,
        detuning=1.2,
        G_mc=0.45,
        G_ac=0.35,
        n_th=0.2,
    )
    kwargs.update(overrides)
    return ModelParams(**kwargs)


def entangled_model(**overrides) -> ModelParams:
    """Stable model whose reduced mirror-condensate state is entangled.

    Large detuning, a narrow cavity and a cold, moderately damped mirror put
    the pair into the two-mode-squeezed regime of the eliminated dynamics
    (log-negativity 0.096).  The point is also cheap to simulate: its
    Euler-Maruyama mean-square stability limit is about 9e-3 and it
    decorrelates in a few tens of time units.
    """
    kwargs = dict(
        om_m=1.0,
        om_a=1.0,
        gamma=0.33,
        kappa=0.4,
        detuning=9.3,
        G_mc=2.1,
        G_ac=2.15,
        n_th=0.0083,
    )
    kwargs.update(overrides)
    return ModelParams(**kwargs)


def random_stable_system(
    rng: np.random.Generator, dim: int = 6
) -> tuple[np.ndarray, np.ndarray]:
    """Random strictly Hurwitz drift with a random PSD diffusion matrix."""
    drift = rng.normal(size=(dim, dim))
    abscissa = float(np.max(np.linalg.eigvals(drift).real))
    drift -= (abscissa + rng.uniform(0.3, 1.0)) * np.eye(dim)
    root = rng.normal(size=(dim, dim))
    diffusion = root @ root.T / dim
    return drift, diffusion


def symplectic_form(n_modes: int) -> np.ndarray:
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


def random_symplectic(rng: np.random.Generator, n_modes: int) -> np.ndarray:
    """Random symplectic matrix exp(Omega H) with symmetric generator H."""
    dim = 2 * n_modes
    h = rng.normal(size=(dim, dim))
    h = 0.5 * (h + h.T) * 0.4
    return expm(symplectic_form(n_modes) @ h)


def random_physical_covariance(
    rng: np.random.Generator, n_modes: int = 2
) -> np.ndarray:
    """Random covariance of a physical Gaussian state (vacuum = I/2).

    Built as S diag(nu_1, nu_1, ..., nu_n, nu_n) S^T with symplectic S and
    symplectic eigenvalues nu_k >= 1/2, which is the general form.
    """
    nus = rng.uniform(0.5, 3.0, size=n_modes)
    diag = np.repeat(nus, 2)
    s = random_symplectic(rng, n_modes)
    return s @ np.diag(diag) @ s.T


def two_mode_squeezed_covariance(r: float) -> np.ndarray:
    """Standard two-mode squeezed vacuum covariance, vacuum = I/2."""
    ch, sh = np.cosh(2.0 * r), np.sinh(2.0 * r)
    sz = np.diag([1.0, -1.0])
    top = np.hstack([ch * np.eye(2), sh * sz])
    bottom = np.hstack([sh * sz, ch * np.eye(2)])
    return 0.5 * np.vstack([top, bottom])


def pt_symplectic_oracle(cov: np.ndarray) -> tuple[float, float]:
    """Partial-transpose symplectic eigenvalues via a generic eigensolver.

    Partial transposition of the second mode flips its momentum; the
    symplectic spectrum is |eig(i Omega V~)|, independent of the closed form
    under test.
    """
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    tilde = flip @ cov @ flip
    eigs = np.linalg.eigvals(1j * symplectic_form(2) @ tilde)
    mags = np.sort(np.abs(eigs))
    return float(mags[0]), float(mags[-1])


def routh_hurwitz_verdict(coeffs: np.ndarray) -> bool | None:
    """Routh-Hurwitz stability of a polynomial (highest power first).

    Returns None when a first-column pivot is too small to classify.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs[0] < 0:
        coeffs = -coeffs
    n = len(coeffs)
    rows = [coeffs[0::2].copy()]
    second = coeffs[1::2].copy()
    if len(second) < len(rows[0]):
        second = np.append(second, 0.0)
    rows.append(second)
    scale = np.max(np.abs(coeffs))
    for _ in range(n - 2):
        prev, cur = rows[-2], rows[-1]
        if abs(cur[0]) < 1e-12 * scale:
            return None
        width = len(prev)
        new = np.zeros(width)
        for k in range(width - 1):
            a = prev[k + 1] if k + 1 < len(prev) else 0.0
            b = cur[k + 1] if k + 1 < len(cur) else 0.0
            new[k] = (cur[0] * a - prev[0] * b) / cur[0]
        rows.append(new)
    column = np.array([row[0] for row in rows[: n]])
    if np.any(np.abs(column) < 1e-12 * scale):
        return None
    return bool(np.all(column > 0))
