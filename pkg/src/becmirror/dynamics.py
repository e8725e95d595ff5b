"""Drift and diffusion matrices of the linearized quadrature dynamics.

The state vector is the quadrature fluctuation vector
R = (q_m, p_m, q_a, p_a, q_c, p_c) for the mirror, condensate and cavity
modes, with q = (o + o^dag)/sqrt(2) and p = (o - o^dag)/(i sqrt(2)).  The
fluctuations obey dR/dt = M R + F with white noise F, so the stationary
covariance solves the Lyapunov equation M V + V M^T = -D.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .params import ModelParams

QUADRATURES = ("q_m", "p_m", "q_a", "p_a", "q_c", "p_c")

#: mode name -> (q index, p index) in the fixed quadrature ordering
MODE_INDICES = {"mirror": (0, 1), "bec": (2, 3), "cavity": (4, 5)}

#: spectral abscissa within this times ||M||_F of zero counts as marginal
MARGINAL_TOL = 1e-9


def symplectic_form(n_modes: int = 3) -> np.ndarray:
    """Direct sum of n_modes copies of [[0, 1], [-1, 0]]."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


def build_drift(p: ModelParams) -> np.ndarray:
    """Drift matrix of the linearized quadrature dynamics.

    Row by row, the equations of motion are::

        dq_m/dt = -gamma q_m + om_m p_m
        dp_m/dt = -om_m q_m - gamma p_m + G_mc q_c
        dq_a/dt =  om_a p_a
        dp_a/dt = -om_a q_a - G_ac q_c
        dq_c/dt = -kappa q_c + detuning p_c
        dp_c/dt =  G_mc q_m - G_ac q_a - detuning q_c - kappa p_c

    Parameters
    ----------
    p : ModelParams
        Validated model parameters.

    Returns
    -------
    numpy.ndarray
        Real 6x6 drift matrix in the fixed quadrature ordering.
    """
    m = np.zeros((6, 6))
    m[0, 0] = -p.gamma
    m[0, 1] = p.om_m
    m[1, 0] = -p.om_m
    m[1, 1] = -p.gamma
    m[1, 4] = p.G_mc
    m[2, 3] = p.om_a
    m[3, 2] = -p.om_a
    m[3, 4] = -p.G_ac
    m[4, 4] = -p.kappa
    m[4, 5] = p.detuning
    m[5, 0] = p.G_mc
    m[5, 2] = -p.G_ac
    m[5, 4] = -p.detuning
    m[5, 5] = -p.kappa
    return m


def build_diffusion(p: ModelParams) -> np.ndarray:
    """Diagonal diffusion matrix of the symmetrized input noises.

    The mirror bath contributes gamma (2 n_th + 1) on its two quadratures,
    the cavity vacuum kappa (2 n_c + 1); the condensate mode is noiseless
    (its thermal effects are neglected).  An uncoupled mirror then
    thermalizes to (n_th + 1/2) on both quadrature variances.
    """
    mech = p.gamma * (2.0 * p.n_th + 1.0)
    cav = p.kappa * (2.0 * p.n_c + 1.0)
    return np.diag([mech, mech, 0.0, 0.0, cav, cav])


@dataclass(frozen=True)
class StabilityReport:
    """Eigenvalue stability analysis of a drift matrix.

    ``is_stable`` uses the strict Hurwitz convention (all real parts < 0);
    a spectral abscissa within ``MARGINAL_TOL * ||M||_F`` of zero is flagged
    marginal and reported as unstable.  When model parameters are supplied,
    the closed-form product criterion
    (detuning^2 + kappa^2) om_m om_a - detuning (G_mc^2 + G_ac^2) > 0
    is evaluated alongside as a diagnostic; it neglects the mechanical
    damping terms, so the eigenvalue verdict is authoritative.
    """

    is_stable: bool
    is_marginal: bool
    eigenvalues: np.ndarray
    spectral_abscissa: float
    criterion_value: float | None = None
    criterion_pass: bool | None = None


def check_stability_criterion(p: ModelParams) -> tuple[float, bool]:
    """Closed-form product stability criterion.

    Returns the left-hand-side value of
    (detuning^2 + kappa^2) om_m om_a - detuning (G_mc^2 + G_ac^2)
    and whether it is positive.
    """
    value = (p.detuning**2 + p.kappa**2) * p.om_m * p.om_a - p.detuning * (
        p.G_mc**2 + p.G_ac**2
    )
    return value, value > 0.0


def check_stability_eigen(
    drift: np.ndarray, params: ModelParams | None = None
) -> StabilityReport:
    """Authoritative eigenvalue stability check.

    Parameters
    ----------
    drift : numpy.ndarray
        Square real drift matrix.
    params : ModelParams, optional
        When given, the closed-form criterion is evaluated and included in
        the report as a diagnostic.

    Raises
    ------
    ValidationError
        If the matrix contains non-finite entries.
    NumericalError
        If the eigenvalue iteration fails; the message echoes the matrix.
    """
    drift = np.asarray(drift, dtype=float)
    if drift.ndim != 2 or drift.shape[0] != drift.shape[1]:
        raise ValidationError(f"drift matrix must be square, got shape {drift.shape}")
    if not np.all(np.isfinite(drift)):
        raise ValidationError("drift matrix contains non-finite entries")
    try:
        eigenvalues = np.linalg.eigvals(drift)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK breakdown
        raise NumericalError(f"eigenvalue computation failed on\n{drift!r}") from exc
    abscissa = float(np.max(eigenvalues.real))
    tol = MARGINAL_TOL * float(np.linalg.norm(drift))
    marginal = bool(abs(abscissa) <= tol)
    stable = bool(abscissa < 0.0 and not marginal)
    value = passes = None
    if params is not None:
        value, passes = check_stability_criterion(params)
    return StabilityReport(
        is_stable=stable,
        is_marginal=marginal,
        eigenvalues=eigenvalues,
        spectral_abscissa=abscissa,
        criterion_value=value,
        criterion_pass=passes,
    )
