"""Steady-state Lyapunov solver and its matrix-ODE integration oracle.

The stationary covariance of dR/dt = M R + F with symmetrized noise matrix D
solves M V + V M^T = -D.  At the fixed system sizes used here the equation is
solved exactly by vectorization: (I (x) M + M (x) I) vec V = -vec D as a dense
linear system.  :func:`integrate_covariance` advances dV/dt = M V + V M^T + D
with a classical fourth-order Runge-Kutta scheme and serves as an independent
cross-check of the algebraic solution.
"""

from __future__ import annotations

import numpy as np

from .dynamics import check_stability_eigen
from .errors import NumericalError, StabilityError, ValidationError

#: relative residual gate on the algebraic solution
RESIDUAL_TOL = 1e-10


def _as_square(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def residual(drift: np.ndarray, diffusion: np.ndarray, cov: np.ndarray) -> float:
    """Relative Lyapunov residual ||M V + V M^T + D||_F / ||D||_F.

    Falls back to the absolute residual when D vanishes.
    """
    drift = _as_square(drift, "drift")
    diffusion = _as_square(diffusion, "diffusion")
    cov = _as_square(cov, "covariance")
    r = drift @ cov + cov @ drift.T + diffusion
    scale = np.linalg.norm(diffusion)
    if scale == 0.0:
        return float(np.linalg.norm(r))
    return float(np.linalg.norm(r) / scale)


def solve_steady_covariance(
    drift: np.ndarray,
    diffusion: np.ndarray,
    *,
    check_stability: bool = True,
) -> np.ndarray:
    """Solve M V + V M^T = -D for the stationary covariance V.

    Parameters
    ----------
    drift : numpy.ndarray
        Square drift matrix M; must be strictly Hurwitz.
    diffusion : numpy.ndarray
        Symmetric noise matrix D of matching shape.
    check_stability : bool
        Re-verify stability before solving (default).  Callers that already
        hold a passing stability report may disable the re-check.

    Returns
    -------
    numpy.ndarray
        Symmetrized covariance matrix.

    Raises
    ------
    StabilityError
        If M is unstable or marginal (no stationary state exists).
    NumericalError
        If the solution fails the residual gate ``RESIDUAL_TOL``.
    """
    drift = _as_square(drift, "drift")
    diffusion = _as_square(diffusion, "diffusion")
    if drift.shape != diffusion.shape:
        raise ValidationError(
            f"shape mismatch: drift {drift.shape} vs diffusion {diffusion.shape}"
        )
    if check_stability:
        report = check_stability_eigen(drift)
        if not report.is_stable:
            kind = "marginal" if report.is_marginal else "unstable"
            raise StabilityError(
                f"drift matrix is {kind} (spectral abscissa "
                f"{report.spectral_abscissa:.6e}); no stationary covariance"
            )
    n = drift.shape[0]
    eye = np.eye(n)
    # Column-major vec: vec(M V + V M^T) = (I (x) M + M (x) I) vec V.
    k = np.kron(eye, drift) + np.kron(drift, eye)
    try:
        vec = np.linalg.solve(k, -diffusion.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Lyapunov system is singular to working precision") from exc
    cov = vec.reshape((n, n), order="F")
    # One step of iterative refinement buys margin on ill-conditioned systems.
    r = drift @ cov + cov @ drift.T + diffusion
    correction = np.linalg.solve(k, -r.reshape(-1, order="F"))
    cov = cov + correction.reshape((n, n), order="F")
    cov = 0.5 * (cov + cov.T)
    rel = residual(drift, diffusion, cov)
    if rel > RESIDUAL_TOL:
        raise NumericalError(
            f"Lyapunov residual {rel:.3e} exceeds tolerance {RESIDUAL_TOL:.0e}"
        )
    return cov


def integrate_covariance(
    drift: np.ndarray,
    diffusion: np.ndarray,
    cov0: np.ndarray | None,
    horizon: float,
    dt: float | None = None,
) -> np.ndarray:
    """Integrate dV/dt = M V + V M^T + D to ``horizon`` with fixed-step RK4.

    Parameters
    ----------
    drift, diffusion : numpy.ndarray
        System matrices as in :func:`solve_steady_covariance`.
    cov0 : numpy.ndarray or None
        Initial covariance; ``None`` starts from zero.
    horizon : float
        Integration time; for a stable drift with spectral abscissa a,
        horizons of at least 20/|a| reach the fixed point to within
        O(exp(-2 |a| horizon)).
    dt : float, optional
        Step size, defaulting to 0.01/|a|.  The default suits systems whose
        eigenvalue magnitudes do not spread far beyond |a|; stiff systems
        need dt below roughly 2.8/max|eigenvalue| for RK4 stability.

    Raises
    ------
    NumericalError
        On norm blow-up, which indicates an unstable step size; the message
        advises a smaller dt.
    """
    drift = _as_square(drift, "drift")
    diffusion = _as_square(diffusion, "diffusion")
    if horizon <= 0:
        raise ValidationError(f"horizon must be > 0, got {horizon!r}")
    if dt is None:
        abscissa = float(np.max(np.linalg.eigvals(drift).real))
        if abscissa >= 0:
            raise ValidationError(
                "dt default requires a stable drift matrix; pass dt explicitly"
            )
        dt = 0.01 / abs(abscissa)
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt!r}")
    cov = np.zeros_like(drift) if cov0 is None else _as_square(cov0, "cov0").copy()
    # The flow preserves symmetry, so V M^T = (M V)^T along the trajectory;
    # symmetrizing the start lets each stage get away with one product.
    cov = 0.5 * (cov + cov.T)
    diffusion_sym = 0.5 * (diffusion + diffusion.T)

    scale = max(np.linalg.norm(cov), np.linalg.norm(diffusion), 1.0)
    blowup = 1e12 * scale
    steps, remainder = divmod(horizon, dt)
    steps = int(steps)

    def rhs(v: np.ndarray) -> np.ndarray:
        half = drift @ v
        return half + half.T + diffusion_sym

    def rk4_step(v: np.ndarray, h: float) -> np.ndarray:
        k1 = rhs(v)
        k2 = rhs(v + 0.5 * h * k1)
        k3 = rhs(v + 0.5 * h * k2)
        k4 = rhs(v + h * k3)
        return v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    check_every = 50
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(steps):
            cov = rk4_step(cov, dt)
            if step % check_every == 0 and not np.linalg.norm(cov) < blowup:
                raise NumericalError(
                    f"covariance norm blew up after {step + 1} steps at dt={dt:.3e}; "
                    "use a smaller dt"
                )
        if remainder > 0.0:
            cov = rk4_step(cov, remainder)
    if not np.all(np.isfinite(cov)) or not np.linalg.norm(cov) < blowup:
        raise NumericalError(
            f"covariance norm blew up at dt={dt:.3e}; use a smaller dt"
        )
    return 0.5 * (cov + cov.T)
