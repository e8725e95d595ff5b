"""Command-line interface.

Configurations are JSON documents whose keys mirror the PhysicalInput field
names.  Frequencies default to angular units (rad/s); pass
``--frequency-unit hz`` (or set ``"frequency_unit": "hz"`` in the config) to
have the frequency-like fields multiplied by 2 pi on load.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import constants
from .dynamics import (
    QUADRATURES,
    build_diffusion,
    build_drift,
    check_stability_eigen,
)
from .effective import effective_parameters
from .entanglement import entanglement_result, reduce_to_modes
from .errors import BecMirrorError, ValidationError
from .lyapunov import residual, solve_steady_covariance
from .params import ModelParams, PhysicalInput, derive_parameters, model_params
from .stochastic import (
    ProbeCavity,
    ensemble_covariance,
    homodyne_output,
    reconstruct_correlations,
    simulate_trajectories,
)
from .sweep import AxisSpec, SweepSpec, emit, run_sweep

#: config keys multiplied by 2 pi under the hz frequency unit
FREQUENCY_FIELDS = (
    "mirror_frequency",
    "mirror_damping",
    "cavity_decay",
    "effective_detuning",
    "bare_detuning",
    "recoil_frequency",
    "bec_frequency",
    "bec_coupling",
    "lattice_depth",
)

CONSTANTS_ENV = "BECMIRROR_CONSTANTS"


def load_config(path: str, frequency_unit: str | None = None) -> PhysicalInput:
    with open(path) as fh:
        raw = json.load(fh)
    unit = frequency_unit or raw.pop("frequency_unit", "rad_s")
    raw.pop("frequency_unit", None)
    if unit not in ("rad_s", "hz"):
        raise ValidationError(f"frequency_unit must be rad_s or hz, got {unit!r}")
    if unit == "hz":
        for key in FREQUENCY_FIELDS:
            if raw.get(key) is not None:
                raw[key] = 2.0 * math.pi * raw[key]
    unknown = set(raw) - set(PhysicalInput.field_names())
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return PhysicalInput(**raw)


def _check_constants_pin() -> None:
    pinned = os.environ.get(CONSTANTS_ENV)
    if pinned and pinned != constants.CONSTANTS_VERSION:
        raise ValidationError(
            f"{CONSTANTS_ENV}={pinned} does not match the shipped constants "
            f"table {constants.CONSTANTS_VERSION}"
        )


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=_json_default)
    sys.stdout.write("\n")


def _json_default(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _model(args) -> tuple[PhysicalInput, ModelParams]:
    inp = load_config(args.config, args.frequency_unit)
    derived = derive_parameters(inp)
    detuning = getattr(args, "detuning", None)
    return inp, model_params(derived, detuning)


def cmd_derive(args) -> int:
    inp = load_config(args.config, args.frequency_unit)
    _dump(asdict(derive_parameters(inp)))
    return 0


def cmd_stability(args) -> int:
    _, params = _model(args)
    report = check_stability_eigen(build_drift(params), params)
    _dump(
        {
            "is_stable": report.is_stable,
            "is_marginal": report.is_marginal,
            "eigenvalues": [[ev.real, ev.imag] for ev in report.eigenvalues],
            "spectral_abscissa": report.spectral_abscissa,
            "criterion_value": report.criterion_value,
            "criterion_pass": report.criterion_pass,
        }
    )
    return 0


def cmd_covariance(args) -> int:
    _, params = _model(args)
    drift = build_drift(params)
    diffusion = build_diffusion(params)
    cov = solve_steady_covariance(drift, diffusion)
    _dump(
        {
            "ordering": list(QUADRATURES),
            "covariance": cov.tolist(),
            "residual": residual(drift, diffusion, cov),
        }
    )
    return 0


def cmd_entangle(args) -> int:
    _, params = _model(args)
    drift = build_drift(params)
    cov = solve_steady_covariance(drift, build_diffusion(params))
    result = entanglement_result(reduce_to_modes(cov))
    _dump(asdict(result))
    return 0


def cmd_effective(args) -> int:
    _, params = _model(args)
    model = effective_parameters(
        params.G_mc, params.G_ac, params.detuning, params.kappa,
        om_m=params.om_m, om_a=params.om_a,
    )
    _dump(asdict(model))
    return 0


def _parse_axis(text: str) -> AxisSpec:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ValidationError(
            f"axis must be name:min:max:points[:log], got {text!r}"
        )
    scale = "linear"
    if len(parts) == 5:
        if parts[4] not in ("log", "linear"):
            raise ValidationError(f"axis scale must be log or linear, got {parts[4]!r}")
        scale = parts[4]
    return AxisSpec(
        name=parts[0],
        start=float(parts[1]),
        stop=float(parts[2]),
        points=int(parts[3]),
        scale=scale,
    )


def cmd_sweep(args) -> int:
    base = load_config(args.config, args.frequency_unit)
    spec = SweepSpec(
        base=base,
        axes=tuple(_parse_axis(a) for a in args.axis),
        include_effective=args.effective,
    )
    result = run_sweep(spec, workers=args.workers)
    blob = emit(result, args.format)
    if args.out == "-":
        sys.stdout.buffer.write(blob)
    else:
        with open(args.out, "wb") as fh:
            fh.write(blob)
    failed = sum(
        1 for row in result.rows if str(row.cells["status"]).startswith("error")
    )
    if failed:
        print(f"{failed}/{len(result.rows)} grid points failed", file=sys.stderr)
        return 1
    return 0


def _sde_setup(args):
    _, params = _model(args)
    drift = build_drift(params)
    diffusion = build_diffusion(params)
    report = check_stability_eigen(drift)
    if not report.is_stable:
        raise ValidationError(
            "config is not stable; stochastic verification needs a stationary state"
        )
    fastest = float(np.max(np.abs(report.eigenvalues)))
    slowest = abs(report.spectral_abscissa)
    # Euler-Maruyama mean-square limit: dt < min 2|Re l| / |l|^2 per mode.
    # Staying well below it keeps the discretization bias small for the
    # weakly damped oscillator modes.
    eigs = report.eigenvalues
    dt_ms = float(np.min(2.0 * np.abs(eigs.real) / np.abs(eigs) ** 2))
    dt = args.dt if args.dt else min(0.04 / fastest, 0.2 * dt_ms)
    horizon = args.horizon if args.horizon else (args.burn_in_factor + 20.0) / slowest
    burn_in = args.burn_in_factor / slowest
    total_steps = args.trajectories * horizon / dt
    if total_steps > args.max_steps:
        raise ValidationError(
            f"run would take ~{total_steps:.2e} Euler-Maruyama steps "
            f"(> --max-steps {args.max_steps:.2e}); this configuration is stiff "
            f"(timescale ratio {fastest / slowest:.1e}). Raise --max-steps to force."
        )
    return params, drift, diffusion, dt, horizon, burn_in


def cmd_sde_verify(args) -> int:
    _, drift, diffusion, dt, horizon, burn_in = _sde_setup(args)
    cov = solve_steady_covariance(drift, diffusion)
    trajectories = simulate_trajectories(
        drift, diffusion, None, dt=dt, horizon=horizon,
        seed=args.seed, n_trajectories=args.trajectories,
    )
    estimate, stderr = ensemble_covariance(trajectories, burn_in)
    z = np.where(stderr > 0, (estimate - cov) / np.where(stderr > 0, stderr, 1.0), 0.0)
    _dump(
        {
            "ordering": list(QUADRATURES),
            "lyapunov": cov.tolist(),
            "ensemble": estimate.tolist(),
            "stderr": stderr.tolist(),
            "max_abs_z": float(np.max(np.abs(z))),
            "pass_3_sigma": bool(np.all(np.abs(z) <= 3.0)),
            "dt": dt,
            "horizon": horizon,
            "burn_in": burn_in,
            "trajectories": args.trajectories,
        }
    )
    return 0


def cmd_homodyne_sim(args) -> int:
    params, drift, diffusion, dt, horizon, burn_in = _sde_setup(args)
    cov = solve_steady_covariance(drift, diffusion)
    stride = args.record_stride
    if not stride:
        # Detector bandwidth resolving ~40 samples per rotation period.
        stride = max(1, int(round(2.0 * math.pi / params.om_m / 40.0 / dt)))
    probe_kappa = args.probe_kappa if args.probe_kappa else params.om_m / 20.0
    coupling = args.probe_coupling if args.probe_coupling else probe_kappa / 20.0
    mirror_probe = ProbeCavity(probe_kappa, params.om_m, coupling, 0.0)
    bec_probe = ProbeCavity(probe_kappa, params.om_m, 0.0, coupling)
    both_probe = ProbeCavity(probe_kappa, params.om_m, coupling, coupling)
    configs = [
        (mirror_probe, 0.0),
        (mirror_probe, math.pi / 2.0),
        (bec_probe, 0.0),
        (bec_probe, math.pi / 2.0),
        (both_probe, math.pi / 4.0),
    ]
    trajectories = simulate_trajectories(
        drift, diffusion, cov, dt=dt, horizon=horizon,
        seed=args.seed, n_trajectories=args.trajectories,
    )
    record_sets = []
    for t_index, traj in enumerate(trajectories):
        records = [
            homodyne_output(traj, probe, phase,
                            noise_seed=args.seed + 1 + t_index * len(configs) + c_index,
                            stride=stride)
            for c_index, (probe, phase) in enumerate(configs)
        ]
        record_sets.append(records)
    estimate, stderr = reconstruct_correlations(record_sets)
    result = entanglement_result(reduce_to_modes(cov))
    if args.save_trajectories:
        os.makedirs(args.save_trajectories, exist_ok=True)
        for traj in trajectories:
            path = os.path.join(
                args.save_trajectories, f"trajectory_{traj.stream:04d}.csv"
            )
            header = "t," + ",".join(QUADRATURES)
            table = np.column_stack([traj.times, traj.samples.T])
            np.savetxt(path, table, delimiter=",", header=header, comments="")
    _dump(
        {
            "ordering": list(QUADRATURES[:4]),
            "reconstructed": estimate.tolist(),
            "stderr": stderr.tolist(),
            "lyapunov_reduced": reduce_to_modes(cov).cov.tolist(),
            "lyapunov_log_negativity": result.log_negativity,
            "trajectories": args.trajectories,
            "dt": dt,
        }
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="becmirror",
        description="Steady-state mirror-condensate entanglement pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, detuning=True):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument(
            "--frequency-unit",
            choices=("rad_s", "hz"),
            default=None,
            help="interpret config frequencies in this unit (default rad_s)",
        )
        if detuning:
            p.add_argument(
                "--detuning",
                type=float,
                default=None,
                help="override the effective detuning (rad/s after unit conversion)",
            )

    p = sub.add_parser("derive", help="print derived parameters")
    add_common(p, detuning=False)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("stability", help="print the stability report")
    add_common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("covariance", help="print the steady-state covariance")
    add_common(p)
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("entangle", help="print the entanglement result")
    add_common(p)
    p.set_defaults(func=cmd_entangle)

    p = sub.add_parser("effective", help="print the cavity-eliminated model")
    add_common(p)
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    add_common(p, detuning=False)
    p.add_argument(
        "--axis",
        action="append",
        required=True,
        help="axis as name:min:max:points[:log]; repeat for a second axis",
    )
    p.add_argument("--out", required=True, help="output path, or - for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--effective", action="store_true", help="add effective-model columns")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    def add_sde(p):
        add_common(p)
        p.add_argument("--trajectories", type=int, default=8)
        p.add_argument("--seed", type=int, default=2024)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--horizon", type=float, default=None)
        p.add_argument("--burn-in-factor", type=float, default=10.0,
                       help="burn-in in units of the relaxation time")
        p.add_argument("--max-steps", type=float, default=5e7,
                       help="refuse runs above this many total steps")

    p = sub.add_parser("sde-verify", help="Monte-Carlo check of the Lyapunov solution")
    add_sde(p)
    p.set_defaults(func=cmd_sde_verify)

    p = sub.add_parser("homodyne-sim", help="simulate the homodyne readout chain")
    add_sde(p)
    p.add_argument("--probe-kappa", type=float, default=None)
    p.add_argument("--probe-coupling", type=float, default=None)
    p.add_argument("--record-stride", type=int, default=None,
                   help="detector samples once per this many integrator steps")
    p.add_argument("--save-trajectories", default=None,
                   help="directory for per-trajectory CSV dumps")
    p.set_defaults(func=cmd_homodyne_sim)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_constants_pin()
        return args.func(args)
    except (BecMirrorError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
