"""Parameter sweeps over the full steady-state entanglement pipeline.

A sweep grid is defined by one or two axes over raw experimental inputs,
bare couplings, or reduced model parameters.  Every grid point re-derives
the model from scratch, checks stability (eigenvalue verdict authoritative),
solves the Lyapunov equation and evaluates the entanglement measures.
Unstable points are evaluations, not failures: their rows carry an explicit
``unstable`` status and empty measure columns.  Output is deterministic
byte-for-byte, with a provenance header carrying a configuration hash and
the pinned constants version.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from importlib import metadata

import numpy as np

from . import constants
from .dynamics import build_diffusion, build_drift, check_stability_eigen
from .effective import effective_parameters
from .entanglement import entanglement_result, reduce_to_modes
from .errors import BecMirrorError, ValidationError
from .lyapunov import residual as lyapunov_residual
from .lyapunov import solve_steady_covariance
from .params import (
    DerivedParams,
    ModelParams,
    PhysicalInput,
    derive_parameters,
    model_params,
)

SCHEMA_VERSION = 1

_BARE_COUPLING_AXES = ("g_mc", "g_ac")

_MEASURE_COLUMNS = (
    "status",
    "eigen_stable",
    "spectral_abscissa",
    "criterion_value",
    "criterion_pass",
    "nu_minus",
    "nu_plus",
    "log_negativity",
    "sigma",
    "det_cov",
    "residual",
)

_EFFECTIVE_COLUMNS = (
    "freq_shift_mirror",
    "freq_shift_bec",
    "coupling_ma",
    "adiabatic",
)


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis.

    ``name`` must be a :class:`PhysicalInput` field, a bare coupling override
    (``g_mc`` or ``g_ac``), or a :class:`ModelParams` field (applied after
    derivation).  ``scale`` is ``linear`` or ``log``.
    """

    name: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self) -> None:
        valid = (
            set(PhysicalInput.field_names())
            | set(_BARE_COUPLING_AXES)
            | set(ModelParams.field_names())
        )
        if self.name not in valid:
            raise ValidationError(
                f"unknown axis parameter {self.name!r}; valid names: {sorted(valid)}"
            )
        if self.points < 1:
            raise ValidationError(f"axis needs at least 1 point, got {self.points}")
        if self.scale not in ("linear", "log"):
            raise ValidationError(f"scale must be linear or log, got {self.scale!r}")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ValidationError("log axes require positive bounds")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.start])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition over a base configuration."""

    base: PhysicalInput
    axes: tuple[AxisSpec, ...]
    include_effective: bool = False

    def __post_init__(self) -> None:
        if not 1 <= len(self.axes) <= 2:
            raise ValidationError(f"sweeps support 1 or 2 axes, got {len(self.axes)}")


@dataclass(frozen=True)
class SweepRow:
    axis_values: tuple[float, ...]
    cells: dict


@dataclass(frozen=True)
class SweepResult:
    axis_names: tuple[str, ...]
    columns: tuple[str, ...]
    rows: tuple[SweepRow, ...]
    provenance: dict


def _config_hash(spec: SweepSpec) -> str:
    payload = {
        "base": asdict(spec.base),
        "axes": [asdict(axis) for axis in spec.axes],
        "include_effective": spec.include_effective,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _package_version() -> str:
    try:
        return metadata.version("becmirror")
    except metadata.PackageNotFoundError:  # pragma: no cover - dev checkout
        return "unknown"


def _apply_axes(
    base: PhysicalInput, names: tuple[str, ...], values: tuple[float, ...]
) -> ModelParams:
    physical = base
    bare_overrides: dict[str, float] = {}
    model_overrides: dict[str, float] = {}
    physical_fields = set(PhysicalInput.field_names())
    model_fields = set(ModelParams.field_names())
    for name, value in zip(names, values):
        if name in physical_fields:
            physical = replace(physical, **{name: float(value)})
        elif name in _BARE_COUPLING_AXES:
            bare_overrides[name] = float(value)
        elif name in model_fields:
            model_overrides[name] = float(value)
        else:  # pragma: no cover - AxisSpec already validated
            raise ValidationError(f"unknown axis parameter {name!r}")
    derived = derive_parameters(physical)
    if bare_overrides:
        derived = DerivedParams(
            **{**asdict(derived), **bare_overrides}
        )
    detuning = model_overrides.pop("detuning", None)
    params = model_params(derived, detuning)
    if model_overrides:
        params = replace(params, **model_overrides)
    return params


def evaluate_point(
    base: PhysicalInput,
    axis_names: tuple[str, ...],
    axis_values: tuple[float, ...],
    include_effective: bool,
) -> SweepRow:
    """Evaluate one grid point; failures are captured in the row status."""
    cells: dict = {name: None for name in _MEASURE_COLUMNS}
    if include_effective:
        cells.update({name: None for name in _EFFECTIVE_COLUMNS})
    try:
        params = _apply_axes(base, axis_names, axis_values)
        drift = build_drift(params)
        report = check_stability_eigen(drift, params)
        cells["eigen_stable"] = report.is_stable
        cells["spectral_abscissa"] = report.spectral_abscissa
        cells["criterion_value"] = report.criterion_value
        cells["criterion_pass"] = report.criterion_pass
        if include_effective and params.detuning > 0:
            eff = effective_parameters(
                params.G_mc, params.G_ac, params.detuning, params.kappa,
                om_m=params.om_m, om_a=params.om_a,
            )
            cells["freq_shift_mirror"] = eff.freq_shift_mirror
            cells["freq_shift_bec"] = eff.freq_shift_bec
            cells["coupling_ma"] = eff.coupling_ma
            cells["adiabatic"] = eff.adiabatic
        if not report.is_stable:
            cells["status"] = "unstable"
            return SweepRow(axis_values=axis_values, cells=cells)
        diffusion = build_diffusion(params)
        cov = solve_steady_covariance(drift, diffusion, check_stability=False)
        cells["residual"] = lyapunov_residual(drift, diffusion, cov)
        result = entanglement_result(reduce_to_modes(cov))
        cells["nu_minus"] = result.nu_minus
        cells["nu_plus"] = result.nu_plus
        cells["log_negativity"] = result.log_negativity
        cells["sigma"] = result.sigma
        cells["det_cov"] = result.det_cov
        cells["status"] = "ok"
    except BecMirrorError as exc:
        cells["status"] = f"error:{type(exc).__name__}"
    return SweepRow(axis_values=axis_values, cells=cells)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate the grid in row-major order.

    Grid points are pure and independent, so they are mapped over a thread
    pool by default; the ordered reduce keeps the output deterministic.
    ``workers=1`` forces serial evaluation.
    """
    axis_names = tuple(axis.name for axis in spec.axes)
    grids = [axis.values() for axis in spec.axes]
    if len(grids) == 1:
        points = [(float(v),) for v in grids[0]]
    else:
        points = [(float(a), float(b)) for a in grids[0] for b in grids[1]]

    def job(values: tuple[float, ...]) -> SweepRow:
        return evaluate_point(spec.base, axis_names, values, spec.include_effective)

    if workers == 1 or len(points) == 1:
        rows = tuple(job(v) for v in points)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(job, points))

    columns = _MEASURE_COLUMNS + (_EFFECTIVE_COLUMNS if spec.include_effective else ())
    provenance = {
        "schema_version": SCHEMA_VERSION,
        "config_hash": _config_hash(spec),
        "constants_version": constants.CONSTANTS_VERSION,
        "package_version": _package_version(),
    }
    return SweepResult(
        axis_names=axis_names, columns=columns, rows=rows, provenance=provenance
    )


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(result: SweepResult, fmt: str = "csv") -> bytes:
    """Serialize a sweep result; byte-identical for identical inputs."""
    if fmt == "csv":
        lines = [
            "# becmirror sweep",
            f"# schema_version={result.provenance['schema_version']}",
            f"# config_hash={result.provenance['config_hash']}",
            f"# constants_version={result.provenance['constants_version']}",
            f"# package_version={result.provenance['package_version']}",
            ",".join(result.axis_names + result.columns),
        ]
        for row in result.rows:
            cells = [repr(v) for v in row.axis_values]
            cells += [_format_cell(row.cells[c]) for c in result.columns]
            lines.append(",".join(cells))
        return ("\n".join(lines) + "\n").encode()
    if fmt == "json":
        doc = {
            "provenance": result.provenance,
            "axes": list(result.axis_names),
            "columns": list(result.columns),
            "rows": [
                {
                    "axis_values": list(row.axis_values),
                    **{c: row.cells[c] for c in result.columns},
                }
                for row in result.rows
            ],
        }
        return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()
    raise ValidationError(f"unknown format {fmt!r}; use csv or json")


def _parse_cell(text: str):
    if text == "":
        return None
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return float(text)
    except ValueError:
        return text


def parse_sweep(blob: bytes, fmt: str = "csv") -> dict:
    """Round-trip companion to :func:`emit`."""
    if fmt == "json":
        return json.loads(blob.decode())
    if fmt != "csv":
        raise ValidationError(f"unknown format {fmt!r}; use csv or json")
    provenance: dict = {}
    header: list[str] | None = None
    rows = []
    for line in blob.decode().splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                provenance[key.strip()] = _parse_cell(value.strip())
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            continue
        rows.append({name: _parse_cell(cell) for name, cell in zip(header, cells)})
    if header is None:
        raise ValidationError("no header line found in CSV input")
    return {"provenance": provenance, "columns": header, "rows": rows}
