"""Parameter sweeps with convergence guards and deterministic output.

A sweep walks the cartesian product of one or two parameter axes over a
base ModelParams, computing steady-state observables (and optionally the
entanglement witness) per point.  Output is bit-reproducible: fixed row
order, fixed float formatting, and a JSON provenance sidecar carrying the
spec hash, truncation and engine version.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .entanglement import WitnessResult, witness
from .errors import ConfigError, NonConvergenceError
from .hilbert import build_space
from .model import MEMORY_BUDGET, ModelParams, build_liouvillian
from .observables import ObservableRecord, steady_observables
from .steady import SteadySolver, SteadyStateResult

CONVERGENCE_THRESHOLD = 0.01  # matches the visual plateau of the truncation study


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple[float, ...]

    @staticmethod
    def linspace(name: str, start: float, stop: float, num: int) -> "SweepAxis":
        return SweepAxis(name, tuple(float(v) for v in np.linspace(start, stop, num)))


@dataclass(frozen=True)
class SweepSpec:
    base: ModelParams
    axes: tuple[SweepAxis, ...]
    outputs: tuple[str, ...] = ("observables",)
    fock: tuple[int, int] = (6, 6)
    tol: float = 1e-10
    witness_mode: int = 2

    def __post_init__(self):
        self.validate()

    def validate(self) -> "SweepSpec":
        if not (1 <= len(self.axes) <= 2):
            raise ConfigError(f"sweeps take 1 or 2 axes, got {len(self.axes)}")
        known = set(ModelParams.field_names()) - {"frame"}
        for axis in self.axes:
            if axis.name not in known:
                raise ConfigError(f"unknown sweep axis {axis.name!r}")
            if len(axis.values) < 2:
                raise ConfigError(f"axis {axis.name!r} needs at least 2 values")
            if not all(np.isfinite(axis.values)):
                raise ConfigError(f"axis {axis.name!r} has non-finite values")
        allowed = {"observables", "correlations", "spectra", "witness"}
        bad = set(self.outputs) - allowed
        if bad:
            raise ConfigError(f"unknown outputs {sorted(bad)}; allowed: {sorted(allowed)}")
        self.base.validate()
        return self

    def canonical(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "axes": [{"name": a.name, "values": list(a.values)} for a in self.axes],
            "outputs": list(self.outputs),
            "fock": list(self.fock),
            "tol": self.tol,
            "witness_mode": self.witness_mode,
        }

    def spec_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def grid(self) -> list[ModelParams]:
        """Row-major cartesian product, first axis outermost."""
        points = []
        if len(self.axes) == 1:
            for v in self.axes[0].values:
                points.append(self.base.replace(**{self.axes[0].name: v}))
        else:
            a0, a1 = self.axes
            for v0 in a0.values:
                for v1 in a1.values:
                    points.append(self.base.replace(**{a0.name: v0, a1.name: v1}))
        return points


@dataclass
class SweepRow:
    index: int
    params: ModelParams
    record: ObservableRecord | None
    witness: WitnessResult | None
    diagnostics: dict | None
    status: str


def _solve_point(space, params, solver, want_witness, witness_mode, tol) -> tuple:
    liouvillian = build_liouvillian(space, params)
    result = solver.solve(liouvillian)
    record = steady_observables(space, result.rho_ss)
    wit = witness(result.rho_ss, space, witness_mode) if want_witness else None
    return record, wit, result.diagnostics()


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[SweepRow]:
    """Evaluate the grid; failed points come back flagged, never missing."""
    spec.validate()
    space = build_space(*spec.fock)
    grid = spec.grid()
    want_witness = "witness" in spec.outputs
    rows: list[SweepRow] = []

    if threads <= 1:
        solver = SteadySolver(tol=spec.tol)
        for idx, params in enumerate(grid):
            try:
                record, wit, diag = _solve_point(
                    space, params, solver, want_witness, spec.witness_mode, spec.tol
                )
                rows.append(SweepRow(idx, params, record, wit, diag, "ok"))
            except Exception as exc:
                rows.append(SweepRow(idx, params, None, None, None, f"error: {exc}"))
        return rows

    def job(item):
        idx, params = item
        try:
            record, wit, diag = _solve_point(
                space, params, SteadySolver(tol=spec.tol), want_witness, spec.witness_mode, spec.tol
            )
            return SweepRow(idx, params, record, wit, diag, "ok")
        except Exception as exc:
            return SweepRow(idx, params, None, None, None, f"error: {exc}")

    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(job, enumerate(grid)))
    rows.sort(key=lambda r: r.index)
    return rows


def convergence_guard(
    spec: SweepSpec,
    threshold: float = CONVERGENCE_THRESHOLD,
    start: int = 1,
    vacuum_floor: float = 1e-9,
) -> int:
    """Truncation recommendation from the sweep's extreme-parameter corner.

    Raises the per-mode Fock count until the corner's occupation changes by
    less than `threshold` relative, and returns the first converged size.
    Refuses (with a diagnostic) if the memory budget is hit first.
    """
    spec.validate()
    corner = dict()
    for axis in spec.axes:
        corner[axis.name] = max(axis.values, key=abs)
    params = spec.base.replace(**corner)

    def check_budget(f: int, last) -> None:
        if (3 * f * f) ** 2 > MEMORY_BUDGET:
            raise NonConvergenceError(
                f"convergence guard hit the memory budget at {f} Fock states "
                f"(occupation still moving: last = {last!r})",
                residual=float("nan"),
            )

    def occupation(f: int) -> float:
        space = build_space(f, f)
        liouvillian = build_liouvillian(space, params)
        result = SteadySolver(tol=spec.tol).solve(liouvillian)
        rec = steady_observables(space, result.rho_ss)
        return max(rec.nbar1, rec.nbar2)

    check_budget(start, None)
    prev = occupation(start)
    f = start
    while True:
        f += 1
        check_budget(f, prev)
        cur = occupation(f)
        if prev < vacuum_floor and cur < vacuum_floor:
            return f - 1
        if abs(cur - prev) / max(abs(prev), vacuum_floor) < threshold:
            return f
        prev = cur


# --- CSV / provenance emission ---------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return repr(v)


def sweep_columns(spec: SweepSpec) -> list[str]:
    cols = ["index"]
    cols += [a.name for a in spec.axes]
    cols += [f for f in ModelParams.field_names() if f != "frame"]
    cols += list(ObservableRecord.scalar_fields())
    cols += [f"pn1_{n}" for n in range(spec.fock[0])]
    cols += [f"pn2_{n}" for n in range(spec.fock[1])]
    if "witness" in spec.outputs:
        cols += ["min_eigenvalue", "entangled"]
    cols += ["residual", "method", "status"]
    return cols


def sweep_row_values(spec: SweepSpec, row: SweepRow) -> list[str]:
    nan = float("nan")
    vals: list = [row.index]
    vals += [getattr(row.params, a.name) for a in spec.axes]
    vals += [getattr(row.params, f) for f in ModelParams.field_names() if f != "frame"]
    if row.record is not None:
        vals += [getattr(row.record, f) for f in ObservableRecord.scalar_fields()]
        vals += list(row.record.pn1)
        vals += list(row.record.pn2)
    else:
        vals += [nan] * (len(ObservableRecord.scalar_fields()) + spec.fock[0] + spec.fock[1])
    if "witness" in spec.outputs:
        if row.witness is not None:
            vals += [row.witness.min_eigenvalue, row.witness.entangled]
        else:
            vals += [nan, False]
    if row.diagnostics is not None:
        vals += [row.diagnostics["residual"], row.diagnostics["method"]]
    else:
        vals += [nan, "none"]
    vals += [row.status]
    return [_fmt(v) for v in vals]


def write_sweep_csv(spec: SweepSpec, rows: list[SweepRow], path) -> None:
    cols = sweep_columns(spec)
    with open(path, "w") as f:
        f.write(f"# spec_hash = {spec.spec_hash()}\n")
        f.write(f"# engine_version = {__version__}\n")
        for key, value in sorted(spec.base.to_dict().items()):
            f.write(f"# base.{key} = {_fmt(value)}\n")
        f.write(",".join(cols) + "\n")
        for row in rows:
            f.write(",".join(sweep_row_values(spec, row)) + "\n")


def write_provenance(spec: SweepSpec, path, row_count: int | None = None) -> None:
    doc = {
        "spec": spec.canonical(),
        "spec_hash": spec.spec_hash(),
        "engine_version": __version__,
        "columns": sweep_columns(spec),
        "row_count": row_count,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
