"""Command-line driver: steady solves, sweeps, correlations, witnesses,
figure-data pipelines and an oracle selftest.

Every subcommand emits CSV/JSON only; image rendering lives in a separate
consumer package so this one carries zero graphics dependencies.  All
frequencies in CLI input and output are in gamma_2 units.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 selftest failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dressed import PhotonSector, dressed_energies, expected_scan_features
from .dynamics import (
    TauGrid,
    default_tau_grid,
    g2_bundle,
    g2_correlation,
    hbt_spectrum,
    write_correlation_csv,
    write_spectrum_csv,
)
from .entanglement import trace_out_atom, witness
from .errors import BimodalError, ConfigError, SolverError
from .hilbert import AtomicLevel, BasisState, build_space, number_op
from .model import FRAME_LASER, ModelParams, build_liouvillian, load_params
from .observables import equal_time_g2, steady_observables
from .steady import SteadySolver, steady_state, time_march_to_steady, trace_distance
from .sweep import SweepAxis, SweepSpec, run_sweep, write_provenance, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_SELFTEST = 4

ETA_IC_CURVES = (0.5, 1.0, 1.5, 2.0)
ETA_C_CURVES = (0.1, 0.5, 1.0, 1.5, 2.0)
GRID_EPS = 1e-9  # arange stop guard


# --- shared plumbing --------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, tuple):
        return " ".join(repr(float(v)) for v in value)
    return repr(float(value))


def _write_table(path: Path, preamble, columns, rows) -> None:
    with open(path, "w") as f:
        for key, value in preamble:
            f.write(f"# {key} = {_cell(value)}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_cell(v) for v in row) + "\n")


def _preamble(params: ModelParams, fock: tuple[int, int], tol: float, extra=()):
    lines = [("engine_version", __version__), ("fock", f"{fock[0]} {fock[1]}"), ("tol", tol)]
    for key, value in sorted(params.to_dict().items()):
        lines.append((f"base.{key}", value))
    for name, value in expected_scan_features(params):
        lines.append((f"feature.{name}", value))
    lines.extend(extra)
    return lines


def _grid(start: float, stop: float, step: float) -> list[float]:
    return [float(v) for v in np.arange(start, stop + GRID_EPS, step)]


def _parse_overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _resolve_params(args, base: ModelParams | None = None) -> ModelParams:
    params = base if base is not None else ModelParams()
    if getattr(args, "config", None):
        params = load_params(args.config, base=params)
    overrides = _parse_overrides(getattr(args, "set", None))
    if overrides:
        params = ModelParams.from_mapping(overrides, base=params)
    return params.validate()


def _fock(args) -> tuple[int, int]:
    n = getattr(args, "fock", None) or 6
    if n < 1:
        raise ConfigError(f"--fock must be >= 1, got {n}")
    return (n, n)


def _outdir(args) -> Path:
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solve_one(params: ModelParams, fock: tuple[int, int], tol: float):
    space = build_space(*fock)
    liouvillian = build_liouvillian(space, params)
    result = steady_state(liouvillian, tol=tol)
    return space, liouvillian, result


# --- subcommands ------------------------------------------------------------


def cmd_solve(args) -> int:
    params = _resolve_params(args)
    fock = _fock(args)
    out = _outdir(args)
    space, _, result = _solve_one(params, fock, args.tol)
    rec = steady_observables(space, result.rho_ss)

    cols = list(rec.scalar_fields())
    cols += [f"pn1_{n}" for n in range(fock[0])] + [f"pn2_{n}" for n in range(fock[1])]
    row = [getattr(rec, f) for f in rec.scalar_fields()] + list(rec.pn1) + list(rec.pn2)
    _write_table(out / "observables.csv", _preamble(params, fock, args.tol), cols, [row])
    with open(out / "diagnostics.json", "w") as f:
        doc = {"params": params.to_dict(), "fock": list(fock), **result.diagnostics()}
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    print(
        f"nbar1={rec.nbar1:.6g} nbar2={rec.nbar2:.6g} "
        f"g2_11={rec.g2_11:.6g} g2_12={rec.g2_12:.6g} residual={result.residual:.3e}"
    )
    print(f"wrote {out / 'observables.csv'} and {out / 'diagnostics.json'}")
    return EXIT_OK


def _sweep_spec_from_config(args) -> SweepSpec:
    if not args.config:
        raise ConfigError("scan requires --config with a 'sweep' section")
    with open(args.config) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config}: {exc}") from None
    sweep_doc = doc.get("sweep")
    if not isinstance(sweep_doc, dict):
        raise ConfigError(f"config {args.config}: missing 'sweep' object")
    base = _resolve_params(args)
    axes = []
    for ax in sweep_doc.get("axes", []):
        if "values" in ax:
            axes.append(SweepAxis(ax["name"], tuple(float(v) for v in ax["values"])))
        else:
            try:
                axes.append(
                    SweepAxis.linspace(ax["name"], ax["start"], ax["stop"], int(ax["num"]))
                )
            except KeyError as exc:
                raise ConfigError(f"sweep axis needs name+values or name+start/stop/num: missing {exc}") from None
    fock = _fock(args) if args.fock else tuple(sweep_doc.get("fock", (6, 6)))
    spec = SweepSpec(
        base=base,
        axes=tuple(axes),
        outputs=tuple(sweep_doc.get("outputs", ("observables",))),
        fock=(int(fock[0]), int(fock[1])),
        tol=args.tol if args.tol != 1e-10 else float(sweep_doc.get("tol", 1e-10)),
        witness_mode=int(sweep_doc.get("witness_mode", 2)),
    )
    return spec.validate()


def cmd_scan(args) -> int:
    spec = _sweep_spec_from_config(args)
    out = _outdir(args)
    rows = run_sweep(spec, threads=args.threads)
    write_sweep_csv(spec, rows, out / "scan.csv")
    write_provenance(spec, out / "scan.provenance.json", row_count=len(rows))
    failed = sum(1 for r in rows if r.status != "ok")
    print(f"scan: {len(rows)} points, {failed} failed; wrote {out / 'scan.csv'}")
    return EXIT_OK


def _pair(args) -> tuple[int, int]:
    text = args.pair
    if len(text) != 2 or text[0] not in "12" or text[1] not in "12":
        raise ConfigError(f"--pair must be one of 11, 22, 12, 21; got {text!r}")
    return int(text[0]), int(text[1])


def _correlation_series(args):
    params = _resolve_params(args)
    fock = _fock(args)
    space, liouvillian, result = _solve_one(params, fock, args.tol)
    i, j = _pair(args)
    if args.tmax is not None:
        grid = TauGrid(t_max=args.tmax, n_points=args.points)
    else:
        grid = default_tau_grid(params, n_points=args.points)
    series = g2_correlation(liouvillian, result.rho_ss, i, j, grid=grid)
    return series


def cmd_correlate(args) -> int:
    series = _correlation_series(args)
    out = _outdir(args)
    path = out / f"g2_{series.i}{series.j}.csv"
    write_correlation_csv(series, path)
    print(
        f"g2_{series.i}{series.j}(0)={series.g2[0]:.6g} "
        f"g_inf={series.g_inf:.6g} t_max={series.t_max:.6g}"
    )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    series = hbt_spectrum(_correlation_series(args))
    out = _outdir(args)
    g2_path = out / f"g2_{series.i}{series.j}.csv"
    sp_path = out / f"spectrum_{series.i}{series.j}.csv"
    write_correlation_csv(series, g2_path)
    write_spectrum_csv(series, sp_path)
    peak = series.omega[int(np.argmax(np.abs(series.spectrum)))]
    print(f"spectrum peak |omega|={abs(peak):.6g} F(0)={series.spectrum[len(series.omega)//2]:.6g}")
    print(f"wrote {g2_path} and {sp_path}")
    return EXIT_OK


def cmd_witness(args) -> int:
    params = _resolve_params(args)
    fock = _fock(args)
    out = _outdir(args)
    space, _, result = _solve_one(params, fock, args.tol)
    rec = steady_observables(space, result.rho_ss)
    wit = witness(result.rho_ss, space, args.mode)
    doc = {
        "mode": args.mode,
        "min_eigenvalue": wit.min_eigenvalue,
        "entangled": wit.entangled,
        "nbar1": rec.nbar1,
        "nbar2": rec.nbar2,
        "g2_12": rec.g2_12,
        "params": params.to_dict(),
        "fock": list(fock),
        "engine_version": __version__,
    }
    path = out / "witness.json"
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    print(
        f"witness: min_eigenvalue={wit.min_eigenvalue:.6g} "
        f"entangled={'yes' if wit.entangled else 'no'}"
    )
    print(f"wrote {path}")
    return EXIT_OK


# --- figure pipelines -------------------------------------------------------
#
# Grids are fixed constants so repeated runs are byte-identical; runtimes on
# one core range from seconds (fig3) to several minutes for the driven scans
# (fig11, fig12) and the detuning surface (fig6).


def _observable_rows(space, solver, points, keys) -> list[list]:
    """points = [(tag_values, params)]; rows carry tags + requested record fields."""
    rows = []
    for tags, params in points:
        try:
            liouvillian = build_liouvillian(space, params)
            result = solver.solve(liouvillian)
            rec = steady_observables(space, result.rho_ss)
            rows.append(list(tags) + [getattr(rec, k) for k in keys] + ["ok"])
        except BimodalError as exc:
            rows.append(list(tags) + [float("nan")] * len(keys) + [f"error: {exc}"])
    return rows


def _figure_fig3(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    # truncation is the swept axis here; the --fock flag is ignored
    rows = []
    for f in range(2, 9):
        space = build_space(f, f)
        result = steady_state(build_liouvillian(space, base), tol=tol)
        rec = steady_observables(space, result.rho_ss)
        rows.append([f, rec.nbar1, rec.nbar2, "ok"])
    path = out / "fig3_truncation.csv"
    _write_table(path, _preamble(base, fock, tol), ["fock_states", "nbar1", "nbar2", "status"], rows)
    return [path]


def _figure_fig4(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    space = build_space(*fock)
    solver = SteadySolver(tol=tol)
    points = []
    for eta in ETA_IC_CURVES:
        for g in _grid(0.0, 30.0, 0.5):
            points.append(((eta, g), base.replace(eta_ic1=eta, eta_ic2=eta, g1=g, g2=g)))
    lines = out / "fig4_lines.csv"
    _write_table(
        lines,
        _preamble(base, fock, tol),
        ["eta_ic", "g", "nbar1", "nbar2", "status"],
        _observable_rows(space, solver, points, ("nbar1", "nbar2")),
    )

    points = []
    for g1 in _grid(0.0, 15.0, 0.5):
        for g2 in _grid(0.0, 15.0, 0.5):
            points.append(((g1, g2), base.replace(g1=g1, g2=g2)))
    surface = out / "fig4_surface.csv"
    _write_table(
        surface,
        _preamble(base, fock, tol),
        ["g1", "g2", "nbar1", "nbar2", "status"],
        _observable_rows(space, solver, points, ("nbar1", "nbar2")),
    )
    return [lines, surface]


def _figure_fig5(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    space = build_space(*fock)
    solver = SteadySolver(tol=tol)
    points = []
    for eta in ETA_IC_CURVES:
        for g in _grid(0.25, 15.0, 0.25):
            points.append(((eta, g), base.replace(eta_ic1=eta, eta_ic2=eta, g1=g, g2=g)))
    path = out / "fig5_g2.csv"
    _write_table(
        path,
        _preamble(base, fock, tol),
        ["eta_ic", "g", "g2_11", "g2_22", "g2_12", "nbar1", "nbar2", "status"],
        _observable_rows(space, solver, points, ("g2_11", "g2_22", "g2_12", "nbar1", "nbar2")),
    )
    return [path]


def _figure_fig6(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    space = build_space(*fock)
    solver = SteadySolver(tol=tol)
    points = []
    for eta in ETA_IC_CURVES:
        for d1 in _grid(-25.0, 25.0, 0.25):
            points.append(
                ((eta, d1), base.replace(eta_ic1=eta, eta_ic2=eta, delta1=d1, delta2=0.0))
            )
    lines = out / "fig6_lines.csv"
    _write_table(
        lines,
        _preamble(base, fock, tol),
        ["eta_ic", "delta1", "nbar1", "nbar2", "status"],
        _observable_rows(space, solver, points, ("nbar1", "nbar2")),
    )

    points = []
    for d1 in _grid(-20.0, 20.0, 0.5):
        for d2 in _grid(-20.0, 20.0, 0.5):
            points.append(((d1, d2), base.replace(delta1=d1, delta2=d2)))
    surface = out / "fig6_surface.csv"
    _write_table(
        surface,
        _preamble(base, fock, tol),
        ["delta1", "delta2", "nbar1", "nbar2", "status"],
        _observable_rows(space, solver, points, ("nbar1", "nbar2")),
    )
    return [lines, surface]


def _correlation_figure(base: ModelParams, fock, tol, out: Path, stem: str, pair: tuple[int, int]):
    space = build_space(*fock)
    solver = SteadySolver(tol=tol)
    g2_rows, sp_rows = [], []
    for eta in ETA_IC_CURVES:
        params = base.replace(eta_ic1=eta, eta_ic2=eta)
        liouvillian = build_liouvillian(space, params)
        result = solver.solve(liouvillian)
        series = g2_correlation(liouvillian, result.rho_ss, pair[0], pair[1])
        series = hbt_spectrum(series)
        for tau, val in zip(series.taus, series.g2):
            g2_rows.append([eta, tau, val])
        for omega, val in zip(series.omega, series.spectrum):
            sp_rows.append([eta, omega, val])
    tag = f"{pair[0]}{pair[1]}"
    g2_path = out / f"{stem}_g2.csv"
    sp_path = out / f"{stem}_spectrum.csv"
    _write_table(g2_path, _preamble(base, fock, tol), ["eta_ic", "tau", f"g2_{tag}"], g2_rows)
    _write_table(sp_path, _preamble(base, fock, tol), ["eta_ic", "omega", f"F_{tag}"], sp_rows)
    return [g2_path, sp_path]


def _figure_fig7(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    return _correlation_figure(base, fock, tol, out, "fig7", (1, 2))


def _figure_fig8(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    return _correlation_figure(base, fock, tol, out, "fig8", (1, 1))


def _figure_shelving(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    shelf = base.replace(gamma1=0.1, g1=1.0, g2=3.0, eta_ic1=2.0)
    space = build_space(*fock)
    solver = SteadySolver(tol=tol)
    points = []
    for eta2 in _grid(0.0, 2.0, 0.1):
        points.append(((eta2,), shelf.replace(eta_ic2=eta2)))
    path = out / "shelving_transfer.csv"
    _write_table(
        path,
        _preamble(shelf, fock, tol),
        ["eta_ic2", "nbar1", "nbar2", "g2_11", "g2_22", "g2_12", "status"],
        _observable_rows(space, solver, points, ("nbar1", "nbar2", "g2_11", "g2_22", "g2_12")),
    )
    return [path]


def _witness_scan(space, solver, points, mode: int):
    """points = [(tags, params)] -> (witness_rows, nbar_rows, g2_rows)."""
    wit_rows, nbar_rows, g2_rows = [], [], []
    for tags, params in points:
        tags = list(tags)
        try:
            liouvillian = build_liouvillian(space, params)
            result = solver.solve(liouvillian)
            rec = steady_observables(space, result.rho_ss)
            wit = witness(result.rho_ss, space, mode)
            wit_rows.append(tags + [wit.min_eigenvalue, wit.entangled, "ok"])
            nbar_rows.append(tags + [rec.nbar1, rec.nbar2, "ok"])
            g2_rows.append(tags + [rec.g2_12, rec.g2_11, rec.g2_22, "ok"])
        except BimodalError as exc:
            status = f"error: {exc}"
            nan = float("nan")
            wit_rows.append(tags + [nan, False, status])
            nbar_rows.append(tags + [nan, nan, status])
            g2_rows.append(tags + [nan, nan, nan, status])
    return wit_rows, nbar_rows, g2_rows


def _figure_fig11(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    driven = base.replace(
        frame=FRAME_LASER, eta_ic1=0.0, eta_ic2=0.0, eta_c1=ETA_C_CURVES[0], eta_c2=ETA_C_CURVES[0]
    )
    space = build_space(*fock)
    wit_rows, nbar_rows, g2_rows = [], [], []
    for eta_c in ETA_C_CURVES:
        solver = SteadySolver(tol=tol)  # fresh factor per curve, reused along delta_L
        points = []
        for d in _grid(3.0, 12.0, 0.25):
            points.append(
                ((eta_c, d), driven.replace(eta_c1=eta_c, eta_c2=eta_c, delta1L=d, delta2L=d))
            )
        w, n, g = _witness_scan(space, solver, points, mode=2)
        wit_rows += w
        nbar_rows += n
        g2_rows += g
    pre = _preamble(driven, fock, tol)
    paths = [out / "fig11_witness.csv", out / "fig11_nbar.csv", out / "fig11_g2.csv"]
    _write_table(paths[0], pre, ["eta_c", "delta_L", "min_eigenvalue", "entangled", "status"], wit_rows)
    _write_table(paths[1], pre, ["eta_c", "delta_L", "nbar1", "nbar2", "status"], nbar_rows)
    _write_table(paths[2], pre, ["eta_c", "delta_L", "g2_12", "g2_11", "g2_22", "status"], g2_rows)
    return paths


def _figure_fig12(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    # strongest drive from the deltaL-scan figure, parked on the two-photon resonance
    d_l = 10.0 / np.sqrt(2.0)
    driven = base.replace(
        frame=FRAME_LASER,
        eta_ic1=0.01,
        eta_ic2=0.0,
        eta_c1=2.0,
        eta_c2=2.0,
        delta1L=d_l,
        delta2L=d_l,
    )
    space = build_space(*fock)
    wit_rows, nbar_rows, g2_rows = [], [], []
    for eta1 in (0.01, 0.1, 0.5):
        solver = SteadySolver(tol=tol)
        points = []
        for eta2 in _grid(0.0, 0.6, 0.05):
            points.append(((eta1, eta2), driven.replace(eta_ic1=eta1, eta_ic2=eta2)))
        w, n, g = _witness_scan(space, solver, points, mode=2)
        wit_rows += w
        nbar_rows += n
        g2_rows += g
    pre = _preamble(driven, fock, tol)
    paths = [out / "fig12_witness.csv", out / "fig12_nbar.csv", out / "fig12_g2.csv"]
    _write_table(paths[0], pre, ["eta_ic1", "eta_ic2", "min_eigenvalue", "entangled", "status"], wit_rows)
    _write_table(paths[1], pre, ["eta_ic1", "eta_ic2", "nbar1", "nbar2", "status"], nbar_rows)
    _write_table(paths[2], pre, ["eta_ic1", "eta_ic2", "g2_12", "g2_11", "g2_22", "status"], g2_rows)
    return paths


def _figure_fig13(base: ModelParams, fock, tol, out: Path) -> list[Path]:
    space = build_space(*fock)
    eta_grid = _grid(0.0, 3.0, 0.1)

    points = []
    for g in (5.0, 10.0):
        for eta in eta_grid:
            points.append(
                ((g, eta), base.replace(g1=g, g2=g, eta_ic1=eta, eta_ic2=eta))
            )
    incoherent = out / "fig13_incoherent.csv"
    _write_table(
        incoherent,
        _preamble(base, fock, tol),
        ["g", "eta_ic", "nbar1", "nbar2", "status"],
        _observable_rows(space, SteadySolver(tol=tol), points, ("nbar1", "nbar2")),
    )

    driven = base.replace(frame=FRAME_LASER, eta_ic1=0.0, eta_ic2=0.0)
    rows = []
    for g in (5.0, 10.0):
        solver = SteadySolver(tol=tol)
        points = [
            ((g, eta), driven.replace(g1=g, g2=g, eta_c1=eta, eta_c2=eta))
            for eta in eta_grid
        ]
        rows += _observable_rows(space, solver, points, ("nbar1", "nbar2"))
    coherent = out / "fig13_coherent.csv"
    _write_table(
        coherent,
        _preamble(driven, fock, tol),
        ["g", "eta_c", "nbar1", "nbar2", "status"],
        rows,
    )
    return [incoherent, coherent]


FIGURES = {
    "fig3": _figure_fig3,
    "fig4": _figure_fig4,
    "fig5": _figure_fig5,
    "fig6": _figure_fig6,
    "fig7": _figure_fig7,
    "fig8": _figure_fig8,
    "shelving": _figure_shelving,
    "fig11": _figure_fig11,
    "fig12": _figure_fig12,
    "fig13": _figure_fig13,
}


def cmd_figure(args) -> int:
    name = args.name
    base = _resolve_params(args)
    fock = _fock(args)
    out = _outdir(args)
    start = time.monotonic()
    paths = FIGURES[name](base, fock, args.tol, out)
    elapsed = time.monotonic() - start
    for path in paths:
        print(f"wrote {path}")
    print("predicted features:")
    for feat, value in expected_scan_features(base):
        print(f"  {feat} = {_cell(value)}")
    print(f"figure {name} done in {elapsed:.1f}s")
    return EXIT_OK


# --- selftest ---------------------------------------------------------------


def _check_dressed_energies() -> tuple[float, float]:
    """Closed-form sector energies vs brute-force diagonalization of the block."""
    worst = 0.0
    g = 10.0
    for n1, n2 in [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]:
        predicted = np.sort(
            [float(e) for e in dressed_energies(PhotonSector(n1, n2), g, g, 0.0).values()]
        )
        c1, c2 = g * np.sqrt(n1), g * np.sqrt(n2)
        if n1 and n2:
            block = np.array([[0.0, c1, c2], [c1, 0.0, 0.0], [c2, 0.0, 0.0]])
        else:  # empty mode decouples; the sector is a 2x2 ladder
            c = c1 if n1 else c2
            block = np.array([[0.0, c], [c, 0.0]])
        numeric = np.sort(np.linalg.eigvalsh(block))
        worst = max(worst, float(np.max(np.abs(numeric - predicted))))
    return worst, 1e-10


def _check_dissipator_decay(corrupt_rate_convention: bool = False) -> tuple[float, float]:
    """d<n1>/dt on a one-photon state under pure cavity decay must be -kappa1."""
    space = build_space(2, 2)
    params = ModelParams(
        g1=0.0, g2=0.0, kappa1=1.0, kappa2=0.0,
        gamma1=0.0, gamma2=0.0, eta_ic1=0.0, eta_ic2=0.0,
    )
    liouvillian = build_liouvillian(space, params)
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    idx = space.index(BasisState(AtomicLevel.a, 1, 0))
    rho[idx, idx] = 1.0
    drho = liouvillian.apply_rho(rho)
    if corrupt_rate_convention:
        drho = 0.5 * drho
    rate = float(np.real(np.trace(number_op(space, 1).to_dense() @ drho)))
    return abs(rate - (-params.kappa1)), 1e-12


def _check_frame_equivalence() -> tuple[float, float]:
    fock = (3, 3)
    cavity = ModelParams(delta1=1.5, delta2=-0.75, eta_ic1=1.0, eta_ic2=1.0)
    laser = cavity.replace(frame=FRAME_LASER, delta1L=2.0, delta2L=-1.0)
    space = build_space(*fock)
    rec_c = steady_observables(space, steady_state(build_liouvillian(space, cavity)).rho_ss)
    rec_l = steady_observables(space, steady_state(build_liouvillian(space, laser)).rho_ss)
    diff = max(
        abs(rec_c.nbar1 - rec_l.nbar1),
        abs(rec_c.nbar2 - rec_l.nbar2),
        abs(rec_c.p_a - rec_l.p_a),
    )
    return diff, 1e-8


def _check_march_agreement() -> tuple[float, float]:
    space = build_space(4, 4)
    liouvillian = build_liouvillian(space, ModelParams())
    direct = steady_state(liouvillian, tol=1e-10)
    marched = time_march_to_steady(liouvillian, tol=1e-8)
    return trace_distance(direct.rho_ss, marched.rho_ss), 1e-6


def _check_regression_tau0() -> tuple[float, float]:
    space = build_space(6, 6)
    liouvillian = build_liouvillian(space, ModelParams())
    result = steady_state(liouvillian, tol=1e-10)
    grid = TauGrid(t_max=0.1, n_points=8)
    bundle = g2_bundle(liouvillian, result.rho_ss, 1, (1, 2), grid=grid)
    worst = 0.0
    for j in (1, 2):
        direct = equal_time_g2(space, result.rho_ss, 1, j)
        rel = abs(bundle[j].g2[0] - direct) / abs(direct)
        worst = max(worst, rel)
    return worst, 1e-8


def _check_witness_sanity() -> tuple[float, float]:
    # maximally entangled two-mode one-photon state: min PT eigenvalue is -1/2
    space = build_space(2, 2)
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.index(BasisState(AtomicLevel.a, 1, 0))] = 1.0 / np.sqrt(2)
    psi[space.index(BasisState(AtomicLevel.a, 0, 1))] = 1.0 / np.sqrt(2)
    rho = np.outer(psi, psi.conj())
    wit = witness(rho, space, mode=2)
    err = abs(wit.min_eigenvalue - (-0.5))

    # steady incoherent-pump state: reduced matrix is 36x36 at 6 Fock states
    space6 = build_space(6, 6)
    result = steady_state(build_liouvillian(space6, ModelParams()), tol=1e-10)
    reduced = trace_out_atom(result.rho_ss, space6)
    if reduced.matrix.shape != (36, 36):
        err = max(err, 1.0)
    wit6 = witness(result.rho_ss, space6, mode=2)
    if wit6.min_eigenvalue < -1e-8:  # incoherent pumping alone must not flag
        err = max(err, abs(wit6.min_eigenvalue))
    return err, 1e-12


def selftest_checks(corrupt_rate_convention: bool = False):
    """Ordered oracle checks; each yields (name, measured, threshold)."""
    yield ("dressed_sector_energies", *_check_dressed_energies())
    yield ("dissipator_decay_rate", *_check_dissipator_decay(corrupt_rate_convention))
    yield ("frame_equivalence", *_check_frame_equivalence())
    yield ("march_vs_linear", *_check_march_agreement())
    yield ("regression_tau0_vs_direct", *_check_regression_tau0())
    yield ("witness_sanity", *_check_witness_sanity())


def cmd_selftest(args) -> int:
    out = _outdir(args)
    report = []
    failed = 0
    for name, measured, threshold in selftest_checks():
        ok = bool(measured <= threshold)
        failed += 0 if ok else 1
        report.append(
            {"check": name, "passed": ok, "measured": float(measured), "threshold": threshold}
        )
        print(f"{'PASS' if ok else 'FAIL'} {name} measured={measured:.3e} threshold={threshold:.0e}")
    path = out / "selftest.json"
    with open(path, "w") as f:
        json.dump({"engine_version": __version__, "checks": report}, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {path}")
    return EXIT_OK if failed == 0 else EXIT_SELFTEST


# --- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bimodal",
        description="Steady-state and correlation engine for a two-mode cavity "
        "coupled to a V-type atom under incoherent pumping and coherent drives.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config with flat params and/or a params/sweep object")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override; repeatable")
    common.add_argument("--fock", type=int, help="Fock states per mode (default 6)")
    common.add_argument("--tol", type=float, default=1e-10, help="steady-state residual tolerance")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="steady state and scalar observables")
    sub.add_parser("scan", parents=[common], help="parameter sweep from a config file")

    corr = sub.add_parser("correlate", parents=[common], help="two-time correlation g2_ij(tau)")
    corr.add_argument("--pair", default="12", help="mode pair: 11, 22, 12 or 21")
    corr.add_argument("--tmax", type=float, help="time-delay horizon (default 20/(kappa+gamma))")
    corr.add_argument("--points", type=int, default=2048, help="tau samples")

    spec = sub.add_parser("spectrum", parents=[common], help="correlation plus its cosine transform")
    spec.add_argument("--pair", default="12", help="mode pair: 11, 22, 12 or 21")
    spec.add_argument("--tmax", type=float, help="time-delay horizon (default 20/(kappa+gamma))")
    spec.add_argument("--points", type=int, default=2048, help="tau samples")

    wit = sub.add_parser("witness", parents=[common], help="two-mode inseparability witness")
    wit.add_argument("--mode", type=int, default=2, choices=(1, 2), help="mode to transpose")

    fig = sub.add_parser("figure", parents=[common], help="write the data bundle for a named figure")
    fig.add_argument("name", choices=sorted(FIGURES))

    sub.add_parser("selftest", parents=[common], help="run the oracle checks")
    return parser


HANDLERS = {
    "solve": cmd_solve,
    "scan": cmd_scan,
    "correlate": cmd_correlate,
    "spectrum": cmd_spectrum,
    "witness": cmd_witness,
    "figure": cmd_figure,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except BimodalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
