"""Figure builders: engine CSV bundles in, SVG or PNG out.

Every builder is a pure consumer.  Curve labels echo raw cell text,
annotation labels echo raw preamble text, axis labels are the column
names; no number is recomputed or reformatted beyond what the file says.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.transforms import blended_transform_factory

from .csvio import RenderError, Table, read_table
from .job import PlotJob

SAVE_FORMATS = (".svg", ".png")

_RC = {
    # keep annotation strings as literal SVG text so they stay greppable
    "svg.fonttype": "none",
    "svg.hashsalt": "bimodal-plots",
    "font.size": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "figure.constrained_layout.use": True,
}


def _unique(raw: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for v in raw:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def _curves(ax, table: Table, key: str, x: str, y: str, style: str = "-") -> None:
    """One line per distinct raw value of the key column."""
    raw_keys = table.raw_column(key)
    xs = table.column(x)
    ys = table.column(y)
    ok = table.ok_mask()
    for raw in _unique(raw_keys):
        mask = np.array([r == raw for r in raw_keys]) & ok
        ax.plot(xs[mask], ys[mask], style, label=f"{key} = {raw}")
    ax.set_xlabel(x)
    ax.set_ylabel(y)


def _series(ax, table: Table, x: str, ys: tuple[str, ...], styles=("o-", "s--", "^:")) -> None:
    ok = table.ok_mask()
    xs = table.column(x)
    for y, style in zip(ys, styles):
        ax.plot(xs[ok], table.column(y)[ok], style, markersize=3, label=y)
    ax.set_xlabel(x)


def _surface(ax, table: Table, xcol: str, ycol: str, zcol: str) -> None:
    xs, ys, zs = table.column(xcol), table.column(ycol), table.column(zcol)
    ux, uy = np.unique(xs), np.unique(ys)
    grid = np.full((len(uy), len(ux)), np.nan)
    grid[np.searchsorted(uy, ys), np.searchsorted(ux, xs)] = zs
    mesh = ax.pcolormesh(ux, uy, grid, shading="nearest", rasterized=True)
    ax.figure.colorbar(mesh, ax=ax, label=zcol)
    ax.set_xlabel(xcol)
    ax.set_ylabel(ycol)


def _vline_features(ax, table: Table, names: tuple[str, ...]) -> None:
    trans = blended_transform_factory(ax.transData, ax.transAxes)
    for feat in table.features():
        if feat.name in names and len(feat.values) == 1:
            ax.axvline(feat.values[0], color="0.4", linestyle=":", linewidth=0.8)
            ax.text(
                feat.values[0],
                0.02,
                f"{feat.name} = {feat.raw}",
                transform=trans,
                rotation=90,
                fontsize=5,
                color="0.3",
                va="bottom",
                ha="right",
            )


def _marker_features(ax, table: Table, names: tuple[str, ...]) -> None:
    for feat in table.features():
        if feat.name in names and len(feat.values) == 2:
            ax.plot([feat.values[0]], [feat.values[1]], "x", color="white", markersize=5)
            ax.annotate(
                f"{feat.name} = {feat.raw}",
                (feat.values[0], feat.values[1]),
                fontsize=5,
                color="white",
                xytext=(3, 3),
                textcoords="offset points",
            )


def _fig3(job: PlotJob, t: dict[str, Table]):
    tab = t["fig3_truncation.csv"]
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    _series(ax, tab, "fock_states", ("nbar1", "nbar2"))
    ax.set_ylabel("steady-state photon number")
    ax.legend()
    ax.set_title("fig3: truncation convergence")
    return fig


def _fig4(job: PlotJob, t: dict[str, Table]):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    _curves(ax1, t["fig4_lines.csv"], "eta_ic", "g", "nbar1")
    if job.log_y:
        ax1.set_yscale("log")
    ax1.legend()
    _surface(ax2, t["fig4_surface.csv"], "g1", "g2", "nbar1")
    fig.suptitle("fig4: thresholdless amplification")
    return fig


def _fig5(job: PlotJob, t: dict[str, Table]):
    tab = t["fig5_g2.csv"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    _curves(ax1, tab, "eta_ic", "g", "g2_11")
    _curves(ax2, tab, "eta_ic", "g", "g2_12")
    for ax in (ax1, ax2):
        ax.axhline(1.0, color="0.6", linewidth=0.8)
        ax.legend()
    fig.suptitle("fig5: intra- and inter-mode statistics")
    return fig


def _fig6(job: PlotJob, t: dict[str, Table]):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.2))
    _curves(ax1, t["fig6_lines.csv"], "eta_ic", "delta1", "nbar1")
    ax1.legend()
    _surface(ax2, t["fig6_surface.csv"], "delta1", "delta2", "nbar1")
    if job.annotate:
        _marker_features(ax2, t["fig6_surface.csv"], ("mode1_intensity_peak_delta",))
    fig.suptitle("fig6: detuning response")
    return fig


def _correlation_figure(job: PlotJob, t: dict[str, Table], stem: str, tag: str):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    _curves(ax1, t[f"{stem}_g2.csv"], "eta_ic", "tau", f"g2_{tag}")
    ax1.axhline(1.0, color="0.6", linewidth=0.8)
    ax1.legend()
    _curves(ax2, t[f"{stem}_spectrum.csv"], "eta_ic", "omega", f"F_{tag}")
    if job.annotate:
        _vline_features(
            ax2,
            t[f"{stem}_spectrum.csv"],
            ("hbt_spectrum_dominant_omega", "hbt_spectrum_secondary_omega"),
        )
    ax2.legend()
    fig.suptitle(f"{stem}: delayed correlation and its spectrum")
    return fig


def _fig7(job: PlotJob, t: dict[str, Table]):
    return _correlation_figure(job, t, "fig7", "12")


def _fig8(job: PlotJob, t: dict[str, Table]):
    return _correlation_figure(job, t, "fig8", "11")


def _shelving(job: PlotJob, t: dict[str, Table]):
    tab = t["shelving_transfer.csv"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    _series(ax1, tab, "eta_ic2", ("nbar1", "nbar2"))
    ax1.set_ylabel("steady-state photon number")
    ax1.legend()
    _series(ax2, tab, "eta_ic2", ("g2_11", "g2_22", "g2_12"))
    ax2.axhline(1.0, color="0.6", linewidth=0.8)
    ax2.legend()
    fig.suptitle("shelving: pump-controlled population transfer")
    return fig


def _fig11(job: PlotJob, t: dict[str, Table]):
    fig, axes = plt.subplots(3, 1, figsize=(5.0, 7.5), sharex=True)
    _curves(axes[0], t["fig11_witness.csv"], "eta_c", "delta_L", "min_eigenvalue")
    axes[0].axhline(0.0, color="0.6", linewidth=0.8)
    _curves(axes[1], t["fig11_nbar.csv"], "eta_c", "delta_L", "nbar1")
    _curves(axes[2], t["fig11_g2.csv"], "eta_c", "delta_L", "g2_12")
    if job.annotate:
        resonances = (
            "one_photon_resonance_deltaL",
            "two_photon_resonance_deltaL",
            "three_photon_resonance_deltaL",
        )
        for ax, name in zip(axes, ("fig11_witness.csv", "fig11_nbar.csv", "fig11_g2.csv")):
            _vline_features(ax, t[name], resonances)
    for ax in axes:
        ax.legend()
    fig.suptitle("fig11: drive-detuning scan")
    return fig


def _fig12(job: PlotJob, t: dict[str, Table]):
    fig, axes = plt.subplots(3, 1, figsize=(5.0, 7.5), sharex=True)
    _curves(axes[0], t["fig12_witness.csv"], "eta_ic1", "eta_ic2", "min_eigenvalue")
    axes[0].axhline(0.0, color="0.6", linewidth=0.8)
    _curves(axes[1], t["fig12_nbar.csv"], "eta_ic1", "eta_ic2", "nbar1")
    _curves(axes[2], t["fig12_g2.csv"], "eta_ic1", "eta_ic2", "g2_12")
    for ax in axes:
        ax.legend()
    fig.suptitle("fig12: pumping on top of the driven state")
    return fig


def _fig13(job: PlotJob, t: dict[str, Table]):
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    _curves(ax, t["fig13_incoherent.csv"], "g", "eta_ic", "nbar1", style="-")
    _curves(ax, t["fig13_coherent.csv"], "g", "eta_c", "nbar1", style="--")
    ax.set_xlabel("pump / drive strength")
    if job.log_y:
        ax.set_yscale("log")
    ax.legend(title="solid: incoherent, dashed: coherent")
    ax.set_title("fig13: incoherent vs coherent amplification")
    return fig


@dataclass(frozen=True)
class FigureSpec:
    files: tuple[str, ...]
    build: Callable[[PlotJob, dict[str, Table]], object]


REGISTRY: dict[str, FigureSpec] = {
    "fig3": FigureSpec(("fig3_truncation.csv",), _fig3),
    "fig4": FigureSpec(("fig4_lines.csv", "fig4_surface.csv"), _fig4),
    "fig5": FigureSpec(("fig5_g2.csv",), _fig5),
    "fig6": FigureSpec(("fig6_lines.csv", "fig6_surface.csv"), _fig6),
    "fig7": FigureSpec(("fig7_g2.csv", "fig7_spectrum.csv"), _fig7),
    "fig8": FigureSpec(("fig8_g2.csv", "fig8_spectrum.csv"), _fig8),
    "shelving": FigureSpec(("shelving_transfer.csv",), _shelving),
    "fig11": FigureSpec(("fig11_witness.csv", "fig11_nbar.csv", "fig11_g2.csv"), _fig11),
    "fig12": FigureSpec(("fig12_witness.csv", "fig12_nbar.csv", "fig12_g2.csv"), _fig12),
    "fig13": FigureSpec(("fig13_incoherent.csv", "fig13_coherent.csv"), _fig13),
}


def render(job: PlotJob):
    """Render one job; returns the output path.

    Raises RenderError before anything is written if the figure name,
    output format, or any input bundle is unusable.
    """
    if job.figure not in REGISTRY:
        known = ", ".join(sorted(REGISTRY))
        raise RenderError(f"unknown figure {job.figure!r}; known figures: {known}")
    spec = REGISTRY[job.figure]
    suffix = job.output.suffix.lower()
    if suffix not in SAVE_FORMATS:
        raise RenderError(f"output must end in .svg or .png, got {job.output.name!r}")
    by_name = {p.name: p for p in job.inputs}
    tables: dict[str, Table] = {}
    for name in spec.files:
        if name not in by_name:
            raise RenderError(f"figure {job.figure!r} needs {name}; not among the inputs")
        tables[name] = read_table(by_name[name])
    with matplotlib.rc_context(_RC):
        fig = spec.build(job, tables)
        try:
            metadata = {"Date": None} if suffix == ".svg" else None
            fig.savefig(job.output, format=suffix[1:], dpi=job.dpi, metadata=metadata)
        finally:
            plt.close(fig)
    return job.output
