"""Propagation under the Liouvillian and two-time HBT correlations.

g2_ij(tau) is computed by the quantum regression route: propagate the
operator a_i rho_ss a_i^dag under exp(L tau) and trace against a_j^dag a_j,
normalizing by <n_i><n_j>.  The HBT spectrum F_ij(omega) is the cosine
transform of g2_ij(tau) - g_inf, i.e. the Fourier transform under the even
extension g(-tau) = g(tau).  That extension is exact for intra-mode
stationary correlations and is adopted uniformly for the inter-mode pair as
the symmetric reading; peak heights (not positions) may differ from an
asymmetric convention by a constant factor.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigError, PhysicalityError, StiffnessError, VacuumModeError
from .hilbert import annihilation_op, number_op
from .model import Liouvillian, ModelParams

# Samples whose imaginary residue exceeds this (after normalization) are a
# sign of a broken regression pipeline, not round-off.
IMAG_RESIDUE_TOL = 1e-10


@dataclass(frozen=True)
class TauGrid:
    """Uniform delay grid tau in [0, t_max], in 1/gamma_2 units."""

    t_max: float
    n_points: int = 2048

    def __post_init__(self):
        if self.n_points < 2:
            raise ConfigError(f"TauGrid needs n_points >= 2, got {self.n_points}")
        if not (self.t_max > 0):
            raise ConfigError(f"TauGrid needs t_max > 0, got {self.t_max}")

    @property
    def taus(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)

    @property
    def spacing(self) -> float:
        return self.t_max / (self.n_points - 1)


def decay_rate(params: ModelParams) -> float:
    """Correlation decay scale kappa + gamma (mode averages)."""
    return 0.5 * (params.kappa1 + params.kappa2) + 0.5 * (params.gamma1 + params.gamma2)


def default_tau_grid(params: ModelParams, n_points: int = 2048) -> TauGrid:
    """t_max = 20/(kappa+gamma): two decades of the correlation decay time."""
    return TauGrid(20.0 / decay_rate(params), n_points)


@dataclass(frozen=True)
class CorrelationSeries:
    i: int
    j: int
    taus: np.ndarray
    g2: np.ndarray
    g_inf: float
    params: ModelParams
    fock: tuple[int, int]
    max_imag: float
    omega: np.ndarray | None = None
    spectrum: np.ndarray | None = None

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)

    @property
    def t_max(self) -> float:
        return float(self.taus[-1])


def _rhs(liouvillian: Liouvillian):
    if liouvillian.matrix is not None:
        mat = liouvillian.matrix

        def rhs(_t, v):
            return mat @ v
    else:

        def rhs(_t, v):
            return liouvillian.apply(v)

    return rhs


def propagate(
    liouvillian: Liouvillian,
    rho0: np.ndarray,
    t: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """exp(L t) applied to a Hermitian operator (states or regression seeds)."""
    if t < 0:
        raise ConfigError(f"propagation time must be >= 0, got {t}")
    d = liouvillian.hilbert_dim
    y0 = np.asarray(rho0, dtype=np.complex128).reshape((d, d)).flatten(order="F")
    if t == 0.0:
        return y0.reshape((d, d), order="F")
    sol = solve_ivp(_rhs(liouvillian), (0.0, t), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise StiffnessError(f"propagation failed: {sol.message}")
    return sol.y[:, -1].reshape((d, d), order="F")


def _observable_series(
    liouvillian: Liouvillian,
    rho0: np.ndarray,
    taus: np.ndarray,
    weight_vecs: list[np.ndarray],
    rtol: float,
    atol: float,
    block: int = 128,
) -> np.ndarray:
    """Tr[O_k rho(tau)] for each weight vector vec(O_k^T), one integration.

    The grid is consumed in blocks so the dense solution snapshot never
    holds more than `block` columns.
    """
    d = liouvillian.hilbert_dim
    rhs = _rhs(liouvillian)
    y = np.asarray(rho0, dtype=np.complex128).reshape((d, d)).flatten(order="F")
    out = np.empty((len(weight_vecs), len(taus)), dtype=np.complex128)
    w = np.vstack(weight_vecs)
    pos = 0
    t_now = taus[0]
    if t_now != 0.0:
        raise ConfigError("correlation grids must start at tau = 0")
    while pos < len(taus):
        chunk = taus[pos : pos + block]
        if pos == 0 and len(chunk) == 1:
            out[:, 0] = w @ y
            pos += 1
            continue
        sol = solve_ivp(
            rhs,
            (t_now, chunk[-1]),
            y,
            method="DOP853",
            t_eval=chunk,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise StiffnessError(f"correlation propagation failed: {sol.message}")
        out[:, pos : pos + len(chunk)] = w @ sol.y
        y = sol.y[:, -1]
        t_now = chunk[-1]
        pos += len(chunk)
    return out


def _trace_weight(op_mat) -> np.ndarray:
    """vec(O^T) as a dense row so that Tr[O rho] = w . vec(rho)."""
    return op_mat.T.toarray().astype(np.complex128).flatten(order="F")


def g2_bundle(
    liouvillian: Liouvillian,
    rho_ss: np.ndarray,
    i: int,
    js: tuple[int, ...],
    grid: TauGrid | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> dict[int, CorrelationSeries]:
    """Correlation series sharing one regression propagation (fixed source i)."""
    params = liouvillian.params
    space = liouvillian.space
    if grid is None:
        grid = default_tau_grid(params)
    a_i = annihilation_op(space, i)
    nums = {k: number_op(space, k) for k in (1, 2)}
    nbars = {}
    for k in (1, 2):
        val = complex(nums[k].mat.multiply(rho_ss.T).sum()).real
        nbars[k] = val
    for k in {i, *js}:
        if nbars[k] <= 1e-12:
            raise VacuumModeError(
                f"mode {k} has <n> = {nbars[k]:.3e} <= 1e-12: g2 undefined (0/0)"
            )
    x = a_i.mat
    seed = (x @ (x @ rho_ss).conjugate().T).conjugate().T  # a_i rho a_i^dag
    weights = [_trace_weight(nums[j].mat) for j in js]
    raw = _observable_series(liouvillian, seed, grid.taus, weights, rtol, atol)
    out = {}
    for row, j in enumerate(js):
        norm = nbars[i] * nbars[j]
        samples = raw[row] / norm
        max_imag = float(np.max(np.abs(samples.imag)))
        if max_imag > IMAG_RESIDUE_TOL:
            raise PhysicalityError(
                f"g2_{i}{j} imaginary residue {max_imag:.3e} exceeds {IMAG_RESIDUE_TOL:.0e}"
            )
        g2 = samples.real
        tail = max(1, len(g2) // 10)
        out[j] = CorrelationSeries(
            i=i,
            j=j,
            taus=grid.taus,
            g2=g2,
            g_inf=float(np.mean(g2[-tail:])),
            params=params,
            fock=(space.fock_states_1, space.fock_states_2),
            max_imag=max_imag,
        )
    return out


def g2_correlation(
    liouvillian: Liouvillian,
    rho_ss: np.ndarray,
    i: int,
    j: int,
    grid: TauGrid | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> CorrelationSeries:
    """g2_ij(tau) on the grid (defaults to t_max = 20/(kappa+gamma), 2048 pts)."""
    if i not in (1, 2) or j not in (1, 2):
        raise ConfigError(f"correlation pair must be in {{1,2}}^2, got ({i},{j})")
    return g2_bundle(liouvillian, rho_ss, i, (j,), grid, rtol, atol)[j]


def default_omega_grid(series: CorrelationSeries) -> np.ndarray:
    """Symmetric grid with one spectral bin pi/t_max, covering +-3 g_max."""
    g = max(series.params.g1, series.params.g2, 1.0)
    bin_w = np.pi / series.t_max
    m = int(np.ceil(3.0 * g / bin_w))
    return bin_w * np.arange(-m, m + 1)


def hbt_spectrum(series: CorrelationSeries, omega_grid: np.ndarray | None = None) -> CorrelationSeries:
    """F_ij(omega) = 2 * integral_0^tmax (g2(tau) - g_inf) cos(omega tau) dtau."""
    min_tmax = 10.0 / decay_rate(series.params)
    if series.t_max < min_tmax * (1 - 1e-12):
        raise ConfigError(
            f"t_max = {series.t_max:.3g} too short for spectra: need >= {min_tmax:.3g} "
            "(10 correlation decay times)"
        )
    omega = default_omega_grid(series) if omega_grid is None else np.asarray(omega_grid, dtype=float)
    taus = series.taus
    centered = series.g2 - series.g_inf
    dt = series.taus[1] - series.taus[0]
    weights = np.full(len(taus), dt)
    weights[0] = weights[-1] = dt / 2
    cos_mat = np.cos(np.outer(omega, taus))
    spectrum = 2.0 * (cos_mat @ (centered * weights))
    return dataclasses.replace(series, omega=omega, spectrum=spectrum)


def fmt(value) -> str:
    """Shortest-round-trip decimal for CSV cells; bit-stable across runs."""
    if isinstance(value, str):
        return value
    return repr(float(value))


def _series_header(series: CorrelationSeries) -> list[str]:
    lines = []
    for key, value in sorted(series.params.to_dict().items()):
        lines.append(f"# {key} = {value if isinstance(value, str) else fmt(value)}")
    lines.append(f"# fock_states_1 = {series.fock[0]}")
    lines.append(f"# fock_states_2 = {series.fock[1]}")
    lines.append(f"# pair = {series.i}{series.j}")
    lines.append(f"# t_max = {fmt(series.t_max)}")
    lines.append(f"# n_points = {len(series.taus)}")
    lines.append(f"# g_inf = {fmt(series.g_inf)}")
    return lines


def write_correlation_csv(series: CorrelationSeries, path) -> None:
    with open(path, "w") as f:
        f.write("\n".join(_series_header(series)) + "\n")
        f.write("tau,g2\n")
        for tau, val in zip(series.taus, series.g2):
            f.write(f"{fmt(tau)},{fmt(val)}\n")


def write_spectrum_csv(series: CorrelationSeries, path) -> None:
    if series.spectrum is None:
        raise ConfigError("series has no spectrum; call hbt_spectrum first")
    with open(path, "w") as f:
        f.write("\n".join(_series_header(series)) + "\n")
        f.write("omega,F\n")
        for om, val in zip(series.omega, series.spectrum):
            f.write(f"{fmt(om)},{fmt(val)}\n")
