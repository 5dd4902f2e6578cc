"""Steady-state scalar observables and scan tables.

ObservableRecord bundles everything a scan row needs: mean photon numbers,
atomic populations, equal-time second-order correlations and the photon
number distributions of both modes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, PhysicalityError, VacuumModeError
from .hilbert import HilbertSpace, SparseOperator, annihilation_op, number_op
from .model import Liouvillian, ModelParams, build_liouvillian
from .steady import SteadySolver, SteadyStateResult

VACUUM_FLOOR = 1e-12


def expectation(rho: np.ndarray, op: SparseOperator) -> complex:
    """Tr[O rho]; evaluated over the stored nonzeros of O only."""
    if rho.shape != (op.dim, op.dim):
        raise DimensionMismatchError(f"state {rho.shape} vs operator dim {op.dim}")
    return complex(op.mat.multiply(rho.T).sum())


def _mean_n(space: HilbertSpace, rho: np.ndarray, mode: int) -> float:
    return expectation(rho, number_op(space, mode)).real


def equal_time_g2(space: HilbertSpace, rho_ss: np.ndarray, i: int, j: int) -> float:
    """<a_i^dag a_j^dag a_j a_i> / (<n_i><n_j>); for i = j this is <n(n-1)>/<n>^2."""
    n_i = _mean_n(space, rho_ss, i)
    n_j = _mean_n(space, rho_ss, j)
    if n_i <= VACUUM_FLOOR or n_j <= VACUUM_FLOOR:
        raise VacuumModeError(
            f"g2_{i}{j} undefined: <n_{i}> = {n_i:.3e}, <n_{j}> = {n_j:.3e} (vacuum mode)"
        )
    a_i = annihilation_op(space, i).mat
    a_j = annihilation_op(space, j).mat
    fourth = (
        a_i.conjugate().transpose() @ a_j.conjugate().transpose() @ a_j @ a_i
    )
    val = complex(fourth.multiply(rho_ss.T).sum())
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise PhysicalityError(f"g2_{i}{j} has imaginary part {val.imag:.3e}")
    return val.real / (n_i * n_j)


def photon_distribution(space: HilbertSpace, rho: np.ndarray, mode: int) -> np.ndarray:
    """P(n) for one mode: diagonal of rho summed over atom and the other mode."""
    diag = np.real(np.diagonal(rho)).reshape(3, space.fock_states_1, space.fock_states_2)
    axis = (0, 2) if mode == 1 else (0, 1)
    return diag.sum(axis=axis)


@dataclass(frozen=True)
class ObservableRecord:
    nbar1: float
    nbar2: float
    p_a: float
    p_b: float
    p_c: float
    g2_11: float  # NaN when the mode is vacuum (correlation undefined)
    g2_22: float
    g2_12: float
    pn1: tuple[float, ...]
    pn2: tuple[float, ...]

    def validate(self) -> "ObservableRecord":
        if abs(self.p_a + self.p_b + self.p_c - 1.0) > 1e-10:
            raise PhysicalityError("atomic populations do not sum to 1")
        for nbar, pn in ((self.nbar1, self.pn1), (self.nbar2, self.pn2)):
            if abs(sum(pn) - 1.0) > 1e-10:
                raise PhysicalityError("photon distribution does not sum to 1")
            moment = sum(n * p for n, p in enumerate(pn))
            if abs(moment - nbar) > 1e-10:
                raise PhysicalityError("distribution first moment disagrees with nbar")
        return self

    @staticmethod
    def scalar_fields() -> tuple[str, ...]:
        return ("nbar1", "nbar2", "p_a", "p_b", "p_c", "g2_11", "g2_22", "g2_12")


def steady_observables(space: HilbertSpace, rho: np.ndarray) -> ObservableRecord:
    diag = np.real(np.diagonal(rho)).reshape(3, space.fock_states_1, space.fock_states_2)
    pops = diag.sum(axis=(1, 2))
    pn1 = photon_distribution(space, rho, 1)
    pn2 = photon_distribution(space, rho, 2)

    def g2_or_nan(i, j):
        try:
            return equal_time_g2(space, rho, i, j)
        except VacuumModeError:
            return float("nan")

    return ObservableRecord(
        nbar1=float(np.dot(np.arange(len(pn1)), pn1)),
        nbar2=float(np.dot(np.arange(len(pn2)), pn2)),
        p_a=float(pops[0]),
        p_b=float(pops[1]),
        p_c=float(pops[2]),
        g2_11=g2_or_nan(1, 1),
        g2_22=g2_or_nan(2, 2),
        g2_12=g2_or_nan(1, 2),
        pn1=tuple(float(p) for p in pn1),
        pn2=tuple(float(p) for p in pn2),
    ).validate()


@dataclass(frozen=True)
class ScanRow:
    params: ModelParams
    record: ObservableRecord | None
    result: SteadyStateResult | None
    status: str  # "ok" or "error: ..."


def scan_observables(
    params_grid,
    fock: tuple[int, int] = (6, 6),
    tol: float = 1e-10,
    solver: SteadySolver | None = None,
    keep_states: bool = False,
) -> list[ScanRow]:
    """One ObservableRecord per grid point, input order preserved.

    Individual solver failures are recorded in the row status instead of
    aborting the scan.
    """
    from .hilbert import build_space

    space = build_space(*fock)
    solver = solver if solver is not None else SteadySolver(tol=tol)
    rows: list[ScanRow] = []
    for params in params_grid:
        try:
            liouvillian = build_liouvillian(space, params)
            result = solver.solve(liouvillian)
            record = steady_observables(space, result.rho_ss)
            if not keep_states:
                result.rho_ss = np.empty(0)
            rows.append(ScanRow(params, record, result, "ok"))
        except Exception as exc:  # failures stay inline as flagged rows
            rows.append(ScanRow(params, None, None, f"error: {exc}"))
    return rows


def swap_modes(params: ModelParams) -> ModelParams:
    """Exchange every mode-1 and mode-2 parameter (symmetry-test helper)."""
    return params.replace(
        g1=params.g2, g2=params.g1,
        gamma1=params.gamma2, gamma2=params.gamma1,
        kappa1=params.kappa2, kappa2=params.kappa1,
        eta_ic1=params.eta_ic2, eta_ic2=params.eta_ic1,
        eta_c1=params.eta_c2, eta_c2=params.eta_c1,
        delta1=params.delta2, delta2=params.delta1,
        delta1L=params.delta2L, delta2L=params.delta1L,
    )
