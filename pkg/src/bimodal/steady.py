"""Steady-state solvers for the Lindblad generator.

Two routes: a direct sparse linear solve with trace pinning, and time
marching (also the fallback when no explicit superoperator matrix fits the
memory budget).  Both certify the returned state: Hermitize, normalize the
trace, check positivity and the Liouvillian residual.

Trace pinning replaces the last row of the superoperator with the
vectorized trace functional and puts the matching unit entry on the right
hand side.  The row is scaled to the mean magnitude of the Liouvillian
diagonal so the pinned system stays well conditioned.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateSteadyStateError,
    NonConvergenceError,
    PhysicalityError,
)
from .hilbert import HilbertSpace
from .model import Liouvillian

POSITIVITY_FLOOR = -1e-8


@dataclass
class SteadyStateResult:
    rho_ss: np.ndarray
    residual: float
    method: str  # "linear_solve" or "time_marching"
    iterations: int
    min_eigenvalue: float
    trace_error: float  # |trace - 1| before normalization
    elapsed: float = 0.0

    def diagnostics(self) -> dict:
        return {
            "method": self.method,
            "residual": self.residual,
            "iterations": self.iterations,
            "min_eigenvalue": self.min_eigenvalue,
            "trace_error": self.trace_error,
            "elapsed_seconds": self.elapsed,
        }

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics(), sort_keys=True)


def ground_state_rho(space: HilbertSpace) -> np.ndarray:
    """|a,0,0><a,0,0|, the natural reset state of the pump cycle."""
    rho = np.zeros((space.dim, space.dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho


def trace_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    diff = rho_a - rho_b
    diff = 0.5 * (diff + diff.conjugate().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def _finalize(
    liouvillian: Liouvillian,
    rho_raw: np.ndarray,
    method: str,
    iterations: int,
    tol: float,
    elapsed: float,
) -> SteadyStateResult:
    """Hermitize + normalize, then run the physicality and residual gates."""
    trace = np.trace(rho_raw)
    if abs(trace) < 1e-12:
        raise NonConvergenceError(f"{method}: solution has vanishing trace", float("inf"))
    trace_error = abs(trace - 1.0)
    rho = 0.5 * (rho_raw + rho_raw.conjugate().T)
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(liouvillian.apply_rho(rho)))
    if residual > tol:
        raise NonConvergenceError(f"{method}: residual above tolerance {tol:.1e}", residual)
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < POSITIVITY_FLOOR:
        raise PhysicalityError(
            f"{method}: minimum eigenvalue {min_eig:.3e} below {POSITIVITY_FLOOR:.0e}; "
            "solver misconvergence, not physics"
        )
    return SteadyStateResult(
        rho_ss=rho,
        residual=residual,
        method=method,
        iterations=iterations,
        min_eigenvalue=min_eig,
        trace_error=float(trace_error),
        elapsed=elapsed,
    )


def _pinned_system(lmat: sp.spmatrix, d: int, pin_row: int | None = None):
    """Replace one row (default: the last) with the scaled trace functional."""
    n = d * d
    if pin_row is None:
        pin_row = n - 1
    weight = float(np.mean(np.abs(lmat.diagonal())))
    if weight == 0.0:
        weight = 1.0
    coo = lmat.tocoo()
    keep = coo.row != pin_row
    trace_cols = np.arange(d) * (d + 1)
    rows = np.concatenate([coo.row[keep], np.full(d, pin_row)])
    cols = np.concatenate([coo.col[keep], trace_cols])
    data = np.concatenate([coo.data[keep], np.full(d, weight, dtype=np.complex128)])
    a = sp.csc_matrix((data, (rows, cols)), shape=(n, n))
    b = np.zeros(n, dtype=np.complex128)
    b[pin_row] = weight
    return a, b


def _splu_options(liouvillian: Liouvillian) -> dict:
    # Coherent drives couple photon sectors and blow up LU fill under the
    # default COLAMD ordering; symmetric-mode minimum-degree keeps it sane.
    params = liouvillian.params
    if params.eta_c1 != 0 or params.eta_c2 != 0:
        return dict(
            permc_spec="MMD_AT_PLUS_A",
            options=dict(SymmetricMode=True, DiagPivotThresh=1e-3),
        )
    return dict(permc_spec="COLAMD")


def _linear_solve_raw(liouvillian: Liouvillian, pin_row: int | None = None):
    a, b = _pinned_system(liouvillian.matrix, liouvillian.hilbert_dim, pin_row)
    try:
        lu = spla.splu(a, **_splu_options(liouvillian))
    except RuntimeError as exc:
        if "singular" in str(exc).lower():
            # the trace pin removes exactly one null direction, so a singular
            # pinned system means the generator kernel is multi-dimensional
            raise DegenerateSteadyStateError(
                "trace-pinned system is singular; steady state is not unique"
            ) from exc
        raise
    x = lu.solve(b)
    # One step of iterative refinement mops up most of the factorization error.
    x = x + lu.solve(b - a @ x)
    return x, lu, a, b


def steady_state(
    liouvillian: Liouvillian,
    tol: float = 1e-10,
    check_uniqueness: bool = False,
) -> SteadyStateResult:
    """Steady state via the trace-pinned direct solve.

    Falls back to time marching when the explicit superoperator matrix was
    not assembled (memory budget).  check_uniqueness re-solves with a
    different pinned row and errors out if the two states disagree, which
    flags a degenerate (multi-dimensional) null space.
    """
    if liouvillian.matrix is None:
        return time_march_to_steady(liouvillian, tol=max(tol, 1e-9))
    t0 = time.perf_counter()
    d = liouvillian.hilbert_dim
    x, _, _, _ = _linear_solve_raw(liouvillian)
    rho = x.reshape((d, d), order="F")
    if check_uniqueness:
        x2, _, _, _ = _linear_solve_raw(liouvillian, pin_row=0)
        rho2 = x2.reshape((d, d), order="F")
        tr1, tr2 = np.trace(rho), np.trace(rho2)
        if abs(tr1) < 1e-12 or abs(tr2) < 1e-12:
            raise DegenerateSteadyStateError("trace-free null vector found; steady state ambiguous")
        dist = trace_distance(
            0.5 * (rho / tr1 + (rho / tr1).conjugate().T),
            0.5 * (rho2 / tr2 + (rho2 / tr2).conjugate().T),
        )
        if dist > 1e-6:
            raise DegenerateSteadyStateError(
                f"two pinned solves disagree (trace distance {dist:.3e}); "
                "null space is not one-dimensional"
            )
    return _finalize(
        liouvillian, rho, "linear_solve", iterations=2, tol=tol, elapsed=time.perf_counter() - t0
    )


class SteadySolver:
    """Direct solver with factorization reuse for scans.

    Consecutive scan points usually differ by small Hamiltonian shifts, so
    the previous LU factorization is an excellent preconditioner.  We try
    preconditioned GMRES first and only refactorize when it stalls.
    """

    def __init__(self, tol: float = 1e-10):
        self.tol = tol
        self._lu = None
        self._shape_key = None

    def solve(self, liouvillian: Liouvillian, check_uniqueness: bool = False) -> SteadyStateResult:
        if liouvillian.matrix is None:
            return time_march_to_steady(liouvillian, tol=max(self.tol, 1e-9))
        t0 = time.perf_counter()
        d = liouvillian.hilbert_dim
        a, b = _pinned_system(liouvillian.matrix, d)
        key = (d, liouvillian.params.frame)
        if self._lu is not None and self._shape_key == key:
            op = spla.LinearOperator(a.shape, matvec=self._lu.solve)
            x, info = spla.gmres(a, b, rtol=1e-13, atol=0.0, restart=60, maxiter=4, M=op)
            if info == 0:
                try:
                    return _finalize(
                        liouvillian, x.reshape((d, d), order="F"), "linear_solve",
                        iterations=2, tol=self.tol, elapsed=time.perf_counter() - t0,
                    )
                except NonConvergenceError:
                    pass  # stale preconditioner; fall through to refactorize
        lu = spla.splu(a, **_splu_options(liouvillian))
        x = lu.solve(b)
        x = x + lu.solve(b - a @ x)
        self._lu, self._shape_key = lu, key
        if check_uniqueness:
            # delegate: one-shot path carries the dual-pin logic
            return steady_state(liouvillian, tol=self.tol, check_uniqueness=True)
        return _finalize(
            liouvillian, x.reshape((d, d), order="F"), "linear_solve",
            iterations=2, tol=self.tol, elapsed=time.perf_counter() - t0,
        )


def time_march_to_steady(
    liouvillian: Liouvillian,
    rho0: np.ndarray | None = None,
    t_max: float = 600.0,
    tol: float = 1e-9,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    chunk_t: float = 20.0,
) -> SteadyStateResult:
    """March d rho/dt = L(rho) until the residual drops below tol.

    Integrates in chunks of chunk_t and polls the residual after each chunk;
    raises a timeout error carrying the best residual when t_max is reached
    first.  Works matrix-free when no explicit matrix is available.
    """
    t0 = time.perf_counter()
    d = liouvillian.hilbert_dim
    if rho0 is None:
        rho0 = ground_state_rho(liouvillian.space)
    if rho0.shape != (d, d):
        raise PhysicalityError(f"rho0 shape {rho0.shape} does not match dim {d}")
    y = np.asarray(rho0, dtype=np.complex128).flatten(order="F")

    if liouvillian.matrix is not None:
        mat = liouvillian.matrix

        def rhs(_t, v):
            return mat @ v
    else:

        def rhs(_t, v):
            return liouvillian.apply(v)

    nfev = 0
    t = 0.0
    residual = float(np.linalg.norm(rhs(0.0, y)))
    while residual > tol:
        if t >= t_max:
            raise NonConvergenceError(
                f"time_marching: still above tolerance {tol:.1e} at t = {t:.1f}", residual
            )
        step = min(chunk_t, t_max - t)
        sol = solve_ivp(
            rhs, (t, t + step), y, method="DOP853", rtol=rtol, atol=atol, dense_output=False
        )
        if not sol.success:
            raise NonConvergenceError(f"time_marching: integrator failed ({sol.message})", residual)
        y = sol.y[:, -1]
        nfev += int(sol.nfev)
        t += step
        residual = float(np.linalg.norm(rhs(0.0, y)))
    rho = y.reshape((d, d), order="F")
    return _finalize(
        liouvillian,
        rho,
        "time_marching",
        iterations=nfev,
        tol=max(tol * 10, 1e-8),
        elapsed=time.perf_counter() - t0,
    )
