"""Model parameters, Hamiltonian assembly and the Lindblad generator.

All rates and frequencies are in units of gamma_2.  Two rotating frames are
supported:

* ``cavity_frame``: H = -delta1 |b><b| - delta2 |c><c| + H_int, valid only
  without coherent drives.
* ``laser_frame``: H = Delta_b |b><b| + Delta_c |c><c| + delta1L n1
  + delta2L n2 + H_int + eta_c1 (sigma1 + sigma1^dag) + eta_c2 (...), where
  Delta_b = delta1L - delta1 and Delta_c = delta2L - delta2 are derived.

Detuning signs: delta1/delta2 place each cavity mode relative to its atomic
transition (positive = mode above the atom), so they enter the cavity-frame
diagonal with a minus sign on the atomic projectors.  delta1L/delta2L place
the cavity modes relative to the drive lasers and multiply the photon-number
operators.  Note the undriven steady state is invariant under negating both
delta1 and delta2 at once, so intensity structure on the detuning plane
always comes in point-symmetric pairs.

H_int = g1 (a1 sigma1^dag + a1^dag sigma1) + g2 (a2 sigma2^dag + a2^dag sigma2).

Dissipator convention: each channel (rate, X) contributes the standard
Lindblad term rate * (X rho X^dag - {X^dag X, rho} / 2).  This equals the
rate/2 * (2 X rho X^dag - {X^dag X, rho}) form, so a cavity channel
(kappa, a) damps the mean photon number at rate kappa exactly.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionMismatchError
from .hilbert import (
    AtomicLevel,
    HilbertSpace,
    SparseOperator,
    adjoint,
    annihilation_op,
    atomic_lowering_op,
    level_projector,
    number_op,
)

FRAME_CAVITY = "cavity_frame"
FRAME_LASER = "laser_frame"

# Explicit superoperator matrices are only assembled while d^2 stays below
# this entry count; beyond it only the matrix-free action is offered.
MEMORY_BUDGET = 2**24


@dataclass(frozen=True)
class ModelParams:
    """All model rates/detunings in gamma_2 units.

    Defaults are the workhorse incoherent-pumping set (g = 10, kappa = 1,
    gamma1 = 1, eta_ic = 2, all detunings zero, no drives).
    """

    g1: float = 10.0
    g2: float = 10.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    eta_ic1: float = 2.0
    eta_ic2: float = 2.0
    eta_c1: float = 0.0
    eta_c2: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    delta1L: float = 0.0
    delta2L: float = 0.0
    frame: str = FRAME_CAVITY

    # Mode-vs-atom plus mode-vs-laser detunings fix the atom-vs-laser ones.
    @property
    def delta_b(self) -> float:
        return self.delta1L - self.delta1

    @property
    def delta_c(self) -> float:
        return self.delta2L - self.delta2

    def validate(self) -> "ModelParams":
        for name in ("gamma1", "gamma2", "kappa1", "kappa2", "eta_ic1", "eta_ic2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"rate {name} must be >= 0, got {getattr(self, name)}")
        if self.frame not in (FRAME_CAVITY, FRAME_LASER):
            raise ConfigError(f"unknown frame {self.frame!r}")
        if self.frame == FRAME_CAVITY and (self.eta_c1 != 0 or self.eta_c2 != 0):
            raise ConfigError("coherent drives require frame = laser_frame")
        return self

    def replace(self, **kw) -> "ModelParams":
        return dataclasses.replace(self, **kw).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(ModelParams))

    @staticmethod
    def from_mapping(mapping: Mapping, base: "ModelParams | None" = None) -> "ModelParams":
        params = base if base is not None else ModelParams()
        known = set(ModelParams.field_names())
        updates = {}
        for key, value in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown parameter {key!r}")
            if key == "frame":
                updates[key] = str(value)
            else:
                try:
                    updates[key] = float(value)
                except (TypeError, ValueError):
                    raise ConfigError(f"parameter {key!r} needs a number, got {value!r}") from None
        return dataclasses.replace(params, **updates).validate()


def load_params(path, base: ModelParams | None = None) -> ModelParams:
    """Read flat ModelParams keys from a JSON config file.

    Non-parameter keys (e.g. a sweep section) are ignored here; a top-level
    "params" object is merged if present.
    """
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    known = set(ModelParams.field_names())
    flat = {k: v for k, v in doc.items() if k in known}
    nested = doc.get("params", {})
    if not isinstance(nested, dict):
        raise ConfigError(f"config {path}: 'params' must be an object")
    flat.update(nested)
    return ModelParams.from_mapping(flat, base=base)


def build_hamiltonian(space: HilbertSpace, params: ModelParams) -> SparseOperator:
    params.validate()
    a1 = annihilation_op(space, 1)
    a2 = annihilation_op(space, 2)
    s1 = atomic_lowering_op(space, 1)
    s2 = atomic_lowering_op(space, 2)
    pb = level_projector(space, AtomicLevel.b)
    pc = level_projector(space, AtomicLevel.c)

    # a_i sigma_i^dag removes a photon and raises the atom; add h.c. explicitly
    # so the assembled matrix is Hermitian to the last bit.
    half_int = params.g1 * (a1.mat @ s1.mat.conjugate().transpose()) + params.g2 * (
        a2.mat @ s2.mat.conjugate().transpose()
    )
    h = half_int + half_int.conjugate().transpose()

    if params.frame == FRAME_CAVITY:
        h = h - params.delta1 * pb.mat - params.delta2 * pc.mat
    else:
        n1 = number_op(space, 1)
        n2 = number_op(space, 2)
        h = (
            h
            + params.delta_b * pb.mat
            + params.delta_c * pc.mat
            + params.delta1L * n1.mat
            + params.delta2L * n2.mat
        )
        half_drive = params.eta_c1 * s1.mat + params.eta_c2 * s2.mat
        h = h + half_drive + half_drive.conjugate().transpose()
    return SparseOperator.from_csr(space.dim, h)


def build_dissipators(space: HilbertSpace, params: ModelParams) -> list[tuple[float, SparseOperator]]:
    """The six Lindblad channels; zero-rate channels are dropped."""
    params.validate()
    a1 = annihilation_op(space, 1)
    a2 = annihilation_op(space, 2)
    s1 = atomic_lowering_op(space, 1)
    s2 = atomic_lowering_op(space, 2)
    channels = [
        (params.kappa1, a1),
        (params.kappa2, a2),
        (params.gamma1, s1),
        (params.gamma2, s2),
        (params.eta_ic1, adjoint(s1)),
        (params.eta_ic2, adjoint(s2)),
    ]
    return [(rate, op) for rate, op in channels if rate != 0.0]


@dataclass(frozen=True)
class Liouvillian:
    """Lindblad generator: explicit sparse matrix plus a matrix-free action.

    ``matrix`` acts on column-stacked vec(rho); it is None when d^2 exceeds
    the memory budget, in which case only ``apply`` is available.  Immutable
    after assembly; ``apply`` is reentrant.
    """

    space: HilbertSpace
    params: ModelParams
    hamiltonian: SparseOperator
    channels: tuple[tuple[float, SparseOperator], ...]
    matrix: sp.csr_matrix | None
    _apply_ops: tuple = ()

    @property
    def hilbert_dim(self) -> int:
        return self.space.dim

    @property
    def dim(self) -> int:
        return self.space.dim**2

    def apply_rho(self, rho: np.ndarray) -> np.ndarray:
        """L(rho) for a dense d x d operator (need not be a state).

        Only sparse @ dense products are used; right multiplication by an
        operator M is written as (M^dag rho^dag)^dag.
        """
        d = self.hilbert_dim
        rho = np.asarray(rho, dtype=np.complex128)
        if rho.shape != (d, d):
            raise DimensionMismatchError(f"expected {(d, d)} operator, got {rho.shape}")
        h = self.hamiltonian.mat
        rho_dag = rho.conjugate().T
        out = -1j * (h @ rho - (h @ rho_dag).conjugate().T)
        for rate, x, xdx in self._apply_ops:
            x_rho = x @ rho
            out += rate * ((x @ x_rho.conjugate().T).conjugate().T)
            out -= (0.5 * rate) * (xdx @ rho + (xdx @ rho_dag).conjugate().T)
        return out

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Matrix-free action on column-stacked vec(rho)."""
        d = self.hilbert_dim
        rho = np.asarray(vec, dtype=np.complex128).reshape((d, d), order="F")
        return self.apply_rho(rho).flatten(order="F")


def _superoperator_matrix(h: sp.spmatrix, channels, d: int) -> sp.csr_matrix:
    ident = sp.identity(d, dtype=np.complex128, format="csr")
    lmat = -1j * (sp.kron(ident, h, format="csr") - sp.kron(h.T, ident, format="csr"))
    for rate, op in channels:
        x = op.mat
        xdx = (x.conjugate().transpose() @ x).tocsr()
        lmat = lmat + rate * (
            sp.kron(x.conjugate(), x, format="csr")
            - 0.5 * sp.kron(ident, xdx, format="csr")
            - 0.5 * sp.kron(xdx.T, ident, format="csr")
        )
    lmat = lmat.tocsr()
    lmat.sum_duplicates()
    lmat.eliminate_zeros()
    lmat.sort_indices()
    return lmat


def build_liouvillian(
    space: HilbertSpace, params: ModelParams, memory_budget: int = MEMORY_BUDGET
) -> Liouvillian:
    params.validate()
    h = build_hamiltonian(space, params)
    channels = tuple(build_dissipators(space, params))
    d = space.dim
    matrix = _superoperator_matrix(h.mat, channels, d) if d * d <= memory_budget else None
    apply_ops = tuple(
        (rate, op.mat, (op.mat.conjugate().transpose() @ op.mat).tocsr()) for rate, op in channels
    )
    return Liouvillian(
        space=space,
        params=params,
        hamiltonian=h,
        channels=channels,
        matrix=matrix,
        _apply_ops=apply_ops,
    )
