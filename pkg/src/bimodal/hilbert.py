"""Truncated joint Hilbert space of one three-level atom and two cavity modes.

The joint basis is |level, n1, n2> with levels ordered a, b, c and the flat
index fixed to

    index = level * (F1 * F2) + n1 * F2 + n2

where F_i is the number of Fock states kept for mode i (n_i = 0 .. F_i - 1).
Every serialized matrix and every vectorized density matrix in the package
relies on this layout, so it must not change.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionMismatchError


class AtomicLevel(IntEnum):
    """Atomic levels of the V system; ``a`` is the ground level (energy 0)."""

    a = 0
    b = 1
    c = 2


@dataclass(frozen=True)
class BasisState:
    level: AtomicLevel
    n1: int
    n2: int


@dataclass(frozen=True)
class HilbertSpace:
    """Joint space with F_i Fock states per mode; dim = 3 * F1 * F2."""

    fock_states_1: int
    fock_states_2: int

    @property
    def dim(self) -> int:
        return 3 * self.fock_states_1 * self.fock_states_2

    @property
    def field_dim(self) -> int:
        """Dimension of the two-mode field space after tracing the atom."""
        return self.fock_states_1 * self.fock_states_2

    def index(self, state: BasisState) -> int:
        if not (0 <= state.n1 < self.fock_states_1):
            raise ConfigError(f"n1={state.n1} outside 0..{self.fock_states_1 - 1}")
        if not (0 <= state.n2 < self.fock_states_2):
            raise ConfigError(f"n2={state.n2} outside 0..{self.fock_states_2 - 1}")
        return (int(state.level) * self.fock_states_1 + state.n1) * self.fock_states_2 + state.n2

    def state(self, index: int) -> BasisState:
        if not (0 <= index < self.dim):
            raise ConfigError(f"index {index} outside 0..{self.dim - 1}")
        index, n2 = divmod(index, self.fock_states_2)
        level, n1 = divmod(index, self.fock_states_1)
        return BasisState(AtomicLevel(level), n1, n2)

    def states(self) -> Iterator[BasisState]:
        """All basis states in flat-index order."""
        for i in range(self.dim):
            yield self.state(i)


def build_space(fock_states_1: int, fock_states_2: int) -> HilbertSpace:
    if fock_states_1 < 1 or fock_states_2 < 1:
        raise ConfigError(
            f"invalid truncation ({fock_states_1}, {fock_states_2}): need at least one Fock state per mode"
        )
    return HilbertSpace(int(fock_states_1), int(fock_states_2))


@dataclass(frozen=True)
class SparseOperator:
    """Sparse complex matrix on the joint space, canonical CSR storage.

    Canonical means: sorted indices, duplicates summed, no stored zeros.
    Instances are treated as immutable after construction and are safe to
    share across threads.
    """

    dim: int
    mat: sp.csr_matrix

    @staticmethod
    def from_csr(dim: int, mat: sp.spmatrix) -> "SparseOperator":
        m = sp.csr_matrix(mat, dtype=np.complex128, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return SparseOperator(dim, m)

    @staticmethod
    def from_entries(dim, rows, cols, vals) -> "SparseOperator":
        m = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=np.complex128)
        return SparseOperator.from_csr(dim, m.tocsr())

    @property
    def nnz(self) -> int:
        return self.mat.nnz

    def entries(self) -> Iterator[tuple[int, int, complex]]:
        """Stored nonzeros in row-major order."""
        coo = self.mat.tocoo()
        for r, c, v in zip(coo.row, coo.col, coo.data):
            yield int(r), int(c), complex(v)

    def to_dense(self) -> np.ndarray:
        return self.mat.toarray()


def _check_dims(a: SparseOperator, b: SparseOperator) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"operator dims differ: {a.dim} vs {b.dim}")


def add(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    _check_dims(a, b)
    return SparseOperator.from_csr(a.dim, a.mat + b.mat)


def scale(a: SparseOperator, z: complex) -> SparseOperator:
    return SparseOperator.from_csr(a.dim, a.mat * z)


def mul(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    _check_dims(a, b)
    return SparseOperator.from_csr(a.dim, a.mat @ b.mat)


def adjoint(a: SparseOperator) -> SparseOperator:
    return SparseOperator.from_csr(a.dim, a.mat.conjugate().transpose())


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    _check_dims(a, b)
    return SparseOperator.from_csr(a.dim, a.mat @ b.mat - b.mat @ a.mat)


def identity_op(space: HilbertSpace) -> SparseOperator:
    return SparseOperator.from_csr(space.dim, sp.identity(space.dim, dtype=np.complex128, format="csr"))


def annihilation_op(space: HilbertSpace, mode: int) -> SparseOperator:
    """Mode annihilation operator: <.., n-1, ..|a_mode|.., n, ..> = sqrt(n)."""
    if mode not in (1, 2):
        raise ConfigError(f"invalid mode {mode}: must be 1 or 2")
    rows, cols, vals = [], [], []
    for src in space.states():
        n = src.n1 if mode == 1 else src.n2
        if n == 0:
            continue
        if mode == 1:
            dst = BasisState(src.level, src.n1 - 1, src.n2)
        else:
            dst = BasisState(src.level, src.n1, src.n2 - 1)
        rows.append(space.index(dst))
        cols.append(space.index(src))
        vals.append(np.sqrt(n))
    return SparseOperator.from_entries(space.dim, rows, cols, vals)


def atomic_lowering_op(space: HilbertSpace, j: int) -> SparseOperator:
    """sigma_1 = |a><b|, sigma_2 = |a><c|, identity on both photon numbers."""
    if j not in (1, 2):
        raise ConfigError(f"invalid transition index {j}: must be 1 or 2")
    upper = AtomicLevel.b if j == 1 else AtomicLevel.c
    rows, cols, vals = [], [], []
    for src in space.states():
        if src.level != upper:
            continue
        dst = BasisState(AtomicLevel.a, src.n1, src.n2)
        rows.append(space.index(dst))
        cols.append(space.index(src))
        vals.append(1.0)
    return SparseOperator.from_entries(space.dim, rows, cols, vals)


def level_projector(space: HilbertSpace, level: AtomicLevel) -> SparseOperator:
    idx = [space.index(s) for s in space.states() if s.level == level]
    return SparseOperator.from_entries(space.dim, idx, idx, np.ones(len(idx)))


def number_op(space: HilbertSpace, mode: int) -> SparseOperator:
    """a_mode^dag a_mode, diagonal with the basis-state photon number."""
    if mode not in (1, 2):
        raise ConfigError(f"invalid mode {mode}: must be 1 or 2")
    diag = np.array([s.n1 if mode == 1 else s.n2 for s in space.states()], dtype=float)
    idx = np.arange(space.dim)
    return SparseOperator.from_entries(space.dim, idx, idx, diag)


def dump_operator(op: SparseOperator, path) -> None:
    """Text dump for cross-checks: header "dim nnz", then "row col re im"."""
    with open(path, "w") as f:
        f.write(f"{op.dim} {op.nnz}\n")
        for r, c, v in op.entries():
            f.write(f"{r} {c} {v.real!r} {v.imag!r}\n")


def load_operator(path) -> SparseOperator:
    with open(path) as f:
        dim, nnz = (int(tok) for tok in f.readline().split())
        rows, cols, vals = [], [], []
        for _ in range(nnz):
            r, c, re, im = f.readline().split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(complex(float(re), float(im)))
    return SparseOperator.from_entries(dim, rows, cols, vals)
