"""Analytic dressed states of the coupled atom-cavity system.

Within the photon sector (n1, n2) the cavity-frame Hamiltonian closes on
span{|a,n1,n2>, |b,n1-1,n2>, |c,n1,n2-1>}.  At the two-photon resonance
delta1 = delta2 = delta the eigenvalues are

    E0 = -delta (dark branch, no ground-level component)
    E+- = -delta/2 +- sqrt(delta^2 + 4 (n1 g1^2 + n2 g2^2)) / 2

These serve as oracles for the numeric Hamiltonian and as predicted
feature locations for scans.  All closed forms are exact; unequal
detunings fall back to a direct 3x3 diagonalization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hilbert import AtomicLevel, BasisState
from .model import ModelParams

BRANCH_MINUS = "-"
BRANCH_ZERO = "0"
BRANCH_PLUS = "+"


@dataclass(frozen=True)
class PhotonSector:
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ConfigError(f"invalid sector ({self.n1}, {self.n2})")

    def bare_states(self) -> list[BasisState]:
        """Sector basis in (a, b, c) order; missing legs are skipped."""
        states = [BasisState(AtomicLevel.a, self.n1, self.n2)]
        if self.n1 >= 1:
            states.append(BasisState(AtomicLevel.b, self.n1 - 1, self.n2))
        if self.n2 >= 1:
            states.append(BasisState(AtomicLevel.c, self.n1, self.n2 - 1))
        return states


@dataclass(frozen=True)
class DressedState:
    sector: PhotonSector
    branch: str
    energy: float
    amplitudes: dict  # BasisState -> complex, unit norm

    def amplitude(self, state: BasisState) -> complex:
        return self.amplitudes.get(state, 0.0 + 0.0j)


def _coupling_norm(sector: PhotonSector, g1: float, g2: float) -> float:
    return float(np.sqrt(sector.n1 * g1**2 + sector.n2 * g2**2))


def dressed_energies(sector: PhotonSector, g1: float, g2: float, delta: float) -> dict[str, float]:
    """Branch -> energy at equal detunings (cavity frame).

    Sectors with one empty mode have no dark branch and return only the
    +- pair; sector (0, 0) is the bare ground state at energy zero.
    """
    if sector.n1 == 0 and sector.n2 == 0:
        return {BRANCH_ZERO: 0.0}
    n = _coupling_norm(sector, g1, g2)
    root = float(np.sqrt(delta**2 + 4 * n**2))
    pair = {BRANCH_MINUS: -delta / 2 - root / 2, BRANCH_PLUS: -delta / 2 + root / 2}
    if sector.n1 >= 1 and sector.n2 >= 1:
        return {BRANCH_MINUS: pair[BRANCH_MINUS], BRANCH_ZERO: -delta, BRANCH_PLUS: pair[BRANCH_PLUS]}
    return pair


def driven_sector_energies(
    sector: PhotonSector, g1: float, g2: float, delta: float, delta1L: float, delta2L: float
) -> dict[str, float]:
    """Laser-frame sector energies: cavity-frame values shifted by n . deltaL."""
    shift = sector.n1 * delta1L + sector.n2 * delta2L
    return {b: e + shift for b, e in dressed_energies(sector, g1, g2, delta).items()}


def _numeric_states(sector, g1, g2, delta, delta2) -> list[DressedState]:
    basis = sector.bare_states()
    dim = len(basis)
    h = np.zeros((dim, dim))
    col = {s.level: k for k, s in enumerate(basis)}
    if AtomicLevel.b in col:
        h[col[AtomicLevel.b], col[AtomicLevel.b]] = -delta
        h[0, col[AtomicLevel.b]] = h[col[AtomicLevel.b], 0] = g1 * np.sqrt(sector.n1)
    if AtomicLevel.c in col:
        h[col[AtomicLevel.c], col[AtomicLevel.c]] = -delta2
        h[0, col[AtomicLevel.c]] = h[col[AtomicLevel.c], 0] = g2 * np.sqrt(sector.n2)
    energies, vecs = np.linalg.eigh(h)
    order = np.argsort(energies)
    states = []
    if dim == 3:
        # the dark branch is the eigenvector with no ground-level component
        dark = int(np.argmin(np.abs(vecs[0, order])))
        labels = [None] * 3
        labels[dark] = BRANCH_ZERO
        rest = [k for k in range(3) if k != dark]
        labels[rest[0]], labels[rest[1]] = BRANCH_MINUS, BRANCH_PLUS
    else:
        labels = [BRANCH_MINUS, BRANCH_PLUS][:dim]
    for pos, k in enumerate(order):
        amps = {basis[m]: complex(vecs[m, k]) for m in range(dim)}
        states.append(DressedState(sector, labels[pos], float(energies[k]), amps))
    return states


def dressed_states(
    sector: PhotonSector,
    g1: float,
    g2: float,
    delta: float = 0.0,
    delta2: float | None = None,
) -> list[DressedState]:
    """Orthonormal dressed states of the sector, energy ascending.

    Closed forms are used at equal detunings; unequal detunings (delta2
    given) diagonalize the 3x3 block numerically.
    """
    if delta2 is not None and delta2 != delta:
        return _numeric_states(sector, g1, g2, delta, delta2)
    basis = sector.bare_states()
    if len(basis) == 1:
        return [DressedState(sector, BRANCH_ZERO, 0.0, {basis[0]: 1.0 + 0.0j})]
    n = _coupling_norm(sector, g1, g2)
    if n == 0.0:  # uncoupled sector, closed forms degenerate
        return _numeric_states(sector, g1, g2, delta, delta)
    energies = dressed_energies(sector, g1, g2, delta)
    bare_a = basis[0]
    weights = {}  # bright-superposition weights over the b/c legs
    if sector.n1 >= 1:
        weights[BasisState(AtomicLevel.b, sector.n1 - 1, sector.n2)] = g1 * np.sqrt(sector.n1) / n
    if sector.n2 >= 1:
        weights[BasisState(AtomicLevel.c, sector.n1, sector.n2 - 1)] = g2 * np.sqrt(sector.n2) / n

    states = []
    if len(basis) == 3:
        dark = {
            bare_a: 0.0 + 0.0j,
            BasisState(AtomicLevel.b, sector.n1 - 1, sector.n2): -g2 * np.sqrt(sector.n2) / n,
            BasisState(AtomicLevel.c, sector.n1, sector.n2 - 1): g1 * np.sqrt(sector.n1) / n,
        }
        states.append(DressedState(sector, BRANCH_ZERO, energies[BRANCH_ZERO], dark))
    for branch in (BRANCH_MINUS, BRANCH_PLUS):
        energy = energies[branch]
        # eigenvector of [[0, n], [n, -delta]] in the {a, bright} pair is
        # proportional to (1, energy/n)
        norm = float(np.sqrt(1.0 + (energy / n) ** 2))
        amp_a = 1.0 / norm
        amp_bright = (energy / n) / norm
        amps = {bare_a: complex(amp_a)}
        for bs, w in weights.items():
            amps[bs] = complex(amp_bright * w)
        states.append(DressedState(sector, branch, energy, amps))
    states.sort(key=lambda s: s.energy)
    return states


def drive_transition_amplitude(frm: DressedState, to: DressedState, eta_c: float) -> complex:
    """<to| eta_c (sigma1 + sigma2 + h.c.) |frm> from the amplitude vectors."""
    dn1 = to.sector.n1 - frm.sector.n1
    dn2 = to.sector.n2 - frm.sector.n2
    if abs(dn1) + abs(dn2) != 1:
        raise ConfigError(
            f"drive connects sectors differing by one excitation; got "
            f"({frm.sector.n1},{frm.sector.n2}) -> ({to.sector.n1},{to.sector.n2})"
        )
    total = 0.0 + 0.0j
    for bs, amp in frm.amplitudes.items():
        images = []
        if bs.level == AtomicLevel.a:
            images.append(BasisState(AtomicLevel.b, bs.n1, bs.n2))  # sigma1^dag
            images.append(BasisState(AtomicLevel.c, bs.n1, bs.n2))  # sigma2^dag
        elif bs.level == AtomicLevel.b:
            images.append(BasisState(AtomicLevel.a, bs.n1, bs.n2))  # sigma1
        else:
            images.append(BasisState(AtomicLevel.a, bs.n1, bs.n2))  # sigma2
        for img in images:
            total += np.conj(to.amplitude(img)) * amp
    return eta_c * total


def expected_scan_features(params: ModelParams) -> list[tuple[str, object]]:
    """Predicted resonance locations for annotating and testing scans."""
    g = max(params.g1, params.g2)
    gamma = 0.5 * (params.gamma1 + params.gamma2)
    kappa = 0.5 * (params.kappa1 + params.kappa2)
    return [
        ("one_photon_resonance_deltaL", g),
        ("two_photon_resonance_deltaL", g / np.sqrt(2.0)),
        ("three_photon_resonance_deltaL", g / np.sqrt(3.0)),
        ("mode1_intensity_peak_delta", (g / 2, -np.sqrt(2.0) * g)),
        ("mode1_intensity_peak_delta", (-g / 2, g)),
        ("mode2_intensity_peak_delta", (-np.sqrt(2.0) * g, g / 2)),
        ("mode2_intensity_peak_delta", (g, -g / 2)),
        ("intensity_linewidth", 2 * g + gamma + kappa),
        ("hbt_spectrum_dominant_omega", 2 * g),
        ("hbt_spectrum_secondary_omega", np.sqrt(2.0) * g),
    ]
