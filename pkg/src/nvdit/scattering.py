"""Frequency-domain scattering of a weak drive off the cavity-coupled NV.

For each ground spin the linearized Langevin equations close on the set
(c+, c-, e_1..e_6): the two circularly polarized cavity modes and the six
excited-state coherences |g_s><M_i|.  In a frame rotating at the drive the
steady state solves

    (H_eff - Delta) x = i sqrt(kappa_a) * alpha * e_c

with H_eff the non-Hermitian single-excitation Hamiltonian.  Output fields
follow from the input-output relation, a_out = a_in + sqrt(kappa_a) c.

Conventions: the cavity is resonant with the M4 <-> m_s=0 line; Delta is
the drive frequency minus the cavity frequency.  The excited coherence
couples to the cavity with amplitude G = g / sqrt(2) so that a single
resonant two-level emitter reflects with probability 4C^2/(2C+1)^2 for
C = g^2 / (2 kappa gamma).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .structure import GroundLevels, LevelTable, optical_detunings
from .units import TWO_PI, ghz, mhz, to_ghz

SPINS = (1, 0, -1)
VALIDITY_GHZ = 20.0


class ScatteringError(RuntimeError):
    """Singular or non-finite linear system."""


@dataclass(frozen=True)
class CavityParams:
    """Cavity and coupling rates, all in rad/ns.

    ``g`` is the vacuum-Rabi coupling in the cooperativity convention
    C = g^2 / (2 kappa gamma_target).  ``retained_fraction`` scales g^2 in
    the linear system; leave it at 1 when C is already an effective
    (elastic) cooperativity.
    """

    kappa_a: float = mhz(25.0)
    kappa_b: float = mhz(25.0)
    g: float = 0.0
    gamma_target: float = 1.0 / (2 * 12.1)
    retained_fraction: float = 1.0
    elastic_fraction: float = 0.04

    def __post_init__(self):
        if not (self.kappa_a > 0 and self.kappa_b > 0):
            raise ValueError("mirror decay rates must be positive")
        if self.g < 0 or not np.isfinite(self.g):
            raise ValueError("coupling g must be finite and non-negative")
        if not self.gamma_target > 0:
            raise ValueError("gamma_target must be positive")
        if not 0.0 <= self.retained_fraction <= 1.0:
            raise ValueError("retained_fraction must lie in [0, 1]")

    @property
    def kappa(self) -> float:
        return self.kappa_a + self.kappa_b

    @property
    def cooperativity(self) -> float:
        return self.g**2 / (2 * self.kappa * self.gamma_target)

    @property
    def coupling(self) -> float:
        """Amplitude entering the linear system."""
        return self.g * np.sqrt(self.retained_fraction / 2.0)

    @classmethod
    def from_cooperativity(cls, cooperativity: float, table: LevelTable | None = None, *,
                           kappa_mhz: float = 50.0, ref_level: int = 3, gamma_target: float | None = None,
                           kappa_ratio: float = 0.5, **kw) -> "CavityParams":
        if cooperativity < 0:
            raise ValueError("cooperativity must be non-negative")
        if gamma_target is None:
            gamma_target = float(table.gamma[ref_level]) if table is not None else 1.0 / (2 * 12.1)
        kappa = mhz(kappa_mhz)
        g = np.sqrt(2 * kappa * gamma_target * cooperativity)
        return cls(kappa_a=kappa * kappa_ratio, kappa_b=kappa * (1 - kappa_ratio), g=g,
                   gamma_target=gamma_target, **kw)


@dataclass(frozen=True)
class DrivingConfig:
    polarization: str = "+"
    detuning: float = 0.0  # GHz, drive minus cavity
    amplitude: float = 1.0

    def __post_init__(self):
        if self.polarization not in ("+", "-"):
            raise ValueError("polarization must be '+' or '-'")
        if not np.isfinite(self.detuning):
            raise ValueError("detuning must be finite")


@dataclass(frozen=True)
class SpinBlock:
    spin: int
    h_eff: np.ndarray  # (8, 8) complex, rad/ns, rows c+, c-, e_1..e_6
    gamma: np.ndarray
    ms_branch: np.ndarray

    @property
    def coupling_block(self) -> np.ndarray:
        return self.h_eff[:2, 2:]


@dataclass(frozen=True)
class ScatteringSystem:
    cavity: CavityParams
    blocks: dict = field(default_factory=dict)  # spin -> SpinBlock

    def block(self, spin: int) -> SpinBlock:
        try:
            return self.blocks[spin]
        except KeyError:
            raise KeyError(f"no scattering block for spin {spin}") from None


def build_coupling(cavity: CavityParams, table: LevelTable, ground: GroundLevels,
                   spins=SPINS, levels=None) -> ScatteringSystem:
    """Assemble the single-excitation equations for every ground spin.

    ``levels`` optionally restricts the excited states carried (0-based
    indices); the default keeps all six.
    """
    if table is None or ground is None:
        raise ValueError("level data missing")
    keep = np.arange(6) if levels is None else np.asarray(levels, dtype=int)
    gam = np.asarray(table.gamma)[keep]
    br = np.asarray(table.ms_branch)[keep]
    coupling = cavity.coupling
    blocks = {}
    for s in spins:
        det = ghz(optical_detunings(table, ground, s))[keep]
        u = table.amplitude("+", s)[keep]
        v = table.amplitude("-", s)[keep]
        n = 2 + len(keep)
        h = np.zeros((n, n), dtype=complex)
        h[0, 0] = h[1, 1] = -0.5j * cavity.kappa
        h[0, 2:] = coupling * u.conj()
        h[1, 2:] = coupling * v.conj()
        h[2:, 0] = coupling * u
        h[2:, 1] = coupling * v
        h[2:, 2:] = np.diag(det - 1j * gam)
        blocks[s] = SpinBlock(s, h, gam, br)
    return ScatteringSystem(cavity, blocks)


@dataclass(frozen=True)
class Amplitudes:
    r: complex
    t: complex
    cavity: np.ndarray  # (c+, c-)
    excitation: np.ndarray
    R: float
    T: float
    S_loss: float
    M_loss: float


def _probabilities(sol: np.ndarray, block: SpinBlock, cav: CavityParams, pol: str):
    drv, other = (0, 1) if pol == "+" else (1, 0)
    c = sol[..., drv]
    r = 1.0 + np.sqrt(cav.kappa_a) * c
    t = np.sqrt(cav.kappa_b) * c
    e2 = np.abs(sol[..., 2:]) ** 2
    rates = 2.0 * block.gamma
    m_loss = e2 @ (rates * block.ms_branch)
    s_loss = e2 @ (rates * (1.0 - block.ms_branch)) + cav.kappa * np.abs(sol[..., other]) ** 2
    return r, t, np.abs(r) ** 2, np.abs(t) ** 2, s_loss, m_loss


def _rhs(block: SpinBlock, cav: CavityParams, drive: DrivingConfig) -> np.ndarray:
    b = np.zeros(block.h_eff.shape[0], dtype=complex)
    b[0 if drive.polarization == "+" else 1] = 1j * np.sqrt(cav.kappa_a) * drive.amplitude
    return b


def _check_window(det_ghz):
    if np.any(np.abs(det_ghz) > VALIDITY_GHZ):
        raise ValueError(f"drive detuning outside the +-{VALIDITY_GHZ:g} GHz validity window")


def solve_scattering(system: ScatteringSystem, drive: DrivingConfig, spin: int = 0) -> Amplitudes:
    _check_window(drive.detuning)
    block = system.block(spin)
    a = block.h_eff - ghz(drive.detuning) * np.eye(block.h_eff.shape[0])
    try:
        sol = np.linalg.solve(a, _rhs(block, system.cavity, drive))
    except np.linalg.LinAlgError as exc:
        raise ScatteringError(f"singular scattering system at detuning {drive.detuning} GHz") from exc
    if not np.all(np.isfinite(sol)):
        raise ScatteringError("non-finite scattering solution")
    sol = sol / drive.amplitude if drive.amplitude else sol
    r, t, R, T, S, M = _probabilities(sol, block, system.cavity, drive.polarization)
    return Amplitudes(complex(r), complex(t), sol[:2], sol[2:], float(R), float(T), float(S), float(M))


@dataclass(frozen=True)
class ScatteringSpectrum:
    detuning: np.ndarray  # GHz
    spins: tuple
    r: dict
    t: dict
    R: dict
    T: dict
    S_loss: dict
    M_loss: dict

    def total(self, spin: int) -> np.ndarray:
        return self.R[spin] + self.T[spin] + self.S_loss[spin] + self.M_loss[spin]


def default_grid(kappa: float, span_ghz: float = 10.0, points: int = 4001, refine: int = 10) -> np.ndarray:
    """Uniform grid over +-span with a 10x denser patch within +-3 kappa of resonance."""
    coarse = np.linspace(-span_ghz, span_ghz, points)
    step = coarse[1] - coarse[0]
    half = 3.0 * to_ghz(kappa)
    fine = np.arange(-half, half + step / (2 * refine), step / refine)
    return np.unique(np.round(np.concatenate([coarse, fine]), 12))


def reflection_spectrum(system: ScatteringSystem, grid=None, spins=(0, 1),
                        polarization: str = "+") -> ScatteringSpectrum:
    grid = default_grid(system.cavity.kappa) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("detuning grid must be one-dimensional and strictly increasing")
    _check_window(grid)
    drive = DrivingConfig(polarization=polarization)
    out = {k: {} for k in ("r", "t", "R", "T", "S", "M")}
    for s in spins:
        block = system.block(s)
        try:
            sol = _kernels.solve_shifted(block.h_eff, _rhs(block, system.cavity, drive), ghz(grid).astype(complex))
        except np.linalg.LinAlgError as exc:
            raise ScatteringError("singular scattering system on the grid") from exc
        if not np.all(np.isfinite(sol)):
            raise ScatteringError("non-finite scattering solution on the grid")
        vals = _probabilities(sol, block, system.cavity, polarization)
        for key, val in zip(("r", "t", "R", "T", "S", "M"), vals):
            out[key][s] = val
    return ScatteringSpectrum(grid, tuple(spins), out["r"], out["t"], out["R"], out["T"], out["S"], out["M"])


def empty_cavity_reflection(cavity: CavityParams, detuning_ghz) -> np.ndarray:
    """|r|^2 of the bare cavity: the response seen while the NV is dark."""
    d = ghz(detuning_ghz)
    r = 1.0 - cavity.kappa_a / (cavity.kappa / 2 - 1j * d)
    return np.abs(r) ** 2


def operating_detuning(system: ScatteringSystem, spin: int = 1, polarization: str = "+") -> float:
    """Drive detuning (GHz) that minimizes the reflection of ``spin``.

    Off-resonant levels pull the bright-state transparency window slightly
    away from the bare cavity frequency; driving at the shifted minimum
    removes that residual reflection.
    """
    half = to_ghz(system.cavity.kappa) / 2

    def refl(d):
        return solve_scattering(system, DrivingConfig(polarization, d), spin).R

    res = minimize_scalar(refl, bounds=(-half, half), method="bounded", options={"xatol": 1e-9})
    return float(res.x)


# ---------------------------------------------------------------------------
# coupling from the emitter's radiative properties

HBAR = 1.054571817e-34
C_LIGHT = 299792458.0


def _check_positive(**vals):
    for k, v in vals.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive")


def coupling_from_decay(f: float, gamma_rad: float, rho_omega: float, omega: float) -> float:
    """g = sqrt(rho_omega pi^2 c^3 / (hbar omega^3) * gamma_rad / (2 pi) * f), SI inputs.

    ``f`` is the zero-phonon (elastic) fraction of the emission; it is the
    factor by which the elastic coupling is degraded, so a cooperativity
    obtained from this g is already the effective one.
    """
    if f == 0:
        return 0.0
    _check_positive(f=f, gamma_rad=gamma_rad, rho_omega=rho_omega, omega=omega)
    return float(np.sqrt(rho_omega * np.pi**2 * C_LIGHT**3 / (HBAR * omega**3) * gamma_rad / TWO_PI * f))


def density_for_coupling(g: float, f: float, gamma_rad: float, omega: float) -> float:
    """Inverse of :func:`coupling_from_decay`: the rho_omega giving coupling ``g``."""
    _check_positive(g=g, f=f, gamma_rad=gamma_rad, omega=omega)
    return float(g**2 * HBAR * omega**3 * TWO_PI / (np.pi**2 * C_LIGHT**3 * gamma_rad * f))
