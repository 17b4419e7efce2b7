"""Weak coherent pulses: Lindblad evolution of the driven cavity + NV on a truncated Fock space.

State space: Fock(0..fock_max) x [g, e_1..e_k, ms], where g is the
initialized ground spin, e_i the excited levels it couples to with sigma+
light and ms a flag for metastable shelving.  In the frame rotating at the
drive frequency

    H = -Delta c^dag c + sum_i (delta_i - Delta) |e_i><e_i|
        + G sum_i (u_i |e_i><g| c + h.c.) + sqrt(kappa_a) alpha(t) (c + c^dag)

with collapse operators sqrt(kappa) c, sqrt(2 gamma_i (1 - b_i)) |g><e_i| and
sqrt(2 gamma_i b_i) |ms><e_i|.  The reflected photon number and the joint
excited-and-photon probability are integrated alongside rho.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .protocol import (SPINS, PulseChannels, ProtocolConfig, ReadoutModel, fidelity_curve,
                       FidelityCurve)
from .scattering import DrivingConfig, _probabilities, _rhs, empty_cavity_reflection
from .structure import optical_detunings
from .units import ghz
from . import _kernels


class IntegrationError(RuntimeError):
    pass


def auto_fock(mean_photons: float) -> int:
    return max(2, math.ceil(mean_photons + 5.0 * math.sqrt(mean_photons)))


@dataclass(frozen=True)
class CoherentConfig:
    mean_photons: float = 3.0
    tau_p: float = 165.0  # ns
    fock_max: int | None = None
    envelope: str = "flat"  # or "gaussian" (sigma_t = tau_p / 6, centred)
    tail: float = 60.0  # ns integrated after the pulse ends
    samples: int = 401
    rtol: float = 1e-10
    atol: float = 1e-16
    level_threshold: float = 1e-3  # smallest sigma+ amplitude of a carried level
    eliminate_above: float | None = 1.0  # GHz; farther-detuned levels are eliminated adiabatically

    def __post_init__(self):
        if not self.mean_photons >= 0:
            raise ValueError("mean_photons must be non-negative")
        if not self.tau_p > 0:
            raise ValueError("tau_p must be positive")
        if self.envelope not in ("flat", "gaussian"):
            raise ValueError("envelope must be 'flat' or 'gaussian'")
        if self.fock_max is not None and self.fock_max < auto_fock(self.mean_photons):
            raise ValueError(f"fock_max must be at least {auto_fock(self.mean_photons)} for "
                             f"mean_photons={self.mean_photons}")
        if self.tail < 0:
            raise ValueError("tail must be non-negative")

    @property
    def fock(self) -> int:
        return auto_fock(self.mean_photons) if self.fock_max is None else int(self.fock_max)

    def amplitude(self, t: float) -> float:
        """Real drive amplitude alpha(t) with |alpha(t)|^2 integrating to mean_photons."""
        if t < 0 or t >= self.tau_p:
            return 0.0
        if self.envelope == "flat":
            return math.sqrt(self.mean_photons / self.tau_p)
        s = self.tau_p / 6.0
        norm = math.erf(3.0 / math.sqrt(2.0))  # truncated at +-3 sigma
        dens = math.exp(-0.5 * ((t - self.tau_p / 2) / s) ** 2) / (math.sqrt(2 * math.pi) * s * norm)
        return math.sqrt(self.mean_photons * dens)


@dataclass(frozen=True)
class MasterEqState:
    rho: np.ndarray
    t: float
    fock: int
    levels: tuple  # labels of the NV factor

    def reduced_nv(self) -> np.ndarray:
        n = len(self.levels)
        r = self.rho.reshape(self.fock + 1, n, self.fock + 1, n)
        return np.einsum("aiaj->ij", r)

    def photon_distribution(self) -> np.ndarray:
        n = len(self.levels)
        r = self.rho.reshape(self.fock + 1, n, self.fock + 1, n)
        return np.real(np.einsum("aiai->a", r))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    populations: np.ndarray  # (samples, levels)
    cavity_occupation: np.ndarray
    photon_probability: np.ndarray  # P(n >= 1)
    joint: np.ndarray  # instantaneous P(excited and n >= 1)
    reflected: np.ndarray  # cumulative reflected photons
    joint_integral: np.ndarray  # cumulative time integral of joint, ns
    trace_error: float
    min_eigenvalue: float
    final: MasterEqState
    spin: int
    tau_p: float
    levels: tuple

    @property
    def reflected_photons(self) -> float:
        return float(self.reflected[-1])

    @property
    def ms_population(self) -> float:
        return float(self.populations[-1, -1])


def carried_levels(model: ReadoutModel, spin: int, threshold: float) -> np.ndarray:
    amps = model.table.amplitude("+", spin)
    return np.flatnonzero(np.abs(amps) > threshold)


@dataclass(frozen=True)
class Generator:
    """Tensor-structured Lindblad generator on Fock x [g, excited..., ms]."""

    hdiag: np.ndarray  # (F, L) diagonal of H_eff including -i/2 decay terms
    kcol: np.ndarray  # (L,) coupling |i><g| a with amplitude kcol[i], plus h.c.
    drive_scale: float  # sqrt(kappa_a): alpha(t) multiplies (a + a^dag)
    kappa: float
    jp: np.ndarray
    jq: np.ndarray
    jr: np.ndarray
    js: np.ndarray  # 1 when the jump also removes a cavity photon
    excited: np.ndarray  # NV indices of excited levels
    labels: tuple
    eliminated: tuple = ()

    @property
    def fock_dim(self) -> int:
        return self.hdiag.shape[0]

    @property
    def nv_dim(self) -> int:
        return self.hdiag.shape[1]

    def rhs(self, rho4: np.ndarray, alpha: float) -> np.ndarray:
        return _kernels.lindblad_rhs(rho4, self.hdiag, self.kcol, alpha * self.drive_scale,
                                     self.kappa, self.jp, self.jq, self.jr, self.js)

    def dense(self, alpha: float = 0.0) -> tuple[np.ndarray, list]:
        """Full H_eff (non-Hermitian) and jump operators as dense matrices."""
        nf, nl = self.fock_dim, self.nv_dim
        a = np.diag(np.sqrt(np.arange(1, nf)), 1).astype(complex)
        k = np.zeros((nl, nl), dtype=complex)
        k[:, 0] = self.kcol
        heff = np.diag(self.hdiag.ravel())
        heff = heff + np.kron(a, k) + np.kron(a.conj().T, k.conj().T)
        heff = heff + alpha * self.drive_scale * np.kron(a + a.conj().T, np.eye(nl))
        jumps = [np.sqrt(self.kappa) * np.kron(a, np.eye(nl))]
        for p, q, r, ph in zip(self.jp, self.jq, self.jr, self.js):
            op = np.zeros((nl, nl))
            op[p, q] = np.sqrt(r)
            jumps.append(np.kron(a if ph else np.eye(nf), op))
        return heff, jumps


def build_generator(model: ReadoutModel, spin: int, cfg: CoherentConfig, detuning: float | None = None,
                    levels=None, eliminate_above: float | None = -1.0) -> Generator:
    """Assemble the generator for ground spin ``spin``.

    Carried levels detuned from the drive by more than ``eliminate_above``
    GHz (default from ``cfg``; None keeps them all) are adiabatically
    eliminated: each adds a dispersive shift and a Purcell-type photon loss
    -G^2 |u|^2 / (delta - i gamma) to the cavity while the NV sits in g, with
    a fraction b of the absorbed photons shelving the NV.
    """
    detuning = model.detuning if detuning is None else detuning
    if eliminate_above is not None and eliminate_above < 0:
        eliminate_above = cfg.eliminate_above
    levels = carried_levels(model, spin, cfg.level_threshold) if levels is None else np.asarray(levels, dtype=int)
    table, cav = model.table, model.cavity
    dlt = ghz(detuning)
    det = ghz(optical_detunings(table, model.ground, spin)) - dlt
    amps = table.amplitude("+", spin)
    if eliminate_above is None:
        kept, gone = list(levels), []
    else:
        kept = [i for i in levels if abs(det[i]) <= ghz(eliminate_above)]
        gone = [i for i in levels if abs(det[i]) > ghz(eliminate_above)]
    k = len(kept)
    nl = k + 2  # g, excited..., ms
    nf = cfg.fock + 1
    m = np.arange(nf)
    hdiag = np.zeros((nf, nl), dtype=complex)
    hdiag += ((-dlt - 0.5j * cav.kappa) * m)[:, None]
    kcol = np.zeros(nl, dtype=complex)
    jp, jq, jr, js = [], [], [], []
    for j, lev in enumerate(kept):
        e = 1 + j
        gam, br = table.gamma[lev], table.ms_branch[lev]
        hdiag[:, e] += det[lev] - 1j * gam
        kcol[e] = cav.coupling * amps[lev]
        jp += [0, nl - 1]
        jq += [e, e]
        jr += [2 * gam * (1 - br), 2 * gam * br]
        js += [0, 0]
    for lev in gone:
        gam, br = table.gamma[lev], table.ms_branch[lev]
        g2 = cav.coupling**2 * abs(amps[lev]) ** 2
        chi = g2 / (det[lev] - 1j * gam)
        hdiag[:, 0] += -chi * m
        rate = 2 * g2 * gam / (det[lev] ** 2 + gam**2)
        jp += [0, nl - 1]
        jq += [0, 0]
        jr += [rate * (1 - br), rate * br]
        js += [1, 1]
    labels = ("g",) + tuple(table.labels[i] for i in kept) + ("ms",)
    return Generator(hdiag, kcol, float(np.sqrt(cav.kappa_a)), float(cav.kappa),
                     np.array(jp, dtype=np.int64), np.array(jq, dtype=np.int64), np.array(jr, dtype=float),
                     np.array(js, dtype=np.int64), np.arange(1, k + 1), labels,
                     tuple(table.labels[i] for i in gone))


def lindblad_evolve(cfg: CoherentConfig, model: ReadoutModel, spin: int = 0, detuning: float | None = None,
                    levels=None, eliminate_above: float | None = -1.0) -> Trajectory:
    """Evolve one pulse starting from |vacuum> x |g_spin>."""
    gen = build_generator(model, spin, cfg, detuning, levels, eliminate_above)
    nf, nl = gen.fock_dim, gen.nv_dim
    n = nf * nl
    shape = (nf, nl, nf, nl)
    sq = np.sqrt(np.arange(1, nf))
    occ_w = np.arange(nf, dtype=float)
    exc = np.zeros(nl)
    exc[gen.excited] = 1.0
    ka = gen.drive_scale**2

    def observables(rho4):
        pops = np.real(np.einsum("aiai->ai", rho4))  # (F, L)
        cm = np.sum(sq[:, None] * np.einsum("aiai->ai", rho4[1:, :, :-1, :]))  # trace(c rho)
        return pops, cm

    def rhs(t, y):
        rho4 = y[: n * n].reshape(shape)
        al = cfg.amplitude(t)
        d = gen.rhs(rho4, al)
        pops, cm = observables(rho4)
        nn = float(occ_w @ pops.sum(axis=1))
        flux = al * al + 2 * math.sqrt(ka) * al * cm.imag + ka * nn
        jt = float(np.sum(pops[1:, :] * exc))
        out = np.empty_like(y)
        out[: n * n] = d.ravel()
        out[n * n] = flux
        out[n * n + 1] = jt
        return out

    y0 = np.zeros(n * n + 2, dtype=complex)
    y0[0] = 1.0
    t_end = cfg.tau_p + cfg.tail
    t_eval = np.linspace(0.0, t_end, cfg.samples)
    segments = [(0.0, cfg.tau_p)] + ([(cfg.tau_p, t_end)] if cfg.tail > 0 else [])
    ys, ts = [], []
    for a, b in segments:
        te = np.unique(np.r_[a, t_eval[(t_eval > a) & (t_eval < b)], b])
        sol = solve_ivp(rhs, (a, b), y0, method="DOP853", rtol=cfg.rtol, atol=cfg.atol, t_eval=te)
        if not sol.success:
            raise IntegrationError(f"integrator failed: {sol.message}")
        ys.append(sol.y if not ys else sol.y[:, 1:])
        ts.append(sol.t if not ts else sol.t[1:])
        y0 = sol.y[:, -1]
    y = np.hstack(ys)
    times = np.concatenate(ts)

    pops_t, occ, pph, joint = [], [], [], []
    trace_err, min_eig = 0.0, 0.0
    for kk in range(y.shape[1]):
        rho = y[: n * n, kk].reshape(n, n)
        herm = np.max(np.abs(rho - rho.conj().T))
        trace_err = max(trace_err, abs(np.trace(rho) - 1.0))
        ev = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
        min_eig = min(min_eig, ev)
        if trace_err > 1e-8 or herm > 1e-8 or ev < -1e-9:
            raise IntegrationError(f"state invariants violated at t={times[kk]:.3f} ns "
                                   f"(trace error {trace_err:.2e}, hermiticity {herm:.2e}, min eig {ev:.2e})")
        pops, _ = observables(rho.reshape(shape))
        pops_t.append(pops.sum(axis=0))
        occ.append(float(occ_w @ pops.sum(axis=1)))
        pph.append(float(pops[1:].sum()))
        joint.append(float(np.sum(pops[1:, :] * exc)))
    final = MasterEqState(y[: n * n, -1].reshape(n, n), float(times[-1]), cfg.fock, gen.labels)
    return Trajectory(times, np.array(pops_t), np.array(occ), np.array(pph), np.array(joint),
                      np.real(y[n * n]), np.real(y[n * n + 1]), float(trace_err), float(min_eig),
                      final, spin, cfg.tau_p, gen.labels)


def joint_excited_photon_probability(traj: Trajectory, average: bool = True) -> float:
    """Joint probability of being excited with at least one cavity photon over the pulse.

    With ``average`` the time integral is divided by the pulse duration,
    giving a dimensionless pulse-averaged probability; otherwise the raw
    integral in ns is returned.
    """
    mask = traj.times <= traj.tau_p + 1e-12
    integral = float(np.interp(traj.tau_p, traj.times[mask], traj.joint_integral[mask]))
    return integral / traj.tau_p if average else integral


def p2plus_estimate(cfg: CoherentConfig, p_r: float, kappa: float) -> float:
    """Two-photon occupancy estimate |alpha|^4 (1 - P_R)^2 kappa tau_p / 2."""
    if p_r < 0 or p_r > 1 or kappa <= 0:
        raise ValueError("need 0 <= P_R <= 1 and kappa > 0")
    return cfg.mean_photons**2 * (1 - p_r) ** 2 * kappa * cfg.tau_p / 2


def p2plus_per_linewidth(cfg: CoherentConfig, p_r: float, kappa: float) -> float:
    """Poisson estimate of two photons sharing one cavity lifetime, summed over the pulse.

    The mean number entering per 1/kappa window is mu = |alpha|^2 (1-P_R) / (kappa tau_p);
    kappa tau_p windows each contribute mu^2/2.
    """
    if p_r < 0 or p_r > 1 or kappa <= 0:
        raise ValueError("need 0 <= P_R <= 1 and kappa > 0")
    return cfg.mean_photons**2 * (1 - p_r) ** 2 / (2 * kappa * cfg.tau_p)


def click_probability(reflected: float, eta_detect: float) -> float:
    """Threshold detector on a coherent reflected field."""
    return 1.0 - math.exp(-eta_detect * reflected)


def pulse_averaged_reflection(model: ReadoutModel, cfg: CoherentConfig, spin: int = 0,
                              span: float = 50.0, points: int = 20001, lobes: int = 40) -> float:
    """Single-photon reflection averaged over the pulse spectrum (the weak-drive limit).

    The flat pulse's sinc^2 spectrum is sampled lobe by lobe out to ``lobes``
    zeros; beyond that its lobe-averaged envelope 1/(2 x^2) is used so a
    coarse grid suffices for long pulses.
    """
    kappa = model.cavity.kappa
    coarse = np.linspace(-span * kappa, span * kappa, points)
    if cfg.envelope == "flat":
        lobe = 2 * np.pi / cfg.tau_p
        fine = np.linspace(-lobes * lobe, lobes * lobe, 40 * 2 * lobes + 1)
        w = np.unique(np.concatenate([coarse, fine]))
        x = w * cfg.tau_p / 2
        far = np.abs(x) > lobes * np.pi
        weight = np.where(far, 0.5 / np.maximum(x * x, 1e-300), np.sinc(x / np.pi) ** 2)
        weight = weight * cfg.tau_p / (2 * np.pi)
    else:
        w = coarse
        s = 1.0 / (2 * math.sqrt(2) * cfg.tau_p / 6.0)
        weight = np.exp(-0.5 * (w / s) ** 2) / (math.sqrt(2 * math.pi) * s)
    block = model.system.block(spin)
    sol = _kernels.solve_shifted(block.h_eff, _rhs(block, model.cavity, DrivingConfig()),
                                 (ghz(model.detuning) + w).astype(complex))
    refl = _probabilities(sol, block, model.cavity, "+")[2]
    # integrate the deficit so the slowly converging sinc^2 tail of a flat pulse drops out
    return float(1.0 - np.trapezoid((1.0 - refl) * weight, w))


@dataclass(frozen=True)
class CoherentPulse:
    spin: int
    reflected: float
    ms_population: float
    click: float
    joint: float


def coherent_channels(cfg: CoherentConfig, model: ReadoutModel, pcfg: ProtocolConfig,
                      spins=SPINS) -> tuple[PulseChannels, dict]:
    """Per-pulse outcome probabilities from master-equation runs.

    Click and shelving are treated as independent: a pulse clicks with
    1 - exp(-eta_d N_refl); a pulse that does not click shelves the spin with
    the final metastable population.
    """
    click, capture, pulses = {}, {}, {}
    for s in spins:
        traj = lindblad_evolve(cfg, model, s)
        pc = click_probability(traj.reflected_photons, pcfg.eta_detect)
        pc = 1.0 - (1.0 - pc) * (1.0 - pcfg.dark_count_prob)
        click[s] = pc
        capture[s] = (1.0 - pc) * traj.ms_population
        pulses[s] = CoherentPulse(s, traj.reflected_photons, traj.ms_population, pc,
                                  joint_excited_photon_probability(traj))
    dark_r = float(empty_cavity_reflection(model.cavity, model.detuning))
    dark = 1.0 - math.exp(-pcfg.eta_detect * cfg.mean_photons * dark_r)
    dark = 1.0 - (1.0 - dark) * (1.0 - pcfg.dark_count_prob)
    ch = PulseChannels(click, capture, {}, dark, {s: pulses[s].reflected for s in spins}, model.detuning)
    return ch, pulses


def coherent_protocol(cfg: CoherentConfig, model: ReadoutModel, pcfg: ProtocolConfig,
                      n_max: int | None = None) -> tuple[FidelityCurve, dict]:
    ch, pulses = coherent_channels(cfg, model, pcfg)
    return fidelity_curve(ch, pcfg, n_max), pulses


@dataclass(frozen=True)
class RestrictionCheck:
    dropped_population: float  # peak population of levels neither carried nor eliminated
    eliminated_population: float  # peak population the full run puts in eliminated levels
    reflected_deviation: float  # relative change of the reflected photon number
    ms_deviation: float  # relative change of the metastable population


def restriction_check(cfg: CoherentConfig, model: ReadoutModel, spin: int = 0) -> RestrictionCheck:
    """Compare the default level restriction against a run carrying every coupled level."""
    full = lindblad_evolve(replace(cfg, level_threshold=1e-12, eliminate_above=None), model, spin)
    reduced = lindblad_evolve(cfg, model, spin)
    gen = build_generator(model, spin, cfg)
    dropped = [k for k, lab in enumerate(full.levels) if lab not in gen.labels and lab not in gen.eliminated]
    gone = [k for k, lab in enumerate(full.levels) if lab in gen.eliminated]

    def peak(idx):
        return float(full.populations[:, idx].sum(axis=1).max()) if idx else 0.0

    def rel(a, b):
        return abs(a - b) / max(abs(b), 1e-300)

    return RestrictionCheck(peak(dropped), peak(gone), rel(reduced.reflected_photons, full.reflected_photons),
                            rel(reduced.ms_population, full.ms_population))
