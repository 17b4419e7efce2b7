"""Sequential single-photon readout: per-pulse state update, outcome tree and fidelities.

Each pulse is a two-outcome measurement on the ground spin.  A click ends
the branch and classifies the spin as m_s=0; reaching the pulse limit
without a click classifies it as m_s=+1.  Between pulses the metastable
population decays back to the ground manifold, flipping the spin with the
probabilities of :class:`~nvdit.structure.MetastableModel`.

Two equivalent engines are provided: an explicit outcome tree over
:class:`ProtocolState` values (conditional density matrices) and a
six-state Markov chain used for long pulse trains and parameter sweeps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from . import _kernels
from .scattering import (CavityParams, DrivingConfig, ScatteringSystem, build_coupling,
                         empty_cavity_reflection, operating_detuning, solve_scattering)
from .structure import (GSM_BASIS, GroundLevels, GsmParams, LevelTable, MetastableModel,
                        ground_levels, level_table)

SPINS = (1, 0, -1)
_SPIN_INDEX = {1: 0, 0: 1, -1: 2}
_TINY = 1e-280  # below this a branch is treated as impossible (avoids overflow on renormalizing)


class ProtocolError(RuntimeError):
    pass


def reflection_probability(cooperativity: float) -> float:
    """Resonant two-level reflection 4C^2/(2C+1)^2."""
    c = float(cooperativity)
    return 4 * c * c / (2 * c + 1) ** 2


def n_ft(p_s: float, p_r: float) -> int:
    """Number of no-click trials after which m_s=+1 is declared with confidence ``p_s``."""
    if not 0 < p_s < 1:
        raise ValueError("target confidence must lie in (0, 1)")
    if not 0 < p_r <= 1 or p_r < 1e-9:
        raise ValueError(f"click probability {p_r} too small for a finite stop limit")
    if p_r >= 1:
        return 1
    return max(1, math.ceil(math.log(1 - p_s) / math.log(1 - p_r) - 1e-12))


def n_ave(p_r: float) -> tuple[float, float]:
    """Mean and standard deviation of the number of trials to the first click."""
    if not 0 < p_r <= 1:
        raise ValueError("click probability must lie in (0, 1]")
    return 1.0 / p_r, math.sqrt(1.0 - p_r) / p_r


@dataclass(frozen=True)
class ProtocolConfig:
    eta_source: float = 1.0
    eta_detect: float = 1.0
    max_pulses: int = 100
    p_s_target: float = 0.999
    pulse_spacing: float = 165.0  # ns
    ms0_branch: float = 0.01
    dark_count_prob: float = 0.0
    reentry: bool = True  # metastable population returns to the ground manifold
    raman: bool = False  # route spin-changing spontaneous emission to the other spins
    branch_budget: int = 20001

    def __post_init__(self):
        for name in ("eta_source", "eta_detect", "p_s_target", "ms0_branch", "dark_count_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"ProtocolConfig.{name} must lie in [0, 1]")
        if not self.pulse_spacing > 0:
            raise ValueError("ProtocolConfig.pulse_spacing must be positive")
        if int(self.max_pulses) < 1:
            raise ValueError("ProtocolConfig.max_pulses must be a positive integer")


# ---------------------------------------------------------------------------
# per-pulse channel probabilities


@dataclass(frozen=True)
class PulseChannels:
    """Outcome probabilities of one pulse for every ground spin.

    click[s]: detector click; capture[s]: shelved into the metastable
    manifold; transfer[(s, s2)]: optically pumped to spin s2; dark_click:
    click while shelved (empty-cavity reflection).  Efficiencies and dark
    counts are already folded in.
    """

    click: dict
    capture: dict
    transfer: dict
    dark_click: float
    reflection: dict = field(default_factory=dict)
    detuning: float = 0.0

    def stay(self, s: int) -> float:
        out = sum(p for (a, _), p in self.transfer.items() if a == s)
        return 1.0 - self.click[s] - self.capture[s] - out


def _with_dark(p_click: float, dark: float) -> float:
    return 1.0 - (1.0 - p_click) * (1.0 - dark)


def channels_from_response(reflect: dict, capture: dict, dark_reflect: float, cfg: ProtocolConfig,
                           transfer: dict | None = None, detuning: float = 0.0) -> PulseChannels:
    es, ed = cfg.eta_source, cfg.eta_detect
    click = {s: _with_dark(es * ed * reflect[s], cfg.dark_count_prob) for s in reflect}
    cap = {s: es * capture[s] for s in capture}
    tr = {k: es * v for k, v in (transfer or {}).items()}
    for s in click:
        total = click[s] + cap[s] + sum(p for (a, _), p in tr.items() if a == s)
        if total > 1 + 1e-12:
            raise ProtocolError(f"pulse outcome probabilities for spin {s} exceed one ({total})")
    dark = _with_dark(es * ed * dark_reflect, cfg.dark_count_prob)
    return PulseChannels(click, cap, tr, dark, dict(reflect), detuning)


def _raman_transfer(system: ScatteringSystem, table: LevelTable, amps, spin: int) -> dict:
    """Spontaneous emission from the excited coherences that lands on another spin."""
    block = system.block(spin)
    out = {}
    weights = {s2: np.abs(table.amplitude("+", s2)) ** 2 + np.abs(table.amplitude("-", s2)) ** 2
               for s2 in SPINS}
    rates = 2 * block.gamma * (1 - block.ms_branch) * np.abs(amps.excitation) ** 2
    for s2 in SPINS:
        if s2 != spin:
            out[(spin, s2)] = float(rates @ weights[s2])
    return out


@dataclass(frozen=True)
class ReadoutModel:
    """Everything needed to turn a cooperativity into pulse channels."""

    table: LevelTable
    ground: GroundLevels
    system: ScatteringSystem
    detuning: float  # GHz

    @property
    def cavity(self) -> CavityParams:
        return self.system.cavity

    def response(self, spin: int):
        return solve_scattering(self.system, DrivingConfig("+", self.detuning), spin)

    def channels(self, cfg: ProtocolConfig) -> PulseChannels:
        reflect, capture, transfer = {}, {}, {}
        for s in SPINS:
            amps = self.response(s)
            reflect[s] = amps.R
            capture[s] = amps.M_loss
            if cfg.raman:
                transfer.update(_raman_transfer(self.system, self.table, amps, s))
        dark = float(empty_cavity_reflection(self.cavity, self.detuning))
        return channels_from_response(reflect, capture, dark, cfg, transfer, self.detuning)


def readout_model(cooperativity: float, ms0_branch: float = 0.01, *, table: LevelTable | None = None,
                  ground: GroundLevels | None = None, b_z: float = 0.020, kappa_mhz: float = 50.0,
                  operating_point: str = "shifted", ms_branch_low: float | None = None,
                  kappa_ratio: float = 0.5, ref_level: int = 3) -> ReadoutModel:
    """Build the scattering model at cooperativity C with the readout level's branching set.

    ``operating_point`` is "shifted" (drive where the m_s=+1 reflection is
    minimal) or "cavity" (drive at the bare cavity frequency).
    """
    if table is None:
        low = ms0_branch if ms_branch_low is None else ms_branch_low
        from .structure import zero_field_branching
        table = level_table(b_z=b_z, ms_branch_0mt=zero_field_branching(low))
    branch = np.array(table.ms_branch, dtype=float)
    branch[3] = ms0_branch
    table = replace(table, ms_branch=branch)
    ground = ground or ground_levels(GsmParams(), table.b_z if np.isfinite(table.b_z) else b_z)
    cav = CavityParams.from_cooperativity(cooperativity, table, kappa_mhz=kappa_mhz, kappa_ratio=kappa_ratio,
                                          ref_level=ref_level)
    system = build_coupling(cav, table, ground)
    if operating_point == "shifted":
        det = operating_detuning(system, spin=1)
    elif operating_point == "cavity":
        det = 0.0
    else:
        raise ValueError(f"unknown operating point {operating_point!r}")
    return ReadoutModel(table, ground, system, det)


# ---------------------------------------------------------------------------
# explicit states and the outcome tree


@dataclass(frozen=True)
class ProtocolState:
    """Ground density matrix over GSM_BASIS plus metastable populations.

    p_ms[k, j] is the shelved population that was excited from spin
    SPINS[k] with nuclear state j; return is memoryless, so the origin spin
    is the only tag the dynamics needs.
    """

    rho_g: np.ndarray
    p_ms: np.ndarray
    path_prob: float = 1.0

    def total(self) -> float:
        return float(np.real(np.trace(self.rho_g)) + self.p_ms.sum())

    def spin_populations(self) -> np.ndarray:
        d = np.real(np.diag(self.rho_g))
        return np.array([d[GSM_BASIS.select(m_s=s)].sum() for s in SPINS])

    def check(self, atol: float = 1e-10):
        if abs(self.total() - 1.0) > atol:
            raise ProtocolError(f"state trace {self.total()} differs from one")
        if np.min(np.linalg.eigvalsh((self.rho_g + self.rho_g.conj().T) / 2)) < -1e-12:
            raise ProtocolError("ground density matrix is not positive semidefinite")
        if np.any(self.p_ms < -1e-12):
            raise ProtocolError("negative metastable population")


def superposition_state() -> ProtocolState:
    """(|0, -1/2> + |+1, +1/2>)/sqrt(2): spin entangled with the nuclear memory."""
    psi = np.zeros(6, dtype=complex)
    psi[GSM_BASIS.index(0, -0.5)] = 1 / np.sqrt(2)
    psi[GSM_BASIS.index(1, 0.5)] = 1 / np.sqrt(2)
    return ProtocolState(np.outer(psi, psi.conj()), np.zeros((3, 2)))


def basis_state(m_s: int, m_n: float = 0.5) -> ProtocolState:
    rho = np.zeros((6, 6), dtype=complex)
    i = GSM_BASIS.index(m_s, m_n)
    rho[i, i] = 1.0
    return ProtocolState(rho, np.zeros((3, 2)))


def _spin_vector(values: dict) -> np.ndarray:
    """Expand a per-spin dict onto the 6-dim GSM basis."""
    return np.array([values[s] for s, _ in GSM_BASIS.states], dtype=float)


def _relax(rho: np.ndarray, p_ms: np.ndarray, cfg: ProtocolConfig, meta: MetastableModel):
    if not cfg.reentry:
        return rho, p_ms
    q = meta.return_probability(cfg.pulse_spacing)
    rho = rho.copy()
    back = p_ms * q
    for k, origin in enumerate(SPINS):
        for s2, frac in meta.return_distribution(origin).items():
            for j, m_n in enumerate((0.5, -0.5)):
                i = GSM_BASIS.index(s2, m_n)
                rho[i, i] += back[k, j] * frac
    return rho, p_ms - back


def pulse_update(state: ProtocolState, channels: PulseChannels, cfg: ProtocolConfig,
                 meta: MetastableModel | None = None) -> dict:
    """Apply one pulse and the following inter-pulse interval.

    Returns {"click": (prob, state), "no_click": (prob, state)}; states are
    renormalized to unit trace and carry the updated path probability.
    """
    meta = meta or MetastableModel()
    rho, pms = state.rho_g, state.p_ms
    click = _spin_vector(channels.click)
    stay = _spin_vector({s: channels.stay(s) for s in SPINS})
    if np.any(stay < -1e-12):
        raise ProtocolError("negative no-click probability")
    k_click = np.sqrt(click)
    k_stay = np.sqrt(np.clip(stay, 0.0, None))

    rho_c = rho * np.outer(k_click, k_click)
    pms_c = pms * channels.dark_click
    rho_n = rho * np.outer(k_stay, k_stay)
    pms_n = pms * (1.0 - channels.dark_click)
    pop = np.real(np.diag(rho))
    for i, (s, m_n) in enumerate(GSM_BASIS.states):
        j = 0 if m_n > 0 else 1
        pms_n[_SPIN_INDEX[s], j] += pop[i] * channels.capture[s]
        for (a, b), p in channels.transfer.items():
            if a == s:
                t = GSM_BASIS.index(b, m_n)
                rho_n[t, t] += pop[i] * p

    out = {}
    for key, (r, p) in (("click", (rho_c, pms_c)), ("no_click", (rho_n, pms_n))):
        r, p = _relax(r, p, cfg, meta)
        prob = float(np.real(np.trace(r)) + p.sum())
        if prob > _TINY:
            new = ProtocolState(r / prob, p / prob, state.path_prob * prob)
            new.check()
        else:
            new = ProtocolState(r, p, 0.0)
        out[key] = (prob, new)
    total = out["click"][0] + out["no_click"][0]
    if abs(total - state.total()) > 1e-10:
        raise ProtocolError(f"pulse update lost probability ({total} vs {state.total()})")
    return out


@dataclass(frozen=True)
class Branch:
    history: str  # '0' no click, '1' click
    state: ProtocolState
    classification: int
    truncated: bool


@dataclass
class OutcomeTree:
    branches: list

    def total(self) -> float:
        return float(sum(b.state.path_prob for b in self.branches))

    def probability(self, classification: int) -> float:
        return float(sum(b.state.path_prob for b in self.branches if b.classification == classification))


@dataclass(frozen=True)
class ProtocolResult:
    F_0: float
    F_plus1: float
    F: float
    n_ave: float
    n_ft: int
    n_pulses: int
    duration: float  # ns
    F_overlap: float = float("nan")


def expand_tree(initial: ProtocolState, channels: PulseChannels, cfg: ProtocolConfig,
                meta: MetastableModel | None = None) -> OutcomeTree:
    """Outcome tree truncated on the first click and at ``cfg.max_pulses``."""
    n = int(cfg.max_pulses)
    if n + 1 > cfg.branch_budget:
        raise ProtocolError(f"outcome tree would need {n + 1} branches, budget {cfg.branch_budget}")
    branches = []
    state, hist = initial, ""
    for k in range(n):
        split = pulse_update(state, channels, cfg, meta)
        pc, sc = split["click"]
        branches.append(Branch(hist + "1", sc, 0, False))
        state = split["no_click"][1]
        hist += "0"
        if split["no_click"][0] == 0.0:
            break
    branches.append(Branch(hist, state, 1, len(hist) == n))
    tree = OutcomeTree(branches)
    if abs(tree.total() - initial.path_prob) > 1e-9:
        raise ProtocolError("branch probabilities do not sum to one")
    return tree


def _component(initial: ProtocolState, m_s: int) -> tuple[float, ProtocolState | None]:
    idx = GSM_BASIS.select(m_s=m_s)
    rho = np.zeros_like(initial.rho_g)
    rho[np.ix_(idx, idx)] = initial.rho_g[np.ix_(idx, idx)]
    w = float(np.real(np.trace(rho)))
    if w <= 0:
        return 0.0, None
    return w, ProtocolState(rho / w, np.zeros((3, 2)))


def _overlap(tree: OutcomeTree) -> float:
    """Post-measurement fidelity: population of the classified spin in each final state."""
    acc = 0.0
    for b in tree.branches:
        pops = b.state.spin_populations()
        acc += b.state.path_prob * pops[_SPIN_INDEX[b.classification]]
    return acc


def run_protocol(initial: ProtocolState, cfg: ProtocolConfig, channels: PulseChannels,
                 meta: MetastableModel | None = None) -> tuple[ProtocolResult, dict]:
    """Classification fidelities of the |0> and |+1> components of ``initial``.

    F_0 is the probability that a pure |0> component is classified 0, F_plus1
    the probability that |+1> is classified +1; F weights them by the
    initial populations.  Returns the result and the per-component trees.
    """
    initial.check()
    trees, fids, weights, overlaps = {}, {}, {}, {}
    for s in (0, 1):
        w, comp = _component(initial, s)
        weights[s] = w
        if comp is None:
            fids[s] = float("nan")
            continue
        tree = expand_tree(comp, channels, cfg, meta)
        trees[s] = tree
        fids[s] = tree.probability(s)
        overlaps[s] = _overlap(tree)
    wsum = weights[0] + weights[1]
    if wsum <= 0:
        raise ProtocolError("initial state has no weight on m_s = 0 or +1")
    f = sum(weights[s] * fids[s] for s in (0, 1) if weights[s] > 0) / wsum
    f_ov = sum(weights[s] * overlaps[s] for s in (0, 1) if weights[s] > 0) / wsum
    p0 = channels.click[0]
    mean = n_ave(p0)[0] if p0 > 0 else float("inf")
    stop = n_ft(cfg.p_s_target, p0) if p0 >= 1e-9 else int(cfg.max_pulses)
    n = int(cfg.max_pulses)
    res = ProtocolResult(fids[0], fids[1], f, mean, stop, n, n * cfg.pulse_spacing, f_ov)
    return res, trees


# ---------------------------------------------------------------------------
# Markov-chain engine


def markov_matrices(channels: PulseChannels, cfg: ProtocolConfig,
                    meta: MetastableModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """No-click step matrix and click vector on (g+1, g0, g-1, ms+1, ms0, ms-1).

    step[i, j] is the probability of moving j -> i over one pulse without a
    click followed by one inter-pulse interval.
    """
    meta = meta or MetastableModel()
    pulse = np.zeros((6, 6))
    click = np.zeros(6)
    for a, s in enumerate(SPINS):
        click[a] = channels.click[s]
        pulse[3 + a, a] = channels.capture[s]
        for (x, y), p in channels.transfer.items():
            if x == s:
                pulse[_SPIN_INDEX[y], a] += p
        pulse[a, a] = channels.stay(s)
        click[3 + a] = channels.dark_click
        pulse[3 + a, 3 + a] = 1.0 - channels.dark_click
    relax = np.eye(6)
    if cfg.reentry:
        q = meta.return_probability(cfg.pulse_spacing)
        for a, origin in enumerate(SPINS):
            relax[3 + a, 3 + a] = 1.0 - q
            for s2, frac in meta.return_distribution(origin).items():
                relax[_SPIN_INDEX[s2], 3 + a] += q * frac
    return relax @ pulse, click


def first_click_distribution(channels: PulseChannels, cfg: ProtocolConfig, spin: int, n_max: int,
                             meta: MetastableModel | None = None) -> np.ndarray:
    step, click = markov_matrices(channels, cfg, meta)
    p0 = np.zeros(6)
    p0[_SPIN_INDEX[spin]] = 1.0
    return _kernels.chain_click(step, click, p0, int(n_max))


@dataclass(frozen=True)
class FidelityCurve:
    n: np.ndarray
    F_0: np.ndarray
    F_plus1: np.ndarray

    @property
    def F(self) -> np.ndarray:
        return 0.5 * (self.F_0 + self.F_plus1)

    def optimum(self, tolerance: float = 0.0) -> tuple[int, float]:
        """Smallest n whose fidelity is within ``tolerance`` of the maximum."""
        f = self.F
        k = int(np.argmax(f >= f.max() - tolerance))
        return int(self.n[k]), float(f[k])

    def at(self, n: int) -> float:
        return float(self.F[int(n) - 1])


def fidelity_curve(channels: PulseChannels, cfg: ProtocolConfig, n_max: int | None = None,
                   meta: MetastableModel | None = None) -> FidelityCurve:
    """Fidelity for every pulse limit 1..n_max (equal to run_protocol at each n)."""
    n_max = int(cfg.max_pulses if n_max is None else n_max)
    c0 = np.cumsum(first_click_distribution(channels, cfg, 0, n_max, meta))
    c1 = np.cumsum(first_click_distribution(channels, cfg, 1, n_max, meta))
    return FidelityCurve(np.arange(1, n_max + 1), c0, 1.0 - c1)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepPoint:
    cooperativity: float
    eta_source: float
    eta_detect: float
    ms0_branch: float
    n_opt: int
    F_opt: float
    F_0: float
    F_plus1: float
    p_click0: float
    n_ft: int
    F_at_cap: float = float("nan")


def sweep_point(cooperativity: float, cfg: ProtocolConfig, n_max: int = 600, cap: int | None = None,
                tolerance: float = 0.0, model_kw: dict | None = None) -> SweepPoint:
    model = readout_model(cooperativity, cfg.ms0_branch, **(model_kw or {}))
    ch = model.channels(cfg)
    curve = fidelity_curve(ch, cfg, n_max)
    n_opt, f_opt = curve.optimum(tolerance)
    p0 = ch.click[0]
    stop = n_ft(cfg.p_s_target, p0) if p0 >= 1e-9 else n_max
    return SweepPoint(cooperativity, cfg.eta_source, cfg.eta_detect, cfg.ms0_branch, n_opt, f_opt,
                      float(curve.F_0[n_opt - 1]), float(curve.F_plus1[n_opt - 1]), p0, stop,
                      curve.at(cap) if cap else float("nan"))


def _sweep_job(args):
    c, cfg, n_max, cap, tol, kw = args
    return sweep_point(c, cfg, n_max, cap, tol, kw)


def fidelity_sweep(cooperativities: Iterable[float], eta_sources: Iterable[float] = (1.0,),
                   eta_detects: Iterable[float] = (1.0,), base: ProtocolConfig | None = None,
                   n_max: int = 600, cap: int | None = None, tolerance: float = 0.0,
                   workers: int = 1, model_kw: dict | None = None) -> list[SweepPoint]:
    """Grid over (C, eta_source, eta_detect); results come back in grid order."""
    base = base or ProtocolConfig()
    jobs = [(float(c), replace(base, eta_source=float(es), eta_detect=float(ed)), n_max, cap, tolerance, model_kw)
            for c in cooperativities for es in eta_sources for ed in eta_detects]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_job, jobs))
    return [_sweep_job(j) for j in jobs]
