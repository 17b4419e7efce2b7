"""NV ground- and excited-state Hamiltonians and the excited-state level table.

Parameters are stored as ordinary frequencies (GHz, GHz/T); the Hamiltonian
matrices are returned in rad/ns.  The excited manifold lives on the orbital
m_l = +1, -1 doublet; the ground manifold on m_l = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spin import Basis, Operator, SPIN1_LABELS, SPIN_HALF_LABELS, spin1_operators, spin_half_operators
from .units import TWO_PI, ghz

KHZ_GHZ = 1e-6

GSM_BASIS = Basis.product(("m_s", "m_n"), (SPIN1_LABELS, SPIN_HALF_LABELS))
# electronic excited basis, orbital outer and spin inner
ESM_ELECTRONIC_BASIS = Basis.product(("m_l", "m_s"), ((1, -1), SPIN1_LABELS))
ESM_BASIS = Basis.product(("m_l", "m_s", "m_n"), ((1, -1), SPIN1_LABELS, SPIN_HALF_LABELS))
NV_BASIS = Basis.product(("m_l", "m_s", "m_n"), (SPIN1_LABELS, SPIN1_LABELS, SPIN_HALF_LABELS))

ZERO_FIELD_NAMES = ("E2", "E1", "Ex", "Ey", "A1", "A2")


@dataclass(frozen=True)
class GsmParams:
    d_gsm: float = 2.88  # GHz
    g_par_gsm: float = 2.01
    g_par_n: float = -0.566
    mu_b: float = 14.0  # GHz/T
    mu_n: float = 7.63e-3  # GHz/T

    def validate(self):
        for name in ("d_gsm", "g_par_gsm", "mu_b", "mu_n"):
            if not getattr(self, name) > 0:
                raise ValueError(f"GsmParams.{name} must be strictly positive")
        if not self.g_par_n < 0:
            raise ValueError("GsmParams.g_par_n must be negative")


@dataclass(frozen=True)
class EsmParams:
    d_par_esm: float = 1.21  # GHz
    d_perp_esm: float = 0.6375
    lambda_par_esm: float = 4.85
    lambda_perp_esm: float = 0.141
    l_par_esm: float = 0.1
    g_par_esm: float = 2.01
    mu_b: float = 14.0  # GHz/T
    # Scale applied to the D_perp and lambda_perp terms.  With 1.0 the zero
    # field A1/A2 splitting and the 20 mT mixing come out at the tabulated
    # values; 0.5 gives the literal hbar/2 prefactor and halves that split.
    perp_prefactor: float = 1.0

    def validate(self):
        for name in ("d_par_esm", "d_perp_esm", "lambda_par_esm", "lambda_perp_esm",
                     "l_par_esm", "g_par_esm", "mu_b", "perp_prefactor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"EsmParams.{name} must be strictly positive")


@dataclass(frozen=True)
class MetastableModel:
    lifetime_long: float = 462.0  # ns, singlet 1E
    lifetime_short: float = 0.0  # 1A1 -> 1E cascade collapsed to zero
    flip_from_plus1: float = 0.81
    flip_from_0: float = 0.38

    def validate(self):
        if not self.lifetime_long > 0:
            raise ValueError("MetastableModel.lifetime_long must be positive")
        for name in ("flip_from_plus1", "flip_from_0"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"MetastableModel.{name} must lie in [0, 1]")

    def return_probability(self, interval: float) -> float:
        """Probability of leaving the metastable manifold within ``interval`` ns."""
        return 1.0 - float(np.exp(-interval / self.lifetime_long))

    def return_distribution(self, origin: int) -> dict[int, float]:
        """Ground-spin distribution on return, given the spin that was excited.

        From m_s=0 a fraction flip_from_0 lands in m_s=+-1 (split evenly);
        from m_s=+-1 a fraction flip_from_plus1 lands in m_s=0 and the rest
        goes back to the original spin.
        """
        if origin == 0:
            f = self.flip_from_0
            return {0: 1.0 - f, 1: f / 2, -1: f / 2}
        f = self.flip_from_plus1
        return {0: f, origin: 1.0 - f, -origin: 0.0}


def zero_field_lifetimes() -> np.ndarray:
    """Free lifetimes (ns) of E2, E1, Ex, Ey, A1, A2."""
    return np.array([7.5, 7.5, 12.1, 12.1, 5.1, 12.1])


def zero_field_branching(low: float = 0.01) -> np.ndarray:
    """Metastable branching of E2, E1, Ex, Ey, A1, A2; ``low`` fills the 0-1% entries."""
    return np.array([0.38, 0.38, low, low, 0.54, low])


def _spin_ops():
    s = spin1_operators()
    return s, s  # orbital operators are the same matrices


def build_gsm(params: GsmParams, b_z: float) -> Operator:
    """Ground-state Hamiltonian on m_s x m_n in rad/ns (field in tesla)."""
    s = spin1_operators()
    i = spin_half_operators()
    sz2 = s["z"] @ s["z"] - 2.0 / 3.0 * s["I"]
    h = ghz(params.d_gsm) * np.kron(sz2, i["I"])
    h = h + ghz(params.mu_b) * params.g_par_gsm * b_z * np.kron(s["z"], i["I"])
    h = h + ghz(params.mu_n) * params.g_par_n * b_z * np.kron(s["I"], i["z"])
    return Operator(h, GSM_BASIS)


def esm_electronic(params: EsmParams, b_z: float) -> np.ndarray:
    """6x6 excited-state Hamiltonian on (m_l = +-1) x m_s, rad/ns."""
    s, l = _spin_ops()
    k = np.kron
    i3 = s["I"]
    lz, lx, ly = l["z"], l["x"], l["y"]
    sz, sx, sy = s["z"], s["x"], s["y"]
    d_par = ghz(params.d_par_esm)
    d_perp = ghz(params.d_perp_esm) * params.perp_prefactor
    lam_par = ghz(params.lambda_par_esm)
    lam_perp = ghz(params.lambda_perp_esm) * params.perp_prefactor
    mu = ghz(params.mu_b) * b_z

    lxx_yy = lx @ lx - ly @ ly
    lxy = lx @ ly + ly @ lx
    h = d_par * k(lz @ lz, sz @ sz - 2.0 / 3.0 * i3)
    h = h - lam_par * k(lz, sz)
    h = h + d_perp * k(lxx_yy, sy @ sy - sx @ sx)
    h = h - d_perp * k(lxy, sy @ sx + sx @ sy)
    h = h + lam_perp * k(lxx_yy, sx @ sz + sz @ sx)
    h = h - lam_perp * k(lxy, sy @ sz + sz @ sy)
    h = h + mu * (params.l_par_esm * k(lz, i3) + params.g_par_esm * k(lz @ lz, sz))
    keep = [0, 1, 2, 6, 7, 8]  # drop the m_l = 0 rows
    return h[np.ix_(keep, keep)]


def build_esm(params: EsmParams, b_z: float) -> Operator:
    """Excited-state Hamiltonian on (m_l = +-1) x m_s x m_n in rad/ns."""
    h = np.kron(esm_electronic(params, b_z), np.eye(2))
    return Operator(h, ESM_BASIS)


def build_nv(gsm: GsmParams, esm: EsmParams, b_z: float, optical_offset: float = 0.0) -> Operator:
    """Full 18-level Hamiltonian: ground block on m_l = 0, excited block on m_l = +-1.

    ``optical_offset`` (rad/ns) shifts the excited block, standing in for the
    zero-phonon-line energy which only sets an overall reference.
    """
    h = np.zeros((18, 18), dtype=complex)
    ground = NV_BASIS.select(m_l=0)
    excited = [i for i in range(18) if i not in ground]
    h[np.ix_(ground, ground)] = build_gsm(gsm, b_z).matrix
    h[np.ix_(excited, excited)] = build_esm(esm, b_z).matrix + optical_offset * np.eye(12)
    return Operator(h, NV_BASIS)


@dataclass(frozen=True)
class GroundLevels:
    b_z: float
    energies: np.ndarray  # GHz, over GSM_BASIS

    def electron_energy(self, m_s: int) -> float:
        """Energy (GHz) of the electron spin state with the nuclear Zeeman term averaged out."""
        idx = GSM_BASIS.select(m_s=m_s)
        return float(np.mean(self.energies[idx]))


def ground_levels(params: GsmParams, b_z: float) -> GroundLevels:
    h = build_gsm(params, b_z).matrix
    return GroundLevels(b_z, np.real(np.diag(h)) / TWO_PI)


# ---------------------------------------------------------------------------
# excited-state diagonalization


def _clusters(w: np.ndarray, tol: float) -> list[list[int]]:
    groups = [[0]]
    for j in range(1, len(w)):
        if w[j] - w[groups[-1][-1]] < tol:
            groups[-1].append(j)
        else:
            groups.append([j])
    return groups


def _resolve(vecs: np.ndarray, ops: Sequence[np.ndarray], tol: float = 0.05) -> np.ndarray:
    """Rotate a degenerate block so the projected operators are diagonal.

    Each operator is diagonalized inside the sub-blocks it leaves (nearly)
    degenerate, within ``tol``, before the next operator is applied.  Columns
    are ordered by the eigenvalues of each operator in turn (first operator
    ascending, second descending).
    """
    if vecs.shape[1] == 1 or not ops:
        return vecs
    op, rest = ops[0], ops[1:]
    proj = vecs.conj().T @ op @ vecs
    w, u = np.linalg.eigh((proj + proj.conj().T) / 2)
    rotated = vecs @ u
    out = []
    for grp in _clusters(w, tol):
        out.append(_resolve(rotated[:, grp], [-o for o in rest] if rest else []))
    return np.hstack(out)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Make the largest sigma+ (m_l=+1) amplitude real positive, else the largest sigma- one."""
    plus, minus = v[:3], v[3:]
    src = plus if np.max(np.abs(plus)) > 1e-6 else minus
    k = int(np.argmax(np.abs(src)))
    return v * np.exp(-1j * np.angle(src[k]))


def _eigensystem(h6: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh((h6 + h6.conj().T) / 2)
    s, l = _spin_ops()
    sz = np.kron(np.eye(2), np.diag([1.0, 0.0, -1.0]))
    # L_x^2 - L_y^2 restricted to m_l = +-1 simply swaps the two orbital states
    lxx = np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(3))
    tol = ghz(KHZ_GHZ)
    cols = []
    for grp in _clusters(w, tol):
        cols.append(_resolve(v[:, grp], [sz, lxx]))
    v = np.hstack(cols)
    v = np.column_stack([_fix_phase(v[:, j]) for j in range(6)])
    w = np.real(np.einsum("ij,ik,kj->j", v.conj(), h6, v))
    return w, v


@dataclass(frozen=True)
class LevelTable:
    """Diagonalized excited manifold.

    vectors[:, i] holds eigenstate M_(i+1) over ESM_ELECTRONIC_BASIS, i.e.
    rows (m_l, m_s) = (+1,+1), (+1,0), (+1,-1), (-1,+1), (-1,0), (-1,-1).
    """

    b_z: float
    energies: np.ndarray  # GHz relative to the centroid
    lifetimes: np.ndarray  # ns
    ms_branch: np.ndarray
    vectors: np.ndarray
    overlaps: np.ndarray  # |<reference_j|M_i>|^2, rows j, columns i
    labels: tuple[str, ...] = field(default=("M1", "M2", "M3", "M4", "M5", "M6"))

    @property
    def gamma(self) -> np.ndarray:
        """Half spontaneous-emission rate of every level, rad/ns."""
        return 1.0 / (2.0 * self.lifetimes)

    def amplitude(self, polarization: str, m_s: int) -> np.ndarray:
        """<M_i | m_l, m_s> for every level, m_l = +1 for sigma+ and -1 for sigma-."""
        m_l = _pol_to_ml(polarization)
        return self.vectors[ESM_ELECTRONIC_BASIS.index(m_l, m_s), :].conj()

    def polarization_rows(self) -> dict[tuple[str, int], np.ndarray]:
        return {(p, s): self.amplitude(p, s) for p in ("+", "-") for s in SPIN1_LABELS}

    def doublets(self, tol_ghz: float = 1e-3) -> list[tuple[int, int]]:
        """Pairs of adjacent levels closer than ``tol_ghz`` (1 MHz default)."""
        return [(j, j + 1) for j in range(5) if abs(self.energies[j + 1] - self.energies[j]) < tol_ghz]

    def composition(self) -> list[dict[str, complex]]:
        out = []
        for i in range(6):
            entry = {}
            for r, (m_l, m_s) in enumerate(ESM_ELECTRONIC_BASIS.states):
                a = self.vectors[r, i]
                if abs(a) > 1e-12:
                    entry[f"{'s+' if m_l == 1 else 's-'},ms={m_s:+d}"] = complex(a)
            out.append(entry)
        return out


def _pol_to_ml(polarization: str) -> int:
    p = str(polarization).strip().lower().replace("sigma", "").replace("σ", "")
    if p in ("+", "plus", "+1"):
        return 1
    if p in ("-", "minus", "-1"):
        return -1
    raise ValueError(f"unknown polarization {polarization!r}")


def diagonalize_esm(
    h,
    lifetimes_0mt: Sequence[float],
    ms_branch_0mt: Sequence[float],
    reference: np.ndarray | None = None,
    b_z: float = float("nan"),
) -> LevelTable:
    """Diagonalize the excited manifold and propagate lifetimes and branching.

    ``reference`` holds the zero-field eigenvectors (columns) to which the
    zero-field lifetimes and branchings belong; when omitted the eigenbasis of
    ``h`` itself is used, so the inputs come back unchanged.

    Decay rates mix with the squared overlaps (so lifetimes add as inverse
    rates) while metastable branching fractions mix directly.
    """
    m = h.matrix if isinstance(h, Operator) else np.asarray(h)
    if m.shape == (12, 12):
        m = m[::2, ::2]  # m_n = +1/2 slice; the nuclear spin is a spectator
    if m.shape != (6, 6):
        raise ValueError(f"expected a 6x6 or 12x12 excited-state matrix, got {m.shape}")
    if not np.allclose(m, m.conj().T, atol=1e-12):
        raise ValueError("excited-state Hamiltonian is not Hermitian")
    tau0 = np.asarray(lifetimes_0mt, dtype=float)
    b0 = np.asarray(ms_branch_0mt, dtype=float)
    if tau0.shape != (6,) or b0.shape != (6,):
        raise ValueError("need six zero-field lifetimes and branching ratios")
    if np.any(tau0 <= 0) or np.any((b0 < 0) | (b0 > 1)):
        raise ValueError("lifetimes must be positive and branchings in [0, 1]")

    w, v = _eigensystem(m)
    centroid = np.real(np.trace(m)) / 6.0
    ref = v if reference is None else reference
    overlaps = np.abs(ref.conj().T @ v) ** 2
    rates = overlaps.T @ (1.0 / tau0)
    return LevelTable(
        b_z=b_z,
        energies=(w - centroid) / TWO_PI,
        lifetimes=1.0 / rates,
        ms_branch=overlaps.T @ b0,
        vectors=v,
        overlaps=overlaps,
    )


def level_table(
    params: EsmParams | None = None,
    b_z: float = 0.020,
    lifetimes_0mt: Sequence[float] | None = None,
    ms_branch_0mt: Sequence[float] | None = None,
) -> LevelTable:
    """Level table at ``b_z`` with zero-field data mixed in from the 0 T eigenbasis."""
    params = params or EsmParams()
    if not np.isfinite(b_z):
        raise ValueError("magnetic field must be finite")
    tau0 = zero_field_lifetimes() if lifetimes_0mt is None else lifetimes_0mt
    b0 = zero_field_branching() if ms_branch_0mt is None else ms_branch_0mt
    _, ref = _eigensystem(esm_electronic(params, 0.0))
    table = diagonalize_esm(esm_electronic(params, b_z), tau0, b0, reference=ref, b_z=b_z)
    if b_z == 0.0:
        table = LevelTable(**{**table.__dict__, "labels": ZERO_FIELD_NAMES})
    return table


@dataclass(frozen=True)
class Transition:
    level: int  # 0-based index into the level table
    label: str
    amplitude: complex
    detuning: float  # GHz from the M4 <-> m_s=0 line


def optical_detunings(table: LevelTable, ground: GroundLevels, m_s: int, ref_level: int = 3) -> np.ndarray:
    """Transition frequencies (GHz) from ground spin ``m_s`` to every level, relative to the readout line."""
    ref = table.energies[ref_level] - ground.electron_energy(0)
    return table.energies - ground.electron_energy(m_s) - ref


def transition_selection(table: LevelTable, ground: GroundLevels, polarization: str, m_s: int,
                         min_amplitude: float = 0.0) -> list[Transition]:
    amps = table.amplitude(polarization, m_s)
    det = optical_detunings(table, ground, m_s)
    order = np.argsort(np.abs(det), kind="stable")
    return [
        Transition(int(i), table.labels[i], complex(amps[i]), float(det[i]))
        for i in order
        if abs(amps[i]) > min_amplitude
    ]
