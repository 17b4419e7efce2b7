"""Finite photon bandwidth: Gaussian pulses, averaged false reflection and Bayesian classification.

A Gaussian photon of temporal width sigma_t has a spectral intensity that
is Gaussian with standard deviation sigma_P / sqrt(2), sigma_P = 1/(2 sigma_t).
Averaging the empty-cavity reflection |delta|^2 / (delta^2 + kappa^2/4)
against it gives the closed form 1 - sqrt(pi) x erfcx(x), x = sigma_t kappa.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import erf, erfcx
from scipy.stats import binom

from .units import mhz


@dataclass(frozen=True)
class GaussianPulse:
    sigma_t: float = 165.0 / 6.0  # ns
    center: float = 82.5  # ns

    def __post_init__(self):
        if not self.sigma_t > 0:
            raise ValueError("sigma_t must be positive")

    @property
    def sigma_p(self) -> float:
        """Angular-frequency standard deviation of the spectral amplitude, rad/ns."""
        return 1.0 / (2.0 * self.sigma_t)

    @property
    def spectral_std(self) -> float:
        """Standard deviation of the spectral intensity |a(omega)|^2, rad/ns."""
        return self.sigma_p / np.sqrt(2.0)

    def spectral_weight(self, delta: np.ndarray) -> np.ndarray:
        s = self.spectral_std
        return np.exp(-0.5 * (np.asarray(delta) / s) ** 2) / (np.sqrt(2 * np.pi) * s)


def average_false_reflection(sigma_t: float, kappa: float) -> float:
    """Spectrally averaged empty-cavity reflection, 1 - sqrt(pi) x erfcx(x) with x = sigma_t kappa."""
    if not (sigma_t > 0 and kappa > 0):
        raise ValueError("sigma_t and kappa must be positive")
    x = sigma_t * kappa
    return float(1.0 - np.sqrt(np.pi) * x * erfcx(x))


def peak_scaling(sigma_t: float, kappa: float) -> float:
    """Fraction of the transmission/scattering peak retained by a finite-bandwidth photon."""
    return 1.0 - average_false_reflection(sigma_t, kappa)


def truncated_tail_fraction(n_sigma: float = 3.0) -> float:
    """Area of a Gaussian outside +-n_sigma standard deviations."""
    return float(1.0 - erf(n_sigma / np.sqrt(2.0)))


def solve_threshold(target: float = 1e-3, fix: str = "sigma_t", value: float | None = None,
                    rtol: float = 1e-6) -> float:
    """Solve average_false_reflection = target for the free parameter.

    fix="sigma_t": ``value`` is sigma_t in ns (default 27.5) and kappa in
    rad/ns is returned.  fix="kappa": ``value`` is kappa in rad/ns (default
    2 pi x 50 MHz) and sigma_t in ns is returned.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target false reflection must lie in (0, 1)")
    if fix == "sigma_t":
        fixed = 165.0 / 6.0 if value is None else float(value)
    elif fix == "kappa":
        fixed = mhz(50.0) if value is None else float(value)
    else:
        raise ValueError("fix must be 'sigma_t' or 'kappa'")
    if not fixed > 0:
        raise ValueError("fixed parameter must be positive")

    def f(x):
        return average_false_reflection(1.0, x) - target  # depends on the product only

    lo, hi = 1e-8, 1e8
    if f(lo) * f(hi) > 0:
        raise ValueError(f"target {target} outside the achievable range")
    x = bisect(f, lo, hi, rtol=rtol * 1e-2, xtol=1e-300, maxiter=500)
    return x / fixed


@dataclass(frozen=True)
class BayesClassifier:
    p0: float = 0.50
    p1: float = 0.00364
    eta0: float = 3.5e-4
    eta1: float = 1.2e-5
    prior0: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p1 < self.p0 <= 1.0:
            raise ValueError("need 0 <= p1 < p0 <= 1")
        if self.eta0 < 0 or self.eta1 < 0:
            raise ValueError("decay rates must be non-negative")
        if not 0.0 < self.prior0 < 1.0:
            raise ValueError("prior must lie in (0, 1)")


@dataclass(frozen=True)
class Classification:
    posterior0: float
    posterior1: float
    decision: int  # 0 or +1


def classify(clicks: int, n: int, clf: BayesClassifier) -> Classification:
    """MAP decision after ``clicks`` detections in ``n`` pulses; ties go to +1."""
    if n < 1 or not 0 <= clicks <= n:
        raise ValueError("need n >= 1 and 0 <= clicks <= n")
    l0 = clf.prior0 * binom.pmf(clicks, n, clf.p0)
    l1 = (1 - clf.prior0) * binom.pmf(clicks, n, clf.p1)
    z = l0 + l1
    post0 = l0 / z if z > 0 else 0.5
    return Classification(float(post0), float(1 - post0), 0 if l0 > l1 else 1)


def expected_fidelity(n: int, clf: BayesClassifier) -> float:
    """Average probability of a correct, undecayed classification after ``n`` pulses."""
    k = np.arange(n + 1)
    l0 = binom.pmf(k, n, clf.p0)
    l1 = binom.pmf(k, n, clf.p1)
    pick0 = clf.prior0 * l0 > (1 - clf.prior0) * l1
    f0 = np.exp(-clf.eta0 * n) * l0[pick0].sum()
    f1 = np.exp(-clf.eta1 * n) * l1[~pick0].sum()
    return float(clf.prior0 * f0 + (1 - clf.prior0) * f1)


def fidelity_vs_n(clf: BayesClassifier, n_max: int = 60) -> np.ndarray:
    return np.array([expected_fidelity(n, clf) for n in range(1, n_max + 1)])


def conservative_fidelity(n, p0: float, eta0: float, eta1: float, p1: float = 0.0):
    """Point-frequency estimate: any click means 0, none means +1."""
    n = np.asarray(n, dtype=float)
    return 0.5 * (np.exp(-eta0 * n) * (1 - (1 - p0) ** n) + np.exp(-eta1 * n) * (1 - p1) ** n)


@dataclass(frozen=True)
class TradeoffRow:
    pulse_time: float  # ns
    p1: float
    fidelity: float
    deviation: float
    trials: int


def pulse_time_error_tradeoff(pulse_times, clf: BayesClassifier | None = None, efficiency: float = 0.6 * 0.92,
                              kappa: float = mhz(50.0), n_max: int = 80) -> list[TradeoffRow]:
    """Best fidelity, its shortfall from the point-frequency limit and the trials needed.

    Each pulse time is used as the Gaussian width sigma_t; the false click
    probability of |+1> is ``efficiency`` times the averaged reflection.
    """
    clf = clf or BayesClassifier()
    ns = np.arange(1, n_max + 1)
    ref = conservative_fidelity(ns, clf.p0, clf.eta0, clf.eta1).max()
    rows = []
    for tp in pulse_times:
        if not tp > 0:
            raise ValueError("pulse time must be positive")
        p1 = efficiency * average_false_reflection(float(tp), kappa)
        c = BayesClassifier(clf.p0, p1, clf.eta0, clf.eta1, clf.prior0)
        f = fidelity_vs_n(c, n_max)
        k = int(np.argmax(f))
        rows.append(TradeoffRow(float(tp), float(p1), float(f[k]), float(ref - f[k]), int(ns[k])))
    return rows


def detection_probabilities(model, pulse: GaussianPulse, efficiency: float, points: int = 801,
                            width: float = 8.0) -> tuple[float, float]:
    """Per-pulse click probabilities of |0> and |+1> averaged over the photon spectrum.

    ``model`` is a :class:`~nvdit.protocol.ReadoutModel`; the spectrum is
    centred on its operating detuning.
    """
    from . import _kernels
    from .scattering import DrivingConfig, _probabilities, _rhs
    from .units import ghz

    s = pulse.spectral_std
    delta = np.linspace(-width * s, width * s, points)
    w = pulse.spectral_weight(delta)
    w = w / np.trapezoid(w, delta)
    out = []
    for spin in (0, 1):
        block = model.system.block(spin)
        sol = _kernels.solve_shifted(block.h_eff, _rhs(block, model.cavity, DrivingConfig()),
                                     (ghz(model.detuning) + delta).astype(complex))
        R = _probabilities(sol, block, model.cavity, "+")[2]
        out.append(efficiency * float(np.trapezoid(R * w, delta)))
    return out[0], out[1]
