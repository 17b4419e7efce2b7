"""Acceptance suite: one check per criterion at its stated tolerance.

Each test records a PASS/FAIL line; conftest prints them all at the end of
the run.  Run this file directly to print the lines without pytest.
"""
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvdit import anchors as A
from nvdit.bandwidth import (BayesClassifier, average_false_reflection, conservative_fidelity, fidelity_vs_n,
                             solve_threshold)
from nvdit.coherent import CoherentConfig, joint_excited_photon_probability, lindblad_evolve
from nvdit.config import load_config
from nvdit.protocol import (ProtocolConfig, basis_state, channels_from_response, expand_tree, fidelity_curve,
                            readout_model, run_protocol, superposition_state)
from nvdit.reproduce import fig5, fig7, fig8, sec4a, table2
from nvdit.scattering import CavityParams, build_coupling, empty_cavity_reflection, reflection_spectrum
from nvdit.structure import GsmParams, ground_levels, level_table, optical_detunings
from nvdit.units import ghz, mhz

RESULTS = []


def record(num, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:>2} {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def _failed(checks):
    return [c.line() for c in checks if not c.passed]


def test_c01_level_table():
    t0 = time.perf_counter()
    t0mt, t20 = level_table(b_z=0.0), level_table(b_z=0.020)
    dt = time.perf_counter() - t0
    e0 = np.max(np.abs(t0mt.energies - A.LEVEL_ENERGIES[0.0]))
    e20 = np.max(np.abs(t20.energies - A.LEVEL_ENERGIES[0.020]))
    amp = 0.0
    for name, (sp, sm) in A.MIXED_AMPLITUDES.items():
        k = int(name[1]) - 1
        amp = max(amp, abs(abs(t20.amplitude("+", -1)[k]) - sp), abs(abs(t20.amplitude("-", 1)[k]) - sm))
    life = np.max(np.abs(t20.lifetimes[4:] - np.array(A.LEVEL_LIFETIMES[0.020])[4:]))
    ok = e0 <= 0.05 and e20 <= 0.05 and amp <= 0.02 and life <= 0.3 and dt < 1.0
    assert record(1, "level table", ok, f"max|dE| 0 mT={e0:.4f} 20 mT={e20:.4f} GHz (tol 0.05), "
                  f"max|d amp|={amp:.4f} (tol 0.02), max|d tau|={life:.3f} ns (tol 0.3), {dt:.3f} s (< 1)")


def test_c02_bandwidth_anchor():
    t0 = time.perf_counter()
    afr = average_false_reflection(27.5, mhz(50.0))
    k = solve_threshold(1e-3, "sigma_t", 27.5) / (2 * np.pi) * 1e3
    s = solve_threshold(1e-3, "kappa", mhz(50.0))
    rk, rs = k / 50.0, s / 27.5
    dt = time.perf_counter() - t0
    ok = (abs(afr - 0.0066) <= 0.0002 and abs(k - 129) <= 2 and abs(s - 71) <= 1
          and abs(rk / 2.58 - 1) <= 0.01 and abs(rs / 2.58 - 1) <= 0.01 and dt < 1.0)
    assert record(2, "bandwidth anchor", ok, f"false reflection {afr:.5%} (0.66% +- 0.02%), kappa {k:.2f} MHz "
                  f"(129 +- 2), sigma_t {s:.2f} ns (71 +- 1), ratios {rk:.4f}/{rs:.4f} (2.58 +- 1%), {dt:.3f} s")


def test_c03_classifier_anchor():
    clf = BayesClassifier(0.50, 0.00364, 3.5e-4, 1.2e-5)
    f = fidelity_vs_n(clf, 60)
    n_opt = int(np.argmax(f)) + 1
    cons = float(conservative_fidelity(11, 0.50, 3.5e-4, 1.2e-5))
    ok = (f[11] >= 0.998 and n_opt in (11, 12, 13, 14) and abs(f.max() - 0.999) <= 5e-4
          and abs(cons - 0.99775) <= 5e-4)
    assert record(3, "classifier anchor", ok, f"F(12)={f[11]:.5f} (>= 0.998), n_opt={n_opt} (11..14), "
                  f"F_max={f.max():.5f} (0.999 +- 0.0005), conservative F(11)={cons:.5f} (0.99775 +- 0.0005)")


@pytest.fixture(scope="module")
def cfg():
    return load_config()


def test_c04_fidelity_table(cfg):
    t0 = time.perf_counter()
    rep = table2(cfg)
    dt = time.perf_counter() - t0
    rows = rep.tables["rows"][1]
    df = max(abs(r[3] - r[5]) for r in rows)
    dn = max(abs(r[8]) for r in rows)
    bias = rep.summary.get("mean_dF", float("nan"))
    ok = rep.passed and dt < 300
    assert record(4, "fidelity table", ok, f"max|dF|={df:.5f} (<= 0.002), max|dn|/n={dn:.3f} (<= 0.20), "
                  f"mean dF={bias:+.2e} (one-sided bias reported), {dt:.1f} s (< 300)"), _failed(rep.checks)


def test_c05_realistic_case(cfg):
    rep = sec4a(cfg)
    s = rep.summary
    assert record(5, "realistic case", rep.passed,
                  f"F_peak={s['F_peak']:.5f} at n={s['n_peak']} (0.992 +- 0.003, 145 +- 25), "
                  f"F(10)={s['F_cap10']:.4f} (0.686 +- 0.03), duration {s['duration_us']:.2f} us (25)"), \
        _failed(rep.checks)


def test_c06_ideal_threshold(cfg):
    rep = fig5(cfg)
    low = min(c.value for c in rep.checks if c.name.startswith("F_opt"))
    sens = max(c.value for c in rep.checks if c.name.startswith("|F(n_opt)"))
    assert record(6, "ideal-case threshold", rep.passed,
                  f"min F_opt over C >= 2 = {low:.5f} (>= 0.999), max sensitivity for C >= 5 = {sens:.2e} "
                  f"(<= 3e-4)"), _failed(rep.checks)


def _closed_form_r(cav, u, delta, gamma, d):
    g2 = cav.g**2 / 2 * abs(u) ** 2
    return 1 - cav.kappa_a / (cav.kappa / 2 - 1j * d + g2 / (gamma - 1j * (d - delta)))


def test_c07_scattering_oracle():
    t0 = time.perf_counter()
    table, ground = level_table(b_z=0.020), ground_levels(GsmParams(), 0.020)
    grid = np.linspace(-1.0, 1.0, 4001)
    worst = 0.0
    for c in (0.2, 2.0, 10.0):
        cav = CavityParams.from_cooperativity(c, table)
        sys_ = build_coupling(cav, table, ground, spins=(0,), levels=[3])
        r = reflection_spectrum(sys_, grid, spins=(0,)).r[0]
        ref = _closed_form_r(cav, table.amplitude("+", 0)[3], ghz(optical_detunings(table, ground, 0))[3],
                             table.gamma[3], ghz(grid))
        worst = max(worst, float(np.max(np.abs(r - ref))))
    cav = CavityParams.from_cooperativity(0.0)
    half = cav.kappa / 2 / (2 * np.pi)
    t_half = [1 - float(empty_cavity_reflection(cav, d)) for d in (-half, half)]
    dev = max(abs(t - 0.5) for t in t_half)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dev <= 1e-6 and dt < 10
    assert record(7, "scattering oracle", ok, f"max|r - r_closed|={worst:.2e} on 4001 points (<= 1e-8), "
                  f"|T(+-kappa/2) - 1/2|={dev:.1e} (<= 1e-6), {dt:.2f} s (< 10)")


_BOOK = {"worst_total": 0.0, "worst_branch": 0.0, "draws": 0}
_TABLE = level_table(b_z=0.020)
_GROUND = ground_levels(GsmParams(), 0.020)
_GRID = np.linspace(-3.0, 3.0, 201)


@settings(max_examples=1000, derandomize=True, deadline=None)
@given(st.floats(0.0, 30.0), st.sampled_from(["+", "-"]), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
       st.floats(0, 1), st.floats(0.0, 0.2), st.integers(1, 8))
def _bookkeeping_draw(coop, pol, a, b, c, d, dark, n):
    sys_ = build_coupling(CavityParams.from_cooperativity(coop, _TABLE), _TABLE, _GROUND)
    sp = reflection_spectrum(sys_, _GRID, spins=(1, 0, -1), polarization=pol)
    tot = max(float(sp.total(s).max()) for s in sp.spins)
    p0, cap0 = a * 0.9, (1 - a * 0.9) * b * 0.5
    p1, cap1 = c * 0.9, (1 - c * 0.9) * d * 0.5
    pcfg = ProtocolConfig(max_pulses=n)
    ch = channels_from_response({1: p1, 0: p0, -1: 0.0}, {1: cap1, 0: cap0, -1: 0.0}, dark, pcfg)
    br = max(abs(expand_tree(basis_state(s), ch, pcfg).total() - 1.0) for s in (0, 1))
    _BOOK["worst_total"] = max(_BOOK["worst_total"], tot)
    _BOOK["worst_branch"] = max(_BOOK["worst_branch"], br)
    _BOOK["draws"] += 1
    assert tot <= 1 + 1e-9 and br <= 1e-9


def test_c08_probability_bookkeeping():
    err = None
    try:
        _bookkeeping_draw()
    except AssertionError as exc:
        err = exc
    ok = err is None and _BOOK["draws"] >= 1000
    assert record(8, "probability bookkeeping", ok,
                  f"{_BOOK['draws']} draws, max spectrum total={_BOOK['worst_total']:.12f} (<= 1 + 1e-9), "
                  f"max |branch sum - 1|={_BOOK['worst_branch']:.1e} (<= 1e-9)"), err


def test_c09_coherent_drive(cfg):
    t0 = time.perf_counter()
    r7, r8 = fig7(cfg), fig8(cfg)
    fock = 0.0
    for c, a2 in ((2.0, 3.0), (0.2, 10.0)):
        m = readout_model(c)
        cc = CoherentConfig(mean_photons=a2)
        a = lindblad_evolve(cc, m, 0)
        b = lindblad_evolve(replace(cc, fock_max=cc.fock + 5), m, 0)
        fock = max(fock, abs(a.reflected_photons - b.reflected_photons), abs(a.ms_population - b.ms_population),
                   abs(joint_excited_photon_probability(a) - joint_excited_photon_probability(b)))
    dt = time.perf_counter() - t0
    drift = max(c.value for c in r7.checks if c.name.startswith("trace drift"))
    weak = r7.summary["weak_drive_ratio"]
    weak_txt = ", ".join(f"C={c:g}: {weak[c]['click_ratio']:.4f}" for c in A.WEAK_DRIVE_COOPERATIVITIES)
    hi = weak[20.0]
    ok = r7.passed and r8.passed and fock < 1e-8 and dt < 600
    s8 = r8.summary
    assert record(9, "coherent drive", ok,
                  f"trace drift {drift:.1e} (< 1e-8), Fock +5 change {fock:.1e} (< 1e-8), joint monotone "
                  f"for C in (0.2, 2, 20), weak-drive click ratio {weak_txt} (1 +- 2%; at C=20 "
                  f"{hi['click_ratio']:.4f} = Poisson limit {hi['poisson_limit']:.4f}, flux ratio "
                  f"{hi['flux_ratio']:.5f}), ordering F_opt C=2 {s8['C=2,a2=2']['F_opt']:.4f} > "
                  f"C=0.2 {s8['C=0.2,a2=3']['F_opt']:.4f}/{s8['C=0.2,a2=10']['F_opt']:.4f}, {dt:.0f} s (< 600)"), \
        _failed(r7.checks + r8.checks)


def _enumerate(ch, pcfg, spin, n):
    """Every click history of n pulses pushed through pulse_update with no truncation."""
    from nvdit.protocol import pulse_update

    zero = 0.0
    paths = [(basis_state(spin), False)]
    for _ in range(n):
        nxt = []
        for state, clicked in paths:
            out = pulse_update(state, ch, pcfg)
            for key, (p, s) in out.items():
                if p > 0:
                    nxt.append((s, clicked or key == "click"))
        paths = nxt
    for state, clicked in paths:
        if clicked:
            zero += state.path_prob
    return zero


def test_c10_small_protocol_oracle():
    worst = 0.0
    for n in (1, 2, 3, 4):
        pcfg = ProtocolConfig(max_pulses=n, eta_source=0.6, eta_detect=0.9)
        ch = readout_model(0.5).channels(pcfg)
        res, _ = run_protocol(superposition_state(), pcfg, ch)
        f0 = _enumerate(ch, pcfg, 0, n)
        f1 = 1 - _enumerate(ch, pcfg, 1, n)
        curve = fidelity_curve(ch, pcfg, n)
        worst = max(worst, abs(res.F_0 - f0), abs(res.F_plus1 - f1), abs(curve.F_0[-1] - f0),
                    abs(curve.F_plus1[-1] - f1))
    assert record(10, "small-instance protocol oracle", worst <= 1e-12,
                  f"max |tree - 2^n enumeration| over n <= 4 = {worst:.1e} (<= 1e-12)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
