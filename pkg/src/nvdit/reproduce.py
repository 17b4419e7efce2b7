"""Reproduction targets: fixed parameter sets, plot-ready tables and anchor checks.

Every target returns a :class:`Reproduction` holding CSV-style tables, a JSON
summary and a list of :class:`Check` results against :mod:`nvdit.anchors`.
Nothing here is random, so rerunning a target rewrites identical files.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import anchors as A
from .bandwidth import (BayesClassifier, GaussianPulse, average_false_reflection, conservative_fidelity,
                        detection_probabilities, fidelity_vs_n, pulse_time_error_tradeoff, solve_threshold,
                        truncated_tail_fraction)
from .coherent import (CoherentConfig, click_probability, coherent_channels, joint_excited_photon_probability,
                       lindblad_evolve, p2plus_estimate, p2plus_per_linewidth, pulse_averaged_reflection)
from .config import RunConfig
from .protocol import ProtocolConfig, fidelity_curve, n_ave, n_ft, reflection_probability
from .scattering import reflection_spectrum
from .structure import LevelTable
from .units import mhz, to_ghz

TARGETS = ("table1", "table2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "sec4a", "sec4b")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    expected: float
    tolerance: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        s = f"{tag} {self.name}: value={_fmt(self.value)} expected={_fmt(self.expected)} tol={_fmt(self.tolerance)}"
        return s + (f" ({self.note})" if self.note else "")


def check_close(name, value, expected, tol, note="") -> Check:
    return Check(name, float(value), float(expected), float(tol), bool(abs(value - expected) <= tol), note)


def check_true(name, ok, value=float("nan"), note="") -> Check:
    return Check(name, float(value), float("nan"), float("nan"), bool(ok), note)


@dataclass
class Reproduction:
    target: str
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else format(float(x), ".10g")
    return str(x)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else float(format(v, ".12g"))
    return v


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def write_json(path: Path, doc):
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_outputs(rep: Reproduction, out: Path) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (header, rows) in rep.tables.items():
        p = out / f"{rep.target}_{name}.csv"
        write_csv(p, header, rows)
        paths.append(p)
    p = out / f"{rep.target}_summary.json"
    write_json(p, {"target": rep.target, "passed": rep.passed, "summary": rep.summary,
                   "checks": [c.__dict__ for c in rep.checks]})
    paths.append(p)
    p = out / f"{rep.target}_report.txt"
    p.write_text("".join(c.line() + "\n" for c in rep.checks))
    paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# level table


LEVEL_HEADER = ("b_z_mT", "level", "energy_GHz", "lifetime_ns", "ms_branch", "doublet",
                "sp_m-1", "sp_m0", "sp_m+1", "sm_m-1", "sm_m0", "sm_m+1")


def level_rows(table: LevelTable) -> list:
    pair = {i for d in table.doublets() for i in d}
    rows = []
    for k in range(6):
        amps = [abs(table.amplitude(p, s)[k]) for p in ("+", "-") for s in (-1, 0, 1)]
        rows.append([table.b_z * 1e3, table.labels[k], table.energies[k], table.lifetimes[k], table.ms_branch[k],
                     k in pair, *amps])
    return rows


def table1(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("table1")
    rows = []
    for b in (0.0, 0.020):
        t = cfg.level_table(b_z=b)
        rows += level_rows(t)
        tag = f"{b * 1e3:g}mT"
        for k, (e, ref) in enumerate(zip(t.energies, A.LEVEL_ENERGIES[b])):
            rep.checks.append(check_close(f"energy {tag} {t.labels[k]}", e, ref, A.ENERGY_TOL))
        for k, (tau, ref) in enumerate(zip(t.lifetimes, A.LEVEL_LIFETIMES[b])):
            rep.checks.append(check_close(f"lifetime {tag} {t.labels[k]}", tau, ref, A.LIFETIME_TOL))
        if b == 0.0:
            rep.checks.append(check_true("zero-field doublets flagged", t.doublets() == [(0, 1), (2, 3)],
                                         len(t.doublets())))
        else:
            for name, (sp, sm) in A.MIXED_AMPLITUDES.items():
                k = t.labels.index(name)
                rep.checks.append(check_close(f"|sigma+| {name} from m_s=-1", abs(t.amplitude("+", -1)[k]), sp,
                                              A.AMPLITUDE_TOL))
                rep.checks.append(check_close(f"|sigma-| {name} from m_s=+1", abs(t.amplitude("-", 1)[k]), sm,
                                              A.AMPLITUDE_TOL))
            rep.checks.append(check_close("metastable branch M5", t.ms_branch[4], *A.MS_BRANCH_M5))
    for low, ref in A.MS_BRANCH_M6.items():
        t = cfg.level_table(b_z=0.020, ms0_branch=low)
        rep.checks.append(check_close(f"metastable branch M6 (low {low:g})", t.ms_branch[5], ref,
                                      A.MS_BRANCH_M6_TOL))
    rep.tables["levels"] = (LEVEL_HEADER, rows)
    return rep


# ---------------------------------------------------------------------------
# protocol targets


def _curve(cfg: RunConfig, c: float, pcfg: ProtocolConfig, n_max: int):
    model = cfg.readout_model(c, pcfg.ms0_branch)
    return model, fidelity_curve(model.channels(pcfg), pcfg, n_max, cfg.metastable)


def _table2_row(args):
    cfg, (c, es, ed, f_ref, n_ref) = args
    pcfg = replace(cfg.protocol, eta_source=es, eta_detect=ed, ms0_branch=0.01)
    _, curve = _curve(cfg, c, pcfg, 600)
    n, f = curve.optimum()
    return [c, es, ed, f, n, f_ref, n_ref, f - f_ref, (n - n_ref) / n_ref]


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def table2(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("table2")
    rows = _map(_table2_row, [(cfg, r) for r in A.FIDELITY_TABLE], workers)
    header = ("C", "eta_source", "eta_detect", "F", "n", "F_ref", "n_ref", "dF", "dn_rel")
    rep.tables["rows"] = (header, rows)
    for r in rows:
        tag = f"C={r[0]:g} es={r[1]:g} ed={r[2]:g}"
        rep.checks.append(check_close(f"F {tag}", r[3], r[5], A.FIDELITY_TABLE_TOL))
        rep.checks.append(check_close(f"n {tag}", r[8], 0.0, A.PULSE_COUNT_RTOL, "relative"))
    df = np.array([r[7] for r in rows])
    rep.summary = {"max_abs_dF": float(np.abs(df).max()), "mean_dF": float(df.mean()),
                   "rows_below": int((df < 0).sum()), "rows_above": int((df > 0).sum()),
                   "max_rel_dn": float(max(abs(r[8]) for r in rows)),
                   "one_sided_bias": bool((df < 0).all() or (df > 0).all())}
    return rep


def sec4a(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("sec4a")
    R = A.REALISTIC
    pcfg = replace(cfg.protocol, eta_source=R["eta_source"], eta_detect=R["eta_detect"], ms0_branch=R["ms0_branch"])
    _, curve = _curve(cfg, R["cooperativity"], pcfg, 600)
    # the curve is flat near its top; report the first n within rounding of the peak
    n, f = curve.optimum(R["rounding"])
    duration = n * pcfg.pulse_spacing * 1e-3
    rep.tables["curve"] = (("n", "F", "F_0", "F_plus1"),
                           [[int(k), a, b, c] for k, a, b, c in zip(curve.n, curve.F, curve.F_0, curve.F_plus1)])
    rep.summary = {"n_peak": n, "F_peak": f, "F_cap10": curve.at(10), "duration_us": duration}
    rep.checks += [check_close("peak fidelity", f, *R["F_peak"]),
                   check_close("peak pulse number", n, *R["n_peak"]),
                   check_close("fidelity capped at 10 pulses", curve.at(10), *R["F_cap10"]),
                   check_close("duration (us)", duration, *R["duration_us"])]
    return rep


def fig3(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("fig3")
    coops = (1.0, 2.0, 5.0, 10.0, 20.0)
    rows, peaks = [], []
    for ms0 in (0.0, 0.01):
        pcfg = replace(cfg.protocol, eta_source=1.0, eta_detect=1.0, ms0_branch=ms0)
        for c in coops:
            _, curve = _curve(cfg, c, pcfg, 40)
            rows += [[ms0, c, int(k), f] for k, f in zip(curve.n, curve.F)]
            peaks.append([ms0, c, *curve.optimum()])
    rep.tables["top"] = (("ms0_branch", "C", "n", "F"), rows)
    rep.tables["peaks"] = (("ms0_branch", "C", "n_peak", "F_peak"), peaks)

    grid = np.round(np.geomspace(0.5, 20.0, 60), 6)
    trials = []
    for c in grid:
        pr = reflection_probability(c)
        mean, std = n_ave(pr)
        trials.append([c, pr, mean, std, n_ft(cfg.protocol.p_s_target, pr)])
    rep.tables["trials"] = (("C", "P_R", "n_ave", "n_ave_std", "n_ft"), trials)
    stops = np.array([r[4] for r in trials])
    rep.checks.append(check_true("n_ft is a non-increasing staircase in C", np.all(np.diff(stops) <= 0),
                                 int(stops[0] - stops[-1])))

    fid = []
    rising, drops_seen = True, False
    drop = np.diff(stops) != 0
    for ms0 in (0.0, 0.005, 0.01):
        pcfg = replace(cfg.protocol, eta_source=1.0, eta_detect=1.0, ms0_branch=ms0)
        f0 = []
        for c, stop in zip(grid, stops):
            _, curve = _curve(cfg, c, pcfg, int(stop))
            f0.append(curve.F_0[stop - 1])
            fid.append([ms0, c, int(stop), curve.F_0[stop - 1], curve.F_plus1[stop - 1]])
        d = np.diff(f0)
        rising &= bool(np.all(d[~drop] > 0))
        drops_seen |= bool(np.any(d[drop] < 0))
    rep.tables["fidelities"] = (("ms0_branch", "C", "n_ft", "F_0", "F_plus1"), fid)
    rep.checks.append(check_true("F_0 rises with C between n_ft drops and falls only at drops",
                                 rising and drops_seen))
    rep.summary = {"peaks": peaks}
    return rep


def fig4(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("fig4")
    model = cfg.readout_model(10.0)
    sp = reflection_spectrum(model.system, spins=(0, 1))
    rows = []
    for k, d in enumerate(sp.detuning):
        rows.append([d] + [getattr(sp, q)[s][k] for s in (0, 1) for q in ("R", "T", "S_loss", "M_loss")])
    header = ("detuning_GHz",) + tuple(f"{q}_{s}" for s in ("m0", "p1") for q in ("R", "T", "S", "M"))
    rep.tables["spectrum"] = (header, rows)
    worst = max(float(sp.total(s).max()) for s in (0, 1))
    r0 = model.response(0).R
    r1 = model.response(1).R
    rep.summary = {"operating_detuning_GHz": model.detuning, "R_0": r0, "R_plus1": r1, "max_total": worst}
    rep.checks += [check_true("R+T+S+M <= 1 + 1e-9 on the grid", worst <= 1 + 1e-9, worst),
                   check_close("R_0 at the operating point", r0, reflection_probability(10.0), 2e-3),
                   check_true("R_+1 at the operating point below 1e-6", r1 < 1e-6, r1)]
    return rep


def fig5(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("fig5")
    pcfg = replace(cfg.protocol, eta_source=1.0, eta_detect=1.0, ms0_branch=0.01)
    rows, opt = [], []
    for c in (0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0):
        _, curve = _curve(cfg, c, pcfg, 100)
        n, f = curve.optimum()
        rows += [[c, int(k), v] for k, v in zip(curve.n, curve.F)]
        sens = max(abs(f - curve.at(m)) for m in (n - 2, n + 2) if 1 <= m <= 100)
        opt.append([c, n, f, sens])
        if c >= 2:
            rep.checks.append(Check(f"F_opt >= {A.IDEAL_THRESHOLD} at C={c:g}", f, A.IDEAL_THRESHOLD, 0.0,
                                    f >= A.IDEAL_THRESHOLD))
        if c >= 5:
            rep.checks.append(Check(f"|F(n_opt) - F(n_opt+-2)| at C={c:g}", sens, 0.0, A.IDEAL_SENSITIVITY,
                                    sens <= A.IDEAL_SENSITIVITY))
    rep.tables["curves"] = (("C", "n", "F"), rows)
    rep.tables["optima"] = (("C", "n_opt", "F_opt", "sensitivity_pm2"), opt)
    return rep


def fig6(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("fig6")
    coops = np.round(np.geomspace(0.2, 20.0, 12), 6)
    etas = np.round(np.linspace(0.5, 1.0, 6), 6)
    grids = {}
    for which in ("source", "detect"):
        rows, F = [], np.zeros((len(coops), len(etas)))
        for i, c in enumerate(coops):
            for j, e in enumerate(etas):
                es, ed = (e, 1.0) if which == "source" else (1.0, e)
                pcfg = replace(cfg.protocol, eta_source=es, eta_detect=ed, ms0_branch=0.01)
                _, curve = _curve(cfg, c, pcfg, 10)
                F[i, j] = curve.at(10)
                rows.append([c, e, F[i, j]])
        grids[which] = F
        rep.tables[which] = (("C", f"eta_{which}", "F_n10"), rows)
        if which == "detect":
            rep.checks.append(check_true("F non-decreasing in eta_detect", np.all(np.diff(F, axis=1) >= -1e-12)))
    more = bool(np.all(grids["detect"] <= grids["source"] + 1e-12))
    rep.checks.append(check_true("detector inefficiency costs at least as much as source inefficiency", more,
                                 float((grids["source"] - grids["detect"]).max())))
    return rep


# ---------------------------------------------------------------------------
# bandwidth


def sec4b(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("sec4b")
    bw = cfg.bandwidth
    kappa = mhz(cfg.cavity.kappa_mhz)
    afr = average_false_reflection(bw.sigma_t_ns, kappa)
    k_req = solve_threshold(bw.target, "sigma_t", bw.sigma_t_ns)
    t_req = solve_threshold(bw.target, "kappa", kappa)
    ratio_k, ratio_t = k_req / kappa, t_req / bw.sigma_t_ns
    rep.checks += [check_close("average false reflection", afr, *A.FALSE_REFLECTION),
                   check_close("required kappa (MHz)", to_ghz(k_req) * 1e3, *A.KAPPA_THRESHOLD_MHZ),
                   check_close("required sigma_t (ns)", t_req, *A.SIGMA_T_THRESHOLD),
                   check_close("kappa ratio", ratio_k, A.THRESHOLD_RATIO[0], A.THRESHOLD_RATIO[0] * A.THRESHOLD_RATIO[1]),
                   check_close("sigma_t ratio", ratio_t, A.THRESHOLD_RATIO[0], A.THRESHOLD_RATIO[0] * A.THRESHOLD_RATIO[1]),
                   check_close("truncated tail area", truncated_tail_fraction(3.0), *A.TAIL_FRACTION)]

    K = A.CLASSIFIER
    clf = BayesClassifier(K["p0"], K["p1"], K["eta0"], K["eta1"])
    f = fidelity_vs_n(clf, bw.n_max)
    n_opt = int(np.argmax(f)) + 1
    ns = np.arange(1, bw.n_max + 1)
    cons = conservative_fidelity(ns, K["p0"], K["eta0"], K["eta1"])
    rep.tables["classifier"] = (("n", "F_bayes", "F_conservative"), [[int(n), a, b] for n, a, b in zip(ns, f, cons)])
    rep.checks += [Check("Bayes F at n=12 >= 0.998", f[11], K["F_at_12"], 0.0, f[11] >= K["F_at_12"]),
                   check_true("Bayes optimum n in {11..14}", n_opt in K["n_opt"], n_opt),
                   check_close("Bayes F_max", f.max(), *K["F_max"]),
                   check_close("conservative F at 11 trials", cons[10], *K["conservative_F11"])]

    rows = pulse_time_error_tradeoff(sorted(A.TRADEOFF_TRIALS, reverse=True), clf, kappa=kappa)
    rep.tables["tradeoff"] = (("pulse_time_ns", "p1", "F", "deviation", "trials"),
                              [[r.pulse_time, r.p1, r.fidelity, r.deviation, r.trials] for r in rows])
    for r in rows:
        want = A.TRADEOFF_TRIALS[r.pulse_time]
        rep.checks.append(check_close(f"trials at {r.pulse_time:g} ns", r.trials, want, 0))

    model = cfg.readout_model(10.0)
    p0, p1 = detection_probabilities(model, GaussianPulse(bw.sigma_t_ns), 0.6 * 0.92)
    rep.summary = {"false_reflection": afr, "kappa_required_MHz": to_ghz(k_req) * 1e3, "sigma_t_required_ns": t_req,
                   "bayes_n_opt": n_opt, "bayes_F_max": float(f.max()), "bayes_F12": float(f[11]),
                   "computed_p0": p0, "computed_p1": p1}
    return rep


# ---------------------------------------------------------------------------
# coherent drive


def _joint_job(args):
    cfg, c, a2 = args
    model = cfg.readout_model(c)
    cc = replace(cfg.coherent, mean_photons=float(a2), fock_max=None)
    if a2 == 0:
        return [c, 0.0, 0.0, 0.0, 0.0]
    tr = lindblad_evolve(cc, model, 0)
    return [c, a2, joint_excited_photon_probability(tr), tr.reflected_photons, tr.trace_error]


def fig7(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("fig7")
    photons = [0.0, 0.05, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0]
    jobs = [(cfg, c, a) for c in A.JOINT_COOPERATIVITIES for a in photons]
    rows = _map(_joint_job, jobs, workers)
    rep.tables["joint"] = (("C", "mean_photons", "joint", "reflected_photons", "trace_error"), rows)
    eta = cfg.protocol.eta_detect
    weak = {}
    for c in A.JOINT_COOPERATIVITIES:
        js = np.array([r[2] for r in rows if r[0] == c])
        rep.checks.append(check_true(f"joint monotone in |alpha|^2 at C={c:g}", np.all(np.diff(js) >= -1e-12)))
        rep.checks.append(check_true(f"joint within [0, 1] at C={c:g}", np.all((js >= 0) & (js <= 1))))
        drift = max(r[4] for r in rows if r[0] == c)
        rep.checks.append(Check(f"trace drift at C={c:g}", drift, 0.0, 1e-8, drift < 1e-8))
        a2, rtol = A.WEAK_DRIVE
        model = cfg.readout_model(c)
        cc = replace(cfg.coherent, mean_photons=a2, fock_max=None)
        refl = next(r[3] for r in rows if r[0] == c and r[1] == a2)
        r_avg = pulse_averaged_reflection(model, cc, 0)
        ratio = click_probability(refl, eta) / a2 / (eta * r_avg)
        saturation = (1 - math.exp(-eta * r_avg * a2)) / (eta * r_avg * a2)
        weak[c] = {"click_ratio": ratio, "flux_ratio": refl / a2 / r_avg, "poisson_limit": saturation}
        if c in A.WEAK_DRIVE_COOPERATIVITIES:
            rep.checks.append(check_close(f"weak-drive click/|alpha|^2 over R0 eta at C={c:g}", ratio, 1.0, rtol,
                                          "R0 averaged over the pulse spectrum"))
    p2 = p2plus_estimate(replace(cfg.coherent, mean_photons=3.0), cfg.readout_model(10.0).response(0).R,
                         mhz(cfg.cavity.kappa_mhz))
    rep.summary = {"weak_drive_ratio": weak, "p2plus_literal_C10_a3": p2}
    return rep


def _coherent_job(args):
    cfg, c, a2 = args
    model = cfg.readout_model(c)
    cc = replace(cfg.coherent, mean_photons=a2, fock_max=None)
    pcfg = replace(cfg.protocol, eta_source=1.0, eta_detect=1.0, ms0_branch=0.01)
    ch, pulses = coherent_channels(cc, model, pcfg)
    curve = fidelity_curve(ch, pcfg, 100, cfg.metastable)
    r0 = model.response(0).R
    return c, a2, curve, pulses, p2plus_estimate(cc, r0, model.cavity.kappa), \
        p2plus_per_linewidth(cc, r0, model.cavity.kappa)


def fig8(cfg: RunConfig, workers: int = 1) -> Reproduction:
    rep = Reproduction("fig8")
    res = _map(_coherent_job, [(cfg, c, a) for c, a in A.COHERENT_CASES], workers)
    rows, opt = [], {}
    for c, a2, curve, pulses, p2, p2l in res:
        rows += [[c, a2, int(k), f] for k, f in zip(curve.n, curve.F)]
        n, f = curve.optimum()
        opt[(c, a2)] = (n, f)
        rep.summary[f"C={c:g},a2={a2:g}"] = {"n_opt": n, "F_opt": f, "click_0": pulses[0].click,
                                              "click_plus1": pulses[1].click, "joint_0": pulses[0].joint,
                                              "p2plus_literal": p2, "p2plus_per_linewidth": p2l}
    rep.tables["curves"] = (("C", "mean_photons", "n", "F"), rows)
    strong = opt[(2.0, 2.0)]
    weak3, weak10 = opt[(0.2, 3.0)], opt[(0.2, 10.0)]
    rep.checks += [check_true("C=2,|a|^2=2 peak exceeds both C=0.2 peaks", strong[1] > max(weak3[1], weak10[1]),
                              strong[1]),
                   check_true("C=2,|a|^2=2 peaks in fewer pulses than C=0.2,|a|^2=3", strong[0] < weak3[0], strong[0]),
                   check_true("|a|^2=10 peaks sooner than |a|^2=3 at C=0.2", weak10[0] < weak3[0], weak10[0])]
    return rep


RUNNERS = {"table1": table1, "table2": table2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6,
           "fig7": fig7, "fig8": fig8, "sec4a": sec4a, "sec4b": sec4b}


def run_target(name: str, cfg: RunConfig, workers: int = 1) -> Reproduction:
    if name not in RUNNERS:
        raise KeyError(f"unknown target {name!r}; choose from {', '.join(TARGETS)}")
    return RUNNERS[name](cfg, workers)
