"""Command-line front end.

    nvdit levels --bz-mT 0
    nvdit protocol --cooperativity 0.2 --eta-source 0.6 --eta-detect 0.92
    nvdit reproduce table2 --out results/

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 anchor comparison failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, dump_config, load_config
from .units import mhz, to_ghz

log = logging.getLogger("nvdit")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ANCHOR = 0, 2, 3, 4

# flag -> (block, field)
OVERRIDES = {
    "cooperativity": ("cavity", "cooperativity"),
    "eta_source": ("protocol", "eta_source"),
    "eta_detect": ("protocol", "eta_detect"),
    "ms0_branch": ("protocol", "ms0_branch"),
    "bz_mT": (None, "b_z_mT"),
    "sigma_t_ns": ("bandwidth", "sigma_t_ns"),
    "mean_photons": ("coherent", "mean_photons"),
    "max_pulses": ("protocol", "max_pulses"),
    "p_s_target": ("protocol", "p_s_target"),
    "kappa_mhz": ("cavity", "kappa_mhz"),
    "target": ("bandwidth", "target"),
    "fock_max": ("coherent", "fock_max"),
    "tau_p_ns": ("coherent", "tau_p"),
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="YAML file merged over the packaged defaults")
    p.add_argument("--out", metavar="DIR", help="output directory (default from config)")
    p.add_argument("--threads", type=int, default=1, metavar="N", help="worker processes for sweeps")
    p.add_argument("--cooperativity", type=float)
    p.add_argument("--eta-source", type=float)
    p.add_argument("--eta-detect", type=float)
    p.add_argument("--ms0-branch", type=float)
    p.add_argument("--bz-mT", type=float, dest="bz_mT")
    p.add_argument("--sigma-t-ns", type=float)
    p.add_argument("--mean-photons", type=float)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="nvdit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    sub.add_parser("levels", parents=[common], help="excited-state level table")
    sp = sub.add_parser("spectrum", parents=[common], help="reflection/transmission spectra")
    sp.add_argument("--span-ghz", type=float, default=10.0)
    sp.add_argument("--points", type=int, default=4001)
    pp = sub.add_parser("protocol", parents=[common], help="single-photon readout fidelity")
    pp.add_argument("--max-pulses", type=int)
    pp.add_argument("--p-s-target", type=float)
    bp = sub.add_parser("bandwidth", parents=[common], help="finite-bandwidth thresholds and classifier")
    bp.add_argument("--kappa-mhz", type=float)
    bp.add_argument("--target", type=float)
    cp = sub.add_parser("coherent", parents=[common], help="weak coherent pulse master equation")
    cp.add_argument("--fock-max", type=int)
    cp.add_argument("--tau-p-ns", type=float)
    cp.add_argument("--spin", type=int, default=0, choices=(-1, 0, 1))
    sub.add_parser("sweep", parents=[common], help="fidelity sweep over the configured grid")
    rp = sub.add_parser("reproduce", parents=[common], help="reproduce a stored table or figure")
    from .reproduce import TARGETS

    rp.add_argument("targets", nargs="+", choices=TARGETS + ("all",), metavar="TARGET",
                    help=f"one or more of: {', '.join(TARGETS)}, all")
    return parser


def resolve_config(args) -> RunConfig:
    over: dict = {}
    for flag, (block, name) in OVERRIDES.items():
        v = getattr(args, flag, None)
        if v is None:
            continue
        if block is None:
            over[name] = v
        else:
            over.setdefault(block, {})[name] = v
    if args.out is not None:
        over["out"] = args.out
    return load_config(args.config, over)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_levels(cfg: RunConfig, args) -> int:
    from .reproduce import LEVEL_HEADER, level_rows, write_csv, write_json

    table = cfg.level_table()
    out = _outdir(cfg)
    write_csv(out / "levels.csv", LEVEL_HEADER, level_rows(table))
    write_json(out / "levels.json", {"b_z_mT": cfg.b_z_mT, "labels": list(table.labels),
                                     "energies_GHz": table.energies, "doublets": table.doublets()})
    for row in level_rows(table):
        print(f"{row[1]:>3} {row[2]:+9.4f} GHz  tau={row[3]:6.2f} ns  ms={row[4]:.4f}"
              + ("  doublet" if row[5] else ""))
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, args) -> int:
    from .reproduce import write_csv, write_json
    from .scattering import default_grid, reflection_spectrum

    model = cfg.readout_model()
    grid = default_grid(model.cavity.kappa, args.span_ghz, args.points)
    sp = reflection_spectrum(model.system, grid, spins=(1, 0, -1))
    header = ["detuning_GHz"] + [f"{q}_{s:+d}" for s in sp.spins for q in ("R", "T", "S", "M")]
    rows = [[d] + [getattr(sp, q)[s][k] for s in sp.spins for q in ("R", "T", "S_loss", "M_loss")]
            for k, d in enumerate(sp.detuning)]
    out = _outdir(cfg)
    write_csv(out / "spectrum.csv", header, rows)
    summary = {"cooperativity": cfg.cavity.cooperativity, "operating_detuning_GHz": model.detuning,
               "R": {s: model.response(s).R for s in (1, 0, -1)},
               "max_total": max(float(sp.total(s).max()) for s in sp.spins)}
    write_json(out / "spectrum.json", summary)
    print(f"operating detuning {model.detuning * 1e3:+.4f} MHz, R_0={summary['R'][0]:.6f}, "
          f"R_+1={summary['R'][1]:.3e}")
    return EXIT_OK


def cmd_protocol(cfg: RunConfig, args) -> int:
    from .protocol import fidelity_curve, run_protocol, superposition_state
    from .reproduce import write_csv, write_json

    pcfg = cfg.protocol
    model = cfg.readout_model()
    ch = model.channels(pcfg)
    curve = fidelity_curve(ch, pcfg, pcfg.max_pulses, cfg.metastable)
    result, _ = run_protocol(superposition_state(), pcfg, ch, cfg.metastable)
    n_opt, f_opt = curve.optimum()
    out = _outdir(cfg)
    write_csv(out / "protocol_curve.csv", ("n", "F", "F_0", "F_plus1"),
              [[int(n), a, b, c] for n, a, b, c in zip(curve.n, curve.F, curve.F_0, curve.F_plus1)])
    doc = {"result": asdict(result), "n_opt": n_opt, "F_opt": f_opt, "click_0": ch.click[0],
           "click_plus1": ch.click[1]}
    write_json(out / "protocol.json", doc)
    print(f"F={result.F:.6f} at n={pcfg.max_pulses}; optimum F={f_opt:.6f} at n={n_opt} "
          f"({n_opt * pcfg.pulse_spacing * 1e-3:.2f} us)")
    return EXIT_OK


def cmd_bandwidth(cfg: RunConfig, args) -> int:
    from .bandwidth import average_false_reflection, fidelity_vs_n, solve_threshold
    from .reproduce import write_csv, write_json

    bw = cfg.bandwidth
    kappa = mhz(cfg.cavity.kappa_mhz)
    afr = average_false_reflection(bw.sigma_t_ns, kappa)
    k_req = solve_threshold(bw.target, "sigma_t", bw.sigma_t_ns)
    t_req = solve_threshold(bw.target, "kappa", kappa)
    f = fidelity_vs_n(bw.classifier(), bw.n_max)
    out = _outdir(cfg)
    write_json(out / "bandwidth.json", {"sigma_t_ns": bw.sigma_t_ns, "kappa_MHz": cfg.cavity.kappa_mhz,
                                        "false_reflection": afr, "target": bw.target,
                                        "kappa_required_MHz": to_ghz(k_req) * 1e3, "sigma_t_required_ns": t_req,
                                        "n_opt": int(np.argmax(f)) + 1, "F_max": float(f.max())})
    write_csv(out / "bandwidth_fidelity.csv", ("n", "F"), [[n + 1, v] for n, v in enumerate(f)])
    print(f"false reflection {afr:.5%}; kappa needed {to_ghz(k_req) * 1e3:.2f} MHz; "
          f"sigma_t needed {t_req:.2f} ns; Bayes F_max {f.max():.5f} at n={int(np.argmax(f)) + 1}")
    return EXIT_OK


def cmd_coherent(cfg: RunConfig, args) -> int:
    from .coherent import click_probability, joint_excited_photon_probability, lindblad_evolve
    from .reproduce import write_csv, write_json

    model = cfg.readout_model()
    tr = lindblad_evolve(cfg.coherent, model, args.spin)
    header = ["t_ns"] + [f"pop_{lab}" for lab in tr.levels] + ["cavity_n", "p_photon", "joint", "reflected"]
    rows = [[t, *p, n, q, j, r] for t, p, n, q, j, r in zip(tr.times, tr.populations, tr.cavity_occupation,
                                                            tr.photon_probability, tr.joint, tr.reflected)]
    out = _outdir(cfg)
    write_csv(out / "coherent_trajectory.csv", header, rows)
    summary = {"cooperativity": cfg.cavity.cooperativity, "mean_photons": cfg.coherent.mean_photons,
               "spin": args.spin, "fock_max": cfg.coherent.fock, "levels": list(tr.levels),
               "reflected_photons": tr.reflected_photons, "ms_population": tr.ms_population,
               "click": click_probability(tr.reflected_photons, cfg.protocol.eta_detect),
               "joint": joint_excited_photon_probability(tr), "trace_error": tr.trace_error,
               "min_eigenvalue": tr.min_eigenvalue}
    write_json(out / "coherent.json", summary)
    print(f"reflected {tr.reflected_photons:.6f} photons, joint {summary['joint']:.4e}, "
          f"metastable {tr.ms_population:.3e}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    from .protocol import sweep_point
    from .reproduce import _map, write_csv

    sw = cfg.sweep
    values = sw.values()
    jobs = []
    for v in values:
        c = cfg.cavity.cooperativity
        pcfg = cfg.protocol
        if sw.variable == "cooperativity":
            c = float(v)
        else:
            pcfg = replace(pcfg, **{sw.variable: float(v)})
        jobs.append((c, pcfg, sw.n_max, cfg.model_kw()))
    pts = _map(_sweep_one, jobs, args.threads)
    header = ("C", "eta_source", "eta_detect", "ms0_branch", "n_opt", "F_opt", "F_0", "F_plus1", "p_click0", "n_ft")
    rows = [[p.cooperativity, p.eta_source, p.eta_detect, p.ms0_branch, p.n_opt, p.F_opt, p.F_0, p.F_plus1,
             p.p_click0, p.n_ft] for p in pts]
    write_csv(_outdir(cfg) / "sweep.csv", header, rows)
    print(f"{len(rows)} points written")
    return EXIT_OK


def _sweep_one(job):
    from .protocol import sweep_point

    c, pcfg, n_max, kw = job
    return sweep_point(c, pcfg, n_max, model_kw=kw)


def cmd_reproduce(cfg: RunConfig, args) -> int:
    from .reproduce import TARGETS, run_target, write_outputs

    targets = TARGETS if "all" in args.targets else tuple(dict.fromkeys(args.targets))
    ok = True
    out = _outdir(cfg)
    for t in targets:
        rep = run_target(t, cfg, args.threads)
        write_outputs(rep, out)
        n_fail = sum(not c.passed for c in rep.checks)
        for c in rep.checks:
            if not c.passed or args.verbose:
                print(f"[{t}] {c.line()}")
        print(f"[{t}] {len(rep.checks) - n_fail}/{len(rep.checks)} checks passed")
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_ANCHOR


COMMANDS = {"levels": cmd_levels, "spectrum": cmd_spectrum, "protocol": cmd_protocol, "bandwidth": cmd_bandwidth,
            "coherent": cmd_coherent, "sweep": cmd_sweep, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"nvdit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("nvdit: config error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    _outdir(cfg)
    dump_config(cfg, Path(cfg.out) / "effective_config.yaml")
    from .coherent import IntegrationError
    from .protocol import ProtocolError
    from .scattering import ScatteringError

    try:
        return COMMANDS[args.command](cfg, args)
    except (IntegrationError, ProtocolError, ScatteringError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"nvdit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"nvdit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
