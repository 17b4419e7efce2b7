"""Compare the numba and numpy kernel backends.

Runs each workload in a fresh interpreter, once with numba and once with
NVDIT_DISABLE_NUMBA=1, and prints a timing table:

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from nvdit import _kernels
from nvdit.protocol import readout_model, ProtocolConfig, fidelity_curve
from nvdit.coherent import CoherentConfig, build_generator, lindblad_evolve
from nvdit.scattering import reflection_spectrum

repeat = int(sys.argv[1])
model = readout_model(10.0)
cfg = ProtocolConfig(eta_source=0.6, eta_detect=0.92)
ch = model.channels(cfg)
gen = build_generator(model, 0, CoherentConfig(mean_photons=10.0))
n = gen.fock_dim * gen.nv_dim
rng = np.random.default_rng(1)
x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
rho = (x @ x.conj().T).reshape(gen.fock_dim, gen.nv_dim, gen.fock_dim, gen.nv_dim)
rho /= np.einsum("aiai->", rho)

work = {
    "spectrum (4001+ points)": lambda: reflection_spectrum(model.system),
    "fidelity curve (n<=600)": lambda: fidelity_curve(ch, cfg, 600),
    "lindblad rhs x200 (|a|^2=10)": lambda: [gen.rhs(rho, 0.1) for _ in range(200)],
    "pulse C=2 |a|^2=3": lambda: lindblad_evolve(CoherentConfig(mean_photons=3.0), readout_model(2.0), 0),
}
out = {"backend": _kernels.backend()}
for name, fn in work.items():
    fn()  # warm-up and JIT compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["NVDIT_DISABLE_NUMBA"] = "1"
    else:
        env.pop("NVDIT_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'workload':32s} {fast['backend']:>12s} {slow['backend']:>12s} {'speed-up':>9s}")
    for k in fast:
        if k == "backend":
            continue
        print(f"{k:32s} {fast[k] * 1e3:10.2f}ms {slow[k] * 1e3:10.2f}ms {slow[k] / fast[k]:8.2f}x")


if __name__ == "__main__":
    main()
