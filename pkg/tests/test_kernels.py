import os
import subprocess
import sys

import numpy as np

from nvdit import _kernels


def test_backend_reports_choice():
    assert _kernels.backend() in ("numba", "numpy")


def test_solve_shifted_agrees():
    rng = np.random.default_rng(1)
    a0 = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    b = rng.normal(size=8) + 0j
    shifts = np.linspace(-3, 3, 25).astype(complex)
    ref = np.array([np.linalg.solve(a0 - s * np.eye(8), b) for s in shifts])
    assert np.allclose(_kernels.solve_shifted(a0, b, shifts), ref, atol=1e-12)
    assert np.allclose(_kernels.solve_shifted_numpy(a0, b, shifts), ref, atol=1e-12)


def test_chain_click_agrees():
    rng = np.random.default_rng(2)
    step = rng.uniform(size=(6, 6)) * 0.15
    click = rng.uniform(size=6) * 0.1
    p0 = np.eye(6)[1]
    a = _kernels.chain_click(step, click, p0, 50)
    b = _kernels.chain_click_numpy(step, click, p0, 50)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-300)


def test_env_flag_forces_numpy():
    env = dict(os.environ, NVDIT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from nvdit import _kernels; print(_kernels.backend())"],
                         capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "numpy"


def test_numpy_backend_same_fidelity():
    code = ("from nvdit.protocol import readout_model, fidelity_curve, ProtocolConfig;"
            "c=ProtocolConfig(); print(repr(fidelity_curve(readout_model(1.0).channels(c), c, 200).optimum()[1]))")
    vals = []
    for flag in ("0", "1"):
        env = dict(os.environ, NVDIT_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
        vals.append(float(out.stdout))
    assert abs(vals[0] - vals[1]) < 1e-12
