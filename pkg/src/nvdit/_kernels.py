"""Hot loops with a numba path and a pure-numpy path.

Set NVDIT_DISABLE_NUMBA=1 to force the numpy implementations (useful for
debugging and for the benchmark comparison).  Both paths give the same
answers to rounding.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

DISABLED = os.environ.get("NVDIT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = numba is not None and not DISABLED


# -- shifted linear solves: x_k = (A0 - s_k I)^-1 b ---------------------------

def solve_shifted_numpy(a0, b, shifts):
    n = a0.shape[0]
    mats = a0[None, :, :] - shifts[:, None, None] * np.eye(n)[None, :, :]
    rhs = np.broadcast_to(b, (len(shifts), n))[..., None]
    return np.linalg.solve(mats, rhs)[..., 0]


def _solve_shifted_loop(a0, b, shifts):
    n = a0.shape[0]
    out = np.empty((shifts.shape[0], n), dtype=np.complex128)
    for k in range(shifts.shape[0]):
        a = a0.copy()
        for j in range(n):
            a[j, j] -= shifts[k]
        out[k, :] = np.linalg.solve(a, b)
    return out


# -- no-click Markov chain: cumulative click probability per pulse -----------

def chain_click_numpy(step, click, p0, n_max):
    """click[k] = probability that the first click happens on pulse k+1."""
    p = p0.astype(np.float64).copy()
    first = np.empty(n_max)
    for k in range(n_max):
        first[k] = click @ p
        p = step @ p
    return first


def _chain_click_loop(step, click, p0, n_max):
    m = p0.shape[0]
    p = p0.copy()
    q = np.empty(m)
    first = np.empty(n_max)
    for k in range(n_max):
        acc = 0.0
        for i in range(m):
            acc += click[i] * p[i]
        first[k] = acc
        for i in range(m):
            s = 0.0
            for j in range(m):
                s += step[i, j] * p[j]
            q[i] = s
        for i in range(m):
            p[i] = q[i]
    return first


if USE_NUMBA:
    _solve_shifted_numba = numba.njit(cache=True)(_solve_shifted_loop)
    _chain_click_numba = numba.njit(cache=True)(_chain_click_loop)

    def solve_shifted(a0, b, shifts):
        return _solve_shifted_numba(
            np.ascontiguousarray(a0, dtype=np.complex128),
            np.ascontiguousarray(b, dtype=np.complex128),
            np.ascontiguousarray(shifts, dtype=np.complex128),
        )

    def chain_click(step, click, p0, n_max):
        return _chain_click_numba(
            np.ascontiguousarray(step, dtype=np.float64),
            np.ascontiguousarray(click, dtype=np.float64),
            np.ascontiguousarray(p0, dtype=np.float64),
            int(n_max),
        )
else:
    solve_shifted = solve_shifted_numpy
    chain_click = chain_click_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# -- Lindblad right-hand side on Fock x NV, rho stored as (F, L, F, L) --------
#
# NV index 0 is the driven ground state.  The effective Hamiltonian is
#   H_eff = sum_{m,i} hdiag[m, i] |m, i><m, i|
#           + sum_i kcol[i] |i><0| a + h.c. + drive (a + a^dag)
# where hdiag already holds the -i/2 sum J^dag J decay terms.  Jumps are
# sqrt(kappa) a (x) 1 plus terms sqrt(jr) a^js |p><q| with js in {0, 1}.


def _left_numpy(x, hdiag, kcol, drive):
    f = x.shape[0]
    sq = np.sqrt(np.arange(1, f))
    ax = np.zeros_like(x)
    ax[:-1] = sq[:, None, None, None] * x[1:]
    adx = np.zeros_like(x)
    adx[1:] = sq[:, None, None, None] * x[:-1]
    out = hdiag[:, :, None, None] * x
    out += kcol[None, :, None, None] * ax[:, 0:1, :, :]
    out[:, 0, :, :] += np.einsum("i,minj->mnj", kcol.conj(), adx)
    if drive != 0.0:
        out += drive * (ax + adx)
    return out


def _dag4(x):
    return np.conj(np.transpose(x, (2, 3, 0, 1)))


def lindblad_rhs_numpy(rho, hdiag, kcol, drive, kappa, jp, jq, jr, js):
    left = _left_numpy(rho, hdiag, kcol, drive)
    right = _dag4(_left_numpy(_dag4(rho), hdiag, kcol, drive))
    d = -1j * (left - right)
    f = rho.shape[0]
    sq = np.sqrt(np.arange(1, f))
    shifted = sq[:, None, None, None] * sq[None, None, :, None] * rho[1:, :, 1:, :]
    d[:-1, :, :-1, :] += kappa * shifted
    for p, q, r, s in zip(jp, jq, jr, js):
        if s:
            d[:-1, p, :-1, p] += r * shifted[:, q, :, q]
        else:
            d[:, p, :, p] += r * rho[:, q, :, q]
    return d


def _lindblad_rhs_loop(rho, hdiag, kcol, drive, kappa, jp, jq, jr, js):
    f, l = rho.shape[0], rho.shape[1]
    d = np.empty_like(rho)
    for m in range(f):
        spm = np.sqrt(m + 1.0)
        smm = np.sqrt(1.0 * m)
        for i in range(l):
            for n in range(f):
                spn = np.sqrt(n + 1.0)
                smn = np.sqrt(1.0 * n)
                for j in range(l):
                    x = rho[m, i, n, j]
                    # (H_eff rho)[m,i,n,j]
                    a = hdiag[m, i] * x
                    if m + 1 < f:
                        a += kcol[i] * spm * rho[m + 1, 0, n, j] + drive * spm * rho[m + 1, i, n, j]
                    if m > 0:
                        a += drive * smm * rho[m - 1, i, n, j]
                        if i == 0:
                            for e in range(1, l):
                                a += np.conj(kcol[e]) * smm * rho[m - 1, e, n, j]
                    # (rho H_eff^dag)[m,i,n,j]
                    b = np.conj(hdiag[n, j]) * x
                    if n + 1 < f:
                        b += np.conj(kcol[j]) * spn * rho[m, i, n + 1, 0] + drive * spn * rho[m, i, n + 1, j]
                    if n > 0:
                        b += drive * smn * rho[m, i, n - 1, j]
                        if j == 0:
                            for e in range(1, l):
                                b += kcol[e] * smn * rho[m, i, n - 1, e]
                    v = -1j * (a - b)
                    if m + 1 < f and n + 1 < f:
                        v += kappa * spm * spn * rho[m + 1, i, n + 1, j]
                    d[m, i, n, j] = v
    for t in range(jp.shape[0]):
        p, q, r = jp[t], jq[t], jr[t]
        if js[t]:
            for m in range(f - 1):
                for n in range(f - 1):
                    d[m, p, n, p] += r * np.sqrt((m + 1.0) * (n + 1.0)) * rho[m + 1, q, n + 1, q]
        else:
            for m in range(f):
                for n in range(f):
                    d[m, p, n, p] += r * rho[m, q, n, q]
    return d


if USE_NUMBA:
    _lindblad_rhs_numba = numba.njit(cache=True)(_lindblad_rhs_loop)

    def lindblad_rhs(rho, hdiag, kcol, drive, kappa, jp, jq, jr, js):
        return _lindblad_rhs_numba(rho, hdiag, kcol, float(drive), float(kappa), jp, jq, jr, js)
else:
    lindblad_rhs = lindblad_rhs_numpy
