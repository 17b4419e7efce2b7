"""Unit helpers.

Internally every rate and frequency is an angular frequency in rad/ns and
every time is in ns.  Parameters are stored and reported as ordinary
frequencies (GHz or MHz) and converted at the boundary.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def ghz(f):
    """Ordinary frequency in GHz to angular frequency in rad/ns."""
    return TWO_PI * np.asarray(f, dtype=float) if np.ndim(f) else TWO_PI * float(f)


def mhz(f):
    """Ordinary frequency in MHz to angular frequency in rad/ns."""
    return ghz(f) * 1e-3


def to_ghz(w):
    """Angular frequency in rad/ns to ordinary frequency in GHz."""
    return np.asarray(w) / TWO_PI if np.ndim(w) else float(w) / TWO_PI
