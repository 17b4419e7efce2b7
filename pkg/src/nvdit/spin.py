"""Spin-1 and spin-1/2 operators, tensor embedding and labelled bases.

Conventions
-----------
Spin-1 states are ordered (+1, 0, -1) and spin-1/2 states (+1/2, -1/2).
Composite spaces are built with ``numpy.kron`` in the order the factors are
listed, so the first factor is the slowest-varying index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from typing import Sequence

import numpy as np

SPIN1_LABELS = (1, 0, -1)
SPIN_HALF_LABELS = (0.5, -0.5)

_S2 = np.sqrt(2.0)


def spin1_operators() -> dict[str, np.ndarray]:
    """Return the spin-1 matrices Sx, Sy, Sz, S+, S- and the identity."""
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    sp = _S2 * np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    return {"x": sx, "y": sy, "z": sz, "+": sp, "-": sm, "I": np.eye(3, dtype=complex)}


def spin_half_operators() -> dict[str, np.ndarray]:
    """Return the spin-1/2 matrices Ix, Iy, Iz, I+, I- and the identity."""
    iz = np.diag([0.5, -0.5]).astype(complex)
    ip = np.array([[0, 1], [0, 0]], dtype=complex)
    im = ip.conj().T
    return {
        "x": (ip + im) / 2,
        "y": (ip - im) / 2j,
        "z": iz,
        "+": ip,
        "-": im,
        "I": np.eye(2, dtype=complex),
    }


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


def embed(op: np.ndarray, position: int, dims: Sequence[int]) -> np.ndarray:
    """Place ``op`` at ``position`` of a tensor product with factor sizes ``dims``."""
    if op.shape != (dims[position], dims[position]):
        raise ValueError(f"operator shape {op.shape} does not match factor dimension {dims[position]}")
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[position] = op
    return kron_all(mats)


@dataclass(frozen=True)
class Basis:
    """Ordered product basis with one quantum-number tuple per state."""

    names: tuple[str, ...]
    states: tuple[tuple, ...]

    @classmethod
    def product(cls, names: Sequence[str], factors: Sequence[Sequence]) -> "Basis":
        return cls(tuple(names), tuple(product(*factors)))

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, *numbers) -> int:
        return self.states.index(tuple(numbers))

    def select(self, **fixed) -> list[int]:
        """Indices of states whose named quantum numbers equal the given values."""
        cols = {n: i for i, n in enumerate(self.names)}
        for key in fixed:
            if key not in cols:
                raise KeyError(f"unknown quantum number {key!r}")
        return [i for i, s in enumerate(self.states) if all(s[cols[k]] == v for k, v in fixed.items())]


@dataclass(frozen=True)
class Operator:
    """Dense matrix tied to a labelled basis."""

    matrix: np.ndarray
    basis: Basis = field(compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(f"matrix shape {m.shape} does not match basis dimension {self.basis.dim}")
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.basis)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=atol))

    def restrict(self, indices: Sequence[int], basis: Basis) -> "Operator":
        idx = np.asarray(indices)
        return Operator(self.matrix[np.ix_(idx, idx)], basis)

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix + other.matrix, self.basis)

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix @ other.matrix, self.basis)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
