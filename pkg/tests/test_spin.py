import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvdit.spin import Basis, Operator, commutator, embed, spin1_operators, spin_half_operators

S = spin1_operators()


def test_sz_is_diagonal():
    assert np.array_equal(S["z"], np.diag([1, 0, -1]))


def test_sx_sy_commutator():
    assert np.allclose(commutator(S["x"], S["y"]), 1j * S["z"], atol=1e-12)


def test_raising_from_minus_one():
    e_minus = np.array([0, 0, 1.0])
    assert np.allclose(S["+"] @ e_minus, [0, np.sqrt(2), 0])


def test_ladder_commutators():
    assert np.allclose(commutator(S["z"], S["+"]), S["+"], atol=1e-12)
    assert np.allclose(commutator(S["z"], S["-"]), -S["-"], atol=1e-12)


def test_cartesian_from_ladder():
    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / np.sqrt(2)
    sy = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]]) / np.sqrt(2)
    assert np.allclose((S["+"] + S["-"]) / 2, sx)
    assert np.allclose((S["+"] - S["-"]) / 2j, sy)
    assert np.allclose(S["x"], sx) and np.allclose(S["y"], sy)


def test_spin_half_algebra():
    i = spin_half_operators()
    assert np.allclose(commutator(i["x"], i["y"]), 1j * i["z"])


def test_embed_sz_pattern():
    m = embed(S["z"], 1, [3, 3, 2])
    assert m.shape == (18, 18)
    assert np.allclose(m, np.diag(np.diag(m)))
    assert np.allclose(np.diag(m), np.tile(np.repeat([1, 0, -1], 2), 3))


def test_embed_identity():
    assert np.allclose(embed(np.eye(2), 2, [3, 3, 2]), np.eye(18))


def test_embed_adjoint():
    a = embed(S["+"], 0, [3, 3, 2])
    assert np.allclose(a.conj().T, embed(S["-"], 0, [3, 3, 2]))


def test_embed_dimension_mismatch():
    with pytest.raises(ValueError):
        embed(S["z"], 2, [3, 3, 2])


@given(st.integers(0, 2), st.lists(st.floats(-5, 5), min_size=9, max_size=9))
def test_embed_preserves_spectrum(slot, vals):
    dims = [3, 3, 2]
    a = np.array(vals).reshape(3, 3)
    a = a + a.T
    if slot == 2:
        a = a[:2, :2]
    w = np.linalg.eigvalsh(a)
    big = np.linalg.eigvalsh(embed(a, slot, dims))
    mult = int(np.prod(dims) / dims[slot])
    assert np.allclose(np.sort(np.repeat(w, mult)), big, atol=1e-9)


def test_operator_checks():
    b = Basis.product(("m_s",), ((1, 0, -1),))
    op = Operator(S["x"], b)
    assert op.is_hermitian()
    assert not Operator(S["+"], b).is_hermitian()
    assert np.allclose(op.dag().matrix, S["x"])
    with pytest.raises(ValueError):
        Operator(np.eye(2), b)


def test_basis_order_and_select():
    b = Basis.product(("m_l", "m_s", "m_n"), ((1, 0, -1), (1, 0, -1), (0.5, -0.5)))
    assert b.dim == 18
    assert b.states[0] == (1, 1, 0.5) and b.states[-1] == (-1, -1, -0.5)
    assert len(b.select(m_l=0)) == 6
    with pytest.raises(KeyError):
        b.select(j=1)
