import numpy as np
import pytest

from helpers import diag_embed, rand_mat, unit
from isolab.errors import ArgumentError, DimensionError
from isolab.gen import random_unitary
from isolab.linmap import AmplifiedMap, MatrixMap, Shape, matrix_units


def test_shape_validation():
    with pytest.raises(ArgumentError):
        Shape(0, 2)
    assert Shape(2, 3).dim == 6


def test_apply_identity():
    t = MatrixMap.identity(Shape(2, 2))
    x = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(t.apply(x), x)


def test_apply_zero():
    t = MatrixMap.zero(Shape(2, 2), Shape(2, 2))
    x = rand_mat(np.random.default_rng(0), 2, 2)
    assert np.allclose(t.apply(x), 0)


def test_apply_block_scaling_map():
    # T(x) = diag(x, x/2) on E_11 gives the diag(1,0,1/2,0) pattern
    t = MatrixMap.from_function(Shape(2, 2), Shape(4, 4),
                                lambda e: diag_embed(e, 1.0, 0.5))
    out = t.apply(unit(2, 2, 0, 0))
    expected = np.diag([1.0, 0.0, 0.5, 0.0]).astype(complex)
    assert np.allclose(out, expected)


def test_apply_shape_mismatch():
    t = MatrixMap.identity(Shape(2, 2))
    with pytest.raises(DimensionError):
        t.apply(np.zeros((3, 3)))


def test_amplify_identity():
    t = MatrixMap.identity(Shape(2, 2))
    amp = t.amplify(3)
    assert amp.domain == Shape(6, 6)
    x = rand_mat(np.random.default_rng(1), 6, 6)
    assert np.allclose(amp.apply(x), x)


def test_amplify_level_one_is_same_map():
    t = MatrixMap.from_function(Shape(2, 3), Shape(3, 2), lambda e: e.T)
    assert t.amplify(1) is t
    with pytest.raises(ArgumentError):
        t.amplify(0)


def test_amplify_transpose_swap_witness():
    # the swap-type combination sum E_ij (x) E_ji has norm 1; its image
    # under the amplified transpose is sum E_ij (x) E_ij, of norm 2
    # (brute-force SVD of the explicit 4x4 matrices)
    t = MatrixMap.transpose_map(2)
    amp = t.amplify(2)
    x = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            x[i * 2 + j, j * 2 + i] = 1.0
    assert np.linalg.norm(x, 2) == pytest.approx(1.0)
    image = amp.apply(x)
    assert np.linalg.norm(image, 2) == pytest.approx(2.0, abs=1e-12)


def test_apply_amplified_matches_materialized():
    rng = np.random.default_rng(2)
    t = MatrixMap(Shape(2, 3), Shape(3, 2), rand_mat(rng, 6, 3 * 2).reshape(6, 3, 2))
    amp = t.amplify(2)
    for _ in range(5):
        x = rand_mat(rng, 4, 6)
        assert np.allclose(t.apply_amplified(2, x), amp.apply(x), atol=1e-12)


def test_amplified_map_lazy_view():
    t = MatrixMap.identity(Shape(2, 2))
    lazy = AmplifiedMap(t, 2)
    x = rand_mat(np.random.default_rng(3), 4, 4)
    assert np.allclose(lazy.apply(x), x)
    assert lazy.to_map().domain == Shape(4, 4)


def test_adjoint_of_identity():
    t = MatrixMap.identity(Shape(2, 2))
    adj = t.adjoint()
    x = rand_mat(np.random.default_rng(4), 2, 2)
    assert np.allclose(adj.apply(x), x)


def test_adjoint_of_unitary_sandwich():
    # adjoint of x -> U x V is x -> V* x U*
    rng = np.random.default_rng(5)
    u = random_unitary(3, rng)
    v = random_unitary(4, rng)
    t = MatrixMap.from_function(Shape(3, 4), Shape(3, 4), lambda e: u @ e @ v)
    adj = t.adjoint()
    for _ in range(5):
        x = rand_mat(rng, 4, 3)
        assert np.allclose(adj.apply(x), v.conj().T @ x @ u.conj().T, atol=1e-12)


def test_adjoint_is_involution_and_isometric():
    rng = np.random.default_rng(6)
    t = MatrixMap(Shape(2, 3), Shape(4, 2), rand_mat(rng, 6, 8).reshape(6, 4, 2))
    back = t.adjoint().adjoint()
    assert np.linalg.norm(back.action - t.action) < 1e-12
    assert t.adjoint().action_norm() == pytest.approx(t.action_norm(), rel=1e-12)


def test_linearity_property():
    rng = np.random.default_rng(7)
    t = MatrixMap(Shape(3, 2), Shape(2, 4), rand_mat(rng, 6, 8).reshape(6, 2, 4))
    for _ in range(20):
        x, y = rand_mat(rng, 3, 2), rand_mat(rng, 3, 2)
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        lhs = t.apply(a * x + b * y)
        rhs = a * t.apply(x) + b * t.apply(y)
        assert np.linalg.norm(lhs - rhs) < 1e-12 * max(1, np.linalg.norm(rhs))


def test_amplify_functoriality():
    rng = np.random.default_rng(8)
    t = MatrixMap(Shape(2, 2), Shape(2, 2), rand_mat(rng, 4, 4).reshape(4, 2, 2))
    twice = t.amplify(2).amplify(3)
    once = t.amplify(6)
    assert np.linalg.norm(twice.action - once.action) < 1e-12


def test_operator_matrix_roundtrip():
    rng = np.random.default_rng(9)
    t = MatrixMap(Shape(2, 3), Shape(3, 3), rand_mat(rng, 6, 9).reshape(6, 3, 3))
    back = MatrixMap.from_matrix(t.domain, t.codomain, t.as_matrix_operator())
    assert np.linalg.norm(back.action - t.action) < 1e-14
    x = rand_mat(rng, 2, 3)
    vec_out = t.as_matrix_operator() @ x.reshape(-1)
    assert np.allclose(vec_out.reshape(3, 3), t.apply(x))


def test_injectivity_report():
    t = MatrixMap.identity(Shape(2, 2))
    assert t.is_injective()
    smin, kern = t.injectivity()
    assert smin == pytest.approx(1.0)
    rank_one = MatrixMap.from_function(Shape(2, 2), Shape(2, 2),
                                       lambda e: np.trace(e) * unit(2, 2, 0, 0))
    assert not rank_one.is_injective()
    _, kern = rank_one.injectivity()
    assert np.linalg.norm(rank_one.apply(kern)) < 1e-12


def test_matrix_units_order():
    units = matrix_units(Shape(2, 3))
    assert units.shape == (6, 2, 3)
    assert units[1][0, 1] == 1.0  # row-major: second unit is E_12
