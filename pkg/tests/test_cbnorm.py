import numpy as np
import pytest

from helpers import amplified_ratio, diag_embed, rand_mat, unit
from isolab import cbnorm
from isolab.errors import DimensionError
from isolab.gen import GenSpec, random_complete_isometry, random_unitary
from isolab.linmap import MatrixMap, Shape, matrix_units


# -- operator norm -----------------------------------------------------------


def test_op_norm_identity():
    assert cbnorm.op_norm(np.eye(3)) == pytest.approx(1.0)


def test_op_norm_diagonal():
    assert cbnorm.op_norm(np.diag([2.0, 1.0])) == pytest.approx(2.0)


def test_op_norm_nilpotent():
    # singular values of [[0,2],[0,0]] are {2, 0}
    assert cbnorm.op_norm(np.array([[0, 2], [0, 0]])) == pytest.approx(2.0)


def test_op_norm_unitary_invariance():
    rng = np.random.default_rng(20)
    for _ in range(10):
        x = rand_mat(rng, 3, 4)
        u = random_unitary(3, rng)
        v = random_unitary(4, rng)
        assert cbnorm.op_norm(u @ x @ v) == pytest.approx(cbnorm.op_norm(x), rel=1e-12)


def test_op_norm_submultiplicative():
    rng = np.random.default_rng(21)
    for _ in range(10):
        a, b = rand_mat(rng, 3, 3), rand_mat(rng, 3, 3)
        assert cbnorm.op_norm(a @ b) <= cbnorm.op_norm(a) * cbnorm.op_norm(b) + 1e-12


# -- Choi matrices -----------------------------------------------------------


def test_choi_block_reconstruction():
    rng = np.random.default_rng(22)
    t = MatrixMap(Shape(2, 3), Shape(3, 2), rand_mat(rng, 6, 6).reshape(6, 3, 2))
    c = cbnorm.choi_matrix(t)
    act4 = t.action.reshape(2, 3, 3, 2)
    for i in range(2):
        for j in range(3):
            assert np.array_equal(c[i * 3:(i + 1) * 3, j * 2:(j + 1) * 2], act4[i, j])
    back = cbnorm.map_from_choi(t.domain, t.codomain, c)
    assert np.array_equal(back.action, t.action)


def test_cp_identity():
    ok, eig = cbnorm.is_completely_positive(MatrixMap.identity(Shape(2, 2)))
    assert ok
    assert eig == pytest.approx(0.0, abs=1e-12)


def test_cp_transpose_fails():
    # the Choi matrix of the transpose is the swap, with eigenvalue -1
    ok, eig = cbnorm.is_completely_positive(MatrixMap.transpose_map(2))
    assert not ok
    assert eig == pytest.approx(-1.0, abs=1e-12)


def test_cp_direct_sum_of_identities():
    t = MatrixMap.from_function(Shape(2, 2), Shape(4, 4),
                                lambda e: diag_embed(e, 1.0, 1.0))
    ok, _ = cbnorm.is_completely_positive(t)
    assert ok


def test_cp_needs_square_shapes():
    rng = np.random.default_rng(23)
    t = MatrixMap(Shape(2, 3), Shape(2, 2), rand_mat(rng, 6, 4).reshape(6, 2, 2))
    with pytest.raises(DimensionError):
        cbnorm.is_completely_positive(t)


def test_cp_agrees_with_amplified_probes():
    # brute force: apply T_k to random PSD probes and test positivity
    rng = np.random.default_rng(24)
    n = 2
    for trial in range(20):
        mix = trial / 19.0
        u = random_unitary(n, rng)
        cp_part = MatrixMap.from_function(Shape(n, n), Shape(n, n),
                                          lambda e: u @ e @ u.conj().T)
        t = cp_part.scale(1 - mix).add(MatrixMap.transpose_map(n).scale(mix))
        choi_ok, _ = cbnorm.is_completely_positive(t, 1e-8)
        brute_ok = True
        for k in range(1, n + 2):
            amp_dim = k * n
            probes = [rand_mat(rng, amp_dim, 2)] + \
                     [rand_mat(rng, amp_dim, amp_dim) for _ in range(5)]
            for b in probes:
                x = b @ b.conj().T
                out = t.apply_amplified(k, x)
                lo = np.linalg.eigvalsh((out + out.conj().T) / 2)[0]
                if lo < -1e-8 * max(1.0, np.linalg.norm(x)):
                    brute_ok = False
            # the maximally entangled probe recovers the Choi spectrum
            if k == n:
                omega = np.zeros((amp_dim, 1), dtype=complex)
                for i in range(n):
                    omega[i * n + i] = 1.0
                x = omega @ omega.conj().T
                out = t.apply_amplified(k, x)
                if np.linalg.eigvalsh((out + out.conj().T) / 2)[0] < -1e-8:
                    brute_ok = False
        assert choi_ok == brute_ok


# -- falsifier ---------------------------------------------------------------


def test_falsifier_identity_clean():
    rep = cbnorm.amplified_isometry_falsifier(MatrixMap.identity(Shape(2, 2)), level=2)
    assert not rep.found_violation
    assert rep.max_ratio.lower == pytest.approx(1.0, abs=1e-9)
    assert rep.min_ratio.upper == pytest.approx(1.0, abs=1e-9)


def test_falsifier_scalar_contraction():
    rep = cbnorm.amplified_isometry_falsifier(
        MatrixMap.identity(Shape(2, 2)).scale(0.5), level=1)
    assert rep.found_violation
    assert rep.violation_ratio == pytest.approx(0.5, abs=1e-6)


def test_falsifier_transpose_level_two():
    rep = cbnorm.amplified_isometry_falsifier(MatrixMap.transpose_map(2), level=2)
    assert rep.found_violation
    assert rep.max_ratio.lower >= 2.0 - 1e-6
    # the witness really attains the ratio
    t = MatrixMap.transpose_map(2)
    assert amplified_ratio(t, 2, rep.max_ratio.witness) >= 2.0 - 1e-6


def test_falsifier_levels_monotone():
    rng = np.random.default_rng(25)
    t = MatrixMap(Shape(2, 2), Shape(3, 3), rand_mat(rng, 4, 9).reshape(4, 3, 3))
    values = [cbnorm.amplified_isometry_falsifier(t, level=k, rng_seed=1).max_ratio.lower
              for k in (1, 2, 3)]
    for lo, hi in zip(values, values[1:]):
        assert hi >= lo - 1e-9


# -- complete contractivity --------------------------------------------------


def test_cc_identity_certified_yes():
    cert = cbnorm.is_completely_contractive(MatrixMap.identity(Shape(2, 2)))
    assert cert.verdict == "certified_yes"
    assert cert.cb_upper_bound <= 1.0 + 1e-6
    # the diagonal corners are honest CP certificates
    for choi in (cert.phi1_choi, cert.phi2_choi):
        assert np.linalg.eigvalsh((choi + choi.conj().T) / 2)[0] > -1e-6


def test_cc_doubled_identity_certified_no():
    cert = cbnorm.is_completely_contractive(MatrixMap.identity(Shape(2, 2)).scale(2.0))
    assert cert.verdict == "certified_no"
    assert cert.witness_ratio >= 2.0 - 1e-6


def test_cc_transpose_certified_no():
    cert = cbnorm.is_completely_contractive(MatrixMap.transpose_map(2))
    assert cert.verdict == "certified_no"
    assert cert.witness_ratio >= 2.0 - 1e-6


def test_cc_generated_isometries_never_refuted():
    for seed in range(6):
        spec = GenSpec(2, 2, 4, 5, multiplicity=1,
                       contraction_scale=0.3 * (seed % 3), seed=30 + seed)
        t, _ = random_complete_isometry(spec)
        cert = cbnorm.is_completely_contractive(t, max_iters=800)
        assert cert.verdict != "certified_no"


def test_cc_feasibility_matches_structure():
    # cross-validation: a strict contraction padded into a corner is
    # completely contractive and the feasibility route certifies it
    t = MatrixMap.from_function(Shape(2, 2), Shape(2, 2), lambda e: 0.7 * e)
    cert = cbnorm.is_completely_contractive(t)
    assert cert.verdict == "certified_yes"
