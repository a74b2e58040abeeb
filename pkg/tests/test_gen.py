import numpy as np
import pytest

from helpers import dag
from isolab import cbnorm, decompose
from isolab.envelope import build_envelope, verify_theta_triple
from isolab.errors import ArgumentError
from isolab.gen import GenSpec, perturbed_isometry, random_complete_isometry, \
    random_noncontraction, random_triple_morphism, random_unitary
from isolab.linmap import matrix_units


def test_random_unitary_scalar():
    u = random_unitary(1, np.random.default_rng(0))
    assert abs(abs(u[0, 0]) - 1.0) < 1e-12


def test_random_unitary_deterministic():
    a = random_unitary(3, 42)
    b = random_unitary(3, 42)
    assert np.array_equal(a, b)


def test_random_unitary_orthonormal_sweep():
    rng = np.random.default_rng(1)
    for _ in range(100):
        d = int(rng.integers(1, 6))
        u = random_unitary(d, rng)
        assert np.linalg.norm(dag(u) @ u - np.eye(d)) < 1e-12


def test_spec_validation():
    with pytest.raises(ArgumentError):
        GenSpec(2, 2, 3, 4, multiplicity=2)  # copies do not fit
    with pytest.raises(ArgumentError):
        GenSpec(2, 2, 4, 4, contraction_scale=1.0)


def test_triple_morphism_exact_identity():
    t, truth = random_triple_morphism(GenSpec(2, 2, 5, 5, multiplicity=2, seed=7))
    units = matrix_units(t.domain)
    for a in units[:2]:
        for b in units[:2]:
            for c in units[:2]:
                lhs = t.apply(a @ dag(b) @ c)
                rhs = t.apply(a) @ dag(t.apply(b)) @ t.apply(c)
                assert np.linalg.norm(lhs - rhs) < 1e-10


def test_triple_morphism_corner_embedding_when_frames_trivial():
    t, truth = random_triple_morphism(GenSpec(2, 2, 4, 4, multiplicity=1, seed=8))
    # with the planted frames removed the map is the corner embedding
    for k, e in enumerate(matrix_units(t.domain)):
        recovered = dag(truth.u) @ t.action[k] @ dag(truth.v)
        expected = np.zeros((4, 4), dtype=complex)
        expected[:2, :2] = e
        assert np.allclose(recovered, expected, atol=1e-12)


def test_triple_morphism_passes_envelope_checks():
    t, _ = random_triple_morphism(GenSpec(2, 2, 6, 6, multiplicity=2, seed=9))
    env = build_envelope(t)
    rep = verify_theta_triple(env)
    assert rep["ok"]
    assert env.p.rank == 0 and env.q.rank == 0


def test_complete_isometry_determinism():
    spec = GenSpec(2, 2, 5, 6, multiplicity=1, contraction_scale=0.5, seed=10)
    t1, g1 = random_complete_isometry(spec)
    t2, g2 = random_complete_isometry(spec)
    assert np.array_equal(t1.action, t2.action)
    assert np.array_equal(g1.p, g2.p)


def test_complete_isometry_scale_zero_degenerates():
    t, truth = random_complete_isometry(
        GenSpec(2, 2, 4, 4, multiplicity=1, contraction_scale=0.0, seed=11))
    assert truth.s0 is None
    assert np.linalg.norm(truth.p) == 0.0


def test_complete_isometries_certified():
    ok = 0
    for seed in range(12):
        spec = GenSpec(2, 2, 4 + seed % 4, 4 + (seed + 2) % 4, multiplicity=1,
                       contraction_scale=0.1 + 0.07 * seed, seed=200 + seed)
        t, truth = random_complete_isometry(spec)
        dec = decompose.analyze(t)
        assert dec.verdict != decompose.NOT_COMPLETE_ISOMETRY
        if dec.verdict == decompose.COMPLETE_ISOMETRY:
            ok += 1
            assert np.linalg.norm(dec.p.matrix - truth.p) < 1e-7
    assert ok >= 11


def test_planted_partial_isometry_is_one():
    _, truth = random_complete_isometry(
        GenSpec(3, 2, 5, 5, multiplicity=1, contraction_scale=0.5, seed=12))
    z = truth.partial_isometry
    assert np.linalg.norm(z @ dag(z) @ z - z) < 1e-12


def test_noncontraction_carries_its_witness():
    t, x0, ratio = random_noncontraction(GenSpec(2, 2, 4, 4, seed=13))
    attained = np.linalg.norm(t.apply(x0), 2) / np.linalg.norm(x0, 2)
    assert attained == pytest.approx(ratio, rel=1e-9)
    rep = cbnorm.amplified_isometry_falsifier(t, level=1, rng_seed=0)
    assert rep.max_ratio.lower >= ratio - 1e-6


def test_perturbed_isometry_norm():
    base, _ = random_complete_isometry(
        GenSpec(2, 2, 4, 4, multiplicity=1, contraction_scale=0.5, seed=14))
    bumped, _ = perturbed_isometry(
        GenSpec(2, 2, 4, 4, multiplicity=1, contraction_scale=0.5, seed=14), 0.07)
    assert np.linalg.norm(bumped.action - base.action) == pytest.approx(0.07, rel=1e-9)
