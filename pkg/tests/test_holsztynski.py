import numpy as np
import pytest

from isolab import holsztynski as H


def _cm(rows):
    return H.CommutativeMap(np.array(rows, dtype=complex))


def test_contractive_identity():
    assert H.contractive(_cm(np.eye(3)))


def test_contractive_rejects_heavy_row():
    assert not H.contractive(_cm([[0.6, 0.6], [1.0, 0.0]]))


def test_contractive_mixed_rows():
    assert H.contractive(_cm([[1, 0, 0], [0, -1, 0], [0.5, 0.5, 0]]))


def test_certificate_identity():
    cert = H.extract_certificate(_cm(np.eye(2)))
    assert cert.e_set == [0, 1]
    assert cert.phi == {0: 0, 1: 1}
    assert all(g == 1.0 for g in cert.gamma.values())
    assert cert.surjective


def test_certificate_spec_rows():
    cert = H.extract_certificate(_cm([[1, 0], [0, -1], [0.5, 0.5]]))
    assert cert.e_set == [0, 1]
    assert cert.gamma[0] == 1.0 and cert.gamma[1] == -1.0
    assert cert.phi == {0: 0, 1: 1}
    assert cert.surjective


def test_certificate_collapsing_map_not_surjective():
    cert = H.extract_certificate(_cm([[1, 0], [1, 0]]))
    assert cert.e_set == [0, 1]
    assert set(cert.phi.values()) == {0}
    assert not cert.surjective
    assert H.uncovered_points(_cm([[1, 0], [1, 0]])) == [1]


def test_verdicts():
    assert H.isometry_verdict(_cm(np.eye(3)))
    assert H.isometry_verdict(_cm([[1, 0], [0, -1], [0.5, 0.5]]))
    assert not H.isometry_verdict(_cm([[1, 0], [1, 0]]))


def test_brute_force_agrees_on_spec_examples():
    assert H.brute_force_isometry(_cm(np.eye(2)))
    assert H.brute_force_isometry(_cm([[1, 0], [0, -1], [0.5, 0.5]]))
    assert not H.brute_force_isometry(_cm([[1, 0], [1, 0]]))


def test_brute_force_catches_vertex_only_norm_preservation():
    # every +-1 vector maps to sup-norm one, yet e_2 loses norm: the
    # coordinate probes are what make the oracle decisive
    cm = _cm([[0.5, 0.5], [0.5, -0.5]])
    assert H.contractive(cm)
    assert not H.brute_force_isometry(cm)
    assert not H.isometry_verdict(cm)


def test_verdict_matches_brute_force_on_random_real_instances():
    rng = np.random.default_rng(130)
    for trial in range(40):
        k1 = int(rng.integers(1, 4))
        k2 = int(rng.integers(k1, 5))
        if trial % 3 == 0:
            cm, _ = H.synthesize_composition_map(k1, k2, rng, real=True)
            mat = np.array(cm.matrix)
            if trial % 6 == 0 and k1 > 1:
                # destroy surjectivity by clearing one covered column
                col = next(iter(H.extract_certificate(cm).phi.values()))
                mat[:, col] *= 0.4
            cm = H.CommutativeMap(mat)
        else:
            raw = rng.standard_normal((k2, k1))
            sums = np.abs(raw).sum(axis=1, keepdims=True)
            cm = H.CommutativeMap((raw / np.maximum(sums, 1.0)).astype(complex))
        assert H.isometry_verdict(cm) == H.brute_force_isometry(cm)


def test_synthesized_certificates_recovered_exactly():
    rng = np.random.default_rng(131)
    for _ in range(20):
        k1 = int(rng.integers(2, 6))
        k2 = int(rng.integers(k1, 8))
        cm, planted = H.synthesize_composition_map(k1, k2, rng)
        rec = H.extract_certificate(cm)
        assert rec.e_set == planted.e_set
        assert rec.phi == planted.phi
        assert all(abs(rec.gamma[y] - planted.gamma[y]) < 1e-12 for y in rec.phi)
        assert H.isometry_verdict(cm)


def test_resynthesis_residual():
    rng = np.random.default_rng(132)
    cm, _ = H.synthesize_composition_map(3, 6, rng)
    cert = H.extract_certificate(cm)
    for _ in range(10):
        f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert cert.resynthesize_residual(cm, f) < 1e-12 * max(1, np.abs(f).max())


def test_e_monotone_under_tolerance():
    rng = np.random.default_rng(133)
    cm, _ = H.synthesize_composition_map(3, 6, rng)
    noisy = H.CommutativeMap(cm.matrix + 1e-6 * rng.standard_normal(cm.matrix.shape))
    big = set(H.extract_certificate(noisy, 1e-4).e_set)
    small = set(H.extract_certificate(noisy, 1e-8).e_set)
    assert small.issubset(big)
