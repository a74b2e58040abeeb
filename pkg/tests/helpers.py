"""Independent oracles and small utilities shared by the test modules.

Everything here deliberately avoids the library's own closure and
certification code paths: closures are grown by exhaustive per-round
triple loops over numpy ranks, norms come straight from SVD, positivity
from direct amplified evaluation.
"""

import numpy as np

from isolab.linmap import MatrixMap, Shape


def unit(m, n, i, j):
    e = np.zeros((m, n), dtype=complex)
    e[i, j] = 1.0
    return e


def dag(x):
    return x.conj().T


def rand_mat(rng, m, n, scale=1.0):
    return scale * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))


def span_rank(mats, tol=1e-9):
    stack = np.stack([np.asarray(m).reshape(-1) for m in mats])
    sv = np.linalg.svd(stack, compute_uv=False)
    if len(sv) == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def orth_basis(mats, tol=1e-9):
    """Orthonormal basis of a span via SVD (independent of the library)."""
    stack = np.stack([np.asarray(m).reshape(-1) for m in mats])
    u, sv, vh = np.linalg.svd(stack, full_matrices=False)
    keep = sv > tol * max(sv[0], 1e-300)
    return vh[keep]


def naive_triple_closure(seed_mats, max_rounds=50, tol=1e-9, floor=1.0):
    """Brute-force closure: every round multiplies all current basis
    triples x y* z and extends the span until the dimension stabilizes."""
    shape = np.asarray(seed_mats[0]).shape
    basis = orth_basis(seed_mats, tol).reshape(-1, *shape)
    for _ in range(max_rounds):
        words = []
        for x in basis:
            for y in basis:
                for z in basis:
                    words.append(x @ dag(y) @ z)
        combined = list(basis) + words
        new_basis = _floored_basis(combined, tol, floor).reshape(-1, *shape)
        if new_basis.shape[0] == basis.shape[0]:
            return new_basis
        basis = new_basis
    raise AssertionError("closure did not stabilize")


def _floored_basis(mats, tol, floor):
    """SVD basis with an absolute singular-value floor so that noise on
    exactly-cancelling products does not open fake directions."""
    stack = np.stack([np.asarray(m).reshape(-1) for m in mats])
    u, sv, vh = np.linalg.svd(stack, full_matrices=False)
    keep = sv > tol * max(sv[0], floor)
    return vh[keep]


def naive_star_algebra_closure(seed_mats, max_rounds=50, tol=1e-9):
    shape = np.asarray(seed_mats[0]).shape
    mats = [np.asarray(m, dtype=complex) for m in seed_mats]
    mats += [dag(m) for m in mats]
    basis = orth_basis(mats, tol).reshape(-1, *shape)
    for _ in range(max_rounds):
        words = [x @ y for x in basis for y in basis]
        combined = list(basis) + [dag(b) for b in basis] + words
        new_basis = _floored_basis(combined, tol, 1.0).reshape(-1, *shape)
        if new_basis.shape[0] == basis.shape[0]:
            return new_basis
        basis = new_basis
    raise AssertionError("closure did not stabilize")


def amplified_ratio(t: MatrixMap, level: int, x: np.ndarray) -> float:
    nx = np.linalg.norm(x, 2)
    return np.linalg.norm(t.apply_amplified(level, x), 2) / nx


def map_from_blocks(m, n, blocks_fn, rows, cols):
    """MatrixMap from a function on matrix units given codomain size."""
    return MatrixMap.from_function(Shape(m, n), Shape(rows, cols), blocks_fn)


def diag_embed(x, *scales):
    """diag(s0*x, s1*x, ...) stacked block-diagonally."""
    m, n = x.shape
    k = len(scales)
    out = np.zeros((k * m, k * n), dtype=complex)
    for i, s in enumerate(scales):
        out[i * m:(i + 1) * m, i * n:(i + 1) * n] = s * x
    return out
