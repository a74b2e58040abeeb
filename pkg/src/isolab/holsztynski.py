"""Isometries between finite commutative C*-algebras (functions on finite sets).

A linear map T : l^inf_k1 -> l^inf_k2 is an isometry exactly when it is
contractive and some set E of output points reads off input values up to
unimodular weights: T(f)(y) = gamma(y) f(phi(y)) on E with phi onto.  On a
finite set that certificate is recovered by row inspection: a contractive
row supporting an (almost) unimodular entry has no room for anything else.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .linmap import DEFAULT_TOL, as_matrix


@dataclass(frozen=True)
class CommutativeMap:
    """T : l^inf_k1 -> l^inf_k2 stored as its (k2, k1) matrix; row y is the
    functional f -> T(f)(y).  Indices are 0-based throughout."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def k1(self) -> int:
        return self.matrix.shape[1]

    @property
    def k2(self) -> int:
        return self.matrix.shape[0]

    def apply(self, f) -> np.ndarray:
        vec = np.asarray(f, dtype=complex)
        if vec.shape != (self.k1,):
            raise ArgumentError(f"expected a vector of length {self.k1}")
        return self.matrix @ vec


@dataclass
class HolsztynskiCertificate:
    """The set E, weight gamma and point map phi with
    T(f)(y) = gamma(y) f(phi(y)) for y in E (0-based indices)."""

    e_set: list[int]
    gamma: dict[int, complex]
    phi: dict[int, int]
    k1: int
    k2: int

    @property
    def surjective(self) -> bool:
        return set(self.phi.values()) == set(range(self.k1))

    def resynthesize_residual(self, cm: CommutativeMap, f) -> float:
        """max_{y in E} |T(f)(y) - gamma(y) f(phi(y))|."""
        tf = cm.apply(f)
        fv = np.asarray(f, dtype=complex)
        worst = 0.0
        for y in self.e_set:
            worst = max(worst, abs(tf[y] - self.gamma[y] * fv[self.phi[y]]))
        return worst


def contractive(cm: CommutativeMap, tol: float = DEFAULT_TOL) -> bool:
    """Row criterion for the l^inf -> l^inf operator norm."""
    row_sums = np.abs(cm.matrix).sum(axis=1)
    return bool(np.all(row_sums <= 1.0 + tol))


def extract_certificate(cm: CommutativeMap, tol: float = DEFAULT_TOL) -> HolsztynskiCertificate:
    """Classify rows: y lands in E when row y has exactly one entry within
    ``tol`` of the unit circle and all others of modulus at most ``tol``."""
    e_set: list[int] = []
    gamma: dict[int, complex] = {}
    phi: dict[int, int] = {}
    mods = np.abs(cm.matrix)
    for y in range(cm.k2):
        big = np.flatnonzero(mods[y] >= 1.0 - tol)
        if len(big) != 1:
            # two near-unimodular entries force a row sum above one; that
            # cannot happen in a contractive row while tol < 1/3
            assert not (len(big) > 1 and tol < 1 / 3
                        and mods[y].sum() <= 1.0 + tol), "tie in a contractive row"
            continue
        rest = np.delete(mods[y], big[0])
        if rest.size and rest.max() > tol:
            continue
        e_set.append(y)
        gamma[y] = complex(cm.matrix[y, big[0]])
        phi[y] = int(big[0])
    return HolsztynskiCertificate(e_set=e_set, gamma=gamma, phi=phi,
                                  k1=cm.k1, k2=cm.k2)


def isometry_verdict(cm: CommutativeMap, tol: float = DEFAULT_TOL) -> bool:
    """T is an isometry iff it is contractive and the certificate's point
    map covers every input point."""
    return contractive(cm, tol) and extract_certificate(cm, tol).surjective


def uncovered_points(cm: CommutativeMap, tol: float = DEFAULT_TOL) -> list[int]:
    cert = extract_certificate(cm, tol)
    return sorted(set(range(cm.k1)) - set(cert.phi.values()))


def brute_force_isometry(cm: CommutativeMap, tol: float = DEFAULT_TOL,
                         phases: int = 16) -> bool:
    """Enumeration oracle, independent of the row classification.

    Checks contractivity by evaluating on sign/phase vectors (exact for
    real data with +-1 signs, discretized for complex), and norm
    attainment on every coordinate direction via the coordinate vectors
    e_j.  Oracle-only: quadratic in 2^k1, not used by the verdict path.
    """
    real_data = bool(np.all(np.abs(cm.matrix.imag) < 1e-14))
    if real_data:
        alphabet = [1.0, -1.0]
    else:
        alphabet = [np.exp(2j * np.pi * t / phases) for t in range(phases)]
    for signs in itertools.product(alphabet, repeat=cm.k1):
        f = np.array(signs, dtype=complex)
        norm = np.abs(cm.apply(f)).max()
        if norm > 1.0 + tol + (0.0 if real_data else np.pi / phases):
            return False  # not even contractive
        if real_data and norm < 1.0 - tol:
            return False  # a unit vector loses norm
    for j in range(cm.k1):
        f = np.zeros(cm.k1, dtype=complex)
        f[j] = 1.0
        if np.abs(cm.apply(f)).max() < 1.0 - tol:
            return False  # direction j is not attained
    return True


def synthesize_composition_map(k1: int, k2: int, rng: np.random.Generator,
                               real: bool = False,
                               junk_budget: float = 0.8
                               ) -> tuple[CommutativeMap, HolsztynskiCertificate]:
    """Random planted instance: surjective phi on a random E, unimodular
    gamma, and strictly-contractive junk rows that cannot enter E."""
    if k2 < k1:
        raise ArgumentError("need k2 >= k1 for a surjective point map")
    e_size = int(rng.integers(k1, k2 + 1))
    e_rows = sorted(rng.permutation(k2)[:e_size].tolist())
    targets = rng.permutation(k1).tolist()
    extra = rng.integers(0, k1, size=e_size - k1).tolist()
    assignment = targets + extra
    rng.shuffle(assignment)

    mat = np.zeros((k2, k1), dtype=complex)
    gamma: dict[int, complex] = {}
    phi: dict[int, int] = {}
    for row, col in zip(e_rows, assignment):
        g = rng.choice([1.0, -1.0]) if real else np.exp(2j * np.pi * rng.random())
        mat[row, col] = g
        gamma[row] = complex(g)
        phi[row] = int(col)
    for row in range(k2):
        if row in phi:
            continue
        weights = rng.random(k1)
        weights = junk_budget * rng.random() * weights / max(weights.sum(), 1e-12)
        signs = rng.choice([1.0, -1.0], size=k1) if real else \
            np.exp(2j * np.pi * rng.random(k1))
        mat[row] = weights * signs
    cert = HolsztynskiCertificate(e_set=e_rows, gamma=gamma, phi=phi, k1=k1, k2=k2)
    return CommutativeMap(mat), cert
