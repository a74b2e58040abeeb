"""Reproducible generators of ground-truth instances.

Complete isometries are planted in the canonical frame
T(x) = U diag{x, ..., x, S0(x)} V with unitary U, V: the multiplicity-k
copies make the triple-morphism part and S0 is completely contractive by
construction (a convex combination of compressions by unitary slices,
scaled below one), so the ground truth never depends on any solver in
this package.  Gauge data is recorded so tests compare gauge-invariant
quantities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .linmap import MatrixMap, Shape, matrix_units


@dataclass(frozen=True)
class GenSpec:
    """Shapes (m, n) -> (r, s), copy multiplicity, S-block scale, seed."""

    m: int
    n: int
    r: int
    s: int
    multiplicity: int = 1
    contraction_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.n, self.r, self.s) < 1:
            raise ArgumentError("shapes must be positive")
        if self.multiplicity < 0:
            raise ArgumentError("multiplicity must be nonnegative")
        if not (0.0 <= self.contraction_scale < 1.0):
            raise ArgumentError("contraction scale must lie in [0, 1)")
        if self.multiplicity * self.m > self.r or self.multiplicity * self.n > self.s:
            raise ArgumentError("copies do not fit the codomain")

    @property
    def domain(self) -> Shape:
        return Shape(self.m, self.n)

    @property
    def codomain(self) -> Shape:
        return Shape(self.r, self.s)


@dataclass
class GroundTruth:
    """Planted data for one generated instance."""

    u: np.ndarray
    v: np.ndarray
    multiplicity: int
    scale: float
    s0: MatrixMap | None
    p: np.ndarray          # canonical right support of the envelope kernel
    q: np.ndarray          # canonical left support
    partial_isometry: np.ndarray | None = None  # planted domain element


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar-style unitary: QR of a complex Gaussian with phase correction."""
    if dim < 1:
        raise ArgumentError("dimension must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _assemble(spec: GenSpec, u: np.ndarray, v: np.ndarray,
              s0: MatrixMap | None) -> MatrixMap:
    k = spec.multiplicity
    m, n, r, s = spec.m, spec.n, spec.r, spec.s
    action = []
    for idx, e in enumerate(matrix_units(spec.domain)):
        block = np.zeros((r, s), dtype=complex)
        for c in range(k):
            block[c * m:(c + 1) * m, c * n:(c + 1) * n] = e
        if s0 is not None:
            block[k * m:, k * n:] = s0.action[idx]
        action.append(u @ block @ v)
    return MatrixMap(spec.domain, spec.codomain, np.stack(action))


def _planted_supports(spec: GenSpec, v: np.ndarray, u: np.ndarray,
                      s0: MatrixMap | None) -> tuple[np.ndarray, np.ndarray]:
    """Exact kernel supports of the planted instance, from the S block alone.

    The envelope kernel of U diag{x,...,x,S0(x)} V is 0 (+) N2 conjugated
    into place, where N2 is the ideal generated, inside the triple system
    spanned by the S0 word values, by the triple-morphism defects
    S0(x)S0(y)*S0(z) - S0(x y* z).  Its two supports give p and q.
    """
    from . import algebra
    from .algebra import MatrixSubspace

    k = spec.multiplicity
    p = np.zeros((spec.s, spec.s), dtype=complex)
    q = np.zeros((spec.r, spec.r), dtype=complex)
    if s0 is not None:
        amb = s0.codomain
        t2 = algebra.triple_closure(
            MatrixSubspace.span(amb, list(s0.action)), verify=False)
        units = matrix_units(spec.domain)
        defects = []
        for a in units:
            for b in units:
                for c in units:
                    lhs = s0.apply(a) @ s0.apply(b).conj().T @ s0.apply(c)
                    defects.append(lhs - s0.apply(a @ b.conj().T @ c))
        seed = MatrixSubspace.span(amb, defects, scale_floor=1.0)
        n2 = algebra.triple_ideal_closure(t2, seed)
        if n2.dim:
            p2 = algebra.right_support(n2).matrix
            q2 = algebra.left_support(n2).matrix
            p[k * spec.n:, k * spec.n:] = p2
            q[k * spec.m:, k * spec.m:] = q2
    return v.conj().T @ p @ v, u @ q @ u.conj().T


def random_triple_morphism(spec: GenSpec) -> tuple[MatrixMap, GroundTruth]:
    """T(x) = U diag{x, ..., x, 0} V; an exact triple morphism."""
    if spec.multiplicity < 1:
        raise ArgumentError("triple morphism needs multiplicity >= 1")
    rng = np.random.default_rng(spec.seed)
    u = random_unitary(spec.r, rng)
    v = random_unitary(spec.s, rng)
    t = _assemble(spec, u, v, None)
    p, q = _planted_supports(spec, v, u, None)
    return t, GroundTruth(u=u, v=v, multiplicity=spec.multiplicity, scale=0.0,
                          s0=None, p=p, q=q)


def _random_strict_contraction(spec: GenSpec, rng, terms: int | None = None
                               ) -> MatrixMap | None:
    """Convex combination of unitary-slice compressions scaled below one;
    completely contractive by construction."""
    k = spec.multiplicity
    rp, sp = spec.r - k * spec.m, spec.s - k * spec.n
    if rp == 0 or sp == 0 or spec.contraction_scale == 0.0:
        return None
    if terms is None:
        terms = max(2, -(-rp // spec.m), -(-sp // spec.n)) + 1
    dom = spec.domain
    weights = rng.random(terms)
    weights /= weights.sum()
    slices = []
    for t in range(terms):
        big = random_unitary(max(rp, spec.m), rng)[:rp, :spec.m]
        small = random_unitary(max(sp, spec.n), rng)[:spec.n, :sp]
        slices.append((weights[t], big, small))
    action = []
    for e in matrix_units(dom):
        img = sum(w * (a @ e @ b) for w, a, b in slices)
        action.append(spec.contraction_scale * img)
    return MatrixMap(dom, Shape(rp, sp), np.stack(action))


def random_complete_isometry(spec: GenSpec) -> tuple[MatrixMap, GroundTruth]:
    """T(x) = U diag{x, ..., x, S0(x)} V with strictly contractive S0.

    The planted supports p, q are the defect-ideal supports of the S block
    conjugated into place; generically that is the full complement of the
    copy block, and both vanish when the scale is zero (the map is then an
    exact triple morphism).
    """
    if spec.multiplicity < 1:
        raise ArgumentError("complete isometry needs multiplicity >= 1")
    rng = np.random.default_rng(spec.seed)
    u = random_unitary(spec.r, rng)
    v = random_unitary(spec.s, rng)
    s0 = _random_strict_contraction(spec, rng)
    t = _assemble(spec, u, v, s0)
    p, q = _planted_supports(spec, v, u, s0)
    iso = _planted_partial_isometry(spec, rng)
    return t, GroundTruth(u=u, v=v, multiplicity=spec.multiplicity,
                          scale=0.0 if s0 is None else spec.contraction_scale,
                          s0=s0, p=p, q=q, partial_isometry=iso)


def _planted_partial_isometry(spec: GenSpec, rng) -> np.ndarray:
    """A random partial isometry of the domain, for preimage spot tests."""
    m, n = spec.m, spec.n
    w1 = random_unitary(m, rng)
    w2 = random_unitary(n, rng)
    rank = int(rng.integers(1, min(m, n) + 1))
    d = np.zeros((m, n), dtype=complex)
    d[:rank, :rank] = np.eye(rank)
    return w1 @ d @ w2


def random_noncontraction(spec: GenSpec, margin: float = 0.5
                          ) -> tuple[MatrixMap, np.ndarray, float]:
    """A map with a recorded level-1 witness of ratio 1 + margin."""
    rng = np.random.default_rng(spec.seed)
    raw = rng.standard_normal((spec.domain.dim, spec.r, spec.s)) \
        + 1j * rng.standard_normal((spec.domain.dim, spec.r, spec.s))
    t = MatrixMap(spec.domain, spec.codomain, raw)
    x0 = rng.standard_normal((spec.m, spec.n)) + 1j * rng.standard_normal((spec.m, spec.n))
    x0 /= np.linalg.norm(x0, 2)
    ratio = np.linalg.norm(t.apply(x0), 2)
    if ratio < 1e-9:
        raise ArgumentError("degenerate draw; change the seed")
    scaled = t.scale((1.0 + margin) / ratio)
    return scaled, x0, 1.0 + margin


def perturbed_isometry(spec: GenSpec, perturbation: float = 0.05
                       ) -> tuple[MatrixMap, GroundTruth]:
    """A planted complete isometry pushed off the isometry variety by a
    Gaussian action-tensor perturbation of the given norm."""
    t, truth = random_complete_isometry(spec)
    rng = np.random.default_rng(spec.seed + 987654321)
    noise = rng.standard_normal(t.action.shape) + 1j * rng.standard_normal(t.action.shape)
    noise *= perturbation / np.linalg.norm(noise)
    return MatrixMap(t.domain, t.codomain, t.action + noise), truth
