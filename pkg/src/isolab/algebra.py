"""Subspaces of matrix spaces and their algebraic closures.

Everything here is the finite-dimensional shadow of standard C*-algebra
machinery: triple systems (subspaces with Z Z* Z inside Z), *-algebras,
ideals and their support projections, and quotient compressions
x -> (1-f) x (1-e).  In finite dimensions the second dual of an algebra
is the algebra itself and contractive approximate identities converge to
the support unit, so supports are honest spectral projections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, StructureError
from .linmap import DEFAULT_TOL, Shape, as_matrix, dagger, frob


def gram_schmidt(vectors: np.ndarray, tol: float = DEFAULT_TOL,
                 against: np.ndarray | None = None,
                 floors: np.ndarray | None = None) -> np.ndarray:
    """Orthonormalize row vectors in insertion order, dropping dependents.

    ``against`` optionally holds rows that are already orthonormal; new
    directions are taken orthogonal to them but not returned with them.
    A candidate is accepted when its residual exceeds ``tol`` times its
    scale; the scale is the candidate's own norm, raised to ``floors``
    when given.  Floors matter for closure words: a product whose exact
    value is zero carries rounding noise of the factors' magnitude, and
    measuring the residual against that magnitude (not against the noise)
    keeps such words out of the basis.  Two projection passes keep the
    result orthonormal to machine precision.
    """
    vectors = np.asarray(vectors, dtype=complex)
    dim = vectors.shape[1] if vectors.ndim == 2 else 0
    base = np.zeros((0, dim), dtype=complex) if against is None else np.asarray(against)
    if vectors.shape[0] == 0:
        return np.zeros((0, dim), dtype=complex)

    scales = np.linalg.norm(vectors, axis=1)
    if floors is not None:
        scales = np.maximum(scales, floors)
    # batch-project everything against the fixed part first
    resid = vectors
    for _ in range(2):
        if base.shape[0]:
            resid = resid - (resid @ base.conj().T) @ base
    keep = np.linalg.norm(resid, axis=1) > tol * scales
    kept = np.zeros((0, dim), dtype=complex)
    for v, scale, ok in zip(resid, scales, keep):
        if not ok:
            continue
        w = v
        for _ in range(2):
            if kept.shape[0]:
                w = w - (kept.conj() @ w) @ kept
        nrm = np.linalg.norm(w)
        if nrm > tol * scale:
            kept = np.vstack([kept, w / nrm])
    return kept


class MatrixSubspace:
    """A linear subspace of M_{rows,cols} with an orthonormal basis.

    The basis is orthonormal in the trace (Frobenius) inner product.
    Non-orthonormal spanning sets are orthonormalized on construction by
    Gram-Schmidt over insertion order; dependent inputs are dropped.
    """

    __slots__ = ("ambient", "_vecs")

    def __init__(self, ambient: Shape, basis_vecs: np.ndarray):
        self.ambient = ambient
        vecs = np.asarray(basis_vecs, dtype=complex).reshape(-1, ambient.dim)
        self._vecs = vecs

    @classmethod
    def span(cls, ambient: Shape, mats, tol: float = DEFAULT_TOL,
             scale_floor: float | None = None) -> "MatrixSubspace":
        """Span of ``mats``.  ``scale_floor`` sets the magnitude against
        which rank decisions are made (see :func:`gram_schmidt`); pass it
        when the inputs are products that may cancel exactly."""
        mats = [as_matrix(m, ambient) for m in mats]
        if not mats:
            return cls.zero(ambient)
        stacked = np.stack([m.reshape(-1) for m in mats])
        floors = None if scale_floor is None else np.full(len(mats), scale_floor)
        return cls(ambient, gram_schmidt(stacked, tol, floors=floors))

    @classmethod
    def zero(cls, ambient: Shape) -> "MatrixSubspace":
        return cls(ambient, np.zeros((0, ambient.dim), dtype=complex))

    @classmethod
    def full(cls, ambient: Shape) -> "MatrixSubspace":
        return cls(ambient, np.eye(ambient.dim, dtype=complex))

    # -- basic queries -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self._vecs.shape[0]

    def basis(self) -> np.ndarray:
        """Basis as a (dim, rows, cols) array."""
        return self._vecs.reshape(self.dim, self.ambient.rows, self.ambient.cols)

    def basis_vectors(self) -> np.ndarray:
        """Basis as vectorized rows, shape (dim, rows*cols)."""
        return self._vecs

    def coefficients(self, x) -> np.ndarray:
        v = as_matrix(x, self.ambient).reshape(-1)
        return self._vecs.conj() @ v

    def project(self, x) -> np.ndarray:
        v = as_matrix(x, self.ambient).reshape(-1)
        return ((self._vecs.conj() @ v) @ self._vecs).reshape(
            self.ambient.rows, self.ambient.cols)

    def residual(self, x) -> float:
        xm = as_matrix(x, self.ambient)
        return frob(xm - self.project(xm))

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        xm = as_matrix(x, self.ambient)
        nrm = frob(xm)
        if nrm == 0.0:
            return True
        return self.residual(xm) <= tol * nrm

    def contains_all(self, mats, tol: float = DEFAULT_TOL) -> bool:
        return all(self.contains(m, tol) for m in mats)

    # -- lattice operations --------------------------------------------------

    def add(self, other: "MatrixSubspace", tol: float = DEFAULT_TOL) -> "MatrixSubspace":
        if other.ambient != self.ambient:
            raise ArgumentError("ambient shapes differ")
        return MatrixSubspace(self.ambient, gram_schmidt(
            np.vstack([self._vecs, other._vecs]), tol))

    def intersect(self, other: "MatrixSubspace", tol: float = DEFAULT_TOL) -> "MatrixSubspace":
        """Intersection via the nullspace of the stacked complement projectors."""
        if other.ambient != self.ambient:
            raise ArgumentError("ambient shapes differ")
        d = self.ambient.dim
        p1 = self._vecs.conj().T @ self._vecs
        p2 = other._vecs.conj().T @ other._vecs
        stacked = np.vstack([np.eye(d) - p1, np.eye(d) - p2])
        _, sv, vh = np.linalg.svd(stacked)
        null = [vh[i].conj() for i in range(d) if i >= len(sv) or sv[i] <= tol]
        if not null:
            return MatrixSubspace.zero(self.ambient)
        return MatrixSubspace(self.ambient, gram_schmidt(np.stack(null), tol))

    def equals(self, other: "MatrixSubspace", tol: float = DEFAULT_TOL) -> bool:
        if self.dim != other.dim:
            return False
        return all(other.contains(b, tol) for b in self.basis())

    def __repr__(self):
        return f"MatrixSubspace(dim={self.dim} in M_{self.ambient})"


@dataclass(frozen=True)
class Projection:
    """A Hermitian idempotent in a square matrix algebra."""

    ambient: Shape
    matrix: np.ndarray

    def __post_init__(self):
        if not self.ambient.is_square:
            raise ArgumentError("projection ambient must be square")
        m = as_matrix(self.matrix, self.ambient)
        if frob(m - dagger(m)) > 1e-9 * max(1.0, frob(m)):
            raise StructureError("projection is not Hermitian")
        if frob(m @ m - m) > 1e-9 * max(1.0, frob(m)):
            raise StructureError("projection is not idempotent")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def zero(cls, dim: int) -> "Projection":
        return cls(Shape(dim, dim), np.zeros((dim, dim), dtype=complex))

    @classmethod
    def identity(cls, dim: int) -> "Projection":
        return cls(Shape(dim, dim), np.eye(dim, dtype=complex))

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.matrix).real))

    def complement(self) -> np.ndarray:
        return np.eye(self.ambient.rows, dtype=complex) - self.matrix

    def range_frame(self) -> np.ndarray:
        """Orthonormal columns spanning the range."""
        w, v = np.linalg.eigh(self.matrix)
        return v[:, w > 0.5]


# ---------------------------------------------------------------------------
# closures
# ---------------------------------------------------------------------------


def _pairwise_products(left: np.ndarray, right: np.ndarray, star_left: bool) -> np.ndarray:
    """All products a_i^* b_j (star_left) or a_i b_j^* stacked flat."""
    if star_left:
        prods = np.einsum("ipq,jpr->ijqr", left.conj(), right)
    else:
        prods = np.einsum("ipq,jrq->ijpr", left, right.conj())
    return prods.reshape(-1, prods.shape[2], prods.shape[3])


def triple_closure(seed: MatrixSubspace, tol: float = DEFAULT_TOL,
                   verify: bool = True) -> MatrixSubspace:
    """Smallest subspace containing ``seed`` closed under (x,y,z) -> x y* z.

    Iterates span growth: every triple word peels as (shorter word) g* h
    with generators g, h, so each round multiplies the current frontier by
    all generator pairs on the right.  Terminates because the dimension is
    bounded by the ambient dimension.
    """
    if seed.dim == 0:
        raise ArgumentError("triple_closure needs a nonempty seed")
    amb = seed.ambient
    gens = seed.basis()
    gnorm = np.linalg.norm(gens.reshape(gens.shape[0], -1), axis=1)
    pair_floor = np.outer(gnorm, gnorm).reshape(-1)
    vecs = seed.basis_vectors()
    frontier = seed.basis()
    while frontier.shape[0] > 0:
        # candidates w g* h for w in frontier, g, h generators
        wg = np.einsum("wpq,grq->wgpr", frontier, gens.conj())
        cand = np.einsum("wgpr,hrt->wghpt", wg, gens).reshape(-1, amb.dim)
        floors = np.tile(pair_floor, frontier.shape[0])
        new = gram_schmidt(cand, tol, against=vecs, floors=floors)
        if new.shape[0] == 0:
            break
        vecs = np.vstack([vecs, new])
        frontier = new.reshape(-1, amb.rows, amb.cols)
    out = MatrixSubspace(amb, vecs)
    if verify:
        _check_triple_closed(out, tol)
    return out


def _check_triple_closed(z: MatrixSubspace, tol: float, max_triples: int = 512):
    """Spot-check Z Z* Z inside Z on a deterministic sample of basis triples."""
    b = z.basis()
    d = z.dim
    if d == 0:
        return
    if d ** 3 <= max_triples:
        triples = [(i, j, k) for i in range(d) for j in range(d) for k in range(d)]
    else:
        rng = np.random.default_rng(7)
        triples = rng.integers(0, d, size=(max_triples, 3)).tolist()
    for i, j, k in triples:
        w = b[i] @ dagger(b[j]) @ b[k]
        # residual against the word scale (unit-norm factors), so that
        # rounding noise on exactly-cancelling products does not trip it
        if z.residual(w) > max(tol, 1e-8) * max(1.0, frob(w)):
            raise StructureError("closure failed triple-product check")


def triple_ideal_closure(z: MatrixSubspace, seed: MatrixSubspace,
                         tol: float = DEFAULT_TOL) -> MatrixSubspace:
    """Smallest subspace containing ``seed`` stable under the ideal actions
    of the triple system ``z``: Z Z* N, N Z* Z and Z N* Z."""
    if seed.dim == 0:
        return seed
    amb = z.ambient
    zb = z.basis()
    vecs = seed.basis_vectors()
    frontier = seed.basis()
    while frontier.shape[0] > 0:
        zz_star = np.einsum("ipq,jrq->ijpr", zb, zb.conj()).reshape(-1, amb.rows, amb.rows)
        star_zz = np.einsum("ipq,jpr->ijqr", zb.conj(), zb).reshape(-1, amb.cols, amb.cols)
        c1 = np.einsum("apr,nrt->anpt", zz_star, frontier).reshape(-1, amb.dim)
        c2 = np.einsum("npq,aqt->napt", frontier, star_zz).reshape(-1, amb.dim)
        zn_star = np.einsum("ipq,nrq->inpr", zb, frontier.conj()).reshape(-1, amb.rows, amb.rows)
        c3 = np.einsum("apr,jrt->ajpt", zn_star, zb).reshape(-1, amb.dim)
        cand = np.vstack([c1, c2, c3])
        new = gram_schmidt(cand, tol, against=vecs, floors=np.ones(cand.shape[0]))
        if new.shape[0] == 0:
            break
        vecs = np.vstack([vecs, new])
        frontier = new.reshape(-1, amb.rows, amb.cols)
    return MatrixSubspace(amb, vecs)


def is_triple_system(z: MatrixSubspace, tol: float = DEFAULT_TOL) -> bool:
    """Full check that Z Z* Z is contained in Z."""
    b = z.basis()
    for x in b:
        for y in b:
            xy = x @ dagger(y)
            words = np.einsum("pq,kqs->kps", xy, b)
            for w in words:
                if z.residual(w) > max(tol, 1e-8) * max(1.0, frob(w)):
                    return False
    return True


def cstar_closure(seed: MatrixSubspace, tol: float = DEFAULT_TOL) -> MatrixSubspace:
    """Smallest *-closed, product-closed subspace containing ``seed``."""
    amb = seed.ambient
    if not amb.is_square:
        raise ArgumentError("cstar_closure needs a square ambient")
    gens0 = seed.basis()
    gens = np.concatenate([gens0, np.conj(np.transpose(gens0, (0, 2, 1)))])
    gnorm = np.linalg.norm(gens.reshape(gens.shape[0], -1), axis=1)
    vecs = gram_schmidt(gens.reshape(-1, amb.dim), tol)
    frontier = vecs.reshape(-1, amb.rows, amb.cols)
    while frontier.shape[0] > 0:
        cand = np.einsum("wpq,gqr->wgpr", frontier, gens).reshape(-1, amb.dim)
        floors = np.tile(gnorm, frontier.shape[0])
        new = gram_schmidt(cand, tol, against=vecs, floors=floors)
        if new.shape[0] == 0:
            break
        vecs = np.vstack([vecs, new])
        frontier = new.reshape(-1, amb.rows, amb.cols)
    return MatrixSubspace(amb, vecs)


def is_star_algebra(a: MatrixSubspace, tol: float = DEFAULT_TOL) -> bool:
    """Check closure under adjoints and products."""
    b = a.basis()
    for x in b:
        if not a.contains(dagger(x), max(tol, 1e-8)):
            return False
        prods = np.einsum("pq,kqr->kpr", x, b)
        for w in prods:
            if a.residual(w) > max(tol, 1e-8) * max(1.0, frob(w)):
                return False
    return True


def left_right_cstar(z: MatrixSubspace, tol: float = DEFAULT_TOL
                     ) -> tuple[MatrixSubspace, MatrixSubspace]:
    """The left and right C*-algebras Z Z* and Z* Z of a triple system.

    For a triple system the pairwise products already span *-closed,
    product-closed algebras, so no iteration is needed.
    """
    if not is_triple_system(z, tol):
        raise StructureError("left_right_cstar requires a triple system")
    b = z.basis()
    left_amb = Shape(z.ambient.rows, z.ambient.rows)
    right_amb = Shape(z.ambient.cols, z.ambient.cols)
    left = MatrixSubspace.span(left_amb, _pairwise_products(b, b, star_left=False),
                               tol, scale_floor=1.0)
    right = MatrixSubspace.span(right_amb, _pairwise_products(b, b, star_left=True),
                                tol, scale_floor=1.0)
    return left, right


# ---------------------------------------------------------------------------
# support projections and quotients
# ---------------------------------------------------------------------------


def spectral_support(h: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Projection onto the range of a PSD matrix, by eigenvalue thresholding."""
    hm = as_matrix(h)
    w, v = np.linalg.eigh((hm + dagger(hm)) / 2)
    top = float(w[-1]) if len(w) else 0.0
    if top <= 0.0:
        return np.zeros_like(hm)
    keep = v[:, w > tol * top]
    return keep @ dagger(keep)


def support_projection(ideal: MatrixSubspace, tol: float = DEFAULT_TOL,
                       check_structure: bool = True) -> Projection:
    """The unit of a finite-dimensional C*-algebra, as a projection.

    Returns the spectral support of sum_i b_i b_i* over an orthonormal
    basis.  For a *-closed, product-closed subspace this acts as a
    two-sided unit on the algebra and belongs to it.
    """
    amb = ideal.ambient
    if not amb.is_square:
        raise ArgumentError("support_projection needs a square ambient")
    if ideal.dim == 0:
        return Projection.zero(amb.rows)
    if check_structure and not is_star_algebra(ideal, tol):
        raise StructureError("support_projection requires a *-closed, "
                             "product-closed subspace")
    b = ideal.basis()
    positive = np.einsum("kpq,krq->pr", b, b.conj())
    p = spectral_support(positive, tol)
    return Projection(amb, p)


def left_support(subspace: MatrixSubspace, tol: float = DEFAULT_TOL) -> Projection:
    """Support of sum_i b_i b_i*: the smallest q with q x = x on the subspace."""
    b = subspace.basis()
    if subspace.dim == 0:
        return Projection.zero(subspace.ambient.rows)
    positive = np.einsum("kpq,krq->pr", b, b.conj())
    return Projection(Shape(subspace.ambient.rows, subspace.ambient.rows),
                      spectral_support(positive, tol))


def right_support(subspace: MatrixSubspace, tol: float = DEFAULT_TOL) -> Projection:
    """Support of sum_i b_i* b_i: the smallest p with x p = x on the subspace."""
    b = subspace.basis()
    if subspace.dim == 0:
        return Projection.zero(subspace.ambient.cols)
    positive = np.einsum("kpq,kpr->qr", b.conj(), b)
    return Projection(Shape(subspace.ambient.cols, subspace.ambient.cols),
                      spectral_support(positive, tol))


def _is_left_ideal(j: MatrixSubspace, tol: float) -> bool:
    d = j.ambient.rows
    b = j.basis()
    for k in range(d):
        row = np.zeros((d, d), dtype=complex)
        for col in range(d):
            row[k, col] = 1.0
            prods = np.einsum("pq,kqr->kpr", row, b)
            row[k, col] = 0.0
            for w in prods:
                if j.residual(w) > max(tol, 1e-8) * max(1.0, frob(w)):
                    return False
    return True


def _is_right_ideal(k: MatrixSubspace, tol: float) -> bool:
    d = k.ambient.rows
    b = k.basis()
    for p in range(d):
        col = np.zeros((d, d), dtype=complex)
        for q in range(d):
            col[p, q] = 1.0
            prods = np.einsum("kpr,rq->kpq", b, col)
            col[p, q] = 0.0
            for w in prods:
                if k.residual(w) > max(tol, 1e-8) * max(1.0, frob(w)):
                    return False
    return True


class QuotientCompression:
    """The map x -> (1-f) x (1-e) realizing M/(J + K) concretely."""

    def __init__(self, f: Projection, e: Projection):
        self.f = f
        self.e = e
        self._left = f.complement()
        self._right = e.complement()

    def __call__(self, x) -> np.ndarray:
        return self._left @ as_matrix(x) @ self._right

    @property
    def image_dim(self) -> int:
        return (self.f.ambient.rows - self.f.rank) * (self.e.ambient.rows - self.e.rank)


def quotient_compression(b_dim: Shape, j: MatrixSubspace, k: MatrixSubspace,
                         tol: float = DEFAULT_TOL
                         ) -> tuple[Projection, Projection, QuotientCompression]:
    """Support projections (e, f) of a left ideal J and right ideal K of M_d,
    and the compression x -> (1-f) x (1-e) whose kernel is J + K.
    """
    if not b_dim.is_square:
        raise ArgumentError("quotient ambient must be square")
    d = b_dim.rows
    for sub in (j, k):
        if sub.dim and sub.ambient != b_dim:
            raise ArgumentError("ideal ambient mismatch")
    if j.dim and not _is_left_ideal(j, tol):
        raise StructureError("J is not a left ideal")
    if k.dim and not _is_right_ideal(k, tol):
        raise StructureError("K is not a right ideal")

    e = right_support(j, tol) if j.dim else Projection.zero(d)
    f = left_support(k, tol) if k.dim else Projection.zero(d)

    # J = M e and K = f M, by dimension and membership
    if j.dim != d * e.rank:
        raise StructureError("J does not equal M e for its support projection")
    if k.dim != d * f.rank:
        raise StructureError("K does not equal f M for its support projection")
    for b in j.basis():
        if frob(b @ e.matrix - b) > max(tol, 1e-8) * max(1.0, frob(b)):
            raise StructureError("support projection fails to fix J")
    for b in k.basis():
        if frob(f.matrix @ b - b) > max(tol, 1e-8) * max(1.0, frob(b)):
            raise StructureError("support projection fails to fix K")

    comp = QuotientCompression(f, e)
    # kernel dimension count: dim ker = d^2 - (d - rank f)(d - rank e)
    sum_dim = j.add(k, tol).dim if (j.dim or k.dim) else 0
    expected = d * d - (d - f.rank) * (d - e.rank)
    if sum_dim != expected:
        raise StructureError(
            f"kernel dimension mismatch: dim(J+K)={sum_dim}, compression kernel={expected}")
    return e, f, comp


def verify_leftdid(b_dim: Shape, a: MatrixSubspace, ideal: MatrixSubspace,
                   tol: float = DEFAULT_TOL) -> dict:
    """Check the ideal-recovery and compression-multiplicativity facts for
    a C*-subalgebra A of M_d with a two-sided ideal I.

    Builds J = M_d I, verifies J meet A = I, and verifies that the
    compression a -> (1-p) a (1-p) by the support p of I is multiplicative
    on A.  Returns a report; failures are recorded, not raised.
    """
    if not b_dim.is_square:
        raise ArgumentError("ambient must be square")
    d = b_dim.rows
    report: dict = {"checks": {}}

    if ideal.dim == 0:
        j = MatrixSubspace.zero(b_dim)
    else:
        units = np.eye(d * d, dtype=complex).reshape(d * d, d, d)
        prods = np.einsum("upq,kqr->ukpr", units, ideal.basis()).reshape(-1, d * d)
        j = MatrixSubspace(b_dim, gram_schmidt(prods, tol,
                                               floors=np.ones(prods.shape[0])))
    report["dim_J"] = j.dim

    inter = j.intersect(a, tol) if j.dim else MatrixSubspace.zero(b_dim)
    same_dim = inter.dim == ideal.dim
    members = all(inter.contains(b, max(tol, 1e-8)) for b in ideal.basis()) if same_dim else False
    report["checks"]["J_meet_A_equals_I"] = bool(same_dim and members)

    p = support_projection(ideal, tol) if ideal.dim else Projection.zero(d)
    comp = p.complement()
    worst = 0.0
    for x in a.basis():
        for y in a.basis():
            lhs = comp @ (x @ y) @ comp
            rhs = (comp @ x @ comp) @ (comp @ y @ comp)
            worst = max(worst, frob(lhs - rhs))
    report["multiplicativity_residual"] = worst
    report["checks"]["compression_multiplicative"] = bool(worst <= max(tol, 1e-8) * 10)
    report["ok"] = all(report["checks"].values())
    return report
