"""Envelope construction for a candidate complete isometry.

Given an injective T : M_{m,n} -> M_{r,s}, grow the triple system Z
generated by the image of T while recording, for every generated word,
the same word evaluated on the domain side.  If T is a complete isometry
there is a triple morphism rho : Z -> M_{m,n} with rho(T(a)) = a, and the
recorded pairs assemble it as a linear map; any linear combination of
words that vanishes on the Z side but not on the domain side is a
certificate that no such rho exists, hence that T is not a complete
isometry.  From rho's kernel N the support projections q (left) and p
(right) are taken, and the reduced map theta(a) = (1-q) T(a) (1-p) is the
canonical compression that the verification operations test for being a
1-1 triple morphism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .algebra import MatrixSubspace, Projection
from .errors import PreconditionError
from .linmap import DEFAULT_TOL, MatrixMap, Shape, dagger, frob, matrix_units


@dataclass
class TripleWordTable:
    """Paired record of the closure: basis of Z and matched domain words.

    Row i of ``codomain_basis`` was produced either as T(a) for a domain
    matrix unit a, or as a triple word x y* z of earlier rows (then
    orthonormalized); ``domain_words`` holds the identical linear
    bookkeeping applied to the domain-side evaluations, so the linear map
    sending row i of one to row i of the other is the candidate rho.
    """

    codomain_basis: np.ndarray  # (dim, r, s)
    domain_words: np.ndarray    # (dim, m, n)
    words_processed: int = 0


@dataclass
class InconsistencyWitness:
    """A word combination vanishing on the Z side but not on the domain side."""

    codomain_word: np.ndarray
    domain_word: np.ndarray
    coefficients: np.ndarray
    domain_residual: float
    codomain_residual: float

    def __str__(self):
        return (f"word residual {self.domain_residual:.3e} on the domain side "
                f"against {self.codomain_residual:.3e} on the codomain side")


@dataclass
class EnvelopeResult:
    """Certificate bundle from :func:`build_envelope`."""

    tmap: MatrixMap
    consistent: bool
    z: MatrixSubspace | None = None
    word_table: TripleWordTable | None = None
    rho_matrix: np.ndarray | None = None   # (m*n, dim Z) over the Z basis
    kernel: MatrixSubspace | None = None   # N = ker rho
    p: Projection | None = None            # right support of N, in M_s
    q: Projection | None = None            # left support of N, in M_r
    theta: MatrixMap | None = None         # a -> (1-q) T(a) (1-p)
    witness: InconsistencyWitness | None = None
    reducing_residual: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def rho(self, z_elem) -> np.ndarray:
        """Evaluate rho on an element of Z (coordinates via the Z basis)."""
        coeffs = self.z.coefficients(z_elem)
        m, n = self.tmap.domain.rows, self.tmap.domain.cols
        return (self.rho_matrix @ coeffs).reshape(m, n)


class _PairedClosure:
    """Incremental orthonormal basis of Z with matched domain-side words."""

    def __init__(self, codomain: Shape, domain: Shape, tol: float):
        self.cod = codomain
        self.dom = domain
        self.tol = tol
        self.zvecs = np.zeros((0, codomain.dim), dtype=complex)
        self.avecs = np.zeros((0, domain.dim), dtype=complex)
        self.words = 0
        self.witness: InconsistencyWitness | None = None

    def offer(self, zw: np.ndarray, aw: np.ndarray, scale: float | None = None) -> bool:
        """Feed one word pair; returns True when a new direction was added.

        ``scale`` is the word's natural magnitude (product of factor
        norms); a residual below tol*scale counts as dependent even when
        the word itself is numerically tiny, so that rounding noise on an
        exactly-cancelling word never enters the basis.
        """
        self.words += 1
        zv = zw.reshape(-1)
        av = aw.reshape(-1)
        nrm0 = np.linalg.norm(zv)
        scale = max(nrm0 if scale is None else scale, nrm0, 1e-30)
        coeffs_total = np.zeros(self.zvecs.shape[0], dtype=complex)
        rz = zv
        for _ in range(2):
            if self.zvecs.shape[0]:
                c = self.zvecs.conj() @ rz
                rz = rz - c @ self.zvecs
                coeffs_total += c
        rnorm = np.linalg.norm(rz)
        if rnorm > self.tol * scale:
            self.zvecs = np.vstack([self.zvecs, rz / rnorm])
            ra = (av - coeffs_total @ self.avecs) if self.avecs.shape[0] else av
            self.avecs = np.vstack([self.avecs, ra / rnorm])
            return True
        # dependent word: the domain side must satisfy the same combination
        predicted = coeffs_total @ self.avecs if self.avecs.shape[0] else np.zeros_like(av)
        resid = np.linalg.norm(av - predicted)
        anchor = max(1.0, np.linalg.norm(av), np.linalg.norm(predicted))
        if resid > self.tol * anchor and self.witness is None:
            self.witness = InconsistencyWitness(
                codomain_word=zw.copy(), domain_word=aw.copy(),
                coefficients=coeffs_total.copy(),
                domain_residual=float(resid), codomain_residual=float(rnorm))
        return False


def build_envelope(t: MatrixMap, tol: float = DEFAULT_TOL,
                   rng_seed: int = 0) -> EnvelopeResult:
    """Construct Z, rho, N, p, q and theta for a candidate complete isometry.

    Raises :class:`PreconditionError` when T is not injective (no rho can
    exist, and the kernel vector is already a norm witness).  Returns an
    :class:`EnvelopeResult` with ``consistent=False`` and a witness when
    the recorded words cannot define rho linearly.
    """
    smin, kern = t.injectivity()
    op = t.as_matrix_operator()
    smax = float(np.linalg.svd(op, compute_uv=False)[0]) if op.size else 0.0
    if smax == 0.0 or smin <= tol * smax:
        raise PreconditionError("map is not injective", witness=kern)

    dom, cod = t.domain, t.codomain
    closure = _PairedClosure(cod, dom, tol)

    units = matrix_units(dom)
    gens_z = []
    gens_a = []
    for a in units:
        z = t.apply(a)
        gens_z.append(z)
        gens_a.append(a)
        closure.offer(z, a)
    gens_z = np.stack(gens_z)
    gens_a = np.stack(gens_a)

    gz_norm = np.linalg.norm(gens_z.reshape(gens_z.shape[0], -1), axis=1)
    word_floor = np.outer(gz_norm, gz_norm).reshape(-1)

    frontier = np.arange(closure.zvecs.shape[0])
    while frontier.size and closure.witness is None:
        fz = closure.zvecs[frontier].reshape(-1, cod.rows, cod.cols)
        fa = closure.avecs[frontier].reshape(-1, dom.rows, dom.cols)
        # words w g* h on the codomain side, paired with the same words on
        # the domain side
        wgz = np.einsum("wpq,grq->wgpr", fz, gens_z.conj())
        cand_z = np.einsum("wgpr,hrt->wghpt", wgz, gens_z)
        wga = np.einsum("wpq,grq->wgpr", fa, gens_a.conj())
        cand_a = np.einsum("wgpr,hrt->wghpt", wga, gens_a)
        cand_z = cand_z.reshape(-1, cod.rows, cod.cols)
        cand_a = cand_a.reshape(-1, dom.rows, dom.cols)
        scales = np.tile(word_floor, frontier.size)

        # cheap batch filter: most words are already dependent with a
        # consistent domain side; check them all at once, then feed only
        # the interesting ones through the sequential update
        czv = cand_z.reshape(cand_z.shape[0], -1)
        cav = cand_a.reshape(cand_a.shape[0], -1)
        coeffs = czv @ closure.zvecs.conj().T
        rz = czv - coeffs @ closure.zvecs
        rz_norm = np.linalg.norm(rz, axis=1)
        ra = cav - coeffs @ closure.avecs
        ra_norm = np.linalg.norm(ra, axis=1)
        anchors = np.maximum(1.0, np.maximum(np.linalg.norm(cav, axis=1),
                                             np.linalg.norm(coeffs @ closure.avecs, axis=1)))
        interesting = (rz_norm > 0.5 * tol * scales) | (ra_norm > 0.5 * tol * anchors)

        start = closure.zvecs.shape[0]
        for idx in np.flatnonzero(interesting):
            closure.offer(cand_z[idx], cand_a[idx], scale=float(scales[idx]))
            if closure.witness is not None:
                break
        closure.words += int(cand_z.shape[0] - interesting.sum())
        frontier = np.arange(start, closure.zvecs.shape[0])

    if closure.witness is not None:
        return EnvelopeResult(tmap=t, consistent=False, witness=closure.witness,
                              diagnostics={"words": closure.words})

    zdim = closure.zvecs.shape[0]
    z = MatrixSubspace(cod, closure.zvecs)
    table = TripleWordTable(
        codomain_basis=closure.zvecs.reshape(zdim, cod.rows, cod.cols),
        domain_words=closure.avecs.reshape(zdim, dom.rows, dom.cols),
        words_processed=closure.words)

    # rho over the Z basis: column i is the domain word paired with basis i
    rho_mat = closure.avecs.T.copy()

    _, sv, vh = np.linalg.svd(rho_mat)
    svals = np.zeros(zdim)
    svals[:len(sv)] = sv
    top = svals[0] if zdim else 0.0
    null_rows = vh[[i for i in range(zdim) if svals[i] <= tol * max(top, 1e-30)]]
    if null_rows.size:
        nvecs = null_rows.conj() @ closure.zvecs
        kernel = MatrixSubspace(cod, nvecs)
    else:
        kernel = MatrixSubspace.zero(cod)

    p = algebra.right_support(kernel, tol)
    q = algebra.left_support(kernel, tol)

    comp_left = q.complement()
    comp_right = p.complement()
    theta = MatrixMap(dom, cod, np.einsum(
        "pr,krs,st->kpt", comp_left, t.action, comp_right))

    # Corollary-style reducing identity (1-q) T(a) = T(a) (1-p)
    red = 0.0
    for img in t.action:
        red = max(red, frob(comp_left @ img - img @ comp_right))

    return EnvelopeResult(
        tmap=t, consistent=True, z=z, word_table=table, rho_matrix=rho_mat,
        kernel=kernel, p=p, q=q, theta=theta, reducing_residual=red,
        diagnostics={"words": closure.words, "dim_Z": zdim, "dim_N": kernel.dim})


def verify_kernel_ideal(env: EnvelopeResult, tol: float = DEFAULT_TOL,
                        max_triples: int = 200, rng_seed: int = 3) -> dict:
    """Check that N = ker rho is a triple ideal of Z: Z N* Z, N Z* Z and
    Z Z* N stay inside N (to tolerance, over sampled basis triples)."""
    if not env.consistent:
        raise PreconditionError("envelope is inconsistent")
    n = env.kernel
    if n.dim == 0:
        return {"max_residual": 0.0, "ok": True, "tol": tol}
    zb = env.z.basis()
    nb = n.basis()
    nvecs = n.basis_vectors()
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for left, mid, right in [(zb, nb, zb), (nb, zb, zb), (zb, zb, nb)]:
        total = len(left) * len(mid) * len(right)
        if total <= max_triples:
            idx = [(i, j, k) for i in range(len(left))
                   for j in range(len(mid)) for k in range(len(right))]
        else:
            idx = zip(rng.integers(0, len(left), max_triples),
                      rng.integers(0, len(mid), max_triples),
                      rng.integers(0, len(right), max_triples))
        words = np.stack([left[i] @ dagger(mid[j]) @ right[k] for i, j, k in idx])
        wv = words.reshape(words.shape[0], -1)
        resid = wv - (wv @ nvecs.conj().T) @ nvecs
        worst = max(worst, float(np.linalg.norm(resid, axis=1).max()))
    return {"max_residual": worst, "ok": bool(worst <= max(tol, 1e-8) * 10), "tol": tol}


def verify_moce(env: EnvelopeResult, tol: float = DEFAULT_TOL) -> dict:
    """Check q z = q z p = z p on every basis element of Z."""
    if not env.consistent:
        raise PreconditionError("envelope is inconsistent")
    qm, pm = env.q.matrix, env.p.matrix
    worst = 0.0
    for zb in env.z.basis():
        qz = qm @ zb
        zp = zb @ pm
        worst = max(worst, frob(qz - zp), frob(qm @ zb @ pm - zp))
    return {"max_residual": worst, "ok": bool(worst <= tol), "tol": tol}


def verify_theta_triple(env: EnvelopeResult, samples: int = 20,
                        rng_seed: int = 0, tol: float = DEFAULT_TOL) -> dict:
    """Check that theta is an injective triple morphism and that
    T(a) T(b)* T(c) (1-p) = T(a b* c) (1-p) holds.

    Random unit-norm triples plus all matrix-unit triples on small domains.
    """
    if not env.consistent:
        raise PreconditionError("envelope is inconsistent")
    t, theta = env.tmap, env.theta
    comp_right = env.p.complement()
    rng = np.random.default_rng(rng_seed)
    m, n = t.domain.rows, t.domain.cols

    triples = []
    units = matrix_units(t.domain)
    if len(units) ** 3 <= 27:
        triples.extend((a, b, c) for a in units for b in units for c in units)
    else:
        triples.extend((units[i % len(units)], units[(i * 7 + 1) % len(units)],
                        units[(i * 13 + 2) % len(units)]) for i in range(27))
    for _ in range(samples):
        abc = rng.standard_normal((3, m, n)) + 1j * rng.standard_normal((3, m, n))
        abc /= np.linalg.norm(abc.reshape(3, -1), axis=1)[:, None, None]
        triples.append(tuple(abc))

    worst_theta = 0.0
    worst_unreduced = 0.0
    for a, b, c in triples:
        word = a @ dagger(b) @ c
        lhs = theta.apply(a) @ dagger(theta.apply(b)) @ theta.apply(c)
        worst_theta = max(worst_theta, frob(theta.apply(word) - lhs))
        lhs2 = t.apply(a) @ dagger(t.apply(b)) @ t.apply(c) @ comp_right
        worst_unreduced = max(worst_unreduced, frob(t.apply(word) @ comp_right - lhs2))

    sv = np.linalg.svd(theta.as_matrix_operator(), compute_uv=False)
    injective = bool(len(sv) >= t.domain.dim and sv[0] > 0.0
                     and sv[t.domain.dim - 1] > tol * sv[0])
    ok = bool(worst_theta <= tol and worst_unreduced <= tol and injective)
    return {"triple_residual": worst_theta,
            "compressed_word_residual": worst_unreduced,
            "theta_injective": injective,
            "theta_min_singular": float(sv[t.domain.dim - 1]) if len(sv) >= t.domain.dim else 0.0,
            "ok": ok, "tol": tol, "triples": len(triples)}
