"""Norm and positivity certification for matrix maps.

Three independent certification routes live here:

* a stochastic falsifier that searches amplified matrix levels for
  witnesses breaking isometry or contractivity (lower bounds only; it
  never certifies a map),
* the Choi-matrix positive-semidefiniteness test for complete positivity,
* a feasibility certificate for complete contractivity: T is completely
  contractive iff completely positive maps Phi1, Phi2 exist making the
  block map [[Phi1, T], [T^dagger, Phi2]] completely positive with
  contractive diagonal corners.  The block Choi matrix is found by
  Dykstra's alternating projections between the PSD cone and the affine
  set fixing the T-corners, and the final certificate is re-verified
  independently of the iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DimensionError
from .linmap import DEFAULT_TOL, MatrixMap, Shape, as_matrix, dagger

#: Iteration defaults for the feasibility solver.
FEASIBILITY_MAX_ITERS = 5000
FEASIBILITY_RESIDUAL = 1e-7


def op_norm(x) -> float:
    """Operator (largest singular value) norm."""
    a = np.asarray(x, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def choi_matrix(t: MatrixMap) -> np.ndarray:
    """The (r*m, s*n) block matrix whose (i,j) block is T(E_ij)."""
    m, n = t.domain.rows, t.domain.cols
    r, s = t.codomain.rows, t.codomain.cols
    act4 = t.action.reshape(m, n, r, s)
    return act4.transpose(0, 2, 1, 3).reshape(m * r, n * s)


def map_from_choi(domain: Shape, codomain: Shape, choi) -> MatrixMap:
    """Inverse of :func:`choi_matrix`."""
    m, n = domain.rows, domain.cols
    r, s = codomain.rows, codomain.cols
    c = as_matrix(choi)
    if c.shape != (m * r, n * s):
        raise DimensionError(f"Choi matrix has shape {c.shape}, expected ({m * r}, {n * s})")
    act4 = c.reshape(m, r, n, s).transpose(0, 2, 1, 3)
    return MatrixMap(domain, codomain, act4.reshape(m * n, r, s))


def is_completely_positive(t: MatrixMap, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Choi test: T is completely positive iff its Choi matrix is PSD.

    Requires square domain and codomain.  Returns the verdict and the
    minimum eigenvalue of the Hermitian part of the Choi matrix.
    """
    if not (t.domain.is_square and t.codomain.is_square):
        raise DimensionError("complete positivity needs square domain and codomain")
    c = choi_matrix(t)
    herm_defect = float(np.linalg.norm(c - dagger(c)))
    scale = max(1.0, float(np.linalg.norm(c)))
    eigs = np.linalg.eigvalsh((c + dagger(c)) / 2)
    min_eig = float(eigs[0])
    ok = herm_defect <= tol * scale and min_eig >= -tol * scale
    return ok, min_eig


@dataclass
class NormEstimate:
    """Bracket for a norm-type quantity with an attaining witness."""

    lower: float
    upper: float = np.inf
    witness: np.ndarray | None = None


@dataclass
class FalsifierReport:
    """Outcome of the amplified-isometry search.

    ``violation`` is a unit-operator-norm matrix X whose amplified image
    breaks isometry by more than the tolerance, in either direction.  A
    report without a violation never certifies isometry.
    """

    level: int
    max_ratio: NormEstimate
    min_ratio: NormEstimate
    violation: np.ndarray | None = None
    violation_ratio: float | None = None

    @property
    def found_violation(self) -> bool:
        return self.violation is not None


def _ratio(t: MatrixMap, level: int, x: np.ndarray) -> float:
    nx = op_norm(x)
    if nx == 0.0:
        return 1.0
    return op_norm(t.apply_amplified(level, x)) / nx


def _ascent_gradient(t: MatrixMap, level: int, eta: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Matrix D with <D, X> = conj(eta* T_level(X) u); ascent moves toward
    the unit ball's maximizer of that linear functional."""
    m, n = t.domain.rows, t.domain.cols
    r, s = t.codomain.rows, t.codomain.cols
    act4 = t.action.reshape(m, n, r, s)
    eta_b = eta.reshape(level, r)
    u_b = u.reshape(level, s)
    w = np.einsum("ap,ijpq,bq->aibj", eta_b.conj(), act4, u_b)
    return np.conj(w).reshape(level * m, level * n)


def _top_singular(y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    uu, sv, vh = np.linalg.svd(y)
    return float(sv[0]), uu[:, 0], vh[0].conj()


def _polar_unitary(d: np.ndarray) -> np.ndarray:
    uu, _, vh = np.linalg.svd(d, full_matrices=False)
    return uu @ vh


def _ascend(t: MatrixMap, level: int, x0: np.ndarray, iters: int) -> tuple[float, np.ndarray]:
    """Monotone ascent of ||T_level(X)|| over the unit ball: alternately take
    the top singular pair of the image and jump to the maximizer of the
    linearized objective (the polar unitary of the gradient)."""
    x = x0 / max(op_norm(x0), 1e-300)
    best, best_x = op_norm(t.apply_amplified(level, x)), x
    for _ in range(iters):
        y = t.apply_amplified(level, x)
        _, eta, u = _top_singular(y)
        d = _ascent_gradient(t, level, eta, u)
        if np.linalg.norm(d) == 0.0:
            break
        x_new = _polar_unitary(d)
        val = op_norm(t.apply_amplified(level, x_new))
        if val <= best + 1e-15:
            x = x_new
            break
        best, best_x, x = val, x_new, x_new
    return best, best_x


def _descend(t: MatrixMap, level: int, x0: np.ndarray, iters: int) -> tuple[float, np.ndarray]:
    """Projected subgradient descent of ||T_level(X)|| over unit-norm X."""
    x = x0 / max(op_norm(x0), 1e-300)
    best = op_norm(t.apply_amplified(level, x))
    best_x = x
    for it in range(iters):
        y = t.apply_amplified(level, x)
        _, eta, u = _top_singular(y)
        g = _ascent_gradient(t, level, eta, u)
        gn = np.linalg.norm(g)
        if gn == 0.0:
            break
        step = 0.5 / np.sqrt(it + 1.0)
        x = x - step * g / gn
        nx = op_norm(x)
        if nx < 1e-12:
            break
        x = x / nx
        val = op_norm(t.apply_amplified(level, x))
        if val < best:
            best, best_x = val, x
    return best, best_x


def _structured_starts(t: MatrixMap, level: int) -> list[np.ndarray]:
    m, n = t.domain.rows, t.domain.cols
    starts = []
    e = np.zeros((level * m, level * n), dtype=complex)
    e[0, 0] = 1.0
    starts.append(e)
    # entangled matrix-unit combinations; these witness transpose-type maps
    ent = np.zeros((level * m, level * n), dtype=complex)
    for i in range(min(level, m, n)):
        for j in range(min(level, m, n)):
            ent[j * m + i, i * n + j] = 1.0
    if np.linalg.norm(ent) > 0:
        starts.append(ent)
    ident = np.zeros((level * m, level * n), dtype=complex)
    for a in range(level):
        for i in range(min(m, n)):
            ident[a * m + i, a * n + i] = 1.0
    starts.append(ident)
    return starts


def amplified_isometry_falsifier(t: MatrixMap, level: int | None = None,
                                 trials: int = 6, rng_seed: int = 0,
                                 tol: float = 1e-6, iters: int = 40,
                                 search_min: bool = True) -> FalsifierReport:
    """Search amplified level ``level`` for a unit-norm X with
    ``| ||T_level(X)|| - ||X|| |`` above ``tol``.

    Runs a monotone ascent (expansion witnesses) and optionally a
    subgradient descent (contraction-defect witnesses) from random and
    structured starting points.  Returns the best ratios found either way;
    a violation is reported when either side clears the tolerance.
    """
    if level is None:
        level = min(t.codomain.rows, t.codomain.cols)
    if level < 1:
        raise ArgumentError("level must be >= 1")
    rng = np.random.default_rng(rng_seed)
    m, n = t.domain.rows, t.domain.cols
    shape = (level * m, level * n)

    starts = _structured_starts(t, level)
    while len(starts) < trials:
        starts.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    hi, hi_x = -np.inf, None
    for x0 in starts:
        val, x = _ascend(t, level, x0, iters)
        if val > hi:
            hi, hi_x = val, x
    lo, lo_x = np.inf, None
    if search_min:
        for x0 in starts:
            val, x = _descend(t, level, x0, iters)
            if val < lo:
                lo, lo_x = val, x
    max_est = NormEstimate(lower=hi, witness=hi_x)
    min_est = NormEstimate(lower=0.0, upper=lo, witness=lo_x)

    violation = None
    violation_ratio = None
    if hi > 1.0 + tol:
        violation, violation_ratio = hi_x, hi
    elif search_min and lo < 1.0 - tol:
        violation, violation_ratio = lo_x, lo
    return FalsifierReport(level=level, max_ratio=max_est, min_ratio=min_est,
                           violation=violation, violation_ratio=violation_ratio)


# ---------------------------------------------------------------------------
# complete contractivity via block-Choi feasibility
# ---------------------------------------------------------------------------


@dataclass
class ContractivityCertificate:
    """Outcome of :func:`is_completely_contractive`."""

    verdict: str  # "certified_yes" | "certified_no" | "undecided"
    witness: np.ndarray | None = None
    witness_ratio: float | None = None
    phi1_choi: np.ndarray | None = None
    phi2_choi: np.ndarray | None = None
    psd_defect: float | None = None
    cb_upper_bound: float | None = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


class _BlockChoiFeasibility:
    """Affine structure of the block map Psi([[a,b],[c,d]]) =
    [[Phi1(a), T(b)], [T^dagger(c), Phi2(d)]] on M_{m+n} -> M_{r+s}."""

    def __init__(self, t: MatrixMap):
        self.t = t
        m, n = t.domain.rows, t.domain.cols
        r, s = t.codomain.rows, t.codomain.cols
        self.m, self.n, self.r, self.s = m, n, r, s
        self.dd = m + n
        self.dc = r + s
        self.dim = self.dd * self.dc
        act4 = t.action.reshape(m, n, r, s)

        # fixed data and free-entry mask, as full matrices
        fixed = np.zeros((self.dim, self.dim), dtype=complex)
        free = np.zeros((self.dim, self.dim), dtype=bool)
        for bi in range(m):
            for bj in range(m):
                free[self._sl(bi, 0, r), self._sl(bj, 0, r)] = True
        for bi in range(n):
            for bj in range(n):
                free[self._sl(m + bi, r, s), self._sl(m + bj, r, s)] = True
        for bi in range(m):
            for bj in range(n):
                fixed[self._sl(bi, 0, r), self._sl(m + bj, r, s)] = act4[bi, bj]
                fixed[self._sl(m + bj, r, s), self._sl(bi, 0, r)] = dagger(act4[bi, bj])
        self.fixed = fixed
        self.free = free

    def _sl(self, block: int, off: int, size: int):
        start = block * self.dc + off
        return slice(start, start + size)

    def project_affine(self, q: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the affine set: Hermitian, T-corners
        fixed, off-pattern entries zero, unital diagonal corners."""
        h = (q + dagger(q)) / 2
        out = self.fixed.copy()
        out[self.free] = h[self.free]
        # unitality: sum_i Phi1(E_ii) = I_r, sum_j Phi2(E_jj) = I_s
        m, n, r, s = self.m, self.n, self.r, self.s
        g1 = [out[self._sl(i, 0, r), self._sl(i, 0, r)] for i in range(m)]
        defect1 = (sum(g1) - np.eye(r)) / m
        for i in range(m):
            out[self._sl(i, 0, r), self._sl(i, 0, r)] = g1[i] - defect1
        g2 = [out[self._sl(m + j, r, s), self._sl(m + j, r, s)] for j in range(n)]
        defect2 = (sum(g2) - np.eye(s)) / n
        for j in range(n):
            out[self._sl(m + j, r, s), self._sl(m + j, r, s)] = g2[j] - defect2
        return out

    def initial_point(self) -> np.ndarray:
        q = self.project_affine(np.zeros((self.dim, self.dim), dtype=complex))
        return q

    def corner_chois(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m, n, r, s = self.m, self.n, self.r, self.s
        c1 = np.zeros((m * r, m * r), dtype=complex)
        for i in range(m):
            for j in range(m):
                c1[i * r:(i + 1) * r, j * r:(j + 1) * r] = q[self._sl(i, 0, r), self._sl(j, 0, r)]
        c2 = np.zeros((n * s, n * s), dtype=complex)
        for i in range(n):
            for j in range(n):
                c2[i * s:(i + 1) * s, j * s:(j + 1) * s] = \
                    q[self._sl(m + i, r, s), self._sl(m + j, r, s)]
        return c1, c2


def _project_psd(q: np.ndarray) -> np.ndarray:
    h = (q + dagger(q)) / 2
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    return (v * w) @ dagger(v)


def is_completely_contractive(t: MatrixMap, tol: float = 1e-6,
                              max_iters: int = FEASIBILITY_MAX_ITERS,
                              residual: float = FEASIBILITY_RESIDUAL,
                              rng_seed: int = 0,
                              falsifier_kwargs: dict | None = None) -> ContractivityCertificate:
    """Three-valued complete-contractivity certification.

    ``certified_no`` carries a falsifier witness with amplified ratio above
    1 + tol.  ``certified_yes`` carries completely positive Phi1, Phi2 with
    unital diagonal corners making the block map's Choi matrix PSD up to a
    defect whose induced bound keeps ||T||_cb <= 1 + tol.  Anything else is
    ``undecided``.
    """
    fk = dict(trials=6, iters=40)
    if falsifier_kwargs:
        fk.update(falsifier_kwargs)
    level = min(t.codomain.rows, t.codomain.cols)
    rep = amplified_isometry_falsifier(t, level=level, rng_seed=rng_seed,
                                       tol=tol, search_min=False, **fk)
    if rep.max_ratio.lower > 1.0 + tol:
        return ContractivityCertificate(verdict="certified_no",
                                        witness=rep.max_ratio.witness,
                                        witness_ratio=rep.max_ratio.lower)

    prob = _BlockChoiFeasibility(t)
    q = prob.initial_point()
    inc_p = np.zeros_like(q)
    inc_a = np.zeros_like(q)
    shift = t.domain.rows + t.domain.cols
    change = np.inf
    defect = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        y = _project_psd(q + inc_p)
        inc_p = q + inc_p - y
        q_new = prob.project_affine(y + inc_a)
        inc_a = y + inc_a - q_new
        change = float(np.linalg.norm(q_new - q))
        q = q_new
        if it % 20 == 0 or change < residual:
            eigs = np.linalg.eigvalsh(q)
            defect = max(0.0, -float(eigs[0]))
            if defect * shift <= 0.5 * tol:
                break
        if change < residual * 1e-4:
            break  # stagnated

    # verify the certificate independently of the iteration history
    q_cert = prob.project_affine(q)
    eigs = np.linalg.eigvalsh((q_cert + dagger(q_cert)) / 2)
    defect = max(0.0, -float(eigs[0]))
    # shifting the block Choi by defect*I adds defect*tr(.)*I to the block
    # map, leaving the T corner untouched, so ||T||_cb <= 1 + defect*(m+n)
    bound = defect * shift
    c1, c2 = prob.corner_chois(q_cert)
    if bound <= tol:
        return ContractivityCertificate(verdict="certified_yes", phi1_choi=c1,
                                        phi2_choi=c2, psd_defect=defect,
                                        cb_upper_bound=1.0 + bound, iterations=it)
    return ContractivityCertificate(
        verdict="undecided", phi1_choi=c1, phi2_choi=c2, psd_defect=defect,
        cb_upper_bound=None, iterations=it,
        diagnostics={"last_change": change, "max_ratio_found": rep.max_ratio.lower})
