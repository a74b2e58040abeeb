"""Finite truncation of the averaging-map example showing that the
structural projection need not exist inside the represented algebra.

Each level k carries the unital positive map psi_k on l^inf_n that leaks
an epsilon_k fraction of every coordinate into the others; stacking K
levels block-diagonally gives a map Psi into M_{nK} that is an isometry
up to the factor (1 - 2 eps_K) at truncation.  The rigidity phenomenon:
any projection commuting with the images of the coordinate idempotents is
a 0/1 diagonal, and no nontrivial such diagonal makes the compressed map
multiplicative, so only the trivial projection (zero compressed map)
survives.  That rigidity is a per-level algebraic fact and is checked
here exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ConfigError
from .linmap import DEFAULT_TOL, MatrixMap, Shape

ENUMERATION_CAP = 24


@dataclass(frozen=True)
class NicexConfig:
    """Coordinate count n, truncation depth K, and the leak sequence."""

    n: int
    levels: int
    epsilons: tuple[float, ...]

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("need at least two coordinates")
        if self.levels < 1 or len(self.epsilons) != self.levels:
            raise ConfigError("need one epsilon per level")
        eps = self.epsilons
        if not all(0.0 < e < 1.0 for e in eps):
            raise ConfigError("epsilons must lie in (0,1)")
        if not all(eps[i + 1] < eps[i] for i in range(len(eps) - 1)):
            raise ConfigError("epsilons must be strictly decreasing")
        degenerate = (self.n - 1) / self.n
        if any(abs(e - degenerate) < 1e-12 for e in eps):
            raise ConfigError("epsilon = (n-1)/n collapses the level eigenvalues")
        if self.n == 2:
            for i in range(len(eps)):
                for j in range(len(eps)):
                    if i != j and abs(eps[i] + eps[j] - 1.0) < 1e-12:
                        raise ConfigError("epsilon pair summing to 1 collides levels")

    @classmethod
    def default(cls) -> "NicexConfig":
        return cls(n=3, levels=4, epsilons=tuple(1.0 / (k + 2) for k in range(1, 5)))


@dataclass
class NicexMaps:
    """Per-level maps, their stochastic matrices, and the stacked map."""

    config: NicexConfig
    mode: str                       # "vector" or "matrix"
    stochastic: list[np.ndarray]    # the n x n averaging matrices M_k
    psi: list[MatrixMap] = field(default_factory=list)
    big: MatrixMap | None = None    # Psi : M_n -> M_{nK}

    def coordinate_images(self) -> list[np.ndarray]:
        """D_i = Psi(E_ii), diagonal in the standard basis."""
        n = self.config.n
        out = []
        for i in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, i] = 1.0
            out.append(self.big.apply(e))
        return out

    def apply_vector(self, level: int, a) -> np.ndarray:
        return self.stochastic[level] @ np.asarray(a, dtype=complex)


def _level_matrix(n: int, eps: float) -> np.ndarray:
    return (1.0 - eps) * np.eye(n) + (eps / (n - 1)) * (np.ones((n, n)) - np.eye(n))


def _psi_map(n: int, eps: float, mode: str) -> MatrixMap:
    mk = _level_matrix(n, eps)
    sh = Shape(n, n)

    def act(e):
        i, j = divmod(int(np.argmax(np.abs(e))), n)
        if i == j:
            return np.diag(mk[:, i]).astype(complex)
        if mode == "matrix":
            return (1.0 - eps) * e
        return np.zeros((n, n), dtype=complex)

    return MatrixMap.from_function(sh, sh, act)


def build(config: NicexConfig, mode: str = "vector") -> NicexMaps:
    """Assemble the per-level maps and the stacked block-diagonal map.

    ``vector`` mode acts on the diagonal algebra only; ``matrix`` mode
    extends each level to M_n by scaling off-diagonal entries by 1-eps_k.
    """
    if mode not in ("vector", "matrix"):
        raise ArgumentError(f"unknown mode {mode!r}")
    n, k = config.n, config.levels
    mats = [_level_matrix(n, e) for e in config.epsilons]
    psi = [_psi_map(n, e, mode) for e in config.epsilons]
    big_act = np.zeros((n * n, n * k, n * k), dtype=complex)
    for unit in range(n * n):
        for lvl in range(k):
            big_act[unit, lvl * n:(lvl + 1) * n, lvl * n:(lvl + 1) * n] = psi[lvl].action[unit]
    big = MatrixMap(Shape(n, n), Shape(n * k, n * k), big_act)
    return NicexMaps(config=config, mode=mode, stochastic=mats, psi=psi, big=big)


def build_control(n: int, levels: int) -> NicexMaps:
    """Honest block map x -> diag(x, ..., x): the rigidity check must NOT
    fire on it, demonstrating the check is not vacuous."""
    config = NicexConfig(n=n, levels=levels,
                         epsilons=tuple(0.3 / (k + 1) for k in range(levels)))
    ident = MatrixMap.identity(Shape(n, n))
    big_act = np.zeros((n * n, n * levels, n * levels), dtype=complex)
    for unit in range(n * n):
        for lvl in range(levels):
            big_act[unit, lvl * n:(lvl + 1) * n, lvl * n:(lvl + 1) * n] = ident.action[unit]
    big = MatrixMap(Shape(n, n), Shape(n * levels, n * levels), big_act)
    return NicexMaps(config=config, mode="control",
                     stochastic=[np.eye(n) for _ in range(levels)],
                     psi=[ident] * levels, big=big)


def lower_bound_check(maps: NicexMaps, samples: int = 1000,
                      rng_seed: int = 0, tol: float = 1e-12) -> dict:
    """Check ||psi_k(a)||_inf >= (1 - 2 eps_k) ||a||_inf on random vectors,
    and the truncation bound max_k ||psi_k(a)|| >= (1 - 2 eps_K) ||a||."""
    rng = np.random.default_rng(rng_seed)
    n = maps.config.n
    eps = maps.config.epsilons
    violations = 0
    min_margin = np.inf
    for _ in range(samples):
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        na = np.abs(a).max()
        per_level = [np.abs(maps.apply_vector(k, a)).max()
                     for k in range(maps.config.levels)]
        for k, val in enumerate(per_level):
            margin = val - (1.0 - 2.0 * eps[k]) * na
            min_margin = min(min_margin, margin)
            if margin < -tol:
                violations += 1
        if max(per_level) < (1.0 - 2.0 * eps[-1]) * na - tol:
            violations += 1
    return {"violations": violations, "min_margin": float(min_margin),
            "samples": samples, "ok": violations == 0}


def _diagonal_values(maps: NicexMaps) -> np.ndarray:
    """V[a, i] = (D_i)_{aa}: the diagonal of each coordinate image."""
    ds = maps.coordinate_images()
    return np.stack([np.real(np.diag(d)) for d in ds], axis=1)


def commutant_of_coordinates(maps: NicexMaps, tol: float = DEFAULT_TOL) -> dict:
    """Dimension of { X : X D_i = D_i X for all i } and whether it equals
    the diagonal algebra.

    The D_i are diagonal, so X_ab is free exactly when positions a and b
    carry identical value profiles; distinct profiles mean the commutant
    is the diagonal algebra, of dimension nK.
    """
    v = _diagonal_values(maps)
    size = v.shape[0]
    profile_close = np.all(np.abs(v[:, None, :] - v[None, :, :]) <= tol, axis=2)
    dim = int(profile_close.sum())
    return {"dimension": dim, "is_diagonal_algebra": dim == size, "size": size}


def no_projection_check(maps: NicexMaps, tol: float = DEFAULT_TOL) -> dict:
    """Exhaustively test every 0/1 diagonal projection p for making
    (1-p) Psi(.) a *-homomorphism (vector mode) or (1-p) Psi(.) a triple
    morphism given the commutation constraint (matrix mode).

    Survivor count must be exactly one (p = identity, zero map) for the
    leaking maps; the control block map keeps many survivors.  Refuses to
    enumerate when nK exceeds the cap; commutant results still apply.
    """
    size = maps.config.n * maps.config.levels
    comm = commutant_of_coordinates(maps, tol)
    report = {"commutant": comm, "size": size, "refused": False}
    if size > ENUMERATION_CAP:
        report["refused"] = True
        report["ok"] = False
        return report

    v = _diagonal_values(maps)  # (size, n)
    n = maps.config.n
    # position a may survive inside 1-p only when the profile row is
    # multiplicative: d_i d_j = delta_ij d_i for all i, j
    prods = v[:, :, None] * v[:, None, :]
    target = np.zeros((size, n, n))
    for i in range(n):
        target[:, i, i] = v[:, i]
    position_ok = np.all(np.abs(prods - target) <= tol, axis=(1, 2))

    # a mask (the diagonal of p) survives iff every kept position is ok,
    # i.e. every bad position's bit is set
    bad_mask = 0
    for a in np.flatnonzero(~position_ok):
        bad_mask |= 1 << int(a)
    all_masks = np.arange(1 << size, dtype=np.uint64)
    surviving = all_masks[(all_masks & np.uint64(bad_mask)) == np.uint64(bad_mask)]

    survivors = [int(m) for m in surviving] if surviving.size <= 1024 else None
    if maps.mode == "matrix" and survivors is not None:
        survivors = [m for m in survivors
                     if _matrix_mode_survives(maps, m, size, tol)]

    full_mask = (1 << size) - 1
    count = len(survivors) if survivors is not None else int(surviving.size)
    report.update({
        "surviving_count": count,
        "trivial_survivor_only": survivors == [full_mask],
        "ok": survivors == [full_mask],
    })
    return report


def _matrix_mode_survives(maps: NicexMaps, mask: int, size: int, tol: float) -> bool:
    """Matrix-mode condition: the diagonal (1-p) must commute with every
    image (so left and right compressions agree, forcing p = q) and leave
    a triple morphism after compression."""
    keep = np.array([0.0 if (mask >> a) & 1 else 1.0 for a in range(size)])
    d = np.diag(keep).astype(complex)
    n = maps.config.n
    units = np.eye(n * n, dtype=complex).reshape(n * n, n, n)
    imgs = [maps.big.apply(e) for e in units]
    for img in imgs:
        if np.abs(d @ img - img @ d).max() > max(tol, 1e-9) * 10:
            return False
    for a in range(n * n):
        for b in range(n * n):
            for c in range(n * n):
                lhs = (d @ imgs[a]) @ (d @ imgs[b]).conj().T @ (d @ imgs[c])
                word = units[a] @ units[b].conj().T @ units[c]
                rhs = d @ maps.big.apply(word)
                if np.abs(lhs - rhs).max() > max(tol, 1e-9) * 10:
                    return False
    return True
