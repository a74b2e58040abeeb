"""Linear maps between rectangular complex matrix spaces.

A map T : M_{m,n} -> M_{r,s} is stored through its action tensor: the
images T(E_ij) of the matrix units in row-major order.  Amplifications
id_k (x) T act blockwise on M_{km,kn}, which is what "completely" means
for the norm and positivity notions used elsewhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DimensionError

#: Global default tolerance.  Every numerical decision in the package takes
#: an explicit ``tol`` parameter defaulting to this value.
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Shape:
    """Dimensions of a rectangular matrix space M_{rows,cols}."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ArgumentError(f"shape must be positive, got {self.rows}x{self.cols}")

    @property
    def dim(self) -> int:
        return self.rows * self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __str__(self):
        return f"{self.rows}x{self.cols}"


def as_matrix(x, shape: Shape | None = None) -> np.ndarray:
    """Coerce ``x`` to a complex 2-d array, optionally checking its shape."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={a.ndim}")
    if shape is not None and a.shape != (shape.rows, shape.cols):
        raise DimensionError(f"expected shape {shape}, got {a.shape[0]}x{a.shape[1]}")
    return a


def dagger(x: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return x.conj().T


def frob(x: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(x))


def matrix_units(shape: Shape) -> np.ndarray:
    """All matrix units of ``shape`` stacked row-major, as a (m*n, m, n) array."""
    return np.eye(shape.dim, dtype=complex).reshape(shape.dim, shape.rows, shape.cols)


class MatrixMap:
    """A linear map M_{m,n} -> M_{r,s} stored by its images of matrix units.

    ``action`` has shape (m*n, r, s); entry k is the image of the k-th
    matrix unit in row-major order (k = i*n + j).  Instances are immutable.
    """

    __slots__ = ("domain", "codomain", "action")

    def __init__(self, domain: Shape, codomain: Shape, action):
        act = np.asarray(action, dtype=complex)
        if act.shape != (domain.dim, codomain.rows, codomain.cols):
            raise DimensionError(
                f"action tensor has shape {act.shape}, expected "
                f"({domain.dim}, {codomain.rows}, {codomain.cols})"
            )
        act = act.copy()
        act.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "codomain", codomain)
        object.__setattr__(self, "action", act)

    def __setattr__(self, name, value):
        raise AttributeError("MatrixMap is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_function(cls, domain: Shape, codomain: Shape, fn) -> "MatrixMap":
        """Build a map by evaluating ``fn`` on every matrix unit of ``domain``."""
        images = [as_matrix(fn(e), codomain) for e in matrix_units(domain)]
        return cls(domain, codomain, np.stack(images))

    @classmethod
    def identity(cls, shape: Shape) -> "MatrixMap":
        return cls(shape, shape, matrix_units(shape))

    @classmethod
    def zero(cls, domain: Shape, codomain: Shape) -> "MatrixMap":
        return cls(domain, codomain,
                   np.zeros((domain.dim, codomain.rows, codomain.cols), dtype=complex))

    @classmethod
    def transpose_map(cls, n: int) -> "MatrixMap":
        sh = Shape(n, n)
        return cls.from_function(sh, sh, lambda e: e.T)

    @classmethod
    def from_matrix(cls, domain: Shape, codomain: Shape, mat) -> "MatrixMap":
        """Inverse of :meth:`as_matrix_operator`."""
        m = np.asarray(mat, dtype=complex)
        if m.shape != (codomain.dim, domain.dim):
            raise DimensionError(f"operator matrix has shape {m.shape}, expected "
                                 f"({codomain.dim}, {domain.dim})")
        act = m.T.reshape(domain.dim, codomain.rows, codomain.cols)
        return cls(domain, codomain, act)

    # -- basic calculus ----------------------------------------------------

    def apply(self, x) -> np.ndarray:
        """Evaluate the map: sum_ij x_ij T(E_ij)."""
        xm = as_matrix(x, self.domain)
        return np.tensordot(xm.reshape(-1), self.action, axes=1)

    def __call__(self, x) -> np.ndarray:
        return self.apply(x)

    def apply_amplified(self, k: int, x) -> np.ndarray:
        """Evaluate id_k (x) T on a (k*m, k*n) matrix without materializing it."""
        if k < 1:
            raise ArgumentError("amplification level must be >= 1")
        m, n = self.domain.rows, self.domain.cols
        r, s = self.codomain.rows, self.codomain.cols
        xm = as_matrix(x)
        if xm.shape != (k * m, k * n):
            raise DimensionError(f"expected {k * m}x{k * n}, got {xm.shape[0]}x{xm.shape[1]}")
        blocks = xm.reshape(k, m, k, n)
        act4 = self.action.reshape(m, n, r, s)
        out = np.einsum("aibj,ijpq->apbq", blocks, act4)
        return out.reshape(k * r, k * s)

    def amplify(self, k: int) -> "MatrixMap":
        """The map id_k (x) T : M_{km,kn} -> M_{kr,ks}, acting block-entrywise."""
        if k < 1:
            raise ArgumentError("amplification level must be >= 1")
        if k == 1:
            return self
        m, n = self.domain.rows, self.domain.cols
        r, s = self.codomain.rows, self.codomain.cols
        dom = Shape(k * m, k * n)
        cod = Shape(k * r, k * s)
        act = np.zeros((dom.dim, cod.rows, cod.cols), dtype=complex)
        act4 = self.action.reshape(m, n, r, s)
        for a in range(k):
            for b in range(k):
                for i in range(m):
                    for j in range(n):
                        unit = (a * m + i) * dom.cols + (b * n + j)
                        act[unit, a * r:(a + 1) * r, b * s:(b + 1) * s] = act4[i, j]
        return MatrixMap(dom, cod, act)

    def adjoint(self) -> "MatrixMap":
        """The map x -> T(x*)* from M_{n,m} to M_{s,r}."""
        m, n = self.domain.rows, self.domain.cols
        act4 = self.action.reshape(m, n, self.codomain.rows, self.codomain.cols)
        # image of E_ji (unit of M_{n,m}) is T(E_ij)^*
        adj = np.conj(np.transpose(act4, (1, 0, 3, 2)))
        return MatrixMap(Shape(n, m), Shape(self.codomain.cols, self.codomain.rows),
                         adj.reshape(n * m, self.codomain.cols, self.codomain.rows))

    # -- derived views -----------------------------------------------------

    def as_matrix_operator(self) -> np.ndarray:
        """The (r*s, m*n) matrix acting on row-major vectorizations."""
        return self.action.reshape(self.domain.dim, self.codomain.dim).T

    def unit_images(self) -> np.ndarray:
        """Images of the matrix units, shape (m*n, r, s)."""
        return self.action

    def compose(self, other: "MatrixMap") -> "MatrixMap":
        """self after other."""
        if other.codomain != self.domain:
            raise DimensionError("composition shapes do not match")
        mat = self.as_matrix_operator() @ other.as_matrix_operator()
        return MatrixMap.from_matrix(other.domain, self.codomain, mat)

    def scale(self, c: complex) -> "MatrixMap":
        return MatrixMap(self.domain, self.codomain, c * self.action)

    def add(self, other: "MatrixMap") -> "MatrixMap":
        if other.domain != self.domain or other.codomain != self.codomain:
            raise DimensionError("sum shapes do not match")
        return MatrixMap(self.domain, self.codomain, self.action + other.action)

    def action_norm(self) -> float:
        """Frobenius norm of the action tensor."""
        return float(np.linalg.norm(self.action))

    def injectivity(self) -> tuple[float, np.ndarray | None]:
        """Smallest singular value of the operator matrix and, when it is
        degenerate, a unit kernel vector reshaped to the domain."""
        op = self.as_matrix_operator()
        _, sv, vh = np.linalg.svd(op)
        smin = float(sv[-1]) if len(sv) == self.domain.dim else 0.0
        kern = vh[-1].conj().reshape(self.domain.rows, self.domain.cols)
        return smin, kern

    def is_injective(self, tol: float = DEFAULT_TOL) -> bool:
        op = self.as_matrix_operator()
        sv = np.linalg.svd(op, compute_uv=False)
        if len(sv) < self.domain.dim or sv[0] == 0.0:
            return False
        return bool(sv[min(self.domain.dim, len(sv)) - 1] > tol * sv[0])

    def __repr__(self):
        return f"MatrixMap({self.domain} -> {self.codomain})"


@dataclass(frozen=True)
class AmplifiedMap:
    """Lazy view of id_k (x) T; evaluates blockwise without a big tensor."""

    base: MatrixMap
    level: int

    def __post_init__(self):
        if self.level < 1:
            raise ArgumentError("amplification level must be >= 1")

    @property
    def domain(self) -> Shape:
        return Shape(self.level * self.base.domain.rows, self.level * self.base.domain.cols)

    @property
    def codomain(self) -> Shape:
        return Shape(self.level * self.base.codomain.rows, self.level * self.base.codomain.cols)

    def apply(self, x) -> np.ndarray:
        return self.base.apply_amplified(self.level, x)

    def __call__(self, x) -> np.ndarray:
        return self.apply(x)

    def to_map(self) -> MatrixMap:
        return self.base.amplify(self.level)
