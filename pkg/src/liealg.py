"""
Matrix Lie algebra core: bases, brackets, structure constants, Killing form,
Ad / Ad* and the matrix exponential / logarithm.

Everything downstream (orbits, enveloping algebra, flows) works in the
coordinates of the ordered basis X_1..X_d held by a MatrixLieAlgebra.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm, logm, sqrtm

from .errors import BasisMismatch, ClosureError, ConfigError, LogDomainError

INDEPENDENCE_TOL = 1e-10
CLOSURE_TOL = 1e-10
LOG_TOL = 1e-8


class MatrixLieAlgebra:
    """A real Lie algebra of n x n matrices with a fixed ordered basis."""

    def __init__(
        self,
        name: str,
        basis: Sequence[np.ndarray],
        labels: Optional[Sequence[str]] = None,
        group_tag: Optional[str] = None,
        group_metric: Optional[np.ndarray] = None,
    ):
        basis = np.array(basis, dtype=float)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise ValueError(f"basis must be a stack of square matrices, got {basis.shape}")
        self.name = name
        self.d, self.n = basis.shape[0], basis.shape[1]
        basis.setflags(write=False)
        self.basis = basis
        self.labels = tuple(labels) if labels else tuple(f"X{i + 1}" for i in range(self.d))
        self.group_tag = group_tag
        self.group_metric = None if group_metric is None else np.array(group_metric, dtype=float)

        self._vec = basis.reshape(self.d, self.n * self.n).T
        sv = np.linalg.svd(self._vec, compute_uv=False)
        if sv[-1] <= INDEPENDENCE_TOL * max(sv[0], 1.0):
            raise ClosureError(f"basis of {name} is linearly dependent (sigma_min={sv[-1]:.2e})")
        self._pinv = np.linalg.pinv(self._vec)

        self.structure = self._structure_constants()
        self.structure.setflags(write=False)
        self.killing = killing_form(self)
        self.killing.setflags(write=False)
        logging.info("Built algebra %s: n=%d, d=%d", name, self.n, self.d)

    def __repr__(self):
        return f"MatrixLieAlgebra({self.name!r}, n={self.n}, d={self.d})"

    def coords(self, matrix: np.ndarray, check: bool = True, tol: float = CLOSURE_TOL):
        """
        Least-squares coordinates of a matrix in the basis.

        Args:
            matrix: n x n real or complex matrix
            check: raise ClosureError when the matrix leaves span(basis)
            tol: relative closure tolerance

        Returns:
            The coordinate vector (and nothing else when check is True),
            otherwise a (coords, residual) pair
        """
        v = np.asarray(matrix).reshape(-1)
        x = self._pinv @ v
        residual = float(np.linalg.norm(self._vec @ x - v))
        if check:
            if residual > tol * (1.0 + np.linalg.norm(v)):
                raise ClosureError(
                    f"matrix leaves span of {self.name} basis (residual {residual:.2e})"
                )
            return x
        return x, residual

    def matrix(self, coeffs: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs), self.basis, axes=(0, 0))

    def element(self, coeffs) -> "AlgebraElement":
        return AlgebraElement(self, np.asarray(coeffs))

    def basis_element(self, i: int) -> "AlgebraElement":
        e = np.zeros(self.d)
        e[i] = 1.0
        return AlgebraElement(self, e)

    def ad_matrix(self, coeffs: np.ndarray) -> np.ndarray:
        """Matrix of ad(X) acting on coordinates: column j holds [X, X_j]."""
        return np.einsum("i,ijk->kj", np.asarray(coeffs), self.structure)

    def bracket_coeffs(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", np.asarray(x), np.asarray(y), self.structure)

    @property
    def killing_scale(self) -> float:
        """|B(X_1, X_1)|: dividing the raw Killing form by it gives the unit normalization."""
        s = abs(float(self.killing[0, 0]))
        return s if s > 0 else 1.0

    def normalized_killing(self) -> np.ndarray:
        return self.killing / self.killing_scale

    def random_coeffs(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        x = rng.normal(size=self.d)
        return scale * x / max(np.linalg.norm(x), 1e-300) * rng.uniform(0.0, 1.0)

    def _structure_constants(self) -> np.ndarray:
        xy = np.einsum("iab,jbc->ijac", self.basis, self.basis)
        comm = xy - xy.transpose(1, 0, 2, 3)
        flat = comm.reshape(self.d * self.d, self.n * self.n)
        c = flat @ self._pinv.T
        residual = np.linalg.norm(c @ self._vec.T - flat, axis=1)
        bound = CLOSURE_TOL * (1.0 + np.linalg.norm(flat, axis=1))
        if np.any(residual > bound):
            i, j = divmod(int(np.argmax(residual - bound)), self.d)
            raise ClosureError(
                f"[{self.labels[i]}, {self.labels[j]}] leaves span of {self.name} "
                f"(residual {residual.max():.2e})"
            )
        c = c.reshape(self.d, self.d, self.d)
        return 0.5 * (c - c.transpose(1, 0, 2))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: MatrixLieAlgebra
    coeffs: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.algebra.matrix(self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_algebra(self, other)
        return AlgebraElement(self.algebra, self.coeffs + other.coeffs)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_algebra(self, other)
        return AlgebraElement(self.algebra, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "AlgebraElement":
        return AlgebraElement(self.algebra, scalar * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, -self.coeffs)


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    group_tag: Optional[str] = None
    metric: Optional[np.ndarray] = None

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, self.group_tag, self.metric)

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix), self.group_tag, self.metric)

    def constraint_residual(self) -> float:
        """Violation of the defining equation of the tagged group (0 when untagged)."""
        g = self.matrix
        if abs(np.linalg.det(g)) < 1e-300:
            return float("inf")
        if self.group_tag in ("so", "sp") and self.metric is not None:
            return float(np.linalg.norm(g.T @ self.metric @ g - self.metric))
        if self.group_tag == "sl":
            return abs(float(np.linalg.det(g)) - 1.0)
        return 0.0


@dataclass(frozen=True, eq=False)
class Covector:
    coeffs: np.ndarray

    def __call__(self, x) -> complex:
        return np.dot(self.coeffs, as_coeffs(x))


def _same_algebra(x: AlgebraElement, y: AlgebraElement) -> None:
    if x.algebra is not y.algebra:
        raise BasisMismatch(f"elements of {x.algebra.name} and {y.algebra.name} cannot be combined")


def as_coeffs(x: Union[AlgebraElement, np.ndarray, Sequence[float]]) -> np.ndarray:
    if isinstance(x, AlgebraElement):
        return x.coeffs
    return np.asarray(x)


def as_matrix(g: Union[GroupElement, np.ndarray]) -> np.ndarray:
    if isinstance(g, GroupElement):
        return g.matrix
    return np.asarray(g)


def identity(algebra: MatrixLieAlgebra) -> GroupElement:
    return GroupElement(np.eye(algebra.n), algebra.group_tag, algebra.group_metric)


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """[X, Y] = XY - YX, re-expressed in basis coordinates."""
    _same_algebra(x, y)
    mx, my = x.matrix, y.matrix
    return AlgebraElement(x.algebra, x.algebra.coords(mx @ my - my @ mx))


def killing_form(algebra: MatrixLieAlgebra) -> np.ndarray:
    """B_ij = Tr(ad X_i o ad X_j) = sum_ab c_iab c_jba (raw, unnormalized)."""
    c = algebra.structure
    b = np.einsum("iab,jba->ij", c, c)
    return 0.5 * (b + b.T)


def jacobi_residual(structure: np.ndarray) -> float:
    """Largest coordinate of [X_i,[X_j,X_k]] + cyclic over all basis triples."""
    c = np.asarray(structure)
    j = (
        np.einsum("jkl,ilm->ijkm", c, c)
        + np.einsum("kil,jlm->ijkm", c, c)
        + np.einsum("ijl,klm->ijkm", c, c)
    )
    return float(np.max(np.abs(j))) if j.size else 0.0


def killing_invariance_residual(algebra: MatrixLieAlgebra, x, y, z) -> float:
    """|B([Z,X],Y) + B(X,[Z,Y])|."""
    zx = algebra.bracket_coeffs(z, x)
    zy = algebra.bracket_coeffs(z, y)
    b = algebra.killing
    return abs(float(zx @ b @ y + x @ b @ zy))


def group_exp(a: AlgebraElement) -> GroupElement:
    """exp(A) by Pade scaling-and-squaring."""
    alg = a.algebra
    return GroupElement(expm(a.matrix), alg.group_tag, alg.group_metric)


def _real_log(m: np.ndarray, roots: int = 6) -> np.ndarray:
    scale = 1.0 + np.linalg.norm(m)
    log = logm(m)
    if np.iscomplexobj(log) and np.linalg.norm(log.imag) > 1e-9 * scale:
        # path-following through repeated principal square roots
        r = m
        for _ in range(roots):
            r = sqrtm(r)
        log = logm(r) * 2.0**roots
        if np.iscomplexobj(log) and np.linalg.norm(log.imag) > 1e-9 * scale:
            raise LogDomainError("matrix has no real logarithm near the principal branch")
    return np.real(log)


def group_log(g: Union[GroupElement, np.ndarray], algebra: MatrixLieAlgebra, tol: float = LOG_TOL) -> AlgebraElement:
    """
    Real logarithm of a group element, expressed in the algebra basis.

    Raises:
        LogDomainError: no real logarithm, or it leaves span(basis)
    """
    m = as_matrix(g)
    try:
        log = _real_log(m)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise LogDomainError(f"logarithm failed: {e}") from e
    coeffs, residual = algebra.coords(log, check=False)
    if residual > tol * (1.0 + np.linalg.norm(log)):
        raise LogDomainError(f"logarithm leaves span of {algebra.name} (residual {residual:.2e})")
    back = expm(algebra.matrix(coeffs))
    if np.linalg.norm(back - m) > 1e-9 * (1.0 + np.linalg.norm(m)):
        raise LogDomainError("exp(log g) does not reproduce g")
    return AlgebraElement(algebra, coeffs)


def adjoint_matrix(algebra: MatrixLieAlgebra, g: Union[GroupElement, np.ndarray]) -> np.ndarray:
    """Ad_g as a d x d matrix on coordinates (column j = Ad_g X_j)."""
    m = as_matrix(g)
    minv = np.linalg.inv(m)
    conj = np.einsum("ab,jbc,cd->jad", m, algebra.basis, minv)
    flat = conj.reshape(algebra.d, -1)
    out = flat @ algebra._pinv.T
    residual = np.linalg.norm(out @ algebra._vec.T - flat, axis=1)
    if np.any(residual > CLOSURE_TOL * 1e2 * (1.0 + np.linalg.norm(flat, axis=1))):
        raise ClosureError(f"Ad_g leaves span of {algebra.name} (residual {residual.max():.2e})")
    return out.T


def adjoint_action(g: Union[GroupElement, np.ndarray], a: AlgebraElement) -> AlgebraElement:
    m = as_matrix(g)
    conj = m @ a.matrix @ np.linalg.inv(m)
    return AlgebraElement(a.algebra, a.algebra.coords(conj, tol=CLOSURE_TOL * 1e2))


def coadjoint_action(g: Union[GroupElement, np.ndarray], eta: Covector, algebra: MatrixLieAlgebra) -> Covector:
    """<Ad*_g eta, Y> = <eta, Ad_{g^-1} Y>."""
    ad_inv = adjoint_matrix(algebra, np.linalg.inv(as_matrix(g)))
    return Covector(ad_inv.T @ eta.coeffs)


def load_algebra_file(filepath: str, name: Optional[str] = None) -> MatrixLieAlgebra:
    """
    Read a user algebra.

    Grammar: blank lines and text after '#' are ignored; the first data line
    holds "n d"; then come d blocks of n rows with n reals each (row-major).
    """
    with open(filepath, "r") as f:
        rows = [line.split("#", 1)[0].split() for line in f]
    rows = [r for r in rows if r]
    if not rows or len(rows[0]) != 2:
        raise ConfigError(f"{filepath}: first data line must be 'n d'")
    try:
        n, d = int(rows[0][0]), int(rows[0][1])
        values = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as e:
        raise ConfigError(f"{filepath}: {e}") from e
    if n <= 0 or d <= 0 or values.shape != (n * d, n):
        raise ConfigError(f"{filepath}: expected {d} blocks of {n}x{n} reals, got shape {values.shape}")
    return MatrixLieAlgebra(name or filepath, values.reshape(d, n, n))
