"""
Universal enveloping algebra of g_C over a chosen ordered basis.

Elements are sparse maps word -> complex coefficient, where a word is a
tuple of indices into the basis. Products concatenate words; the PBW normal
form sorts every word with X_a X_b -> X_b X_a + [X_a, X_b] for a > b.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BasisMismatch, ConfigError, SingularKilling
from .liealg import MatrixLieAlgebra

SPARSE_TOL = 1e-9
BRACKET_TOL = 1e-14

Word = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class UEABasis:
    """
    Ordered complex basis of g_C: column p of `vectors` holds the algebra
    coordinates of basis element p. `blocks` = (negative, cartan, positive) sizes.
    """

    algebra: MatrixLieAlgebra
    vectors: np.ndarray
    blocks: Tuple[int, int, int]
    labels: Tuple[str, ...]
    structure: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        vinv = np.linalg.inv(v)
        c = np.einsum("ip,jq,ijk,rk->pqr", v, v, self.algebra.structure, vinv)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "structure", c)

    @property
    def size(self) -> int:
        return self.vectors.shape[1]

    @property
    def cartan_slice(self) -> slice:
        neg, car, _ = self.blocks
        return slice(neg, neg + car)

    def is_cartan(self, p: int) -> bool:
        s = self.cartan_slice
        return s.start <= p < s.stop

    @classmethod
    def standard(cls, algebra: MatrixLieAlgebra) -> "UEABasis":
        return cls(algebra, np.eye(algebra.d), (0, algebra.d, 0), tuple(algebra.labels))


_STANDARD_CACHE: Dict[int, UEABasis] = {}


def standard_basis(algebra: MatrixLieAlgebra) -> UEABasis:
    """One shared standard UEABasis per algebra so elements built separately can be combined."""
    key = id(algebra)
    if key not in _STANDARD_CACHE or _STANDARD_CACHE[key].algebra is not algebra:
        _STANDARD_CACHE[key] = UEABasis.standard(algebra)
    return _STANDARD_CACHE[key]


def _sparsify(terms: Dict[Word, complex], tol: float = SPARSE_TOL) -> Dict[Word, complex]:
    return {w: complex(c) for w, c in terms.items() if abs(c) > tol}


@dataclass(frozen=True, eq=False)
class UEAElement:
    basis: UEABasis
    terms: Dict[Word, complex]

    def __post_init__(self):
        object.__setattr__(self, "terms", _sparsify(self.terms))

    def _check(self, other: "UEAElement") -> None:
        if other.basis is not self.basis:
            raise BasisMismatch("UEA elements live over different bases")

    def __add__(self, other: "UEAElement") -> "UEAElement":
        self._check(other)
        out = Counter(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return UEAElement(self.basis, dict(out))

    def __sub__(self, other: "UEAElement") -> "UEAElement":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "UEAElement":
        return UEAElement(self.basis, {w: scalar * c for w, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, UEAElement):
            return uea_multiply(self, other)
        return other * self

    def __neg__(self) -> "UEAElement":
        return (-1.0) * self

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_normal(self) -> bool:
        return all(all(a <= b for a, b in zip(w, w[1:])) for w in self.terms)

    def distance(self, other: "UEAElement") -> float:
        return (self - other).max_coeff()

    def to_terms(self) -> List[List]:
        """[[word, re, im], ...] with words spelled in basis labels ('1' for the unit)."""
        rows = []
        for w in sorted(self.terms, key=lambda w: (len(w), w)):
            c = self.terms[w]
            word = " ".join(self.basis.labels[p] for p in w) if w else "1"
            rows.append([word, float(c.real), float(c.imag)])
        return rows


def unit(basis: UEABasis) -> UEAElement:
    return UEAElement(basis, {(): 1.0})


def letter(basis: UEABasis, p: int) -> UEAElement:
    return UEAElement(basis, {(p,): 1.0})


def from_terms(basis: UEABasis, rows: Sequence[Sequence]) -> UEAElement:
    """Inverse of UEAElement.to_terms."""
    index = {label: p for p, label in enumerate(basis.labels)}
    terms: Dict[Word, complex] = {}
    for row in rows:
        if len(row) != 3:
            raise ConfigError(f"UEA terms are [word, re, im], got {row!r}")
        word, re, im = row
        try:
            w = () if word.strip() in ("", "1") else tuple(index[t] for t in word.split())
        except KeyError as e:
            raise ConfigError(f"unknown basis label {e} in word {word!r}")
        terms[w] = terms.get(w, 0) + complex(float(re), float(im))
    return UEAElement(basis, terms)


def uea_multiply(x: UEAElement, y: UEAElement) -> UEAElement:
    """Concatenation product on words, extended bilinearly."""
    x._check(y)
    out: Dict[Word, complex] = {}
    for wx, cx in x.terms.items():
        for wy, cy in y.terms.items():
            w = wx + wy
            out[w] = out.get(w, 0) + cx * cy
    return UEAElement(x.basis, out)


def pbw_normal_form(
    x: UEAElement,
    strategy: str = "leftmost",
    rng: Optional[np.random.Generator] = None,
) -> UEAElement:
    """
    Sort every word by rewriting an adjacent inversion a > b as
    X_b X_a + [X_a, X_b].

    Args:
        x: element to normalize
        strategy: "leftmost" rewrites the first inversion, "random" a random one
        rng: generator for the random strategy

    Returns:
        The normal form; every word is non-decreasing
    """
    if strategy == "random" and rng is None:
        rng = np.random.default_rng(0)
    c = x.basis.structure
    result: Dict[Word, complex] = {}
    pending: Dict[Word, complex] = dict(x.terms)
    while pending:
        word, coef = pending.popitem()
        if abs(coef) < BRACKET_TOL:
            continue
        inversions = [i for i in range(len(word) - 1) if word[i] > word[i + 1]]
        if not inversions:
            result[word] = result.get(word, 0) + coef
            continue
        i = inversions[0] if strategy == "leftmost" else inversions[int(rng.integers(len(inversions)))]
        a, b = word[i], word[i + 1]
        head, tail = word[:i], word[i + 2 :]
        swapped = head + (b, a) + tail
        pending[swapped] = pending.get(swapped, 0) + coef
        for r in np.nonzero(np.abs(c[a, b]) > BRACKET_TOL)[0]:
            w = head + (int(r),) + tail
            pending[w] = pending.get(w, 0) + coef * c[a, b, r]
    return UEAElement(x.basis, result)


def uea_bracket(x: UEAElement, y: UEAElement) -> UEAElement:
    """Normal form of xy - yx."""
    return pbw_normal_form(uea_multiply(x, y) - uea_multiply(y, x))


def change_basis(z: UEAElement, basis: UEABasis) -> UEAElement:
    """Re-express z over another ordered basis of the same algebra (no normalization)."""
    if z.basis is basis:
        return z
    if z.basis.algebra is not basis.algebra:
        raise BasisMismatch("cannot change basis across algebras")
    transfer = np.linalg.solve(basis.vectors, z.basis.vectors)
    expansions = [
        [(q, transfer[q, p]) for q in np.nonzero(np.abs(transfer[:, p]) > BRACKET_TOL)[0]]
        for p in range(z.basis.size)
    ]
    out: Dict[Word, complex] = {}
    for word, coef in z.terms.items():
        partial: Dict[Word, complex] = {(): coef}
        for p in word:
            nxt: Dict[Word, complex] = {}
            for w, cw in partial.items():
                for q, t in expansions[p]:
                    key = w + (int(q),)
                    nxt[key] = nxt.get(key, 0) + cw * t
            partial = nxt
        for w, cw in partial.items():
            out[w] = out.get(w, 0) + cw
    return UEAElement(basis, out)


def casimir(algebra: MatrixLieAlgebra, normalization: str = "raw", basis: Optional[UEABasis] = None) -> UEAElement:
    """
    C = sum_ij (B^-1)_ij X_i X_j.

    With the raw Killing form the so(1,3) Casimir is 1/4 (X1^2 + X2^2 + X3^2
    - X4^2 - X5^2 - X6^2). normalization="unit" uses B / |B(X1, X1)| instead.

    Raises:
        SingularKilling: the Killing form is degenerate (g has a centre)
    """
    b = np.array(algebra.killing, dtype=float)
    if normalization == "unit":
        b = b / algebra.killing_scale
    elif normalization != "raw":
        raise ValueError(f"unknown Casimir normalization {normalization!r}")
    if np.linalg.matrix_rank(b, tol=1e-9 * max(1.0, np.abs(b).max())) < algebra.d:
        raise SingularKilling(f"Killing form of {algebra.name} is degenerate")
    binv = np.linalg.inv(b)
    std = standard_basis(algebra)
    terms = {(i, j): binv[i, j] for i in range(algebra.d) for j in range(algebra.d)}
    c = UEAElement(std, terms)
    return change_basis(c, basis) if basis is not None else c


def symmetrize(x: UEAElement) -> UEAElement:
    """The symmetrization map: each word becomes the average of its permutations."""
    out: Dict[Word, complex] = {}
    for word, coef in x.terms.items():
        perms = Counter(permutations(word))
        weight = coef / math.factorial(len(word))
        for w, count in perms.items():
            out[w] = out.get(w, 0) + weight * count
    return UEAElement(x.basis, out)


def symmetric_symbol(x: UEAElement) -> Dict[Word, complex]:
    """
    The commutative polynomial s with symmetrize(s) = x, keyed by sorted words.

    Peels off the top degree of the normal form, subtracts its
    symmetrization and repeats on the lower-degree remainder.
    """
    symbol: Dict[Word, complex] = {}
    rem = pbw_normal_form(x)
    while not rem.is_zero():
        k = rem.degree
        top = {w: c for w, c in rem.terms.items() if len(w) == k}
        for w, c in top.items():
            symbol[w] = symbol.get(w, 0) + c
        rem = pbw_normal_form(rem - symmetrize(UEAElement(x.basis, top)))
    return _sparsify(symbol)


def random_element(basis: UEABasis, rng: np.random.Generator, terms: int = 4, max_degree: int = 4) -> UEAElement:
    out: Dict[Word, complex] = {}
    for _ in range(terms):
        k = int(rng.integers(0, max_degree + 1))
        w = tuple(int(p) for p in rng.integers(0, basis.size, size=k))
        out[w] = out.get(w, 0) + complex(rng.normal(), rng.normal())
    return UEAElement(basis, out)
