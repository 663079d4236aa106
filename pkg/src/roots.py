"""
Root decomposition of g_C with respect to a Cartan subalgebra inside l_C,
the projection of enveloping-algebra elements into U(h) and the
infinitesimal character.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from .errors import DefectiveAd, NotCartan
from .liealg import GroupElement, adjoint_matrix, as_matrix
from .orbit import HyperbolicOrbit, lifted_hamiltonian, phi
from .uea import UEABasis, UEAElement, change_basis, letter, pbw_normal_form, symmetric_symbol, uea_bracket

CARTAN_TOL = 1e-9
ROOT_TOL = 1e-8
CENTRAL_TOL = 1e-8

Monomial = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class RootSystemData:
    """
    cartan: d x r complex coordinates of Y_1..Y_r; roots[k] holds alpha(Y_i);
    root_vectors: d x (#roots) coordinates of E_alpha; basis orders the
    complex basis as negative roots | Cartan | positive roots.
    """

    cartan: np.ndarray
    cartan_labels: Tuple[str, ...]
    roots: Tuple[np.ndarray, ...]
    root_vectors: np.ndarray
    positive: Tuple[bool, ...]
    basis: UEABasis
    x0_in_cartan: np.ndarray

    @property
    def rank(self) -> int:
        return self.cartan.shape[1]

    def relation_residual(self) -> float:
        """max ||[Y_i, E_alpha] - alpha_i E_alpha|| over stored roots."""
        alg = self.basis.algebra
        worst = 0.0
        for k, alpha in enumerate(self.roots):
            e = self.root_vectors[:, k]
            for i in range(self.rank):
                lhs = alg.ad_matrix(self.cartan[:, i]) @ e
                worst = max(worst, float(np.linalg.norm(lhs - alpha[i] * e)))
        return worst


@dataclass(frozen=True)
class HCPolynomial:
    """Commutative polynomial in the Cartan basis, keyed by multidegree."""

    coefficients: Dict[Monomial, complex]
    variables: Tuple[str, ...]
    central: bool = True
    scheme: str = "symmetric"

    def evaluate(self, values: Sequence[complex]) -> complex:
        values = np.asarray(values, dtype=complex)
        return complex(
            sum(c * np.prod(values ** np.array(k)) for k, c in self.coefficients.items())
        )

    def evaluate_matrices(self, matrices: Sequence[np.ndarray]) -> np.ndarray:
        """Substitute commuting m x m matrices for the variables."""
        m = matrices[0].shape[0]
        out = np.zeros((m, m), dtype=complex)
        for k, c in self.coefficients.items():
            term = np.eye(m, dtype=complex)
            for mat, power in zip(matrices, k):
                term = term @ np.linalg.matrix_power(mat, power)
            out += c * term
        return out

    def coefficient(self, monomial: Monomial) -> complex:
        return self.coefficients.get(tuple(monomial), 0.0)

    def to_terms(self) -> List[List]:
        rows = []
        for k in sorted(self.coefficients, key=lambda k: (sum(k), tuple(-p for p in k))):
            c = self.coefficients[k]
            word = " ".join(f"{v}^{p}" if p > 1 else v for v, p in zip(self.variables, k) if p) or "1"
            rows.append([word, float(c.real), float(c.imag)])
        return rows


def _generic_weights(r: int) -> np.ndarray:
    return np.sqrt(np.arange(2, r + 2) + 0.37) * (1.0 + 0.29j * np.arange(r))


def default_cartan_basis(orbit: HyperbolicOrbit) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """
    Centralizer in g of a generic element of l, reported on standard basis
    vectors when a subset of them spans it.
    """
    alg = orbit.algebra
    weights = np.real(_generic_weights(orbit.l_basis.shape[1]))
    generic = orbit.l_basis @ weights
    centralizer = null_space(alg.ad_matrix(generic), rcond=1e-9)
    r = centralizer.shape[1]
    proj = centralizer @ centralizer.T
    hits = [j for j in range(alg.d) if np.linalg.norm(proj[:, j] - np.eye(alg.d)[:, j]) < 1e-9]
    if len(hits) == r:
        return np.eye(alg.d)[:, hits].astype(complex), tuple(alg.labels[j] for j in hits)
    return centralizer.astype(complex), tuple(f"Y{i + 1}" for i in range(r))


def _positive(alpha: np.ndarray, x0c: np.ndarray, tol: float) -> bool:
    score = np.real(np.dot(alpha, x0c))
    if abs(score) > tol:
        return bool(score > 0)
    for v in np.concatenate([alpha.real, alpha.imag]):
        if abs(v) > tol:
            return bool(v > 0)
    raise NotCartan("zero joint eigenvalue among roots")


def root_decomposition(
    orbit: HyperbolicOrbit,
    cartan_basis: Optional[np.ndarray] = None,
    labels: Optional[Sequence[str]] = None,
    g: Optional[GroupElement] = None,
) -> RootSystemData:
    """
    Joint eigendecomposition of ad(Y_i) on g_C.

    Args:
        orbit: supplies X0 (positivity) and l (containment check)
        cartan_basis: d x r coordinates of Y_i; defaults to default_cartan_basis
        labels: variable names for the Y_i
        g: conjugate the Cartan, X0 and l by Ad_g first

    Returns:
        RootSystemData with positive roots chosen by Re alpha(X0) > 0

    Raises:
        NotCartan: Y_i outside l, not commuting, or not maximal
        DefectiveAd: the joint eigenvectors are numerically dependent
    """
    alg = orbit.algebra
    if cartan_basis is None:
        cartan_basis, default_labels = default_cartan_basis(orbit)
        labels = labels or default_labels
    h = np.atleast_2d(np.asarray(cartan_basis, dtype=complex))
    if h.shape[0] != alg.d:
        h = h.T
    r = h.shape[1]
    labels = tuple(labels) if labels else tuple(f"Y{i + 1}" for i in range(r))
    x0 = orbit.x0.coeffs.astype(complex)
    p_l = orbit.projectors["l"]
    if g is not None:
        ad_g = adjoint_matrix(alg, as_matrix(g))
        h, x0 = ad_g @ h, ad_g @ x0
        p_l = ad_g @ p_l @ np.linalg.inv(ad_g)

    scale = 1.0 + float(np.abs(h).max(initial=0.0))
    if np.linalg.norm(h - p_l @ h) > CARTAN_TOL * scale:
        raise NotCartan("Cartan basis is not contained in l")
    for i in range(r):
        for j in range(i + 1, r):
            if np.linalg.norm(alg.bracket_coeffs(h[:, i], h[:, j])) > CARTAN_TOL * scale**2:
                raise NotCartan(f"Cartan elements {labels[i]} and {labels[j]} do not commute")

    ads = [alg.ad_matrix(h[:, i]) for i in range(r)]
    generic = sum(w * a for w, a in zip(_generic_weights(r), ads)) if r else np.zeros((alg.d, alg.d))
    values, vectors = np.linalg.eig(generic)
    if np.linalg.cond(vectors) > 1e10:
        raise DefectiveAd("ad of the Cartan basis is not diagonalizable")
    gen_scale = 1.0 + float(np.abs(values).max(initial=0.0))
    zero = np.abs(values) <= ROOT_TOL * gen_scale
    if zero.sum() != r or np.linalg.matrix_rank(np.hstack([h, vectors[:, zero]]), tol=1e-7) != r:
        raise NotCartan(f"centralizer of the Cartan basis has dimension {int(zero.sum())}, expected {r}")

    roots, root_vectors = [], []
    for k in np.nonzero(~zero)[0]:
        e = vectors[:, k]
        e = e / e[np.argmax(np.abs(e))]
        alpha = np.array([np.vdot(e, a @ e) / np.vdot(e, e) for a in ads])
        for a, ai in zip(ads, alpha):
            if np.linalg.norm(a @ e - ai * e) > ROOT_TOL * scale * np.linalg.norm(e):
                raise NotCartan("root vector is not a joint eigenvector")
        roots.append(alpha)
        root_vectors.append(e)
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if np.linalg.norm(roots[i] - roots[j]) <= ROOT_TOL * scale:
                raise NotCartan("root space of dimension > 1")

    x0c, *_ = np.linalg.lstsq(h, x0, rcond=None)
    flags = [_positive(a, x0c, ROOT_TOL * scale) for a in roots]

    def key(k):
        a = roots[k]
        return tuple(np.round(np.concatenate([a.real, a.imag]), 8))

    pos = sorted([k for k, f in enumerate(flags) if f], key=key, reverse=True)
    neg = []
    for k in pos:
        match = [j for j in range(len(roots)) if not flags[j] and np.linalg.norm(roots[j] + roots[k]) <= ROOT_TOL * scale]
        if len(match) != 1:
            raise NotCartan("positive root without a unique negative partner")
        neg.append(match[0])
    order = neg + pos
    root_vecs = np.array([root_vectors[k] for k in order]).T.reshape(alg.d, len(order))

    vecs = np.hstack([root_vecs[:, : len(neg)], h, root_vecs[:, len(neg) :]])
    basis_labels = tuple(
        [f"E-{i + 1}" for i in range(len(neg))] + list(labels) + [f"E+{i + 1}" for i in range(len(pos))]
    )
    basis = UEABasis(alg, vecs, (len(neg), r, len(pos)), basis_labels)
    return RootSystemData(
        cartan=h,
        cartan_labels=labels,
        roots=tuple(roots[k] for k in order),
        root_vectors=root_vecs,
        positive=tuple([False] * len(neg) + [True] * len(pos)),
        basis=basis,
        x0_in_cartan=x0c,
    )


def _cartan_monomial(word: Tuple[int, ...], basis: UEABasis) -> Optional[Monomial]:
    s = basis.cartan_slice
    degrees = [0] * (s.stop - s.start)
    for p in word:
        if not basis.is_cartan(p):
            return None
        degrees[p - s.start] += 1
    return tuple(degrees)


def centrality_residual(z: UEAElement) -> float:
    """max over letters X_p of the largest coefficient of [Z, X_p] in normal form."""
    return max(
        (uea_bracket(z, letter(z.basis, p)).max_coeff() for p in range(z.basis.size)),
        default=0.0,
    )


def hc_project(z: UEAElement, roots: RootSystemData, scheme: str = "symmetric") -> HCPolynomial:
    """
    Projection of Z into U(h) as a polynomial in the Cartan basis.

    Args:
        z: element over any basis of the same algebra
        roots: root data fixing the Cartan basis and the block order
        scheme: "symmetric" restricts the symmetric symbol of Z to h;
            "pbw" normal-orders negative < Cartan < positive and keeps
            Cartan-only words

    Returns:
        The HCPolynomial, flagged non-central when [Z, X] does not vanish
    """
    zr = change_basis(z, roots.basis)
    central = centrality_residual(zr) <= CENTRAL_TOL
    if not central:
        logging.warning("hc_project called on a non-central element; the result is not a character")
    if scheme == "pbw":
        source = pbw_normal_form(zr).terms
    elif scheme == "symmetric":
        source = symmetric_symbol(zr)
    else:
        raise ValueError(f"unknown projection scheme {scheme!r}")
    coefficients: Dict[Monomial, complex] = {}
    for word, c in source.items():
        k = _cartan_monomial(word, roots.basis)
        if k is not None:
            coefficients[k] = coefficients.get(k, 0) + c
    coefficients = {k: complex(c) for k, c in coefficients.items() if abs(c) > 1e-9}
    return HCPolynomial(coefficients, roots.cartan_labels, central, scheme)


def cartan_phi_values(orbit: HyperbolicOrbit, roots: RootSystemData) -> np.ndarray:
    return np.array([np.dot(orbit.phi_coeffs, roots.cartan[:, i]) for i in range(roots.rank)])


def infinitesimal_character(
    z: UEAElement,
    orbit: HyperbolicOrbit,
    roots: RootSystemData,
    scheme: str = "symmetric",
) -> complex:
    """chi(Z) = q(phi(Y_1), ..., phi(Y_r))."""
    q = hc_project(z, roots, scheme)
    return q.evaluate(cartan_phi_values(orbit, roots))


def infchar_at_point(
    z: UEAElement,
    orbit: HyperbolicOrbit,
    g: GroupElement,
    roots: RootSystemData,
    scheme: str = "symmetric",
    alphas: Sequence = (1.0, 3.0),
) -> complex:
    """
    Evaluate the projection for the Cartan conjugated by g on the lifted
    Hamiltonians of the conjugated Cartan at [g, alpha] for several frames.
    """
    conj = root_decomposition(orbit, roots.cartan, roots.cartan_labels, g=g)
    q = hc_project(z, conj, scheme)
    m = orbit.dim_h
    values = []
    for alpha in alphas:
        frame = alpha * np.eye(m) if np.ndim(alpha) == 0 else np.asarray(alpha)
        hams = [lifted_hamiltonian(orbit, conj.cartan[:, i], g, frame) for i in range(conj.rank)]
        values.append(q.evaluate_matrices(hams) if hams else q.evaluate([]) * np.eye(m))
    spread = max(float(np.abs(v - values[0]).max()) for v in values)
    if spread > 1e-12:
        logging.warning("infinitesimal character depends on the frame (spread %.2e)", spread)
    return complex(values[0][0, 0])
