"""
Hyperbolic coadjoint orbits: X0, the ad(X0)-grading, the parabolic pieces
u / l / u-, the characters delta and phi, Hamiltonians, Kirillov forms, the
connection on the GL(H)-bundle, its curvature and the moment map.

Points of the orbit are carried as group representatives g (the point is
g . eta); bundle points as pairs (g, alpha) with alpha an invertible m x m
frame.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm, null_space

from .errors import (
    DatumError,
    DegenerateTraceForm,
    FactorizationError,
    LogDomainError,
    NotHyperbolic,
    NotInLevi,
    NotTangent,
    SingularFrame,
)
from .liealg import (
    AlgebraElement,
    Covector,
    GroupElement,
    MatrixLieAlgebra,
    adjoint_matrix,
    as_coeffs,
    as_matrix,
    coadjoint_action,
    group_log,
)
from .utils import decode_complex, decode_matrix, relative_error

CLUSTER_TOL = 1e-7
TANGENT_TOL = 1e-6
FRAME_COND = 1e12

Vector = Union[AlgebraElement, np.ndarray, Sequence[complex]]
Frame = Union[np.ndarray, complex, float]


@dataclass(frozen=True, eq=False)
class IntegralDatum:
    """Component table of Lambda: representatives of L-components and unitary values."""

    dim_h: int
    reps: Tuple[np.ndarray, ...]
    values: Tuple[np.ndarray, ...]

    def __len__(self):
        return len(self.reps)


@dataclass(frozen=True, eq=False)
class HyperbolicOrbit:
    algebra: MatrixLieAlgebra
    eta: Covector
    x0: AlgebraElement
    eigenvalues: np.ndarray
    grading: Dict[float, np.ndarray]
    grading_labels: Dict[float, float]
    l_basis: np.ndarray
    u_basis: np.ndarray
    uminus_basis: np.ndarray
    delta_coeffs: np.ndarray
    phi_coeffs: np.ndarray
    delta_convention: str
    datum: IntegralDatum
    projectors: Dict[str, np.ndarray] = field(repr=False)

    @property
    def dim_h(self) -> int:
        return self.datum.dim_h

    @property
    def strictly_graded(self) -> bool:
        return self.u_basis.shape[1] > 0

    def project_l(self, x: Vector) -> np.ndarray:
        return self.projectors["l"] @ as_coeffs(x)


@dataclass(frozen=True, eq=False)
class OrbitPoint:
    rep: GroupElement
    xi: Covector


def x0_from_eta(algebra: MatrixLieAlgebra, eta: Covector) -> AlgebraElement:
    """
    Solve Re Tr(X0 X_i) = eta(X_i) for X0 in g.

    Raises:
        DegenerateTraceForm: the trace form restricted to g is singular
    """
    gram = np.real(np.einsum("iab,jba->ij", algebra.basis, algebra.basis))
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > 1e12:
        raise DegenerateTraceForm(f"trace form on {algebra.name} is degenerate")
    coeffs = np.linalg.solve(gram, np.asarray(eta.coeffs, dtype=float))
    residual = float(np.max(np.abs(gram @ coeffs - eta.coeffs), initial=0.0))
    if residual > 1e-9 * (1.0 + np.max(np.abs(eta.coeffs), initial=0.0)):
        raise DegenerateTraceForm(f"X0 equations not solved (residual {residual:.2e})")
    return AlgebraElement(algebra, coeffs)


def _cluster(values: np.ndarray) -> List[float]:
    centers: List[List[float]] = []
    for v in np.sort(values):
        if centers and abs(v - centers[-1][-1]) <= CLUSTER_TOL * (1.0 + abs(v)):
            centers[-1].append(v)
        else:
            centers.append([v])
    return [float(np.mean(c)) for c in centers]


def make_datum(algebra: MatrixLieAlgebra, dim_h: int = 1, components: Sequence[Dict[str, Any]] = ()) -> IntegralDatum:
    """Parse config components; the identity component (Lambda = Id) is always first."""
    reps, values = [np.eye(algebra.n)], [np.eye(dim_h, dtype=complex)]
    for i, component in enumerate(components):
        rep = decode_matrix(component["rep"])
        raw = component["value"]
        if dim_h == 1 and np.ndim(raw) <= 1:
            value = np.array([[decode_complex(raw)]])
        else:
            value = decode_matrix(raw, complex_entries=True)
        if rep.shape != (algebra.n, algebra.n) or value.shape != (dim_h, dim_h):
            raise DatumError(f"datum component {i} has shapes {rep.shape}, {value.shape}")
        if np.allclose(rep, np.eye(algebra.n), atol=1e-12):
            if not np.allclose(value, np.eye(dim_h), atol=1e-10):
                raise DatumError("Lambda(e) must be the identity")
            continue
        reps.append(rep)
        values.append(value.astype(complex))
    return IntegralDatum(dim_h, tuple(reps), tuple(values))


def build_orbit(
    algebra: MatrixLieAlgebra,
    eta: Union[Covector, Sequence[float]],
    datum: Optional[IntegralDatum] = None,
    convention: str = "full",
) -> HyperbolicOrbit:
    """
    Grade g by ad(X0) and assemble u, l, u-, delta and phi.

    Args:
        algebra: the ambient algebra
        eta: covector coordinates eta(X_i)
        datum: integral datum (trivial m = 1 datum when omitted)
        convention: "full" (delta = Tr ad|u) or "half" (delta = 1/2 Tr ad|u)

    Returns:
        The orbit data
    """
    if not isinstance(eta, Covector):
        eta = Covector(np.asarray(eta, dtype=float))
    if eta.coeffs.shape != (algebra.d,):
        raise DatumError(f"eta needs {algebra.d} coefficients, got {eta.coeffs.shape}")
    if convention not in ("full", "half"):
        raise ValueError(f"unknown delta convention {convention!r}")
    datum = datum or make_datum(algebra)

    x0 = x0_from_eta(algebra, eta)
    ad = algebra.ad_matrix(x0.coeffs)
    spectrum = np.linalg.eigvals(ad)
    scale = 1.0 + float(np.max(np.abs(spectrum), initial=0.0))
    if np.max(np.abs(spectrum.imag), initial=0.0) > CLUSTER_TOL * scale:
        raise NotHyperbolic(f"ad(X0) has non-real eigenvalues: {np.round(spectrum, 6)}")

    grading: Dict[float, np.ndarray] = {}
    for r in _cluster(spectrum.real):
        block = null_space(ad - r * np.eye(algebra.d), rcond=1e-8)
        grading[r] = block
    if sum(b.shape[1] for b in grading.values()) != algebra.d:
        raise NotHyperbolic("ad(X0) is not diagonalizable: eigenspaces do not fill g")

    keys = sorted(grading)
    zero = [r for r in keys if abs(r) <= CLUSTER_TOL * scale]
    positive = [r for r in keys if r > CLUSTER_TOL * scale]
    negative = [r for r in keys if r < -CLUSTER_TOL * scale]
    empty = np.zeros((algebra.d, 0))
    l_basis = np.hstack([grading[r] for r in zero]) if zero else empty
    u_basis = np.hstack([grading[r] for r in positive]) if positive else empty
    uminus_basis = np.hstack([grading[r] for r in negative]) if negative else empty

    gap = min(positive) if positive else 1.0
    labels = {r: (0.0 if r in zero else r / gap) for r in keys}

    frame = np.hstack([uminus_basis, l_basis, u_basis])
    frame_inv = np.linalg.inv(frame)
    nm, nl = uminus_basis.shape[1], l_basis.shape[1]
    blocks = {"uminus": slice(0, nm), "l": slice(nm, nm + nl), "u": slice(nm + nl, algebra.d)}
    projectors = {k: frame[:, s] @ frame_inv[s, :] for k, s in blocks.items()}

    factor = 1.0 if convention == "full" else 0.5
    delta = np.zeros(algebra.d)
    if u_basis.shape[1]:
        su = blocks["u"]
        for j in range(algebra.d):
            a = projectors["l"][:, j]
            delta[j] = factor * np.trace(frame_inv[su, :] @ algebra.ad_matrix(a) @ frame[:, su])
    phi_coeffs = 1j * (projectors["l"].T @ eta.coeffs) + delta

    logging.info(
        "Built orbit on %s: eigenvalues %s, dims %s, convention %s",
        algebra.name,
        [round(r, 9) for r in keys],
        [grading[r].shape[1] for r in keys],
        convention,
    )
    if convention == "full" and u_basis.shape[1]:
        logging.info("delta uses the full trace of ad|u; the half-density derivative is half of it")

    orbit = HyperbolicOrbit(
        algebra=algebra,
        eta=eta,
        x0=x0,
        eigenvalues=np.array(keys),
        grading=grading,
        grading_labels=labels,
        l_basis=l_basis,
        u_basis=u_basis,
        uminus_basis=uminus_basis,
        delta_coeffs=delta,
        phi_coeffs=phi_coeffs,
        delta_convention=convention,
        datum=datum,
        projectors=projectors,
    )
    stab = stabilizer_residual(orbit)
    if stab > 1e-8:
        logging.warning("l does not annihilate eta (residual %.2e)", stab)
    return orbit


def stabilizer_residual(orbit: HyperbolicOrbit) -> float:
    """max ||X_B(eta)|| over the l basis."""
    if orbit.l_basis.shape[1] == 0:
        return 0.0
    return max(
        float(np.linalg.norm(vector_field(orbit, orbit.l_basis[:, i], orbit.eta).coeffs))
        for i in range(orbit.l_basis.shape[1])
    )


def grading_containment_residual(orbit: HyperbolicOrbit, rng: np.random.Generator, samples: int = 50) -> float:
    """Largest component of [g_r, g_s] outside g_{r+s} over random pairs."""
    keys = list(orbit.grading)
    alg = orbit.algebra
    worst = 0.0
    for _ in range(samples):
        r, s = rng.choice(keys, size=2)
        a = orbit.grading[r] @ rng.normal(size=orbit.grading[r].shape[1])
        b = orbit.grading[s] @ rng.normal(size=orbit.grading[s].shape[1])
        c = alg.bracket_coeffs(a, b)
        target = [t for t in keys if abs(t - (r + s)) <= CLUSTER_TOL * (1.0 + abs(t))]
        if target:
            basis = orbit.grading[target[0]]
            c = c - basis @ (basis.T @ c)
        worst = max(worst, float(np.linalg.norm(c)))
    return worst


def phi(orbit: HyperbolicOrbit, a: Vector) -> complex:
    """phi(A) = i eta(P_l A) + delta(P_l A), complex-linear in A."""
    return complex(np.dot(orbit.phi_coeffs, as_coeffs(a)))


def delta(orbit: HyperbolicOrbit, a: Vector) -> float:
    return float(np.real(np.dot(orbit.delta_coeffs, as_coeffs(a))))


def _rep_of(point: Union[OrbitPoint, GroupElement, np.ndarray]) -> np.ndarray:
    if isinstance(point, OrbitPoint):
        return point.rep.matrix
    return as_matrix(point)


def _xi_of(orbit: HyperbolicOrbit, point) -> np.ndarray:
    if isinstance(point, OrbitPoint):
        return point.xi.coeffs
    if isinstance(point, Covector):
        return point.coeffs
    return coadjoint_action(point, orbit.eta, orbit.algebra).coeffs


def _pull_back(orbit: HyperbolicOrbit, b: Vector, g) -> np.ndarray:
    """Coordinates of g^{-1} . B."""
    return adjoint_matrix(orbit.algebra, np.linalg.inv(_rep_of(g))) @ as_coeffs(b)


def hamiltonian(orbit: HyperbolicOrbit, b: Vector, g) -> complex:
    """h_B(g . eta) = phi(g^{-1} . B)."""
    return phi(orbit, _pull_back(orbit, b, g))


def hamiltonian_split(orbit: HyperbolicOrbit, b: Vector, g) -> Tuple[float, float]:
    """(h_hat, h_tilde) with h = i h_hat + h_tilde."""
    y = _pull_back(orbit, b, g)
    return float(np.dot(orbit.eta.coeffs, y)), float(np.dot(orbit.delta_coeffs, y))


def make_point(orbit: HyperbolicOrbit, g: Union[GroupElement, np.ndarray]) -> OrbitPoint:
    if not isinstance(g, GroupElement):
        g = GroupElement(np.asarray(g, dtype=float), orbit.algebra.group_tag, orbit.algebra.group_metric)
    return OrbitPoint(g, coadjoint_action(g, orbit.eta, orbit.algebra))


def point_residual(orbit: HyperbolicOrbit, point: OrbitPoint) -> float:
    xi = coadjoint_action(point.rep, orbit.eta, orbit.algebra)
    return float(np.max(np.abs(xi.coeffs - point.xi.coeffs), initial=0.0))


def kirillov_forms(orbit: HyperbolicOrbit, a: Vector, b: Vector, point) -> Tuple[complex, float, float]:
    """omega(X_A, X_B), its eta-part omega_hat and delta-part omega_tilde at g . eta."""
    c = orbit.algebra.bracket_coeffs(as_coeffs(a), as_coeffs(b))
    y = _pull_back(orbit, c, point)
    omega_hat = float(np.dot(orbit.eta.coeffs, y))
    omega_tilde = float(np.dot(orbit.delta_coeffs, y))
    return phi(orbit, y), omega_hat, omega_tilde


def vector_field(orbit: HyperbolicOrbit, b: Vector, point) -> Covector:
    """X_B(xi) = d/dt exp(tB) . xi at t = 0, via <X_B(xi), Y> = xi([Y, B])."""
    xi = _xi_of(orbit, point)
    return Covector(np.einsum("jik,i,k->j", orbit.algebra.structure, np.real(as_coeffs(b)), xi))


def _field_matrix(orbit: HyperbolicOrbit, xi: np.ndarray) -> np.ndarray:
    """Column i holds X_{X_i}(xi)."""
    return np.einsum("jik,k->ji", orbit.algebra.structure, xi)


def tangent_solve(orbit: HyperbolicOrbit, point, v: Union[Covector, np.ndarray], tol: float = TANGENT_TOL) -> AlgebraElement:
    """
    Minimum-norm B with X_B(point) = v.

    Raises:
        NotTangent: v is not tangent to the orbit at the point
    """
    xi = _xi_of(orbit, point)
    target = v.coeffs if isinstance(v, Covector) else np.asarray(v, dtype=float)
    m = _field_matrix(orbit, xi)
    b, *_ = np.linalg.lstsq(m, target, rcond=1e-10)
    residual = float(np.linalg.norm(m @ b - target))
    if residual > tol * (1.0 + np.linalg.norm(target)):
        raise NotTangent(f"vector is not tangent to the orbit (residual {residual:.2e})")
    return AlgebraElement(orbit.algebra, b)


def omega_on_tangents(orbit: HyperbolicOrbit, point, v1, v2) -> Tuple[complex, float, float]:
    """Kirillov forms evaluated on two tangent vectors given in g* coordinates."""
    b1 = tangent_solve(orbit, point, v1)
    b2 = tangent_solve(orbit, point, v2)
    return kirillov_forms(orbit, b1, b2, point)


def _frame(alpha: Frame, m: int) -> np.ndarray:
    a = np.atleast_2d(np.asarray(alpha, dtype=complex))
    if a.shape == (1, 1) and m > 1:
        a = a[0, 0] * np.eye(m)
    if a.shape != (m, m):
        raise SingularFrame(f"frame must be {m}x{m}, got {a.shape}")
    if not np.all(np.isfinite(a)) or np.linalg.cond(a) > FRAME_COND:
        raise SingularFrame("frame alpha is not invertible")
    return a


def lifted_hamiltonian(orbit: HyperbolicOrbit, a: Vector, g, alpha: Frame) -> np.ndarray:
    """Bold h_A[g, alpha] = alpha^{-1} h_A(g) alpha."""
    m = orbit.dim_h
    frame = _frame(alpha, m)
    value = hamiltonian(orbit, a, g) * np.eye(m)
    return np.linalg.solve(frame, value @ frame)


def connection_eval(orbit: HyperbolicOrbit, g, alpha: Frame, b: Vector, y) -> np.ndarray:
    """Omega(Y_B + W_y) at [g, alpha]."""
    m = orbit.dim_h
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    if y.shape == (1, 1) and m > 1:
        y = y[0, 0] * np.eye(m)
    return lifted_hamiltonian(orbit, b, g, alpha) + y


def curvature_eval(orbit: HyperbolicOrbit, g, alpha: Frame, b: Vector, c: Vector) -> np.ndarray:
    """K(Y_B, Y_C) = -h_[B,C] + [h_B, h_C] on lifted Hamiltonians."""
    bc = orbit.algebra.bracket_coeffs(np.real(as_coeffs(b)), np.real(as_coeffs(c)))
    hb = lifted_hamiltonian(orbit, b, g, alpha)
    hc = lifted_hamiltonian(orbit, c, g, alpha)
    return -lifted_hamiltonian(orbit, bc, g, alpha) + (hb @ hc - hc @ hb)


def moment_map(orbit: HyperbolicOrbit, g, alpha: Frame, a: Vector) -> np.ndarray:
    """<mu([g, alpha]), A>."""
    return lifted_hamiltonian(orbit, a, g, alpha)


def curvature_fd_check(
    orbit: HyperbolicOrbit,
    g,
    alpha: Frame,
    b: Vector,
    c: Vector,
    step: float = 1e-4,
    inner: float = 1e-5,
) -> Dict[str, Any]:
    """
    Finite-difference structure equation on the surface
    F(s, t) = [exp(sB) exp(tC) g, alpha]: dOmega(d_s, d_t) + [Omega_s, Omega_t]
    against the closed-form curvature K(Y_B, Y_C).
    """
    alg = orbit.algebra
    gm = _rep_of(g)
    bm, cm = alg.matrix(np.real(as_coeffs(b))), alg.matrix(np.real(as_coeffs(c)))

    def surface(s, t):
        return expm(s * bm) @ expm(t * cm) @ gm

    def omega_along(s, t, direction):
        ds, dt = (inner, 0.0) if direction == "s" else (0.0, inner)
        here = surface(s, t)
        velocity = (surface(s + ds, t + dt) - surface(s - ds, t - dt)) / (2 * inner)
        generator = alg.coords(velocity @ np.linalg.inv(here), tol=1e-6)
        return connection_eval(orbit, here, alpha, generator, 0.0)

    d_s_omega_t = (omega_along(step, 0.0, "t") - omega_along(-step, 0.0, "t")) / (2 * step)
    d_t_omega_s = (omega_along(0.0, step, "s") - omega_along(0.0, -step, "s")) / (2 * step)
    omega_s, omega_t = omega_along(0.0, 0.0, "s"), omega_along(0.0, 0.0, "t")
    fd = d_s_omega_t - d_t_omega_s + (omega_s @ omega_t - omega_t @ omega_s)
    closed = curvature_eval(orbit, gm, alpha, b, c)
    return {"fd": fd, "closed": closed, "rel_err": relative_error(fd, closed)}


def hamiltonian_flow_residuals(orbit: HyperbolicOrbit, a: Vector, b: Vector, g, step: float = 1e-5) -> Dict[str, float]:
    """
    Finite-difference residuals of X_A(h_B) = -h_[A,B] and dh_B(X_A) = omega(X_B, X_A),
    including the hat / tilde splits, at the point g . eta.
    """
    alg = orbit.algebra
    gm = _rep_of(g)
    am = alg.matrix(as_coeffs(a))
    plus, minus = expm(step * am) @ gm, expm(-step * am) @ gm
    dh = (hamiltonian(orbit, b, plus) - hamiltonian(orbit, b, minus)) / (2 * step)
    hat_p, tilde_p = hamiltonian_split(orbit, b, plus)
    hat_m, tilde_m = hamiltonian_split(orbit, b, minus)
    dh_hat, dh_tilde = (hat_p - hat_m) / (2 * step), (tilde_p - tilde_m) / (2 * step)

    ab = alg.bracket_coeffs(as_coeffs(a), as_coeffs(b))
    xa_hb = -hamiltonian(orbit, ab, gm)
    omega, omega_hat, omega_tilde = kirillov_forms(orbit, b, a, gm)
    return {
        "xa_hb": relative_error(dh, xa_hb),
        "dhb": relative_error(dh, omega),
        "dhb_hat": relative_error(dh_hat, omega_hat),
        "dhb_tilde": relative_error(dh_tilde, omega_tilde),
    }


def lifted_flow_residual(orbit: HyperbolicOrbit, a: Vector, b: Vector, g, alpha: Frame, step: float = 1e-5) -> float:
    """Y_A(bold h_B) = -bold h_[A,B] along the G-action on the bundle."""
    alg = orbit.algebra
    gm = _rep_of(g)
    am = alg.matrix(as_coeffs(a))
    fd = (
        lifted_hamiltonian(orbit, b, expm(step * am) @ gm, alpha)
        - lifted_hamiltonian(orbit, b, expm(-step * am) @ gm, alpha)
    ) / (2 * step)
    ab = alg.bracket_coeffs(as_coeffs(a), as_coeffs(b))
    return relative_error(fd, -lifted_hamiltonian(orbit, ab, gm, alpha))


def modular_character(orbit: HyperbolicOrbit, q) -> float:
    """
    Delta(q) = |det Ad(q)|_u|^p with p = 1/2 (half) or 1 (full).

    Raises:
        NotInLevi: Ad(q) does not preserve u
    """
    if not orbit.strictly_graded:
        return 1.0
    ad_q = adjoint_matrix(orbit.algebra, _rep_of(q))
    image = ad_q @ orbit.u_basis
    leak = image - orbit.projectors["u"] @ image
    if np.linalg.norm(leak) > 1e-8 * (1.0 + np.linalg.norm(image)):
        raise NotInLevi(f"q does not normalize u (leak {np.linalg.norm(leak):.2e})")
    restricted, *_ = np.linalg.lstsq(orbit.u_basis, image, rcond=None)
    power = 1.0 if orbit.delta_convention == "full" else 0.5
    return float(abs(np.linalg.det(restricted)) ** power)


def random_levi_element(orbit: HyperbolicOrbit, rng: np.random.Generator) -> np.ndarray:
    """Coordinates of sum t_i L_i with t_i uniform in [-1, 1]."""
    t = rng.uniform(-1.0, 1.0, size=orbit.l_basis.shape[1])
    return orbit.l_basis @ t


def random_levi_group_element(orbit: HyperbolicOrbit, rng: np.random.Generator) -> GroupElement:
    alg = orbit.algebra
    return GroupElement(expm(alg.matrix(random_levi_element(orbit, rng))), alg.group_tag, alg.group_metric)


def in_levi_residual(orbit: HyperbolicOrbit, a: Vector) -> float:
    x = as_coeffs(a)
    return float(np.linalg.norm(x - orbit.projectors["l"] @ x))


def factor_levi(orbit: HyperbolicOrbit, l_elem, tol: float = 1e-8) -> Tuple[int, np.ndarray]:
    """
    Write l = rep * exp(A) with rep from the datum table and A in l.

    Returns:
        (index of rep in the datum table, coordinates of A)

    Raises:
        FactorizationError: no table representative works
    """
    lm = _rep_of(l_elem)
    for index, rep in enumerate(orbit.datum.reps):
        try:
            a = group_log(np.linalg.solve(rep, lm), orbit.algebra).coeffs
        except LogDomainError:
            continue
        if in_levi_residual(orbit, a) <= tol * (1.0 + np.linalg.norm(a)):
            return index, a
    raise FactorizationError("element is not rep * exp(A) for any datum representative with A in l")


def levi_character(orbit: HyperbolicOrbit, rep_index: int, a: Vector) -> np.ndarray:
    """Phi(rep exp A) = Lambda(rep) Delta(rep) e^{phi(A)}."""
    rep = orbit.datum.reps[rep_index]
    scale = modular_character(orbit, rep) * np.exp(phi(orbit, a))
    return orbit.datum.values[rep_index] * scale


def phi_group(orbit: HyperbolicOrbit, l_elem) -> np.ndarray:
    index, a = factor_levi(orbit, l_elem)
    return levi_character(orbit, index, a)


def check_datum(orbit: HyperbolicOrbit, tol: float = 1e-8) -> None:
    """
    Unitarity of every table value, stabilizer membership of every
    representative and agreement on overlaps rep_i = rep_j exp(A).

    Raises:
        DatumError: on the first violation
    """
    alg, datum = orbit.algebra, orbit.datum
    m = datum.dim_h
    for i, (rep, value) in enumerate(zip(datum.reps, datum.values)):
        if np.linalg.norm(value.conj().T @ value - np.eye(m)) > 1e-10:
            raise DatumError(f"Lambda of component {i} is not unitary")
        moved = coadjoint_action(rep, orbit.eta, alg).coeffs - orbit.eta.coeffs
        if np.linalg.norm(moved) > tol * (1.0 + np.linalg.norm(orbit.eta.coeffs)):
            raise DatumError(f"representative {i} does not fix eta")
    for i in range(len(datum)):
        for j in range(len(datum)):
            if i == j:
                continue
            try:
                a = group_log(np.linalg.solve(datum.reps[j], datum.reps[i]), alg).coeffs
            except LogDomainError:
                continue
            if in_levi_residual(orbit, a) > tol:
                continue
            expected = datum.values[j] * np.exp(1j * np.dot(orbit.eta.coeffs, a))
            if np.linalg.norm(datum.values[i] - expected) > tol:
                raise DatumError(f"components {i} and {j} disagree on their overlap")
