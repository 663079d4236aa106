"""
Time-dependent machinery: velocity curves and their group paths, coadjoint
isotopies, the three routes to the Schur scalar kappa and the character
exponent of a Levi path.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from tqdm import tqdm

from .errors import BoundaryMismatch, ConfigError, FactorizationError, NotCentral, NotFixedPoint, NotInLevi
from .liealg import GroupElement, MatrixLieAlgebra, adjoint_matrix, as_matrix, coadjoint_action
from .orbit import (
    HyperbolicOrbit,
    OrbitPoint,
    factor_levi,
    hamiltonian,
    hamiltonian_split,
    in_levi_residual,
    kirillov_forms,
    levi_character,
    lifted_hamiltonian,
    make_point,
    modular_character,
    phi,
    phi_group,
    tangent_solve,
    vector_field,
)
from .utils import make_rng, relative_error

GAUSS = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)
FIXED_TOL = 1e-7
BOUNDARY_TOL = 1e-6
CENTRAL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class PathSpec:
    """
    Velocity curve A_t on [0, 1]: piecewise-constant segments (already
    rescaled to unit total time) or a callable t -> coefficients.
    """

    algebra: MatrixLieAlgebra
    segments: Tuple[Tuple[float, np.ndarray], ...] = ()
    sampler: Optional[Callable[[float], np.ndarray]] = None
    steps: int = 1000
    scheme: str = "magnus4"
    label: str = "segments"

    def velocity(self, t: float) -> np.ndarray:
        if self.sampler is not None:
            return np.asarray(self.sampler(t), dtype=float)
        start = 0.0
        for duration, coeffs in self.segments:
            if t < start + duration:
                return coeffs
            start += duration
        return self.segments[-1][1] if self.segments else np.zeros(self.algebra.d)

    @property
    def breakpoints(self) -> List[float]:
        cuts, start = [], 0.0
        for duration, _ in self.segments[:-1]:
            start += duration
            cuts.append(start)
        return cuts

    def nodes(self) -> np.ndarray:
        """Quadrature nodes used by the integrators (Gauss points of every sub-step)."""
        out = []
        for a, b in self._substeps(0.0, 1.0):
            out += [a + GAUSS[0] * (b - a), a + GAUSS[1] * (b - a)]
        return np.array(out)

    def _substeps(self, a: float, b: float) -> List[Tuple[float, float]]:
        grid = np.linspace(a, b, max(1, int(round((b - a) * self.steps))) + 1)
        cuts = [c for c in self.breakpoints if a < c < b]
        points = np.unique(np.concatenate([grid, cuts])) if cuts else grid
        return list(zip(points[:-1], points[1:]))


def constant_path(algebra: MatrixLieAlgebra, coeffs, steps: int = 1000, scheme: str = "magnus4", label: str = "constant") -> PathSpec:
    return PathSpec(algebra, ((1.0, np.asarray(coeffs, dtype=float)),), steps=steps, scheme=scheme, label=label)


def path_from_config(algebra: MatrixLieAlgebra, doc: Dict[str, Any]) -> PathSpec:
    """Build a PathSpec from the 'path' section of a run config."""
    steps = int(doc.get("steps", 1000))
    scheme = doc.get("scheme", "magnus4")
    if "segments" in doc:
        total = sum(float(s["duration"]) for s in doc["segments"])
        segments = []
        for s in doc["segments"]:
            coeffs = np.asarray(s["velocity"], dtype=float)
            if coeffs.shape != (algebra.d,):
                raise ConfigError(f"segment velocity needs {algebra.d} coefficients")
            segments.append((float(s["duration"]) / total, coeffs * total))
        return PathSpec(algebra, tuple(segments), steps=steps, scheme=scheme)

    preset = doc["preset"]
    if preset == "rotation-loop":
        j = int(doc.get("generator", 1)) - 1
        if not 0 <= j < algebra.d:
            raise ConfigError(f"rotation-loop generator must be in 1..{algebra.d}")
        coeffs = 2.0 * np.pi * np.eye(algebra.d)[j]
        if "conjugate" in doc:
            coeffs = adjoint_matrix(algebra, np.asarray(doc["conjugate"], dtype=float)) @ coeffs
        return constant_path(algebra, coeffs, steps, scheme, preset)
    if preset == "levi-segment":
        coeffs = np.asarray(doc.get("velocity", []), dtype=float)
        if coeffs.shape != (algebra.d,):
            raise ConfigError(f"levi-segment velocity needs {algebra.d} coefficients")
        return constant_path(algebra, coeffs, steps, scheme, preset)
    if preset == "sl2-half-turn":
        if algebra.n != 2:
            raise ConfigError("sl2-half-turn needs 2 x 2 matrices")
        j = algebra.coords(np.array([[0.0, -1.0], [1.0, 0.0]]))
        return constant_path(algebra, np.pi * j, steps, scheme, preset)
    raise ConfigError(f"unknown path preset {preset!r}")


def _magnus_exponent(generator: Callable[[float], np.ndarray], a: float, b: float, scheme: str) -> np.ndarray:
    """Exponent of one step of Y' = A(t) Y: two-point Gauss Magnus or exponential midpoint."""
    h = b - a
    if scheme == "midpoint":
        return h * generator(a + 0.5 * h)
    a1 = generator(a + GAUSS[0] * h)
    a2 = generator(a + GAUSS[1] * h)
    return 0.5 * h * (a1 + a2) + (math.sqrt(3.0) / 12.0) * h * h * (a2 @ a1 - a1 @ a2)


def _step(spec: PathSpec, a: float, b: float) -> np.ndarray:
    return _magnus_exponent(lambda t: spec.algebra.matrix(spec.velocity(t)), a, b, spec.scheme)


@dataclass(frozen=True, eq=False)
class SampledGroupPath:
    spec: PathSpec
    times: np.ndarray
    mats: np.ndarray

    @property
    def endpoint(self) -> GroupElement:
        alg = self.spec.algebra
        return GroupElement(self.mats[-1], alg.group_tag, alg.group_metric)

    def at(self, t: float) -> np.ndarray:
        """g_t, integrating from the nearest lower node."""
        t = min(max(float(t), 0.0), 1.0)
        j = min(int(np.floor(t * (len(self.times) - 1))), len(self.times) - 1)
        g = self.mats[j]
        if t > self.times[j]:
            for a, b in self.spec._substeps(self.times[j], t):
                g = expm(_step(self.spec, a, b)) @ g
        return g


def integrate_group_path(spec: PathSpec) -> SampledGroupPath:
    """Solve d/dt g_t = A_t g_t, g_0 = e, sampling g at t_j = j / steps."""
    n = spec.algebra.n
    times = np.linspace(0.0, 1.0, spec.steps + 1)
    mats = np.empty((spec.steps + 1, n, n))
    g = np.eye(n)
    mats[0] = g
    for j in range(spec.steps):
        for a, b in spec._substeps(times[j], times[j + 1]):
            g = expm(_step(spec, a, b)) @ g
        mats[j + 1] = g
    logging.debug("Integrated %s path with %d steps (%s)", spec.label, spec.steps, spec.scheme)
    return SampledGroupPath(spec, times, mats)


def path_residuals(path: SampledGroupPath, rng: np.random.Generator, nodes: int = 10, eps: float = 1e-5) -> Dict[str, float]:
    """Velocity reconstruction at random interior times and the group constraint."""
    alg = path.spec.algebra
    worst = 0.0
    for t in rng.uniform(eps, 1.0 - eps, size=nodes):
        dg = (path.at(t + eps) - path.at(t - eps)) / (2 * eps)
        a = dg @ np.linalg.inv(path.at(t))
        worst = max(worst, float(np.abs(a - alg.matrix(path.spec.velocity(t))).max()))
    constraint = max(
        GroupElement(m, alg.group_tag, alg.group_metric).constraint_residual() for m in path.mats
    )
    return {"velocity": worst, "constraint": constraint}


def isotopy_apply(path: SampledGroupPath, x: OrbitPoint, t: float) -> OrbitPoint:
    """psi_t(x) = g_t . x."""
    alg = path.spec.algebra
    g = path.at(t)
    rep = GroupElement(g @ x.rep.matrix, alg.group_tag, alg.group_metric)
    return OrbitPoint(rep, coadjoint_action(g, x.xi, alg))


def isotopy_residual(orbit: HyperbolicOrbit, path: SampledGroupPath, x: OrbitPoint, t: float, eps: float = 1e-5) -> float:
    """d/dt psi_t(x) against X_{A_t}(psi_t(x)), relative."""
    t = min(max(t, eps), 1.0 - eps)
    fd = (isotopy_apply(path, x, t + eps).xi.coeffs - isotopy_apply(path, x, t - eps).xi.coeffs) / (2 * eps)
    exact = vector_field(orbit, path.spec.velocity(t), isotopy_apply(path, x, t)).coeffs
    return relative_error(fd, exact)


def centrality_residual(g: np.ndarray, algebra: MatrixLieAlgebra, rng: np.random.Generator, samples: int = 20) -> float:
    worst = 0.0
    for _ in range(samples):
        h = expm(algebra.matrix(algebra.random_coeffs(rng)))
        worst = max(worst, float(np.abs(g @ h - h @ g).max() / (1.0 + np.abs(g).max())))
    return worst


def kappa_direct(path: SampledGroupPath, orbit: HyperbolicOrbit, rng: np.random.Generator, samples: int = 20) -> complex:
    """
    kappa = Phi(g_1) for central g_1, with g_1 = rep exp(A) over the datum table.

    Raises:
        NotCentral: g_1 fails to commute with random group elements
        FactorizationError: g_1 is not covered by the datum table
    """
    g1 = path.mats[-1]
    residual = centrality_residual(g1, orbit.algebra, rng, samples)
    if residual > CENTRAL_TOL:
        raise NotCentral(f"path endpoint is not central (residual {residual:.2e})")
    index, a = factor_levi(orbit, g1)
    if abs(modular_character(orbit, g1) - 1.0) > 1e-9:
        logging.warning("Delta(g_1) differs from 1 for a central endpoint")
    value = levi_character(orbit, index, a)
    if np.abs(value - value[0, 0] * np.eye(orbit.dim_h)).max() > 1e-9:
        logging.warning("Phi(g_1) is not a scalar matrix")
    return complex(value[0, 0])


def fixed_point_residual(path: PathSpec, orbit: HyperbolicOrbit, x0: OrbitPoint) -> float:
    return max(
        (float(np.linalg.norm(vector_field(orbit, path.velocity(t), x0).coeffs)) for t in path.nodes()),
        default=0.0,
    )


def kappa_ode_fixed_point(path: SampledGroupPath, orbit: HyperbolicOrbit, x0: OrbitPoint) -> complex:
    """
    Integrate dM/dt = h_{A_t}(x0) M, M(0) = 1 at a fixed point x0.

    Raises:
        NotFixedPoint: some A_t moves x0
    """
    spec = path.spec
    residual = fixed_point_residual(spec, orbit, x0)
    if residual > FIXED_TOL:
        raise NotFixedPoint(f"x0 is moved by the isotopy (|X_A(x0)| = {residual:.2e})")
    m = orbit.dim_h
    frame = np.eye(m)

    def generator(t: float) -> np.ndarray:
        return lifted_hamiltonian(orbit, spec.velocity(t), x0.rep, frame)

    fiber = np.eye(m, dtype=complex)
    for a, b in spec._substeps(0.0, 1.0):
        fiber = expm(_magnus_exponent(generator, a, b, spec.scheme)) @ fiber
    if np.abs(fiber - fiber[0, 0] * np.eye(m)).max() > 1e-9:
        logging.warning("fiber transport at x0 is not a scalar matrix")
    return complex(fiber[0, 0])


@dataclass(frozen=True, eq=False)
class SweepChain:
    """Sigma(s, t) = g_t exp(sW) . x0 sampled on an (S+1) x (N+1) grid."""

    path: SampledGroupPath
    anchor: OrbitPoint
    target: OrbitPoint
    connector: np.ndarray
    grid: Tuple[int, int]

    def rep(self, s: float, t: float) -> np.ndarray:
        alg = self.path.spec.algebra
        return self.path.at(t) @ expm(s * alg.matrix(self.connector)) @ self.anchor.rep.matrix


def choose_connector(orbit: HyperbolicOrbit, x0: OrbitPoint, scale: float = 0.5, rank: int = 0) -> np.ndarray:
    """
    W of norm `scale` along a generic direction seeded by `rank`, with its
    stabilizer part at x0 removed.
    """
    d = orbit.algebra.d
    field_matrix = np.stack(
        [vector_field(orbit, orbit.algebra.basis_element(j), x0).coeffs for j in range(d)], axis=1
    )
    weights = make_rng(rank).normal(size=d)
    w = np.linalg.pinv(field_matrix) @ (field_matrix @ weights)
    if np.linalg.norm(field_matrix @ w) <= FIXED_TOL:
        raise BoundaryMismatch("no generator moves the anchor; the orbit is a point")
    return scale * w / np.linalg.norm(w)


def build_sweep_chain(
    path: SampledGroupPath,
    orbit: HyperbolicOrbit,
    x0: OrbitPoint,
    connector: Optional[np.ndarray] = None,
    grid: Tuple[int, int] = (64, 64),
) -> SweepChain:
    """
    Chain anchored at a fixed point x0 whose boundary telescopes to the
    evaluation loop t -> g_t . q with q = exp(W) . x0.

    Raises:
        BoundaryMismatch: the loop is not closed or x0 is moved
    """
    alg = orbit.algebra
    w = choose_connector(orbit, x0) if connector is None else np.asarray(connector, dtype=float)
    g1 = path.mats[-1]
    scale = 1.0 + np.abs(orbit.eta.coeffs).max()
    closure = np.abs(coadjoint_action(g1, x0.xi, alg).coeffs - x0.xi.coeffs).max()
    if closure > BOUNDARY_TOL * scale:
        raise BoundaryMismatch(f"g_1 moves the anchor (residual {closure:.2e})")
    n_steps = grid[0]
    for t in np.linspace(0.0, 1.0, n_steps + 1):
        moved = np.abs(coadjoint_action(path.at(t), x0.xi, alg).coeffs - x0.xi.coeffs).max()
        if moved > BOUNDARY_TOL * scale:
            raise BoundaryMismatch(f"anchor is not fixed along the loop (t={t:.3f}, residual {moved:.2e})")
    q = make_point(orbit, expm(alg.matrix(w)) @ x0.rep.matrix)
    loop_gap = np.abs(coadjoint_action(g1, q.xi, alg).coeffs - q.xi.coeffs).max()
    if loop_gap > BOUNDARY_TOL * (1.0 + np.abs(q.xi.coeffs).max()):
        raise BoundaryMismatch(f"evaluation loop does not close (gap {loop_gap:.2e})")
    return SweepChain(path, x0, q, w, tuple(grid))


@dataclass
class KappaReport:
    kappa_direct: Optional[complex] = None
    kappa_ode: Optional[complex] = None
    kappa_action: Optional[complex] = None
    action_surface: Optional[complex] = None
    action_hat: Optional[float] = None
    action_tilde: Optional[float] = None
    berry_phase: Optional[float] = None
    grid: Optional[Tuple[int, int]] = None
    discrepancies: Dict[str, float] = field(default_factory=dict)
    convergence: List[Dict[str, Any]] = field(default_factory=list)
    point_independence: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def compare(self) -> Dict[str, float]:
        routes = {"direct": self.kappa_direct, "ode": self.kappa_ode, "action": self.kappa_action}
        present = [(k, v) for k, v in routes.items() if v is not None]
        self.discrepancies = {
            f"{a}-{b}": abs(va - vb) for i, (a, va) in enumerate(present) for b, vb in present[i + 1 :]
        }
        return self.discrepancies


def _chain_row(chain: SweepChain, orbit: HyperbolicOrbit, a: int, eps: float) -> Tuple[complex, float, float]:
    """Midpoint-rule contribution of the s-row a to the integral of omega."""
    n_t, n_s = chain.grid
    alg = orbit.algebra
    ds, dt = 1.0 / n_s, 1.0 / n_t
    s = (a + 0.5) * ds
    total, total_hat, total_tilde = 0.0 + 0.0j, 0.0, 0.0
    for b in range(n_t):
        t = (b + 0.5) * dt
        here = make_point(orbit, chain.rep(s, t))
        v_s = (
            coadjoint_action(chain.rep(s + eps, t), orbit.eta, alg).coeffs
            - coadjoint_action(chain.rep(s - eps, t), orbit.eta, alg).coeffs
        ) / (2 * eps)
        b_s = tangent_solve(orbit, here, v_s)
        b_t = chain.path.spec.velocity(t)
        omega, omega_hat, omega_tilde = kirillov_forms(orbit, b_s, b_t, here)
        total += omega * ds * dt
        total_hat += omega_hat * ds * dt
        total_tilde += omega_tilde * ds * dt
    return total, total_hat, total_tilde


@dataclass(frozen=True)
class ActionResult:
    """kappa = exp(surface + line) = exp(i action_hat + action_tilde)."""

    kappa: complex
    surface: complex
    line: complex
    action_hat: float
    action_tilde: float


def kappa_action(
    path: SampledGroupPath,
    orbit: HyperbolicOrbit,
    chain: SweepChain,
    workers: int = 1,
    eps: float = 1e-5,
    progress: bool = False,
) -> ActionResult:
    """
    kappa = exp(int_S omega + int_0^1 h_{A_t}(q_t) dt), with the split
    actions A_hat (eta-part) and A_tilde (delta-part), kappa = exp(i A_hat + A_tilde).
    """
    n_t, n_s = chain.grid
    rows: Dict[int, Tuple[complex, float, float]] = {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = {executor.submit(_chain_row, chain, orbit, a, eps): a for a in range(n_s)}
        for future in tqdm(as_completed(futures), total=n_s, desc="sweep rows", disable=not progress):
            rows[futures[future]] = future.result()
    surface = sum(rows[a][0] for a in range(n_s))
    surface_hat = sum(rows[a][1] for a in range(n_s))
    surface_tilde = sum(rows[a][2] for a in range(n_s))

    line, line_hat, line_tilde = 0.0 + 0.0j, 0.0, 0.0
    dt = 1.0 / n_t
    for b in range(n_t):
        t = (b + 0.5) * dt
        q_t = chain.rep(1.0, t)
        velocity = path.spec.velocity(t)
        line += hamiltonian(orbit, velocity, q_t) * dt
        h_hat, h_tilde = hamiltonian_split(orbit, velocity, q_t)
        line_hat += h_hat * dt
        line_tilde += h_tilde * dt

    action_hat = float(surface_hat + line_hat)
    action_tilde = float(surface_tilde + line_tilde)
    kappa = complex(np.exp(surface + line))
    logging.info(
        "Action route on %dx%d grid: kappa=%s surface=%s A_hat=%.3e A_tilde=%.3e", n_t, n_s, kappa, surface, action_hat, action_tilde
    )
    return ActionResult(kappa, complex(surface), complex(line), action_hat, action_tilde)


@dataclass
class CharReport:
    value: complex
    remark_value: complex
    levi_value: Optional[complex]
    m: int
    discrepancies: Dict[str, float] = field(default_factory=dict)


def character_value(orbit: HyperbolicOrbit, a, c_path: PathSpec, m: int = 1) -> CharReport:
    """
    m exp(int_0^1 h_{A_t}(x0) dt) with A_t = Ad_a C_t and x0 = a . eta,
    cross-checked against m exp(phi(int C_t dt)) and, for constant C,
    m Phi(exp C).

    Raises:
        NotInLevi: some C_t leaves l
    """
    alg = orbit.algebra
    am = as_matrix(a)
    for t in c_path.nodes():
        residual = in_levi_residual(orbit, c_path.velocity(t))
        if residual > 1e-9 * (1.0 + np.linalg.norm(c_path.velocity(t))):
            raise NotInLevi(f"C_t leaves l at t={t:.3f} (residual {residual:.2e})")
    ad_a = adjoint_matrix(alg, am)
    conj = PathSpec(alg, sampler=lambda t: ad_a @ c_path.velocity(t), steps=c_path.steps)
    conj_breaks = c_path._substeps(0.0, 1.0)
    x0 = make_point(orbit, am)

    exponent = 0.0 + 0.0j
    integral_c = np.zeros(alg.d)
    for lo, hi in conj_breaks:
        h = hi - lo
        for node in GAUSS:
            t = lo + node * h
            exponent += 0.5 * h * hamiltonian(orbit, conj.velocity(t), x0.rep)
            integral_c += 0.5 * h * c_path.velocity(t)
    value = m * np.exp(exponent)
    remark = m * np.exp(phi(orbit, integral_c))

    levi_value = None
    try:
        endpoint = integrate_group_path(c_path).mats[-1]
        levi_value = complex(m * phi_group(orbit, endpoint)[0, 0])
    except FactorizationError as e:
        logging.warning("Phi(c_1) unavailable: %s", e)
    report = CharReport(complex(value), complex(remark), levi_value, m)
    report.discrepancies["remark"] = abs(report.value - report.remark_value)
    if levi_value is not None:
        report.discrepancies["levi"] = abs(report.value - levi_value)
    return report

