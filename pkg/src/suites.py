"""
Property suites run by `verify`. Each suite takes a SuiteContext and returns
a list of Check records; a suite never raises for a failed property, only
for broken inputs.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.linalg import expm

from .catalog import CATALOG, builtin
from .config import Tolerances
from .flows import (
    build_sweep_chain,
    choose_connector,
    integrate_group_path,
    isotopy_residual,
    kappa_action,
    kappa_direct,
    kappa_ode_fixed_point,
    path_from_config,
)
from .liealg import (
    MatrixLieAlgebra,
    adjoint_matrix,
    coadjoint_action,
    Covector,
    group_exp,
    group_log,
    jacobi_residual,
    killing_invariance_residual,
)
from .orbit import (
    HyperbolicOrbit,
    build_orbit,
    curvature_fd_check,
    grading_containment_residual,
    hamiltonian,
    hamiltonian_flow_residuals,
    lifted_flow_residual,
    make_datum,
    make_point,
    modular_character,
    moment_map,
    phi,
    random_levi_element,
    random_levi_group_element,
    stabilizer_residual,
)
from .roots import centrality_residual, infchar_at_point, infinitesimal_character, root_decomposition
from .sections import bundle_flow_check, sample_cell_points, verify_transport
from .uea import casimir, pbw_normal_form, random_element, standard_basis, uea_multiply
from .utils import log_check, make_rng, relative_error


@dataclass
class Check:
    suite: str
    name: str
    residual: float
    threshold: float
    passed: bool

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class SuiteContext:
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 42
    samples: int = 100
    algebras: Optional[List[MatrixLieAlgebra]] = None
    grid: tuple = (32, 32)
    workers: int = 1

    def catalog(self) -> List[MatrixLieAlgebra]:
        if self.algebras is None:
            self.algebras = [builtin(*entry) for entry in CATALOG]
        return self.algebras


SUITES: Dict[str, Callable[[SuiteContext, np.random.Generator], List[Check]]] = {}


def suite(name: str):
    def register(fn):
        SUITES[name] = fn
        return fn

    return register


def make_check(suite_name: str, name: str, residual: float, threshold: float) -> Check:
    residual = float(residual)
    return Check(suite_name, name, residual, threshold, log_check(f"{suite_name}/{name}", residual, threshold))


def hyperbolic_eta(algebra: MatrixLieAlgebra) -> np.ndarray:
    """eta = Re Tr(X1 .) when ad(X1) has real spectrum, else 0."""
    spectrum = np.linalg.eigvals(algebra.ad_matrix(np.eye(algebra.d)[0]))
    if np.abs(spectrum.imag).max() > 1e-9:
        return np.zeros(algebra.d)
    return np.real(np.einsum("ab,jba->j", algebra.basis[0], algebra.basis))


def so13_orbit(k: float = 1.0, convention: str = "full") -> HyperbolicOrbit:
    algebra = builtin("so", 1, 3)
    return build_orbit(algebra, k * np.eye(6)[0], convention=convention)


def sl2_orbit(lambda_minus: complex = -1.0, convention: str = "full") -> HyperbolicOrbit:
    """sl(2) with eta(H) = 1 and Lambda(-I) = lambda_minus."""
    algebra = builtin("sl", 2)
    value = complex(lambda_minus)
    datum = make_datum(algebra, 1, [{"rep": (-np.eye(2)).tolist(), "value": [value.real, value.imag]}])
    return build_orbit(algebra, [1.0, 0.0, 0.0], datum, convention)


def _random_group(algebra: MatrixLieAlgebra, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return expm(algebra.matrix(algebra.random_coeffs(rng, scale)))


@suite("jacobi")
def jacobi_suite(ctx: SuiteContext, rng) -> List[Check]:
    tol = ctx.tolerances.jacobi
    return [make_check("jacobi", alg.name, jacobi_residual(alg.structure), tol) for alg in ctx.catalog()]


@suite("killing_invariance")
def killing_suite(ctx: SuiteContext, rng) -> List[Check]:
    checks = []
    for alg in ctx.catalog():
        worst = max(
            killing_invariance_residual(alg, *(rng.normal(size=alg.d) / np.sqrt(alg.d) for _ in range(3)))
            for _ in range(ctx.samples)
        )
        checks.append(make_check("killing_invariance", alg.name, worst, ctx.tolerances.killing_invariance))
        asym = np.abs(alg.killing - alg.killing.T).max()
        checks.append(make_check("killing_invariance", f"{alg.name} symmetric", asym, ctx.tolerances.killing_invariance))
    return checks


@suite("exp_log")
def exp_log_suite(ctx: SuiteContext, rng) -> List[Check]:
    checks = []
    for alg in ctx.catalog():
        worst = 0.0
        for _ in range(ctx.samples):
            a = alg.element(alg.random_coeffs(rng, 1.0))
            back = group_log(group_exp(a), alg)
            worst = max(worst, float(np.linalg.norm(back.coeffs - a.coeffs)))
        checks.append(make_check("exp_log", alg.name, worst, ctx.tolerances.exp_log))
    return checks


@suite("adjoint")
def adjoint_suite(ctx: SuiteContext, rng) -> List[Check]:
    tol = ctx.tolerances.adjoint
    checks = []
    n = max(10, ctx.samples // 5)
    for alg in ctx.catalog():
        hom, expo, dual = 0.0, 0.0, 0.0
        for _ in range(n):
            g, h = _random_group(alg, rng), _random_group(alg, rng)
            hom = max(hom, relative_error(adjoint_matrix(alg, g @ h), adjoint_matrix(alg, g) @ adjoint_matrix(alg, h)))
            a = alg.random_coeffs(rng)
            expo = max(expo, relative_error(adjoint_matrix(alg, expm(alg.matrix(a))), expm(alg.ad_matrix(a))))
            eta = Covector(rng.normal(size=alg.d))
            moved = coadjoint_action(g, eta, alg)
            ginv = np.linalg.inv(g)
            direct = np.array([eta(alg.coords(ginv @ alg.basis[j] @ g)) for j in range(alg.d)])
            dual = max(dual, relative_error(moved.coeffs, direct))
        checks += [
            make_check("adjoint", f"{alg.name} homomorphism", hom, tol),
            make_check("adjoint", f"{alg.name} exp(ad)", expo, tol),
            make_check("adjoint", f"{alg.name} coadjoint", dual, tol),
        ]
    return checks


def _catalog_orbits(ctx: SuiteContext) -> List[HyperbolicOrbit]:
    return [build_orbit(alg, hyperbolic_eta(alg)) for alg in ctx.catalog()]


@suite("grading")
def grading_suite(ctx: SuiteContext, rng) -> List[Check]:
    tol = ctx.tolerances.grading
    checks = []
    for orbit in _catalog_orbits(ctx):
        name = orbit.algebra.name
        checks.append(make_check("grading", f"{name} containment", grading_containment_residual(orbit, rng, ctx.samples // 2), tol))
        checks.append(make_check("grading", f"{name} stabilizer", stabilizer_residual(orbit), tol))
        off = np.hstack([orbit.u_basis, orbit.uminus_basis])
        leak = float(np.abs(orbit.delta_coeffs @ off).max(initial=0.0))
        checks.append(make_check("grading", f"{name} delta on u+u-", leak, tol))
    return checks


@suite("pbw_confluence")
def pbw_suite(ctx: SuiteContext, rng) -> List[Check]:
    alg = builtin("so", 1, 3)
    basis = standard_basis(alg)
    worst, idem, sorted_ok = 0.0, 0.0, True
    for _ in range(50):
        x = random_element(basis, rng)
        left = pbw_normal_form(x, "leftmost")
        rand = pbw_normal_form(x, "random", rng)
        worst = max(worst, left.distance(rand))
        idem = max(idem, pbw_normal_form(left).distance(left))
        sorted_ok = sorted_ok and left.is_normal()
    return [
        make_check("pbw_confluence", "two schedules", worst, ctx.tolerances.pbw_confluence),
        make_check("pbw_confluence", "idempotent", idem, 0.0),
        make_check("pbw_confluence", "sorted words", 0.0 if sorted_ok else 1.0, 0.0),
    ]


@suite("casimir_centrality")
def casimir_suite(ctx: SuiteContext, rng) -> List[Check]:
    tol = ctx.tolerances.casimir_centrality
    return [make_check("casimir_centrality", alg.name, centrality_residual(casimir(alg)), tol) for alg in ctx.catalog()]


def _flow_orbits() -> List[HyperbolicOrbit]:
    return [so13_orbit(1.0), so13_orbit(1.0, "half"), sl2_orbit()]


@suite("hamiltonian_flow")
def hamiltonian_suite(ctx: SuiteContext, rng) -> List[Check]:
    tol = ctx.tolerances.hamiltonian_flow
    checks = []
    for orbit in _flow_orbits():
        alg = orbit.algebra
        worst: Dict[str, float] = {}
        equivariance = 0.0
        per_orbit = max(10, ctx.samples // len(_flow_orbits()))
        for _ in range(per_orbit):
            a, b = alg.random_coeffs(rng), alg.random_coeffs(rng)
            g = _random_group(alg, rng)
            for key, value in hamiltonian_flow_residuals(orbit, a, b, g).items():
                worst[key] = max(worst.get(key, 0.0), value)
            worst["lifted"] = max(worst.get("lifted", 0.0), lifted_flow_residual(orbit, a, b, g, 2.0))
            h = _random_group(alg, rng)
            equivariance = max(
                equivariance,
                relative_error(
                    moment_map(orbit, h @ g, 1.5, a),
                    moment_map(orbit, g, 1.5, adjoint_matrix(alg, np.linalg.inv(h)) @ a),
                ),
            )
        tag = f"{alg.name}/{orbit.delta_convention}"
        checks += [make_check("hamiltonian_flow", f"{tag} {k}", v, tol) for k, v in sorted(worst.items())]
        checks.append(make_check("hamiltonian_flow", f"{tag} moment equivariance", equivariance, ctx.tolerances.phi_invariance))
    return checks


@suite("phi_invariance")
def phi_invariance_suite(ctx: SuiteContext, rng) -> List[Check]:
    checks = []
    for orbit in _flow_orbits():
        alg = orbit.algebra
        inv, well = 0.0, 0.0
        for _ in range(ctx.samples):
            l = random_levi_group_element(orbit, rng).matrix
            a = alg.random_coeffs(rng)
            inv = max(inv, relative_error(phi(orbit, adjoint_matrix(alg, l) @ a), phi(orbit, a)))
            g = _random_group(alg, rng)
            well = max(well, relative_error(hamiltonian(orbit, a, g @ l), hamiltonian(orbit, a, g)))
        tag = f"{alg.name}/{orbit.delta_convention}"
        checks.append(make_check("phi_invariance", f"{tag} phi(l.A)", inv, ctx.tolerances.phi_invariance))
        checks.append(make_check("phi_invariance", f"{tag} h(g l)", well, 1e-9))
    return checks


@suite("modular_character")
def modular_suite(ctx: SuiteContext, rng) -> List[Check]:
    checks = []
    for orbit in _flow_orbits():
        alg = orbit.algebra
        mult, deriv = 0.0, 0.0
        q_basis = np.hstack([orbit.l_basis, orbit.u_basis])
        for _ in range(max(10, ctx.samples // 5)):
            a = q_basis @ rng.uniform(-1, 1, size=q_basis.shape[1])
            b = q_basis @ rng.uniform(-1, 1, size=q_basis.shape[1])
            qa, qb = expm(alg.matrix(a)), expm(alg.matrix(b))
            mult = max(mult, relative_error(modular_character(orbit, qa @ qb), modular_character(orbit, qa) * modular_character(orbit, qb)))
            la = random_levi_element(orbit, rng)
            expected = np.exp(float(np.dot(orbit.delta_coeffs, la)))
            deriv = max(deriv, relative_error(modular_character(orbit, expm(alg.matrix(la))), expected))
        tag = f"{alg.name}/{orbit.delta_convention}"
        checks.append(make_check("modular_character", f"{tag} multiplicative", mult, ctx.tolerances.modular_character))
        checks.append(make_check("modular_character", f"{tag} derivative is delta", deriv, ctx.tolerances.modular_character))
    return checks


@suite("curvature")
def curvature_suite(ctx: SuiteContext, rng) -> List[Check]:
    orbit = so13_orbit(1.0)
    alg = orbit.algebra
    worst = 0.0
    for _ in range(20):
        g = _random_group(alg, rng)
        out = curvature_fd_check(orbit, g, 1.0 + rng.uniform(), alg.random_coeffs(rng), alg.random_coeffs(rng))
        worst = max(worst, out["rel_err"])
    return [make_check("curvature", "so(1,3) structure equation", worst, ctx.tolerances.curvature)]


def _so13_loops() -> List[Dict]:
    """Rotation loops in so(1,3) with the anchor they fix: 2 pi X4 at eta, and its conjugate by a at a . eta."""
    alg = builtin("so", 1, 3)
    a = expm(alg.matrix(np.array([0.0, 0.3, 0.0, 0.0, 0.0, 0.2])))
    return [
        {"path": {"preset": "rotation-loop", "generator": 4, "steps": 200}, "anchor": np.eye(4)},
        {"path": {"preset": "rotation-loop", "generator": 4, "steps": 200, "conjugate": a.tolist()}, "anchor": a},
    ]


@suite("kappa_loops")
def kappa_suite(ctx: SuiteContext, rng) -> List[Check]:
    tol = ctx.tolerances
    checks = []
    orbit = so13_orbit(1.0)
    grid = (min(ctx.grid[0], 32), min(ctx.grid[1], 32))
    for i, loop in enumerate(_so13_loops()):
        path = integrate_group_path(path_from_config(orbit.algebra, loop["path"]))
        x0 = make_point(orbit, loop["anchor"])
        direct = kappa_direct(path, orbit, rng)
        ode = kappa_ode_fixed_point(path, orbit, x0)
        tag = f"so(1,3) loop {i}"
        checks.append(make_check("kappa_loops", f"{tag} |kappa|", abs(abs(direct) - 1.0), tol.kappa_unit))
        checks.append(make_check("kappa_loops", f"{tag} direct-ode", abs(direct - ode), tol.kappa_routes))
        values = []
        for rank in range(3):
            chain = build_sweep_chain(path, orbit, x0, choose_connector(orbit, x0, 0.5, rank), grid)
            action = kappa_action(path, orbit, chain, ctx.workers)
            values.append(action.kappa)
            checks.append(make_check("kappa_loops", f"{tag} action q{rank}", abs(action.kappa - direct), tol.kappa_action))
            checks.append(make_check("kappa_loops", f"{tag} |A_tilde| q{rank}", abs(action.action_tilde), tol.action_tilde))
            degenerate = float(abs(action.surface) <= 1e-8)
            checks.append(make_check("kappa_loops", f"{tag} nonzero surface integral q{rank}", degenerate, 0.0))
        spread = max(abs(a - b) for a in values for b in values)
        checks.append(make_check("kappa_loops", f"{tag} point independence", spread, tol.point_independence))
        isotopy = max(
            isotopy_residual(orbit, path, make_point(orbit, _random_group(orbit.algebra, rng)), t)
            for t in rng.uniform(0.0, 1.0, size=20)
        )
        checks.append(make_check("kappa_loops", f"{tag} isotopy", isotopy, 1e-4))

    sl2 = sl2_orbit()
    half_turn = integrate_group_path(path_from_config(sl2.algebra, {"preset": "sl2-half-turn", "steps": 200}))
    direct = kappa_direct(half_turn, sl2, rng)
    checks.append(make_check("kappa_loops", "sl(2) half turn kappa=-1", abs(direct + 1.0), tol.kappa_unit))
    checks.append(make_check("kappa_loops", "sl(2) half turn |kappa|", abs(abs(direct) - 1.0), tol.kappa_unit))
    return checks


@suite("chi_multiplicativity")
def chi_suite(ctx: SuiteContext, rng) -> List[Check]:
    checks = []
    for orbit in (so13_orbit(1.0), so13_orbit(2.5), sl2_orbit()):
        roots = root_decomposition(orbit)
        c = casimir(orbit.algebra)
        chi_c = infinitesimal_character(c, orbit, roots, "pbw")
        chi_cc = infinitesimal_character(uea_multiply(c, c), orbit, roots, "pbw")
        checks.append(make_check("chi_multiplicativity", f"{orbit.algebra.name} eta={orbit.eta.coeffs[0]:g}", abs(chi_cc - chi_c**2), ctx.tolerances.chi_multiplicativity))
    return checks


@suite("infchar_constancy")
def infchar_suite(ctx: SuiteContext, rng) -> List[Check]:
    orbit = so13_orbit(1.0)
    roots = root_decomposition(orbit)
    c = casimir(orbit.algebra)
    checks = []
    for scheme in ("symmetric", "pbw"):
        base = infinitesimal_character(c, orbit, roots, scheme)
        worst = 0.0
        for _ in range(10):
            g = group_exp(orbit.algebra.element(orbit.algebra.random_coeffs(rng, 1.0)))
            worst = max(worst, abs(infchar_at_point(c, orbit, g, roots, scheme) - base))
        checks.append(make_check("infchar_constancy", f"so(1,3) {scheme}", worst, ctx.tolerances.infchar_constancy))
    return checks


@suite("transport")
def transport_suite(ctx: SuiteContext, rng) -> List[Check]:
    orbit = sl2_orbit()
    path = integrate_group_path(path_from_config(orbit.algebra, {"preset": "sl2-half-turn", "steps": 200}))
    kappa = kappa_direct(path, orbit, rng)
    report = verify_transport(orbit, path, [1.0], sample_cell_points(orbit, rng, 20), rng, kappa)
    flow = bundle_flow_check(orbit, path, _random_group(orbit.algebra, rng), 1.0, kappa, rng)
    return [
        make_check("transport", "sl(2) s(g1^-1 g) = kappa s(g)", report["transport_residual"], ctx.tolerances.transport),
        make_check("transport", "sl(2) transport equation", report["ode_residual"], ctx.tolerances.transport_ode),
        make_check("transport", "sl(2) samples checked", max(0, 20 - report["checked"]), 0),
        make_check("transport", "sl(2) bundle fiber", flow["fiber_residual"], 1e-9),
    ]


def run_suite(name: str, ctx: SuiteContext) -> List[Check]:
    if name not in SUITES:
        raise KeyError(name)
    rng = make_rng([ctx.seed, sorted(SUITES).index(name)])
    started = time.time()
    logging.info("Running suite %s", name)
    checks = SUITES[name](ctx, rng)
    logging.info(
        "Suite %s: %d/%d checks passed in %.2fs",
        name,
        sum(c.passed for c in checks),
        len(checks),
        time.time() - started,
    )
    return checks
