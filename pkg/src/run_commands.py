"""
Subcommand orchestration: resolve the run config into algebra, orbit and
path objects, run the requested computation and assemble the Report.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .catalog import builtin, describe_catalog, killing_signature
from .config import PAYLOAD_KEYS, RunConfig, validate_payload
from .errors import (
    BoundaryMismatch,
    ConfigError,
    FactorizationError,
    NotCentral,
    NotFixedPoint,
)
from .flows import (
    KappaReport,
    build_sweep_chain,
    character_value,
    choose_connector,
    constant_path,
    integrate_group_path,
    kappa_action,
    kappa_direct,
    kappa_ode_fixed_point,
    path_from_config,
)
from .liealg import MatrixLieAlgebra, load_algebra_file
from .orbit import (
    HyperbolicOrbit,
    build_orbit,
    check_datum,
    grading_containment_residual,
    make_datum,
    make_point,
    stabilizer_residual,
)
from .output_utils import Report, append_jsonl, build_report, load_jsonl
from .roots import centrality_residual, hc_project, infchar_at_point, root_decomposition, cartan_phi_values
from .sections import bundle_flow_check, sample_cell_points, verify_transport
from .suites import SUITES, Check, SuiteContext, make_check, run_suite
from .uea import casimir, from_terms, standard_basis
from .utils import make_rng

KAPPA_ROUTES = ("direct", "ode", "action", "transport")
SURFACE_TOL = 1e-8


def resolve_algebra(config: RunConfig) -> MatrixLieAlgebra:
    spec = config.algebra
    if "file" in spec:
        algebra = load_algebra_file(spec["file"])
    else:
        algebra = builtin(spec["builtin"], *spec.get("params", []))
    logging.info("Using algebra %s (d = %d)", algebra.name, algebra.d)
    return algebra


def resolve_orbit(config: RunConfig, algebra: Optional[MatrixLieAlgebra] = None) -> HyperbolicOrbit:
    """Orbit of the configured eta (zero when the config names an algebra but no eta)."""
    algebra = algebra or resolve_algebra(config)
    eta = config.eta if config.eta else [0.0] * algebra.d
    if len(eta) != algebra.d:
        raise ConfigError(f"eta needs {algebra.d} coefficients for {algebra.name}, got {len(eta)}")
    datum = make_datum(algebra, config.datum.get("dim_h", 1), config.datum.get("components", []))
    orbit = build_orbit(algebra, eta, datum, config.delta_convention)
    check_datum(orbit)
    return orbit


def _payload(command: str, config: RunConfig) -> Dict[str, Any]:
    validate_payload(command, config.payload)
    return config.payload


def bracket_table(algebra: MatrixLieAlgebra, tol: float = 1e-12) -> List[List]:
    """[[X_i, X_j], {label: coefficient}] for i < j with a nonzero bracket."""
    rows = []
    for i in range(algebra.d):
        for j in range(i + 1, algebra.d):
            c = algebra.structure[i, j]
            terms = {algebra.labels[k]: float(c[k]) for k in np.nonzero(np.abs(c) > tol)[0]}
            if terms:
                rows.append([algebra.labels[i], algebra.labels[j], terms])
    return rows


def orbit_summary(orbit: HyperbolicOrbit) -> Dict[str, Any]:
    keys = sorted(orbit.grading)
    if orbit.strictly_graded:
        verdict = "hyperbolic; strictly graded"
    else:
        verdict = "not strictly graded; l = g"
    return {
        "algebra": orbit.algebra.name,
        "d": orbit.algebra.d,
        "labels": list(orbit.algebra.labels),
        "eta": orbit.eta.coeffs,
        "x0": orbit.x0.coeffs,
        "eigenvalues": [float(r) for r in keys],
        "grading_labels": [orbit.grading_labels[r] for r in keys],
        "grading_dims": [int(orbit.grading[r].shape[1]) for r in keys],
        "dims": {
            "uminus": orbit.uminus_basis.shape[1],
            "l": orbit.l_basis.shape[1],
            "u": orbit.u_basis.shape[1],
        },
        "u_basis": orbit.u_basis.T,
        "l_basis": orbit.l_basis.T,
        "uminus_basis": orbit.uminus_basis.T,
        "delta": orbit.delta_coeffs,
        "phi": orbit.phi_coeffs,
        "delta_convention": orbit.delta_convention,
        "verdict": verdict,
    }


def cmd_orbit(config: RunConfig, **_) -> Report:
    _payload("orbit", config)
    orbit = resolve_orbit(config)
    algebra = orbit.algebra
    rng = make_rng(config.seed)
    tol = config.tolerances

    results = orbit_summary(orbit)
    results["killing"] = algebra.killing
    results["killing_scale"] = algebra.killing_scale
    results["killing_signature"] = list(killing_signature(algebra))
    results["brackets"] = bracket_table(algebra)
    results["datum_components"] = len(orbit.datum)

    checks = [
        make_check("orbit", "stabilizer", stabilizer_residual(orbit), tol.grading),
        make_check("orbit", "grading containment", grading_containment_residual(orbit, rng), tol.grading),
    ]
    return build_report("orbit", config, results, checks)


def _uea_element(orbit: HyperbolicOrbit, payload: Dict[str, Any]):
    if "element" in payload:
        return from_terms(standard_basis(orbit.algebra), payload["element"]), "element"
    return casimir(orbit.algebra), "casimir"


def cmd_infchar(config: RunConfig, **_) -> Report:
    payload = _payload("infchar", config)
    orbit = resolve_orbit(config)
    algebra = orbit.algebra
    tol = config.tolerances
    z, source = _uea_element(orbit, payload)
    roots = root_decomposition(orbit)
    values = cartan_phi_values(orbit, roots)

    projections = {scheme: hc_project(z, roots, scheme) for scheme in ("symmetric", "pbw")}
    chis = {scheme: q.evaluate(values) for scheme, q in projections.items()}
    chosen = projections[config.projection]
    logging.info("chi(%s) = %s using the %s projection", source, chis[config.projection], config.projection)

    results: Dict[str, Any] = {
        "source": source,
        "element": z.to_terms(),
        "central": chosen.central,
        "centrality_residual": centrality_residual(z),
        "cartan_labels": list(roots.cartan_labels),
        "cartan": roots.cartan.T,
        "phi_on_cartan": values,
        "projection": config.projection,
        "hc_polynomial": chosen.to_terms(),
        "chi": chis[config.projection],
        "alternatives": {
            scheme: {"hc_polynomial": q.to_terms(), "chi": chis[scheme]}
            for scheme, q in projections.items()
            if scheme != config.projection
        },
        "projection_deviation": abs(chis["symmetric"] - chis["pbw"]),
    }

    checks: List[Check] = []
    if payload.get("sweep", False):
        rng = make_rng(config.seed)
        alphas = payload.get("alphas", [1.0, 3.0])
        base = chis[config.projection]
        deviations = []
        for _ in range(10):
            g = expm(algebra.matrix(algebra.random_coeffs(rng)))
            value = infchar_at_point(z, orbit, g, roots, config.projection, alphas)
            deviations.append(abs(value - base))
        results["sweep_max_deviation"] = max(deviations)
        checks.append(make_check("infchar", "base point sweep", max(deviations), tol.infchar_constancy))
    return build_report("infchar", config, results, checks)


def _anchor_matrix(config: RunConfig, algebra: MatrixLieAlgebra) -> np.ndarray:
    """A conjugated rotation loop fixes a . eta; every other path is anchored at eta."""
    if "conjugate" in config.path:
        return np.asarray(config.path["conjugate"], dtype=float)
    return np.eye(algebra.n)


def _kappa_reference(report: KappaReport) -> Optional[complex]:
    return report.kappa_direct if report.kappa_direct is not None else report.kappa_ode


def cmd_kappa(config: RunConfig, progress: bool = False, **_) -> Report:
    payload = _payload("kappa", config)
    targets = payload.get("targets", ["direct", "ode", "action"])
    unknown = set(targets) - set(KAPPA_ROUTES)
    if unknown:
        raise ConfigError(f"unknown kappa targets: {sorted(unknown)}")
    orbit = resolve_orbit(config)
    algebra = orbit.algebra
    tol = config.tolerances
    rng = make_rng(config.seed)

    path = integrate_group_path(path_from_config(algebra, config.path))
    x0 = make_point(orbit, _anchor_matrix(config, algebra))
    report = KappaReport()
    results: Dict[str, Any] = {"path": path.spec.label, "endpoint": path.mats[-1]}
    checks: List[Check] = []

    if "direct" in targets or "transport" in targets:
        try:
            report.kappa_direct = kappa_direct(path, orbit, rng)
        except (NotCentral, FactorizationError) as e:
            report.notes.append(f"direct route not applicable: {e}")
    if "ode" in targets:
        try:
            report.kappa_ode = kappa_ode_fixed_point(path, orbit, x0)
        except NotFixedPoint as e:
            report.notes.append(f"ode route not applicable: {e}")
    if "action" in targets:
        try:
            _action_route(config, payload, orbit, path, x0, report, progress)
        except (BoundaryMismatch, NotFixedPoint) as e:
            report.notes.append(f"action route not applicable: {e}")

    for name in ("kappa_direct", "kappa_ode", "kappa_action"):
        value = getattr(report, name)
        if value is not None:
            checks.append(make_check("kappa", f"|{name}| = 1", abs(abs(value) - 1.0), tol.kappa_unit if name != "kappa_action" else tol.kappa_action))
    for pair, gap in report.compare().items():
        threshold = tol.kappa_action if "action" in pair else tol.kappa_routes
        checks.append(make_check("kappa", f"routes {pair}", gap, threshold))
    if report.action_tilde is not None:
        checks.append(make_check("kappa", "|A_tilde|", abs(report.action_tilde), tol.action_tilde))
    if report.point_independence is not None:
        checks.append(make_check("kappa", "point independence", report.point_independence, tol.point_independence))
    if len(report.convergence) >= 2 and report.convergence[0].get("error") is not None:
        coarse, fine = report.convergence[0]["error"], report.convergence[1]["error"]
        ratio = fine / coarse if coarse > 0.0 else float("inf")
        checks.append(make_check("kappa", "grid doubling improvement", ratio, 1.0 / 3.0))
    if report.action_surface is not None:
        degenerate = float(abs(report.action_surface) <= SURFACE_TOL)
        checks.append(make_check("kappa", "sweep surface integral is nonzero", degenerate, 0.0))

    if "transport" in targets:
        if report.kappa_direct is None:
            report.notes.append("transport check needs the direct route")
        else:
            v = np.ones(orbit.dim_h, dtype=complex)
            samples = sample_cell_points(orbit, rng, int(payload.get("transport_samples", 20)))
            transport = verify_transport(orbit, path, v, samples, rng, report.kappa_direct)
            g = expm(algebra.matrix(algebra.random_coeffs(rng)))
            flow = bundle_flow_check(orbit, path, g, 1.0, report.kappa_direct, rng)
            results["transport"] = transport
            results["bundle_flow"] = flow
            checks.append(make_check("kappa", "s(g1^-1 g) = kappa s(g)", transport["transport_residual"], tol.transport))
            checks.append(make_check("kappa", "transport equation", transport["ode_residual"], tol.transport_ode))
            checks.append(make_check("kappa", "bundle fiber", flow["fiber_residual"], tol.transport))

    for note in report.notes:
        logging.info(note)
    results["kappa"] = asdict(report)
    return build_report("kappa", config, results, checks)


def _action_route(
    config: RunConfig,
    payload: Dict[str, Any],
    orbit: HyperbolicOrbit,
    path,
    x0,
    report: KappaReport,
    progress: bool,
) -> None:
    scale = float(payload.get("connector_scale", 0.5))
    if "connector" in payload:
        connector = np.asarray(payload["connector"], dtype=float)
        if connector.shape != (orbit.algebra.d,):
            raise ConfigError(f"connector needs {orbit.algebra.d} coefficients")
    else:
        connector = choose_connector(orbit, x0, scale)
    grid = tuple(config.grid)
    chain = build_sweep_chain(path, orbit, x0, connector, grid)
    action = kappa_action(path, orbit, chain, config.workers, progress=progress)
    kappa = action.kappa
    report.kappa_action = kappa
    report.action_surface = action.surface
    report.action_hat = action.action_hat
    report.action_tilde = action.action_tilde
    report.berry_phase = float(np.mod(action.action_hat, 2.0 * np.pi))
    report.grid = grid

    other = choose_connector(orbit, x0, scale, rank=1)
    second = kappa_action(path, orbit, build_sweep_chain(path, orbit, x0, other, grid), config.workers).kappa
    report.point_independence = abs(second - kappa)

    reference = _kappa_reference(report)
    report.convergence.append(
        {"grid": list(grid), "kappa": kappa, "error": None if reference is None else abs(kappa - reference)}
    )
    for level in range(1, int(payload.get("convergence", 0)) + 1):
        finer = (grid[0] * 2**level, grid[1] * 2**level)
        value = kappa_action(
            path, orbit, build_sweep_chain(path, orbit, x0, connector, finer), config.workers, progress=progress
        ).kappa
        report.convergence.append(
            {"grid": list(finer), "kappa": value, "error": None if reference is None else abs(value - reference)}
        )


def cmd_character(config: RunConfig, **_) -> Report:
    payload = _payload("character", config)
    orbit = resolve_orbit(config)
    algebra = orbit.algebra
    tol = config.tolerances
    rng = make_rng(config.seed)
    m = int(payload.get("m", 1))
    steps = int(config.path.get("steps", 1000))

    if "velocity" in payload:
        velocity = np.asarray(payload["velocity"], dtype=float)
        if velocity.shape != (algebra.d,):
            raise ConfigError(f"character velocity needs {algebra.d} coefficients")
        c_path = constant_path(algebra, velocity, steps, label="levi-segment")
    else:
        c_path = path_from_config(algebra, config.path)

    base = character_value(orbit, np.eye(algebra.n), c_path, m)
    conjugated = []
    for _ in range(int(payload.get("conjugations", 5))):
        a = expm(algebra.matrix(algebra.random_coeffs(rng)))
        conjugated.append(character_value(orbit, a, c_path, m).value)
    spread = max((abs(v - base.value) for v in conjugated), default=0.0)

    checks = [make_check("character", "exponent vs m exp(phi(int C))", base.discrepancies["remark"], tol.character)]
    if "levi" in base.discrepancies:
        checks.append(make_check("character", "exponent vs m Phi(c_1)", base.discrepancies["levi"], tol.character))
    checks.append(make_check("character", "conjugation invariance", spread, tol.character))
    results = {"path": c_path.label, "character": asdict(base), "conjugated_values": conjugated, "conjugation_spread": spread}
    return build_report("character", config, results, checks)


def _suite_context(config: RunConfig, payload: Dict[str, Any]) -> SuiteContext:
    algebras = None
    if "algebras" in payload:
        algebras = [builtin(name) for name in payload["algebras"]]
    return SuiteContext(
        tolerances=config.tolerances,
        seed=config.seed,
        samples=int(payload.get("samples", 100)),
        algebras=algebras,
        grid=tuple(config.grid),
        workers=1,
    )


def cmd_verify(
    config: RunConfig,
    suites: Optional[Sequence[str]] = None,
    jsonl_path: Optional[str] = None,
    **_,
) -> Report:
    """Run the property suites, fanning them out over config.workers threads."""
    payload = _payload("verify", config)
    names = list(suites or payload.get("suites") or sorted(SUITES))
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suites: {unknown}; known: {sorted(SUITES)}")
    ctx = _suite_context(config, payload)
    ctx.catalog()

    outcomes: Dict[str, Dict[str, Any]] = {}
    started = time.time()
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        futures = {executor.submit(_timed_suite, name, ctx): name for name in names}
        for future in as_completed(futures):
            name = futures[future]
            outcomes[name] = future.result()

    checks: List[Check] = []
    summary = {}
    for name in sorted(outcomes):
        outcome = outcomes[name]
        checks += outcome["checks"]
        summary[name] = {
            "passed": all(c.passed for c in outcome["checks"]),
            "checks": len(outcome["checks"]),
            "failed": sum(not c.passed for c in outcome["checks"]),
            "seconds": outcome["seconds"],
        }
        if jsonl_path:
            append_jsonl(jsonl_path, {"suite": name, "seed": config.seed, **summary[name], "results": outcome["checks"]})
    logging.info("Verify finished in %.2fs: %d/%d suites passed", time.time() - started, sum(s["passed"] for s in summary.values()), len(summary))
    results: Dict[str, Any] = {"suites": summary}
    if jsonl_path:
        results["history"] = _jsonl_history(load_jsonl(jsonl_path), names)
    return build_report("verify", config, results, checks)


def _jsonl_history(records: List[Dict[str, Any]], names: Sequence[str]) -> Dict[str, Dict[str, int]]:
    """Runs and passing runs per suite over every record in the JSONL log."""
    history = {name: {"runs": 0, "passed_runs": 0} for name in sorted(names)}
    for record in records:
        if record.get("suite") in history:
            history[record["suite"]]["runs"] += 1
            history[record["suite"]]["passed_runs"] += int(bool(record.get("passed")))
    return history


def _timed_suite(name: str, ctx: SuiteContext) -> Dict[str, Any]:
    started = time.time()
    checks = run_suite(name, ctx)
    return {"checks": checks, "seconds": time.time() - started}


def cmd_catalog(config: RunConfig, **_) -> Report:
    _payload("catalog", config)
    return build_report("catalog", config, {"algebras": describe_catalog()}, [])


COMMANDS = {
    "orbit": cmd_orbit,
    "infchar": cmd_infchar,
    "kappa": cmd_kappa,
    "character": cmd_character,
    "verify": cmd_verify,
    "catalog": cmd_catalog,
}


def run_command(command: str, config: RunConfig, **options: Any) -> Report:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {sorted(PAYLOAD_KEYS)}")
    logging.info("Running %s (seed %d)", command, config.seed)
    return COMMANDS[command](config, **options)
