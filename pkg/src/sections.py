"""
Explicit polarized equivariant sections on the dense cell
rep . exp(u-) L0 exp(u) and the transport checks built on them.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from .errors import CellEscape, LogDomainError, NotCentral
from .flows import CENTRAL_TOL, SampledGroupPath, centrality_residual, kappa_direct
from .liealg import as_matrix, group_log
from .orbit import HyperbolicOrbit, modular_character, phi, phi_group

NEWTON_TOL = 1e-12
ACCEPT_TOL = 1e-9
FD_STEP = 1e-7
MAX_COORD = 50.0


@dataclass(frozen=True, eq=False)
class HoroFactor:
    """g = reps[rep_index] exp(n_minus) exp(a_l) exp(n_plus); vectors in algebra coordinates."""

    rep_index: int
    n_minus: np.ndarray
    a_l: np.ndarray
    n_plus: np.ndarray
    residual: float


def _blocks(orbit: HyperbolicOrbit) -> List[np.ndarray]:
    return [orbit.uminus_basis, orbit.l_basis, orbit.u_basis]


def _compose(orbit: HyperbolicOrbit, x: np.ndarray) -> np.ndarray:
    alg = orbit.algebra
    out = np.eye(alg.n)
    start = 0
    for block in _blocks(orbit):
        k = block.shape[1]
        out = out @ expm(alg.matrix(block @ x[start : start + k]))
        start += k
    return out


def _newton(orbit: HyperbolicOrbit, target: np.ndarray, x: np.ndarray, max_iter: int = 40) -> Tuple[np.ndarray, float]:
    """Gauss-Newton on exp(n-) exp(A) exp(n+) - target with a central-difference Jacobian."""
    d = x.size
    residual = np.inf
    for _ in range(max_iter):
        f = (_compose(orbit, x) - target).ravel()
        if not np.all(np.isfinite(f)):
            raise CellEscape("horospherical factorization overflowed")
        residual = float(np.linalg.norm(f))
        if residual < NEWTON_TOL * (1.0 + np.linalg.norm(target)):
            break
        jac = np.empty((f.size, d))
        for i in range(d):
            e = np.zeros(d)
            e[i] = FD_STEP
            jac[:, i] = (_compose(orbit, x + e) - _compose(orbit, x - e)).ravel() / (2 * FD_STEP)
        if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > 1e12:
            raise CellEscape("singular Jacobian in the horospherical factorization")
        try:
            dx, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        except np.linalg.LinAlgError as e:
            raise CellEscape(f"horospherical factorization failed: {e}") from e
        x = x + dx
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > MAX_COORD:
            raise CellEscape("horospherical factorization diverged")
    return x, residual


def _solve_component(orbit: HyperbolicOrbit, target: np.ndarray) -> Tuple[np.ndarray, float]:
    x0 = np.zeros(orbit.algebra.d)
    try:
        x, residual = _newton(orbit, target, x0)
        if residual <= ACCEPT_TOL:
            return x, residual
    except CellEscape:
        pass
    # continuation from e along exp(s log target)
    log = group_log(target, orbit.algebra).coeffs
    x = x0
    for s in np.linspace(0.1, 1.0, 10):
        x, residual = _newton(orbit, expm(orbit.algebra.matrix(s * log)), x)
    return x, residual


def horospherical_factor(orbit: HyperbolicOrbit, g) -> HoroFactor:
    """
    Factor g over the dense cell, trying datum representatives in table order.

    Raises:
        CellEscape: no representative gives a converged factorization
    """
    gm = as_matrix(g)
    for index, rep in enumerate(orbit.datum.reps):
        target = np.linalg.solve(rep, gm)
        try:
            x, residual = _solve_component(orbit, target)
        except (CellEscape, LogDomainError):
            continue
        if residual > ACCEPT_TOL * (1.0 + np.linalg.norm(gm)):
            continue
        parts, start = [], 0
        for block in _blocks(orbit):
            k = block.shape[1]
            parts.append(block @ x[start : start + k])
            start += k
        return HoroFactor(index, parts[0], parts[1], parts[2], residual)
    raise CellEscape("element lies outside the dense cell of every datum component")


def eval_section(orbit: HyperbolicOrbit, v, g) -> np.ndarray:
    """s(g) = Lambda(rep)^-1 Delta(rep)^-1 e^{-phi(A_l)} v for g = rep exp(n-) exp(A_l) exp(n+)."""
    factor = horospherical_factor(orbit, g)
    rep = orbit.datum.reps[factor.rep_index]
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    scale = np.exp(-phi(orbit, factor.a_l)) / modular_character(orbit, rep)
    return scale * np.linalg.solve(orbit.datum.values[factor.rep_index], v)


def sample_cell_points(orbit: HyperbolicOrbit, rng: np.random.Generator, count: int, scale: float = 0.4) -> List[np.ndarray]:
    """rep exp(n-) exp(A) exp(n+) with coefficients uniform in [-scale, scale], cycling over reps."""
    out = []
    reps = orbit.datum.reps
    for i in range(count):
        x = rng.uniform(-scale, scale, size=orbit.algebra.d)
        out.append(reps[i % len(reps)] @ _compose(orbit, x))
    return out


def verify_transport(
    orbit: HyperbolicOrbit,
    path: SampledGroupPath,
    v,
    samples: List[np.ndarray],
    rng: np.random.Generator,
    kappa: Optional[complex] = None,
    eps_path: float = 1e-3,
    eps_group: float = 1e-4,
) -> Dict[str, Any]:
    """
    s(g_1^-1 g) = kappa s(g) on every sample, and at t = 0 the transport
    equation d/dt s(g_t^-1 g) = -d/de s(exp(e A_0) g).
    """
    alg = orbit.algebra
    if kappa is None:
        kappa = kappa_direct(path, orbit, rng)
    g1_inv = np.linalg.inv(path.mats[-1])
    a0 = alg.matrix(path.spec.velocity(0.0))
    gt = [np.linalg.inv(path.at(k * eps_path)) for k in (1, 2)]
    transport, ode, skipped = 0.0, 0.0, 0
    for g in samples:
        try:
            s = eval_section(orbit, v, g)
            moved = eval_section(orbit, v, g1_inv @ g)
            transport = max(transport, float(np.abs(moved - kappa * s).max()))

            s1, s2 = eval_section(orbit, v, gt[0] @ g), eval_section(orbit, v, gt[1] @ g)
            lhs = (-3.0 * s + 4.0 * s1 - s2) / (2 * eps_path)
            rhs = -(
                eval_section(orbit, v, expm(eps_group * a0) @ g)
                - eval_section(orbit, v, expm(-eps_group * a0) @ g)
            ) / (2 * eps_group)
            ode = max(ode, float(np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max())))
        except CellEscape:
            skipped += 1
    if skipped:
        logging.warning("Skipped %d of %d samples outside the dense cell", skipped, len(samples))
    return {
        "kappa": kappa,
        "samples": len(samples),
        "checked": len(samples) - skipped,
        "skipped": skipped,
        "transport_residual": transport,
        "ode_residual": ode,
    }


def bundle_flow_check(orbit: HyperbolicOrbit, path: SampledGroupPath, g, alpha, kappa: complex, rng: np.random.Generator) -> Dict[str, Any]:
    """
    [g_1 g, alpha] = [g g_1, alpha] = [g, Phi(g_1) alpha], compared with kappa [g, alpha].

    Raises:
        NotCentral: g_1 is not central
    """
    g1 = path.mats[-1]
    residual = centrality_residual(g1, orbit.algebra, rng)
    if residual > CENTRAL_TOL:
        raise NotCentral(f"path endpoint is not central (residual {residual:.2e})")
    m = orbit.dim_h
    frame = alpha * np.eye(m) if np.ndim(alpha) == 0 else np.asarray(alpha, dtype=complex)
    base_gap = float(np.abs(as_matrix(g) @ g1 - g1 @ as_matrix(g)).max())
    fiber = phi_group(orbit, g1) @ frame
    return {
        "base_gap": base_gap,
        "fiber_residual": float(np.abs(fiber - kappa * frame).max()),
        "fiber_scale": float(abs(np.linalg.det(fiber) / np.linalg.det(frame)) ** (1.0 / m)),
    }
