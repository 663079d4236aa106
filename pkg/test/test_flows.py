"""Group paths, the kappa routes and the character exponent."""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from scipy.linalg import expm

from src.catalog import builtin
from src.errors import BoundaryMismatch, ConfigError, NotCentral, NotFixedPoint, NotInLevi
from src.flows import (
    KappaReport,
    build_sweep_chain,
    character_value,
    choose_connector,
    constant_path,
    integrate_group_path,
    isotopy_residual,
    kappa_action,
    kappa_direct,
    kappa_ode_fixed_point,
    path_from_config,
    path_residuals,
)
from src.orbit import build_orbit, make_datum, make_point, phi
from src.utils import make_rng

SO13 = builtin("so", 1, 3)
SL2 = builtin("sl", 2)
ROTATION_LOOP = {"preset": "rotation-loop", "generator": 4, "steps": 200}


def so13_orbit(k=1.0):
    return build_orbit(SO13, k * np.eye(6)[0])


def sl2_orbit():
    datum = make_datum(SL2, 1, [{"rep": (-np.eye(2)).tolist(), "value": [-1.0, 0.0]}])
    return build_orbit(SL2, [1.0, 0.0, 0.0], datum)


def test_rotation_loop_closes():
    for scheme in ("magnus4", "midpoint"):
        path = integrate_group_path(path_from_config(SO13, dict(ROTATION_LOOP, scheme=scheme)))
        assert np.abs(path.mats[-1] - np.eye(4)).max() < 1e-10
        residuals = path_residuals(path, make_rng(0))
        assert residuals["velocity"] < 1e-6
        assert residuals["constraint"] < 1e-10


def test_segments_are_rescaled_to_unit_time():
    doc = {
        "segments": [
            {"duration": 1.0, "velocity": [1.0, 0, 0, 0, 0, 0]},
            {"duration": 1.0, "velocity": [0, 0, 0, 1.0, 0, 0]},
        ],
        "steps": 50,
    }
    path = integrate_group_path(path_from_config(SO13, doc))
    expected = expm(SO13.matrix(np.eye(6)[3])) @ expm(SO13.matrix(np.eye(6)[0]))
    assert np.abs(path.mats[-1] - expected).max() < 1e-10
    assert path.spec.breakpoints == [0.5]


def test_bad_path_documents():
    for doc in (
        {"preset": "rotation-loop", "generator": 9},
        {"preset": "levi-segment", "velocity": [1.0, 0.0]},
        {"preset": "sl2-half-turn"},
    ):
        try:
            path_from_config(SO13, doc)
            assert False, f"expected ConfigError for {doc}"
        except ConfigError:
            pass


def test_kappa_of_rotation_loop():
    orbit = so13_orbit()
    rng = make_rng(1)
    path = integrate_group_path(path_from_config(SO13, ROTATION_LOOP))
    x0 = make_point(orbit, np.eye(4))
    direct = kappa_direct(path, orbit, rng)
    ode = kappa_ode_fixed_point(path, orbit, x0)
    assert abs(direct - 1.0) < 1e-9
    assert abs(ode - 1.0) < 1e-9


def test_kappa_action_converges():
    orbit = so13_orbit()
    path = integrate_group_path(path_from_config(SO13, ROTATION_LOOP))
    x0 = make_point(orbit, np.eye(4))
    connector = np.array([0.0, 0.4, 0.2, 0.0, -0.1, 0.3])
    errors = []
    for grid in ((16, 16), (32, 32)):
        chain = build_sweep_chain(path, orbit, x0, connector, grid)
        action = kappa_action(path, orbit, chain)
        assert abs(action.surface) > 0.1
        assert abs(action.action_tilde) < 1e-3
        assert abs(action.kappa - np.exp(action.surface + action.line)) < 1e-12
        errors.append(abs(action.kappa - 1.0))
    assert errors[1] < 1e-3
    assert errors[0] / errors[1] >= 3.0


def test_default_connector_sweeps_a_nondegenerate_surface():
    orbit = so13_orbit()
    path = integrate_group_path(path_from_config(SO13, ROTATION_LOOP))
    x0 = make_point(orbit, np.eye(4))
    connectors = [choose_connector(orbit, x0, 0.5, rank) for rank in range(2)]
    assert abs(np.linalg.norm(connectors[0]) - 0.5) < 1e-12
    assert np.linalg.norm(connectors[0] - connectors[1]) > 1e-3
    for connector in connectors:
        # a single generator is not generic
        assert np.count_nonzero(np.abs(connector) > 1e-8) > 1
        action = kappa_action(path, orbit, build_sweep_chain(path, orbit, x0, connector, (16, 16)))
        assert abs(action.surface) > 1e-3
        assert abs(action.kappa - 1.0) < 1e-3


def test_kappa_ode_steps_the_fiber_transport():
    a1 = np.array([0.3, 0.0, 0.0, 0.7, 0.0, 0.0])
    a2 = np.array([-0.2, 0.0, 0.0, 0.4, 0.0, 0.0])
    doc = {"segments": [{"duration": 1.0, "velocity": a1.tolist()}, {"duration": 3.0, "velocity": a2.tolist()}], "steps": 40}
    for dim_h in (1, 2):
        orbit = build_orbit(SO13, np.eye(6)[0], make_datum(SO13, dim_h))
        x0 = make_point(orbit, np.eye(4))
        expected = np.exp(phi(orbit, a1) + 3.0 * phi(orbit, a2))
        for scheme in ("magnus4", "midpoint"):
            path = integrate_group_path(path_from_config(SO13, dict(doc, scheme=scheme)))
            assert abs(kappa_ode_fixed_point(path, orbit, x0) - expected) < 1e-9


def test_conjugated_loop_is_anchored_at_the_moved_point():
    orbit = so13_orbit()
    rng = make_rng(2)
    a = expm(SO13.matrix(np.array([0.0, 0.3, 0.0, 0.0, 0.0, 0.2])))
    path = integrate_group_path(path_from_config(SO13, dict(ROTATION_LOOP, conjugate=a.tolist())))
    x0 = make_point(orbit, a)
    assert abs(kappa_direct(path, orbit, rng) - 1.0) < 1e-9
    assert abs(kappa_ode_fixed_point(path, orbit, x0) - 1.0) < 1e-9
    try:
        kappa_ode_fixed_point(path, orbit, make_point(orbit, np.eye(4)))
        assert False, "expected NotFixedPoint"
    except NotFixedPoint:
        pass


def test_isotopy_follows_the_vector_field():
    orbit = so13_orbit()
    rng = make_rng(3)
    path = integrate_group_path(path_from_config(SO13, ROTATION_LOOP))
    for t in (0.1, 0.45, 0.8):
        x = make_point(orbit, expm(SO13.matrix(SO13.random_coeffs(rng))))
        assert isotopy_residual(orbit, path, x, t) < 1e-4


def test_sl2_half_turn():
    orbit = sl2_orbit()
    rng = make_rng(4)
    path = integrate_group_path(path_from_config(SL2, {"preset": "sl2-half-turn", "steps": 200}))
    assert np.abs(path.mats[-1] + np.eye(2)).max() < 1e-10
    assert abs(kappa_direct(path, orbit, rng) + 1.0) < 1e-9
    x0 = make_point(orbit, np.eye(2))
    try:
        kappa_ode_fixed_point(path, orbit, x0)
        assert False, "expected NotFixedPoint"
    except NotFixedPoint:
        pass
    try:
        build_sweep_chain(path, orbit, x0, np.array([0.5, 0.0, 0.0]), (8, 8))
        assert False, "expected BoundaryMismatch"
    except BoundaryMismatch:
        pass


def test_kappa_direct_needs_a_central_endpoint():
    orbit = so13_orbit()
    path = integrate_group_path(constant_path(SO13, np.eye(6)[0], steps=10))
    try:
        kappa_direct(path, orbit, make_rng(5))
        assert False, "expected NotCentral"
    except NotCentral:
        pass


def test_kappa_report_discrepancies():
    report = KappaReport(kappa_direct=1.0 + 0j, kappa_ode=1.0 + 1e-12j, kappa_action=0.9995 + 0j)
    gaps = report.compare()
    assert set(gaps) == {"direct-ode", "direct-action", "ode-action"}
    assert gaps["direct-ode"] < 1e-11
    assert abs(gaps["direct-action"] - 5e-4) < 1e-12


def test_character_of_levi_segment():
    orbit = so13_orbit()
    rng = make_rng(6)
    c = np.array([0.3, 0.0, 0.0, 0.7, 0.0, 0.0])
    c_path = constant_path(SO13, c, steps=50)
    expected = np.exp(0.3 * complex(2.0, 1.0))
    report = character_value(orbit, np.eye(4), c_path)
    assert abs(report.value - expected) < 1e-8
    assert abs(report.remark_value - expected) < 1e-8
    assert abs(report.levi_value - expected) < 1e-8
    for _ in range(5):
        a = expm(SO13.matrix(SO13.random_coeffs(rng)))
        assert abs(character_value(orbit, a, c_path).value - expected) < 1e-8
    assert abs(character_value(orbit, np.eye(4), c_path, m=3).value - 3 * expected) < 1e-8


def test_character_of_trivial_path():
    orbit = so13_orbit()
    report = character_value(orbit, np.eye(4), constant_path(SO13, np.zeros(6), steps=5), m=2)
    assert abs(report.value - 2.0) < 1e-12


def test_character_rejects_paths_leaving_l():
    orbit = so13_orbit()
    try:
        character_value(orbit, np.eye(4), constant_path(SO13, np.eye(6)[1], steps=5))
        assert False, "expected NotInLevi"
    except NotInLevi:
        pass


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"{name} passed")
