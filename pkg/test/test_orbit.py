"""Hyperbolic orbits: grading, phi, Hamiltonians, Kirillov forms, bundle data."""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from scipy.linalg import expm

from src.catalog import builtin
from src.errors import DatumError, NotHyperbolic, NotInLevi, NotTangent
from src.liealg import adjoint_matrix, coadjoint_action
from src.orbit import (
    build_orbit,
    connection_eval,
    curvature_eval,
    curvature_fd_check,
    grading_containment_residual,
    hamiltonian,
    hamiltonian_flow_residuals,
    kirillov_forms,
    lifted_flow_residual,
    make_datum,
    make_point,
    modular_character,
    moment_map,
    omega_on_tangents,
    phi,
    phi_group,
    point_residual,
    random_levi_group_element,
    stabilizer_residual,
    tangent_solve,
    vector_field,
)
from src.utils import make_rng

SO13 = builtin("so", 1, 3)


def so13_orbit(k=1.0, convention="full"):
    return build_orbit(SO13, k * np.eye(6)[0], convention=convention)


def e(i, d=6):
    return np.eye(d)[i - 1]


def test_grading_so13():
    orbit = so13_orbit()
    assert np.allclose(orbit.x0.coeffs, 0.5 * e(1))
    assert np.allclose(orbit.eigenvalues, [-0.5, 0.0, 0.5])
    assert np.allclose(sorted(orbit.grading_labels.values()), [-1.0, 0.0, 1.0])
    assert [orbit.grading[r].shape[1] for r in sorted(orbit.grading)] == [2, 2, 2]
    assert orbit.strictly_graded


def test_u_is_spanned_by_x2_x6_and_x3_x5():
    orbit = so13_orbit()
    expected = np.stack([e(2) + e(6), e(3) + e(5)], axis=1)
    target = expected @ np.linalg.pinv(expected)
    q = orbit.u_basis
    actual = q @ np.linalg.pinv(q)
    assert np.abs(actual - target).max() < 1e-10


def test_delta_and_phi_so13():
    for k in (1.0, 2.5):
        orbit = so13_orbit(k)
        assert abs(orbit.delta_coeffs @ e(1) - 2.0) < 1e-10
        assert abs(orbit.delta_coeffs @ e(4)) < 1e-10
        assert abs(phi(orbit, e(1)) - complex(2.0, k)) < 1e-10
        assert abs(phi(orbit, e(4))) < 1e-10
    half = so13_orbit(1.0, "half")
    assert abs(half.delta_coeffs @ e(1) - 1.0) < 1e-10


def test_sl2_orbit():
    sl2 = builtin("sl", 2)
    orbit = build_orbit(sl2, [1.0, 0.0, 0.0])
    assert np.allclose(orbit.x0.coeffs, [0.5, 0.0, 0.0])
    assert abs(phi(orbit, [1.0, 0.0, 0.0]) - complex(2.0, 1.0)) < 1e-10


def test_zero_eta_is_not_strictly_graded():
    orbit = build_orbit(SO13, np.zeros(6))
    assert not orbit.strictly_graded
    assert orbit.l_basis.shape[1] == 6
    assert modular_character(orbit, expm(SO13.matrix(e(2)))) == 1.0


def test_elliptic_eta_is_rejected():
    try:
        build_orbit(SO13, e(4))
        assert False, "expected NotHyperbolic"
    except NotHyperbolic:
        pass


def test_grading_containment_and_stabilizer():
    orbit = so13_orbit()
    rng = make_rng(0)
    assert grading_containment_residual(orbit, rng, 50) < 1e-8
    assert stabilizer_residual(orbit) < 1e-10


def test_hamiltonian_at_base_point_is_phi():
    orbit = so13_orbit()
    b = np.array([0.3, 0.1, -0.2, 0.7, 0.4, 0.0])
    assert abs(hamiltonian(orbit, b, np.eye(4)) - phi(orbit, b)) < 1e-12


def test_hamiltonian_is_right_levi_invariant():
    orbit = so13_orbit()
    rng = make_rng(1)
    for _ in range(10):
        g = expm(SO13.matrix(SO13.random_coeffs(rng)))
        l = random_levi_group_element(orbit, rng).matrix
        b = rng.normal(size=6)
        assert abs(hamiltonian(orbit, b, g @ l) - hamiltonian(orbit, b, g)) < 1e-9


def test_hamiltonian_flow_identities():
    rng = make_rng(2)
    for convention in ("full", "half"):
        orbit = so13_orbit(1.0, convention)
        for _ in range(20):
            a, b = SO13.random_coeffs(rng), SO13.random_coeffs(rng)
            g = expm(SO13.matrix(SO13.random_coeffs(rng)))
            residuals = hamiltonian_flow_residuals(orbit, a, b, g)
            assert max(residuals.values()) < 1e-4, residuals
            assert lifted_flow_residual(orbit, a, b, g, 2.0) < 1e-4


def test_kirillov_forms_are_antisymmetric():
    orbit = so13_orbit()
    rng = make_rng(3)
    point = make_point(orbit, expm(SO13.matrix(SO13.random_coeffs(rng))))
    a, b = rng.normal(size=6), rng.normal(size=6)
    w_ab = kirillov_forms(orbit, a, b, point)
    w_ba = kirillov_forms(orbit, b, a, point)
    for x, y in zip(w_ab, w_ba):
        assert abs(x + y) < 1e-10
    omega, omega_hat, omega_tilde = w_ab
    assert abs(omega - complex(omega_tilde, omega_hat)) < 1e-10

    va, vb = vector_field(orbit, a, point), vector_field(orbit, b, point)
    for x, y in zip(omega_on_tangents(orbit, point, va, vb), w_ab):
        assert abs(x - y) < 1e-8


def test_tangent_solve():
    orbit = so13_orbit()
    rng = make_rng(4)
    point = make_point(orbit, expm(SO13.matrix(SO13.random_coeffs(rng))))
    assert point_residual(orbit, point) < 1e-12
    b = rng.normal(size=6)
    v = vector_field(orbit, b, point)
    solved = tangent_solve(orbit, point, v)
    assert np.allclose(vector_field(orbit, solved, point).coeffs, v.coeffs, atol=1e-9)
    try:
        tangent_solve(orbit, make_point(orbit, np.eye(4)), orbit.eta)
        assert False, "expected NotTangent"
    except NotTangent:
        pass


def test_vector_field_matches_the_coadjoint_flow():
    orbit = so13_orbit()
    rng = make_rng(7)
    eps = 1e-5
    for _ in range(5):
        g = expm(SO13.matrix(SO13.random_coeffs(rng)))
        b = rng.normal(size=6)
        forward = coadjoint_action(expm(eps * SO13.matrix(b)) @ g, orbit.eta, SO13).coeffs
        backward = coadjoint_action(expm(-eps * SO13.matrix(b)) @ g, orbit.eta, SO13).coeffs
        expected = (forward - backward) / (2 * eps)
        actual = vector_field(orbit, b, make_point(orbit, g)).coeffs
        assert np.abs(actual - expected).max() < 1e-6 * (1.0 + np.abs(expected).max())


def test_tangent_solve_ignores_the_stabilizer_part():
    orbit = so13_orbit()
    rng = make_rng(8)
    g = expm(SO13.matrix(SO13.random_coeffs(rng)))
    point = make_point(orbit, g)
    b, c = rng.normal(size=6), rng.normal(size=6)
    for _ in range(3):
        s = adjoint_matrix(SO13, g) @ orbit.l_basis @ rng.normal(size=orbit.l_basis.shape[1])
        assert np.abs(vector_field(orbit, s, point).coeffs).max() < 1e-9
        moved = b + s
        assert np.allclose(vector_field(orbit, moved, point).coeffs, vector_field(orbit, b, point).coeffs, atol=1e-9)
        solved = tangent_solve(orbit, point, vector_field(orbit, moved, point))
        assert np.allclose(solved.coeffs, tangent_solve(orbit, point, vector_field(orbit, b, point)).coeffs, atol=1e-8)
        for x, y in zip(kirillov_forms(orbit, moved, c, point), kirillov_forms(orbit, b, c, point)):
            assert abs(x - y) < 1e-8


def test_connection_eval():
    orbit = so13_orbit()
    rng = make_rng(9)
    g = expm(SO13.matrix(SO13.random_coeffs(rng)))
    b = rng.normal(size=6)
    h = hamiltonian(orbit, b, g)
    assert abs(connection_eval(orbit, g, 2.0, b, 0.0)[0, 0] - h) < 1e-12
    assert abs(connection_eval(orbit, g, 2.0, b, 0.3j)[0, 0] - (h + 0.3j)) < 1e-12
    assert abs(connection_eval(orbit, g, 2.0, np.zeros(6), 0.7)[0, 0] - 0.7) < 1e-12

    k = expm(SO13.matrix(SO13.random_coeffs(rng)))
    moved = connection_eval(orbit, k @ g, 2.0, adjoint_matrix(SO13, k) @ b, 0.0)
    assert np.abs(moved - connection_eval(orbit, g, 2.0, b, 0.0)).max() < 1e-9
    l = random_levi_group_element(orbit, rng).matrix
    assert np.abs(connection_eval(orbit, g @ l, 1.0, b, 0.0) - connection_eval(orbit, g, 1.0, b, 0.0)).max() < 1e-9

    rank_two = build_orbit(SO13, e(1), make_datum(SO13, 2))
    alpha = np.array([[1.0, 2.0j], [0.5, 1.0]])
    y = np.array([[0.1, 0.2], [0.0, -0.1j]])
    h2 = hamiltonian(rank_two, b, g)
    assert np.abs(connection_eval(rank_two, g, alpha, b, y) - (h2 * np.eye(2) + y)).max() < 1e-10
    assert np.abs(connection_eval(rank_two, g, alpha, b, 0.5) - (h2 + 0.5) * np.eye(2)).max() < 1e-10


def test_curvature_structure_equation():
    orbit = so13_orbit()
    rng = make_rng(5)
    for _ in range(5):
        g = expm(SO13.matrix(SO13.random_coeffs(rng)))
        out = curvature_fd_check(orbit, g, 1.5, SO13.random_coeffs(rng), SO13.random_coeffs(rng))
        assert out["rel_err"] < 1e-3


def test_curvature_is_minus_h_of_bracket_for_line_bundles():
    orbit = so13_orbit()
    g = expm(SO13.matrix(np.array([0.1, 0.2, 0.0, 0.3, 0.0, 0.1])))
    b, c = e(2), e(4)
    bc = SO13.bracket_coeffs(b, c)
    assert abs(curvature_eval(orbit, g, 1.0, b, c)[0, 0] + hamiltonian(orbit, bc, g)) < 1e-12


def test_moment_map_equivariance():
    orbit = so13_orbit()
    rng = make_rng(6)
    for _ in range(5):
        g = expm(SO13.matrix(SO13.random_coeffs(rng)))
        h = expm(SO13.matrix(SO13.random_coeffs(rng)))
        a = rng.normal(size=6)
        left = moment_map(orbit, h @ g, 2.0, a)
        right = moment_map(orbit, g, 2.0, adjoint_matrix(SO13, np.linalg.inv(h)) @ a)
        assert np.allclose(left, right, atol=1e-9)


def test_modular_character():
    orbit = so13_orbit()
    for t in (-0.7, 0.3, 1.2):
        q = expm(t * SO13.matrix(e(1)))
        assert abs(modular_character(orbit, q) - np.exp(2.0 * t)) < 1e-9
    half = so13_orbit(1.0, "half")
    assert abs(modular_character(half, expm(SO13.matrix(e(1)))) - np.e) < 1e-9
    try:
        modular_character(orbit, expm(SO13.matrix(e(2) - e(6))))
        assert False, "expected NotInLevi"
    except NotInLevi:
        pass


def test_datum_and_phi_on_levi():
    sl2 = builtin("sl", 2)
    datum = make_datum(sl2, 1, [{"rep": (-np.eye(2)).tolist(), "value": [-1.0, 0.0]}])
    assert len(datum) == 2 and np.allclose(datum.reps[0], np.eye(2))
    orbit = build_orbit(sl2, [1.0, 0.0, 0.0], datum)
    assert abs(phi_group(orbit, -np.eye(2))[0, 0] + 1.0) < 1e-10
    t = 0.4
    value = phi_group(orbit, -expm(t * sl2.matrix([1.0, 0.0, 0.0])))[0, 0]
    assert abs(value + np.exp(t * complex(2.0, 1.0))) < 1e-9
    try:
        make_datum(sl2, 1, [{"rep": np.eye(2).tolist(), "value": [-1.0, 0.0]}])
        assert False, "expected DatumError"
    except DatumError:
        pass


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"{name} passed")
