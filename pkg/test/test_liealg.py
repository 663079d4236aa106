"""Matrix Lie algebras: brackets, Killing form, exp/log, adjoint actions, catalog."""

import os
import sys
import tempfile

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from scipy.linalg import expm

from src.catalog import CATALOG, builtin, describe_catalog, killing_signature
from src.errors import BasisMismatch, ClosureError, ConfigError, LogDomainError, UnknownAlgebra
from src.liealg import (
    Covector,
    adjoint_action,
    adjoint_matrix,
    bracket,
    coadjoint_action,
    group_exp,
    group_log,
    jacobi_residual,
    killing_form,
    load_algebra_file,
)
from src.utils import make_rng

SO13 = builtin("so", 1, 3)


def x(i, alg=SO13):
    return alg.basis_element(i - 1)


def test_so13_bracket_table():
    assert np.allclose(bracket(x(1), x(2)).coeffs, x(6).coeffs)
    assert np.allclose(bracket(x(2), x(4)).coeffs, x(3).coeffs)
    assert np.allclose(bracket(x(1), x(3)).coeffs, x(5).coeffs)
    assert np.allclose(bracket(x(4), x(6)).coeffs, -x(5).coeffs)
    assert np.allclose(bracket(x(1), x(4)).coeffs, 0.0)


def test_bracket_antisymmetric_and_mixed_algebras():
    rng = make_rng(0)
    a, b = SO13.element(rng.normal(size=6)), SO13.element(rng.normal(size=6))
    assert np.allclose(bracket(a, b).coeffs, -bracket(b, a).coeffs)
    sl2 = builtin("sl", 2)
    try:
        bracket(a, sl2.basis_element(0))
        assert False, "expected BasisMismatch"
    except BasisMismatch:
        pass


def test_killing_form_so13():
    b = killing_form(SO13)
    assert np.allclose(b, 4.0 * np.diag([1, 1, 1, -1, -1, -1]), atol=1e-12)
    assert abs(SO13.killing_scale - 4.0) < 1e-9
    assert np.allclose(SO13.normalized_killing(), np.diag([1, 1, 1, -1, -1, -1]))
    assert killing_signature(SO13) == (3, 3, 0)


def test_killing_form_sl2():
    sl2 = builtin("sl", 2)
    b = sl2.killing
    assert abs(b[0, 0] - 8.0) < 1e-12
    assert abs(b[1, 2] - 4.0) < 1e-12
    assert abs(b[1, 1]) < 1e-12


def test_exp_log_roundtrip():
    rng = make_rng(1)
    for entry in CATALOG:
        alg = builtin(*entry)
        for _ in range(5):
            a = alg.element(alg.random_coeffs(rng, 1.0))
            g = group_exp(a)
            assert g.constraint_residual() < 1e-10
            assert np.linalg.norm(group_log(g, alg).coeffs - a.coeffs) < 1e-8


def test_group_exp_of_rotation_generator():
    g = group_exp(SO13.element(2 * np.pi * x(4).coeffs))
    assert np.allclose(g.matrix, np.eye(4), atol=1e-12)


def test_log_of_minus_identity_fails():
    sl2 = builtin("sl", 2)
    try:
        group_log(-np.eye(2), sl2)
        assert False, "expected LogDomainError"
    except LogDomainError:
        pass


def test_adjoint_is_a_homomorphism():
    rng = make_rng(2)
    g = expm(SO13.matrix(SO13.random_coeffs(rng)))
    h = expm(SO13.matrix(SO13.random_coeffs(rng)))
    assert np.allclose(adjoint_matrix(SO13, g @ h), adjoint_matrix(SO13, g) @ adjoint_matrix(SO13, h))
    a = SO13.element(rng.normal(size=6))
    assert np.allclose(adjoint_action(g, a).coeffs, adjoint_matrix(SO13, g) @ a.coeffs)


def test_adjoint_of_exp_is_exp_of_ad():
    a = np.array([0.2, -0.1, 0.4, 0.3, 0.0, -0.5])
    assert np.allclose(adjoint_matrix(SO13, expm(SO13.matrix(a))), expm(SO13.ad_matrix(a)))


def test_coadjoint_action_identity_and_composition():
    rng = make_rng(3)
    eta = Covector(np.array([1.0, 0, 0, 0, 0, 0]))
    assert np.allclose(coadjoint_action(np.eye(4), eta, SO13).coeffs, eta.coeffs)
    g = expm(SO13.matrix(SO13.random_coeffs(rng)))
    h = expm(SO13.matrix(SO13.random_coeffs(rng)))
    left = coadjoint_action(g @ h, eta, SO13).coeffs
    right = coadjoint_action(g, coadjoint_action(h, eta, SO13), SO13).coeffs
    assert np.allclose(left, right)


def test_coords_rejects_matrices_outside_the_algebra():
    try:
        SO13.coords(np.eye(4))
        assert False, "expected ClosureError"
    except ClosureError:
        pass


def test_jacobi_detects_wrong_sign():
    assert jacobi_residual(SO13.structure) < 1e-12
    mutated = np.array(SO13.structure)
    mutated[0, 1, 5] *= -1.0
    mutated[1, 0, 5] *= -1.0
    assert jacobi_residual(mutated) > 1.0


def test_catalog():
    rows = describe_catalog()
    assert [r["name"] for r in rows][:2] == ["so(1,2)", "so(1,3)"]
    so13 = next(r for r in rows if r["name"] == "so(1,3)")
    assert so13["d"] == 6 and so13["killing_signature"] == [3, 3, 0]
    assert builtin("so(1,3)").d == 6
    assert builtin("sp", 4).d == 10
    for entry in CATALOG:
        assert jacobi_residual(builtin(*entry).structure) < 1e-9


def test_unknown_algebra():
    for args in (("so", 5, 5), ("su", 2), ("sl", 7)):
        try:
            builtin(*args)
            assert False, f"expected UnknownAlgebra for {args}"
        except UnknownAlgebra:
            pass


def test_load_algebra_file():
    text = """# sl(2): H, E, F
2 3
1 0
0 -1

0 1
0 0

0 0
1 0
"""
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "sl2.txt")
        with open(path, "w") as f:
            f.write(text)
        alg = load_algebra_file(path, name="user-sl2")
        assert alg.d == 3 and alg.n == 2
        assert np.allclose(alg.killing, builtin("sl", 2).killing)

        bad = os.path.join(tmp, "bad.txt")
        with open(bad, "w") as f:
            f.write("2 3\n1 0\n0 -1\n")
        try:
            load_algebra_file(bad)
            assert False, "expected ConfigError"
        except ConfigError:
            pass


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"{name} passed")
