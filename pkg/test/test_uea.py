"""Enveloping algebra, Casimir, root data, projection into U(h), infinitesimal character."""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from scipy.linalg import expm

from src.catalog import CATALOG, builtin
from src.errors import SingularKilling
from src.liealg import MatrixLieAlgebra
from src.orbit import build_orbit, make_datum
from src.roots import (
    centrality_residual,
    hc_project,
    infchar_at_point,
    infinitesimal_character,
    root_decomposition,
)
from src.uea import (
    casimir,
    from_terms,
    letter,
    pbw_normal_form,
    random_element,
    standard_basis,
    symmetrize,
    symmetric_symbol,
    uea_bracket,
    uea_multiply,
    unit,
)
from src.utils import make_rng

SO13 = builtin("so", 1, 3)
SL2 = builtin("sl", 2)


def assert_terms(x, expected, tol=1e-12):
    assert set(x.terms) == set(expected), x.terms
    for word, value in expected.items():
        assert abs(x.terms[word] - value) < tol


def so13_orbit(k=1.0):
    return build_orbit(SO13, k * np.eye(6)[0])


def sl2_orbit():
    datum = make_datum(SL2, 1, [{"rep": (-np.eye(2)).tolist(), "value": [-1.0, 0.0]}])
    return build_orbit(SL2, [1.0, 0.0, 0.0], datum)


def test_multiply_concatenates_words():
    basis = standard_basis(SO13)
    x = letter(basis, 0) + 2.0 * letter(basis, 3)
    y = letter(basis, 1)
    assert uea_multiply(x, y).terms == {(0, 1): 1.0, (3, 1): 2.0}
    assert uea_multiply(unit(basis), y).terms == y.terms


def test_normal_form_of_single_inversion():
    basis = standard_basis(SO13)
    word = uea_multiply(letter(basis, 1), letter(basis, 0))
    normal = pbw_normal_form(word)
    assert_terms(normal, {(0, 1): 1.0, (5,): -1.0})
    assert normal.is_normal()


def test_normal_form_confluence():
    basis = standard_basis(SO13)
    rng = make_rng(0)
    for _ in range(50):
        x = random_element(basis, rng)
        left = pbw_normal_form(x, "leftmost")
        other = pbw_normal_form(x, "random", rng)
        assert left.distance(other) < 1e-9
        assert left.is_normal()
        assert pbw_normal_form(left).distance(left) == 0.0


def test_bracket_of_letters_is_lie_bracket():
    basis = standard_basis(SO13)
    b = uea_bracket(letter(basis, 0), letter(basis, 1))
    assert_terms(b, {(5,): 1.0})


def test_casimir_so13():
    c = casimir(SO13)
    expected = {(i, i): 0.25 * s for i, s in enumerate([1, 1, 1, -1, -1, -1])}
    assert set(c.terms) == set(expected)
    for w, v in expected.items():
        assert abs(c.terms[w] - v) < 1e-12
    unit_c = casimir(SO13, "unit")
    assert abs(unit_c.terms[(0, 0)] - 1.0) < 1e-12
    assert abs(unit_c.terms[(3, 3)] + 1.0) < 1e-12


def test_casimir_is_central_on_catalog():
    for entry in CATALOG:
        alg = builtin(*entry)
        assert centrality_residual(casimir(alg)) < 1e-8, alg.name


def test_casimir_needs_nondegenerate_killing():
    solvable = MatrixLieAlgebra("b(2)", [np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [0.0, 0.0]])])
    try:
        casimir(solvable)
        assert False, "expected SingularKilling"
    except SingularKilling:
        pass


def test_symmetric_symbol_inverts_symmetrization():
    basis = standard_basis(SO13)
    x = from_terms(basis, [["X1 X2", 1.0, 0.0], ["X4", 0.0, 2.0]])
    symbol = symmetric_symbol(symmetrize(x))
    assert abs(symbol[(0, 1)] - 1.0) < 1e-12
    assert abs(symbol[(3,)] - 2.0j) < 1e-12
    assert from_terms(basis, x.to_terms()).distance(x) == 0.0


def test_root_decomposition_so13():
    orbit = so13_orbit()
    roots = root_decomposition(orbit)
    assert roots.cartan_labels == ("X1", "X4")
    assert roots.rank == 2
    assert len(roots.roots) == 4
    assert roots.relation_residual() < 1e-9
    assert roots.basis.blocks == (2, 2, 2)


def test_hc_projection_of_casimir_so13():
    roots = root_decomposition(so13_orbit())
    q = hc_project(casimir(SO13), roots)
    assert q.central
    assert abs(q.coefficient((2, 0)) - 0.25) < 1e-9
    assert abs(q.coefficient((0, 2)) + 0.25) < 1e-9
    assert len(q.coefficients) == 2

    pbw = hc_project(casimir(SO13), roots, "pbw")
    assert abs(pbw.coefficient((2, 0)) - 0.25) < 1e-9
    assert abs(pbw.coefficient((0, 2)) + 0.25) < 1e-9
    assert abs(pbw.coefficient((1, 0)) - 0.5) < 1e-9


def test_hc_projection_of_casimir_sl2():
    roots = root_decomposition(sl2_orbit())
    sym = hc_project(casimir(SL2), roots)
    assert abs(sym.coefficient((2,)) - 0.125) < 1e-9
    assert abs(sym.coefficient((1,))) < 1e-9
    pbw = hc_project(casimir(SL2), roots, "pbw")
    assert abs(pbw.coefficient((2,)) - 0.125) < 1e-9
    assert abs(pbw.coefficient((1,)) - 0.25) < 1e-9


def test_infinitesimal_character_of_casimir():
    for k in (1.0, 2.5):
        orbit = so13_orbit(k)
        chi = infinitesimal_character(casimir(SO13), orbit, root_decomposition(orbit))
        assert abs(chi - 0.25 * complex(2.0, k) ** 2) < 1e-9
    orbit = so13_orbit()
    chi = infinitesimal_character(casimir(SO13), orbit, root_decomposition(orbit))
    assert abs(chi - complex(0.75, 1.0)) < 1e-9


def test_infinitesimal_character_of_unit():
    orbit = so13_orbit()
    one = unit(standard_basis(SO13))
    assert abs(infinitesimal_character(one, orbit, root_decomposition(orbit)) - 1.0) < 1e-12


def test_character_is_multiplicative_with_pbw_projection():
    for orbit in (so13_orbit(1.0), so13_orbit(2.5), sl2_orbit()):
        roots = root_decomposition(orbit)
        c = casimir(orbit.algebra)
        chi_c = infinitesimal_character(c, orbit, roots, "pbw")
        chi_cc = infinitesimal_character(uea_multiply(c, c), orbit, roots, "pbw")
        assert abs(chi_cc - chi_c**2) < 1e-7


def test_noncentral_element_is_flagged():
    roots = root_decomposition(so13_orbit())
    q = hc_project(letter(standard_basis(SO13), 1), roots)
    assert not q.central


def test_infchar_is_constant_over_base_points():
    orbit = so13_orbit()
    roots = root_decomposition(orbit)
    c = casimir(SO13)
    base = infinitesimal_character(c, orbit, roots)
    rng = make_rng(1)
    for _ in range(10):
        g = expm(SO13.matrix(SO13.random_coeffs(rng)))
        assert abs(infchar_at_point(c, orbit, g, roots) - base) < 1e-6


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"{name} passed")
