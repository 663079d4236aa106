"""Built-in matrix Lie algebras with documented basis orders."""

import re
from itertools import combinations
from typing import Dict, List, Tuple

import numpy as np

from .errors import UnknownAlgebra
from .liealg import MatrixLieAlgebra

# semisimple members exercised by `verify` and listed by `catalog`
CATALOG: List[Tuple] = [
    ("so", 1, 2),
    ("so", 1, 3),
    ("so", 2, 2),
    ("so", 3, 0),
    ("so", 4, 0),
    ("sl", 2),
    ("sl", 3),
    ("sp", 2),
    ("sp", 4),
]


def _unit(n: int, a: int, b: int) -> np.ndarray:
    e = np.zeros((n, n))
    e[a, b] = 1.0
    return e


def _so(p: int, q: int) -> MatrixLieAlgebra:
    """
    so(p,q) preserving diag(-1 x p, +1 x q).

    Generators G_ab = E_ab - eps_a eps_b E_ba. Boosts (mixed-sign pairs) come
    first in lexicographic order, then rotations (same-sign pairs) in reverse
    lexicographic order. For so(1,3) this gives X1..X3 boosts and
    X4 = E23 - E32, X5 = E13 - E31, X6 = E12 - E21.
    """
    n = p + q
    eps = np.array([-1.0] * p + [1.0] * q)
    pairs = list(combinations(range(n), 2))
    boosts = [(a, b) for a, b in pairs if eps[a] * eps[b] < 0]
    rotations = [(a, b) for a, b in reversed(pairs) if eps[a] * eps[b] > 0]
    basis = [_unit(n, a, b) - eps[a] * eps[b] * _unit(n, b, a) for a, b in boosts + rotations]
    return MatrixLieAlgebra(f"so({p},{q})", basis, group_tag="so", group_metric=np.diag(eps))


def _sl(n: int) -> MatrixLieAlgebra:
    """H_i = E_ii - E_{i+1,i+1}, then E_ij (i<j), then E_ji."""
    basis, labels = [], []
    for i in range(n - 1):
        basis.append(_unit(n, i, i) - _unit(n, i + 1, i + 1))
        labels.append("H" if n == 2 else f"H{i + 1}")
    upper = list(combinations(range(n), 2))
    for i, j in upper:
        basis.append(_unit(n, i, j))
        labels.append("E" if n == 2 else f"E{i + 1}{j + 1}")
    for i, j in upper:
        basis.append(_unit(n, j, i))
        labels.append("F" if n == 2 else f"F{i + 1}{j + 1}")
    return MatrixLieAlgebra(f"sl({n})", basis, labels=labels, group_tag="sl")


def _sp(two_n: int) -> MatrixLieAlgebra:
    """[[A,0],[0,-A^T]] (A = E_ij row-major), then [[0,S],[0,0]], then [[0,0],[S,0]]."""
    n = two_n // 2
    omega = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    zero = np.zeros((n, n))
    basis = []
    for i in range(n):
        for j in range(n):
            a = _unit(n, i, j)
            basis.append(np.block([[a, zero], [zero, -a.T]]))
    sym = []
    for i in range(n):
        for j in range(i, n):
            s = _unit(n, i, j) + _unit(n, j, i)
            sym.append(s if i != j else _unit(n, i, i))
    basis += [np.block([[zero, s], [zero, zero]]) for s in sym]
    basis += [np.block([[zero, zero], [s, zero]]) for s in sym]
    return MatrixLieAlgebra(f"sp({two_n})", basis, group_tag="sp", group_metric=omega)


def builtin(name: str, *params: int) -> MatrixLieAlgebra:
    """
    Construct a catalog algebra.

    Args:
        name: "so", "sl" or "sp" (or a full spelling such as "so(1,3)")
        params: (p, q) for so with p+q <= 4; n <= 3 for sl; 2n <= 4 for sp

    Returns:
        The algebra with its documented basis order
    """
    if not params:
        name, params = parse_algebra_name(name)
    try:
        params = tuple(int(p) for p in params)
    except (TypeError, ValueError):
        raise UnknownAlgebra(f"non-integer parameters for {name}: {params!r}")
    if name == "so" and len(params) == 2:
        p, q = params
        if p >= 0 and q >= 0 and 2 <= p + q <= 4:
            return _so(p, q)
    elif name == "sl" and len(params) == 1 and 2 <= params[0] <= 3:
        return _sl(params[0])
    elif name == "sp" and len(params) == 1 and params[0] in (2, 4):
        return _sp(params[0])
    raise UnknownAlgebra(f"no builtin algebra {name}{params}")


def parse_algebra_name(spelled: str) -> Tuple[str, Tuple[int, ...]]:
    match = re.fullmatch(r"\s*([a-z]+)\s*\(([\d\s,]+)\)\s*", spelled)
    if not match:
        raise UnknownAlgebra(f"cannot parse algebra name {spelled!r}")
    return match.group(1), tuple(int(p) for p in match.group(2).split(","))


def killing_signature(algebra: MatrixLieAlgebra, tol: float = 1e-9) -> Tuple[int, int, int]:
    """(positive, negative, zero) eigenvalue counts of the Killing form."""
    w = np.linalg.eigvalsh(algebra.killing)
    scale = max(1.0, float(np.max(np.abs(w))))
    return (
        int(np.sum(w > tol * scale)),
        int(np.sum(w < -tol * scale)),
        int(np.sum(np.abs(w) <= tol * scale)),
    )


def describe_catalog() -> List[Dict]:
    rows = []
    for entry in CATALOG:
        algebra = builtin(*entry)
        rows.append(
            {
                "name": algebra.name,
                "params": list(entry[1:]),
                "n": algebra.n,
                "d": algebra.d,
                "labels": list(algebra.labels),
                "killing_signature": list(killing_signature(algebra)),
                "killing_scale": algebra.killing_scale,
            }
        )
    return rows
