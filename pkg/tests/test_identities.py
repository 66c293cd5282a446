import json

import numpy as np
import pytest
import sympy as sp

from hyprigid import bundle_calculus as bc
from hyprigid import identities as ids


def test_weil_spectrum_matches_sympy_characteristic_polynomial(golden):
    H, _, _ = bc.operator_matrix(bc.curvature_H, 4, 1, "W", "rational")
    x = sp.symbols("x")
    factors = sp.factor_list(sp.Matrix(H.tolist()).charpoly(x).as_expr())[1]
    roots = {str(sp.solve(f, x)[0]): int(k) for f, k in factors}
    certified = ids.weil_spectrum(4)
    assert certified["certified"]
    assert certified["eigenvalues"] == roots
    assert min(sp.Rational(r) for r in roots) == 1
    golden("weil_spectrum_n4.json", json.dumps({"eigenvalues": roots, "minimum": certified["minimum"],
                                                 "provenance": "DERIVED"}, sort_keys=True, indent=2) + "\n")


def test_certified_spectrum_rejects_irrational_eigenvalues():
    M = np.array([[2, 1], [1, 1]], dtype=object)      # eigenvalues (3 +- sqrt 5) / 2
    assert not ids.certified_spectrum(M)["certified"]
    D = np.array([[3, 0], [0, 3]], dtype=object)
    assert ids.certified_spectrum(D) == {"certified": True, "eigenvalues": {"3": 2}, "minimum": "3",
                                         "float_minimum": 3.0}


@pytest.mark.parametrize("m", [2, 3, 4])
def test_s_form_table(m):
    t = ids.s_form_eigen_table(m)
    s = t["subspaces"]
    assert s["N_part"]["TstarT"] == str(m - 1) and s["N_part"]["TTstar"] == "1"
    assert s["skew"]["multiplicity"] == m * (m - 1) // 2
    assert s["traceless_symmetric"]["multiplicity"] == m * (m + 1) // 2 - 1
    assert t["span_rank"] == t["s_dimension"] == m * (m + 1)


def test_float_backend_residuals_small():
    res = ids.algebra_suite(4, count=50, backend="float")
    assert max(res.values()) < 1e-12
    assert ids.metric_invariance(4, 30) < 1e-10


def test_identity_suite_verdicts():
    rep = ids.run_identity_suite(3, "rational", count=20)
    assert rep["pass"]
    assert rep["checks"]["H_kernel_traceless_symmetric"]["value"]["dimension"] == 2
    rep = ids.run_identity_suite(3, "float", count=20)
    assert rep["pass"] and "cross_terms" in rep["checks"] and "metric_invariance" in rep["checks"]
