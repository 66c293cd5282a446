from itertools import combinations

import numpy as np
import pytest
from sympy.combinatorics.fp_groups import FpGroup
from sympy.combinatorics.free_groups import free_group

from hyprigid.corpus import (
    HEXAGON_NORMALS, SCHREIER_WORDS, genus2_amalgam, genus2_generators, genus2_presentation,
    genus2_representation,
)
from hyprigid.group_cohomology import evaluate_word
from hyprigid.minkowski_lie import minkowski, to_rational

J = np.diag([-1, 1, 1])


def test_hexagon_is_right_angled_and_compact():
    v = HEXAGON_NORMALS
    for i in range(6):
        assert minkowski(v[i], v[(i + 1) % 6]) == 0
        assert minkowski(v[i], v[i]) > 0
    for i, j in combinations(range(6), 2):
        if (j - i) % 6 in (1, 5):
            continue
        # non-adjacent sides are ultraparallel
        assert minkowski(v[i], v[j]) ** 2 > minkowski(v[i], v[i]) * minkowski(v[j], v[j])


def test_generators_are_orientation_preserving_isometries():
    Jr = to_rational(J)
    for g in genus2_generators():
        assert all(x == 0 for x in (g.T @ Jr @ g - Jr).ravel())
        det = g[0, 0] * (g[1, 1] * g[2, 2] - g[1, 2] * g[2, 1]) - g[0, 1] * (g[1, 0] * g[2, 2] - g[1, 2] * g[2, 0]) \
            + g[0, 2] * (g[1, 0] * g[2, 1] - g[1, 1] * g[2, 0])
        assert det == 1 and g[0, 0] >= 1


def test_relator_is_identity_exactly():
    rho = genus2_representation(2)
    g = evaluate_word(rho, genus2_presentation().relators[0])
    assert all(x == y for x, y in zip(g.ravel(), to_rational(np.eye(3, dtype=int)).ravel()))
    assert rho.relator_residuals == [0.0]


def test_subgroup_has_index_four_by_coset_enumeration():
    F, *r = free_group("r1 r2 r3 r4 r5 r6")
    rels = [x ** 2 for x in r] + [(r[i] * r[(i + 1) % 6]) ** 2 for i in range(6)]
    G = FpGroup(F, rels)

    def word(w):
        out = F.identity
        for a in w:
            out = out * r[a - 1]
        return out

    table = G.coset_enumeration([word(w) for w in SCHREIER_WORDS])
    table.compress()
    assert len(table.table) == 4


def test_schreier_words_lie_in_parity_kernel():
    for w in SCHREIER_WORDS:
        assert sum(a % 2 for a in w) % 2 == 0
        assert sum(1 - a % 2 for a in w) % 2 == 0


@pytest.mark.parametrize("n", [3, 4])
def test_embedding_fixes_trailing_axes(n):
    rho = genus2_representation(n)
    for g in rho.matrices:
        assert all(x == y for x, y in zip(g[3:, 3:].ravel(), to_rational(np.eye(n - 2, dtype=int)).ravel()))
        assert all(x == 0 for x in g[:3, 3:].ravel())


def test_amalgam_bend_direction_commutes_with_boundary():
    d = genus2_amalgam()
    gc = evaluate_word(d["representation"], d["C"][0])
    X = d["X"]
    assert all(v == 0 for v in (gc @ X - X @ gc).ravel())
    assert any(v != 0 for v in X.ravel())
