"""Exact instances shipped with the package.

Genus-2 surface group
---------------------
The reflection group of a right-angled hexagon with integer Minkowski normals
maps onto (Z/2)^2 by sending odd sides to (1,0) and even sides to (0,1). The
kernel is torsion free of index 4, hence a closed genus-2 surface group. A
Reidemeister-Schreier presentation followed by Tietze eliminations leaves four
generators, written here as words in the side reflections, with one relator.
With a1 = x1^-1, b1 = x2, a2 = x2 x3 x2^-1, b2 = (x2 x4)^-1 the relator is
[a1, b1][a2, b2]. All matrices are rational because the side normals are
integral.
"""

from __future__ import annotations

import numpy as np

from .group_cohomology import Presentation, Representation, evaluate_word
from .minkowski_lie import isometry_inverse, reflection, to_rational

__all__ = [
    "HEXAGON_NORMALS", "SCHREIER_WORDS", "hexagon_reflections", "genus2_generators",
    "genus2_presentation", "genus2_representation", "genus2_amalgam", "free_group_representation",
    "embed",
]


def _lorentz_cross(a, b):
    c = np.cross(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
    c[0] = -c[0]
    return c


def _hexagon_normals():
    v = {1: to_rational([3, 4, 0]), 3: to_rational([15, -12, 16]), 5: to_rational([15, -12, -16])}
    v[2] = _lorentz_cross(v[1], v[3])
    v[4] = _lorentz_cross(v[3], v[5])
    v[6] = _lorentz_cross(v[5], v[1])
    return [v[i] for i in range(1, 7)]


HEXAGON_NORMALS = _hexagon_normals()

# reflection words (1-based side indices) of the four surviving Schreier generators
SCHREIER_WORDS = ([1, 3], [1, 4, 2, 1], [2, 5, 2, 1], [2, 6])


def hexagon_reflections():
    return [reflection(v) for v in HEXAGON_NORMALS]


def _word(refl, word):
    g = to_rational(np.eye(3, dtype=int))
    for a in word:
        g = g @ refl[a - 1]
    return g


def genus2_generators():
    """Exact SO(1,2) matrices ``(a1, b1, a2, b2)``."""
    refl = hexagon_reflections()
    x1, x2, x3, x4 = (_word(refl, w) for w in SCHREIER_WORDS)
    inv = isometry_inverse
    return inv(x1), x2, x2 @ x3 @ inv(x2), inv(x2 @ x4)


def genus2_presentation() -> Presentation:
    return Presentation(("a1", "b1", "a2", "b2"), [(1, 2, -1, -2, 3, 4, -3, -4)])


def embed(g, n: int):
    """Block-embed an SO(1,k) matrix into SO(1,n) fixing the trailing axes."""
    k = g.shape[0]
    out = to_rational(np.eye(n + 1, dtype=int))
    out[:k, :k] = g
    return out


def genus2_representation(n: int = 2) -> Representation:
    """Fuchsian genus-2 representation into SO(1,n), n >= 2, preserving H^2."""
    mats = [embed(g, n) for g in genus2_generators()]
    return Representation(genus2_presentation(), mats, n)


def genus2_amalgam():
    """Bending data in so(1,3): sides A = {a1, b1}, B = {a2, b2}, C = [a1, b1].

    X rotates about the axis of rho(C): it acts in the plane spanned by the
    spacelike fixed vector of rho(C) in R^{1,2} and the normal axis e_3.
    """
    rho = genus2_representation(3)
    c_word = (1, 2, -1, -2)
    gc = evaluate_word(rho, c_word)
    from .group_cohomology import exact_nullspace
    sub = gc[:3, :3] - to_rational(np.eye(3, dtype=int))
    w = exact_nullspace(sub)[0]
    fixed = to_rational(np.zeros(4, dtype=int))
    fixed[:3] = w
    e3 = to_rational([0, 0, 0, 1])
    J = to_rational(np.diag([-1, 1, 1, 1]))
    X = (np.outer(fixed, e3) - np.outer(e3, fixed)) @ J
    return {"representation": rho, "A": (1, 2), "B": (3, 4), "C": (c_word,), "X": X}


def free_group_representation(n: int = 4, seed: int = 7, reflections: int = 4) -> Representation:
    """Two random rational isometries generating a free-group image in SO(1,n)."""
    from .minkowski_lie import random_rational_isometry
    rng = np.random.default_rng(seed)
    a = random_rational_isometry(n, rng, reflections).mat
    b = random_rational_isometry(n, rng, reflections).mat
    return Representation(Presentation(("a", "b"), []), [a, b], n)
