from __future__ import annotations

from itertools import combinations, product

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import smith_normal_form

from morseflow.errors import InputError, PreconditionError, UnsupportedError
from morseflow.finspace import (
    FiniteSpace,
    SimplicialComplex,
    builtin_finite_spaces,
    discrete,
    homology,
    invariant_factors,
    is_acyclic,
    mccord_cover_check,
    minimal_sphere_model,
    nh_suspension,
    order_complex,
    orbit_space_finite_model,
    separation_report,
    smith_diagonal,
)


# -- oracles ---------------------------------------------------------------


def chains_bruteforce(X: FiniteSpace) -> list[int]:
    """f-vector by testing every subset for total order."""
    counts = []
    for r in range(1, len(X) + 1):
        c = sum(
            1
            for sub in combinations(range(len(X)), r)
            if all(X.order[i, j] or X.order[j, i] for i, j in combinations(sub, 2))
        )
        if c == 0:
            break
        counts.append(c)
    return counts


def homology_oracle(K: SimplicialComplex):
    """Betti numbers from exact rational ranks, torsion from sympy's SNF."""
    f = K.f_vector()
    ranks = [0] * (len(f) + 1)
    tors = [[] for _ in range(len(f) + 1)]
    for d in range(1, len(f)):
        B = sympy.Matrix(K.boundary(d).tolist())
        ranks[d] = B.rank()
        if B.rows and B.cols:
            D = smith_normal_form(B, domain=sympy.ZZ)
            diag = [abs(int(D[i, i])) for i in range(min(D.shape))]
            tors[d] = sorted(v for v in diag if v > 1)
    betti = [f[i] - ranks[i] - ranks[i + 1] for i in range(len(f))]
    return betti, [tors[i + 1] for i in range(len(f))]


@st.composite
def posets(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    pts = tuple(f"v{i}" for i in range(n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    rel = frozenset((pts[i], pts[j]) for (i, j), keep in zip(pairs, mask) if keep)
    return FiniteSpace(pts, rel)


# -- construction ----------------------------------------------------------


def test_suspension_of_s0_is_four_cycle():
    X = nh_suspension(discrete(("p", "q")))
    assert len(X) == 4 and X.is_t0
    K = order_complex(X)
    assert K.f_vector() == (4, 4)
    assert sorted(K.facets()) == [(0, 2), (0, 3), (1, 2), (1, 3)]
    assert X.minimal_open("a") == frozenset({"p", "q", "a"})


def test_suspension_of_empty_space_rejected():
    with pytest.raises(PreconditionError):
        nh_suspension(discrete(()))


def test_suspension_label_clash():
    with pytest.raises(InputError):
        nh_suspension(discrete(("p", "q")), ("p", "z"))


def test_suspension_keeps_original_opens():
    X = minimal_sphere_model(2)
    Y = nh_suspension(X)
    for x in X.points:
        assert Y.minimal_open(x) == X.minimal_open(x)


@pytest.mark.parametrize("n", range(6))
def test_minimal_sphere_point_count(n):
    assert len(minimal_sphere_model(n)) == 2 * n + 2


def test_small_models():
    X0 = minimal_sphere_model(0)
    assert X0.leq == frozenset()
    assert order_complex(X0).f_vector() == (2,)
    assert order_complex(discrete(("x",))).f_vector() == (1,)
    assert order_complex(minimal_sphere_model(2)).f_vector() == (6, 12, 8)


def test_non_t0_rejected():
    with pytest.raises(PreconditionError):
        FiniteSpace(("x", "y"), frozenset({("x", "y"), ("y", "x")}))
    with pytest.raises(InputError):
        FiniteSpace(("x",), frozenset({("x", "z")}))


# -- homology --------------------------------------------------------------


def test_homology_examples():
    assert homology(order_complex(minimal_sphere_model(1))).groups() == ["Z", "Z"]
    assert homology(order_complex(minimal_sphere_model(0))).groups() == ["Z^2"]
    octa = homology(order_complex(minimal_sphere_model(2)))
    assert octa.groups() == ["Z", "0", "Z"]
    assert homology(order_complex(minimal_sphere_model(3))).groups() == ["Z", "0", "0", "Z"]


@pytest.mark.parametrize("n", range(1, 6))
def test_sphere_model_homology(n):
    prof = homology(order_complex(minimal_sphere_model(n)))
    assert prof.padded(n + 1) == tuple((1 if i in (0, n) else 0, ()) for i in range(n + 1))


def test_projective_plane_torsion():
    # six-vertex triangulation of RP^2
    facets = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1), (1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3)]
    K = SimplicialComplex.from_facets([str(i) for i in range(6)], facets)
    prof = homology(K)
    assert prof.groups() == ["Z", "Z/2", "0"]
    assert homology_oracle(K) == ([1, 0, 0], [[], [2], []])


def test_invariant_factors_normalisation():
    assert invariant_factors([4, 6]) == [2, 12]
    assert invariant_factors([0, 3, 1, 0]) == [1, 3]
    assert smith_diagonal(np.array([[2, 0], [0, 3]])) == [1, 6]
    D = smith_normal_form(sympy.Matrix([[6, 4], [2, 8]]), domain=sympy.ZZ)
    assert smith_diagonal(np.array([[6, 4], [2, 8]])) == sorted(abs(int(D[i, i])) for i in range(2))


def test_complex_text_round_trip():
    K = order_complex(minimal_sphere_model(2))
    K2 = SimplicialComplex.from_text(K.to_text())
    assert K2.f_vector() == K.f_vector()
    assert homology(K2) == homology(K)


@settings(max_examples=60, deadline=None)
@given(posets())
def test_order_complex_matches_chain_enumeration(X):
    assert list(order_complex(X).f_vector()) == chains_bruteforce(X)


@settings(max_examples=60, deadline=None)
@given(posets())
def test_boundary_squares_to_zero(X):
    K = order_complex(X)
    for d in range(2, K.dim + 1):
        assert not np.any(K.boundary(d - 1) @ K.boundary(d))


@settings(max_examples=60, deadline=None)
@given(posets())
def test_homology_matches_oracle_and_euler(X):
    K = order_complex(X)
    prof = homology(K)
    betti, tors = homology_oracle(K)
    assert list(prof.betti) == betti
    assert [list(t) for t in prof.torsion] == tors
    assert all(b >= 0 for b in prof.betti)
    assert sum((-1) ** i * b for i, b in enumerate(prof.betti)) == K.euler_characteristic() == prof.euler


@settings(max_examples=40, deadline=None)
@given(posets(max_n=6))
def test_suspension_shifts_reduced_homology(X):
    h = homology(order_complex(X)).reduced()
    hs = homology(order_complex(nh_suspension(X))).reduced()
    n = len(h.betti) + 1
    assert hs.padded(n + 1)[1:] == h.padded(n)
    assert hs.padded(1)[0] == (0, ())
    assert nh_suspension(X).is_t0


@settings(max_examples=40, deadline=None)
@given(posets())
def test_json_round_trip(X):
    assert FiniteSpace.from_json(X.to_json()) == X


def test_suspension_isomorphism_on_builtins():
    spaces = builtin_finite_spaces(12)
    assert {"X0", "X5", "hyperbolic:1:2"} <= set(spaces)
    for X in spaces.values():
        if len(X) + 2 > 14:
            continue
        h = homology(order_complex(X)).reduced()
        hs = homology(order_complex(nh_suspension(X))).reduced()
        n = len(h.betti) + 1
        assert hs.padded(n + 1)[1:] == h.padded(n)


# -- separation and covers -------------------------------------------------


def test_separation_examples():
    rep = separation_report(minimal_sphere_model(1))
    assert rep.t0 and not rep.t1 and ("a", "b") in rep.inseparable_pairs
    rep = separation_report(discrete(("p", "q")))
    assert rep.t0 and rep.t1 and rep.inseparable_pairs == ()


def test_inseparable_pairs_bruteforce():
    # oracle: enumerate all open sets (down-sets) and look for disjoint neighbourhoods
    X = orbit_space_finite_model("hyperbolic:1:2")
    n = len(X)
    opens = []
    for bits in product([False, True], repeat=n):
        S = {i for i in range(n) if bits[i]}
        if all(j in S for i in S for j in range(n) if X.order[j, i]):
            opens.append(S)
    expected = set()
    for i, j in combinations(range(n), 2):
        if not any(i in U and j in V and not (U & V) for U in opens for V in opens):
            expected.add((X.points[i], X.points[j]))
    assert set(separation_report(X).inseparable_pairs) == expected


@pytest.mark.parametrize("mid", ["sphere_longitudinal:1", "sphere_longitudinal:3", "hyperbolic:1:2", "hyperbolic:0:2", "hyperbolic:2:3"])
def test_models_with_critical_class_not_t1(mid):
    X = orbit_space_finite_model(mid)
    assert "critical" in X.annotations
    rep = separation_report(X)
    assert rep.t0 and not rep.t1
    assert mccord_cover_check(X).passed


def test_parallel_model_is_t1():
    rep = separation_report(orbit_space_finite_model("parallel"))
    assert rep.t1


def test_mccord_examples():
    rep = mccord_cover_check(minimal_sphere_model(1))
    assert rep.condition_a and all(rep.acyclic.values()) and len(rep.acyclic) == 4
    assert mccord_cover_check(discrete(("p", "q"))).passed


@settings(max_examples=40, deadline=None)
@given(posets())
def test_mccord_passes_on_every_poset(X):
    assert mccord_cover_check(X).passed


# -- orbit-space models ----------------------------------------------------


def test_sphere_orbit_models():
    X1 = orbit_space_finite_model("sphere_longitudinal:1")
    assert len(X1) == 4 and set(X1.maximal_points()) == {"S", "N"}
    assert X1.annotation("N") == "critical"
    X2 = orbit_space_finite_model("sphere_longitudinal:2")
    assert len(X2) == 6
    assert order_complex(X2).f_vector() == order_complex(minimal_sphere_model(2)).f_vector()


def sign_class_oracle():
    """Classes of the planar saddle in the unit bidisk from sign patterns.

    Two points are related iff one flows to the other, which for x' = -x,
    y' = y preserves sign(x), sign(y) and the product |x||y|; collapsing
    parallel families leaves one class per sign pattern.  x <= y in the
    specialization order iff y's sign pattern is a coordinatewise limit of x's.
    """
    patterns = list(product((-1, 0, 1), repeat=2))
    rel = {(a, b) for a in patterns for b in patterns if a != b and all(bi in (ai, 0) for ai, bi in zip(a, b))}
    return patterns, rel


def test_hyperbolic_model_matches_sign_classes():
    X = orbit_space_finite_model("hyperbolic:1:2")
    patterns, rel = sign_class_oracle()
    assert len(X) == len(patterns) == 9
    # compare order relations up to relabelling by counting comparabilities per level
    deg = sorted(int(X.order[:, j].sum()) for j in range(9))
    deg_oracle = sorted(1 + sum(1 for a in patterns if (a, b) in rel) for b in patterns)
    assert deg == deg_oracle
    assert len(X.leq) == len(rel)
    assert is_acyclic(homology(order_complex(X)))
    assert [X.annotation(p) for p in X.points].count("critical") == 1


def test_unsupported_model():
    with pytest.raises(UnsupportedError):
        orbit_space_finite_model("quadratic")
