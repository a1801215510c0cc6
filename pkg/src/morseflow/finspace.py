"""Finite T0 spaces, order complexes and integral homology.

A finite T0 space is stored as its specialization poset: ``x <= y`` iff x
lies in the minimal open set U_y, so open sets are exactly the down-sets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import kernels
from .errors import InputError, PreconditionError, UnsupportedError

ANNOTATIONS = ("abstract", "critical", "regular")


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """Finite space given by a reflexive, transitive relation on labels.

    ``leq`` may be any generating set of pairs (x, y) meaning x <= y; the
    reflexive-transitive closure is taken.  T0 (antisymmetry) is enforced
    unless ``require_t0`` is False.
    """

    points: tuple[str, ...]
    leq: frozenset = frozenset()
    annotations: tuple[str, ...] | None = None
    require_t0: bool = True
    order: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = tuple(str(p) for p in self.points)
        if len(set(pts)) != len(pts):
            raise InputError("point labels must be distinct")
        object.__setattr__(self, "points", pts)
        ann = self.annotations or ("abstract",) * len(pts)
        if len(ann) != len(pts) or any(a not in ANNOTATIONS for a in ann):
            raise InputError(f"annotations must be one of {ANNOTATIONS} per point")
        object.__setattr__(self, "annotations", tuple(ann))
        idx = {p: i for i, p in enumerate(pts)}
        n = len(pts)
        rel = np.eye(n, dtype=bool)
        for x, y in self.leq:
            if x not in idx or y not in idx:
                raise InputError(f"relation ({x}, {y}) mentions an unknown point")
            rel[idx[x], idx[y]] = True
        for k in range(n):  # transitive closure
            rel |= rel[:, k : k + 1] & rel[k : k + 1, :]
        rel.setflags(write=False)
        object.__setattr__(self, "order", rel)
        object.__setattr__(self, "leq", frozenset((pts[i], pts[j]) for i, j in zip(*np.nonzero(rel)) if i != j))
        if self.require_t0 and not self.is_t0:
            raise PreconditionError("relation is not antisymmetric: space is not T0")

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteSpace):
            return NotImplemented
        return (
            self.points == other.points
            and self.leq == other.leq
            and self.annotations == other.annotations
        )

    def __hash__(self) -> int:
        return hash((self.points, self.leq, self.annotations))

    def index(self, label: str) -> int:
        return self.points.index(label)

    @property
    def is_t0(self) -> bool:
        sym = self.order & self.order.T
        return bool(np.array_equal(sym, np.eye(len(self), dtype=bool)))

    def minimal_open(self, label: str) -> frozenset[str]:
        """U_x: the down-set of x."""
        j = self.index(label)
        return frozenset(self.points[i] for i in np.nonzero(self.order[:, j])[0])

    def annotation(self, label: str) -> str:
        return self.annotations[self.index(label)]

    def less(self, x: str, y: str) -> bool:
        return x != y and bool(self.order[self.index(x), self.index(y)])

    def maximal_points(self) -> list[str]:
        n = len(self)
        return [self.points[j] for j in range(n) if not any(self.order[j, i] and i != j for i in range(n))]

    def subspace(self, labels) -> "FiniteSpace":
        keep = [p for p in self.points if p in set(labels)]
        rel = [(x, y) for x, y in self.leq if x in keep and y in keep]
        ann = tuple(self.annotation(p) for p in keep)
        return FiniteSpace(tuple(keep), frozenset(rel), ann, self.require_t0)

    def to_dict(self) -> dict:
        return {
            "points": [{"id": p, "annotation": a} for p, a in zip(self.points, self.annotations)],
            "leq": sorted([x, y] for x, y in self.leq),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteSpace":
        try:
            pts = tuple(str(p["id"]) for p in data["points"])
            ann = tuple(p.get("annotation", "abstract") for p in data["points"])
            leq = frozenset((str(x), str(y)) for x, y in data.get("leq", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed finite space document: {exc}") from None
        return cls(pts, leq, ann)

    @classmethod
    def from_json(cls, text: str) -> "FiniteSpace":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


def discrete(labels) -> FiniteSpace:
    return FiniteSpace(tuple(labels))


def _fresh_pair(existing: set[str]) -> tuple[str, str]:
    i = 1
    while True:
        a, b = ("a", "b") if i == 1 else (f"a{i}", f"b{i}")
        if a not in existing and b not in existing:
            return a, b
        i += 1


def nh_suspension(X: FiniteSpace, labels: tuple[str, str] | None = None, annotation: str = "abstract") -> FiniteSpace:
    """Non-Hausdorff suspension: X plus two incomparable points above all of X.

    The new points have minimal open sets X + {a} and X + {b}.
    """
    if len(X) == 0:
        raise PreconditionError("suspension of the empty space is rejected (degenerate input)")
    if not X.is_t0:
        raise PreconditionError("input space is not T0")
    a, b = labels or _fresh_pair(set(X.points))
    if a == b or a in X.points or b in X.points:
        raise InputError("suspension labels must be two new distinct names")
    rel = set(X.leq)
    for x in X.points:
        rel.add((x, a))
        rel.add((x, b))
    return FiniteSpace(X.points + (a, b), frozenset(rel), X.annotations + (annotation, annotation))


def minimal_sphere_model(n: int) -> FiniteSpace:
    """X_n: n-fold suspension of the two-point discrete space (2n+2 points)."""
    if n < 0:
        raise InputError("n must be nonnegative")
    X = discrete(("p", "q"))
    for _ in range(n):
        X = nh_suspension(X)
    return X


# ---------------------------------------------------------------------------
# simplicial complexes and homology


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Abstract simplicial complex closed under faces.

    ``simplices[d]`` is a sorted list of vertex-index tuples of dimension d.
    """

    vertices: tuple[str, ...]
    simplices: tuple[tuple[tuple[int, ...], ...], ...]

    @classmethod
    def from_facets(cls, vertices, facets) -> "SimplicialComplex":
        faces: set[tuple[int, ...]] = set()
        for f in facets:
            f = tuple(sorted(f))
            for r in range(1, len(f) + 1):
                faces.update(combinations(f, r))
        top = max((len(f) for f in faces), default=0)
        by_dim = tuple(tuple(sorted(f for f in faces if len(f) == d + 1)) for d in range(top))
        return cls(tuple(vertices), by_dim)

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    def f_vector(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.simplices)

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * c for d, c in enumerate(self.f_vector()))

    def facets(self) -> list[tuple[int, ...]]:
        all_faces = [s for layer in self.simplices for s in layer]
        sets = [frozenset(s) for s in all_faces]
        out = []
        for s, fs in zip(all_faces, sets):
            if not any(fs < other for other in sets if len(other) == len(fs) + 1):
                out.append(s)
        return out

    def boundary(self, d: int) -> np.ndarray:
        """Integer matrix of the boundary map C_d -> C_{d-1}."""
        if d <= 0 or d > self.dim:
            rows = len(self.simplices[d - 1]) if 0 < d <= self.dim + 1 else 0
            cols = len(self.simplices[d]) if 0 <= d <= self.dim else 0
            return np.zeros((rows, cols), dtype=np.int64)
        index = {s: i for i, s in enumerate(self.simplices[d - 1])}
        mat = np.zeros((len(self.simplices[d - 1]), len(self.simplices[d])), dtype=np.int64)
        for j, s in enumerate(self.simplices[d]):
            for i in range(len(s)):
                mat[index[s[:i] + s[i + 1 :]], j] = (-1) ** i
        return mat

    def to_text(self) -> str:
        """Facet list, one simplex per line, vertices by label."""
        lines = [" ".join(self.vertices[v] for v in f) for f in self.facets()]
        return "\n".join(sorted(lines)) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SimplicialComplex":
        labels: list[str] = []
        idx: dict[str, int] = {}
        facets = []
        for line in text.splitlines():
            toks = line.split()
            if not toks:
                continue
            for t in toks:
                if t not in idx:
                    idx[t] = len(labels)
                    labels.append(t)
            facets.append([idx[t] for t in toks])
        return cls.from_facets(labels, facets)


def order_complex(X: FiniteSpace) -> SimplicialComplex:
    """Chains of the specialization order, vertices indexed as in X."""
    n = len(X)
    strict = X.order & ~np.eye(n, dtype=bool)
    # vertices in a linear extension so chains come out sorted by height
    height = [int(np.sum(X.order[:, j])) for j in range(n)]
    rank = sorted(range(n), key=lambda j: (height[j], j))
    pos = {v: i for i, v in enumerate(rank)}
    chains: list[tuple[int, ...]] = []

    def extend(chain):
        chains.append(chain)
        last = chain[-1]
        for w in rank[pos[last] + 1 :]:
            if strict[last, w]:
                extend(chain + (w,))

    for v in rank:
        extend((v,))
    top = max((len(c) for c in chains), default=0)
    by_dim = tuple(tuple(sorted(tuple(sorted(c)) for c in chains if len(c) == d + 1)) for d in range(top))
    return SimplicialComplex(X.points, by_dim)


def invariant_factors(diag) -> list[int]:
    """Normalise a nonzero diagonal so each entry divides the next."""
    d = sorted(abs(int(v)) for v in diag if v)
    changed = True
    while changed:
        changed = False
        for i in range(len(d)):
            for j in range(i + 1, len(d)):
                if d[j] % d[i]:
                    g = math.gcd(d[i], d[j])
                    d[i], d[j] = g, d[i] // g * d[j]
                    changed = True
        d.sort()
    return d


def smith_diagonal(mat: np.ndarray) -> list[int]:
    if mat.size == 0:
        return []
    return invariant_factors(kernels.snf_diagonal(mat.tolist()))


@dataclass(frozen=True)
class HomologyProfile:
    betti: tuple[int, ...]
    torsion: tuple[tuple[int, ...], ...]
    euler: int

    def group(self, i: int) -> str:
        if i >= len(self.betti):
            return "0"
        parts = []
        if self.betti[i]:
            parts.append("Z" if self.betti[i] == 1 else f"Z^{self.betti[i]}")
        parts += [f"Z/{t}" for t in self.torsion[i]]
        return " + ".join(parts) if parts else "0"

    def groups(self) -> list[str]:
        return [self.group(i) for i in range(len(self.betti))]

    def reduced(self) -> "HomologyProfile":
        if not self.betti:
            return self
        b = list(self.betti)
        b[0] = max(b[0] - 1, 0)
        return HomologyProfile(tuple(b), self.torsion, self.euler - 1)

    def padded(self, n: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
        out = []
        for i in range(n):
            if i < len(self.betti):
                out.append((self.betti[i], self.torsion[i]))
            else:
                out.append((0, ()))
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "betti": list(self.betti),
            "torsion": [list(t) for t in self.torsion],
            "groups": self.groups(),
            "euler_characteristic": self.euler,
        }


def homology(K: SimplicialComplex) -> HomologyProfile:
    """Integral simplicial homology via Smith normal forms."""
    dims = K.f_vector()
    top = len(dims)
    ranks = [0] * (top + 1)
    torsion_of = [()] * (top + 1)
    for d in range(1, top):
        diag = smith_diagonal(K.boundary(d))
        ranks[d] = len(diag)
        torsion_of[d] = tuple(v for v in diag if v > 1)
    betti = tuple(dims[i] - ranks[i] - ranks[i + 1] for i in range(top))
    torsion = tuple(torsion_of[i + 1] for i in range(top))
    return HomologyProfile(betti, torsion, K.euler_characteristic())


def is_acyclic(profile: HomologyProfile) -> bool:
    r = profile.reduced()
    return all(b == 0 for b in r.betti) and all(not t for t in r.torsion)


# ---------------------------------------------------------------------------
# separation and covers


@dataclass(frozen=True)
class SeparationReport:
    t0: bool
    t1: bool
    inseparable_pairs: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict:
        return {"T0": self.t0, "T1": self.t1, "inseparable_pairs": [list(p) for p in self.inseparable_pairs]}


def separation_report(X: FiniteSpace) -> SeparationReport:
    """x and y are separable iff their minimal open sets are disjoint."""
    n = len(X)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.any(X.order[:, i] & X.order[:, j]):
                pairs.append((X.points[i], X.points[j]))
    t1 = bool(np.array_equal(X.order, np.eye(n, dtype=bool)))
    return SeparationReport(X.is_t0, t1, tuple(pairs))


@dataclass(frozen=True)
class CoverReport:
    condition_a: bool
    acyclic: dict
    passed: bool

    def to_dict(self) -> dict:
        return {"condition_a": self.condition_a, "minimal_opens_acyclic": self.acyclic, "passed": self.passed}


def mccord_cover_check(X: FiniteSpace) -> CoverReport:
    """Check the basis-like cover hypothesis on the minimal open sets, and
    acyclicity of each one as a proxy for the local equivalence hypothesis."""
    if not X.is_t0:
        raise PreconditionError("space is not T0")
    opens = {x: X.minimal_open(x) for x in X.points}
    cond_a = True
    for y in X.points:
        for z in X.points:
            inter = opens[y] & opens[z]
            for x in inter:
                if not opens[x] <= inter:
                    cond_a = False
    acyclic = {x: is_acyclic(homology(order_complex(X.subspace(opens[x])))) for x in X.points}
    return CoverReport(cond_a, acyclic, cond_a and all(acyclic.values()))


# ---------------------------------------------------------------------------
# finite models of orbit spaces


def _sphere_components(d: int) -> list[str]:
    if d <= 0:
        return []
    return ["+", "-"] if d == 1 else [""]


def hyperbolic_model(k: int, m: int) -> FiniteSpace:
    """Classes of the hyperbolic flow in a bidisk, parallel families collapsed.

    Points: the fixed class ``o`` (critical), one class per component of the
    stable directions (``s``), of the unstable directions (``u``) and of
    their product (``g``, the generic orbits).  Generic classes lie below
    the axis classes they accumulate on, which lie below ``o``.
    """
    if m < 1 or not 0 <= k <= m:
        raise UnsupportedError(f"invalid hyperbolic model k={k}, m={m}")
    stab = [f"s{c}" for c in _sphere_components(k)]
    unst = [f"u{c}" for c in _sphere_components(m - k)]
    pts = ["o"] + stab + unst
    rel = {(x, "o") for x in stab + unst}
    gen = []
    if stab and unst:
        for a in _sphere_components(k):
            for b in _sphere_components(m - k):
                g = f"g{a}{b}"
                gen.append(g)
                rel |= {(g, f"s{a}"), (g, f"u{b}"), (g, "o")}
    pts = gen + stab + unst + ["o"]
    ann = tuple("critical" if p == "o" else "regular" for p in pts)
    return FiniteSpace(tuple(pts), frozenset(rel), ann)


def sphere_orbit_model(n: int) -> FiniteSpace:
    """X_n with the two top points as the pole classes (critical)."""
    if n < 1:
        raise UnsupportedError("sphere model needs n >= 1")
    X = minimal_sphere_model(n - 1)
    X = FiniteSpace(X.points, X.leq, ("regular",) * len(X))
    return nh_suspension(X, ("S", "N"), annotation="critical")


def parallel_model() -> FiniteSpace:
    """A single regular class: the orbit space of a parallel flow on R^m."""
    return FiniteSpace(("r",), frozenset(), ("regular",))


def orbit_space_finite_model(model_id: str) -> FiniteSpace:
    """Finite model of the orbit space of a builtin flow.

    The hyperbolic bidisk model and the parallel model extend the sphere
    case; both are modelling choices, flagged in reports.
    """
    name, *args = model_id.split(":")
    try:
        ints = [int(a) for a in args]
    except ValueError:
        raise UnsupportedError(f"bad parameters in {model_id!r}") from None
    if name in ("sphere_longitudinal", "sphere") and len(ints) == 1:
        return sphere_orbit_model(ints[0])
    if name == "hyperbolic" and len(ints) == 2:
        return hyperbolic_model(ints[0], ints[1])
    if name == "parallel" and not ints:
        return parallel_model()
    raise UnsupportedError(f"no finite orbit-space model for {model_id!r}")


def is_extension_model(model_id: str) -> bool:
    return model_id.split(":")[0] in ("hyperbolic", "parallel")


def builtin_finite_spaces(max_points: int = 12) -> dict[str, FiniteSpace]:
    """Every builtin finite space with at most ``max_points`` points."""
    out: dict[str, FiniteSpace] = {}
    n = 0
    while 2 * n + 2 <= max_points:
        out[f"X{n}"] = minimal_sphere_model(n)
        n += 1
    for n in range(1, max_points):
        if 2 * n + 2 > max_points:
            break
        out[f"sphere_longitudinal:{n}"] = sphere_orbit_model(n)
    for m in range(1, 5):
        for k in range(m + 1):
            X = hyperbolic_model(k, m)
            if len(X) <= max_points:
                out[f"hyperbolic:{k}:{m}"] = X
    out["parallel"] = parallel_model()
    return out
