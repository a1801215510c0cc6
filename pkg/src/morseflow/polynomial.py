"""Sparse polynomial maps R^m -> R^d, the field format the compiled
integrator understands."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._pykernels import poly_eval


@dataclass(frozen=True, eq=False)
class PolyMap:
    """Sum of monomial terms ``coef[j] * prod(x ** expo[j])`` added into
    output component ``out[j]``."""

    coef: np.ndarray
    expo: np.ndarray
    out: np.ndarray
    dim: int
    n_out: int

    @classmethod
    def from_terms(cls, dim: int, components: list[dict[tuple[int, ...], float]]) -> "PolyMap":
        coef, expo, out = [], [], []
        for i, terms in enumerate(components):
            for powers, c in sorted(terms.items()):
                if c == 0:
                    continue
                if len(powers) != dim:
                    raise ValueError(f"monomial {powers} does not have {dim} exponents")
                coef.append(float(c))
                expo.append(list(powers))
                out.append(i)
        return cls(
            np.asarray(coef, dtype=float),
            np.asarray(expo, dtype=np.int32).reshape(len(coef), dim),
            np.asarray(out, dtype=np.int32),
            dim,
            len(components),
        )

    @classmethod
    def affine(cls, matrix, offset=None) -> "PolyMap":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        d, m = matrix.shape
        offset = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)
        comps = []
        for i in range(d):
            terms = {}
            if offset[i]:
                terms[(0,) * m] = offset[i]
            for j in range(m):
                if matrix[i, j]:
                    e = [0] * m
                    e[j] = 1
                    terms[tuple(e)] = matrix[i, j]
            comps.append(terms)
        return cls.from_terms(m, comps)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.coef.size:
            return np.zeros(self.n_out)
        return poly_eval(self.coef, self.expo, self.out, self.n_out, x)

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        jac = np.zeros((self.n_out, self.dim))
        for c, e, o in zip(self.coef, self.expo, self.out):
            for j in range(self.dim):
                if e[j] == 0:
                    continue
                ed = e.copy()
                ed[j] -= 1
                jac[o, j] += c * e[j] * np.prod(x ** ed)
        return jac

    def degree(self) -> int:
        return int(self.expo.sum(axis=1).max()) if self.coef.size else 0
