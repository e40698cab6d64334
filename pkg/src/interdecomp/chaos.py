"""Polynomial functionals of a finite Gaussian family, filtered by degree.

Monomials in the site variables, graded by total degree, carry the inner
product given by Gaussian moments (sums over pairings weighted by the
covariance).  The span of monomials up to each degree gives a chain of
subspaces; its interaction pieces are the degree-homogeneous chaos spaces,
and projecting a monomial onto its top piece yields its Wick-ordered
version, the Hermite polynomial in the one-site unit-variance case.

Sites are indexed 0..n-1 in the library; a monomial is a sorted tuple of
site indices, () being the constant 1.
"""

from __future__ import annotations

import itertools
import math
import re

import numpy as np

from .decomposition import SubspaceFamily, interaction_subspaces
from .posets import chain
from .spaces import AmbientSpace, Tolerance, max_ambient_dim, span


class ChaosError(ValueError):
    pass


class GaussianModel:
    """Zero-mean Gaussian family given by its covariance matrix."""

    def __init__(self, covariance, tol: Tolerance = Tolerance()):
        cov = np.asarray(covariance, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ChaosError(f"covariance must be square, got {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ChaosError("covariance must be symmetric")
        cov = (cov + cov.T) / 2
        eigs = np.linalg.eigvalsh(cov)
        if eigs.min() <= tol.pd * max(1.0, eigs.max()):
            raise ChaosError("covariance must be positive definite")
        self.covariance = cov
        self.n_sites = cov.shape[0]
        self.tol = tol
        self._moments: dict = {(): 1.0}

    def moment(self, sites) -> float:
        """Expectation of the product of the site variables.

        Pairing recursion: match the first factor with each of the others
        and recurse on the rest; odd products vanish.  Memoized on the
        sorted tuple, so repeated Gram entries are free.
        """
        key = tuple(sorted(sites))
        for s in key:
            if not (0 <= s < self.n_sites):
                raise ChaosError(f"site {s!r} out of range")
        return self._moment(key)

    def _moment(self, key: tuple) -> float:
        if key in self._moments:
            return self._moments[key]
        if len(key) % 2 == 1:
            self._moments[key] = 0.0
            return 0.0
        head, rest = key[0], key[1:]
        total = 0.0
        for j, partner in enumerate(rest):
            sub = tuple(sorted(rest[:j] + rest[j + 1:]))
            total += self.covariance[head, partner] * self._moment(sub)
        self._moments[key] = total
        return total


def wick_moment(model: GaussianModel, x, y) -> float:
    """Inner product of two monomials: the moment of their product."""
    return model.moment(tuple(x) + tuple(y))


def monomial_basis(n_sites: int, max_degree: int) -> list:
    """All monomials up to the degree cap, graded then lexicographic."""
    if max_degree < 0:
        raise ChaosError("max degree must be >= 0")
    out = []
    for m in range(max_degree + 1):
        out.extend(itertools.combinations_with_replacement(range(n_sites), m))
    return out


def chaos_filtration(model: GaussianModel, max_degree: int) -> SubspaceFamily:
    """The chain of spans of monomials up to each degree.

    Ambient is the monomial coordinate space with the moment Gram matrix
    as inner product; the subspace at level m spans the coordinate
    directions of degree <= m.  Total orders make the pairwise projector
    check automatic, so the family always decomposes.
    """
    basis = monomial_basis(model.n_sites, max_degree)
    cap = max_ambient_dim()
    if len(basis) > cap:
        raise ChaosError(
            f"{len(basis)} monomials up to degree {max_degree}, over the "
            f"cap of {cap}"
        )
    n = len(basis)
    gram = np.empty((n, n))
    for i, bi in enumerate(basis):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = model.moment(bi + basis[j])
    try:
        amb = AmbientSpace(n, gram=gram, tol=model.tol)
    except ValueError as exc:
        raise ChaosError(
            f"moment Gram matrix rank collapse at degree {max_degree}: {exc}"
        ) from exc
    eye = np.eye(n)
    counts = {}
    for m in range(max_degree + 1):
        counts[m] = sum(
            math.comb(model.n_sites + k - 1, k) for k in range(m + 1)
        )
    p = chain(max_degree + 1)
    assign = {}
    for m in p.elements:
        assign[m] = span(amb, eye[:, : counts[m]])
    return SubspaceFamily(p, amb, assign)


def chaos_pieces(model: GaussianModel, max_degree: int) -> dict:
    """Degree-homogeneous pieces: level m cut down by the levels below."""
    fam = chaos_filtration(model, max_degree)
    pieces = interaction_subspaces(fam)
    return {m: pieces[m] for m in fam.poset.elements}


def hermite_ito(model: GaussianModel, x, max_degree: int | None = None) -> np.ndarray:
    """Wick-ordered version of a monomial, as coordinates over the basis.

    Projects the monomial onto the top-degree piece of the filtration; the
    result is orthogonal to everything of lower degree.  The coordinate
    order is monomial_basis(n_sites, max_degree), which defaults to the
    monomial's own degree.
    """
    x = tuple(sorted(x))
    for s in x:
        if not (0 <= s < model.n_sites):
            raise ChaosError(f"site {s!r} out of range")
    m = len(x)
    if max_degree is None:
        max_degree = m
    if m > max_degree:
        raise ChaosError(
            f"monomial degree {m} exceeds the filtration cap {max_degree}"
        )
    basis = monomial_basis(model.n_sites, max_degree)
    pieces = chaos_pieces(model, max_degree)
    v = np.zeros(len(basis))
    v[basis.index(x)] = 1.0
    return pieces[m].projector().matrix @ v


_MONOMIAL_TERM = re.compile(r"^s([1-9][0-9]*)$")


def parse_monomial(text: str, n_sites: int) -> tuple:
    """Read products like "s1*s1*s2" into a sorted site tuple.

    Site names are 1-based in the text and 0-based in the result; the
    bare string "1" is the constant monomial.
    """
    text = text.strip()
    if text == "1":
        return ()
    sites = []
    for term in text.split("*"):
        got = _MONOMIAL_TERM.match(term.strip())
        if not got:
            raise ChaosError(
                f"bad monomial factor {term.strip()!r}; expected s<k> or 1"
            )
        k = int(got.group(1))
        if k > n_sites:
            raise ChaosError(f"site s{k} out of range for {n_sites} sites")
        sites.append(k - 1)
    return tuple(sorted(sites))
