"""Subspace arithmetic in finite-dimensional real inner-product spaces.

Subspaces are stored as orthonormal frames (columns orthonormal with respect
to the ambient inner product); all rank decisions go through singular values
with a relative threshold.  A non-identity gram matrix is supported by
working in its Cholesky coordinates internally, so every operation reduces to
plain Euclidean linear algebra.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_DIM = 4096


def max_ambient_dim() -> int:
    """Ambient-dimension cap; the ID_MAX_DIM env var overrides the default."""
    raw = os.environ.get("ID_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValueError(f"ID_MAX_DIM must be an integer, got {raw!r}") from exc
    if val <= 0:
        raise ValueError("ID_MAX_DIM must be positive")
    return val


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds used by all subspace decisions.

    rank is relative to the largest singular value; pd is relative to the
    largest eigenvalue when validating positive definiteness.
    """

    rank: float = 1e-10
    orth: float = 1e-10
    proj: float = 1e-8
    eq: float = 1e-8
    pd: float = 1e-12

    def __post_init__(self):
        for name in ("rank", "orth", "proj", "eq", "pd"):
            if getattr(self, name) <= 0:
                raise ValueError(f"tolerance {name} must be positive")


class AmbientSpace:
    """R^n with an inner product ⟨u, v⟩ = uᵀ G v.

    G defaults to the identity.  A general symmetric positive-definite G is
    handled through its Cholesky factor L (G = L Lᵀ): mapping x to y = Lᵀ x
    turns the G-inner product into the standard one, and every subspace
    operation happens on the y side.
    """

    def __init__(self, dim: int, gram: np.ndarray | None = None,
                 tol: Tolerance = Tolerance()):
        if dim < 0:
            raise ValueError("dimension must be nonnegative")
        cap = max_ambient_dim()
        if dim > cap:
            raise ValueError(f"ambient dimension {dim} exceeds cap {cap}")
        self.dim = dim
        self.tol = tol
        if gram is None:
            self.gram = None
            self._chol = None
        else:
            gram = np.asarray(gram, dtype=float)
            if gram.shape != (dim, dim):
                raise ValueError(f"gram must be {dim}x{dim}")
            if not np.allclose(gram, gram.T, atol=tol.orth * max(1.0, np.abs(gram).max())):
                raise ValueError("gram must be symmetric")
            gram = 0.5 * (gram + gram.T)
            w = np.linalg.eigvalsh(gram)
            if w[0] <= tol.pd * max(1.0, w[-1]):
                raise ValueError(
                    f"gram is not positive definite (min eig {w[0]:.3e})"
                )
            self.gram = gram
            self._chol = np.linalg.cholesky(gram)  # G = L @ L.T

    # -- coordinates -----------------------------------------------------

    def to_coords(self, vectors: np.ndarray) -> np.ndarray:
        """x -> y = Lᵀ x (identity when gram is the identity)."""
        if self._chol is None:
            return np.asarray(vectors, dtype=float)
        return self._chol.T @ vectors

    def from_coords(self, coords: np.ndarray) -> np.ndarray:
        if self._chol is None:
            return np.asarray(coords, dtype=float)
        return np.linalg.solve(self._chol.T, coords)

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        if self.gram is None:
            return float(u @ v)
        return float(u @ self.gram @ v)

    def norm(self, v: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(v, v), 0.0)))

    def op_norm(self, m: np.ndarray) -> float:
        """Operator norm of a map on this space, measured in the G metric."""
        if self.dim == 0:
            return 0.0
        if self._chol is not None:
            m = self._chol.T @ m @ np.linalg.inv(self._chol.T)
        return float(np.linalg.norm(m, 2))

    # -- canonical subspaces ---------------------------------------------

    def zero_subspace(self) -> "Subspace":
        return Subspace(self, np.zeros((self.dim, 0)))

    def full_subspace(self) -> "Subspace":
        return span(self, np.eye(self.dim))

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, AmbientSpace) or self.dim != other.dim:
            return False
        ga = np.eye(self.dim) if self.gram is None else self.gram
        gb = np.eye(other.dim) if other.gram is None else other.gram
        return bool(np.array_equal(ga, gb))

    def __hash__(self):
        return hash((self.dim, self.gram is None))

    def __repr__(self):
        kind = "euclidean" if self.gram is None else "weighted"
        return f"AmbientSpace(dim={self.dim}, {kind})"


class Subspace:
    """A subspace given by a frame of G-orthonormal columns."""

    __slots__ = ("ambient", "frame")

    def __init__(self, ambient: AmbientSpace, frame: np.ndarray):
        frame = np.asarray(frame, dtype=float)
        if frame.ndim != 2 or frame.shape[0] != ambient.dim:
            raise ValueError(
                f"frame must be {ambient.dim}xk, got {frame.shape}"
            )
        if frame.shape[1] > ambient.dim:
            raise ValueError("frame has more columns than ambient dimensions")
        y = ambient.to_coords(frame)
        defect = np.abs(y.T @ y - np.eye(frame.shape[1])).max() if frame.size else 0.0
        # loose misuse guard only; the tol.orth invariant is property-tested
        if defect > 1e-6:
            raise ValueError(
                f"frame columns are not orthonormal (defect {defect:.2e}); "
                "use span() for raw generators"
            )
        self.ambient = ambient
        self.frame = frame

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> "Projector":
        p = self.frame @ self.frame.T
        if self.ambient.gram is not None:
            p = p @ self.ambient.gram
        return Projector(self.ambient, p)

    def complement(self) -> "Subspace":
        """Orthogonal complement with respect to the ambient inner product."""
        amb = self.ambient
        y = amb.to_coords(self.frame)
        u, _, _ = np.linalg.svd(y, full_matrices=True)
        comp = u[:, self.dim :]
        return Subspace(amb, amb.from_coords(comp))

    def contains_vector(self, v: np.ndarray, tol: float | None = None) -> bool:
        amb = self.ambient
        tol = amb.tol.eq if tol is None else tol
        r = v - self.projector().apply(v)
        scale = max(amb.norm(np.asarray(v, float)), 1.0)
        return amb.norm(r) <= tol * scale

    def __repr__(self):
        return f"Subspace(dim={self.dim} of {self.ambient.dim})"


class Projector:
    """Orthogonal projector P onto a subspace: idempotent and G-self-adjoint."""

    __slots__ = ("ambient", "matrix")

    def __init__(self, ambient: AmbientSpace, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (ambient.dim, ambient.dim):
            raise ValueError("projector shape mismatch")
        self.ambient = ambient
        self.matrix = matrix

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def idempotency_defect(self) -> float:
        return self.ambient.op_norm(self.matrix @ self.matrix - self.matrix)

    def adjoint_defect(self) -> float:
        g = self.ambient.gram
        gp = self.matrix if g is None else g @ self.matrix
        return float(np.linalg.norm(gp - gp.T, 2)) if self.ambient.dim else 0.0

    def __repr__(self):
        return f"Projector(on {self.ambient.dim}-dim ambient)"


# -- operations ------------------------------------------------------------


def span(ambient: AmbientSpace, generators: np.ndarray) -> Subspace:
    """Smallest subspace containing the generator columns.

    Rank is the number of singular values above tol.rank relative to the
    largest one, so scaling the generators never changes the answer.
    """
    generators = np.asarray(generators, dtype=float)
    if generators.ndim != 2 or generators.shape[0] != ambient.dim:
        raise ValueError(
            f"generators must be {ambient.dim}xm, got {generators.shape}"
        )
    if generators.shape[1] == 0:
        return ambient.zero_subspace()
    y = ambient.to_coords(generators)
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return ambient.zero_subspace()
    rank = int(np.sum(s > ambient.tol.rank * s[0]))
    return Subspace(ambient, ambient.from_coords(u[:, :rank]))


def join(subspaces) -> Subspace:
    """Smallest subspace containing every input (closure of the sum)."""
    subspaces = list(subspaces)
    if not subspaces:
        raise ValueError("join needs at least one subspace")
    amb = subspaces[0].ambient
    for s in subspaces[1:]:
        if s.ambient != amb:
            raise ValueError("join across different ambient spaces")
    frames = [s.frame for s in subspaces]
    return span(amb, np.hstack(frames))


def intersect(a: Subspace, b: Subspace) -> Subspace:
    """a ∩ b, computed as the complement of the join of the complements."""
    if a.ambient != b.ambient:
        raise ValueError("intersect across different ambient spaces")
    return join([a.complement(), b.complement()]).complement()


def subspace_eq(a: Subspace, b: Subspace, tol: float | None = None) -> bool:
    if a.ambient != b.ambient:
        raise ValueError("comparison across different ambient spaces")
    tol = a.ambient.tol.eq if tol is None else tol
    gap = a.ambient.op_norm(a.projector().matrix - b.projector().matrix)
    return gap <= tol


def contains(a: Subspace, b: Subspace, tol: float | None = None) -> bool:
    """Does a contain b?  Decided by ‖P_a P_b − P_b‖ ≤ tol."""
    if a.ambient != b.ambient:
        raise ValueError("comparison across different ambient spaces")
    tol = a.ambient.tol.eq if tol is None else tol
    pa, pb = a.projector().matrix, b.projector().matrix
    return a.ambient.op_norm(pa @ pb - pb) <= tol


# -- serialization ---------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("only 2-d matrices serialize")
    return {"dim": [int(m.shape[0]), int(m.shape[1])],
            "data": [float(x) for x in m.reshape(-1)]}


def matrix_from_json(obj) -> np.ndarray:
    if not (isinstance(obj, dict) and "dim" in obj and "data" in obj):
        raise ValueError("matrix JSON needs 'dim' and 'data'")
    r, c = obj["dim"]
    data = np.asarray(obj["data"], dtype=float)
    if data.size != r * c:
        raise ValueError(f"matrix data length {data.size} != {r}*{c}")
    return data.reshape(int(r), int(c))
