"""Factor subspaces of finite product spaces and the Gibbs factorization test.

Functions on a finite product of state spaces form one ambient space per
model; functions depending only on a subset of the variables form the factor
subspace of that subset.  Over the power-set lattice these always decompose
orthogonally, and a strictly positive distribution factorizes over a class
of subsets exactly when the off-class pieces of its log vanish.

Tables and distributions are laid out row-major with the first variable
slowest, matching the C-order flattening of an array indexed by the
variables in model order.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .decomposition import SubspaceFamily, interaction_subspaces
from .posets import power_set, subset_id
from .spaces import AmbientSpace, Subspace, Tolerance, join, max_ambient_dim


class ModelError(ValueError):
    pass


class DiscreteModel:
    """Named finite variables in a fixed order.

    Accepts a mapping or a sequence of (name, state count) pairs; the order
    given is the storage order of every table and distribution.
    """

    def __init__(self, variables, tol: Tolerance = Tolerance()):
        if isinstance(variables, Mapping):
            pairs = list(variables.items())
        else:
            pairs = [(n, k) for n, k in variables]
        if not pairs:
            raise ModelError("a model needs at least one variable")
        names = []
        sizes = {}
        for name, k in pairs:
            if not isinstance(name, str) or not name:
                raise ModelError(f"variable name {name!r} must be a nonempty string")
            if name in sizes:
                raise ModelError(f"duplicate variable {name!r}")
            if not (isinstance(k, (int, np.integer)) and k >= 1):
                raise ModelError(f"variable {name!r} needs a state count >= 1")
            names.append(name)
            sizes[name] = int(k)
        self.names = tuple(names)
        self.sizes = sizes
        self.shape = tuple(sizes[n] for n in names)
        self.n_states = int(np.prod(self.shape, dtype=np.int64))
        cap = max_ambient_dim()
        if self.n_states > cap:
            raise ModelError(
                f"state space has {self.n_states} points, over the cap of {cap}"
            )
        self.tol = tol
        self._ambient: AmbientSpace | None = None

    @property
    def ambient(self) -> AmbientSpace:
        if self._ambient is None:
            self._ambient = AmbientSpace(self.n_states, tol=self.tol)
        return self._ambient

    def check_members(self, members) -> tuple:
        """Normalize a subset of variables to model order."""
        got = set()
        for n in members:
            if n not in self.sizes:
                raise ModelError(f"unknown variable {n!r}")
            got.add(n)
        return tuple(n for n in self.names if n in got)

    def subset_shape(self, members) -> tuple:
        return tuple(self.sizes[n] for n in self.check_members(members))

    def subset_size(self, members) -> int:
        return int(np.prod(self.subset_shape(members), dtype=np.int64))

    def subset_code(self, members) -> np.ndarray:
        """For each global state, the flat index of its restriction to the
        given variables (model order, first variable slowest)."""
        members = self.check_members(members)
        if not members:
            return np.zeros(self.n_states, dtype=np.intp)
        grids = np.unravel_index(np.arange(self.n_states), self.shape)
        by_name = dict(zip(self.names, grids))
        return np.ravel_multi_index(
            tuple(by_name[n] for n in members),
            tuple(self.sizes[n] for n in members),
        )

    def __repr__(self):
        inner = ", ".join(f"{n}:{self.sizes[n]}" for n in self.names)
        return f"DiscreteModel({inner})"


def factor_subspace(model: DiscreteModel, members) -> Subspace:
    """Functions that depend only on the given variables.

    Spanned by the indicators of the joint states of the subset; these are
    orthogonal with equal norms, so the frame is exact.
    """
    code = model.subset_code(members)
    k = model.subset_size(members)
    frame = np.zeros((model.n_states, k))
    frame[np.arange(model.n_states), code] = math.sqrt(k / model.n_states)
    return Subspace(model.ambient, frame)


def factor_family(model: DiscreteModel) -> SubspaceFamily:
    """All factor subspaces over the power set of the variables."""
    p = power_set(model.names)
    assign = {
        a: factor_subspace(model, p.member_sets[a]) for a in p.elements
    }
    return SubspaceFamily(p, model.ambient, assign)


def hierarchical_subspace(model: DiscreteModel, classes) -> Subspace:
    """Sums of functions each living on one class member.

    The join over the classes; closing the classes downward changes
    nothing because factor subspaces grow with the subset.
    """
    classes = list(classes)
    if not classes:
        raise ModelError("need at least one class")
    return join([factor_subspace(model, a) for a in classes])


def class_closure(model: DiscreteModel, classes) -> list:
    """Canonical ids of every subset of some class member, sorted."""
    out = set()
    for a in classes:
        members = model.check_members(a)
        for r in range(len(members) + 1):
            for combo in itertools.combinations(members, r):
                out.add(subset_id(combo))
    return sorted(out, key=lambda s: (len(s), s))


@dataclass
class Potential:
    """One table per subset of variables, added up into an energy.

    Each table is a flat vector over the joint states of its subset, in
    model order with the first member slowest.
    """

    model: DiscreteModel
    terms: dict

    def __post_init__(self):
        clean = {}
        for members, table in self.terms.items():
            key = self.model.check_members(members)
            table = np.asarray(table, dtype=float).ravel()
            want = self.model.subset_size(key)
            if table.size != want:
                raise ModelError(
                    f"table for {key!r} has {table.size} entries, needs {want}"
                )
            if key in clean:
                raise ModelError(f"duplicate term for {key!r}")
            clean[key] = table
        self.terms = clean

    def energy(self) -> np.ndarray:
        """Total log-weight per global state."""
        model = self.model
        total = np.zeros(model.shape)
        for members, table in self.terms.items():
            shaped = table.reshape(model.subset_shape(members))
            expand = tuple(
                model.sizes[n] if n in members else 1 for n in model.names
            )
            total += shaped.reshape(expand)
        return total.ravel()

    def support_ids(self) -> list:
        return class_closure(self.model, self.terms.keys())


@dataclass
class GibbsState:
    """A strictly positive normalized distribution on the global states."""

    model: DiscreteModel
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).ravel()
        if probs.size != self.model.n_states:
            raise ModelError(
                f"distribution has {probs.size} entries, needs "
                f"{self.model.n_states}"
            )
        if not np.all(probs > 0):
            raise ModelError("distribution must be strictly positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ModelError("distribution must sum to 1 within 1e-12")
        self.probs = probs

    def log(self) -> np.ndarray:
        return np.log(self.probs)


def gibbs_from_potential(pot: Potential) -> GibbsState:
    """Normalize the exponential of the energy, stabilized against overflow
    by shifting with the max before exponentiating."""
    energy = pot.energy()
    shift = energy.max()
    log_z = shift + math.log(np.exp(energy - shift).sum())
    return GibbsState(pot.model, np.exp(energy - log_z))


@dataclass
class FactorizationReport:
    """Verdict and per-subset piece norms of the log-distribution."""

    holds: bool
    norms: dict
    class_ids: list
    off_class: list          # off-class ids sorted by decreasing norm
    max_off_norm: float
    threshold: float


def factorization_test(state: GibbsState, classes,
                       tol_factor: float | None = None) -> FactorizationReport:
    """Does the distribution factorize over the given classes?

    Splits the log-distribution along the orthogonal pieces of the factor
    family; the verdict is positive when every piece indexed outside the
    downward closure of the classes is negligible relative to the whole
    log vector.
    """
    model = state.model
    fam = factor_family(model)
    pieces = interaction_subspaces(fam)
    log_p = state.log()
    norms = {}
    for a in fam.poset.elements:
        proj = pieces[a].projector().matrix
        norms[a] = float(np.linalg.norm(proj @ log_p))
    inside = set(class_closure(model, classes))
    if tol_factor is None:
        tol_factor = 1e-8 * float(np.linalg.norm(log_p))
    off = sorted(
        (a for a in norms if a not in inside),
        key=lambda a: (-norms[a], a),
    )
    max_off = max((norms[a] for a in off), default=0.0)
    return FactorizationReport(
        holds=max_off <= tol_factor,
        norms=norms,
        class_ids=sorted(inside, key=lambda s: (len(s), s)),
        off_class=off,
        max_off_norm=max_off,
        threshold=tol_factor,
    )
