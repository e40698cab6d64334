"""Decomposability of monotone subspace families over a poset.

A family assigns to each poset element a subspace, increasing along the
order.  The central question: can every member be written as the orthogonal
direct sum of pieces indexed by the elements below it?  The answer is
equivalent to a pairwise projector identity (the intersection property),
checked here; on success the pieces and their projectors are constructed
explicitly, together with the Mobius alternating-sum maps for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .posets import Element, LowerSet, Poset, PosetError, PosetPlus
from .spaces import (
    AmbientSpace,
    Projector,
    Subspace,
    contains,
    intersect,
    join,
    subspace_eq,
)


class SubspaceFamily:
    """Monotone assignment of a subspace to every poset element.

    Monotonicity (b <= a implies H_b inside H_a) is validated eagerly; for
    very large posets only covering pairs are checked, which implies the rest
    by transitivity of containment.
    """

    def __init__(self, poset: Poset, ambient: AmbientSpace, assign: dict):
        missing = [a for a in poset.elements if a not in assign]
        if missing:
            raise ValueError(f"no subspace assigned to {missing[0]!r}")
        for a, s in assign.items():
            if a not in poset.index:
                raise ValueError(f"assignment for unknown element {a!r}")
            if s.ambient != ambient:
                raise ValueError(f"subspace for {a!r} lives in a different ambient")
        self.poset = poset
        self.ambient = ambient
        self.assign = dict(assign)
        self._validate_monotone()

    def _validate_monotone(self):
        p = self.poset
        strict_pairs = int(p.strict.sum())
        if strict_pairs <= 2000:
            pairs = np.argwhere(p.strict)
        else:
            pairs = np.argwhere(p.covers)
        for i, j in pairs:
            b, a = p.elements[i], p.elements[j]
            if not contains(self.assign[a], self.assign[b]):
                raise ValueError(
                    f"family is not monotone: H({b!r}) is not inside H({a!r})"
                )

    def subspace(self, a) -> Subspace:
        return self.assign[a]

    def projector(self, a) -> Projector:
        return self.assign[a].projector()

    def __repr__(self):
        return (
            f"SubspaceFamily({len(self.poset)} elements in "
            f"R^{self.ambient.dim})"
        )


@dataclass
class IntersectionReport:
    """Outcome of the pairwise projector check.

    witnesses lists failing pairs as (a, b, gap), largest gap first; empty
    exactly when the property holds.
    """

    holds: bool
    witnesses: list = field(default_factory=list)

    def __post_init__(self):
        assert self.holds == (not self.witnesses)

    @property
    def max_gap(self) -> float:
        return max((w[-1] for w in self.witnesses), default=0.0)


@dataclass
class Decomposition:
    """The pieces S_a over the extended poset plus their projectors.

    Pieces are pairwise orthogonal and rebuild each family member (and the
    whole ambient) by joining below; both facts are verified constructively
    before this object is returned.
    """

    poset_plus: PosetPlus
    pieces: dict
    projectors: dict

    @property
    def top(self):
        return self.poset_plus.top

    def dims(self) -> dict:
        return {a: s.dim for a, s in self.pieces.items()}


@dataclass
class DecompositionResult:
    """decompose() output; failure is a value, never an exception.

    On failure, `report` carries the witnesses, `failed_at` the first element
    (in linear-extension order) whose members could not be rebuilt by
    joining pieces, and `orthogonality_defects` any piece pairs that fail to
    be orthogonal.
    """

    report: IntersectionReport
    decomposition: Decomposition | None = None
    failed_at: Element | None = None
    orthogonality_defects: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.decomposition is not None


def pi_of_lowerset(fam: SubspaceFamily, B) -> Projector:
    """Projector onto the join of the family over a lower set; zero for B=∅."""
    if not isinstance(B, LowerSet):
        B = LowerSet(fam.poset, B)  # validates downward closure
    elif B.parent is not fam.poset:
        B = LowerSet(fam.poset, B.members)
    if not B.members:
        return Projector(fam.ambient, np.zeros((fam.ambient.dim,) * 2))
    return join([fam.assign[b] for b in B]).projector()


def check_intersection_property(fam: SubspaceFamily) -> IntersectionReport:
    """Evaluate pi(a-hat ∩ b-hat) = pi_a pi_b over all unordered pairs."""
    p = fam.poset
    amb = fam.ambient
    tol = amb.tol.proj
    below = {a: p.elements_below(a) for a in p.elements}
    proj = {a: fam.projector(a).matrix for a in p.elements}
    joined_cache: dict[frozenset, np.ndarray] = {}

    def pi_members(members: frozenset) -> np.ndarray:
        if members not in joined_cache:
            if members:
                m = join([fam.assign[b] for b in members]).projector().matrix
            else:
                m = np.zeros((amb.dim, amb.dim))
            joined_cache[members] = m
        return joined_cache[members]

    witnesses = []
    elems = p.elements
    for i in range(len(elems)):
        for j in range(i + 1, len(elems)):
            a, b = elems[i], elems[j]
            cap = below[a] & below[b]
            gap = amb.op_norm(pi_members(cap) - proj[a] @ proj[b])
            if gap > tol:
                witnesses.append((a, b, gap))
    witnesses.sort(key=lambda w: (-w[2], str(w[0]), str(w[1])))
    return IntersectionReport(holds=not witnesses, witnesses=witnesses)


def interaction_subspaces(fam: SubspaceFamily, plus: PosetPlus | None = None) -> dict:
    """The candidate pieces S_a = H_a ∩ (join of strictly lower members)^⊥.

    Includes the adjoined top, whose piece is the complement of the join of
    the whole family, so the pieces always target the full ambient.
    """
    p = fam.poset
    amb = fam.ambient
    if plus is None:
        plus = p.extend_plus()
    out = {}
    for a in p.elements:
        lower = [b for b in p.elements_below(a) if b != a]
        if lower:
            blocker = join([fam.assign[b] for b in lower]).complement()
            out[a] = intersect(fam.assign[a], blocker)
        else:
            out[a] = fam.assign[a]
    members = [fam.assign[a] for a in p.elements]
    out[plus.top] = (
        join(members).complement() if members else amb.full_subspace()
    )
    return out


def decompose(fam: SubspaceFamily) -> DecompositionResult:
    """Decide decomposability and build the certified pieces.

    Mirrors the inductive proof: walk a linear extension, requiring at every
    element that the pieces below join back to the member there, and that
    all piece pairs are orthogonal.  Any defect turns the result into a
    failure value carrying the intersection-property witnesses.
    """
    report = check_intersection_property(fam)
    p = fam.poset
    amb = fam.ambient
    plus = p.extend_plus()
    pieces = interaction_subspaces(fam, plus)

    tol = amb.tol.proj
    orth_bad = []
    names = list(plus.elements)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = names[i], names[j]
            gap = amb.op_norm(
                pieces[a].projector().matrix @ pieces[b].projector().matrix
            )
            if gap > tol:
                orth_bad.append((a, b, gap))
    orth_bad.sort(key=lambda w: (-w[2], str(w[0]), str(w[1])))

    failed_at = None
    for a in plus.linear_extension():
        target = amb.full_subspace() if a == plus.top else fam.assign[a]
        acc = join([pieces[b] for b in plus.elements_below(a)])
        if not subspace_eq(acc, target):
            failed_at = a
            break

    if report.holds and failed_at is None and not orth_bad:
        dec = Decomposition(
            poset_plus=plus,
            pieces=pieces,
            projectors={a: s.projector() for a, s in pieces.items()},
        )
        return DecompositionResult(report=report, decomposition=dec)
    return DecompositionResult(
        report=report,
        decomposition=None,
        failed_at=failed_at,
        orthogonality_defects=orth_bad,
    )


def family_from_pieces(poset: Poset, ambient: AmbientSpace, pieces: dict) -> SubspaceFamily:
    """Assemble H_a as the join of the pieces at or below a.

    With pairwise-orthogonal pieces this is the synthesis direction of the
    decomposition theorem; the family it returns is monotone by construction.
    """
    assign = {}
    for a in poset.elements:
        assign[a] = join([pieces[b] for b in poset.elements_below(a)])
    return SubspaceFamily(poset, ambient, assign)


def mobius_projections(fam: SubspaceFamily) -> dict:
    """The alternating sums s_a = Σ_{b<=a} mu(a,b) pi_b as raw matrices.

    These are projectors exactly when the family decomposes; returned
    unconditionally for comparison and diagnostics.
    """
    p = fam.poset
    proj = {a: fam.projector(a).matrix for a in p.elements}
    out = {}
    for a in p.elements:
        s = np.zeros((fam.ambient.dim,) * 2)
        for b in p.elements_below(a):
            s = s + p.mobius[(a, b)] * proj[b]
        out[a] = s
    return out


def mobius_gaps(fam: SubspaceFamily, dec: Decomposition) -> dict:
    """Distance between each Mobius map and the orthogonal piece projector."""
    smaps = mobius_projections(fam)
    return {
        a: fam.ambient.op_norm(smaps[a] - dec.projectors[a].matrix)
        for a in fam.poset.elements
    }


def meet_semilattice_shortcut(fam: SubspaceFamily) -> IntersectionReport:
    """The cheaper pairwise check pi_a pi_b = pi_{a∧b}, valid on meet
    semi-lattices where it coincides with the general intersection check."""
    p = fam.poset
    if not p.is_meet_semilattice():
        raise PosetError("shortcut needs a meet semi-lattice")
    amb = fam.ambient
    proj = {a: fam.projector(a).matrix for a in p.elements}
    witnesses = []
    elems = p.elements
    for i in range(len(elems)):
        for j in range(i + 1, len(elems)):
            a, b = elems[i], elems[j]
            gap = amb.op_norm(proj[a] @ proj[b] - proj[p.meet(a, b)])
            if gap > amb.tol.proj:
                witnesses.append((a, b, gap))
    witnesses.sort(key=lambda w: (-w[2], str(w[0]), str(w[1])))
    return IntersectionReport(holds=not witnesses, witnesses=witnesses)
