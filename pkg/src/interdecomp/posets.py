"""Finite partially ordered sets and the order-theoretic constructions used
throughout the package: lower sets, the Mobius function, meet structure,
linear extensions, and the derived index posets (adjoined top, comparable
pairs, lower-set pairs).

A :class:`Poset` is immutable once built.  The order relation is stored as a
closed boolean matrix ``leq`` where ``leq[i, j]`` says "element i is below
element j".  Construction accepts any acyclic relation (typically covering
pairs) and takes the reflexive-transitive closure itself.
"""

from __future__ import annotations

from functools import cached_property
from typing import Hashable, Iterable, Iterator

import numpy as np

Element = Hashable


class PosetError(ValueError):
    pass


def _sort_key(x) -> str:
    return str(x)


class LowerSet:
    """A downward-closed subset of a poset.

    Membership is a frozenset of element ids; closure is validated at
    construction time.
    """

    __slots__ = ("parent", "members")

    def __init__(self, parent: "Poset", members: Iterable[Element]):
        members = frozenset(members)
        for m in members:
            if m not in parent.index:
                raise PosetError(f"unknown element {m!r}")
        # downward closure: everything below a member is a member
        for m in members:
            below = parent.elements_below(m)
            if not below <= members:
                missing = sorted(below - members, key=_sort_key)
                raise PosetError(
                    f"not a lower set: {m!r} present but {missing[0]!r} missing"
                )
        self.parent = parent
        self.members = members

    def __contains__(self, x) -> bool:
        return x in self.members

    def __iter__(self) -> Iterator[Element]:
        return iter(sorted(self.members, key=_sort_key))

    def __len__(self) -> int:
        return len(self.members)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LowerSet)
            and self.parent is other.parent
            and self.members == other.members
        )

    def __hash__(self) -> int:
        return hash((id(self.parent), self.members))

    def __repr__(self) -> str:
        inner = ",".join(repr(m) for m in self)
        return f"LowerSet({{{inner}}})"

    def intersection(self, other: "LowerSet") -> "LowerSet":
        assert self.parent is other.parent
        return LowerSet(self.parent, self.members & other.members)


class Poset:
    """Finite poset over opaque element ids.

    Parameters
    ----------
    elements : iterable of hashables
    relation : iterable of (b, a) pairs meaning b <= a.  Any acyclic
        relation is accepted; the constructor closes it reflexively and
        transitively and rejects cycles.
    """

    def __init__(self, elements: Iterable[Element], relation: Iterable = ()):
        elements = tuple(elements)
        if len(set(elements)) != len(elements):
            raise PosetError("duplicate element ids")
        index = {e: i for i, e in enumerate(elements)}
        n = len(elements)
        rel = np.zeros((n, n), dtype=bool)
        for pair in relation:
            b, a = pair
            if b not in index or a not in index:
                raise PosetError(f"relation pair {pair!r} uses unknown element")
            rel[index[b], index[a]] = True
        np.fill_diagonal(rel, True)
        # reflexive-transitive closure by boolean squaring
        closed = rel
        while True:
            nxt = closed | (closed @ closed)
            if (nxt == closed).all():
                break
            closed = nxt
        cyc = closed & closed.T & ~np.eye(n, dtype=bool)
        if cyc.any():
            i, j = np.argwhere(cyc)[0]
            raise PosetError(
                f"cycle through {elements[i]!r} and {elements[j]!r}"
            )
        closed.flags.writeable = False
        self.elements = elements
        self.index = index
        self.leq = closed

    @classmethod
    def _from_closed(cls, elements, leq: np.ndarray) -> "Poset":
        """Internal fast path for matrices already known closed and acyclic."""
        p = cls.__new__(cls)
        p.elements = tuple(elements)
        p.index = {e: i for i, e in enumerate(p.elements)}
        leq = leq.copy()
        leq.flags.writeable = False
        p.leq = leq
        return p

    # -- basic queries ---------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return x in self.index

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def le(self, b, a) -> bool:
        """Is b <= a?"""
        return bool(self.leq[self.index[b], self.index[a]])

    def elements_below(self, a) -> frozenset:
        """Set of ids b with b <= a (principal lower set as a plain set)."""
        col = self.leq[:, self.index[a]]
        return frozenset(self.elements[i] for i in np.flatnonzero(col))

    def lower_set(self, a) -> LowerSet:
        """The principal lower set {b : b <= a}."""
        if a not in self.index:
            raise PosetError(f"unknown element {a!r}")
        return LowerSet(self, self.elements_below(a))

    def empty_lower_set(self) -> LowerSet:
        return LowerSet(self, ())

    @cached_property
    def strict(self) -> np.ndarray:
        lt = self.leq & ~np.eye(len(self), dtype=bool)
        lt.flags.writeable = False
        return lt

    @cached_property
    def covers(self) -> np.ndarray:
        """covers[i, j] true when j covers i (i < j with nothing between)."""
        lt = self.strict
        cov = lt & ~(lt @ lt)
        cov.flags.writeable = False
        return cov

    def cover_pairs(self) -> list[tuple[Element, Element]]:
        """Covering pairs (b, a) with b covered by a, deterministically ordered."""
        out = [
            (self.elements[i], self.elements[j])
            for i, j in np.argwhere(self.covers)
        ]
        out.sort(key=lambda p: (_sort_key(p[0]), _sort_key(p[1])))
        return out

    # -- combinatorial structure ----------------------------------------

    @cached_property
    def _linear_extension_ids(self) -> tuple[int, ...]:
        n = len(self)
        pending = self.strict.sum(axis=0).astype(int)  # strict preds not yet emitted
        ready = sorted(
            (i for i in range(n) if pending[i] == 0),
            key=lambda i: _sort_key(self.elements[i]),
        )
        order: list[int] = []
        while ready:
            i = ready.pop(0)
            order.append(i)
            freed = []
            for j in np.flatnonzero(self.strict[i]):
                pending[j] -= 1
                if pending[j] == 0:
                    freed.append(j)
            if freed:
                ready = sorted(
                    ready + freed, key=lambda k: _sort_key(self.elements[k])
                )
        if len(order) != n:
            raise PosetError("internal: linear extension incomplete")
        return tuple(order)

    def linear_extension(self) -> list[Element]:
        """A topological order of the elements.

        Whenever several elements are available the one with the smallest id
        (string order) is emitted first, so the result is deterministic.
        """
        return [self.elements[i] for i in self._linear_extension_ids]

    @cached_property
    def mobius(self) -> dict[tuple[Element, Element], int]:
        """Mobius function as a table (a, b) -> mu(a, b), defined for b <= a.

        Exact integer arithmetic: mu(a, a) = 1 and the sum of mu(a, c) over
        any interval [b, a] vanishes for b < a.
        """
        order = self._linear_extension_ids
        mu: dict[tuple[Element, Element], int] = {}
        for ia in range(len(self)):
            a = self.elements[ia]
            below = [i for i in order if self.leq[i, ia]]
            # fill from the top of the interval down
            for ib in reversed(below):
                b = self.elements[ib]
                if ib == ia:
                    mu[(a, b)] = 1
                    continue
                acc = 0
                for ic in below:
                    if ic != ib and self.leq[ib, ic]:
                        acc += mu[(a, self.elements[ic])]
                mu[(a, b)] = -acc
        return mu

    @cached_property
    def _meet_table(self) -> dict[tuple[Element, Element], Element] | None:
        n = len(self)
        meets: dict[tuple[Element, Element], Element] = {}
        for i in range(n):
            for j in range(i, n):
                low = self.leq[:, i] & self.leq[:, j]
                if not low.any():
                    return None
                found = None
                for k in np.flatnonzero(low):
                    if np.all(~low | self.leq[:, k]):
                        found = self.elements[k]
                        break
                if found is None:
                    return None
                meets[(self.elements[i], self.elements[j])] = found
                meets[(self.elements[j], self.elements[i])] = found
        return meets

    def is_meet_semilattice(self) -> bool:
        """True when every pair has a greatest common lower bound.

        A pair with no common lower bound at all has no meet, so e.g. two
        incomparable minimal elements make this false.
        """
        return self._meet_table is not None

    def meet(self, a, b) -> Element:
        table = self._meet_table
        if table is None:
            raise PosetError("poset is not a meet semi-lattice")
        return table[(a, b)]

    # -- lower-set enumeration -------------------------------------------

    def iter_lower_sets(self, max_count: int = 4096) -> Iterator[LowerSet]:
        """Enumerate every lower set, smallest first, guarded by max_count.

        The count of lower sets can grow exponentially with the poset, hence
        the guard; exceeding it raises PosetError.
        """
        for members in self._iter_lower_member_sets(max_count):
            yield LowerSet(self, members)

    def _iter_lower_member_sets(self, max_count: int) -> Iterator[frozenset]:
        order = self._linear_extension_ids
        sets: list[frozenset] = [frozenset()]
        for i in order:
            e = self.elements[i]
            need = self.elements_below(e) - {e}
            grown = [s | {e} for s in sets if need <= s]
            sets += grown
            if len(sets) > max_count:
                raise PosetError(
                    f"lower-set count exceeds cap ({max_count}); "
                    "raise the cap to enumerate this poset"
                )
        sets.sort(key=lambda s: (len(s), tuple(sorted(map(_sort_key, s)))))
        yield from sets

    def count_lower_sets(self, max_count: int = 4096) -> int:
        return sum(1 for _ in self._iter_lower_member_sets(max_count))

    # -- derived posets ---------------------------------------------------

    def restrict(self, members: Iterable[Element]) -> "Poset":
        """Induced subposet on the given elements (order inherited)."""
        members = list(dict.fromkeys(members))
        ids = [self.index[m] for m in members]
        return Poset._from_closed(members, self.leq[np.ix_(ids, ids)])

    def extend_plus(self) -> "PosetPlus":
        return PosetPlus(self)

    def extend_a1(self) -> "PosetA1":
        return PosetA1(self)

    def extend_a2(self, max_lower_sets: int = 4096) -> "PosetA2":
        return PosetA2(self, max_lower_sets)

    def __repr__(self) -> str:
        return f"Poset({len(self)} elements, {int(self.strict.sum())} strict pairs)"


class PosetPlus(Poset):
    """The base poset with one fresh maximal element adjoined above all."""

    def __init__(self, base: Poset):
        top = "1"
        while top in base.index:  # keep the conventional name unless taken
            top += "'"
        n = len(base)
        leq = np.zeros((n + 1, n + 1), dtype=bool)
        leq[:n, :n] = base.leq
        leq[:, n] = True
        elems = base.elements + (top,)
        self.elements = elems
        self.index = {e: i for i, e in enumerate(elems)}
        leq.flags.writeable = False
        self.leq = leq
        self.base = base
        self.top = top


class PosetA1(Poset):
    """Poset of comparable pairs (alpha, a) with a <= alpha, ordered
    componentwise: (beta, b) <= (alpha, a) iff beta <= alpha and b <= a."""

    def __init__(self, base: Poset):
        pairs = [
            (alpha, a)
            for alpha in sorted(base.elements, key=_sort_key)
            for a in sorted(base.elements_below(alpha), key=_sort_key)
        ]
        ai = np.array([base.index[alpha] for alpha, _ in pairs])
        bi = np.array([base.index[a] for _, a in pairs])
        leq = base.leq[np.ix_(ai, ai)] & base.leq[np.ix_(bi, bi)]
        leq.flags.writeable = False
        self.elements = tuple(pairs)
        self.index = {e: i for i, e in enumerate(pairs)}
        self.leq = leq
        self.base = base


class PosetA2:
    """Lazy view of the poset of pairs (alpha, B) with B a lower set inside
    the principal lower set of alpha.

    The number of such pairs is exponential in general, so nothing is stored;
    pairs are generated on demand under the configured cap, and the order
    predicate works on any two pairs without enumeration.
    """

    def __init__(self, base: Poset, max_lower_sets: int = 4096):
        self.base = base
        self.max_lower_sets = max_lower_sets

    def has_pair(self, alpha, B: LowerSet) -> bool:
        if alpha not in self.base.index:
            return False
        return B.members <= self.base.elements_below(alpha)

    def le(self, pair1, pair2) -> bool:
        """(beta, B1) <= (alpha, B2): beta <= alpha and B1 a subset of B2."""
        (beta, B1), (alpha, B2) = pair1, pair2
        m1 = B1.members if isinstance(B1, LowerSet) else frozenset(B1)
        m2 = B2.members if isinstance(B2, LowerSet) else frozenset(B2)
        return self.base.le(beta, alpha) and m1 <= m2

    def pairs(self) -> Iterator[tuple[Element, LowerSet]]:
        """Generate pairs (alpha, B), alpha in id order, B smallest first."""
        # the guard is on the full lower-set lattice of the base poset
        self.base.count_lower_sets(self.max_lower_sets)
        for alpha in sorted(self.base.elements, key=_sort_key):
            hat = self.base.restrict(
                sorted(self.base.elements_below(alpha), key=_sort_key)
            )
            for small in hat._iter_lower_member_sets(self.max_lower_sets):
                yield alpha, LowerSet(self.base, small)

    def materialize(self) -> Poset:
        """Concrete Poset of all pairs; ids are (alpha, frozenset)."""
        pairs = [(alpha, B.members) for alpha, B in self.pairs()]
        ids = [(alpha, frozenset(m)) for alpha, m in pairs]
        n = len(ids)
        leq = np.zeros((n, n), dtype=bool)
        for i, (alpha_i, mi) in enumerate(pairs):
            for j, (alpha_j, mj) in enumerate(pairs):
                leq[i, j] = self.base.le(alpha_i, alpha_j) and mi <= mj
        return Poset._from_closed(ids, leq)


# -- constructions and serialization --------------------------------------


def chain(n: int) -> Poset:
    """The chain 0 < 1 < ... < n-1."""
    return Poset(range(n), [(i, i + 1) for i in range(n - 1)])


def antichain(elements: Iterable[Element]) -> Poset:
    return Poset(elements, ())


def subset_id(names: Iterable[str]) -> str:
    """Canonical string id for a subset of variable names."""
    return "{" + ",".join(sorted(names, key=_sort_key)) + "}"


class PowerSetPoset(Poset):
    """Power set of a finite name set, ordered by inclusion.

    Element ids are canonical strings like ``{}``, ``{x}``, ``{x,y}``;
    ``member_sets`` maps each id back to its frozenset of names.
    """

    def __init__(self, names: Iterable[str]):
        names = list(dict.fromkeys(names))
        subsets = [frozenset()]
        for nm in names:
            subsets += [s | {nm} for s in subsets]
        subsets.sort(key=lambda s: (len(s), tuple(sorted(s, key=_sort_key))))
        ids = [subset_id(s) for s in subsets]
        n = len(ids)
        leq = np.zeros((n, n), dtype=bool)
        for i, si in enumerate(subsets):
            for j, sj in enumerate(subsets):
                leq[i, j] = si <= sj
        self.elements = tuple(ids)
        self.index = {e: i for i, e in enumerate(ids)}
        leq.flags.writeable = False
        self.leq = leq
        self.names = tuple(names)
        self.member_sets = dict(zip(ids, subsets))

    def id_of(self, subset: Iterable[str]) -> str:
        sid = subset_id(subset)
        if sid not in self.index:
            raise PosetError(f"{sid} is not a subset of {self.names}")
        return sid


def power_set(names: Iterable[str]) -> PowerSetPoset:
    return PowerSetPoset(names)


def poset_from_json(obj: dict) -> Poset:
    """Build a poset from its JSON form.

    Either ``{"elements": [...], "covers": [[b, a], ...]}`` with each cover
    pair meaning b < a, or ``{"power_set_of": ["i1", ...]}``.
    """
    if not isinstance(obj, dict):
        raise PosetError("poset spec must be an object")
    if "power_set_of" in obj:
        names = obj["power_set_of"]
        if not isinstance(names, list) or not all(
            isinstance(s, str) for s in names
        ):
            raise PosetError("power_set_of must be a list of strings")
        return power_set(names)
    if "elements" not in obj:
        raise PosetError("poset spec needs 'elements' or 'power_set_of'")
    elements = obj["elements"]
    if not isinstance(elements, list):
        raise PosetError("'elements' must be a list")
    covers = obj.get("covers", [])
    if not isinstance(covers, list):
        raise PosetError("'covers' must be a list of [below, above] pairs")
    for pair in covers:
        if not (isinstance(pair, list) and len(pair) == 2):
            raise PosetError(f"bad cover pair {pair!r}")
    return Poset(elements, [tuple(p) for p in covers])


def poset_to_json(p: Poset) -> dict:
    return {
        "elements": list(p.elements),
        "covers": [[b, a] for b, a in p.cover_pairs()],
    }
