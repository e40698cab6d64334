"""Diagrams of isometries over a poset and their decomposability.

A diagram assigns a fiber R^{d_a} to each poset element and an
inner-product-preserving map to each comparable pair, compatible with
composition.  Decomposability here means the whole diagram is isomorphic to
a direct sum of block functors, one block per element, switched on above
that element.  The route to the answer goes through the left coupling (the
images of all incoming maps inside one fiber), a pairwise projector check in
every fiber, and a per-fiber subspace decomposition.

There is no colimit shortcut to these constructions in the naive
vector-space sense: gluing two equal fibers along the identity and passing
to the quotient of the direct sum strictly shrinks norms, as the projection
onto the complement of the identified directions shows:

>>> import numpy as np
>>> v = np.array([3.0, 4.0])
>>> float(np.linalg.norm(v))
5.0
>>> glued = np.concatenate([v, np.zeros(2)])
>>> ident = np.vstack([np.eye(2), -np.eye(2)]) / np.sqrt(2)
>>> residual = glued - ident @ (ident.T @ glued)
>>> round(float(np.linalg.norm(residual)), 6)
3.535534

The embedded copy of v keeps only norm ‖v‖/√2, so the would-be connecting
map is a strict contraction rather than an isometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decomposition import (
    SubspaceFamily,
    decompose,
    interaction_subspaces,
)
from .posets import Element, LowerSet, Poset, PosetError
from .spaces import AmbientSpace, Subspace, Tolerance, join, subspace_eq


class DiagramError(ValueError):
    pass


def _opnorm(m: np.ndarray) -> float:
    # spectral norm with the empty-matrix case pinned to zero
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


class IsometryDiagram:
    """Fibers plus connecting isometries over a poset.

    Edges are supplied on covering pairs (extra comparable pairs are
    accepted); composites along chains are derived and cached on first
    validation.  Use edge(b, a) for the map from fiber b into fiber a.
    """

    def __init__(self, poset: Poset, dims: dict, edges: dict,
                 tol: Tolerance = Tolerance()):
        missing = [a for a in poset.elements if a not in dims]
        if missing:
            raise DiagramError(f"no dimension for node {missing[0]!r}")
        for a, d in dims.items():
            if a not in poset.index:
                raise DiagramError(f"dimension for unknown node {a!r}")
            if not (isinstance(d, (int, np.integer)) and d >= 0):
                raise DiagramError(f"bad dimension {d!r} for node {a!r}")
        clean = {}
        for (b, a), m in edges.items():
            if b not in poset.index or a not in poset.index:
                raise DiagramError(f"edge ({b!r}, {a!r}) uses unknown node")
            if not poset.le(b, a) or a == b:
                raise DiagramError(f"edge ({b!r}, {a!r}) is not b < a")
            m = np.asarray(m, dtype=float)
            if m.shape != (dims[a], dims[b]):
                raise DiagramError(
                    f"edge ({b!r}, {a!r}) must be {dims[a]}x{dims[b]}, "
                    f"got {m.shape}"
                )
            clean[(b, a)] = m
        self.poset = poset
        self.dims = dict(dims)
        self.raw_edges = clean
        self.tol = tol
        self._composites: dict | None = None
        self._fibers: dict = {}

    def fiber(self, a) -> AmbientSpace:
        if a not in self._fibers:
            self._fibers[a] = AmbientSpace(self.dims[a], tol=self.tol)
        return self._fibers[a]

    def edge(self, b, a) -> np.ndarray:
        """Connecting map fiber(b) -> fiber(a) for b <= a."""
        if a == b:
            return np.eye(self.dims[a])
        if self._composites is None:
            validate_diagram(self)
        return self._composites[(b, a)]

    def __repr__(self):
        return (
            f"IsometryDiagram({len(self.poset)} nodes, "
            f"dims {sorted(self.dims.values())})"
        )


def validate_diagram(d: IsometryDiagram) -> dict:
    """Fill in composite edges and check every invariant.

    Raises DiagramError on a missing covering edge, a non-isometric edge, a
    dimension drop, or inconsistent path composites (the offending triangle
    is named).  Returns a small report of the worst defects found.
    """
    p = d.poset
    for b, a in p.cover_pairs():
        if (b, a) not in d.raw_edges:
            raise DiagramError(f"missing covering edge ({b!r}, {a!r})")
    for b, a in d.raw_edges:
        if d.dims[b] > d.dims[a]:
            raise DiagramError(
                f"dimension drops along ({b!r}, {a!r}): "
                f"{d.dims[b]} > {d.dims[a]}"
            )

    comp = dict(d.raw_edges)
    for a in p.linear_extension():
        children = [
            p.elements[i] for i in np.flatnonzero(p.covers[:, p.index[a]])
        ]
        for b in sorted(p.elements_below(a) - {a}, key=str):
            if (b, a) in comp:
                continue
            for m in children:
                if p.le(b, m):
                    comp[(b, a)] = comp[(m, a)] @ comp[(b, m)]
                    break
            else:
                raise DiagramError(f"no path from {b!r} to {a!r}")

    iso_defect = 0.0
    for (b, a), m in comp.items():
        defect = _opnorm(m.T @ m - np.eye(d.dims[b]))
        iso_defect = max(iso_defect, defect)
        if defect > d.tol.orth:
            raise DiagramError(
                f"edge ({b!r}, {a!r}) is not an isometry "
                f"(defect {defect:.2e})"
            )

    fun_defect = 0.0
    for (c, b) in comp:
        for a in p.elements:
            if p.le(b, a) and a != b:
                gap = _opnorm(comp[(b, a)] @ comp[(c, b)] - comp[(c, a)])
                fun_defect = max(fun_defect, gap)
                if gap > d.tol.eq:
                    raise DiagramError(
                        f"inconsistent composites on triangle "
                        f"({c!r} <= {b!r} <= {a!r}), gap {gap:.2e}"
                    )

    d._composites = comp
    return {
        "nodes": len(p),
        "edges": len(comp),
        "max_isometry_defect": iso_defect,
        "max_functoriality_defect": fun_defect,
    }


class LeftCoupling:
    """Images of all incoming maps, organized per fiber.

    subspace(alpha, a) is the copy of fiber a sitting inside fiber alpha
    (the column span of the connecting map); it grows with a and fills the
    fiber at a = alpha.
    """

    def __init__(self, base: IsometryDiagram):
        if base._composites is None:
            validate_diagram(base)
        self.base = base
        self._cache: dict = {}

    def subspace(self, alpha, a) -> Subspace:
        if not self.base.poset.le(a, alpha):
            raise DiagramError(f"{a!r} is not below {alpha!r}")
        key = (alpha, a)
        if key not in self._cache:
            fib = self.base.fiber(alpha)
            if a == alpha:
                self._cache[key] = fib.full_subspace()
            else:
                # edge columns are orthonormal, hence already a frame
                self._cache[key] = Subspace(fib, self.base.edge(a, alpha))
        return self._cache[key]

    def map_between(self, beta, alpha) -> np.ndarray:
        """Matrix of the connecting map used to transport couplings."""
        return self.base.edge(beta, alpha)


def left_coupling(d: IsometryDiagram) -> LeftCoupling:
    return LeftCoupling(d)


class A2Extension:
    """Joins of coupling subspaces over lower sets: one subspace per
    (fiber, lower set inside that fiber's principal set)."""

    def __init__(self, lc: LeftCoupling):
        self.coupling = lc
        self._cache: dict = {}

    def subspace(self, alpha, B) -> Subspace:
        p = self.coupling.base.poset
        members = B.members if isinstance(B, LowerSet) else frozenset(B)
        LowerSet(p, members)  # validates downward closure
        if not members <= p.elements_below(alpha):
            raise DiagramError(
                f"lower set is not inside the principal set of {alpha!r}"
            )
        key = (alpha, members)
        if key not in self._cache:
            if not members:
                sub = self.coupling.base.fiber(alpha).zero_subspace()
            else:
                sub = join(
                    [self.coupling.subspace(alpha, b) for b in members]
                )
            self._cache[key] = sub
        return self._cache[key]


def extend_a2(lc: LeftCoupling) -> A2Extension:
    return A2Extension(lc)


@dataclass
class FunctorIntersectionReport:
    """Pairwise projector check in every fiber; witnesses are
    (alpha, a, b, gap), largest gap first."""

    holds: bool
    witnesses: list = field(default_factory=list)

    def __post_init__(self):
        assert self.holds == (not self.witnesses)

    @property
    def max_gap(self) -> float:
        return max((w[-1] for w in self.witnesses), default=0.0)


def check_intersection_property_functor(d: IsometryDiagram) -> FunctorIntersectionReport:
    """In each fiber alpha, compare the projector onto the joined coupling
    over a-hat ∩ b-hat with the product of the two coupling projectors."""
    lc = left_coupling(d)
    ext = extend_a2(lc)
    p = d.poset
    witnesses = []
    for alpha in p.elements:
        fib = d.fiber(alpha)
        below = sorted(p.elements_below(alpha), key=str)
        proj = {a: lc.subspace(alpha, a).projector().matrix for a in below}
        for i in range(len(below)):
            for j in range(i + 1, len(below)):
                a, b = below[i], below[j]
                cap = p.elements_below(a) & p.elements_below(b)
                target = ext.subspace(alpha, cap).projector().matrix
                gap = fib.op_norm(target - proj[a] @ proj[b])
                if gap > d.tol.proj:
                    witnesses.append((alpha, a, b, gap))
    witnesses.sort(key=lambda w: (-w[3], str(w[0]), str(w[1]), str(w[2])))
    return FunctorIntersectionReport(holds=not witnesses, witnesses=witnesses)


class Predecomposition:
    """Per-fiber interaction pieces of the left coupling.

    piece(c, alpha, a) is the c-indexed piece inside fiber alpha when
    c <= a, and the zero subspace otherwise; projection(c, alpha, a) is the
    corresponding projector matrix on the fiber.  Always defined, whether or
    not the diagram decomposes.
    """

    def __init__(self, d: IsometryDiagram):
        lc = left_coupling(d)
        self.base = d
        self.coupling = lc
        p = d.poset
        self._fiber_pieces: dict = {}
        for alpha in p.elements:
            below = sorted(p.elements_below(alpha), key=str)
            sub = p.restrict(below)
            fam = SubspaceFamily(
                sub, d.fiber(alpha), {a: lc.subspace(alpha, a) for a in below}
            )
            pieces = interaction_subspaces(fam)
            self._fiber_pieces[alpha] = {c: pieces[c] for c in below}

    def piece(self, c, alpha, a) -> Subspace:
        p = self.base.poset
        if not p.le(a, alpha):
            raise DiagramError(f"{a!r} is not below {alpha!r}")
        if p.le(c, a):
            return self._fiber_pieces[alpha][c]
        return self.base.fiber(alpha).zero_subspace()

    def projection(self, c, alpha, a) -> np.ndarray:
        return self.piece(c, alpha, a).projector().matrix

    def diagonal(self, c, a) -> Subspace:
        """The piece at the diagonal node (a, a)."""
        return self.piece(c, a, a)

    def connecting_defects(self) -> list:
        """Check that transport carries pieces into pieces isometrically.

        For (beta, b) <= (alpha, a) and c <= b, the connecting map must
        send the piece at (beta, b) into the piece at (alpha, a) without
        changing norms.  This holds for every valid diagram, decomposable
        or not, so a nonempty result signals a numerical problem.
        """
        p = self.base.poset
        a1 = p.extend_a1()
        out = []
        for (beta, b) in a1.elements:
            for (alpha, a) in a1.elements:
                if not a1.le((beta, b), (alpha, a)):
                    continue
                m = self.base.edge(beta, alpha)
                for c in p.elements_below(b):
                    frame = self.piece(c, beta, b).frame
                    if frame.shape[1] == 0:
                        continue
                    moved = m @ frame
                    target = self.projection(c, alpha, a)
                    gap = _opnorm(moved - target @ moved)
                    if gap > self.base.tol.eq:
                        out.append(((beta, b), (alpha, a), c, gap))
        out.sort(key=lambda w: -w[-1])
        return out

    def naturality_defects(self) -> list:
        """Measure the commuting square: transport then project against
        project then transport, across every comparable pair of the pair
        poset.

        The squares close when the coupling families decompose (the
        pairwise projector check holds below each node); outside that
        regime the cross-index squares can fail, and the returned defects
        quantify by how much.
        """
        p = self.base.poset
        a1 = p.extend_a1()
        out = []
        for (beta, b) in a1.elements:
            for (alpha, a) in a1.elements:
                if not a1.le((beta, b), (alpha, a)):
                    continue
                m = self.base.edge(beta, alpha)
                dom = self.coupling.subspace(beta, b).frame
                for c in p.elements_below(a):
                    lhs = m @ self.projection(c, beta, b) @ dom
                    rhs = self.projection(c, alpha, a) @ m @ dom
                    gap = _opnorm(lhs - rhs) if dom.size else 0.0
                    if gap > self.base.tol.eq:
                        out.append(((beta, b), (alpha, a), c, gap))
        out.sort(key=lambda w: -w[-1])
        return out


def predecomposition(d: IsometryDiagram) -> Predecomposition:
    return Predecomposition(d)


@dataclass
class FunctorDecomposition:
    """Blocks V_c per node plus the orthogonal connectors between them and
    the per-node change of basis onto the stacked blocks."""

    poset: Poset
    piece_dims: dict
    diagonal: dict           # c -> {a: Subspace V_c(a)} for a >= c
    connect: dict            # c -> {(b, a): orthogonal n_c x n_c matrix}
    natural_iso: dict        # a -> square orthogonal matrix phi_a
    block_order: list        # global element order used for stacking

    def blocks_at(self, a) -> list:
        p = self.poset
        return [c for c in self.block_order if p.le(c, a)]


@dataclass
class FunctorDecompositionResult:
    report: FunctorIntersectionReport
    decomposition: FunctorDecomposition | None = None
    problem: str | None = None

    @property
    def ok(self) -> bool:
        return self.decomposition is not None


def decompose_functor(d: IsometryDiagram) -> FunctorDecompositionResult:
    """Decide diagram decomposability and assemble the block structure.

    On success every fiber splits orthogonally into pieces indexed by the
    elements below it, connectors between same-indexed pieces are orthogonal
    matrices, and the stacked bases give natural isometric isomorphisms.
    Failure is a value carrying the witness report.
    """
    report = check_intersection_property_functor(d)
    if not report.holds:
        return FunctorDecompositionResult(report=report)

    p = d.poset
    order = p.linear_extension()
    lc = left_coupling(d)
    diagonal: dict = {c: {} for c in p.elements}
    for a in p.elements:
        below = sorted(p.elements_below(a), key=str)
        sub = p.restrict(below)
        fam = SubspaceFamily(
            sub, d.fiber(a), {c: lc.subspace(a, c) for c in below}
        )
        res = decompose(fam)
        if not res.ok:
            return FunctorDecompositionResult(
                report=report,
                problem=f"fiber at {a!r} failed to split: "
                        f"defects {res.orthogonality_defects[:1]}",
            )
        for c in below:
            diagonal[c][a] = res.decomposition.pieces[c]

    piece_dims = {}
    for c in p.elements:
        dims_seen = {a: s.dim for a, s in diagonal[c].items()}
        piece_dims[c] = dims_seen[c]
        bad = {a: k for a, k in dims_seen.items() if k != piece_dims[c]}
        if bad:
            return FunctorDecompositionResult(
                report=report,
                problem=f"piece {c!r} changes dimension across nodes: {bad}",
            )

    connect: dict = {c: {} for c in p.elements}
    for c in p.elements:
        for b in p.elements:
            for a in p.elements:
                if p.le(c, b) and p.le(b, a) and b != a:
                    w = (
                        diagonal[c][a].frame.T
                        @ d.edge(b, a)
                        @ diagonal[c][b].frame
                    )
                    defect = _opnorm(w.T @ w - np.eye(w.shape[1])) if w.size else 0.0
                    if defect > 1e2 * d.tol.orth:
                        return FunctorDecompositionResult(
                            report=report,
                            problem=f"connector for piece {c!r} along "
                                    f"({b!r}, {a!r}) is not orthogonal "
                                    f"(defect {defect:.2e})",
                        )
                    connect[c][(b, a)] = w

    natural_iso = {}
    for a in p.elements:
        blocks = [c for c in order if p.le(c, a)]
        rows = [diagonal[c][a].frame.T for c in blocks]
        phi = np.vstack(rows) if rows else np.zeros((0, d.dims[a]))
        if phi.shape[0] != d.dims[a]:
            return FunctorDecompositionResult(
                report=report,
                problem=f"pieces at {a!r} have total dimension "
                        f"{phi.shape[0]} != fiber dimension {d.dims[a]}",
            )
        defect = _opnorm(phi.T @ phi - np.eye(d.dims[a]))
        if defect > 1e2 * d.tol.orth:
            return FunctorDecompositionResult(
                report=report,
                problem=f"stacked basis at {a!r} is not orthogonal "
                        f"(defect {defect:.2e})",
            )
        natural_iso[a] = phi

    fd = FunctorDecomposition(
        poset=p,
        piece_dims=piece_dims,
        diagonal=diagonal,
        connect=connect,
        natural_iso=natural_iso,
        block_order=list(order),
    )
    return FunctorDecompositionResult(report=report, decomposition=fd)


def naturality_defect(d: IsometryDiagram, fd: FunctorDecomposition) -> float:
    """Worst gap in phi_a ∘ edge(b,a) = block-inclusion ∘ phi_b."""
    p = d.poset
    worst = 0.0
    for b in p.elements:
        for a in p.elements:
            if not p.le(b, a) or a == b:
                continue
            blocks_a = fd.blocks_at(a)
            blocks_b = fd.blocks_at(b)
            rows = sum(fd.piece_dims[c] for c in blocks_a)
            cols = sum(fd.piece_dims[c] for c in blocks_b)
            incl = np.zeros((rows, cols))
            r = 0
            offsets_b = {}
            cpos = 0
            for c in blocks_b:
                offsets_b[c] = cpos
                cpos += fd.piece_dims[c]
            for c in blocks_a:
                k = fd.piece_dims[c]
                if c in offsets_b and k:
                    w = fd.connect[c][(b, a)]
                    incl[r : r + k, offsets_b[c] : offsets_b[c] + k] = w
                r += k
            gap = _opnorm(
                fd.natural_iso[a] @ d.edge(b, a) - incl @ fd.natural_iso[b]
            )
            worst = max(worst, gap)
    return worst


def embed_into_ambient(fd: FunctorDecomposition) -> SubspaceFamily:
    """Realize the blocks as coordinate slices of one ambient space.

    Node a maps to the span of the coordinate blocks indexed below a; the
    resulting family always satisfies the intersection property and its
    interaction pieces have the block dimensions.
    """
    total = sum(fd.piece_dims.values())
    amb = AmbientSpace(total)
    offsets = {}
    pos = 0
    for c in fd.block_order:
        offsets[c] = pos
        pos += fd.piece_dims[c]
    eye = np.eye(total)
    assign = {}
    for a in fd.poset.elements:
        cols = []
        for c in fd.blocks_at(a):
            k = fd.piece_dims[c]
            cols.append(eye[:, offsets[c] : offsets[c] + k])
        frame = np.hstack(cols) if cols else np.zeros((total, 0))
        assign[a] = Subspace(amb, frame)
    return SubspaceFamily(fd.poset, amb, assign)


# -- constructions ---------------------------------------------------------


def diagram_from_pieces(poset: Poset, piece_dims: dict,
                        mixers: dict | None = None) -> IsometryDiagram:
    """The direct-sum diagram with given block sizes, optionally conjugated
    by per-node orthogonal matrices.

    Fiber a stacks the blocks of every element below a; the edge from b
    into a places b's blocks at their positions among a's and fills the
    rest with zeros.  This is the synthesis direction of the diagram
    decomposition theorem, so the result always decomposes, with these
    blocks as pieces.
    """
    order = poset.linear_extension()
    dims = {}
    offsets = {}
    for a in poset.elements:
        blocks = [c for c in order if poset.le(c, a)]
        pos = 0
        offs = {}
        for c in blocks:
            offs[c] = pos
            pos += piece_dims[c]
        offsets[a] = offs
        dims[a] = pos
    edges = {}
    for b, a in poset.cover_pairs():
        m = np.zeros((dims[a], dims[b]))
        for c, off_b in offsets[b].items():
            k = piece_dims[c]
            off_a = offsets[a][c]
            m[off_a : off_a + k, off_b : off_b + k] = np.eye(k)
        if mixers:
            m = mixers[a] @ m @ mixers[b].T
        edges[(b, a)] = m
    return IsometryDiagram(poset, dims, edges)


def diagram_from_family(fam: SubspaceFamily) -> IsometryDiagram:
    """View a monotone subspace family as a diagram of inclusions.

    Fibers are the members in their own frames; the edge from b into a is
    the coordinate expression of the inclusion H_b into H_a.  Couplings of
    the result mirror the family, so diagram decomposability matches family
    decomposability restricted below each node.
    """
    p = fam.poset
    amb = fam.ambient
    gram = np.eye(amb.dim) if amb.gram is None else amb.gram
    dims = {a: fam.assign[a].dim for a in p.elements}
    edges = {}
    for b, a in p.cover_pairs():
        fa = fam.assign[a].frame
        fb = fam.assign[b].frame
        edges[(b, a)] = fa.T @ gram @ fb
    return IsometryDiagram(p, dims, edges, tol=amb.tol)
