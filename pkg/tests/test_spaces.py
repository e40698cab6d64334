import numpy as np
import pytest

from interdecomp.spaces import (
    AmbientSpace,
    Projector,
    Subspace,
    Tolerance,
    contains,
    intersect,
    join,
    matrix_from_json,
    matrix_to_json,
    max_ambient_dim,
    span,
    subspace_eq,
)

from builders import random_subspace


def e(n, i):
    v = np.zeros((n, 1))
    v[i, 0] = 1.0
    return v


# -- Tolerance and ambient -------------------------------------------------


def test_tolerance_positive():
    with pytest.raises(ValueError):
        Tolerance(rank=0.0)
    with pytest.raises(ValueError):
        Tolerance(proj=-1e-9)


def test_ambient_rejects_indefinite_gram():
    with pytest.raises(ValueError, match="positive definite"):
        AmbientSpace(2, gram=np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_ambient_rejects_asymmetric_gram():
    with pytest.raises(ValueError, match="symmetric"):
        AmbientSpace(2, gram=np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_ambient_dim_cap_env(monkeypatch):
    monkeypatch.setenv("ID_MAX_DIM", "8")
    assert max_ambient_dim() == 8
    with pytest.raises(ValueError, match="cap"):
        AmbientSpace(9)
    monkeypatch.setenv("ID_MAX_DIM", "junk")
    with pytest.raises(ValueError):
        max_ambient_dim()


# -- span ------------------------------------------------------------------


def test_span_collinear():
    amb = AmbientSpace(2)
    s = span(amb, np.hstack([e(2, 0), 2 * e(2, 0)]))
    assert s.dim == 1
    assert subspace_eq(s, span(amb, e(2, 0)))


def test_span_identity_is_whole():
    amb = AmbientSpace(3)
    assert span(amb, np.eye(3)).dim == 3


def test_span_normalizes():
    amb = AmbientSpace(2)
    s = span(amb, np.array([[1.0], [1.0]]))
    expect = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
    # frame is unique up to sign here
    got = s.frame * np.sign(s.frame[0, 0])
    assert np.allclose(got, expect, atol=1e-14)


def test_span_zero_generators():
    amb = AmbientSpace(3)
    assert span(amb, np.zeros((3, 2))).dim == 0


def test_span_dimension_mismatch():
    amb = AmbientSpace(3)
    with pytest.raises(ValueError):
        span(amb, np.zeros((2, 1)))


# -- projector -------------------------------------------------------------


def test_projector_line():
    amb = AmbientSpace(2)
    p = span(amb, e(2, 0)).projector()
    assert np.allclose(p.matrix, np.diag([1.0, 0.0]))


def test_projector_whole_space():
    amb = AmbientSpace(4)
    p = amb.full_subspace().projector()
    assert np.allclose(p.matrix, np.eye(4))


def test_projector_diagonal_line():
    amb = AmbientSpace(2)
    p = span(amb, np.array([[1.0], [1.0]])).projector()
    assert np.allclose(p.matrix, np.full((2, 2), 0.5))


def test_projector_idempotent_selfadjoint_random():
    rng = np.random.default_rng(2)
    amb = AmbientSpace(8)
    for _ in range(25):
        s = random_subspace(amb, int(rng.integers(0, 9)), rng)
        p = s.projector()
        assert p.idempotency_defect() <= amb.tol.proj
        assert p.adjoint_defect() <= amb.tol.proj


def test_projector_with_gram_is_gram_selfadjoint():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((5, 5))
    gram = g @ g.T + 5 * np.eye(5)
    amb = AmbientSpace(5, gram=gram)
    for _ in range(10):
        s = random_subspace(amb, int(rng.integers(1, 5)), rng)
        p = s.projector()
        assert p.idempotency_defect() <= amb.tol.proj
        assert p.adjoint_defect() <= 1e-7 * np.linalg.norm(gram, 2)
        # image really is s
        v = rng.standard_normal(5)
        assert s.contains_vector(p.apply(v))


# -- join / complement / intersect ----------------------------------------


def test_join_spans_plane():
    amb = AmbientSpace(2)
    j = join([span(amb, e(2, 0)), span(amb, e(2, 1))])
    assert j.dim == 2


def test_join_idempotent():
    amb = AmbientSpace(3)
    s = span(amb, np.array([[1.0], [0.5], [-2.0]]))
    assert subspace_eq(join([s]), s)


def test_join_oblique():
    amb = AmbientSpace(2)
    j = join([span(amb, e(2, 0)), span(amb, np.array([[1.0], [1.0]]))])
    assert j.dim == 2


def test_complement_whole_is_zero():
    amb = AmbientSpace(3)
    assert amb.full_subspace().complement().dim == 0


def test_complement_line():
    amb = AmbientSpace(3)
    c = span(amb, e(3, 0)).complement()
    assert c.dim == 2
    assert contains(c, span(amb, e(3, 1)))
    assert contains(c, span(amb, e(3, 2)))


def test_complement_weighted_gram_diagonal():
    # gram diag(1,2): e1 and e2 stay orthogonal, so the complement of
    # span(e1) is still span(e2)
    amb = AmbientSpace(2, gram=np.diag([1.0, 2.0]))
    c = span(amb, e(2, 0)).complement()
    assert c.dim == 1
    assert subspace_eq(c, span(amb, e(2, 1)))


def test_complement_weighted_gram_off_diagonal():
    gram = np.array([[2.0, 1.0], [1.0, 2.0]])
    amb = AmbientSpace(2, gram=gram)
    s = span(amb, e(2, 0))
    c = s.complement()
    v = c.frame[:, 0]
    assert abs(amb.inner(np.array([1.0, 0.0]), v)) <= 1e-12
    p_s = s.projector().matrix
    p_c = c.projector().matrix
    assert np.allclose(p_s + p_c, np.eye(2), atol=amb.tol.eq)


def test_intersect_self():
    amb = AmbientSpace(3)
    rng = np.random.default_rng(9)
    s = random_subspace(amb, 2, rng)
    assert subspace_eq(intersect(s, s), s)


def test_intersect_orthogonal_lines():
    amb = AmbientSpace(2)
    assert intersect(span(amb, e(2, 0)), span(amb, e(2, 1))).dim == 0


def test_intersect_planes_in_r3():
    amb = AmbientSpace(3)
    a = span(amb, np.hstack([e(3, 0), e(3, 1)]))
    b = span(amb, np.hstack([e(3, 1), e(3, 2)]))
    got = intersect(a, b)
    assert got.dim == 1
    assert subspace_eq(got, span(amb, e(3, 1)))


def test_intersect_contained_in_both_and_largest():
    rng = np.random.default_rng(17)
    amb = AmbientSpace(6)
    for _ in range(20):
        a = random_subspace(amb, int(rng.integers(0, 7)), rng)
        b = random_subspace(amb, int(rng.integers(0, 7)), rng)
        cap = intersect(a, b)
        assert contains(a, cap)
        assert contains(b, cap)
        # any vector in both lies in the intersection
        if cap.dim < min(a.dim, b.dim):
            continue
        if cap.dim:
            v = cap.frame @ rng.standard_normal(cap.dim)
            assert cap.contains_vector(
                a.projector().apply(b.projector().apply(v))
            )


def test_join_intersect_monotone():
    rng = np.random.default_rng(21)
    amb = AmbientSpace(6)
    for _ in range(10):
        a = random_subspace(amb, 2, rng)
        extra = random_subspace(amb, 1, rng)
        a_big = join([a, extra])
        b = random_subspace(amb, 3, rng)
        assert contains(join([a_big, b]), join([a, b]))
        assert contains(intersect(a_big, b), intersect(a, b))


def test_generic_dimension_formula():
    # dim(join) + dim(intersect) = dim a + dim b for generic pairs
    rng = np.random.default_rng(31)
    amb = AmbientSpace(7)
    for _ in range(20):
        da = int(rng.integers(0, 8))
        db = int(rng.integers(0, 8))
        a = random_subspace(amb, da, rng)
        b = random_subspace(amb, db, rng)
        j = join([a, b]).dim
        c = intersect(a, b).dim
        assert j + c == da + db
        assert j == min(7, da + db)


# -- equality and containment ---------------------------------------------


def test_eq_scaled_generators():
    amb = AmbientSpace(2)
    assert subspace_eq(span(amb, e(2, 0)), span(amb, 2 * e(2, 0)))


def test_contains_whole_line():
    amb = AmbientSpace(2)
    assert contains(amb.full_subspace(), span(amb, e(2, 0)))
    assert not contains(span(amb, e(2, 0)), amb.full_subspace())


def test_eq_tiny_perturbation():
    amb = AmbientSpace(2)
    a = span(amb, e(2, 0))
    b = span(amb, np.array([[1.0], [1e-12]]))
    assert subspace_eq(a, b)  # below default eq tolerance
    c = span(amb, np.array([[1.0], [1e-4]]))
    assert not subspace_eq(a, c)


def test_ambient_mismatch_errors():
    a = span(AmbientSpace(2), e(2, 0))
    b = span(AmbientSpace(3), e(3, 0))
    with pytest.raises(ValueError):
        subspace_eq(a, b)
    with pytest.raises(ValueError):
        join([a, b])
    with pytest.raises(ValueError):
        intersect(a, b)


def test_subspace_rejects_non_orthonormal_frame():
    amb = AmbientSpace(2)
    with pytest.raises(ValueError, match="orthonormal"):
        Subspace(amb, np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_frame_orthonormality_invariant():
    rng = np.random.default_rng(37)
    amb = AmbientSpace(8)
    for _ in range(20):
        s = random_subspace(amb, int(rng.integers(1, 9)), rng)
        defect = np.abs(s.frame.T @ s.frame - np.eye(s.dim)).max()
        assert defect <= amb.tol.orth


# -- serialization ---------------------------------------------------------


def test_matrix_json_round_trip():
    rng = np.random.default_rng(43)
    m = rng.standard_normal((3, 5))
    back = matrix_from_json(matrix_to_json(m))
    assert np.array_equal(back, m)


def test_matrix_json_errors():
    with pytest.raises(ValueError):
        matrix_from_json({"dim": [2, 2], "data": [1.0]})
    with pytest.raises(ValueError):
        matrix_from_json([1, 2, 3])


def test_frame_json_reload_reorthonormalizes():
    rng = np.random.default_rng(47)
    amb = AmbientSpace(5)
    s = random_subspace(amb, 3, rng)
    blob = matrix_to_json(s.frame)
    loaded = span(amb, matrix_from_json(blob))
    assert subspace_eq(loaded, s)


def test_projector_shape_guard():
    amb = AmbientSpace(3)
    with pytest.raises(ValueError):
        Projector(amb, np.zeros((2, 2)))
