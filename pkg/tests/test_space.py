import numpy as np
import pytest

from drconformal.algebra import FAMILIES, catalog
from drconformal.errors import BasisNotAligned, DimensionMismatch, NonFinitePoint
from drconformal.space import A_LIMIT, check_aligned, extend_solvable, s0_subframe
from drconformal.algebra import build_algebra
from drconformal.tensor import CoordinateVectorField, conformal_defect, partials


def multiply(space, p, q):
    """Group law on coordinates (v, z, a)."""
    k, m = space.k, space.m
    v, z, a = p[:k], p[k:k + m], p[-1]
    w, y, b = q[:k], q[k:k + m], q[-1]
    br = np.einsum("rij,i,j->r", space.alg.structure, v, w)
    return np.concatenate([v + np.exp(a / 2) * w,
                           z + np.exp(a) * y + 0.5 * np.exp(a / 2) * br, [a + b]])


def spaces():
    return [extend_solvable(catalog(f)) for f in FAMILIES]


@pytest.mark.parametrize("space", spaces(), ids=FAMILIES)
def test_frame_is_orthonormal(space, rng):
    for p in rng.uniform(-1, 1, size=(100, space.dim)):
        f = space.frame_at(p)
        assert np.allclose(f.T @ space.metric_at(p) @ f, np.eye(space.dim), atol=1e-12)
        assert np.allclose(space.frame_inverse_at(p) @ f, np.eye(space.dim), atol=1e-12)


@pytest.mark.parametrize("space", spaces()[:3], ids=FAMILIES[:3])
def test_frame_is_left_invariant(space, rng):
    for _ in range(10):
        p, q = rng.uniform(-1, 1, size=(2, space.dim))
        dl = partials(lambda x: multiply(space, q, x), p).T
        assert np.allclose(dl @ space.frame_at(p), space.frame_at(multiply(space, q, p)), atol=1e-9)


def test_frame_at_identity(heis):
    assert np.allclose(heis.frame_at(np.zeros(4)), np.eye(4))


@pytest.mark.parametrize("space", spaces()[:3], ids=FAMILIES[:3])
def test_frame_brackets_match_structure_constants(space, rng):
    """[E_i, E_j] computed from coordinate derivatives equals sum_k c_ij^k E_k."""
    n = space.dim
    c = space.bracket_table()
    for p in rng.uniform(-1, 1, size=(3, n)):
        f = space.frame_at(p)
        df = partials(space.frame_at, p)  # df[l, mu, i] = d_l F[mu, i]
        for i in range(n):
            for j in range(n):
                lie = np.einsum("l,lm->m", f[:, i], df[:, :, j]) - np.einsum("l,lm->m", f[:, j], df[:, :, i])
                assert np.allclose(lie, f @ c[i, j], atol=1e-9)


def test_solvable_brackets(heis):
    e = np.eye(4)
    assert np.allclose(heis.bracket(e[3], e[0]), 0.5 * e[0])
    assert np.allclose(heis.bracket(e[3], e[2]), e[2])
    assert np.allclose(heis.bracket(e[0], e[1]), e[2])
    assert np.allclose(heis.bracket(e[0], e[0]), 0)


@pytest.mark.parametrize("space", spaces()[:3], ids=FAMILIES[:3])
def test_right_invariant_fields_are_killing(space, rng):
    for i in range(space.dim):
        comp, jac = space.right_invariant(i)
        xi = CoordinateVectorField(space.dim, comp, jac)
        for p in rng.uniform(-1, 1, size=(5, space.dim)):
            d = conformal_defect(space.metric_at, xi, p)
            assert abs(d.rho) < 1e-9 and d.tracefree_norm < 1e-9
            assert np.allclose(jac(p), partials(comp, p).T, atol=1e-9)


def test_right_invariant_fields_generate_right_translations(heis, rng):
    """d/dt p * exp(t X) at t = 0 equals the right-invariant field X at p."""
    p = rng.uniform(-1, 1, size=4)
    for i in range(4):
        e = np.eye(4)[i]
        # one-parameter subgroups through the identity: first order suffices
        d = partials(lambda t: multiply(heis, t[0] * e, p), np.zeros(1))[0]
        assert np.allclose(d, heis.right_invariant(i)[0](p), atol=1e-9)


def test_metric_is_positive_definite(cliff, rng):
    for p in rng.uniform(-3, 3, size=(50, cliff.dim)):
        g = cliff.metric_at(p)
        assert np.allclose(g, g.T)
        assert np.linalg.eigvalsh(g).min() > 0


def test_labels(heis, cliff):
    assert heis.labels() == ["v1", "v2", "z1", "a"]
    assert cliff.labels()[-1] == "a" and len(cliff.labels()) == 7


def test_point_validation(heis):
    with pytest.raises(DimensionMismatch):
        heis.frame_at(np.zeros(3))
    with pytest.raises(NonFinitePoint):
        heis.metric_at(np.array([0, np.nan, 0, 0]))
    with pytest.raises(NonFinitePoint):
        heis.frame_at(np.array([0, 0, 0, A_LIMIT + 1]))


def test_s0_subframe(heis, cliff):
    assert s0_subframe(heis).indices == (0, 1, 2, 3)
    assert s0_subframe(cliff).indices == (0, 1, 4, 6)


def test_unaligned_basis_rejected():
    j = np.array([[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)
    space = extend_solvable(build_algebra([j]))
    with pytest.raises(BasisNotAligned):
        check_aligned(space)


def test_to_frame(heis, rng):
    p = rng.uniform(-1, 1, size=4)
    assert np.allclose(heis.to_frame(heis.metric_at(p), p), np.eye(4))
