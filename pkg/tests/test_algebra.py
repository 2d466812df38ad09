import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drconformal import algebra as A
from drconformal.errors import CliffordViolation, DimensionMismatch, NotSkew, NotUnit, UnsupportedFamily

DIMS = {"heisenberg": (2, 1), "clifford2": (4, 2), "quaternionic": (4, 3), "octonionic": (8, 7)}


def unit(rng, n):
    x = rng.normal(size=n)
    return x / np.linalg.norm(x)


@pytest.mark.parametrize("family", A.FAMILIES)
@pytest.mark.parametrize("mult", [1, 2])
def test_catalog_dimensions(family, mult):
    alg = A.catalog(family, mult)
    k, m = DIMS[family]
    assert (alg.k, alg.m) == (mult * k, m)


@pytest.mark.parametrize("family", A.FAMILIES)
def test_unit_j_squares_to_minus_identity(family, rng):
    alg = A.catalog(family)
    for _ in range(50):
        jz = alg.j(unit(rng, alg.m))
        x = rng.normal(size=alg.k)
        assert np.linalg.norm(jz @ jz @ x + x) / np.linalg.norm(x) < 1e-12


@pytest.mark.parametrize("family", A.FAMILIES)
def test_polarized_clifford_relation(family):
    alg = A.catalog(family)
    eye = np.eye(alg.k)
    for r in range(alg.m):
        for s in range(alg.m):
            anti = alg.j_maps[r] @ alg.j_maps[s] + alg.j_maps[s] @ alg.j_maps[r]
            assert np.allclose(anti, -2 * (r == s) * eye, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(A.FAMILIES), st.integers(0, 2**32 - 1))
def test_bracket_defines_j(family, seed):
    alg = A.catalog(family)
    rng = np.random.default_rng(seed)
    z, x, w = rng.normal(size=alg.m), rng.normal(size=alg.k), rng.normal(size=alg.k)
    assert abs((alg.j(z) @ x) @ w - z @ A.bracket_v(alg, x, w)) < 1e-12
    # the bracket is skew
    assert np.allclose(A.bracket_v(alg, x, w), -A.bracket_v(alg, w, x), atol=1e-14)


def test_bracket_on_full_vectors_matches_v_bracket(rng):
    alg = A.catalog("clifford2")
    x, w = rng.normal(size=alg.k), rng.normal(size=alg.k)
    pad = np.zeros(alg.m)
    full = alg.bracket(np.concatenate([x, pad]), np.concatenate([w, pad]))
    assert np.allclose(full[alg.k:], A.bracket_v(alg, x, w))
    assert np.allclose(full[:alg.k], 0)


def test_symmetric_map_rejected():
    with pytest.raises(NotSkew):
        A.build_algebra([[[0, 1], [1, 0]]])


def test_non_clifford_rejected():
    with pytest.raises(CliffordViolation):
        A.build_algebra([[[0, 2], [-2, 0]]])


def test_anticommutation_failure_rejected():
    j = np.array([[0, -1], [1, 0]], dtype=float)
    with pytest.raises(CliffordViolation):
        A.build_algebra([j, j])


def test_unknown_family():
    with pytest.raises(UnsupportedFamily):
        A.catalog("sedenion")


@pytest.mark.parametrize("family", A.FAMILIES)
def test_kernel_of_ad(family, rng):
    alg = A.catalog(family, 2)
    v = unit(rng, alg.k)
    kernel, jzv = A.kernel_ad(alg, v)
    assert kernel.shape[1] == alg.k - alg.m
    assert jzv.shape[1] == alg.m
    assert np.allclose(A.ad_matrix(alg, v) @ kernel, 0, atol=1e-12)
    # V itself lies in the kernel; J_Z V is orthogonal to it
    assert np.linalg.norm(kernel @ (kernel.T @ v) - v) < 1e-12
    assert np.allclose(kernel.T @ jzv, 0, atol=1e-12)


def test_kernel_requires_unit_vector():
    with pytest.raises(NotUnit):
        A.kernel_ad(A.catalog("heisenberg"), np.array([2.0, 0.0]))
    with pytest.raises(DimensionMismatch):
        A.kernel_ad(A.catalog("heisenberg"), np.array([1.0, 0.0, 0.0]))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(A.FAMILIES), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_aligned_basis(family, mult, seed):
    alg = A.catalog(family, mult)
    v = unit(np.random.default_rng(seed), alg.k)
    new, q = A.aligned(alg, v)
    assert np.allclose(q.T @ q, np.eye(alg.k), atol=1e-12)
    assert np.allclose(q[:, 0], v)
    assert A.is_aligned(new, 1e-10)
    # structure constants transform as a change of orthonormal basis
    x, w = np.random.default_rng(seed + 1).normal(size=(2, alg.k))
    assert np.allclose(A.bracket_v(new, x, w), A.bracket_v(alg, q @ x, q @ w), atol=1e-12)


@pytest.mark.parametrize("family", A.FAMILIES)
def test_catalogs_are_aligned(family):
    assert A.is_aligned(A.catalog(family))


def test_j2_condition():
    assert A.j2_condition(A.catalog("heisenberg")).holds
    assert A.j2_condition(A.catalog("quaternionic")).holds
    res = A.j2_condition(A.catalog("clifford2"))
    assert not res.holds and res.witness == (1, 2)
    # octonion left multiplications are not closed under composition
    assert not A.j2_condition(A.catalog("octonionic")).holds


def test_quaternion_products_close_up_to_sign():
    alg = A.catalog("quaternionic")
    j1, j2, j3 = alg.j_maps
    assert np.allclose(j1 @ j2, j3) or np.allclose(j1 @ j2, -j3)


@pytest.mark.parametrize("family", A.FAMILIES)
def test_config_round_trip(family):
    alg = A.catalog(family)
    again = A.from_config(alg.to_config())
    assert np.array_equal(again.j_maps, alg.j_maps)
    assert A.from_config({"catalog": family}).k == alg.k


def test_config_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        A.from_config({"k": 3, "m": 1, "j_maps": [[[0, -1], [1, 0]]]})


def test_arrays_are_read_only():
    alg = A.catalog("heisenberg")
    with pytest.raises(ValueError):
        alg.j_maps[0, 0, 0] = 1.0
