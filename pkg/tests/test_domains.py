import numpy as np
import pytest
from scipy.stats import unitary_group

from cartanbloch.errors import DescriptorError, OutsideDomainError
from cartanbloch.geometry.domains import (
    Point,
    boundary_distance,
    contains,
    dimension,
    from_matrix,
    kronecker,
    product,
    sample_interior,
    spectral_norm,
    svd_normal_form,
    to_matrix,
    type_i,
    type_ii,
    type_iii,
    type_iv,
)


@pytest.mark.parametrize(
    "d, expected",
    [
        (type_i(2, 3), 6),
        (type_ii(3), 6),
        (type_iii(4), 6),
        (type_iv(5), 5),
        (product(type_i(1, 1), type_iv(4)), 5),
    ],
)
def test_dimension(d, expected):
    assert dimension(d) == expected


def test_descriptor_validation():
    with pytest.raises(DescriptorError):
        type_i(3, 2)
    with pytest.raises(DescriptorError):
        type_iii(1)
    with pytest.raises(DescriptorError):
        type_iv(0)
    with pytest.raises(DescriptorError):
        product()


def test_nested_products_are_flattened():
    inner = product(type_i(1, 1), type_iv(2))
    d = product(inner, type_ii(2))
    assert [f.label() for f in d.factors] == ["I(1,1)", "IV(2)", "II(2)"]
    assert dimension(d) == 1 + 2 + 3


def test_to_matrix_examples():
    a, b, s, t, w, c = 1 + 2j, 3.0, 0.1, 0.2j, 0.3, 0.4 - 0.1j
    np.testing.assert_array_equal(to_matrix(type_i(1, 2), [a, b]), [[a, b]])
    np.testing.assert_array_equal(
        to_matrix(type_ii(2), [s, t, w]), [[s, t], [t, w]]
    )
    np.testing.assert_array_equal(
        to_matrix(type_iii(2), [c]), [[0, c], [-c, 0]]
    )


def test_to_matrix_rejects_bad_input():
    with pytest.raises(DescriptorError):
        to_matrix(type_i(2, 2), [1, 2, 3])
    with pytest.raises(DescriptorError):
        to_matrix(type_iv(2), [0, 0])
    with pytest.raises(DescriptorError):
        from_matrix(type_ii(2), [[0, 1], [2, 0]])


@pytest.mark.parametrize(
    "d",
    [type_i(1, 1), type_i(2, 3), type_i(4, 4), type_ii(1), type_ii(4)]
    + [type_iii(2), type_iii(4)],
)
def test_matrix_round_trip_is_exact(d):
    rng = np.random.default_rng(3)
    dim = dimension(d)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    assert np.array_equal(from_matrix(d, to_matrix(d, v)), v)


def test_contains_examples():
    assert contains(type_i(1, 1), [0.5])
    assert contains(type_iv(2), [0.5, 0.0])
    assert not contains(type_i(2, 2), np.eye(2))


def test_kind_ii_membership_after_round_trip():
    rng = np.random.default_rng(5)
    d = type_ii(3)
    for _ in range(20):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        S = (A + A.T) / 2
        S = S * (rng.uniform(0.5, 1.5) / np.linalg.norm(S, 2))
        inside = np.linalg.eigvalsh(np.eye(3) - S @ S.conj())[0] > 0
        assert contains(d, from_matrix(d, S)) == inside


@pytest.mark.parametrize("q", [2, 3, 4])
def test_kind_iii_membership_matches_singular_values(q):
    rng = np.random.default_rng(q)
    d = type_iii(q)
    for _ in range(20):
        v = rng.normal(size=dimension(d)) + 1j * rng.normal(size=dimension(d))
        Z = to_matrix(d, v)
        Z = Z * (rng.uniform(0.5, 1.5) / np.linalg.norm(Z, 2))
        direct = np.linalg.eigvalsh(np.eye(q) + Z @ Z.conj())[0] > 0
        assert contains(d, from_matrix(d, Z)) == direct
        assert direct == (np.linalg.norm(Z, 2) < 1)


def test_boundary_distance_examples():
    assert boundary_distance(type_i(1, 1), [0.9]) == pytest.approx(0.1)
    Z = np.zeros((2, 3))
    Z[0, 0] = 0.7
    assert boundary_distance(type_i(2, 3), Z) == pytest.approx(0.3)
    assert boundary_distance(type_iv(2), [0, 0]) == pytest.approx(0.5)
    # 1 + |zz'|^2 - 2|z|^2 halved
    assert boundary_distance(type_iv(2), [0.6, 0]) == pytest.approx(0.2048)
    assert boundary_distance(type_iv(2), [0.3, 0.3j]) == pytest.approx(0.32)


def test_boundary_distance_outside_raises():
    with pytest.raises(OutsideDomainError):
        boundary_distance(type_i(1, 1), [1.2])


@pytest.mark.parametrize(
    "d",
    [type_i(2, 3), type_ii(2), type_iii(3), type_iv(3)]
    + [product(type_i(1, 1), type_iv(2))],
)
def test_boundary_distance_positive_iff_inside_on_rays(d):
    rng = np.random.default_rng(11)
    z0 = sample_interior(d, rng, 0.9).coords
    z0 = z0 / spectral_norm(d, z0)
    for t in np.linspace(0.0, 1.2, 25):
        if abs(t - 1.0) < 1e-6:
            continue
        z = t * z0
        inside = contains(d, z)
        assert inside == (t < 1.0)
        if inside:
            assert boundary_distance(d, z) > 0
        else:
            with pytest.raises(OutsideDomainError):
                boundary_distance(d, z)


def test_lie_ball_norm_matches_membership():
    rng = np.random.default_rng(2)
    d = type_iv(4)
    for _ in range(50):
        z = sample_interior(d, rng, 1.3).coords
        if abs(spectral_norm(d, z) - 1) > 1e-9:
            assert contains(d, z) == (spectral_norm(d, z) < 1)


def test_kronecker_examples():
    np.testing.assert_array_equal(kronecker(np.eye(2), np.eye(3)), np.eye(6))
    B = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(kronecker([[2.0]], B), 2 * B)
    np.testing.assert_array_equal(
        kronecker([[1, 0], [0, 2]], [[3]]), [[3, 0], [0, 6]]
    )


def test_kronecker_matches_row_major_vec():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    X = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    np.testing.assert_allclose(
        kronecker(A, B) @ X.reshape(-1), (A @ X @ B.T).reshape(-1)
    )


def test_kronecker_of_unitaries_is_unitary():
    rng = np.random.default_rng(1)
    for a in (1, 2, 3):
        for b in (2, 3):
            A = unitary_group.rvs(a, random_state=rng) if a > 1 else [[1j]]
            B = unitary_group.rvs(b, random_state=rng)
            K = kronecker(A, B)
            np.testing.assert_allclose(
                K.conj().T @ K, np.eye(K.shape[0]), atol=1e-12
            )


def test_svd_normal_form_of_diagonal_point():
    Z = np.zeros((2, 3))
    Z[0, 0] = 0.5
    U, lam, V = svd_normal_form(Z)
    np.testing.assert_allclose(lam, [0.5, 0.0])
    D = np.zeros((2, 3))
    D[0, 0] = 0.5
    np.testing.assert_allclose(U @ D @ V, Z, atol=1e-12)


def test_svd_normal_form_sorts_descending():
    Z = np.array([[0.1, 0.0], [0.0, 0.6]])
    assert list(svd_normal_form(Z).lambdas) == pytest.approx([0.6, 0.1])


def test_svd_normal_form_reconstruction():
    rng = np.random.default_rng(7)
    for _ in range(10):
        Z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        U, lam, V = svd_normal_form(Z)
        err = np.linalg.norm(U @ np.diag(lam) @ V - Z)
        assert err < 1e-12 * (1 + np.linalg.norm(Z))
        assert lam[0] == pytest.approx(np.linalg.norm(Z, 2), abs=1e-12)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-12)


def test_svd_normal_form_requires_wide_matrix():
    with pytest.raises(DescriptorError):
        svd_normal_form(np.zeros((3, 2)))


def test_point_interior_and_read_only():
    d = type_i(1, 2)
    with pytest.raises(OutsideDomainError):
        Point.interior(d, [1.0, 0.5])
    pt = Point.interior(d, [0.1, 0.2])
    with pytest.raises(ValueError):
        pt.coords[0] = 0.3
