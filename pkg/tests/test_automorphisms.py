import numpy as np
import pytest

from cartanbloch.automorphisms import (
    collapse_map,
    identity_battery,
    mobius_apply,
    mobius_apply_alternate,
    mobius_factors,
    mobius_jacobian,
    unitary_rotation,
)
from cartanbloch.errors import OutsideDomainError
from cartanbloch.geometry.domains import (
    diag_embed,
    from_matrix,
    sample_interior,
    type_i,
)
from cartanbloch.maps import Identity, evaluate, jacobian, jacobian_fd


def test_factors_at_origin():
    f = mobius_factors(np.zeros((2, 3)))
    np.testing.assert_allclose(f.Q, np.eye(2))
    np.testing.assert_allclose(f.R, np.eye(3))


def test_factors_scalar():
    f = mobius_factors(np.array([[0.6]]))
    assert f.Q[0, 0] == pytest.approx(1.25)
    assert f.R[0, 0] == pytest.approx(1.25)


def test_factors_rank_one_point():
    P = np.zeros((2, 2))
    P[0, 0] = 0.5
    f = mobius_factors(P)
    expected = np.diag([2 / np.sqrt(3), 1.0])
    np.testing.assert_allclose(f.Q, expected, atol=1e-12)
    np.testing.assert_allclose(f.R, expected, atol=1e-12)


def test_factors_are_hermitian_positive_definite():
    rng = np.random.default_rng(0)
    d = type_i(2, 3)
    for _ in range(20):
        f = mobius_factors(sample_interior(d, rng, 0.95))
        np.testing.assert_allclose(f.Q, f.Q.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(f.Q)[0] > 0
        np.testing.assert_allclose(f.R, f.R.conj().T, atol=1e-12)


def test_factors_reject_boundary_point():
    with pytest.raises(OutsideDomainError):
        mobius_factors(np.eye(2))


def test_scalar_mobius_value():
    assert mobius_apply(np.array([[0.5]]), [0.8]).coords[0] == pytest.approx(
        -0.5
    )


def test_exchange_of_point_and_origin():
    rng = np.random.default_rng(1)
    d = type_i(2, 3)
    for _ in range(20):
        P = sample_interior(d, rng, 0.95)
        np.testing.assert_allclose(
            mobius_apply(P, P).coords, np.zeros(6), atol=1e-10
        )
        np.testing.assert_allclose(
            mobius_apply(P, np.zeros(6)).coords, P.coords, atol=1e-10
        )


def test_involution_and_alternate_form():
    rng = np.random.default_rng(2)
    d = type_i(2, 3)
    for _ in range(100):
        P = sample_interior(d, rng, 0.95)
        Z = sample_interior(d, rng, 0.95)
        image = mobius_apply(P, Z)
        np.testing.assert_allclose(
            mobius_apply(P, image).coords, Z.coords, atol=1e-9
        )
        np.testing.assert_allclose(
            mobius_apply_alternate(P, Z).coords, image.coords, atol=1e-10
        )


def test_jacobian_special_values():
    rng = np.random.default_rng(3)
    d = type_i(2, 3)
    P = sample_interior(d, rng, 0.9)
    f = mobius_factors(P)
    W = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    at_p = mobius_jacobian(P, P) @ W.reshape(-1)
    np.testing.assert_allclose(
        at_p, (-f.Q @ W @ f.R).reshape(-1), atol=1e-10
    )
    at_0 = mobius_jacobian(P, np.zeros(6)) @ W.reshape(-1)
    expected = -np.linalg.inv(f.Q) @ W @ np.linalg.inv(f.R)
    np.testing.assert_allclose(at_0, expected.reshape(-1), atol=1e-10)


def test_scalar_jacobian_at_point():
    J = mobius_jacobian(np.array([[0.5]]), [0.5])
    assert J[0, 0] == pytest.approx(-4 / 3)


def test_identity_battery_passes():
    table = identity_battery(2, 3, samples=100, seed=7)
    assert list(table.columns) == [
        "identity",
        "samples",
        "max_residual",
        "passed",
    ]
    assert "repeated_lambda" in set(table["identity"])
    assert table["passed"].all(), table


def test_identity_battery_on_square_and_row_domains():
    for m, n in [(1, 1), (1, 3), (3, 3)]:
        table = identity_battery(m, n, samples=10, seed=1)
        assert table["passed"].all(), table


def test_collapse_map_is_identity_for_rank_one():
    psi = collapse_map([0.7, 0.0], n=3)
    assert isinstance(psi, Identity)
    D = diag_embed([0.7], 2, 3)
    np.testing.assert_allclose(
        evaluate(psi, D.reshape(-1)).coords, D.reshape(-1)
    )


def test_collapse_map_sends_diagonal_to_rank_one():
    d = type_i(2, 2)
    psi = collapse_map([0.8, 0.5])
    D = from_matrix(d, diag_embed([0.8, 0.5], 2, 2))
    expected = from_matrix(d, diag_embed([0.8], 2, 2))
    np.testing.assert_allclose(evaluate(psi, D).coords, expected, atol=1e-10)


@pytest.mark.parametrize("n", [2, 3])
def test_collapse_map_first_component(n):
    rng = np.random.default_rng(n)
    d = type_i(2, n)
    lam2 = 0.5
    psi = collapse_map([0.8, lam2], n=n)
    for _ in range(20):
        Z = sample_interior(d, rng, 0.95).matrix
        out = evaluate(psi, Z.reshape(-1)).coords
        expected = Z[0, 0] + lam2 * Z[0, 1] * Z[1, 0] / (1 - lam2 * Z[1, 1])
        assert out[0] == pytest.approx(expected, abs=1e-10)


def test_collapse_map_first_component_on_compact_ball():
    rng = np.random.default_rng(4)
    d = type_i(2, 2)
    lam2 = 1 - 1e-4
    psi = collapse_map([0.9, lam2])
    for _ in range(20):
        Z = sample_interior(d, rng, 0.5).matrix
        out = evaluate(psi, Z.reshape(-1)).coords
        expected = Z[0, 0] + lam2 * Z[0, 1] * Z[1, 0] / (1 - lam2 * Z[1, 1])
        assert out[0] == pytest.approx(expected, abs=1e-8)


def test_collapse_map_rejects_boundary_values():
    with pytest.raises(OutsideDomainError):
        collapse_map([1.0, 0.5])


def test_collapse_jacobian_matches_finite_differences():
    rng = np.random.default_rng(5)
    psi = collapse_map([0.9, 0.6, 0.3], n=4)
    for _ in range(5):
        z = sample_interior(psi.source, rng, 0.8)
        J = jacobian(psi, z)
        np.testing.assert_allclose(
            jacobian_fd(psi, z), J, atol=1e-6 * max(1, np.linalg.norm(J))
        )


def test_unitary_rotation_diagonalises():
    rng = np.random.default_rng(6)
    d = type_i(2, 3)
    P = sample_interior(d, rng, 0.9)
    rot = unitary_rotation(P)
    _, lam, _ = np.linalg.svd(P.matrix)
    np.testing.assert_allclose(
        evaluate(rot, P).matrix, diag_embed(lam, 2, 3), atol=1e-12
    )
