import numpy as np
import pytest

from cartanbloch.errors import ConditioningError, OutsideDomainError
from cartanbloch.geometry.domains import (
    dimension,
    embedding,
    product,
    sample_interior,
    sample_tangent,
    type_i,
    type_ii,
    type_iii,
    type_iv,
)
from cartanbloch.geometry.metrics import (
    bergman_form,
    bloch_seminorm_at,
    metric_matrix,
    rayleigh_sup,
    row_metric_matrix,
    trace_form,
)
from cartanbloch.maps import Mobius, jacobian


@pytest.mark.parametrize("m, n", [(1, 1), (1, 3), (2, 2), (2, 3)])
def test_type_i_origin_is_scaled_identity(m, n):
    d = type_i(m, n)
    G = metric_matrix(d, np.zeros(m * n)).gram
    np.testing.assert_allclose(G, (m + n) * np.eye(m * n), atol=1e-14)


@pytest.mark.parametrize("N", [1, 3, 4])
def test_type_iv_origin(N):
    G = metric_matrix(type_iv(N), np.zeros(N)).gram
    np.testing.assert_allclose(G, 2 * N * np.eye(N), atol=1e-14)


def test_type_ii_and_iii_origin_restrict_to_subspace():
    G = metric_matrix(type_ii(2), np.zeros(3)).gram
    np.testing.assert_allclose(G, 3 * np.diag([1.0, 2.0, 1.0]), atol=1e-14)
    G = metric_matrix(type_iii(3), np.zeros(3)).gram
    np.testing.assert_allclose(G, 4 * 2 * np.eye(3), atol=1e-14)


def test_type_i_row_point_closed_form():
    r = 0.6
    G = metric_matrix(type_i(1, 2), [r, 0.0]).gram
    expected = np.diag([3 / (1 - r * r) ** 2, 3 / (1 - r * r)])
    np.testing.assert_allclose(G, expected, rtol=1e-12)


def test_bergman_form_examples():
    assert bergman_form(type_i(1, 1), [0.0], [1.0]) == pytest.approx(2.0)
    d = product(type_i(1, 1), type_i(1, 1))
    assert bergman_form(d, [0, 0], [1, 1]) == pytest.approx(4.0)
    rng = np.random.default_rng(0)
    for dd in (type_i(2, 3), type_ii(2), type_iii(3), type_iv(3)):
        z = sample_interior(dd, rng, 0.9)
        assert bergman_form(dd, z, np.zeros(dimension(dd))) == 0.0


@pytest.mark.parametrize(
    "d", [type_i(2, 3), type_ii(3), type_iii(4), type_iv(4)]
)
def test_metric_is_hermitian_positive_definite(d):
    rng = np.random.default_rng(1)
    G = np.stack(
        [
            metric_matrix(d, sample_interior(d, rng, 0.999)).gram
            for _ in range(10_000)
        ]
    )
    scale = np.max(np.abs(G), axis=(1, 2))
    asym = np.max(np.abs(G - G.conj().transpose(0, 2, 1)), axis=(1, 2))
    assert np.all(asym <= 1e-12 * scale)
    assert np.all(np.linalg.eigvalsh(G)[:, 0] > 0)


def test_type_i_matches_trace_form():
    rng = np.random.default_rng(2)
    d = type_i(2, 3)
    for _ in range(50):
        z = sample_interior(d, rng, 0.95)
        v = sample_tangent(d, rng)
        assert bergman_form(d, z, v) == pytest.approx(
            trace_form(d, z, v), rel=1e-10
        )


def _lie_ball_oracle(z):
    """``N ∂∂̄(-log ρ)`` written out entrywise, transposed to the column
    convention."""
    N = z.shape[0]
    s = np.sum(z**2)
    rho = 1 + abs(s) ** 2 - 2 * np.vdot(z, z).real
    d_rho = 2 * z * np.conj(s) - 2 * z.conj()
    g = np.empty((N, N), dtype=complex)
    for j in range(N):
        for k in range(N):
            mixed = 4 * z[j] * np.conj(z[k]) - 2 * (j == k)
            g[j, k] = N * (
                -mixed / rho + d_rho[j] * np.conj(d_rho[k]) / rho**2
            )
    return g.T


def test_type_iv_matches_log_kernel_oracle():
    rng = np.random.default_rng(3)
    d = type_iv(3)
    for _ in range(20):
        z = sample_interior(d, rng, 0.95).coords
        np.testing.assert_allclose(
            metric_matrix(d, z).gram, _lie_ball_oracle(z), rtol=1e-10
        )


def test_product_metric_is_block_diagonal_and_additive():
    rng = np.random.default_rng(4)
    d = product(type_i(1, 2), type_iv(2), type_ii(2))
    z = sample_interior(d, rng, 0.9)
    v = sample_tangent(d, rng)
    G = metric_matrix(d, z).gram
    assert np.all(G[:2, 2:] == 0) and np.all(G[2:4, 4:] == 0)
    total = (
        bergman_form(type_i(1, 2), z.coords[:2], v.coords[:2])
        + bergman_form(type_iv(2), z.coords[2:4], v.coords[2:4])
        + bergman_form(type_ii(2), z.coords[4:], v.coords[4:])
    )
    assert bergman_form(d, z, v) == total


def test_mobius_is_an_isometry():
    rng = np.random.default_rng(5)
    d = type_i(2, 3)
    for _ in range(1000):
        phi = Mobius(d, sample_interior(d, rng, 0.9))
        z = sample_interior(d, rng, 0.9)
        v = sample_tangent(d, rng)
        pushed = jacobian(phi, z) @ v.coords
        assert bergman_form(d, phi.evaluate(z), pushed) == pytest.approx(
            bergman_form(d, z, v), rel=1e-8
        )


def test_row_convention_matches_column_form():
    rng = np.random.default_rng(6)
    d = type_i(2, 2)
    z = sample_interior(d, rng, 0.8)
    u = sample_tangent(d, rng).coords
    T = row_metric_matrix(d, z)
    assert (u @ T @ u.conj()).real == pytest.approx(
        bergman_form(d, z, u), rel=1e-12
    )


def test_metrics_refuse_points_near_boundary():
    with pytest.raises(OutsideDomainError):
        metric_matrix(type_i(1, 1), [1 - 1e-10])
    with pytest.raises(OutsideDomainError):
        metric_matrix(type_i(1, 1), [1.5])


def test_rayleigh_sup_examples():
    z = 0.3 + 0.4j
    value = rayleigh_sup(type_i(1, 1), [z], [1.0])
    assert value == pytest.approx((1 - abs(z) ** 2) ** 2 / 2)
    assert bloch_seminorm_at(type_i(1, 1), [z], [1.0]) == pytest.approx(
        (1 - abs(z) ** 2) / np.sqrt(2)
    )
    assert rayleigh_sup(type_i(2, 3), np.zeros(6), np.zeros(6)) == 0.0
    e1 = np.zeros(6)
    e1[0] = 1.0
    assert rayleigh_sup(type_i(2, 3), np.zeros(6), e1) == pytest.approx(
        1 / 5
    )


@pytest.mark.parametrize("d", [type_i(1, 2), type_iv(2)])
def test_rayleigh_sup_matches_brute_force(d):
    rng = np.random.default_rng(7)
    z = sample_interior(d, rng, 0.8)
    dim = dimension(d)
    grad = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    closed = rayleigh_sup(d, z, grad)
    G = metric_matrix(d, z).gram
    V = rng.normal(size=(100_000, dim)) + 1j * rng.normal(size=(100_000, dim))
    num = np.abs(V @ grad) ** 2
    den = np.einsum("ki,ij,kj->k", V.conj(), G, V).real
    brute = float(np.max(num / den))
    assert brute <= closed * (1 + 1e-12)
    assert brute >= 0.99 * closed


def test_rayleigh_sup_conditioning(monkeypatch):
    import cartanbloch.geometry.metrics as metrics

    monkeypatch.setattr(metrics, "COND_RTOL", 10.0)
    with pytest.raises(ConditioningError):
        rayleigh_sup(type_i(1, 1), [0.0], [1.0])


def test_embedding_of_symmetric_kind():
    S = embedding(type_ii(2))
    np.testing.assert_array_equal(
        S, [[1, 0, 0], [0, 1, 0], [0, 1, 0], [0, 0, 1]]
    )
