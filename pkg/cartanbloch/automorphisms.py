"""Matrix Möbius automorphisms of R_I and the reduction maps built on them.

``Φ_P(Z) = Q (P - Z) (I_n - P* Z)^{-1} R^{-1}`` with ``Q = (I - PP*)^{-1/2}``
and ``R = (I - P*P)^{-1/2}`` assembled from the SVD normal form of ``P``.
``Φ_P`` is an involution exchanging ``P`` and ``0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np
import pandas as pd
from scipy import linalg

from cartanbloch.constants import IDENTITY_TOL
from cartanbloch.errors import ConditioningError, OutsideDomainError
from cartanbloch.geometry.domains import (
    DomainDescriptor,
    Kind,
    Point,
    as_point,
    contains,
    diag_embed,
    from_matrix,
    kronecker,
    sample_interior,
    svd_normal_form,
    type_i,
)
from cartanbloch.io.report import BATTERY_COLUMNS, df_from_records

if TYPE_CHECKING:  # pragma: no cover
    from cartanbloch.maps import HoloMap, UnitaryPair

__all__ = [
    "MobiusFactors",
    "mobius_factors",
    "mobius_factors_from_svd",
    "mobius_apply",
    "mobius_apply_alternate",
    "mobius_jacobian",
    "collapse_map",
    "unitary_rotation",
    "identity_battery",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MobiusFactors:
    """SVD data of ``P`` and the factors ``Q``, ``R`` of ``Φ_P``."""

    P: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    lambdas: np.ndarray
    Q: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.P.shape

    @property
    def descriptor(self) -> DomainDescriptor:
        return type_i(*self.P.shape)


def _as_matrix(P: Any, d: DomainDescriptor | None = None) -> np.ndarray:
    if isinstance(P, Point):
        if P.descriptor.kind is not Kind.I:
            raise OutsideDomainError("Möbius maps are defined on R_I")
        return P.matrix
    arr = np.asarray(P, dtype=complex)
    if arr.ndim == 2:
        return arr
    if d is None:
        raise ValueError("intrinsic vector needs a descriptor")
    return arr.reshape(d.matrix_shape)


def mobius_factors_from_svd(
    U: np.ndarray, lambdas: Sequence[float], V: np.ndarray
) -> MobiusFactors:
    """Build ``Q`` and ``R`` from a given factorisation ``P = U Λ V``."""
    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    lam = np.asarray(lambdas, dtype=float)
    m, n = U.shape[0], V.shape[0]
    if lam.size and lam.max() >= 1.0:
        raise OutsideDomainError(
            f"largest singular value {lam.max():.17g} is not below 1"
        )
    scale = 1.0 / np.sqrt(1.0 - lam**2)
    Q = U @ np.diag(scale) @ U.conj().T
    right = np.ones(n)
    right[:m] = scale
    R = V.conj().T @ np.diag(right) @ V
    P = U @ diag_embed(lam, m, n) @ V
    return MobiusFactors(P=P, U=U, V=V, lambdas=lam, Q=Q, R=R)


def mobius_factors(P: Any) -> MobiusFactors:
    """Return the factors of ``Φ_P`` for ``P`` inside R_I."""
    M = _as_matrix(P)
    U, lam, V = svd_normal_form(M)
    factors = mobius_factors_from_svd(U, lam, V)
    return MobiusFactors(
        P=M,
        U=factors.U,
        V=factors.V,
        lambdas=factors.lambdas,
        Q=factors.Q,
        R=factors.R,
    )


def _factors(P: Any) -> MobiusFactors:
    return P if isinstance(P, MobiusFactors) else mobius_factors(P)


def _denominator(f: MobiusFactors, Z: np.ndarray) -> np.ndarray:
    return np.eye(f.shape[1]) - f.P.conj().T @ Z


def _right_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Return ``A B^{-1}`` by solving ``B^T X^T = A^T``."""
    try:
        return linalg.solve(B.T, A.T).T
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"singular factor in Möbius map: {exc}")


def apply_matrix(f: MobiusFactors, Z: np.ndarray) -> np.ndarray:
    """Primary form ``Q (P - Z) (I - P* Z)^{-1} R^{-1}`` on a matrix."""
    X = _right_solve(f.P - Z, _denominator(f, Z))
    return f.Q @ _right_solve(X, f.R)


def mobius_apply(P: Any, Z: Any) -> Point:
    """Return ``Φ_P(Z)`` as a point of R_I."""
    f = _factors(P)
    d = f.descriptor
    Zm = as_point(d, Z).matrix
    return Point(d, from_matrix(d, apply_matrix(f, Zm)))


def mobius_apply_alternate(P: Any, Z: Any) -> Point:
    """Return ``Φ_P(Z)`` via ``Q^{-1} (I - Z P*)^{-1} (P - Z) R``."""
    f = _factors(P)
    d = f.descriptor
    Zm = as_point(d, Z).matrix
    left = np.eye(f.shape[0]) - Zm @ f.P.conj().T
    try:
        inner = linalg.solve(left, f.P - Zm)
        out = linalg.solve(f.Q, inner) @ f.R
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"singular factor in Möbius map: {exc}")
    return Point(d, from_matrix(d, out))


def jacobian_factors(
    f: MobiusFactors, Z: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(L, K)`` with ``DΦ_P(Z)[W] = L W K``.

    ``L = Q((P-Z)(I-P*Z)^{-1} P* - I)`` and ``K = (I-P*Z)^{-1} R^{-1}``.
    """
    M = _denominator(f, Z)
    X = _right_solve(f.P - Z, M)
    L = f.Q @ (X @ f.P.conj().T - np.eye(f.shape[0]))
    try:
        K = linalg.solve(f.R @ M, np.eye(f.shape[1], dtype=complex))
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"singular factor in Möbius map: {exc}")
    return L, K


def mobius_jacobian(P: Any, Z: Any) -> np.ndarray:
    """Return the ``mn×mn`` Jacobian of ``Φ_P`` at ``Z`` (row-major vec)."""
    f = _factors(P)
    Zm = as_point(f.descriptor, Z).matrix
    L, K = jacobian_factors(f, Zm)
    return kronecker(L, K.T)


def collapse_map(
    lambdas: Sequence[float], keep: int = 1, *, n: int | None = None
) -> "HoloMap":
    """Return ``Ψ = Φ_{λ_k E_kk} ∘ Φ_D`` with ``D = Σ λ_j E_jj``.

    ``Ψ(D) = λ_k E_kk`` for ``k = keep`` (1-based); ``Φ_{λ_k E_kk}`` is its
    own inverse.  When only the kept value is nonzero the identity is
    returned.
    """
    from cartanbloch.maps import Identity, Mobius, compose

    lam = np.asarray(lambdas, dtype=float)
    m = lam.size
    n = m if n is None else n
    d = type_i(m, n)
    if lam.max(initial=0.0) >= 1.0:
        raise OutsideDomainError("collapse map needs all λ below 1")
    if not 1 <= keep <= m:
        raise ValueError(f"keep index {keep} outside 1..{m}")
    others = np.delete(lam, keep - 1)
    if not np.any(others > 0):
        return Identity(d)
    kept = np.zeros(m)
    kept[keep - 1] = lam[keep - 1]
    outer = Mobius(d, Point(d, from_matrix(d, diag_embed(kept, m, n))))
    inner = Mobius(d, Point(d, from_matrix(d, diag_embed(lam, m, n))))
    return compose(outer, inner)


def unitary_rotation(P: Any) -> "UnitaryPair":
    """Return ``Z ↦ U* Z V*`` which sends ``P = U Λ V`` to ``Λ``."""
    from cartanbloch.maps import UnitaryPair

    M = _as_matrix(P)
    U, _, V = svd_normal_form(M)
    return UnitaryPair(type_i(*M.shape), U.conj().T, V.conj().T)


# ---------------------------------------------------------------------------
# Identity battery
# ---------------------------------------------------------------------------


def _fro(A: np.ndarray) -> float:
    return float(np.linalg.norm(A))


def _repeated_lambda_residual(
    m: int, n: int, rng: np.random.Generator, samples: int
) -> float:
    """Two SVD factorisations of a repeated-λ ``P`` give the same ``Φ_P``."""
    from scipy.stats import unitary_group

    if m < 2:
        return 0.0
    worst = 0.0
    d = type_i(m, n)
    for _ in range(samples):
        lam = np.sort(rng.uniform(0.1, 0.8, size=m))[::-1].copy()
        lam[1] = lam[0]
        U = unitary_group.rvs(m, random_state=rng)
        V = unitary_group.rvs(n, random_state=rng)
        W = np.eye(m, dtype=complex)
        W[:2, :2] = unitary_group.rvs(2, random_state=rng)
        Wn = np.eye(n, dtype=complex)
        Wn[:2, :2] = W[:2, :2]
        first = mobius_factors_from_svd(U, lam, V)
        second = mobius_factors_from_svd(U @ W, lam, Wn.conj().T @ V)
        Z = sample_interior(d, rng, 0.95).matrix
        worst = max(
            worst,
            _fro(first.P - second.P),
            _fro(apply_matrix(first, Z) - apply_matrix(second, Z)),
        )
    return worst


def identity_battery(
    m: int = 2,
    n: int = 3,
    samples: int = 100,
    seed: int = 0,
    *,
    tol: float = IDENTITY_TOL,
) -> pd.DataFrame:
    """Run the automorphism identities on random ``(P, Z)`` in R_I(m, n).

    Returns a table with the largest residual per identity.
    """
    rng = np.random.default_rng(seed)
    d = type_i(m, n)
    worst: dict[str, float] = {
        "involution": 0.0,
        "exchange_origin": 0.0,
        "exchange_point": 0.0,
        "alternate_form": 0.0,
        "identity_vi": 0.0,
        "jacobian_at_point": 0.0,
        "jacobian_at_origin": 0.0,
        "self_map": 0.0,
    }
    for _ in range(samples):
        P = sample_interior(d, rng, 0.95)
        Z = sample_interior(d, rng, 0.95)
        f = mobius_factors(P)
        Pm, Zm = f.P, Z.matrix
        image = apply_matrix(f, Zm)
        back = apply_matrix(f, image)
        worst["involution"] = max(worst["involution"], _fro(back - Zm))
        worst["exchange_origin"] = max(
            worst["exchange_origin"],
            _fro(apply_matrix(f, np.zeros_like(Pm)) - Pm),
        )
        worst["exchange_point"] = max(
            worst["exchange_point"], _fro(apply_matrix(f, Pm))
        )
        alt = mobius_apply_alternate(f, Z).matrix
        worst["alternate_form"] = max(
            worst["alternate_form"], _fro(alt - image)
        )
        eye_m = np.eye(m)
        lhs = (
            (eye_m - Zm @ Pm.conj().T)
            @ f.Q
            @ (eye_m - image @ image.conj().T)
            @ f.Q.conj().T
            @ (eye_m - Pm @ Zm.conj().T)
        )
        worst["identity_vi"] = max(
            worst["identity_vi"], _fro(lhs - (eye_m - Zm @ Zm.conj().T))
        )
        W = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
        L, K = jacobian_factors(f, Pm)
        worst["jacobian_at_point"] = max(
            worst["jacobian_at_point"], _fro(L @ W @ K + f.Q @ W @ f.R)
        )
        L0, K0 = jacobian_factors(f, np.zeros_like(Pm))
        expected = -linalg.solve(f.Q, W) @ np.linalg.inv(f.R)
        worst["jacobian_at_origin"] = max(
            worst["jacobian_at_origin"], _fro(L0 @ W @ K0 - expected)
        )
        if not contains(d, image):
            worst["self_map"] += 1.0 / samples
    worst["repeated_lambda"] = _repeated_lambda_residual(
        m, n, rng, max(1, samples // 10)
    )
    rows = [
        {
            "identity": name,
            "samples": samples,
            "max_residual": value,
            "passed": bool(value <= tol),
        }
        for name, value in worst.items()
    ]
    log.info(
        "identity battery on R_I(%d,%d): worst residual %.3g",
        m,
        n,
        max(worst.values()),
    )
    return df_from_records(rows, BATTERY_COLUMNS)
