"""Bergman metric matrices of the classical domains.

Matrices are stored in the column-vector convention ``H_z(v) = v† G v``.
For R_I the Gram matrix is ``(m+n) (I-ZZ*)^{-1} ⊗ conj((I-Z*Z)^{-1})`` in
row-major ``vec`` order, which makes ``v† G v`` equal the trace form
``(m+n) tr((I-ZZ*)^{-1} U (I-Z*Z)^{-1} U*)``.  R_II and R_III use the same
ambient form restricted to the symmetric / antisymmetric subspace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg

from cartanbloch.constants import BOUNDARY_FLOOR, COND_RTOL, HERMITIAN_TOL
from cartanbloch.errors import ConditioningError, OutsideDomainError

from .domains import (
    DomainDescriptor,
    Kind,
    Point,
    _coords,
    as_point,
    boundary_distance,
    embedding,
    factor_slices,
    kronecker,
    to_matrix,
)

__all__ = [
    "MetricMatrix",
    "metric_matrix",
    "row_metric_matrix",
    "bergman_form",
    "rayleigh_sup",
    "bloch_seminorm_at",
    "trace_form",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MetricMatrix:
    """Gram matrix ``G(z)`` of the Bergman metric at ``at``."""

    gram: np.ndarray = field(repr=False)
    at: Point

    @property
    def descriptor(self) -> DomainDescriptor:
        return self.at.descriptor

    def form(self, v: Any) -> float:
        return _hermitian_value(self.gram, _coords(self.descriptor, v))

    def eigenvalue_range(self) -> tuple[float, float]:
        ev = np.linalg.eigvalsh(self.gram)
        return float(ev[0]), float(ev[-1])


def _check_interior(d: DomainDescriptor, z: Point) -> None:
    delta = boundary_distance(d, z)
    if delta < BOUNDARY_FLOOR:
        raise OutsideDomainError(
            f"point is {delta:.3g} from the boundary of {d.label()}; "
            f"metrics need at least {BOUNDARY_FLOOR:.3g}"
        )


def _hpd_inverse(H: np.ndarray) -> np.ndarray:
    """Inverse of a Hermitian positive definite matrix via Cholesky."""
    H = (H + H.conj().T) / 2
    try:
        factor = linalg.cho_factor(H, lower=True)
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"factor is not positive definite: {exc}")
    inv = linalg.cho_solve(factor, np.eye(H.shape[0], dtype=complex))
    return (inv + inv.conj().T) / 2


def _matrix_kind_gram(d: DomainDescriptor, coords: np.ndarray) -> np.ndarray:
    Z = to_matrix(d, coords)
    rows, cols = Z.shape
    if d.kind is Kind.I:
        const = rows + cols
        A = np.eye(rows) - Z @ Z.conj().T
        B = np.eye(cols) - Z.conj().T @ Z
    elif d.kind is Kind.II:
        const = rows + 1
        A = np.eye(rows) - Z @ Z.conj()
        B = np.eye(rows) - Z.conj() @ Z
    else:
        const = 2 * (rows - 1)
        A = np.eye(rows) + Z @ Z.conj()
        B = np.eye(rows) + Z.conj() @ Z
    ambient = const * kronecker(_hpd_inverse(A), _hpd_inverse(B).conj())
    if d.kind is Kind.I:
        return ambient
    S = embedding(d)
    return S.T @ ambient @ S


def _lie_ball_gram(coords: np.ndarray) -> np.ndarray:
    z = coords
    N = z.shape[0]
    sq = float(np.vdot(z, z).real)
    s = np.sum(z * z)
    rho = 1.0 + abs(s) ** 2 - 2.0 * sq
    zb = z.conj()
    W = (
        (1.0 - 2.0 * sq) * np.outer(z, zb)
        + np.conj(s) * np.outer(z, z)
        + s * np.outer(zb, zb)
        - np.outer(zb, z)
    )
    return (2.0 * N / rho**2) * (rho * np.eye(N) - 2.0 * W.T)


def metric_matrix(d: DomainDescriptor, z: Any) -> MetricMatrix:
    """Return the Bergman metric matrix of ``d`` at ``z``."""
    pt = as_point(d, z)
    _check_interior(d, pt)
    if d.kind is Kind.PRODUCT:
        blocks = [
            metric_matrix(f, pt.coords[sl]).gram for f, sl in factor_slices(d)
        ]
        gram = linalg.block_diag(*blocks)
    elif d.kind is Kind.IV:
        gram = _lie_ball_gram(pt.coords)
    else:
        gram = _matrix_kind_gram(d, pt.coords)
    asym = np.max(np.abs(gram - gram.conj().T), initial=0.0)
    scale = max(1.0, float(np.max(np.abs(gram), initial=0.0)))
    if asym > HERMITIAN_TOL * scale:
        log.warning("metric at %s off Hermitian by %.3g", d.label(), asym)
    return MetricMatrix((gram + gram.conj().T) / 2, pt)


def row_metric_matrix(d: DomainDescriptor, z: Any) -> np.ndarray:
    """Return ``T(z,z)`` in the row convention ``H = u T ū'``."""
    return metric_matrix(d, z).gram.T


def _hermitian_value(G: np.ndarray, v: np.ndarray) -> float:
    value = complex(np.vdot(v, G @ v))
    if abs(value.imag) > HERMITIAN_TOL * max(1.0, abs(value.real)):
        raise ConditioningError(
            f"Hermitian form has imaginary part {value.imag:.3g}"
        )
    return max(value.real, 0.0)


def bergman_form(d: DomainDescriptor, z: Any, v: Any) -> float:
    """Return ``H_z(v, v)``; products add their factor forms in order."""
    pt = as_point(d, z)
    vec = _coords(d, v)
    if d.kind is Kind.PRODUCT:
        total = 0.0
        for f, sl in factor_slices(d):
            total += bergman_form(f, pt.coords[sl], vec[sl])
        return total
    return metric_matrix(d, pt).form(vec)


def trace_form(d: DomainDescriptor, z: Any, v: Any) -> float:
    """Matrix-form value ``c tr((I-ZZ*)^{-1} U (I-Z*Z)^{-1} U*)`` on R_I."""
    if d.kind is not Kind.I:
        raise ValueError("trace form is defined for R_I only")
    Z = to_matrix(d, _coords(d, z))
    U = to_matrix(d, _coords(d, v))
    m, n = Z.shape
    left = np.linalg.solve(np.eye(m) - Z @ Z.conj().T, U)
    right = np.linalg.solve(np.eye(n) - Z.conj().T @ Z, U.conj().T)
    return float(((m + n) * np.trace(left @ right)).real)


def rayleigh_sup(d: DomainDescriptor, z: Any, grad: Any) -> float:
    """Return ``sup_v |grad·v|^2 / H_z(v,v) = grad G^{-1} grad†``."""
    G = metric_matrix(d, z).gram
    g = np.asarray(grad, dtype=complex).reshape(-1)
    if g.shape[0] != G.shape[0]:
        raise ValueError(
            f"gradient has {g.shape[0]} entries, domain has {G.shape[0]}"
        )
    if not np.any(g):
        return 0.0
    smallest = float(np.linalg.eigvalsh(G)[0])
    if smallest < COND_RTOL * float(np.trace(G).real):
        raise ConditioningError(
            f"metric is numerically singular (smallest eigenvalue "
            f"{smallest:.3g})"
        )
    try:
        factor = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"Cholesky of metric failed: {exc}")
    solved = linalg.cho_solve(factor, g.conj())
    return max(float((g @ solved).real), 0.0)


def bloch_seminorm_at(d: DomainDescriptor, z: Any, grad: Any) -> float:
    """Return ``Q_f(z)`` for a function with gradient ``grad`` at ``z``."""
    return float(np.sqrt(rayleigh_sup(d, z, grad)))
