"""Classical Cartan domains and their intrinsic coordinates.

• DomainDescriptor      → which domain (R_I–R_IV or a product) and its sizes
• to_matrix/from_matrix → intrinsic vector ⇄ matrix (row-major, upper
                          triangle for the symmetric/antisymmetric kinds)
• contains              → defining inequalities via smallest eigenvalues
• boundary_distance     → surrogate that vanishes exactly on the boundary
• kronecker, svd_normal_form → matrix utilities used by the metric and
                          automorphism code
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, NamedTuple, Sequence

import numpy as np

from cartanbloch.errors import DescriptorError, OutsideDomainError

__all__ = [
    "Kind",
    "DomainDescriptor",
    "Point",
    "Tangent",
    "type_i",
    "type_ii",
    "type_iii",
    "type_iv",
    "product",
    "dimension",
    "to_matrix",
    "from_matrix",
    "embedding",
    "contains",
    "boundary_distance",
    "spectral_norm",
    "kronecker",
    "svd_normal_form",
    "diag_embed",
    "factor_slices",
    "sample_interior",
    "sample_tangent",
    "as_point",
    "as_tangent",
]


class Kind(str, Enum):
    """Cartan series of a domain."""

    I = "I"  # noqa: E741
    II = "II"
    III = "III"
    IV = "IV"
    PRODUCT = "Product"


@dataclass(frozen=True)
class DomainDescriptor:
    """Domain kind with its sizes.

    ``sizes`` holds ``(m, n)`` for R_I, ``(p,)`` for R_II, ``(q,)`` for
    R_III and ``(N,)`` for R_IV.  Products keep their factors flattened in
    ``factors``.
    """

    kind: Kind
    sizes: tuple[int, ...] = ()
    factors: tuple["DomainDescriptor", ...] = ()

    def __post_init__(self) -> None:
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(
            self, "sizes", tuple(int(s) for s in self.sizes)
        )
        if kind is Kind.PRODUCT:
            flat: list[DomainDescriptor] = []
            for f in self.factors:
                if not isinstance(f, DomainDescriptor):
                    raise DescriptorError(f"invalid product factor {f!r}")
                flat.extend(f.factors if f.kind is Kind.PRODUCT else [f])
            if not flat:
                raise DescriptorError("product domain needs a factor")
            object.__setattr__(self, "factors", tuple(flat))
            object.__setattr__(self, "sizes", ())
            return
        if self.factors:
            raise DescriptorError(f"kind {kind.value} takes no factors")
        expected = 2 if kind is Kind.I else 1
        if len(self.sizes) != expected:
            raise DescriptorError(
                f"kind {kind.value} needs {expected} size(s), "
                f"got {self.sizes}"
            )
        if kind is Kind.I:
            m, n = self.sizes
            if not 1 <= m <= n:
                raise DescriptorError(f"R_I needs 1 <= m <= n, got {m}, {n}")
        elif kind is Kind.III and self.sizes[0] < 2:
            raise DescriptorError("R_III needs q >= 2")
        elif self.sizes[0] < 1:
            raise DescriptorError(f"kind {kind.value} needs a size >= 1")

    @property
    def dimension(self) -> int:
        return dimension(self)

    @property
    def is_matrix(self) -> bool:
        return self.kind in (Kind.I, Kind.II, Kind.III)

    @property
    def matrix_shape(self) -> tuple[int, int]:
        if self.kind is Kind.I:
            return self.sizes[0], self.sizes[1]
        if self.kind in (Kind.II, Kind.III):
            return self.sizes[0], self.sizes[0]
        raise DescriptorError(f"kind {self.kind.value} has no matrix form")

    def label(self) -> str:
        if self.kind is Kind.PRODUCT:
            return " x ".join(f.label() for f in self.factors)
        return f"{self.kind.value}({','.join(map(str, self.sizes))})"

    def to_dict(self) -> dict[str, Any]:
        if self.kind is Kind.PRODUCT:
            return {
                "kind": "Product",
                "factors": [f.to_dict() for f in self.factors],
            }
        keys = {
            Kind.I: ("m", "n"),
            Kind.II: ("p",),
            Kind.III: ("q",),
            Kind.IV: ("N",),
        }[self.kind]
        return {"kind": self.kind.value, **dict(zip(keys, self.sizes))}


def type_i(m: int, n: int) -> DomainDescriptor:
    return DomainDescriptor(Kind.I, (m, n))


def type_ii(p: int) -> DomainDescriptor:
    return DomainDescriptor(Kind.II, (p,))


def type_iii(q: int) -> DomainDescriptor:
    return DomainDescriptor(Kind.III, (q,))


def type_iv(N: int) -> DomainDescriptor:
    return DomainDescriptor(Kind.IV, (N,))


def product(*factors: DomainDescriptor) -> DomainDescriptor:
    return DomainDescriptor(Kind.PRODUCT, factors=tuple(factors))


def dimension(d: DomainDescriptor) -> int:
    """Return the complex dimension of ``d``."""
    if d.kind is Kind.I:
        return d.sizes[0] * d.sizes[1]
    if d.kind is Kind.II:
        p = d.sizes[0]
        return p * (p + 1) // 2
    if d.kind is Kind.III:
        q = d.sizes[0]
        return q * (q - 1) // 2
    if d.kind is Kind.IV:
        return d.sizes[0]
    return sum(dimension(f) for f in d.factors)


# ---------------------------------------------------------------------------
# Points and tangents
# ---------------------------------------------------------------------------


def _vector(d: DomainDescriptor, v: Any) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.shape[0] != dimension(d):
        raise DescriptorError(
            f"{d.label()} expects {dimension(d)} coordinates, "
            f"got shape {np.shape(v)}"
        )
    return arr


@dataclass(frozen=True, eq=False)
class Point:
    """Intrinsic coordinates of a point of ``descriptor``."""

    descriptor: DomainDescriptor
    coords: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = _vector(self.descriptor, self.coords).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @classmethod
    def interior(cls, d: DomainDescriptor, coords: Any) -> "Point":
        """Return a point, raising if it is not inside ``d``."""
        pt = cls(d, coords)
        if not contains(d, pt):
            raise OutsideDomainError(f"point is not inside {d.label()}")
        return pt

    @property
    def matrix(self) -> np.ndarray:
        return to_matrix(self.descriptor, self.coords)


@dataclass(frozen=True, eq=False)
class Tangent:
    """Intrinsic coordinates of a tangent vector."""

    descriptor: DomainDescriptor
    coords: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = _vector(self.descriptor, self.coords).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)


def as_point(d: DomainDescriptor, z: Any) -> Point:
    """Coerce ``z`` (Point, intrinsic vector or matrix) into a Point."""
    if isinstance(z, Point):
        if z.descriptor != d:
            raise DescriptorError(
                f"point lives in {z.descriptor.label()}, not {d.label()}"
            )
        return z
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 2 and d.is_matrix:
        return Point(d, from_matrix(d, arr))
    return Point(d, arr)


def as_tangent(d: DomainDescriptor, v: Any) -> Tangent:
    if isinstance(v, Tangent):
        if v.descriptor != d:
            raise DescriptorError(
                f"tangent lives in {v.descriptor.label()}, not {d.label()}"
            )
        return v
    if isinstance(v, Point):
        v = v.coords
    arr = np.asarray(v, dtype=complex)
    if arr.ndim == 2 and d.is_matrix:
        return Tangent(d, from_matrix(d, arr))
    return Tangent(d, arr)


def _coords(d: DomainDescriptor, z: Any) -> np.ndarray:
    if isinstance(z, (Point, Tangent)):
        return z.coords
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 2 and d.is_matrix:
        return from_matrix(d, arr)
    return _vector(d, arr)


# ---------------------------------------------------------------------------
# Coordinates
# ---------------------------------------------------------------------------


def _index_sets(d: DomainDescriptor) -> tuple[np.ndarray, np.ndarray]:
    if d.kind is Kind.II:
        return np.triu_indices(d.sizes[0])
    if d.kind is Kind.III:
        return np.triu_indices(d.sizes[0], 1)
    raise DescriptorError(f"kind {d.kind.value} has no triangle indices")


def to_matrix(d: DomainDescriptor, v: Any) -> np.ndarray:
    """Return the matrix whose intrinsic coordinates are ``v``."""
    if not d.is_matrix:
        raise DescriptorError(f"kind {d.kind.value} has no matrix form")
    vec = _vector(d, v)
    if d.kind is Kind.I:
        return vec.reshape(d.matrix_shape).copy()
    rows, cols = _index_sets(d)
    M = np.zeros(d.matrix_shape, dtype=complex)
    M[rows, cols] = vec
    if d.kind is Kind.II:
        M[cols, rows] = vec
    else:
        M[cols, rows] = -vec
    return M


def from_matrix(d: DomainDescriptor, M: Any, *, atol: float = 1e-12):
    """Inverse of :func:`to_matrix`."""
    if not d.is_matrix:
        raise DescriptorError(f"kind {d.kind.value} has no matrix form")
    M = np.asarray(M, dtype=complex)
    if M.shape != d.matrix_shape:
        raise DescriptorError(
            f"{d.label()} expects a {d.matrix_shape} matrix, got {M.shape}"
        )
    if d.kind is Kind.I:
        return M.reshape(-1).copy()
    if d.kind is Kind.II and not np.allclose(M, M.T, rtol=0, atol=atol):
        raise DescriptorError("R_II matrix is not symmetric")
    if d.kind is Kind.III and not np.allclose(M, -M.T, rtol=0, atol=atol):
        raise DescriptorError("R_III matrix is not antisymmetric")
    rows, cols = _index_sets(d)
    return M[rows, cols].copy()


def embedding(d: DomainDescriptor) -> np.ndarray:
    """Return the real matrix S with vec(to_matrix(v)) = S v.

    ``vec`` is row-major, so for R_I the embedding is the identity.
    """
    dim = dimension(d)
    rows, cols = d.matrix_shape
    S = np.zeros((rows * cols, dim))
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        S[:, k] = to_matrix(d, e).real.reshape(-1)
    return S


def factor_slices(
    d: DomainDescriptor,
) -> list[tuple[DomainDescriptor, slice]]:
    """Return ``(factor, slice)`` pairs; a non-product is its own factor."""
    if d.kind is not Kind.PRODUCT:
        return [(d, slice(0, dimension(d)))]
    out = []
    start = 0
    for f in d.factors:
        stop = start + dimension(f)
        out.append((f, slice(start, stop)))
        start = stop
    return out


# ---------------------------------------------------------------------------
# Membership and boundary distance
# ---------------------------------------------------------------------------


def _min_eig(H: np.ndarray) -> float:
    H = (H + H.conj().T) / 2
    return float(np.linalg.eigvalsh(H)[0])


def _lie_quantities(z: np.ndarray) -> tuple[float, float]:
    """Return ``(|zz'|, 1 + |zz'|^2 - 2 z z̄')`` for R_IV."""
    s = abs(np.sum(z * z))
    rho = 1.0 + s * s - 2.0 * float(np.vdot(z, z).real)
    return s, rho


def contains(d: DomainDescriptor, z: Any) -> bool:
    """Return ``True`` when ``z`` satisfies the defining inequalities."""
    coords = _coords(d, z)
    if d.kind is Kind.PRODUCT:
        return all(contains(f, coords[sl]) for f, sl in factor_slices(d))
    if d.kind is Kind.IV:
        s, rho = _lie_quantities(coords)
        return rho > 0 and s < 1
    Z = to_matrix(d, coords)
    if d.kind is Kind.I:
        H = np.eye(Z.shape[0]) - Z @ Z.conj().T
    elif d.kind is Kind.II:
        H = np.eye(Z.shape[0]) - Z @ Z.conj()
    else:
        H = np.eye(Z.shape[0]) + Z @ Z.conj()
    return _min_eig(H) > 0


def spectral_norm(d: DomainDescriptor, z: Any) -> float:
    """Return the norm whose open unit ball is ``d``.

    Largest singular value for the matrix kinds; for R_IV the Lie-ball norm
    ``sqrt(|z|^2 + sqrt(|z|^4 - |zz'|^2))``; the maximum over factors for a
    product.
    """
    coords = _coords(d, z)
    if d.kind is Kind.PRODUCT:
        return max(spectral_norm(f, coords[sl]) for f, sl in factor_slices(d))
    if d.kind is Kind.IV:
        sq = float(np.vdot(coords, coords).real)
        s = abs(np.sum(coords * coords))
        return float(np.sqrt(sq + np.sqrt(max(sq * sq - s * s, 0.0))))
    return float(np.linalg.norm(to_matrix(d, coords), 2))


def boundary_distance(d: DomainDescriptor, z: Any) -> float:
    """Return the boundary-distance surrogate of an interior point.

    ``1 - σ_max(Z)`` for R_I, R_II and R_III; for R_IV the smaller of
    ``1 - |zz'|`` and half the defining function; the factor minimum for a
    product.
    """
    coords = _coords(d, z)
    if not contains(d, coords):
        raise OutsideDomainError(f"point is not inside {d.label()}")
    if d.kind is Kind.PRODUCT:
        return min(
            boundary_distance(f, coords[sl]) for f, sl in factor_slices(d)
        )
    if d.kind is Kind.IV:
        s, rho = _lie_quantities(coords)
        return max(min(1.0 - s, rho / 2.0), 0.0)
    return max(1.0 - spectral_norm(d, coords), 0.0)


# ---------------------------------------------------------------------------
# Matrix utilities
# ---------------------------------------------------------------------------


def kronecker(A: Any, B: Any) -> np.ndarray:
    """Kronecker product with entries ``c[(j,l),(k,r)] = a[j,k] b[l,r]``.

    Rows and columns are ordered so that, for row-major ``vec``,
    ``kronecker(A, B) @ vec(X) == vec(A @ X @ B.T)``.
    """
    return np.kron(np.asarray(A), np.asarray(B))


class SvdNormalForm(NamedTuple):
    U: np.ndarray
    lambdas: np.ndarray
    V: np.ndarray


def diag_embed(lambdas: Sequence[float], m: int, n: int) -> np.ndarray:
    """Return ``Σ λ_k E_kk`` as an ``m×n`` matrix."""
    D = np.zeros((m, n), dtype=complex)
    k = min(len(lambdas), m, n)
    D[range(k), range(k)] = np.asarray(lambdas, dtype=float)[:k]
    return D


def svd_normal_form(Z: Any) -> SvdNormalForm:
    """Return ``U, λ, V`` with ``Z = U (Σ λ_k E_kk) V`` and λ descending."""
    Z = np.asarray(Z, dtype=complex)
    m, n = Z.shape
    if m > n:
        raise DescriptorError(f"normal form needs m <= n, got {Z.shape}")
    U, s, Vh = np.linalg.svd(Z, full_matrices=True)
    return SvdNormalForm(U, np.asarray(s, dtype=float), Vh)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_tangent(d: DomainDescriptor, rng: np.random.Generator):
    """Return a random complex tangent with standard normal entries."""
    dim = dimension(d)
    return Tangent(d, rng.normal(size=dim) + 1j * rng.normal(size=dim))


def sample_interior(
    d: DomainDescriptor,
    rng: np.random.Generator,
    radius: float = 1.0,
) -> Point:
    """Return a random point with ``spectral_norm < radius``.

    A Gaussian direction is scaled to spectral norm ``radius * u`` with
    ``u`` uniform on ``[0, 1)``; products sample each factor.
    """
    if d.kind is Kind.PRODUCT:
        parts = [
            sample_interior(f, rng, radius).coords for f in d.factors
        ]
        return Point(d, np.concatenate(parts))
    direction = sample_tangent(d, rng).coords
    norm = spectral_norm(d, direction)
    t = radius * rng.uniform(0.0, 1.0)
    return Point(d, direction * (t / norm))
