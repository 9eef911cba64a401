"""Extremal test functions on R_I(m, n).

A point ``a = r E_11`` and a direction ``w`` select one of three cases by
comparing the diagonal, first-row/column and remaining parts of ``w`` in the
Bergman length at ``a``.  Each case has a closed form built from
``c = exp(-a (1 - r))``:

* LogCase1   ``log(1 - c z11) - log(1 - z11)``
* RootCase2  ``S(Z) ((1 - c z11)^{-1/2} - (1 - z11)^{-1/2})``
* RootCase3  ``S(Z) (sqrt(1 - z11) / sqrt(1 - c z11) - 1)``

``S`` is a linear form whose coefficients are the unit phases ``e^{-iθ}`` of
the relevant entries of ``w``.  General near-boundary points are reduced to
``λ_1 E_11`` by a unitary rotation followed by a collapse map; the
resulting function is the diagonal one pulled back through those maps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, NamedTuple, Sequence

import numpy as np

from cartanbloch.automorphisms import collapse_map, unitary_rotation
from cartanbloch.constants import DEFAULT_A_PARAM
from cartanbloch.errors import (
    DegenerateDirectionError,
    DescriptorError,
    MapTypeError,
    OutsideDomainError,
)
from cartanbloch.geometry.domains import (
    DomainDescriptor,
    Kind,
    Point,
    _coords,
    as_point,
    boundary_distance,
    diag_embed,
    factor_slices,
    from_matrix,
    sample_interior,
    svd_normal_form,
    to_matrix,
    type_i,
)
from cartanbloch.geometry.metrics import bergman_form, rayleigh_sup
from cartanbloch.maps import HoloMap, compose

__all__ = [
    "Case",
    "Classification",
    "TestFunction",
    "LiftedTestFunction",
    "classify_direction",
    "build_diagonal",
    "build_general",
    "ratio_at",
    "decay_on_compact",
    "case1_lower_bound",
    "sampled_bloch_norm",
    "bounded_function_check",
    "lift_to_product",
    "diagonal_point",
]

log = logging.getLogger(__name__)

# Largest λ_1 accepted by build_general.
MAX_LAMBDA = 1.0 - 1e-8


class Case(str, Enum):
    LOG_1 = "LogCase1"
    ROOT_2 = "RootCase2"
    ROOT_3 = "RootCase3"


class Classification(NamedTuple):
    case: Case
    A: float
    B: float
    C: float


def _w_matrix(w: Any, d: DomainDescriptor | None = None) -> np.ndarray:
    arr = w.coords if hasattr(w, "coords") else np.asarray(w, dtype=complex)
    if d is None:
        d = getattr(w, "descriptor", None)
    if arr.ndim == 2:
        return np.asarray(arr, dtype=complex)
    if d is None:
        raise DescriptorError("direction needs a descriptor or matrix form")
    return to_matrix(d, arr)


def classify_direction(r: float, w: Any) -> Classification:
    """Split ``H_{rE11}(w, w) / (m+n)`` into ``A + B + C`` and pick a case.

    Ties go to the smaller case.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    W = _w_matrix(w)
    if not np.any(W):
        raise DegenerateDirectionError("direction w must be nonzero")
    sq = np.abs(W) ** 2
    A = float(sq[0, 0]) / (1.0 - r * r) ** 2
    B = (float(sq[0, 1:].sum()) + float(sq[1:, 0].sum())) / (1.0 - r * r)
    C = float(sq[1:, 1:].sum())
    if A >= B and A >= C:
        case = Case.LOG_1
    elif B >= C:
        case = Case.ROOT_2
    else:
        case = Case.ROOT_3
    return Classification(case, A, B, C)


def _phases(values: np.ndarray) -> np.ndarray:
    """``e^{-iθ}`` of each nonzero entry; zero entries drop out."""
    out = np.zeros_like(values, dtype=complex)
    nz = values != 0
    out[nz] = np.conj(values[nz]) / np.abs(values[nz])
    return out


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A base test function on R_I pulled back through ``pre_maps``.

    ``pre_maps`` are in application order; ``coefficients`` holds the
    phases of the linear form ``S`` (unused for LogCase1).
    """

    __test__ = False

    case: Case
    r: float
    a_param: float
    coefficients: np.ndarray = field(repr=False)
    domain: DomainDescriptor
    pre_maps: tuple[HoloMap, ...] = ()

    @property
    def c(self) -> float:
        return float(np.exp(-self.a_param * (1.0 - self.r)))

    @property
    def pre(self) -> HoloMap | None:
        if not self.pre_maps:
            return None
        return compose(*reversed(self.pre_maps))

    # -- base function on the collapsed point --------------------------------

    def _base_value(self, Z: np.ndarray) -> complex:
        z = Z[0, 0]
        c = self.c
        if self.case is Case.LOG_1:
            return complex(np.log(1 - c * z) - np.log(1 - z))
        S = complex(np.sum(self.coefficients * Z))
        if self.case is Case.ROOT_2:
            return S * complex(1 / np.sqrt(1 - c * z) - 1 / np.sqrt(1 - z))
        return S * complex(np.sqrt(1 - z) / np.sqrt(1 - c * z) - 1)

    def _base_gradient(self, Z: np.ndarray) -> np.ndarray:
        z = complex(Z[0, 0])
        c = self.c
        G = np.zeros(Z.shape, dtype=complex)
        if self.case is Case.LOG_1:
            G[0, 0] = 1 / (1 - z) - c / (1 - c * z)
            return G.reshape(-1)
        S = complex(np.sum(self.coefficients * Z))
        one, shrunk = np.sqrt(1 - z), np.sqrt(1 - c * z)
        if self.case is Case.ROOT_2:
            h = 1 / shrunk - 1 / one
            dh = 0.5 * c / shrunk**3 - 0.5 / one**3
        else:
            h = one / shrunk - 1
            dh = -0.5 / (one * shrunk) + 0.5 * c * one / shrunk**3
        G = self.coefficients * h
        G[0, 0] += S * dh
        return G.reshape(-1)

    # -- public --------------------------------------------------------------

    def value(self, z: Any) -> complex:
        coords = _coords(self.domain, z)
        pre = self.pre
        if pre is not None:
            coords = pre.apply(coords)
        return self._base_value(to_matrix(self.domain, coords))

    def gradient(self, z: Any) -> np.ndarray:
        """Row vector ``∇f(z)`` in row-major intrinsic coordinates."""
        coords = _coords(self.domain, z)
        pre = self.pre
        if pre is None:
            return self._base_gradient(to_matrix(self.domain, coords))
        inner = pre.apply(coords)
        return self._base_gradient(to_matrix(self.domain, inner)) @ pre.jac(
            coords
        )


@dataclass(frozen=True, eq=False)
class LiftedTestFunction:
    """An R_I test function read off one factor of a product domain."""

    base: TestFunction
    domain: DomainDescriptor
    factor_index: int

    @property
    def _slice(self) -> slice:
        return factor_slices(self.domain)[self.factor_index][1]

    def value(self, z: Any) -> complex:
        return self.base.value(_coords(self.domain, z)[self._slice])

    def gradient(self, z: Any) -> np.ndarray:
        coords = _coords(self.domain, z)
        g = np.zeros(coords.shape[0], dtype=complex)
        g[self._slice] = self.base.gradient(coords[self._slice])
        return g


def build_diagonal(
    r: float,
    w: Any,
    a_param: float = DEFAULT_A_PARAM,
    *,
    domain: DomainDescriptor | None = None,
) -> TestFunction:
    """Return the test function at ``r E_11`` adapted to direction ``w``."""
    if a_param <= 0:
        raise ValueError(f"a_param must be positive, got {a_param}")
    W = _w_matrix(w, domain)
    if domain is None:
        domain = getattr(w, "descriptor", None) or type_i(*W.shape)
    cls = classify_direction(r, W)
    coeff = np.zeros(W.shape, dtype=complex)
    if cls.case is Case.ROOT_2:
        coeff[0, 1:] = _phases(W[0, 1:])
        coeff[1:, 0] = _phases(W[1:, 0])
    elif cls.case is Case.ROOT_3:
        coeff[1:, 1:] = _phases(W[1:, 1:])
    log.debug("test function at r=%s: %s", r, cls.case.value)
    return TestFunction(cls.case, float(r), float(a_param), coeff, domain)


def build_general(
    a_point: Any,
    w: Any,
    a_param: float = DEFAULT_A_PARAM,
    *,
    domain: DomainDescriptor | None = None,
) -> TestFunction:
    """Return a test function peaking in direction ``w`` at ``a_point``.

    ``a_point`` is rotated to its singular-value diagonal, collapsed to
    ``λ_1 E_11`` and the diagonal test function is pulled back.
    """
    if domain is None:
        domain = getattr(a_point, "descriptor", None)
    if domain is None or domain.kind is not Kind.I:
        raise DescriptorError("test functions are built on R_I")
    pt = as_point(domain, a_point)
    A = pt.matrix
    m, n = A.shape
    _, lam, _ = svd_normal_form(A)
    if lam[0] >= MAX_LAMBDA:
        raise OutsideDomainError(
            f"λ_1 = {lam[0]:.17g} is too close to the boundary"
        )
    if lam[0] <= 0:
        raise DescriptorError("test functions need a nonzero point")
    if boundary_distance(domain, pt) >= 0.5:
        log.warning(
            "building a test function far from the boundary (λ_1=%.3g)",
            lam[0],
        )
    pre: list[HoloMap] = []
    if not np.allclose(A, diag_embed(lam, m, n), rtol=0, atol=1e-14):
        pre.append(unitary_rotation(A))
    if m >= 2 and lam[1] > 0:
        pre.append(collapse_map(lam, 1, n=n))
    vec = _coords(domain, w)
    if not np.any(vec):
        raise DegenerateDirectionError("direction w must be nonzero")
    coords = pt.coords
    for step in pre:
        vec = step.jac(coords) @ vec
        coords = step.apply(coords)
    base = build_diagonal(
        float(lam[0]), to_matrix(domain, vec), a_param, domain=domain
    )
    return TestFunction(
        base.case,
        base.r,
        base.a_param,
        base.coefficients,
        domain,
        tuple(pre),
    )


def ratio_at(f: Any, a_point: Any, w: Any) -> float:
    """Return ``|∇f(a) w| / H_a(w, w)^{1/2}``."""
    vec = _coords(f.domain, w)
    if not np.any(vec):
        raise DegenerateDirectionError("direction w must be nonzero")
    grad = f.gradient(a_point)
    num = abs(complex(grad @ vec))
    return num / float(np.sqrt(bergman_form(f.domain, a_point, vec)))


def decay_on_compact(
    f: Any, rho: float, samples: int = 1000, seed: int = 0
) -> float:
    """Return ``sup |f|`` over random points with spectral norm below
    ``rho``."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        z = sample_interior(f.domain, rng, rho)
        best = max(best, abs(f.value(z)))
    return best


def case1_lower_bound(r: float, a_param: float, m: int, n: int) -> float:
    """Lower bound of the LogCase1 ratio at ``r E_11``.

    Tends to ``sqrt(1 / (3 (m+n))) a / (a + 1)`` as ``r → 1``.
    """
    c = np.exp(-a_param * (1.0 - r))
    return float(
        np.sqrt(1.0 / (3.0 * (m + n))) * (1.0 - (1.0 - r) * c / (1.0 - c * r))
    )


def sampled_bloch_norm(
    f: Any,
    samples: int = 1000,
    seed: int = 0,
    radius: float = 1.0,
    *,
    extra_points: Sequence[Any] = (),
) -> float:
    """Return the largest ``Q_f(z)`` over random interior points.

    ``extra_points`` are evaluated as well; points the metric refuses are
    skipped.
    """
    rng = np.random.default_rng(seed)
    points = [sample_interior(f.domain, rng, radius) for _ in range(samples)]
    points.extend(as_point(f.domain, p) for p in extra_points)
    best = 0.0
    for z in points:
        try:
            value = rayleigh_sup(f.domain, z, f.gradient(z))
        except (OutsideDomainError, ValueError) as exc:
            log.warning("skipping sample: %s", exc)
            continue
        best = max(best, value)
    return float(np.sqrt(best))


def bounded_function_check(
    f: Any, samples: int = 1000, seed: int = 0
) -> dict[str, float]:
    """Compare the sampled Bloch seminorm with the sampled ``sup |f|``."""
    rng = np.random.default_rng(seed)
    sup_f = 0.0
    sup_q = 0.0
    for _ in range(samples):
        z = sample_interior(f.domain, rng)
        sup_f = max(sup_f, abs(f.value(z)))
        sup_q = max(sup_q, rayleigh_sup(f.domain, z, f.gradient(z)))
    seminorm = float(np.sqrt(sup_q))
    return {
        "seminorm": seminorm,
        "sup_abs": sup_f,
        "ratio": seminorm / sup_f if sup_f > 0 else 0.0,
    }


def lift_to_product(
    f: TestFunction, descriptor: DomainDescriptor, factor_index: int
) -> LiftedTestFunction:
    """Read ``f`` off factor ``factor_index`` of a product domain."""
    if descriptor.kind is not Kind.PRODUCT:
        raise MapTypeError("lift_to_product needs a product domain")
    if not 0 <= factor_index < len(descriptor.factors):
        raise DescriptorError(f"no factor {factor_index}")
    if descriptor.factors[factor_index] != f.domain:
        raise MapTypeError(
            f"factor {factor_index} is "
            f"{descriptor.factors[factor_index].label()}, function lives on "
            f"{f.domain.label()}"
        )
    return LiftedTestFunction(f, descriptor, factor_index)


def diagonal_point(d: DomainDescriptor, r: float) -> Point:
    """Return ``r E_11`` in R_I."""
    m, n = d.matrix_shape
    M = np.zeros((m, n), dtype=complex)
    M[0, 0] = r
    return Point(d, from_matrix(d, M))
