"""Holomorphic self-maps with analytic and finite-difference Jacobians.

Every map is an immutable value with ``source`` and ``target`` descriptors.
Jacobians are ``N_target × N_source`` complex matrices in intrinsic
coordinates.  ``Compose`` keeps its children in application order; the
helper :func:`compose` takes them in mathematical order, so
``compose(f, g)`` is ``f ∘ g``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, ClassVar, Mapping

import numpy as np
from scipy import linalg

from cartanbloch.automorphisms import (
    MobiusFactors,
    apply_matrix,
    jacobian_factors,
    mobius_factors,
)
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
    Tangent,
    _coords,
    as_point,
    contains,
    dimension,
    from_matrix,
    kronecker,
    product,
    to_matrix,
    type_i,
)
from cartanbloch.geometry.metrics import bergman_form

__all__ = [
    "HoloMap",
    "Identity",
    "Constant",
    "Scale",
    "DiscAffine",
    "UnitaryPair",
    "Mobius",
    "ProductMap",
    "Compose",
    "FactorEmbed",
    "REGISTRY",
    "evaluate",
    "jacobian",
    "jacobian_fd",
    "compose",
    "schwarz_pick_ratio",
    "parse_map",
    "describe",
]

log = logging.getLogger(__name__)


class HoloMap:
    """Base class of the map families."""

    family: ClassVar[str] = ""

    @property
    def source(self) -> DomainDescriptor:
        raise NotImplementedError

    @property
    def target(self) -> DomainDescriptor:
        return self.source

    def apply(self, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jac(self, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict[str, Any]:
        return {}

    def children(self) -> tuple["HoloMap", ...]:
        return ()

    def evaluate(self, z: Any) -> Point:
        return evaluate(self, z)

    def jacobian(self, z: Any) -> np.ndarray:
        return jacobian(self, z)


@dataclass(frozen=True, eq=False)
class Identity(HoloMap):
    domain: DomainDescriptor
    family: ClassVar[str] = "identity"

    @property
    def source(self) -> DomainDescriptor:
        return self.domain

    def apply(self, coords):
        return coords.copy()

    def jac(self, coords):
        return np.eye(dimension(self.domain), dtype=complex)


@dataclass(frozen=True, eq=False)
class Constant(HoloMap):
    domain: DomainDescriptor
    value: Point
    family: ClassVar[str] = "constant"

    def __post_init__(self) -> None:
        pt = as_point(self.domain, self.value)
        if not contains(self.domain, pt):
            raise OutsideDomainError("constant value is not interior")
        object.__setattr__(self, "value", pt)

    @property
    def source(self) -> DomainDescriptor:
        return self.domain

    def apply(self, coords):
        return np.array(self.value.coords)

    def jac(self, coords):
        dim = dimension(self.domain)
        return np.zeros((dim, dim), dtype=complex)

    def params(self):
        return {"value": _encode_array(self.value.coords)}


@dataclass(frozen=True, eq=False)
class Scale(HoloMap):
    """``z ↦ c z``; a self-map of every circular domain for ``0 < c ≤ 1``."""

    domain: DomainDescriptor
    c: float
    family: ClassVar[str] = "scale"

    def __post_init__(self) -> None:
        c = float(self.c)
        if not 0.0 < c <= 1.0:
            raise DescriptorError(f"scale factor {c} outside (0, 1]")
        object.__setattr__(self, "c", c)

    @property
    def source(self) -> DomainDescriptor:
        return self.domain

    def apply(self, coords):
        return self.c * coords

    def jac(self, coords):
        return self.c * np.eye(dimension(self.domain), dtype=complex)

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True, eq=False)
class DiscAffine(HoloMap):
    """``z ↦ a + b z`` on the unit disc R_I(1,1)."""

    a: complex
    b: complex
    family: ClassVar[str] = "disc_affine"

    def __post_init__(self) -> None:
        a, b = complex(self.a), complex(self.b)
        if abs(a) + abs(b) > 1.0 + 1e-12:
            raise DescriptorError(
                f"|a| + |b| = {abs(a) + abs(b):.17g} exceeds 1"
            )
        if b == 0 and abs(a) >= 1.0:
            raise DescriptorError("constant disc map must be interior")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def source(self) -> DomainDescriptor:
        return type_i(1, 1)

    def apply(self, coords):
        return self.a + self.b * coords

    def jac(self, coords):
        return np.array([[self.b]], dtype=complex)

    def params(self):
        return {"a": _encode_complex(self.a), "b": _encode_complex(self.b)}


def _check_unitary(M: np.ndarray, name: str) -> None:
    eye = np.eye(M.shape[0])
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DescriptorError(f"{name} must be square, got {M.shape}")
    if not np.allclose(M.conj().T @ M, eye, rtol=0, atol=1e-10):
        raise DescriptorError(f"{name} is not unitary")


@dataclass(frozen=True, eq=False)
class UnitaryPair(HoloMap):
    """``Z ↦ P Z Q`` on R_I(m, n) with unitary ``P`` and ``Q``."""

    domain: DomainDescriptor
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    family: ClassVar[str] = "unitary_pair"

    def __post_init__(self) -> None:
        if self.domain.kind is not Kind.I:
            raise DescriptorError("unitary_pair acts on R_I only")
        m, n = self.domain.matrix_shape
        P = np.asarray(self.P, dtype=complex)
        Q = np.asarray(self.Q, dtype=complex)
        _check_unitary(P, "P")
        _check_unitary(Q, "Q")
        if P.shape != (m, m) or Q.shape != (n, n):
            raise DescriptorError(
                f"unitary_pair on {self.domain.label()} needs {m}x{m} and "
                f"{n}x{n} factors, got {P.shape} and {Q.shape}"
            )
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)

    @property
    def source(self) -> DomainDescriptor:
        return self.domain

    def apply(self, coords):
        Z = to_matrix(self.domain, coords)
        return from_matrix(self.domain, self.P @ Z @ self.Q)

    def jac(self, coords):
        return kronecker(self.P, self.Q.T)

    def params(self):
        return {"P": _encode_array(self.P), "Q": _encode_array(self.Q)}


@dataclass(frozen=True, eq=False)
class Mobius(HoloMap):
    """The involutive automorphism ``Φ_P`` of R_I."""

    domain: DomainDescriptor
    P: Point
    family: ClassVar[str] = "mobius"

    def __post_init__(self) -> None:
        if self.domain.kind is not Kind.I:
            raise DescriptorError("mobius acts on R_I only")
        pt = as_point(self.domain, self.P)
        if not contains(self.domain, pt):
            raise OutsideDomainError("Möbius centre is not interior")
        object.__setattr__(self, "P", pt)

    @cached_property
    def factors(self) -> MobiusFactors:
        return mobius_factors(self.P)

    @property
    def source(self) -> DomainDescriptor:
        return self.domain

    def apply(self, coords):
        Z = to_matrix(self.domain, coords)
        return from_matrix(self.domain, apply_matrix(self.factors, Z))

    def jac(self, coords):
        L, K = jacobian_factors(self.factors, to_matrix(self.domain, coords))
        return kronecker(L, K.T)

    def params(self):
        return {"P": _encode_array(self.P.matrix)}


def _offsets(maps: tuple[HoloMap, ...], attr: str) -> list[slice]:
    out = []
    start = 0
    for m in maps:
        stop = start + dimension(getattr(m, attr))
        out.append(slice(start, stop))
        start = stop
    return out


@dataclass(frozen=True, eq=False)
class ProductMap(HoloMap):
    """Factorwise map ``(z_1, …, z_k) ↦ (φ_1(z_1), …, φ_k(z_k))``."""

    parts: tuple[HoloMap, ...]
    family: ClassVar[str] = "product"

    def __post_init__(self) -> None:
        parts = tuple(self.parts)
        if len(parts) < 2:
            raise DescriptorError("product map needs at least two factors")
        object.__setattr__(self, "parts", parts)

    @cached_property
    def _source(self) -> DomainDescriptor:
        return product(*(p.source for p in self.parts))

    @cached_property
    def _target(self) -> DomainDescriptor:
        return product(*(p.target for p in self.parts))

    @property
    def source(self) -> DomainDescriptor:
        return self._source

    @property
    def target(self) -> DomainDescriptor:
        return self._target

    def apply(self, coords):
        return np.concatenate(
            [
                p.apply(coords[sl])
                for p, sl in zip(self.parts, _offsets(self.parts, "source"))
            ]
        )

    def jac(self, coords):
        blocks = [
            p.jac(coords[sl])
            for p, sl in zip(self.parts, _offsets(self.parts, "source"))
        ]
        return linalg.block_diag(*blocks)

    def children(self):
        return self.parts


@dataclass(frozen=True, eq=False)
class Compose(HoloMap):
    """Composition with ``steps`` in application order."""

    steps: tuple[HoloMap, ...]
    family: ClassVar[str] = "compose"

    def __post_init__(self) -> None:
        steps = tuple(self.steps)
        if not steps:
            raise DescriptorError("compose needs at least one map")
        for first, second in zip(steps, steps[1:]):
            if first.target != second.source:
                raise MapTypeError(
                    f"cannot feed {first.target.label()} into a map on "
                    f"{second.source.label()}"
                )
        object.__setattr__(self, "steps", steps)

    @property
    def source(self) -> DomainDescriptor:
        return self.steps[0].source

    @property
    def target(self) -> DomainDescriptor:
        return self.steps[-1].target

    def apply(self, coords):
        for step in self.steps:
            coords = step.apply(coords)
        return coords

    def jac(self, coords):
        J = None
        for step in self.steps:
            local = step.jac(coords)
            J = local if J is None else local @ J
            coords = step.apply(coords)
        return J

    def children(self):
        # mathematical order, outermost first
        return tuple(reversed(self.steps))


@dataclass(frozen=True, eq=False)
class FactorEmbed(HoloMap):
    """Product self-map acting by ``base`` on one factor.

    The selected factor is mapped by ``base``; every other factor is sent
    to its origin.
    """

    domain: DomainDescriptor
    index: int
    base: HoloMap
    family: ClassVar[str] = "factor_embed"

    def __post_init__(self) -> None:
        if self.domain.kind is not Kind.PRODUCT:
            raise DescriptorError("factor_embed needs a product domain")
        index = int(self.index)
        if not 0 <= index < len(self.domain.factors):
            raise DescriptorError(
                f"factor index {index} outside 0..{len(self.domain.factors)-1}"
            )
        factor = self.domain.factors[index]
        if self.base.source != factor or self.base.target != factor:
            raise MapTypeError(
                f"base map must be a self-map of {factor.label()}"
            )
        object.__setattr__(self, "index", index)

    @property
    def source(self) -> DomainDescriptor:
        return self.domain

    @cached_property
    def _slice(self) -> slice:
        start = sum(dimension(f) for f in self.domain.factors[: self.index])
        return slice(start, start + dimension(self.domain.factors[self.index]))

    def apply(self, coords):
        out = np.zeros_like(coords)
        out[self._slice] = self.base.apply(coords[self._slice])
        return out

    def jac(self, coords):
        dim = dimension(self.domain)
        J = np.zeros((dim, dim), dtype=complex)
        sl = self._slice
        J[sl, sl] = self.base.jac(coords[sl])
        return J

    def params(self):
        return {"index": self.index}

    def children(self):
        return (self.base,)


REGISTRY: dict[str, type[HoloMap]] = {
    cls.family: cls
    for cls in (
        Identity,
        Constant,
        Scale,
        DiscAffine,
        UnitaryPair,
        Mobius,
        ProductMap,
        Compose,
        FactorEmbed,
    )
}


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _source_coords(m: HoloMap, z: Any) -> np.ndarray:
    if isinstance(z, (Point, Tangent)) and z.descriptor != m.source:
        raise MapTypeError(
            f"map on {m.source.label()} applied to a point of "
            f"{z.descriptor.label()}"
        )
    try:
        return _coords(m.source, z)
    except DescriptorError as exc:
        raise MapTypeError(str(exc)) from exc


def evaluate(m: HoloMap, z: Any) -> Point:
    """Return ``φ(z)`` as a point of ``m.target``."""
    return Point(m.target, m.apply(_source_coords(m, z)))


def jacobian(m: HoloMap, z: Any) -> np.ndarray:
    """Return the analytic Jacobian ``Jφ(z)``."""
    return np.asarray(m.jac(_source_coords(m, z)), dtype=complex)


def jacobian_fd(
    m: HoloMap,
    z: Any,
    h: float = 1e-5,
    *,
    with_residual: bool = False,
):
    """Central-difference Jacobian along the real axis of each coordinate.

    The same stencil along the imaginary axis gives a second estimate; for a
    holomorphic map both agree and their largest gap is the Cauchy–Riemann
    residual returned with ``with_residual=True``.
    """
    coords = _source_coords(m, z)
    dim = coords.shape[0]
    J = np.zeros((dimension(m.target), dim), dtype=complex)
    residual = 0.0
    for k in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[k] = h
        stencil = (coords + e, coords - e, coords + 1j * e, coords - 1j * e)
        if not all(contains(m.source, s) for s in stencil):
            raise OutsideDomainError(
                f"finite-difference stencil of size {h:g} leaves "
                f"{m.source.label()}"
            )
        re_plus, re_minus, im_plus, im_minus = (m.apply(s) for s in stencil)
        col = (re_plus - re_minus) / (2.0 * h)
        col_im = (im_plus - im_minus) / (2j * h)
        J[:, k] = col
        residual = max(residual, float(np.max(np.abs(col - col_im))))
    scale = max(1.0, float(np.max(np.abs(J), initial=0.0)))
    residual /= scale
    log.debug("fd Jacobian of %s: CR residual %.3g", m.family, residual)
    if with_residual:
        return J, residual
    return J


def compose(*maps: HoloMap) -> HoloMap:
    """Return ``maps[0] ∘ maps[1] ∘ …``; nested compositions are flattened."""
    steps: list[HoloMap] = []
    for m in reversed(maps):
        if isinstance(m, Compose):
            steps.extend(m.steps)
        else:
            steps.append(m)
    if len(steps) == 1:
        return steps[0]
    return Compose(tuple(steps))


def schwarz_pick_ratio(m: HoloMap, z: Any, u: Any) -> float:
    """Return ``H_{φ(z)}(Jφ(z)u, Jφ(z)u) / H_z(u, u)``."""
    coords = _source_coords(m, z)
    vec = _coords(m.source, u)
    if not np.any(vec):
        raise DegenerateDirectionError("direction u must be nonzero")
    image = m.apply(coords)
    pushed = m.jac(coords) @ vec
    denom = bergman_form(m.source, coords, vec)
    return bergman_form(m.target, image, pushed) / denom


# ---------------------------------------------------------------------------
# Descriptor trees
# ---------------------------------------------------------------------------


def _encode_complex(value: complex) -> Any:
    value = complex(value)
    if value.imag == 0:
        return value.real
    return [value.real, value.imag]


def _encode_array(arr: Any) -> Any:
    arr = np.asarray(arr, dtype=complex)
    if not np.any(arr.imag):
        return arr.real.tolist()
    return {"re": arr.real.tolist(), "im": arr.imag.tolist()}


def describe(m: HoloMap) -> dict[str, Any]:
    """Return the descriptor tree ``{"family", "params", "children"}``."""
    return {
        "family": m.family,
        "params": m.params(),
        "children": [describe(c) for c in m.children()],
    }


def parse_map(
    descriptor: Mapping[str, Any], domain: DomainDescriptor
) -> HoloMap:
    """Build a map on ``domain`` from a descriptor tree.

    ``compose`` children are listed outermost first; ``product`` children
    follow the factors of ``domain``; ``factor_embed`` takes one child on
    the factor chosen by the 0-based ``index`` parameter.
    """
    from cartanbloch.io.config import (
        canonical_family,
        normalise_keys,
        parse_array,
        parse_complex,
        parse_unitary,
    )

    node = normalise_keys(descriptor, ("family", "params", "children"))
    if "family" not in node:
        raise DescriptorError("map descriptor has no family")
    family = canonical_family(node["family"])
    params = dict(node.get("params") or {})
    children = list(node.get("children") or [])

    if family == "identity":
        return Identity(domain)
    if family == "constant":
        return Constant(domain, as_point(domain, parse_array(params["value"])))
    if family == "scale":
        return Scale(domain, float(params["c"]))
    if family == "disc_affine":
        if domain != type_i(1, 1):
            raise MapTypeError("disc_affine lives on R_I(1,1)")
        return DiscAffine(
            parse_complex(params.get("a", 0.0)),
            parse_complex(params.get("b", 1.0)),
        )
    if family == "unitary_pair":
        if domain.kind is not Kind.I:
            raise MapTypeError("unitary_pair lives on R_I")
        m, n = domain.matrix_shape
        seed = params.get("seed")
        P = parse_unitary(params.get("P"), m, seed, 0)
        Q = parse_unitary(params.get("Q"), n, seed, 1)
        return UnitaryPair(domain, P, Q)
    if family == "mobius":
        if domain.kind is not Kind.I:
            raise MapTypeError("mobius lives on R_I")
        return Mobius(domain, as_point(domain, parse_array(params["P"])))
    if family == "product":
        if domain.kind is not Kind.PRODUCT:
            raise MapTypeError("product map needs a product domain")
        if len(children) != len(domain.factors):
            raise DescriptorError(
                f"product map needs {len(domain.factors)} children, "
                f"got {len(children)}"
            )
        return ProductMap(
            tuple(parse_map(c, f) for c, f in zip(children, domain.factors))
        )
    if family == "compose":
        if not children:
            raise DescriptorError("compose needs children")
        return compose(*(parse_map(c, domain) for c in children))
    if family == "factor_embed":
        if domain.kind is not Kind.PRODUCT:
            raise MapTypeError("factor_embed needs a product domain")
        index = int(params.get("index", 0))
        if not 0 <= index < len(domain.factors) or len(children) != 1:
            raise DescriptorError(
                "factor_embed needs a valid index and exactly one child"
            )
        base = parse_map(children[0], domain.factors[index])
        return FactorEmbed(domain, index, base)
    raise DescriptorError(f"unknown map family {node['family']!r}")
