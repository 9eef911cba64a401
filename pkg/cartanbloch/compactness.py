"""Distortion ratios of self-maps and boundary-approach diagnostics.

The distortion ratio at ``z`` is the largest value of
``H_{φ(z)}(Jφ(z)u, Jφ(z)u) / H_z(u, u)`` over nonzero ``u``, obtained as
the top eigenvalue of a Hermitian-definite pencil.  Profiles collect it at
points whose images approach the boundary and turn the decay pattern into
an evidence verdict.  Verdicts describe the sampled scale only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from multiprocessing import Pool
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np
import pandas as pd
from scipy import linalg, optimize

from cartanbloch.constants import (
    BOUNDARY_FLOOR,
    DEFAULT_A_PARAM,
    DEFAULT_DELTAS,
    DEFAULT_EPSILONS,
    DEFAULT_WORKERS,
    NEAR_BOUNDARY,
)
from cartanbloch.errors import CartanError, ConditioningError, MapTypeError
from cartanbloch.geometry.domains import (
    DomainDescriptor,
    Kind,
    Point,
    Tangent,
    _coords,
    boundary_distance,
    contains,
    dimension,
    factor_slices,
    sample_interior,
    sample_tangent,
    spectral_norm,
)
from cartanbloch.geometry.metrics import bergman_form, metric_matrix
from cartanbloch.io.report import (
    PROBE_COLUMNS,
    PROFILE_COLUMNS,
    SCHWARZ_PICK_COLUMNS,
    df_from_records,
)
from cartanbloch.maps import HoloMap, ProductMap, schwarz_pick_ratio
from cartanbloch.testfns import (
    TestFunction,
    build_general,
    lift_to_product,
    sampled_bloch_norm,
)

__all__ = [
    "Verdict",
    "RatioSample",
    "RatioProfile",
    "SamplerSpec",
    "ProbeRow",
    "ProductDecomposition",
    "distortion_ratio",
    "boundary_approach",
    "ratio_profile",
    "compactness_verdict",
    "TestFunctionFamily",
    "sequence_probe",
    "product_ratio_decomposition",
    "schwarz_pick_constant",
    "profile_df",
    "probe_df",
]

log = logging.getLogger(__name__)


class Verdict(str, Enum):
    COMPACT = "EvidenceCompact"
    NON_COMPACT = "EvidenceNonCompact"
    BOUNDED_AWAY = "ImageBoundedAway"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class RatioSample:
    z: Point
    delta: float
    ratio: float
    direction: Tangent
    index: int = 0


@dataclass(frozen=True, eq=False)
class RatioProfile:
    map: HoloMap
    samples: tuple[RatioSample, ...]
    verdict: Verdict


@dataclass(frozen=True)
class SamplerSpec:
    """How :func:`ratio_profile` chooses its points."""

    deltas: tuple[float, ...] = DEFAULT_DELTAS
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    n_starts: int = 6
    n_rays: int = 2
    n_uniform: int = 16
    workers: int = DEFAULT_WORKERS


# ---------------------------------------------------------------------------
# Distortion ratio
# ---------------------------------------------------------------------------


def _pencil_top(
    numerator: np.ndarray, denominator: np.ndarray
) -> tuple[float, np.ndarray]:
    """Largest eigenpair of ``numerator x = μ denominator x``.

    ``denominator = L L†`` is reduced by Cholesky and the symmetric matrix
    ``L^{-1} numerator L^{-†}`` is diagonalised.
    """
    try:
        L = linalg.cholesky(denominator, lower=True)
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"source metric is not definite: {exc}")
    half = linalg.solve_triangular(L, numerator, lower=True)
    reduced = linalg.solve_triangular(L, half.conj().T, lower=True).conj().T
    reduced = (reduced + reduced.conj().T) / 2
    values, vectors = linalg.eigh(reduced)
    top = vectors[:, -1]
    direction = linalg.solve_triangular(L, top, lower=True, trans="C")
    return max(float(values[-1]), 0.0), direction


def distortion_ratio(m: HoloMap, z: Any) -> tuple[float, Tangent]:
    """Return the supremum of the metric distortion of ``m`` at ``z``
    and a direction attaining it."""
    coords = _coords(m.source, z)
    image = m.apply(coords)
    G_src = metric_matrix(m.source, coords).gram
    G_img = metric_matrix(m.target, image).gram
    J = m.jac(coords)
    pulled = J.conj().T @ G_img @ J
    ratio, direction = _pencil_top(pulled, G_src)
    norm = np.linalg.norm(direction)
    return ratio, Tangent(m.source, direction / norm)


# ---------------------------------------------------------------------------
# Boundary approach
# ---------------------------------------------------------------------------


def _unit_direction(d: DomainDescriptor, x: np.ndarray) -> np.ndarray | None:
    dim = dimension(d)
    u = x[:dim] + 1j * x[dim:]
    norm = spectral_norm(d, u)
    if not np.isfinite(norm) or norm <= 0:
        return None
    return u / norm


def _image_delta(m: HoloMap, coords: np.ndarray) -> float:
    try:
        return boundary_distance(m.target, m.apply(coords))
    except CartanError:
        return 0.0


def _ray_limit(d: DomainDescriptor, u: np.ndarray) -> float:
    """Largest ray parameter whose point keeps the metric floor."""
    gap = 10.0 * BOUNDARY_FLOOR
    while gap < 1.0:
        t = 1.0 - gap
        z = t * u
        if contains(d, z) and boundary_distance(d, z) >= BOUNDARY_FLOOR:
            return t
        gap *= 10.0
    return 0.0


def _best_directions(
    m: HoloMap, rng: np.random.Generator, n_starts: int, n_rays: int
) -> list[tuple[float, np.ndarray]]:
    """Directions whose rays bring the image closest to the boundary."""
    dim = dimension(m.source)
    found: list[tuple[float, np.ndarray]] = []
    for _ in range(n_starts):
        x0 = rng.normal(size=2 * dim)

        def objective(x: np.ndarray) -> float:
            u = _unit_direction(m.source, x)
            if u is None:
                return 1e3
            t = _ray_limit(m.source, u)
            return math.log(max(_image_delta(m, t * u), 1e-300))

        res = optimize.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxiter": 60 * dim, "xatol": 1e-6, "fatol": 1e-3},
        )
        u = _unit_direction(m.source, np.asarray(res.x))
        if u is None:
            continue
        found.append((float(res.fun), u))
    found.sort(key=lambda item: item[0])
    return found[:n_rays]


def _bisect_ray(
    m: HoloMap, u: np.ndarray, t_hi: float, delta: float
) -> np.ndarray | None:
    """Point on the ray ``t u`` whose image distance is within a factor
    two of ``delta``."""
    lo, hi = 0.0, t_hi
    d_lo = _image_delta(m, lo * u)
    d_hi = _image_delta(m, hi * u)
    if delta / 2 <= d_lo <= 2 * delta:
        return lo * u
    if delta / 2 <= d_hi <= 2 * delta:
        return hi * u
    if d_lo < delta / 2 or d_hi > 2 * delta:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d_mid = _image_delta(m, mid * u)
        if d_mid > 2 * delta:
            lo = mid
        elif d_mid < delta / 2:
            hi = mid
        else:
            return mid * u
        if hi - lo < 1e-16:
            break
    return None


def boundary_approach(
    m: HoloMap,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    seed: int = 0,
    *,
    n_starts: int = 6,
    n_rays: int = 2,
) -> list[tuple[float, Point]]:
    """Return ``(target δ, z)`` pairs with ``boundary_distance(φ(z))``
    within a factor two of each target."""
    rng = np.random.default_rng(seed)
    out: list[tuple[float, Point]] = []
    for _, u in _best_directions(m, rng, n_starts, n_rays):
        t_hi = _ray_limit(m.source, u)
        for delta in deltas:
            z = _bisect_ray(m, u, t_hi, float(delta))
            if z is not None:
                out.append((float(delta), Point(m.source, z)))
    log.debug("boundary approach: %d points for %s", len(out), m.family)
    return out


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------


def _ratio_task(args: tuple[HoloMap, Point, int]) -> RatioSample | None:
    m, z, index = args
    try:
        delta = boundary_distance(m.target, m.apply(z.coords))
        ratio, direction = distortion_ratio(m, z)
    except CartanError as exc:
        log.warning("dropping sample %d: %s", index, exc)
        return None
    return RatioSample(z, delta, ratio, direction, index)


def _map_ordered(
    func: Callable, items: list, workers: int
) -> list:
    if workers > 1 and len(items) > 1:
        with Pool(workers) as pool:
            return pool.map(func, items)
    return [func(item) for item in items]


def ratio_profile(
    m: HoloMap,
    strategy: SamplerSpec | None = None,
    seed: int = 0,
) -> RatioProfile:
    """Sample distortion ratios at points whose images approach the
    boundary, plus uniform interior points."""
    spec = strategy or SamplerSpec()
    points = [
        z
        for _, z in boundary_approach(
            m,
            spec.deltas,
            seed,
            n_starts=spec.n_starts,
            n_rays=spec.n_rays,
        )
    ]
    rng = np.random.default_rng([seed, 1])
    points.extend(
        sample_interior(m.source, rng) for _ in range(spec.n_uniform)
    )
    tasks = [(m, z, i) for i, z in enumerate(points)]
    results = _map_ordered(_ratio_task, tasks, spec.workers)
    samples = [s for s in results if s is not None]
    samples.sort(key=lambda s: (-s.delta, s.index))
    profile = RatioProfile(m, tuple(samples), Verdict.INCONCLUSIVE)
    verdict = compactness_verdict(profile, spec.epsilons)
    log.info(
        "profile of %s: %d samples, verdict %s",
        m.family,
        len(samples),
        verdict.value,
    )
    return RatioProfile(m, tuple(samples), verdict)


def _decade(delta: float) -> int:
    return int(math.floor(-math.log10(delta)))


def compactness_verdict(
    p: RatioProfile | Sequence[RatioSample],
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
) -> Verdict:
    """Turn a profile into evidence.

    * no sample with δ below the near-boundary threshold: ImageBoundedAway
    * finest-decade max ≥ half the overall max and ≥ 1e-2: EvidenceNonCompact
    * finest-decade max not above the next decade's and below every ε:
      EvidenceCompact
    * anything else: Inconclusive
    """
    samples = p.samples if isinstance(p, RatioProfile) else tuple(p)
    near = [s for s in samples if 0 < s.delta < NEAR_BOUNDARY]
    if not near:
        return Verdict.BOUNDED_AWAY
    by_decade: dict[int, float] = {}
    for s in near:
        k = _decade(s.delta)
        by_decade[k] = max(by_decade.get(k, 0.0), s.ratio)
    overall = max(s.ratio for s in samples)
    decades = sorted(by_decade)
    finest = by_decade[decades[-1]]
    if finest >= 0.5 * overall and finest >= 1e-2:
        return Verdict.NON_COMPACT
    decreasing = len(decades) < 2 or finest <= by_decade[decades[-2]]
    if decreasing and all(finest < eps for eps in epsilons):
        return Verdict.COMPACT
    return Verdict.INCONCLUSIVE


def profile_df(profile: RatioProfile) -> pd.DataFrame:
    """Plot-ready table of a profile, one row per sample."""
    records = [
        {
            "sample_index": s.index,
            "delta": s.delta,
            "ratio": s.ratio,
            "verdict_flag": profile.verdict.value,
        }
        for s in profile.samples
    ]
    return df_from_records(records, PROFILE_COLUMNS)


# ---------------------------------------------------------------------------
# Sequence probe
# ---------------------------------------------------------------------------


TestFunctionFamily = Callable[[Point, np.ndarray, float], TestFunction]


class ProbeRow(NamedTuple):
    r: float
    delta: float
    estimate: float


@dataclass(frozen=True, eq=False)
class _PulledBack:
    """``f ∘ φ`` with the chain-rule gradient."""

    f: Any
    m: HoloMap

    @property
    def domain(self) -> DomainDescriptor:
        return self.m.source

    def value(self, z: Any) -> complex:
        return self.f.value(self.m.apply(_coords(self.domain, z)))

    def gradient(self, z: Any) -> np.ndarray:
        coords = _coords(self.domain, z)
        return self.f.gradient(self.m.apply(coords)) @ self.m.jac(coords)


def _r1_factor(d: DomainDescriptor) -> int | None:
    if d.kind is Kind.I:
        return None
    if d.kind is Kind.PRODUCT:
        for k, f in enumerate(d.factors):
            if f.kind is Kind.I:
                return k
    raise MapTypeError(f"{d.label()} has no R_I factor for test functions")


def sequence_probe(
    m: HoloMap,
    r_grid: Sequence[float],
    *,
    a_param: float = DEFAULT_A_PARAM,
    samples: int = 200,
    seed: int = 0,
    family: TestFunctionFamily | None = None,
) -> list[ProbeRow]:
    """Estimate ``‖f_r ∘ φ‖_β`` for test functions peaking at images
    ``φ(z_r)`` with ``boundary_distance(φ(z_r)) ≈ 1 - r``.

    ``family(a_point, w, a_param)`` builds the test function on the R_I
    target (or R_I factor) at the image point in the pushed-forward
    direction ``w``; it defaults to :func:`build_general`.
    """
    family = family or build_general
    index = _r1_factor(m.target)
    rows: list[ProbeRow] = []
    for r in r_grid:
        found = boundary_approach(m, [1.0 - r], seed)
        if not found:
            log.info("no image point near δ=%.3g for %s", 1.0 - r, m.family)
            continue
        _, z = found[0]
        image = m.apply(z.coords)
        try:
            _, u = distortion_ratio(m, z)
        except CartanError as exc:
            log.warning("skipping r=%s: %s", r, exc)
            continue
        w = m.jac(z.coords) @ u.coords
        if index is None:
            factor, sl = m.target, slice(None)
        else:
            factor, sl = factor_slices(m.target)[index]
        a_point, w_f = image[sl], w[sl]
        if not np.any(np.abs(w_f) > 1e-14):
            w_f = np.zeros_like(w_f)
            w_f[0] = 1.0
        try:
            f = family(Point(factor, a_point), w_f, a_param)
        except CartanError as exc:
            log.warning("skipping r=%s: %s", r, exc)
            continue
        if index is not None:
            f = lift_to_product(f, m.target, index)
        estimate = sampled_bloch_norm(
            _PulledBack(f, m), samples, seed, extra_points=[z]
        )
        delta = boundary_distance(m.target, image)
        rows.append(ProbeRow(float(r), float(delta), estimate))
    if not rows:
        log.info("sequence probe of %s: image bounded away", m.family)
    return rows


def probe_df(rows: Sequence[ProbeRow]) -> pd.DataFrame:
    return df_from_records([row._asdict() for row in rows], PROBE_COLUMNS)


# ---------------------------------------------------------------------------
# Product domains and the Schwarz–Pick constant
# ---------------------------------------------------------------------------


class ProductDecomposition(NamedTuple):
    terms: tuple[float, ...]
    total: float
    block_total: float
    argmax: int
    bound: float
    holds: bool


def product_ratio_decomposition(
    m: HoloMap, z: Any, u: Any | None = None
) -> ProductDecomposition:
    """Split ``H_{φ(z)}(w, w)`` with ``w = Jφ(z)u`` into factor terms.

    ``u`` defaults to the worst direction of :func:`distortion_ratio`.
    ``bound`` is the number of factors times the largest term.
    """
    if not isinstance(m, ProductMap) or m.target.kind is not Kind.PRODUCT:
        raise MapTypeError("product_ratio_decomposition needs a product map")
    coords = _coords(m.source, z)
    if u is None:
        _, u = distortion_ratio(m, coords)
    vec = _coords(m.source, u)
    image = m.apply(coords)
    w = m.jac(coords) @ vec
    terms = tuple(
        bergman_form(f, image[sl], w[sl])
        for f, sl in factor_slices(m.target)
    )
    total = float(sum(terms))
    block_total = metric_matrix(m.target, image).form(w)
    argmax = int(np.argmax(terms))
    bound = len(terms) * terms[argmax]
    return ProductDecomposition(
        terms, total, block_total, argmax, bound, total <= bound * (1 + 1e-12)
    )


def schwarz_pick_constant(
    maps: Sequence[HoloMap], samples: int = 1000, seed: int = 0
) -> pd.DataFrame:
    """Empirical constant ``C_emp`` of the Schwarz–Pick inequality per map,
    with an ``overall`` row."""
    records = []
    overall = 0.0
    for k, m in enumerate(maps):
        rng = np.random.default_rng([seed, k])
        best = 0.0
        used = 0
        for _ in range(samples):
            z = sample_interior(m.source, rng)
            u = sample_tangent(m.source, rng)
            try:
                best = max(best, schwarz_pick_ratio(m, z, u))
            except CartanError as exc:
                log.debug("skipping Schwarz-Pick sample: %s", exc)
                continue
            used += 1
        overall = max(overall, best)
        records.append({"family": m.family, "samples": used, "c_emp": best})
    records.append(
        {
            "family": "overall",
            "samples": sum(r["samples"] for r in records),
            "c_emp": overall,
        }
    )
    return df_from_records(records, SCHWARZ_PICK_COLUMNS)
