from __future__ import annotations

import hashlib
import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping

import numpy as np
from scipy.stats import unitary_group

from cartanbloch.errors import DescriptorError
from cartanbloch.geometry.domains import (
    DomainDescriptor,
    product,
    type_i,
    type_ii,
    type_iii,
    type_iv,
)

__all__ = [
    "RunConfig",
    "load_config",
    "config_from_dict",
    "config_hash",
    "parse_domain",
    "parse_complex",
    "parse_array",
    "parse_unitary",
    "canonical_family",
    "normalise_keys",
]

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _norm_key(value: Any) -> str:
    """Return a simplified key used for alias matching.

    Lowercases ``value`` and drops diacritics and every non-alphanumeric
    character, so ``"Disc-Affine"``, ``"disc_affine"`` and ``"DISC AFFINE"``
    all compare equal.  Non-string inputs return an empty string.
    """

    if not isinstance(value, str):
        return ""
    normalized = unicodedata.normalize("NFKD", value)
    without_diacritics = "".join(
        ch for ch in normalized if not unicodedata.combining(ch)
    )
    return re.sub(r"[^0-9a-z]+", "", without_diacritics.lower())


def _build_alias_map(aliases: Dict[str, set[str]]) -> Dict[str, str]:
    """Return mapping of normalized alias -> canonical name."""

    mapping: Dict[str, str] = {}
    for canonical, names in aliases.items():
        for name in {canonical, *names}:
            mapping[_norm_key(name)] = canonical
    return mapping


TOP_ALIASES = {
    "domain": {"domena", "space"},
    "map": {"phi", "selfmap", "self map"},
    "analysis": {"params", "analiza"},
    "seed": {"random seed", "rng seed"},
    "output": {"out"},
}

DOMAIN_ALIASES = {
    "kind": {"type", "series"},
    "m": {"rows"},
    "n": {"cols", "columns", "N", "dim", "dimension"},
    "p": set(),
    "q": set(),
    "sizes": {"size", "shape"},
    "factors": {"parts", "children"},
}

ANALYSIS_ALIASES = {
    "z": {"point", "at"},
    "u": {"direction", "v", "tangent"},
    "a_point": {"apoint", "target point"},
    "w": set(),
    "a_param": {"a", "aparam"},
    "deltas": {"delta grid", "delta"},
    "epsilons": {"eps", "epsilon"},
    "r_grid": {"r", "rgrid", "radii"},
    "samples": {"n samples", "sample count"},
    "rho": {"radius"},
    "workers": {"jobs", "processes"},
    "n_starts": {"starts"},
    "n_rays": {"rays"},
    "n_uniform": {"uniform"},
    "m": set(),
    "n": set(),
}

OUTPUT_ALIASES = {
    "path": {"file", "out"},
    "format": {"fmt"},
}

FAMILY_ALIASES = {
    "identity": {"id"},
    "constant": {"const"},
    "scale": {"scaling", "dilation"},
    "disc_affine": {"affine", "disc affine"},
    "unitary_pair": {"unitary", "rotation"},
    "mobius": {"möbius", "moebius", "automorphism"},
    "product": {"prod"},
    "compose": {"composition", "chain"},
    "factor_embed": {"embed", "factor"},
}

KIND_ALIASES = {
    "I": {"1", "i", "type i", "ri"},
    "II": {"2", "ii", "rii"},
    "III": {"3", "iii", "riii"},
    "IV": {"4", "iv", "riv", "lie ball", "lieball"},
    "Product": {"product", "prod"},
}

TOP_ALIAS_MAP = _build_alias_map(TOP_ALIASES)
DOMAIN_ALIAS_MAP = _build_alias_map(DOMAIN_ALIASES)
ANALYSIS_ALIAS_MAP = _build_alias_map(ANALYSIS_ALIASES)
OUTPUT_ALIAS_MAP = _build_alias_map(OUTPUT_ALIASES)
FAMILY_ALIAS_MAP = _build_alias_map(FAMILY_ALIASES)
KIND_ALIAS_MAP = _build_alias_map(KIND_ALIASES)


def _rename_with_aliases(
    data: Mapping[str, Any], alias_map: Dict[str, str]
) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in data.items():
        canonical = alias_map.get(_norm_key(key), key)
        if canonical in out:
            log.warning("duplicate config key %r ignored", key)
            continue
        out[canonical] = value
    return out


def normalise_keys(
    data: Mapping[str, Any], canonical: Iterable[str]
) -> dict[str, Any]:
    """Rename keys of ``data`` matching ``canonical`` up to case and
    punctuation."""
    if not isinstance(data, Mapping):
        raise DescriptorError(f"expected an object, got {data!r}")
    alias_map = _build_alias_map({c: set() for c in canonical})
    return _rename_with_aliases(data, alias_map)


def canonical_family(name: Any) -> str:
    family = FAMILY_ALIAS_MAP.get(_norm_key(name))
    if family is None:
        raise DescriptorError(f"unknown map family {name!r}")
    return family


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


def parse_complex(value: Any) -> complex:
    """Accept a number, ``[re, im]``, ``{"re", "im"}`` or a string such as
    ``"0.5-0.2j"``."""
    try:
        if isinstance(value, Mapping):
            re_part = float(value.get("re", 0))
            return complex(re_part, float(value.get("im", 0)))
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError(value)
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, str):
            text = value.strip().replace(" ", "")
            if "j" not in text:
                text = text.replace("i", "j")
            return complex(text)
        return complex(value)
    except (TypeError, ValueError):
        raise DescriptorError(f"cannot read complex number from {value!r}")


def parse_array(value: Any) -> np.ndarray:
    """Read a complex vector or matrix.

    ``{"re": [...], "im": [...]}`` splits real and imaginary parts; nested
    lists hold scalars in any form :func:`parse_complex` accepts.
    """
    if isinstance(value, Mapping) and ("re" in value or "im" in value):
        re_part = np.asarray(value.get("re", 0.0), dtype=float)
        im_part = np.asarray(value.get("im", 0.0), dtype=float)
        try:
            return re_part + 1j * im_part
        except ValueError:
            raise DescriptorError("re and im parts differ in shape")
    if isinstance(value, (list, tuple)):
        rows = [
            (
                parse_array(v)
                if isinstance(v, (list, tuple))
                else parse_complex(v)
            )
            for v in value
        ]
        try:
            return np.array(rows, dtype=complex)
        except ValueError:
            raise DescriptorError("ragged array in config")
    return np.asarray(parse_complex(value), dtype=complex)


def parse_unitary(
    value: Any, size: int, seed: Any = None, stream: int = 0
) -> np.ndarray:
    """Return a unitary matrix: given explicitly, drawn from ``seed`` or the
    identity."""
    if value is not None:
        return parse_array(value)
    if seed is None:
        return np.eye(size, dtype=complex)
    rng = np.random.default_rng([int(seed), stream])
    if size == 1:
        return np.exp(1j * rng.uniform(0, 2 * np.pi)).reshape(1, 1)
    return np.asarray(unitary_group.rvs(size, random_state=rng), dtype=complex)


def parse_domain(spec: Any) -> DomainDescriptor:
    """Build a descriptor from ``{"kind": "I", "m": 2, "n": 3}`` and
    friends."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    node = _rename_with_aliases(spec, DOMAIN_ALIAS_MAP)
    kind = KIND_ALIAS_MAP.get(_norm_key(str(node.get("kind", ""))))
    if kind is None:
        raise DescriptorError(f"unknown domain kind {node.get('kind')!r}")
    sizes = node.get("sizes")
    if sizes is not None and not isinstance(sizes, (list, tuple)):
        sizes = [sizes]
    try:
        if kind == "Product":
            factors = node.get("factors") or []
            return product(*(parse_domain(f) for f in factors))
        if kind == "I":
            m, n = sizes if sizes is not None else (node["m"], node["n"])
            return type_i(int(m), int(n))
        if kind == "II":
            (p,) = sizes if sizes is not None else (node["p"],)
            return type_ii(int(p))
        if kind == "III":
            (q,) = sizes if sizes is not None else (node["q"],)
            return type_iii(int(q))
        (N,) = sizes if sizes is not None else (node["n"],)
        return type_iv(int(N))
    except DescriptorError:
        raise
    except KeyError as exc:
        raise DescriptorError(f"domain {kind} is missing size {exc}")
    except (TypeError, ValueError) as exc:
        raise DescriptorError(f"invalid sizes for domain {kind}: {exc}")


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


def config_hash(data: Mapping[str, Any]) -> str:
    """sha256 of the canonical JSON form of ``data``."""
    canonical = json.dumps(
        data, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunConfig:
    """Parsed run configuration.

    ``map`` is kept as its descriptor tree and built on demand with
    :meth:`holo_map`.
    """

    domain: DomainDescriptor | None = None
    map: dict[str, Any] | None = None
    analysis: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    output_path: str | None = None
    output_format: str = "json"
    raw: dict[str, Any] = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def holo_map(self):
        from cartanbloch.maps import Identity, parse_map

        if self.domain is None:
            raise DescriptorError("config has no domain")
        if self.map is None:
            return Identity(self.domain)
        return parse_map(self.map, self.domain)

    def require_seed(self) -> int:
        if self.seed is None:
            raise DescriptorError("sampling analyses need a seed")
        return self.seed

    def get(self, key: str, default: Any = None) -> Any:
        return self.analysis.get(key, default)


def config_from_dict(data: Mapping[str, Any] | None) -> RunConfig:
    """Return a :class:`RunConfig` for ``data`` (keys matched loosely)."""
    raw = dict(data or {})
    top = _rename_with_aliases(raw, TOP_ALIAS_MAP)
    domain = parse_domain(top["domain"]) if top.get("domain") else None
    analysis = _rename_with_aliases(
        top.get("analysis") or {}, ANALYSIS_ALIAS_MAP
    )
    output = top.get("output") or {}
    if isinstance(output, str):
        output = {"path": output}
    output = _rename_with_aliases(output, OUTPUT_ALIAS_MAP)
    seed = top.get("seed", analysis.get("seed"))
    fmt = str(output.get("format") or "json").lower()
    return RunConfig(
        domain=domain,
        map=top.get("map"),
        analysis=analysis,
        seed=int(seed) if seed is not None else None,
        output_path=output.get("path"),
        output_format=fmt,
        raw=raw,
    )


def load_config(path: str | Path | None) -> RunConfig:
    """Read a JSON run configuration; ``None`` gives an empty config."""
    if path is None:
        return config_from_dict({})
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DescriptorError(f"{path}: invalid JSON ({exc})")
    if not isinstance(data, dict):
        raise DescriptorError(f"{path}: top level must be an object")
    log.debug("Loaded config %s", path)
    return config_from_dict(data)
