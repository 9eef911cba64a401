"""Domain descriptors, coordinates and Bergman metrics."""

from .domains import (
    DomainDescriptor,
    Kind,
    Point,
    Tangent,
    boundary_distance,
    contains,
    dimension,
    product,
    type_i,
    type_ii,
    type_iii,
    type_iv,
)
from .metrics import bergman_form, metric_matrix, rayleigh_sup

__all__ = [
    "DomainDescriptor",
    "Kind",
    "Point",
    "Tangent",
    "boundary_distance",
    "contains",
    "dimension",
    "product",
    "type_i",
    "type_ii",
    "type_iii",
    "type_iv",
    "bergman_form",
    "metric_matrix",
    "rayleigh_sup",
]
