"""Selective Delaunay complexes, their radius-function gradients and explicit collapses."""
from __future__ import annotations

from .geometry import (
    EPS,
    EPS_GP,
    CertificateError,
    DegenerateInput,
    Sphere,
    SphereCertificate,
    WeightedPointSet,
    check_general_position,
    check_kkt,
    perturb,
    random_point_set,
    smallest_sphere,
    smallest_sphere_oracle,
)
from .complexes import (
    INF,
    FilteredComplex,
    build_cech,
    build_complex,
    build_delaunay,
    build_delaunay_cech,
    build_selective_delaunay,
)
from .morse import (
    DiscreteGradient,
    GeneralizedVectorField,
    Interval,
    compose_gradients,
    is_generalized_morse,
    is_gradient,
    radius_gradient,
    sum_refinement,
    vertex_refine,
)
from .collapse import (
    CollapseSequence,
    PairingAssignment,
    collapse_cech_to_delcech,
    collapse_del_to_wrap,
    collapse_delcech_to_del,
    collapse_hierarchy,
    pairing_map,
    verify_collapse,
    zigzag_connect,
)
from .wrap import build_interval_digraph, wrap_complex

__version__ = "0.1.0"
