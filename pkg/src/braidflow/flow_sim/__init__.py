"""Surfaces, Hamiltonian flows and their isotopies."""

from .catalog import (
    CATALOG_NAMES,
    CriticalPoint,
    catalog_entry,
    critical_points,
    disc_rotation,
    eggbeater,
    eggbeater_isotopy,
    is_morse,
    make_morse_catalog,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .dynamics import (
    DomainError,
    EnergyGateError,
    HamiltonianSystem,
    Isotopy,
    Segment,
    Trajectory,
    area_distortion,
    autonomous,
    flow_map,
    hamiltonian_vector_field,
    integrate_flow,
    iterate_flow,
    make_composite,
    vector_field,
)
from .fields import (
    AnnulusWell,
    ExpressionField,
    GaussianWell,
    GridField,
    Height,
    Quadratic,
    RadialBump,
    ShearBump,
    ScalarField,
    ZeroField,
)
from .lp import field_norm, integrate_surface, lp_length
from .surfaces import EDGE_LETTER, OCT_PARTNER, SURFACES, SurfaceModel, disc, make_surface, polygon_genus2, sphere

__all__ = [name for name in dir() if not name.startswith("_")]
