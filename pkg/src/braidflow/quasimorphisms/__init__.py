"""Evaluators of quasimorphisms on B_3, PSL(2,Z) and surface groups."""

from .core import (
    PSL2Z,
    Domain,
    DomainMismatch,
    Quasimorphism,
    UnknownDefect,
    artin_braid,
    brooks_counting,
    combine,
    count_cyclic,
    count_linear,
    defect_estimate,
    exponent_sum_qm,
    homogenize,
    linking_qm,
    rademacher_qm,
    random_word,
    surface_group,
    vanishing_combination,
)
from .modular import (
    ModularElement,
    b3_to_modular,
    braid_to_psl,
    dedekind_sum,
    modular_normal_form,
    psl_cyclic_core,
    psl_inverse,
    psl_reduce,
    psl_to_matrix,
    rademacher,
    rademacher_phi,
)
from .surface import cyclic_dehn_core, dehn_reduce, surface_relator
from ..words import exponent_sum

__all__ = [name for name in dir() if not name.startswith("_")]
