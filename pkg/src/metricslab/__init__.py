"""Numerical evidence for invariant metrics on pseudoconvex domains.

Domains are described by seeded, serializable specs; Bergman kernels come
either in closed form or from truncated orthonormal polynomial bases;
Carathéodory and Kobayashi metrics are bracketed by explicit candidates and
sampled analytic discs.
"""

from .bergman import bergman_form, bergman_quantities, build_numeric_engine, closed_form_engine, kernel_closed_form
from .calculus import levi_form, strong_pseudoconvexity_at, wirtinger_derivative
from .domains import (
    Ball,
    Bumped,
    Egg,
    ExpGraph,
    Fornaess,
    KohnNirenberg,
    Polydisc,
    Truncated,
    WBGraph,
    admit_wb,
    contains,
    disc,
    eval_defining,
    fornaess_homogeneous_domain,
    half_plane,
    hkn_domain,
    load_spec,
)
from .metrics import (
    EmptyFamily,
    caratheodory_lower,
    completeness_probe,
    curve_length,
    default_family,
    hahn_lu_check,
    kobayashi_upper,
    poincare_distance,
    pushforward_distance_lower,
)
from .peaks import PeakCandidate, assemble_peak, check_decay, check_support_separation, symmetrize, verify_peak
from .polynomial import HermitianPolynomial, WeightSignature
from .quadrature import IntegrationPlan, integrate

import types as _types

__all__ = [name for name, obj in dict(globals()).items()
           if not name.startswith("_") and not isinstance(obj, _types.ModuleType)]
