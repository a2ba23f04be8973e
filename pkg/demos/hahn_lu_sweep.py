"""Sampled Caratheodory lower bounds against the Bergman metric.

For each domain, c_lower^2 <= b and c_lower <= k_upper at random probes.
"""

import warnings

import numpy as np

from metricslab import Ball, Egg, Polydisc, hahn_lu_check, closed_form_engine, default_family
from metricslab.domains import disc, interior_points
from metricslab.metrics import check_points

warnings.simplefilter("ignore")
rng = np.random.default_rng(0)
for spec in (disc(), Ball(2), Polydisc((1.0, 1.0)), Egg(1.0), Egg(2.0)):
    engine, family, pts = closed_form_engine(spec), default_family(spec), check_points(spec)
    ratios = []
    for p in interior_points(spec, 20, seed=1, radius=3.0):
        v = rng.normal(size=spec.n) + 1j * rng.normal(size=spec.n)
        r = hahn_lu_check(spec, engine, family, p, v, points=pts)
        ratios.append(r.c_lower**2 / r.b)
    print(f"{type(spec).__name__:9s} n={spec.n}: max c^2/b = {max(ratios):.4f}")
