"""Carathéodory distance lower bounds along escaping sequences.

On a graph domain with P >= 0 the half-plane candidate gives increments of
log(2)/2 per homothety doubling. On HKN, P takes negative values, so that
candidate is not disc-valued and the probe reports a witness.
"""

import numpy as np

from metricslab import EmptyFamily, Egg, completeness_probe
from metricslab.domains import WBGraph, hkn_domain
from metricslab.polynomial import HermitianPolynomial, WeightSignature

ts = [2.0**v for v in range(1, 13)]
control = WBGraph(HermitianPolynomial.abs_power(1, 0, 4), WeightSignature((4,)))
rep = completeness_probe(control, base=[0, -1], ts=ts)
print("P = |z|^8 increments:", np.round(rep.increments, 6), "target", round(0.5 * np.log(2), 6))

rep = completeness_probe(Egg(2.0), [[v, 0] for v in range(6)])
print("Egg(2) Bergman lower bounds along L:", np.round(rep.lower_bounds, 6))

try:
    completeness_probe(hkn_domain(), base=[0, -1], ts=ts)
except EmptyFamily as exc:
    print("HKN:", exc)
