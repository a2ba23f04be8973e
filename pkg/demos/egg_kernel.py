"""Closed-form versus numeric Bergman kernel on the egg domain.

Builds the degree-12 truncation of the Egg(2) kernel, compares it with the
closed form at seeded probes, and shows the Euclidean restriction to the line
{w = 0} and the projection bound on the Bergman form.
"""

import numpy as np

from metricslab import Egg, IntegrationPlan, bergman_form, build_numeric_engine, closed_form_engine
from metricslab.bergman import comparison_probes

spec = Egg(2.0)
exact = closed_form_engine(spec)
engine = build_numeric_engine(spec, 12, IntegrationPlan(1_000_000, seed=0))
z, w = comparison_probes(spec, 20, seed=0)
rel = np.abs(engine.kernel(z, w) - exact.kernel(z, w)) / np.abs(exact.kernel(z, w))
print(f"degree 12 engine ({engine.gram_source} Gram): max relative error {rel.max():.2e}")

for x in (0.0, 1.0 + 1.0j, 3.0):
    b = bergman_form(exact, np.array([x, 0])).matrix
    print(f"on L at z={x}: b11={b[0, 0].real:.12f} |b12|={abs(b[0, 1]):.1e}")

p = np.array([0.4 + 0.3j, 0.2 - 0.1j])
b = bergman_form(exact, p).matrix
schur = b[0, 0].real - abs(b[0, 1]) ** 2 / b[1, 1].real
print(f"Schur complement at {p}: {schur:.6f} >= kappa = {spec.kappa}")
