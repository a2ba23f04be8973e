"""Assemble a peak function on the disc and sample the decay hypothesis on an egg."""

from metricslab import Egg, PeakCandidate, assemble_peak, check_decay, verify_peak
from metricslab.domains import Bumped, disc
from metricslab.expressions import Const, Coord

z = Coord(0)
f, rep = assemble_peak(1 / (1 - z), spec=disc())
print(f"assembled f: max |f| on samples {rep.max_modulus:.8f}")
report = verify_peak(PeakCandidate(f, [1 + 0j], disc()))
print(f"verify_peak at 1: ok={report.ok}, shell margins {report.shell_margins}")

spec = Egg(1.0)
U = Bumped(spec, 1.0)
for name, h in (("h = w", Coord(1)), ("h = 1", Const(1.0))):
    d = check_decay(h, spec, U, C0=1e3, samples=20_000)
    print(f"{name}: worst ratio {d.worst_ratio:.3g}, ok={d.ok}, unchecked {d.unchecked}")
