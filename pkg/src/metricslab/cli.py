"""Batch front end: ``metricslab <command> [options]``.

Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 malformed input
(with its JSON location), 3 numerical failure (with a witness).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from importlib import metadata

import numpy as np

from .bergman import (
    GramFactorizationError,
    KernelPoleError,
    NumericKernel,
    UndefinedBergmanForm,
    bergman_form,
    build_numeric_engine,
    closed_form_engine,
    comparison_probes,
    egg_gram_cross_check,
)
from .domains import (
    Egg,
    Fornaess,
    KohnNirenberg,
    SpecError,
    WBGraph,
    admit_wb,
    contains,
    interior_points,
    load_spec,
    spec_to_dict,
)
from .expressions import ExpressionError, from_json as expr_from_json
from .metrics import (
    EmptyFamily,
    MetricReport,
    check_points,
    completeness_probe,
    default_family,
    hahn_lu_check,
)
from .peaks import AssemblyRefused, PeakCandidate, verify_peak
from .polynomial import WeightSignature, fornaess_polynomial, hkn_polynomial
from .quadrature import IntegrationPlan, NoSamplingPlan, NonFiniteIntegrand


class InputError(ValueError):
    def __init__(self, message: str, location: str = "$"):
        super().__init__(message)
        self.location = location


class NumericalFailure(ArithmeticError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def artifact_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    command: str
    domain: str | None
    seed: int
    tolerances: dict
    outputs: list
    version: str = field(default_factory=artifact_version)
    wall_clock: float = 0.0

    def digest(self) -> str:
        """SHA-256 of everything but the wall-clock time."""
        d = asdict(self)
        d.pop("wall_clock")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------


def parse_complex(x, location: str) -> complex:
    if isinstance(x, bool):
        raise InputError("expected a complex number", location)
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    if isinstance(x, str):
        try:
            return complex(x.replace(" ", ""))
        except ValueError:
            pass
    raise InputError(f"expected a number, [re, im] or a complex string, got {x!r}", location)


def parse_vector(x, n: int, location: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != n:
        raise InputError(f"expected a list of {n} coordinates", location)
    return np.array([parse_complex(c, f"{location}[{i}]") for i, c in enumerate(x)])


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", path) from None
    except OSError as exc:
        raise InputError(str(exc), path) from None


def load_probes(path: str, n: int, need_direction: bool = True) -> list[tuple[np.ndarray, np.ndarray]]:
    data = read_json(path)
    if not isinstance(data, list):
        raise InputError("probe file must be a JSON array", "$")
    out = []
    for i, item in enumerate(data):
        loc = f"$[{i}]"
        if not isinstance(item, dict) or "point" not in item:
            raise InputError("probe must be an object with a 'point'", loc)
        extra = set(item) - {"point", "direction"}
        if extra:
            raise InputError(f"unknown fields {sorted(extra)}", loc)
        p = parse_vector(item["point"], n, loc + ".point")
        if "direction" in item:
            v = parse_vector(item["direction"], n, loc + ".direction")
        elif need_direction:
            raise InputError("missing field 'direction'", loc)
        else:
            v = np.zeros(n, dtype=complex)
        out.append((p, v))
    return out


def random_probes(spec, count: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    pts = interior_points(spec, count, seed=seed, radius=3.0)
    rng = np.random.default_rng(seed + 1)
    dirs = rng.normal(size=pts.shape) + 1j * rng.normal(size=pts.shape)
    return list(zip(pts, dirs))


def load_domain(args):
    if not args.domain:
        raise InputError("--domain is required", "--domain")
    return load_spec(args.domain)


def samples_arg(text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value != int(value) or value < 2:
        raise argparse.ArgumentTypeError(f"sample count must be an integer >= 2, got {text!r}")
    return int(value)


def fmt_vec(z) -> str:
    return " ".join(f"{c.real:.17g}{c.imag:+.17g}j" for c in np.atleast_1d(z))


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def render(columns: list[str], rows: list[list], manifest: RunManifest, fmt: str) -> str:
    digest = manifest.digest()
    if fmt == "json":
        m = asdict(manifest)
        m["hash"] = digest
        return json.dumps({"manifest": m, "rows": [dict(zip(columns, r)) for r in rows]}, indent=2,
                          default=str) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(columns) + ["manifest"])
    for r in rows:
        w.writerow(list(r) + [digest])
    return buf.getvalue()


def emit(args, columns, rows, manifest: RunManifest) -> None:
    manifest.wall_clock = time.time() - args.start
    text = render(columns, rows, manifest, args.out)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def manifest_for(args, command: str, **tolerances) -> RunManifest:
    params = {"samples": args.samples, "degree": args.degree, "probes": args.probes, **tolerances}
    return RunManifest(command, args.domain, args.seed, params, [args.output] if args.output else ["-"])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def wb_view(spec):
    """Graph-domain model whose structure checks apply to ``spec``."""
    if isinstance(spec, WBGraph):
        return spec
    if isinstance(spec, KohnNirenberg):
        return WBGraph(hkn_polynomial(), WeightSignature((4,)))
    if isinstance(spec, Fornaess):
        return WBGraph(fornaess_polynomial(spec.t), WeightSignature((3,)))
    return None


def cmd_check_domain(args) -> int:
    spec = load_domain(args)
    columns = ["check", "verdict", "value", "provenance"]
    rows = [["type", "info", spec_to_dict(spec)["type"], "input"], ["dimension", "info", spec.n, "input"]]
    view = wb_view(spec)
    ok = True
    if view is not None:
        rep = admit_wb(view, samples=args.samples or 10_000, seed=args.seed)
        rows += [
            ["weighted_homogeneity", "pass" if rep.homogeneity.ok else "fail",
             repr(rep.homogeneity.max_scaling_error), "exact"],
            ["pluriharmonic_terms", "pass" if not rep.pluriharmonic_terms else "fail",
             json.dumps([list(map(list, t)) for t in rep.pluriharmonic_terms]), "exact"],
            ["bumping_s_star", "pass" if rep.bumping is not None and rep.bumping.ok else "fail", repr(rep.s),
             "sampled_bound"],
            ["min_P_minus_reserve", "info", repr(rep.min_P_minus_reserve), "sampled_bound"],
        ]
        ok = rep.ok
    emit(args, columns, rows, manifest_for(args, "check-domain"))
    return 0 if ok else 1


def closed_form_or_none(spec):
    try:
        return closed_form_engine(spec)
    except ValueError:
        return None


def engine_for(spec, args):
    engine = closed_form_or_none(spec)
    if engine is not None and not args.numeric:
        return engine
    plan = IntegrationPlan(args.samples or 100_000, args.seed, threads=args.threads)
    return build_numeric_engine(spec, args.degree or 6, plan)


def cmd_kernel_build(args) -> int:
    spec = load_domain(args)
    plan = IntegrationPlan(args.samples or 100_000, args.seed, threads=args.threads)
    engine = build_numeric_engine(spec, args.degree or 6, plan, gram=args.gram)
    manifest = manifest_for(args, "kernel build", degree=args.degree)
    manifest.wall_clock = time.time() - args.start
    d = json.loads(engine.to_json())
    d["manifest"] = manifest.digest()
    text = json.dumps(d) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_kernel_eval(args) -> int:
    if args.engine:
        try:
            with open(args.engine) as fh:
                engine = NumericKernel.from_json(fh.read())
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot load engine: {exc}", args.engine) from None
        n = engine.n
    else:
        spec = load_domain(args)
        engine = engine_for(spec, args)
        n = spec.n
    probes = load_probes(args.probes, n) if args.probes else []
    rows = []
    for p, v in probes:
        K = float(engine.diag(p))
        b = bergman_form(engine, p)(v).real if np.any(v) else 0.0
        rows.append([fmt_vec(p), fmt_vec(v), repr(K), repr(b), engine.provenance])
    emit(args, ["p", "v", "K", "b", "provenance"], rows, manifest_for(args, "kernel eval"))
    return 0


def cmd_kernel_compare(args) -> int:
    spec = load_domain(args)
    if args.kappa is not None:
        if not isinstance(spec, Egg):
            raise InputError("--kappa applies to egg domains only", "--kappa")
        spec = Egg(args.kappa)
    exact = closed_form_or_none(spec)
    if exact is None:
        raise InputError(f"no closed form for {type(spec).__name__}", "$.type")
    tol = args.tol if args.tol is not None else 0.01
    degree = args.degree or 12
    plan = IntegrationPlan(args.samples or 1_000_000, args.seed, threads=args.threads)
    engine = build_numeric_engine(spec, degree, plan)
    z, w = comparison_probes(spec, 20, args.seed)
    ref = exact.kernel(z, w)
    rel = np.abs(engine.kernel(z, w) - ref) / np.abs(ref)
    rows = [[fmt_vec(a), fmt_vec(b), repr(complex(r)), repr(float(e)), engine.provenance]
            for a, b, r, e in zip(z, w, ref, rel)]
    if isinstance(spec, Egg):
        mc_degree = min(degree, 4)
        zmax = egg_gram_cross_check(spec, mc_degree, plan)
        rows.append(["gram_cross_check", f"degree<={mc_degree}", "", repr(zmax), "sampled_bound"])
    emit(args, ["z", "w", "K_closed_form", "rel_error", "provenance"], rows,
         manifest_for(args, "kernel compare", tol=tol, degree=degree))
    print(f"max relative error vs closed form: {rel.max():.3e}", file=sys.stderr)
    return 0 if rel.max() <= tol else 1


def sweep_reports(spec, args) -> list[MetricReport]:
    engine = engine_for(spec, args)
    probes = load_probes(args.probes, spec.n) if args.probes else random_probes(spec, args.count, args.seed)
    family = default_family(spec)
    pts = check_points(spec, seed=args.seed)
    tol = args.tol if args.tol is not None else 1e-6
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for p, v in probes:
            if not contains(spec, p):
                raise NumericalFailure("probe point is not interior", p)
            out.append(hahn_lu_check(spec, engine, family, p, v, tol=tol, points=pts))
    return out


def cmd_metric_sweep(args) -> int:
    spec = load_domain(args)
    reports = sweep_reports(spec, args)
    rows = [r.row() for r in reports]
    emit(args, list(MetricReport.CSV_COLUMNS), rows, manifest_for(args, "metric sweep", tol=args.tol))
    return 0 if all(r.ordering_ok for r in reports) else 1


def cmd_hahn_lu(args) -> int:
    spec = load_domain(args)
    reports = sweep_reports(spec, args)
    rows = [r.row() for r in reports]
    emit(args, list(MetricReport.CSV_COLUMNS), rows, manifest_for(args, "hahn-lu", tol=args.tol))
    return 0 if all(r.hahn_lu_ok and r.ordering_ok for r in reports) else 1


def cmd_probe_completeness(args) -> int:
    spec = load_domain(args)
    thresholds = tuple(args.threshold or ())
    if args.probes:
        escape = np.array([p for p, _ in load_probes(args.probes, spec.n, need_direction=False)])
        rep = completeness_probe(spec, escape, thresholds=thresholds)
    elif isinstance(spec, WBGraph):
        base = np.zeros(spec.n, dtype=complex)
        base[-1] = -1
        rep = completeness_probe(spec, base=base, ts=[2.0**v for v in range(1, args.steps + 1)],
                                 thresholds=thresholds)
    elif isinstance(spec, Egg):
        escape = np.array([[v, 0] for v in range(args.steps + 1)], dtype=complex)
        rep = completeness_probe(spec, escape, thresholds=thresholds)
    else:
        raise InputError("--probes with escape points is required for this domain", "--probes")
    inc = np.concatenate([[np.nan], rep.increments])
    rows = [[i, fmt_vec(q), repr(float(b)), repr(float(d)), rep.kind]
            for i, (q, b, d) in enumerate(zip(rep.points, rep.lower_bounds, inc))]
    emit(args, ["index", "point", "lower_bound", "increment", "provenance"], rows,
         manifest_for(args, "probe-completeness"))
    return 0 if rep.strictly_increasing and all(rep.exceeds.values()) else 1


def cmd_verify_peak(args) -> int:
    spec = load_domain(args)
    if not args.peak:
        raise InputError("--peak is required", "--peak")
    data = read_json(args.peak)
    if not isinstance(data, dict):
        raise InputError("peak file must be an object", "$")
    extra = set(data) - {"f", "p", "radii"}
    if extra:
        raise InputError(f"unknown fields {sorted(extra)}", "$")
    if "f" not in data or "p" not in data:
        raise InputError("peak file needs 'f' and 'p'", "$")
    f = expr_from_json(data["f"], "$.f")
    p = parse_vector(data["p"], spec.n, "$.p")
    radii = data.get("radii", [0.5, 0.2, 0.1])
    rep = verify_peak(PeakCandidate(f, p, spec), radii=radii, samples=args.samples or 4000, seed=args.seed,
                      tol=args.tol if args.tol is not None else 1e-6)
    rows = [["shell", str(r), "pass" if m > 0 else "fail", repr(m), ""] for r, m in rep.shell_margins.items()]
    rows += [[f.condition, "", "fail", repr(f.value), fmt_vec(f.witness)] for f in rep.failures]
    rows.append(["limit", "", "fail" if rep.failed("limit") else "pass", repr(float(rep.limit_errors[-1])), ""])
    emit(args, ["check", "radius", "verdict", "value", "witness"], rows, manifest_for(args, "verify-peak"))
    return 0 if rep.ok else 1


VERDICT_COLUMNS = ("hahn_lu_ok", "ordering_ok", "verdict")


def cmd_report(args) -> int:
    """Summarize CSV outputs of earlier runs: rows and failing verdicts per file."""
    rows, ok = [], True
    for path in args.inputs:
        try:
            with open(path, newline="") as fh:
                table = list(csv.DictReader(fh))
        except OSError as exc:
            raise InputError(str(exc), path) from None
        fails = sum(1 for r in table for c in VERDICT_COLUMNS if r.get(c) in ("False", "fail"))
        manifests = sorted({r.get("manifest", "") for r in table})
        ok &= fails == 0
        rows.append([path, len(table), fails, " ".join(manifests)])
    emit(args, ["file", "rows", "failed_verdicts", "manifests"], rows, manifest_for(args, "report"))
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", help="domain spec JSON")
    common.add_argument("--probes", help="JSON array of {point, direction}")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=samples_arg, default=None)
    common.add_argument("--degree", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", choices=("csv", "json"), default="csv")
    common.add_argument("--output", help="output path (default stdout)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (fallback METRICSLAB_THREADS)")

    parser = argparse.ArgumentParser(prog="metricslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check-domain", parents=[common]).set_defaults(func=cmd_check_domain)

    kernel = sub.add_parser("kernel").add_subparsers(dest="action", required=True)
    kb = kernel.add_parser("build", parents=[common])
    kb.add_argument("--gram", choices=("auto", "exact", "mc"), default="auto")
    kb.set_defaults(func=cmd_kernel_build)
    ke = kernel.add_parser("eval", parents=[common])
    ke.add_argument("--engine", help="engine JSON from 'kernel build'")
    ke.add_argument("--numeric", action="store_true", help="use a numeric engine even if a closed form exists")
    ke.set_defaults(func=cmd_kernel_eval)
    kc = kernel.add_parser("compare", parents=[common])
    kc.add_argument("--kappa", type=float, default=None)
    kc.set_defaults(func=cmd_kernel_compare)

    metric = sub.add_parser("metric").add_subparsers(dest="action", required=True)
    ms = metric.add_parser("sweep", parents=[common])
    ms.add_argument("--count", type=int, default=20, help="random probes when --probes is absent")
    ms.add_argument("--numeric", action="store_true")
    ms.set_defaults(func=cmd_metric_sweep)

    hl = sub.add_parser("hahn-lu", parents=[common])
    hl.add_argument("--count", type=int, default=20)
    hl.add_argument("--numeric", action="store_true")
    hl.set_defaults(func=cmd_hahn_lu)

    pc = sub.add_parser("probe-completeness", parents=[common])
    pc.add_argument("--steps", type=int, default=12)
    pc.add_argument("--threshold", type=float, action="append")
    pc.set_defaults(func=cmd_probe_completeness)

    vp = sub.add_parser("verify-peak", parents=[common])
    vp.add_argument("--peak", help="JSON with f (expression), p (point), optional radii")
    vp.set_defaults(func=cmd_verify_peak)

    rp = sub.add_parser("report", parents=[common])
    rp.add_argument("inputs", nargs="+")
    rp.set_defaults(func=cmd_report)
    return parser


def fail(code: int, kind: str, message: str, **extra) -> int:
    payload = {"status": "error", "kind": kind, "message": message}
    payload.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.start = time.time()
    try:
        return args.func(args)
    except (InputError, SpecError) as exc:
        return fail(2, "input", str(exc), location=getattr(exc, "location", "$"))
    except ExpressionError as exc:
        return fail(2, "input", str(exc))
    except (GramFactorizationError, KernelPoleError, UndefinedBergmanForm, NonFiniteIntegrand, EmptyFamily,
            AssemblyRefused, NumericalFailure, NoSamplingPlan, np.linalg.LinAlgError) as exc:
        witness = getattr(exc, "witness", None)
        return fail(3, "numerical", str(exc), witness=None if witness is None else fmt_vec(witness))
    except ValueError as exc:
        return fail(2, "input", str(exc))


if __name__ == "__main__":
    sys.exit(main())
