"""
Command handlers for the qmms command line.

Every handler takes the parsed arguments, the service container and the
bundle exporter of the run, writes its artifacts and returns the exit code:
0 on success, 1 when the computation ends in a refusal, a divergence or a
failed check.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.core.models.entities import (
    DensityLine,
    FiniteQMMSpace,
    FrechetCertificate,
    GeneratorSpec,
    NormKind,
    QuasiMetricMeasureSpace,
)
from src.core.models.exceptions import InvalidParams, SolverDiverged
from src.core.services.base_service import ServiceDependencies
from src.core.services.calculations.example_space_service import DENSITY_GENERATORS, ExampleSpaceService
from src.data.repositories.json_repository import JsonFamilyRepository, JsonSpaceRepository
from src.data.storage.codec import encode_space, load_json
from src.reports.exporters.bundle_exporter import BundleExporter
from src.reports.factories.experiment_factory import ExperimentFactory

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERDICT = 1


def parse_floats(text: str) -> List[float]:
    """'0.1,0.5,inf' -> [0.1, 0.5, inf]"""
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise InvalidParams(f"expected comma separated numbers, got '{text}'") from e


def parse_indices(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise InvalidParams(f"expected comma separated indices, got '{text}'") from e


def load_space(
    args: argparse.Namespace, deps: ServiceDependencies
) -> Tuple[QuasiMetricMeasureSpace, Optional[GeneratorSpec]]:
    """--space FILE, or --name/--params of a generator"""
    if getattr(args, "space", None):
        path = Path(args.space)
        repo = JsonSpaceRepository(str(path.parent), deps.spaces, deps.examples)
        return repo.load(path)
    if getattr(args, "name", None):
        spec = GeneratorSpec(args.name, ExampleSpaceService.parse_params(args.params or ""))
        space, card = deps.examples.generate(spec)
        return space, card.generator
    raise InvalidParams("give --space FILE or --name GENERATOR")


def finite(space: QuasiMetricMeasureSpace, what: str) -> FiniteQMMSpace:
    if not isinstance(space, FiniteQMMSpace):
        raise InvalidParams(f"{what} needs a finite space, not a density line")
    return space


def load_function(args: argparse.Namespace, n: int) -> np.ndarray:
    """--u FILE ({"values": [...]} or a bare list) or --values a,b,c"""
    if getattr(args, "u", None):
        payload = load_json(args.u)
        values = payload["values"] if isinstance(payload, dict) else payload
    elif getattr(args, "values", None):
        values = parse_floats(args.values)
    else:
        raise InvalidParams("give --u FILE or --values")
    u = np.asarray(values, dtype=float)
    if u.shape != (n,):
        raise InvalidParams(f"function has {u.size} values, space has {n} points")
    return u


def run_space_gen(args: argparse.Namespace, deps: ServiceDependencies, exporter: BundleExporter) -> int:
    """Generate a named example space with its reference card"""
    spec = GeneratorSpec(args.name, ExampleSpaceService.parse_params(args.params or ""))
    space, card = deps.examples.generate(spec)
    exporter.export_json(args.save_as or args.name, encode_space(space, card.generator))
    exporter.export_json("reference_card", card)
    print(f"✅ Generated {args.name}: {space.n} atoms")
    return EXIT_OK


def _doubling_table(
    deps: ServiceDependencies, space: QuasiMetricMeasureSpace, c: float, deltas: List[float]
) -> pd.DataFrame:
    rows = []
    for delta in deltas:
        centers = deps.geometry.interior_centers(space, c * delta) if isinstance(space, DensityLine) else None
        rows.append({"c": c, "delta": delta, "Delta": deps.geometry.doubling_constant(space, c, delta, centers)})
    return pd.DataFrame(rows)


def run_diag(args: argparse.Namespace, deps: ServiceDependencies, exporter: BundleExporter) -> int:
    """Geometry diagnostics: net, doubling, h, integrability, ahlfors, infinity, index"""
    geometry = deps.geometry
    kind = args.kind
    code = EXIT_OK

    if kind == "integrability" and not args.space and args.name in DENSITY_GENERATORS:
        spec = GeneratorSpec(args.name, ExampleSpaceService.parse_params(args.params or ""))
        report = geometry.integrability_functional(deps.examples.truncation_builder(spec), args.r, args.T_max)
        exporter.export_table("integrability", pd.DataFrame(report.truncation_curve, columns=["T", "value"]))
        exporter.export_json("integrability", report)
        print(f"📈 Integrability at r={args.r}: {report.verdict}")
        return EXIT_VERDICT if report.diverges else EXIT_OK

    space, _ = load_space(args, deps)

    if kind == "net":
        profile = geometry.covering_profile(space, parse_floats(args.eps))
        exporter.export_table("covering", pd.DataFrame(profile, columns=["epsilon", "greedy", "net"]))
        bounds = [geometry.counting_bound(space, e) for e, _, _ in profile]
        bounds += [geometry.total_boundedness_bound(space, e, args.c) for e, _, _ in profile]
        exporter.export_json("net_bounds", bounds)
        if not all(b.holds for b in bounds):
            code = EXIT_VERDICT
    elif kind == "doubling":
        table = _doubling_table(deps, space, args.c, parse_floats(args.deltas))
        exporter.export_table("doubling", table)
    elif kind == "h":
        h = geometry.h_profile(space, parse_floats(args.r_grid))
        exporter.export_table("h_profile", pd.DataFrame(list(h.items()), columns=["r", "h"]))
    elif kind == "integrability":
        report = geometry.integrability_functional(space, args.r)
        exporter.export_json("integrability", report)
    elif kind == "ahlfors":
        grid = parse_floats(args.r_grid)
        s, b = geometry.ahlfors_lower_fit(space, [r for r in grid if r <= 1], args.s)
        dimension = geometry.doubling_dimension(space, grid)
        exporter.export_json("ahlfors", {"s": s, "b": b, "doubling_dimension": dimension})
        if not dimension.holds:
            code = EXIT_VERDICT
    elif kind == "infinity":
        report = geometry.doubling_at_infinity(space, args.x0, parse_floats(args.R_grid))
        exporter.export_table("tail_ratios", pd.DataFrame({"R": report.radii, "ratio": report.ratios}))
        exporter.export_json("doubling_at_infinity", report)
    elif kind == "index":
        threshold = deps.config.diagnostics.distortion_threshold if args.threshold is None else args.threshold
        profile = deps.regularization.index_profile(
            finite(space, "index"),
            beta_grid=parse_floats(args.beta_grid) if args.beta_grid else None,
            threshold=threshold,
        )
        exporter.export_table("index_profile", pd.DataFrame({
            "beta": profile.betas,
            "distortion": profile.distortions,
            "feasible": profile.distortions <= profile.threshold,
        }))
        exporter.export_json("index_profile", {
            "threshold": profile.threshold,
            "feasible_sup": profile.feasible_sup,
            "monotone": profile.monotone,
        })

    print(f"📊 Diagnostic '{kind}' done on {space.n} atoms")
    return code


def run_norm(args: argparse.Namespace, deps: ServiceDependencies, exporter: BundleExporter) -> int:
    """Minimal-gradient (semi)norm of one function"""
    space, _ = load_space(args, deps)
    space = finite(space, "norm")
    u = load_function(args, space.n)
    try:
        result = deps.norms.norm(space, u, args.alpha, args.p, args.q, NormKind(args.kind))
    except SolverDiverged as e:
        exporter.export_json("norm", {"error": str(e), "iterations": e.iterations, "gap": e.gap})
        print(f"❌ Solver diverged: {e}")
        return EXIT_VERDICT
    exporter.export_json("norm", {
        "kind": args.kind,
        "alpha": args.alpha,
        "p": args.p,
        "q": args.q,
        "seminorm": result.seminorm,
        "full_norm": result.full_norm,
        "levels": list(result.optimal_g.levels),
        "optimal_g": result.optimal_g.g,
        "solver": result.solver,
        "level_minima": result.level_minima,
    })
    print(f"✅ {args.kind} seminorm {result.seminorm:.10g} ({result.solver.status.value})")
    return EXIT_OK


def run_bump(args: argparse.Namespace, deps: ServiceDependencies, exporter: BundleExporter) -> int:
    """Holder bump separating two sets"""
    space, _ = load_space(args, deps)
    result = deps.constructions.bump(
        finite(space, "bump"), parse_indices(args.E0), parse_indices(args.E1),
        beta=args.beta, alpha=args.alpha, p=args.p, q=args.q,
    )
    exporter.export_json("bump", result)
    ok = result.holder_quotient <= result.holder_bound * (1 + 1e-9)
    print(f"✅ Bump with beta={result.beta:.4g}: Holder quotient {result.holder_quotient:.6g} <= {result.holder_bound:.6g}")
    return EXIT_OK if ok else EXIT_VERDICT


def run_certify(args: argparse.Namespace, deps: ServiceDependencies, exporter: BundleExporter) -> int:
    """Frechet total-boundedness certificate of a stored family"""
    space, _ = load_space(args, deps)
    family_path = Path(args.family)
    family = JsonFamilyRepository(str(family_path.parent)).load(family_path, finite(space, "certify"))
    if args.alpha is not None:
        family.alpha = args.alpha
    outcome = deps.compactness.frechet_certify(family, args.epsilon, args.cells, args.p)
    if isinstance(outcome, FrechetCertificate):
        exporter.export_json("certificate", outcome)
        print(f"✅ Certificate at epsilon={args.epsilon}: {len(outcome.partition)} cells, net of {len(outcome.derived_net)}")
        return EXIT_OK
    exporter.export_json("refusal", outcome)
    print(f"❌ Refusal: {outcome.reason}")
    return EXIT_VERDICT


def run_experiment(args: argparse.Namespace, deps: ServiceDependencies, exporter: BundleExporter) -> int:
    """Named experiment bundle"""
    try:
        generator = ExperimentFactory.create_generator(args.name, deps)
    except ValueError as e:
        raise InvalidParams(f"{e}; supported: {', '.join(ExperimentFactory.get_supported_names())}") from e
    result = generator.generate()
    for name, table in result.tables.items():
        exporter.export_table(name, table)
    exporter.export_json("summary", {"experiment": result.name, "passed": result.passed, **result.summary})
    print(f"{'✅' if result.passed else '❌'} Experiment {result.name}: {'pass' if result.passed else 'FAIL'}")
    return EXIT_OK if result.passed else EXIT_VERDICT


HANDLERS: Dict[str, Any] = {
    "space": run_space_gen,
    "diag": run_diag,
    "norm": run_norm,
    "bump": run_bump,
    "certify": run_certify,
    "experiment": run_experiment,
}
