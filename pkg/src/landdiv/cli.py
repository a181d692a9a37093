"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .compositions import SUM_TOL, ZERO_TOL, CompositionError
from .datasets import InputError, ingest, synth_data
from .scenarios import FACE_COUNTS, ScenarioConfig, scenario

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("landdiv")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _scenario_args(p: argparse.ArgumentParser):
    p.add_argument("--scenario", type=int, help="built-in year: 1956, 1973 or 2000")
    p.add_argument("--weights", type=_floats, help="comma-separated, strictly increasing")
    p.add_argument("--urban-index", type=int)
    p.add_argument("--config", help="JSON scenario/config document; flags override it")
    p.add_argument("--min-count", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--bins", type=int)
    p.add_argument("--seed", type=int)


def _build_scenario(args, doc: dict) -> ScenarioConfig:
    if args.scenario is not None:
        base = scenario(args.scenario)
    elif doc:
        base = ScenarioConfig.from_dict(doc)
    elif args.weights:
        base = ScenarioConfig(args.weights)
    else:
        raise InputError("give --scenario, --weights or --config")
    if args.scenario is not None and doc:
        base = ScenarioConfig.from_dict({**base.to_dict(), **doc})
    if args.weights:
        base = ScenarioConfig.from_dict({**base.to_dict(), "weights": list(args.weights),
                                         "covers": [] if len(args.weights) != len(base.weights) else list(base.covers)})
    return base.with_overrides(
        urban_index=args.urban_index, min_count=args.min_count, eta=args.eta, bins=args.bins, seed=args.seed
    )


def cmd_uniform(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    sc = _build_scenario(args, doc)
    pipeline.run_uniform(
        len(sc.weights), sc.weights, args.grid_points, args.out,
        samples=args.samples, seed=sc.seed, make_svg=not args.no_svg,
    )
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.counts:
        faces = {k: int(v) for k, v in _load_json(args.counts).items()}
        covers = None
    else:
        faces = FACE_COUNTS[args.scenario]
        covers = scenario(args.scenario).covers
    data = synth_data(faces, seed=args.seed, covers=covers)
    data.export(args.out)
    print(f"wrote {len(data)} cells to {args.out}")
    return EXIT_OK


def _empirical_config(args, doc: dict) -> pipeline.EmpiricalConfig:
    fields = dict(doc.get("empirical", {}))
    for key in ("sample_size", "population_size", "resample_size", "workers"):
        if getattr(args, key) is not None:
            fields[key] = getattr(args, key)
    if args.lambda_grid:
        fields["lambda_grid"] = args.lambda_grid
    if args.no_svg:
        fields["svg"] = False
    return pipeline.EmpiricalConfig.from_dict(fields)


def cmd_empirical(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    sc = _build_scenario(args, {k: v for k, v in doc.items() if k != "empirical"})
    cfg = _empirical_config(args, doc)
    data = ingest(args.data, zero_tol=args.zero_tol, sum_tol=args.sum_tol)
    for line, cid, why in data.report.rejected:
        print(f"rejected line {line} ({cid}): {why}", file=sys.stderr)
    result = pipeline.run_empirical(data, sc, cfg, args.out)
    for face, rep in result.reports.items():
        print(f"face {face}  lambda* = {rep.lambda_star:g}")
        print(rep.table())
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    """Re-run an empirical manifest and compare output digests."""
    man = _load_json(args.manifest)
    if man.get("format") != pipeline.MANIFEST_FORMAT:
        raise InputError("not a run manifest")
    if man["kind"] == "uniform":
        c = man["config"]
        pipeline.run_uniform(c["covers"], c["weights"], c["grid_points"], args.out, samples=c["samples"],
                             hist_bins=c["hist_bins"], seed=c["seed"], make_svg=c["svg"])
    else:
        source = args.data or man["input"]["source"]
        if source is None:
            raise InputError("manifest has no input path; pass --data")
        inp = man["input"]
        data = ingest(source, zero_tol=inp["zero_tol"])
        if data.digest() != inp["dataset_sha256"]:
            raise InputError("input data differs from the recorded digest")
        pipeline.run_empirical(data, ScenarioConfig.from_dict(man["scenario"]),
                               pipeline.EmpiricalConfig.from_dict(man["config"]), args.out)
    fresh = json.loads((Path(args.out) / pipeline.MANIFEST).read_text())["outputs"]
    differ = sorted(k for k in man["outputs"] if man["outputs"][k] != fresh.get(k))
    for name in differ:
        print(f"differs: {name}", file=sys.stderr)
    print("identical" if not differ else f"{len(differ)} file(s) differ")
    return EXIT_OK if not differ else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="landdiv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("uniform", help="curves and densities for uniform proportions")
    _scenario_args(p)
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--no-svg", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_uniform)

    p = sub.add_parser("synth", help="synthetic dataset with a built-in face census")
    p.add_argument("--scenario", type=int, default=1956, choices=sorted(FACE_COUNTS))
    p.add_argument("--counts", help="JSON mapping of face mask to count, overrides --scenario")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("empirical", help="mixture fit, resampling and conditional curves")
    p.add_argument("data", help="CSV with cell_id and one column per cover")
    _scenario_args(p)
    p.add_argument("--lambda-grid", type=_floats)
    p.add_argument("--sample-size", type=int)
    p.add_argument("--population-size", type=int)
    p.add_argument("--resample-size", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--zero-tol", type=float, default=ZERO_TOL)
    p.add_argument("--sum-tol", type=float, default=SUM_TOL)
    p.add_argument("--no-svg", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_empirical)

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--data", help="input CSV if it moved since the original run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, CompositionError, KeyError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except pipeline.StageError as exc:
        print(f"numerical failure in {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
