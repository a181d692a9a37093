"""Batch runs that write CSV, JSON and SVG artifacts to a directory."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, bandwidth, mixture, svg, uniform
from .compositions import (
    appropriation,
    as_weights,
    l_index,
    sample_uniform_simplex,
    shannon_index,
)
from .curves import CurveEstimate, estimate_curve
from .datasets import CellDataset
from .scenarios import ScenarioConfig

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
MANIFEST_FORMAT = "landdiv.manifest"


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    out.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    return repr(float(v))


class _Writer:
    """Writes files into ``out_dir`` and remembers their digests."""

    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.digests: dict[str, str] = {}

    def text(self, name: str, content: str) -> Path:
        path = self.root / name
        data = content.encode("utf-8")
        path.write_bytes(data)
        self.digests[name] = hashlib.sha256(data).hexdigest()
        return path


def _versions() -> dict:
    return {
        "landdiv": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


# uniform proportions


@dataclass(frozen=True)
class UniformConfig:
    covers: int
    weights: tuple[float, ...]
    grid_points: int = 201
    samples: int = 1_000_000
    hist_bins: int = 50
    seed: int = 0
    svg: bool = True


def run_uniform(covers: int, w, grid_points: int, out_dir, samples: int = 1_000_000,
                hist_bins: int = 50, seed: int = 0, make_svg: bool = True) -> dict[str, Path]:
    """Shannon histogram, appropriation density and ``E[H | A]`` under uniform proportions."""
    w = as_weights(w)
    if len(w) != covers:
        raise ValueError("need one weight per cover")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    cfg = UniformConfig(covers, w.weights, grid_points, samples, hist_bins, seed, make_svg)
    out = _Writer(out_dir)
    files = {}

    p = sample_uniform_simplex(covers, samples, seed)
    h = shannon_index(p, covers)
    counts, edges = np.histogram(h, bins=hist_bins, range=(0.0, 1.0))
    dens = counts / (samples * np.diff(edges))
    files["h_histogram"] = out.text(
        "h_distribution_histogram.csv",
        _csv_text(["bin_left", "bin_right", "count", "density"],
                  [(_num(a), _num(b), int(c), _num(d)) for a, b, c, d in zip(edges[:-1], edges[1:], counts, dens)]),
    )

    grid = np.linspace(w.lo, w.hi, grid_points)
    f_a = np.array([uniform.appropriation_density_uniform(a, w) for a in grid])
    files["a_density"] = out.text(
        "a_density.csv", _csv_text(["a", "density"], [(_num(a), _num(f)) for a, f in zip(grid, f_a)])
    )
    curve = uniform.conditional_curve_uniform(grid, w)
    files["conditional_curve"] = out.text(
        "conditional_curve.csv",
        _csv_text(["a", "expected_h"], [(_num(a), _num(c)) for a, c in zip(grid, curve)]),
    )
    if make_svg:
        files["a_density_svg"] = out.text("a_density.svg", svg.plot(
            [svg.Series(grid, f_a, "red")], "A", "density", "Density of A"))
        files["conditional_curve_svg"] = out.text("conditional_curve.svg", svg.plot(
            [svg.Series(grid, curve, "red")], "A", "E[H | A]", "Expected Shannon index given A"))
        centers = 0.5 * (edges[:-1] + edges[1:])
        files["h_histogram_svg"] = out.text("h_distribution_histogram.svg", svg.plot(
            [svg.Series(centers, dens, "black")], "H", "density", "Shannon index"))
    manifest = {
        "format": MANIFEST_FORMAT,
        "kind": "uniform",
        "config": asdict(cfg),
        "versions": _versions(),
        "outputs": out.digests,
    }
    files["manifest"] = (out.root / MANIFEST)
    files["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return files


# observed cells


@dataclass(frozen=True)
class EmpiricalConfig:
    sample_size: int = 10_000
    lambda_grid: tuple[float, ...] = field(default_factory=bandwidth.default_grid)
    population_size: int = 1_000_000
    resample_size: int = 10_000
    hist_bins: int = 50
    uniform_curve: bool = True
    workers: int = 1
    svg: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))

    @classmethod
    def from_dict(cls, doc: dict) -> "EmpiricalConfig":
        names = cls.__dataclass_fields__
        return cls(**{k: v for k, v in doc.items() if k in names})


@dataclass
class EmpiricalResult:
    files: dict[str, Path]
    lambdas: dict[str, float | None]
    reports: dict[str, bandwidth.BandwidthReport]
    model: mixture.MixtureModel
    sample: np.ndarray
    curve_h: CurveEstimate
    curve_l: CurveEstimate | None


def _face_seed(seed: int, tag: int, mask) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, tag, mixture.face_order(mask)])


def _select(args):
    points, w_face, cfg = args
    return bandwidth.select_lambda(points, w_face, cfg)


def run_empirical(dataset: CellDataset, scenario: ScenarioConfig, cfg: EmpiricalConfig, out_dir,
                  ) -> EmpiricalResult:
    """Fit the face mixture, resample it and estimate ``E[H | A]`` and ``E[L | A]``.

    Every face with at least ``scenario.min_count`` cells and dimension >= 1
    gets its own bandwidth search on the face-restricted weights. Failures
    are raised as :class:`StageError` naming the stage.
    """
    w = scenario.weights
    n = len(w)
    if dataset.points.shape[1] != n:
        raise ValueError(f"dataset has {dataset.points.shape[1]} covers, scenario has {n}")
    if len(dataset) == 0:
        raise ValueError("dataset has no valid rows")
    out = _Writer(out_dir)
    files: dict[str, Path] = {}

    try:
        faces = mixture.group_by_face(dataset.points, dataset.zero_tol)
    except ValueError as exc:
        raise StageError("decompose", exc) from exc
    eligible = [m for m, rows in faces.items() if m.dim >= 1 and len(rows) >= scenario.min_count]

    jobs = []
    for m in eligible:
        bcfg = bandwidth.BandwidthConfig(
            lambda_grid=cfg.lambda_grid,
            population_size=cfg.population_size,
            resample_size=cfg.resample_size,
            bins=scenario.bins,
            eta=scenario.eta,
            seed=int(_face_seed(scenario.seed, 1, m).generate_state(1)[0]),
            base=n,
        )
        jobs.append((m.reduce(faces[m]), w.restrict(m), bcfg))
    try:
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                found = list(pool.map(_select, jobs))
        else:
            found = [_select(job) for job in jobs]
    except Exception as exc:
        raise StageError("bandwidth", exc) from exc
    reports = {str(m): r for m, r in zip(eligible, found)}
    lambdas = {str(m): (reports[str(m)].lambda_star if str(m) in reports else None) for m in faces}
    for name, rep in reports.items():
        log.info("face %s: lambda* = %g\n%s", name, rep.lambda_star, rep.table())
        files[f"bandwidth_{name}"] = out.text(f"bandwidth_{name}.json", rep.to_json() + "\n")

    try:
        model = mixture.decompose(
            dataset.points, w, scenario.min_count, {m: reports[str(m)].lambda_star for m in eligible},
            scenario.eta, dataset.zero_tol, seed=scenario.seed,
        )
        sample = mixture.sample(model, cfg.sample_size, np.random.SeedSequence([scenario.seed, 2]))
    except Exception as exc:
        raise StageError("mixture", exc) from exc
    files["model"] = out.text("mixture_model.json", model.to_json() + "\n")

    a = appropriation(sample, w)
    h = shannon_index(sample, n)
    use_l = scenario.urban_index is not None and n >= 3
    l_vals = l_index(sample, scenario.urban_index) if use_l else None
    curve_h = estimate_curve(a, h, w, scenario.bins)
    curve_l = estimate_curve(a, l_vals, w, scenario.bins) if use_l else None

    header = ["a", "h"] + (["l"] if use_l else [])
    cols = [a, h] + ([l_vals] if use_l else [])
    files["scatter"] = out.text("scatter.csv", _csv_text(header, ([_num(v) for v in row] for row in zip(*cols))))
    files["curve_h"] = out.text("curve_h.csv", curve_h.to_csv())
    if use_l:
        files["curve_l"] = out.text("curve_l.csv", curve_l.to_csv())
    rows = [(str(m), len(faces[m]), "-" if lambdas[str(m)] is None else repr(lambdas[str(m)])) for m in faces]
    files["lambda_table"] = out.text("lambda_table.csv", _csv_text(["face", "count", "lambda"], rows))
    files["histogram2d"] = out.text("histogram2d.csv", _histogram2d(a, h, w, cfg.hist_bins))

    uniform_curve = None
    if cfg.uniform_curve:
        uniform_curve = uniform.conditional_curve_uniform(curve_h.centers, w)
        files["uniform_curve_h"] = out.text(
            "uniform_curve_h.csv",
            _csv_text(["a", "expected_h"], [(_num(x), _num(y)) for x, y in zip(curve_h.centers, uniform_curve)]),
        )
        below = np.mean(curve_h.bin_means[curve_h.nonempty] <= uniform_curve[curve_h.nonempty])
        log.info("empirical H curve at or below the uniform curve in %.1f%% of bins", 100 * below)
    if cfg.svg:
        series = [svg.Series(curve_h.centers, curve_h.bin_means, "blue", label="empirical")]
        if uniform_curve is not None:
            series.insert(0, svg.Series(curve_h.centers, uniform_curve, "red", label="uniform"))
        files["curve_h_svg"] = out.text("curve_h.svg", svg.plot(series, "A", "E[H | A]", ylim=(0.0, 1.0)))
        if use_l:
            files["curve_l_svg"] = out.text("curve_l.svg", svg.plot(
                [svg.Series(curve_l.centers, curve_l.bin_means, "blue")], "A", "E[L | A]", ylim=(0.0, 1.0)))
        files["scatter_svg"] = out.text("scatter.svg", svg.plot(
            [svg.Series(a, h, "blue", "points")], "A", "H", ylim=(0.0, 1.0)))

    manifest = {
        "format": MANIFEST_FORMAT,
        "kind": "empirical",
        "scenario": scenario.to_dict(),
        "config": asdict(cfg),
        "input": {
            "source": dataset.report.source,
            "sha256": dataset.report.sha256,
            "dataset_sha256": dataset.digest(),
            "zero_tol": dataset.zero_tol,
        },
        "seeds": {"root": scenario.seed, "faces": {str(m): j[2].seed for m, j in zip(eligible, jobs)}},
        "versions": _versions(),
        "outputs": out.digests,
    }
    files["manifest"] = out.root / MANIFEST
    files["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return EmpiricalResult(files, lambdas, reports, model, sample, curve_h, curve_l)


def _histogram2d(a, h, w, bins: int) -> str:
    counts, ea, eh = np.histogram2d(a, h, bins=bins, range=[[w.lo, w.hi], [0.0, 1.0]])
    rows = []
    for i in range(bins):
        for j in range(bins):
            rows.append((_num(ea[i]), _num(ea[i + 1]), _num(eh[j]), _num(eh[j + 1]), int(counts[i, j])))
    return _csv_text(["a_left", "a_right", "h_left", "h_right", "count"], rows)
