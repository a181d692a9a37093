"""Bandwidth selection for one face through a Dirichlet synthetic population.

A Dirichlet law fitted to the face data stands in for the unknown truth.
A large population drawn from it gives a reference curve of ``E[H | A]``;
a subsample the size of the data plays the observed sample. For each
bandwidth on the grid, a kernel estimate of the subsample is resampled and
its curve compared with the reference by integrated square error.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dirichlet, kde
from .compositions import SubsimplexMask, appropriation, as_compositions, as_weights, shannon_index
from .curves import DEFAULT_BINS, estimate_curve, ise, skipped_width
from .mixture import (
    PROBE_COUNT,
    SAFETY,
    AcceptanceError,
    EnvelopeViolation,
    FaceComponent,
    envelope_constant,
    sample_face,
)

log = logging.getLogger(__name__)

FORMAT = "landdiv.bandwidth"
VERSION = 1


def default_grid() -> tuple[float, ...]:
    return tuple(float(v) for v in np.logspace(-4, -1, 25))


@dataclass(frozen=True)
class BandwidthConfig:
    """Sizes, grid and seed for :func:`select_lambda`.

    ``base`` is the logarithm base of the Shannon index; ``None`` means the
    number of covers on the face.
    """

    lambda_grid: tuple[float, ...] = field(default_factory=default_grid)
    population_size: int = 1_000_000
    resample_size: int = 10_000
    bins: int = DEFAULT_BINS
    eta: float = kde.DEFAULT_ETA
    seed: int = 0
    base: int | None = None
    probe_count: int = PROBE_COUNT
    safety: float = SAFETY
    pseudo_likelihood: bool = False
    workers: int = 1

    def __post_init__(self):
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid:
            raise ValueError("empty bandwidth grid")
        if min(grid) <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("bandwidth grid must be positive and strictly increasing")
        object.__setattr__(self, "lambda_grid", grid)


@dataclass(frozen=True)
class BandwidthReport:
    """Outcome of a grid search. ``ise`` holds ``None`` for infeasible bandwidths."""

    lambda_grid: tuple[float, ...]
    ise: tuple[float | None, ...]
    skipped_width: tuple[float | None, ...]
    infeasible: dict[str, str]
    lambda_star: float
    alpha: tuple[float, ...]
    log_likelihood: float
    pseudo_log_likelihood: tuple[float, ...] | None = None

    @property
    def ise_star(self) -> float:
        return self.ise[self.lambda_grid.index(self.lambda_star)]

    def to_json(self) -> str:
        doc = {"format": FORMAT, "version": VERSION, **asdict(self)}
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BandwidthReport":
        doc = json.loads(text)
        if doc.pop("format", None) != FORMAT or doc.pop("version", None) != VERSION:
            raise ValueError("not a version-1 bandwidth report")
        for key in ("lambda_grid", "ise", "skipped_width", "alpha"):
            doc[key] = tuple(doc[key])
        if doc["pseudo_log_likelihood"] is not None:
            doc["pseudo_log_likelihood"] = tuple(doc["pseudo_log_likelihood"])
        return cls(**doc)

    def table(self) -> str:
        lines = [f"{'lambda':>12}  {'ISE':>14}"]
        for lam, v in zip(self.lambda_grid, self.ise):
            mark = " *" if lam == self.lambda_star else ""
            text = f"{v:14.6e}" if v is not None else f"{'infeasible':>14}"
            lines.append(f"{lam:12.6g}  {text}{mark}")
        return "\n".join(lines)


def _curve(points, w, cfg, base):
    return estimate_curve(appropriation(points, w), shannon_index(points, base), w, cfg.bins)


def _one_lambda(lam, sample, w, cfg, base, reference, seed):
    """ISE of one bandwidth, or the reason it could not be evaluated."""
    rng = np.random.default_rng(seed)
    try:
        model = kde.build(sample, lam, cfg.eta)
        env = envelope_constant(model, cfg.probe_count, cfg.safety, rng)
        mask = SubsimplexMask((True,) * model.dim)
        comp = FaceComponent(mask, model.size, "kde", model, env)
        x = sample_face(comp, cfg.resample_size, rng)
    except (EnvelopeViolation, AcceptanceError, kde.PlanError) as exc:
        return None, None, f"{type(exc).__name__}: {exc}"
    curve = _curve(x, w, cfg, base)
    return ise(reference, curve), skipped_width(reference, curve), None


def select_lambda(face_points, w_face, cfg: BandwidthConfig = BandwidthConfig()) -> BandwidthReport:
    """Grid search for the bandwidth of one face.

    ``face_points`` are the face's compositions in reduced coordinates and
    ``w_face`` the weights of the face's covers. Bandwidths whose sampler
    fails are reported as infeasible; ``lambda_star`` is the smallest
    bandwidth attaining the least ISE.
    """
    pts = as_compositions(face_points)
    w = as_weights(w_face)
    if pts.ndim != 2 or pts.shape[1] != len(w):
        raise ValueError("face points and face weights disagree on the number of covers")
    if pts.shape[1] < 2:
        raise ValueError("a face needs at least two covers")
    base = cfg.base or pts.shape[1]
    if len(pts) > cfg.population_size:
        raise ValueError("population must be larger than the face sample")

    params = dirichlet.mle_fit(pts)
    loglik = dirichlet.log_likelihood(params, pts)
    seeds = np.random.SeedSequence(cfg.seed).spawn(2 + len(cfg.lambda_grid))
    population = dirichlet.sample(params, cfg.population_size, np.random.default_rng(seeds[0]))
    pick = np.random.default_rng(seeds[1]).choice(cfg.population_size, size=len(pts), replace=False)
    sample = population[np.sort(pick)]
    reference = _curve(population, w, cfg, base)

    jobs = [(lam, sample, w, cfg, base, reference, s) for lam, s in zip(cfg.lambda_grid, seeds[2:])]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_one_lambda, *zip(*jobs)))
    else:
        results = [_one_lambda(*job) for job in jobs]

    values = tuple(r[0] for r in results)
    infeasible = {repr(lam): r[2] for lam, r in zip(cfg.lambda_grid, results) if r[2] is not None}
    for lam, reason in infeasible.items():
        log.warning("bandwidth %s infeasible: %s", lam, reason)
    feasible = [(v, i) for i, v in enumerate(values) if v is not None]
    if not feasible:
        raise RuntimeError("no feasible bandwidth on the grid")
    best = min(feasible)[1]  # ties go to the smaller index, the smaller bandwidth

    pseudo = None
    if cfg.pseudo_likelihood:
        pseudo = tuple(kde.pseudo_log_likelihood(sample, lam) for lam in cfg.lambda_grid)
    return BandwidthReport(
        lambda_grid=cfg.lambda_grid,
        ise=values,
        skipped_width=tuple(r[1] for r in results),
        infeasible=infeasible,
        lambda_star=cfg.lambda_grid[best],
        alpha=params.alpha,
        log_likelihood=loglik,
        pseudo_log_likelihood=pseudo,
    )
