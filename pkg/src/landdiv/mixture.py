"""Face-wise mixture model of a compositional dataset and its sampler.

Cells with absent covers live on faces of the simplex, so the data has no
density on the whole simplex. Each face gets its own law: a Dirichlet-kernel
estimate when it holds enough points, otherwise the observed points with
equal probabilities. Faces are mixed with their sample proportions.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import kde as kde_mod
from .compositions import (
    ZERO_TOL,
    SubsimplexMask,
    as_compositions,
    as_weights,
    sample_uniform_simplex,
    subsimplex_masks,
)

log = logging.getLogger(__name__)

FORMAT = "landdiv.mixture"
VERSION = 1
MIN_COUNT = 30
SAFETY = 1.2
PROBE_COUNT = 10_000
MIN_ACCEPTANCE = 1e-6


class EnvelopeViolation(RuntimeError):
    """A density value exceeded the acceptance/rejection envelope."""


class AcceptanceError(RuntimeError):
    """Acceptance rate fell below the pathological threshold."""


class MissingBandwidth(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class FaceComponent:
    mask: SubsimplexMask
    count: int
    kind: str  # "kde", "discrete" or "point"
    kde: kde_mod.KdeModel | None = None
    envelope: float | None = None
    points: np.ndarray | None = None  # full coordinates, discrete faces only


@dataclass(frozen=True, eq=False)
class MixtureModel:
    covers: int
    components: tuple[FaceComponent, ...]

    @property
    def total(self) -> int:
        return sum(c.count for c in self.components)

    @property
    def masks(self) -> list[SubsimplexMask]:
        return [c.mask for c in self.components]

    @property
    def mix_weights(self) -> dict[SubsimplexMask, Fraction]:
        total = self.total
        return {c.mask: Fraction(c.count, total) for c in self.components}

    @property
    def envelopes(self) -> dict[SubsimplexMask, float]:
        return {c.mask: c.envelope for c in self.components if c.kind == "kde"}

    def component(self, mask) -> FaceComponent:
        mask = _as_mask(mask)
        for c in self.components:
            if c.mask == mask:
                return c
        raise KeyError(str(mask))

    def to_json(self) -> str:
        faces = []
        for c in self.components:
            doc = {"mask": str(c.mask), "kind": c.kind, "count": c.count, "q": [c.count, self.total]}
            if c.kind == "kde":
                doc.update(
                    envelope=c.envelope,
                    kde={"lambda": c.kde.lam, "eta": c.kde.eta, "points": c.kde.points.tolist()},
                )
            else:
                doc["points"] = c.points.tolist()
            faces.append(doc)
        return json.dumps({"format": FORMAT, "version": VERSION, "covers": self.covers, "faces": faces})

    @classmethod
    def from_json(cls, text: str) -> "MixtureModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT or doc.get("version") != VERSION:
            raise ValueError("not a version-1 mixture document")
        comps = []
        for face in doc["faces"]:
            mask = SubsimplexMask.from_string(face["mask"])
            if face["kind"] == "kde":
                k = face["kde"]
                model = kde_mod.build(k["points"], k["lambda"], k["eta"], renormalize=False)
                comps.append(FaceComponent(mask, face["count"], "kde", model, face["envelope"]))
            else:
                pts = np.asarray(face["points"], dtype=float)
                pts.setflags(write=False)
                comps.append(FaceComponent(mask, face["count"], face["kind"], points=pts))
        return cls(doc["covers"], tuple(comps))


def _as_mask(key) -> SubsimplexMask:
    return key if isinstance(key, SubsimplexMask) else SubsimplexMask.from_string(str(key))


def face_order(mask: SubsimplexMask) -> int:
    return sum(1 << i for i in mask.indices)


def group_by_face(points, zero_tol: float = ZERO_TOL) -> dict[SubsimplexMask, np.ndarray]:
    """Split rows by face, snapping absent covers to exact zeros.

    Faces come out ordered by the binary number whose lowest bit is the first
    cover; rows keep their input order.
    """
    pts = as_compositions(points)
    masks = subsimplex_masks(pts, zero_tol)
    groups: dict[SubsimplexMask, list[int]] = {}
    for i, m in enumerate(masks):
        groups.setdefault(m, []).append(i)
    out = {}
    for m in sorted(groups, key=face_order):
        rows = pts[groups[m]]
        out[m] = m.embed(as_compositions(m.reduce(rows), sum_tol=np.inf))
    return out


def envelope_constant(
    face_model: kde_mod.KdeModel,
    probe_count: int = PROBE_COUNT,
    safety: float = SAFETY,
    seed=0,
    path: str = "euler_maclaurin",
) -> float:
    """``safety`` times the largest density found at the sample points and
    ``probe_count`` uniform points."""
    probes = np.vstack(
        [face_model.points, sample_uniform_simplex(face_model.dim, probe_count, seed)]
    )
    values = kde_mod.evaluate(face_model, probes, path)
    return float(safety * values.max())


def decompose(
    dataset,
    w,
    min_count: int = MIN_COUNT,
    lambda_per_face: Mapping | None = None,
    eta: float = kde_mod.DEFAULT_ETA,
    zero_tol: float = ZERO_TOL,
    probe_count: int = PROBE_COUNT,
    safety: float = SAFETY,
    seed=0,
) -> MixtureModel:
    """Group ``dataset`` by face and attach a law to each face.

    Faces of dimension >= 1 with at least ``min_count`` points get a kernel
    estimate on their reduced coordinates with the bandwidth from
    ``lambda_per_face`` (keys are masks or strings like ``"1110"``).
    """
    pts = as_compositions(dataset)
    if len(pts) == 0:
        raise ValueError("empty dataset")
    if pts.shape[1] != len(as_weights(w)):
        raise ValueError("dataset and weights disagree on the number of covers")
    lambdas = {_as_mask(k): float(v) for k, v in (lambda_per_face or {}).items()}
    seeds = np.random.SeedSequence(seed)
    comps = []
    for mask, rows in group_by_face(pts, zero_tol).items():
        count = len(rows)
        if mask.dim == 0:
            comps.append(FaceComponent(mask, count, "point", points=_frozen(rows[:1])))
        elif count < min_count:
            comps.append(FaceComponent(mask, count, "discrete", points=_frozen(rows)))
        else:
            if mask not in lambdas:
                raise MissingBandwidth(f"no bandwidth for face {mask}")
            model = kde_mod.build(mask.reduce(rows), lambdas[mask], eta)
            face_seed = np.random.SeedSequence([seeds.entropy, int(str(mask), 2)])
            env = envelope_constant(model, probe_count, safety, np.random.default_rng(face_seed))
            comps.append(FaceComponent(mask, count, "kde", model, env))
    return MixtureModel(pts.shape[1], tuple(comps))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def sample_face(
    comp: FaceComponent,
    count: int,
    rng: np.random.Generator,
    path: str = "euler_maclaurin",
    batch: int = 4096,
) -> np.ndarray:
    """``count`` draws from one face law, embedded in full coordinates."""
    if count == 0:
        return np.empty((0, len(comp.mask.present)))
    if comp.kind == "point":
        return np.repeat(comp.points[:1], count, axis=0)
    if comp.kind == "discrete":
        return comp.points[rng.integers(0, len(comp.points), size=count)]
    model, env = comp.kde, comp.envelope
    accepted = []
    have = proposed = 0
    while have < count:
        x = sample_uniform_simplex(model.dim, batch, rng)
        u = rng.random(batch)
        dens = kde_mod.evaluate(model, x, path)
        proposed += batch
        if np.any(dens > env):
            raise EnvelopeViolation(
                f"face {comp.mask}: density {dens.max():.6g} exceeds envelope {env:.6g}"
            )
        keep = x[u * env <= dens]
        accepted.append(keep)
        have += len(keep)
        if proposed >= 2_000_000 and have / proposed < MIN_ACCEPTANCE:
            raise AcceptanceError(f"face {comp.mask}: acceptance rate {have / proposed:.3g}")
        if have < count:
            # aim the next batch at the remaining need
            rate = max(have / proposed, 1e-3)
            batch = int(min(262_144, max(1024, 1.2 * (count - have) / rate)))
    return comp.mask.embed(np.concatenate(accepted)[:count])


def sample(model: MixtureModel, count: int, seed=None, path: str = "euler_maclaurin") -> np.ndarray:
    """Draw ``count`` compositions from the mixture.

    Each draw picks a face with probability equal to its sample proportion;
    kernel faces then use uniform proposals on the face accepted when
    ``u * C <= f(x)``; other faces resample their stored points.
    """
    rng = np.random.default_rng(seed)
    probs = np.array([c.count for c in model.components], dtype=float) / model.total
    which = rng.choice(len(model.components), size=count, p=probs)
    out = np.empty((count, model.covers))
    for k, comp in enumerate(model.components):
        idx = np.flatnonzero(which == k)
        out[idx] = sample_face(comp, len(idx), rng, path)
    return out


def decision_flip_rate(face_model: kde_mod.KdeModel, envelope: float, trials: int, seed=None):
    """Share of proposals whose accept/reject decision differs between the
    two evaluation paths when both see the same random numbers."""
    rng = np.random.default_rng(seed)
    x = sample_uniform_simplex(face_model.dim, trials, rng)
    u = rng.random(trials)
    a = u * envelope <= kde_mod.eval_euler_maclaurin(face_model, None, x)
    b = u * envelope <= kde_mod.eval_loggamma(face_model, x)
    return float(np.mean(a != b))
