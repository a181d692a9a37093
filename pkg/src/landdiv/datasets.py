"""Cell datasets: CSV ingestion and export, and synthetic stand-ins."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dirichlet
from .compositions import SUM_TOL, ZERO_TOL, SubsimplexMask
from .mixture import face_order

log = logging.getLogger(__name__)


class InputError(ValueError):
    """Malformed or unusable input data."""


@dataclass
class IngestReport:
    source: str | None = None
    sha256: str | None = None
    accepted: int = 0
    renormalized: list[tuple[int, str, float]] = field(default_factory=list)
    rejected: list[tuple[int, str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "sha256": self.sha256,
            "accepted": self.accepted,
            "renormalized": [list(r) for r in self.renormalized],
            "rejected": [list(r) for r in self.rejected],
        }


@dataclass(frozen=True, eq=False)
class CellDataset:
    """Cells with an identifier and a composition over named covers."""

    cell_ids: tuple[str, ...]
    points: np.ndarray
    covers: tuple[str, ...]
    zero_tol: float = ZERO_TOL
    report: IngestReport = field(default_factory=IngestReport)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != len(self.covers):
            raise InputError("every row needs one value per cover")
        if len(self.cell_ids) != len(pts):
            raise InputError("one identifier per row")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.cell_ids)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["cell_id", *self.covers])
        for cid, row in zip(self.cell_ids, self.points):
            out.writerow([cid, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    def export(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv().encode()).hexdigest()


def parse_csv(text: str, zero_tol: float = ZERO_TOL, sum_tol: float = SUM_TOL, source=None) -> CellDataset:
    """Read ``cell_id`` plus one column per cover.

    Rows off by at most ``sum_tol`` from a unit sum are renormalized; rows
    with negative parts or a larger deviation are dropped. Both are listed
    in the dataset's report. Structural problems raise :class:`InputError`.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty CSV") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0] != "cell_id":
        raise InputError("header must be cell_id followed by cover names")
    covers = tuple(header[1:])
    report = IngestReport(source=source, sha256=hashlib.sha256(text.encode()).hexdigest())
    ids, rows = [], []
    for line, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != len(header):
            raise InputError(f"line {line}: expected {len(header)} fields, got {len(rec)}")
        cid = rec[0].strip()
        try:
            vals = np.array([float(f) for f in rec[1:]])
        except ValueError:
            raise InputError(f"line {line}: non-numeric proportion") from None
        if not np.all(np.isfinite(vals)):
            report.rejected.append((line, cid, "non-finite proportion"))
            continue
        if np.any(vals < 0):
            report.rejected.append((line, cid, "negative proportion"))
            continue
        total = float(vals.sum())
        if abs(total - 1.0) > sum_tol:
            report.rejected.append((line, cid, f"parts sum to {total!r}"))
            continue
        if abs(total - 1.0) > 1e-12:
            vals = vals / total
            report.renormalized.append((line, cid, total))
        ids.append(cid)
        rows.append(vals)
    for line, cid, why in report.rejected:
        log.warning("line %d (%s) rejected: %s", line, cid, why)
    if report.renormalized:
        log.info("%d rows renormalized", len(report.renormalized))
    report.accepted = len(rows)
    points = np.array(rows) if rows else np.empty((0, len(covers)))
    return CellDataset(tuple(ids), points, covers, zero_tol, report)


def ingest(path, zero_tol: float = ZERO_TOL, sum_tol: float = SUM_TOL) -> CellDataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise InputError(f"{path}: not UTF-8") from None
    return parse_csv(text, zero_tol, sum_tol, source=str(path))


@dataclass(frozen=True)
class FaceSpec:
    mask: SubsimplexMask
    count: int
    alpha: tuple[float, ...] | None = None  # one per present cover; None means all ones


def synth_data(
    faces,
    seed=0,
    covers: tuple[str, ...] | None = None,
    zero_tol: float = ZERO_TOL,
    shuffle: bool = True,
) -> CellDataset:
    """Dataset whose face census equals ``faces`` exactly.

    ``faces`` is a list of :class:`FaceSpec` or a mapping from mask strings
    to counts or ``(count, alpha)`` pairs. Points on each face are Dirichlet
    draws; any draw with a present part at or below ``zero_tol`` is redrawn so
    that it cannot slip to a smaller face.
    """
    specs = _face_specs(faces)
    n = len(specs[0].mask.present)
    if any(len(s.mask.present) != n for s in specs):
        raise ValueError("all faces need the same number of covers")
    covers = tuple(covers) if covers else tuple(f"cover{i + 1}" for i in range(n))
    rng = np.random.default_rng(seed)
    blocks = []
    for spec in sorted(specs, key=lambda s: face_order(s.mask)):
        if spec.mask.size == 1:
            blocks.append(spec.mask.embed(np.ones((spec.count, 1))))
            continue
        alpha = spec.alpha or (1.0,) * spec.mask.size
        if len(alpha) != spec.mask.size:
            raise ValueError(f"face {spec.mask}: need {spec.mask.size} parameters")
        pts = dirichlet.sample(alpha, spec.count, rng)
        bad = np.any(pts <= zero_tol, axis=1)
        while bad.any():
            pts[bad] = dirichlet.sample(alpha, int(bad.sum()), rng)
            bad = np.any(pts <= zero_tol, axis=1)
        blocks.append(spec.mask.embed(pts))
    points = np.vstack(blocks)
    if shuffle:
        points = points[rng.permutation(len(points))]
    ids = tuple(f"c{i:05d}" for i in range(1, len(points) + 1))
    return CellDataset(ids, points, covers, zero_tol, IngestReport(accepted=len(points)))


def _face_specs(faces) -> list[FaceSpec]:
    if isinstance(faces, dict):
        out = []
        for key, val in faces.items():
            mask = key if isinstance(key, SubsimplexMask) else SubsimplexMask.from_string(key)
            count, alpha = (val, None) if isinstance(val, (int, np.integer)) else val
            out.append(FaceSpec(mask, int(count), tuple(alpha) if alpha is not None else None))
        faces = out
    faces = list(faces)
    if not faces:
        raise ValueError("no faces given")
    return faces
