"""Synthetic structured datasets and CSV I/O.

Genuine points are drawn along lines or circles and displaced perpendicularly
by Gaussian noise; anomalies are uniform in the bounding box of the genuine
points. The default scene is two lines crossing in an "X".
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import FormatError
from .models import Circle, Line, StructureModel

GENUINE, ANOMALY = 0, 1


@dataclass(frozen=True)
class Dataset:
    """Points in the plane with ground-truth labels (0 genuine, 1 anomaly).

    ``structures`` holds the generating models when known; datasets loaded
    from CSV have none.
    """

    points: np.ndarray
    labels: np.ndarray
    structures: tuple = field(default=(), compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        lab = np.asarray(self.labels, dtype=np.int8)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("a dataset needs at least one point")
        if lab.shape != (pts.shape[0],):
            raise ValueError(f"{lab.shape[0] if lab.ndim else 0} labels for {pts.shape[0]} points")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        if not np.isin(lab, (GENUINE, ANOMALY)).all():
            raise ValueError("labels must be 0 (genuine) or 1 (anomaly)")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "structures", tuple(self.structures))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def is_anomaly(self) -> np.ndarray:
        return self.labels == ANOMALY

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.points, other.points) and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "lines"
    structures: int = 2
    points_per_structure: int = 125
    sigma: float = 0.05
    anomaly_ratio: float = 0.5
    bbox: tuple = (-5.0, -5.0, 5.0, 5.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("lines", "circles", "mixed"):
            raise ValueError(f"kind must be lines, circles or mixed, got {self.kind!r}")
        if self.structures < 1:
            raise ValueError("need at least one structure")
        if self.points_per_structure < 1:
            raise ValueError("need at least one point per structure")
        if not 0 < self.anomaly_ratio < 1:
            raise ValueError(f"anomaly_ratio must be in (0, 1), got {self.anomaly_ratio}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        x0, y0, x1, y1 = self.bbox
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"empty bbox {self.bbox}")
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))

    @property
    def n_genuine(self) -> int:
        return self.structures * self.points_per_structure

    @property
    def n_anomalies(self) -> int:
        r = self.anomaly_ratio
        return int(round(self.n_genuine * r / (1.0 - r)))


def scene_structures(spec: SyntheticSpec) -> list[StructureModel]:
    """Generating models for a scene.

    Lines all pass through the box center with evenly spread directions, the
    first at 45 degrees (two lines give an "X"). Circles share the horizontal
    axis of the box, with centers one radius apart so neighbours overlap.
    """
    x0, y0, x1, y1 = spec.bbox
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    half = min(x1 - x0, y1 - y0) / 2
    kinds = {"lines": ["line"], "circles": ["circle"], "mixed": ["line", "circle"]}[spec.kind]
    n_circles = sum(kinds[i % len(kinds)] == "circle" for i in range(spec.structures))
    radius = 2 * half / (n_circles + 3) if n_circles else 0.0
    out, li, ci = [], 0, 0
    n_lines = spec.structures - n_circles
    for i in range(spec.structures):
        if kinds[i % len(kinds)] == "line":
            angle = math.pi / 4 + li * math.pi / n_lines
            a, b = -math.sin(angle), math.cos(angle)
            out.append(Line(a, b, -(a * cx + b * cy)))
            li += 1
        else:
            offset = (ci - (n_circles - 1) / 2) * radius
            out.append(Circle(cx + offset, cy, radius))
            ci += 1
    return out


def _sample_structure(model: StructureModel, count, spec, rng):
    x0, y0, x1, y1 = spec.bbox
    if isinstance(model, Line):
        # unit direction along the line, foot of the box center on it
        normal = np.array([model.a, model.b])
        d = np.array([model.b, -model.a])
        center = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
        foot = center - model.signed_residual(center) * normal
        half = _half_extent(foot, d, spec.bbox)
        s = rng.uniform(-half, half, size=count)
        noise = rng.normal(0.0, spec.sigma, size=count) if spec.sigma > 0 else np.zeros(count)
        return foot + s[:, None] * d + noise[:, None] * normal
    theta = rng.uniform(0.0, 2 * math.pi, size=count)
    noise = rng.normal(0.0, spec.sigma, size=count) if spec.sigma > 0 else np.zeros(count)
    rad = model.r + noise
    return model.center + rad[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])


def _half_extent(foot, d, bbox):
    # largest s such that foot +- s*d stays inside the box
    x0, y0, x1, y1 = bbox
    limits = []
    for k, (lo, hi) in enumerate(((x0, x1), (y0, y1))):
        if abs(d[k]) > 1e-12:
            limits.append(min((hi - foot[k]) / abs(d[k]), (foot[k] - lo) / abs(d[k])))
    return max(min(limits), 0.0)


def generate(spec: SyntheticSpec) -> Dataset:
    """Genuine points along the scene structures followed by uniform anomalies."""
    rng = np.random.default_rng(spec.seed)
    models = scene_structures(spec)
    genuine = np.vstack([_sample_structure(mdl, spec.points_per_structure, spec, rng) for mdl in models])
    lo, hi = genuine.min(axis=0), genuine.max(axis=0)
    anomalies = rng.uniform(lo, hi, size=(spec.n_anomalies, 2))
    labels = np.concatenate([np.full(len(genuine), GENUINE), np.full(len(anomalies), ANOMALY)])
    return Dataset(np.vstack([genuine, anomalies]), labels, tuple(models))


def save_csv(data: Dataset, path: Union[str, Path]) -> None:
    """Write ``x,y,label`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("x,y,label\n")
        for (x, y), lab in zip(data.points, data.labels):
            fh.write(f"{x:.17g},{y:.17g},{int(lab)}\n")


def load_csv(path: Union[str, Path]) -> Dataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty file")
    if [c.strip() for c in rows[0]] != ["x", "y", "label"]:
        raise FormatError(f"{path}: line 1: expected header 'x,y,label', got {','.join(rows[0])!r}")
    points, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise FormatError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: non-numeric coordinate") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise FormatError(f"{path}: line {lineno}: non-finite coordinate")
        if row[2].strip() not in ("0", "1"):
            raise FormatError(f"{path}: line {lineno}: label must be 0 or 1, got {row[2]!r}")
        points.append((x, y))
        labels.append(int(row[2]))
    if not points:
        raise FormatError(f"{path}: no data rows")
    return Dataset(np.array(points), np.array(labels))


def structures_path(csv_path: Union[str, Path]) -> Path:
    """Sidecar file holding the generating structures of ``csv_path``."""
    p = Path(csv_path)
    return p.with_name(p.stem + ".structures.json")


def save_structures(models, path: Union[str, Path]) -> None:
    payload = {
        "schema": 1,
        "structures": [{"kind": mdl.kind, "params": list(mdl.params)} for mdl in models],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_structures(path: Union[str, Path]) -> tuple:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("schema") != 1:
        raise FormatError(f"{path}: expected an object with schema 1")
    out = []
    for i, item in enumerate(payload.get("structures", [])):
        try:
            cls = {"line": Line, "circle": Circle}[item["kind"]]
            out.append(cls(*map(float, item["params"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: structure {i}: {exc}") from None
    return tuple(out)
