"""Parametric structures (lines, circles), minimal-sample fitting and pool sampling.

Model families are registered in :data:`FAMILIES`; each entry knows its minimal
sample size, how to fit a model from that many points and how to compute
residuals for a batch of models at once. Embedding and forest code only ever
see a :class:`ModelPool` and :func:`residual_matrix`, so adding a family does
not touch them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DegenerateSample, PoolExhausted

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class Line:
    """Line ``a*x + b*y + c = 0`` with unit normal ``(a, b)``."""

    a: float
    b: float
    c: float
    kind = "line"

    def __post_init__(self):
        norm = np.hypot(self.a, self.b)
        if not np.isfinite([self.a, self.b, self.c]).all() or abs(norm - 1.0) > 1e-9:
            raise ValueError(f"line normal must be finite and unit-norm, got norm {norm}")

    @property
    def params(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)

    def signed_residual(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.a * pts[..., 0] + self.b * pts[..., 1] + self.c


@dataclass(frozen=True)
class Circle:
    """Circle with center ``(cx, cy)`` and radius ``r > 0``."""

    cx: float
    cy: float
    r: float
    kind = "circle"

    def __post_init__(self):
        if not np.isfinite([self.cx, self.cy, self.r]).all() or not self.r > 0:
            raise ValueError(f"circle radius must be finite and positive, got {self.r}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    @property
    def params(self) -> tuple[float, float, float]:
        return (self.cx, self.cy, self.r)

    def signed_residual(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.hypot(pts[..., 0] - self.cx, pts[..., 1] - self.cy) - self.r


StructureModel = Union[Line, Circle]


def _as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (2,) or not np.isfinite(arr).all():
        raise ValueError(f"expected a finite 2-vector, got {p!r}")
    return arr


def fit_line(p1, p2) -> Line:
    """Line through two distinct points, normalized so ``a**2 + b**2 == 1``."""
    p1, p2 = _as_point(p1), _as_point(p2)
    d = p2 - p1
    norm = np.hypot(d[0], d[1])
    if norm <= DEGENERACY_TOL:
        raise DegenerateSample("coincident points do not determine a line")
    a, b = -d[1] / norm, d[0] / norm
    c = -(a * p1[0] + b * p1[1])
    return Line(float(a), float(b), float(c))


def fit_circle(p1, p2, p3) -> Circle:
    """Circumcircle of three non-collinear points."""
    p1, p2, p3 = _as_point(p1), _as_point(p2), _as_point(p3)
    # Work relative to p1 to keep the determinant well scaled.
    u, v = p2 - p1, p3 - p1
    det = 2.0 * (u[0] * v[1] - u[1] * v[0])
    if abs(det) <= DEGENERACY_TOL:
        raise DegenerateSample("collinear points do not determine a circle")
    uu, vv = u @ u, v @ v
    ox = (v[1] * uu - u[1] * vv) / det
    oy = (u[0] * vv - v[0] * uu) / det
    r = np.hypot(ox, oy)
    return Circle(float(p1[0] + ox), float(p1[1] + oy), float(r))


def residual(model: StructureModel, x) -> float:
    """Unsigned residual of point ``x`` with respect to ``model``."""
    return float(abs(model.signed_residual(_as_point(x))))


def _line_residuals(params: np.ndarray, points: np.ndarray) -> np.ndarray:
    # elementwise rather than matmul: a row's result must not depend on the batch
    return np.abs(points[:, 0:1] * params[:, 0] + points[:, 1:2] * params[:, 1] + params[:, 2])


def _circle_residuals(params: np.ndarray, points: np.ndarray) -> np.ndarray:
    dx = points[:, 0:1] - params[:, 0]
    dy = points[:, 1:2] - params[:, 1]
    return np.abs(np.hypot(dx, dy) - params[:, 2])


@dataclass(frozen=True)
class ModelFamily:
    name: str
    sample_size: int
    fit: Callable[..., StructureModel]
    batch_residuals: Callable[[np.ndarray, np.ndarray], np.ndarray]


FAMILIES: dict[str, ModelFamily] = {
    "line": ModelFamily("line", 2, fit_line, _line_residuals),
    "circle": ModelFamily("circle", 3, fit_circle, _circle_residuals),
}


@dataclass(frozen=True)
class ModelPool:
    """Ordered collection of sampled models; column ``i`` of an embedding is model ``i``."""

    models: tuple[StructureModel, ...]
    _groups: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.models) < 1:
            raise ValueError("a model pool needs at least one model")
        groups: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        kinds = np.array([mdl.kind for mdl in self.models])
        for name in FAMILIES:
            cols = np.flatnonzero(kinds == name)
            if cols.size:
                params = np.array([self.models[i].params for i in cols], dtype=float)
                groups[name] = (cols, params)
        object.__setattr__(self, "_groups", groups)

    @property
    def m(self) -> int:
        return len(self.models)

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i):
        return self.models[i]


def residual_matrix(pool: ModelPool, points) -> np.ndarray:
    """Residuals of every point against every model, shape ``(n, m)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((pts.shape[0], pool.m))
    for name, (cols, params) in pool._groups.items():
        out[:, cols] = FAMILIES[name].batch_residuals(params, pts)
    return out


def sample_pool(
    points,
    m: int,
    rng: np.random.Generator,
    kinds: Union[str, Sequence[str]] = "line",
) -> ModelPool:
    """Sample ``m`` models from minimal sample sets drawn uniformly from ``points``.

    Model ``i`` belongs to family ``kinds[i % len(kinds)]``. Minimal sets are
    drawn independently, so the same set can be drawn twice. A degenerate set
    is discarded and redrawn; :class:`PoolExhausted` is raised after
    ``100 * m`` consecutive degenerate draws.
    """
    if m < 1:
        raise ValueError(f"pool size must be >= 1, got {m}")
    pts = np.asarray(getattr(points, "points", points), dtype=float)
    if isinstance(kinds, str):
        kinds = (kinds,)
    families = [FAMILIES[k] for k in kinds]
    need = max(f.sample_size for f in families)
    if pts.shape[0] < need:
        raise ValueError(f"need at least {need} points to sample {list(kinds)}, got {pts.shape[0]}")

    models: list[StructureModel] = []
    misses = 0
    while len(models) < m:
        family = families[len(models) % len(families)]
        idx = rng.choice(pts.shape[0], size=family.sample_size, replace=False)
        try:
            models.append(family.fit(*pts[idx]))
            misses = 0
        except DegenerateSample:
            misses += 1
            if misses >= 100 * m:
                raise PoolExhausted(f"{misses} consecutive degenerate minimal samples") from None
    return ModelPool(tuple(models))
