"""ROC AUC, noise estimation and the benchmark sweep.

A sweep runs every ``(method, b, run)`` cell: it samples a model pool for the
run, embeds the data, trains a forest and scores every point, timing training
and testing separately. Work counters from :mod:`prefspace.forest` are kept
next to the wall-clock times because they do not depend on the machine.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from .datagen import Dataset, SyntheticSpec, generate, load_csv, load_structures, structures_path
from .distances import DistanceKind
from .embedding import EmbeddingConfig, PreferenceMode, embed_dataset
from .errors import FormatError, SingleClass
from .forest import RUZHASH, VORONOI, Counters, ForestConfig, build_forest, score_all
from .models import sample_pool

logger = logging.getLogger(__name__)

SCHEMA = 1
DEFAULT_B_VALUES = (2, 4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class Method:
    name: str
    split: str
    distance: Optional[DistanceKind]
    mode: PreferenceMode


METHODS: dict[str, Method] = {
    "rhf": Method("rhf", RUZHASH, None, PreferenceMode.CONTINUOUS),
    "rhf-b": Method("rhf-b", RUZHASH, None, PreferenceMode.BINARY),
    "pif": Method("pif", VORONOI, DistanceKind.TANIMOTO, PreferenceMode.CONTINUOUS),
    "pif-b": Method("pif-b", VORONOI, DistanceKind.JACCARD, PreferenceMode.BINARY),
    "pif-r": Method("pif-r", VORONOI, DistanceKind.RUZICKA, PreferenceMode.CONTINUOUS),
}


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for ties; label 1 is the positive class."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores for {y.size} labels")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC AUC needs both genuine and anomalous points")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def estimate_sigma(data: Dataset, structures=None) -> float:
    """Sample std of genuine points' signed residuals to their nearest structure."""
    structures = tuple(structures if structures is not None else data.structures)
    if not structures:
        raise ValueError("noise estimation needs the generating structures")
    genuine = data.points[~data.is_anomaly]
    if genuine.shape[0] == 0:
        raise ValueError("noise estimation needs at least one genuine point")
    signed = np.column_stack([mdl.signed_residual(genuine) for mdl in structures])
    nearest = np.abs(signed).argmin(axis=1)
    r = signed[np.arange(signed.shape[0]), nearest]
    if r.size < 2:
        return 0.0
    return float(np.std(r, ddof=1))


def model_kinds_for(structures) -> tuple[str, ...]:
    kinds = sorted({mdl.kind for mdl in structures})
    return tuple(kinds) if kinds else ("line",)


@dataclass
class SweepConfig:
    """Benchmark sweep; field names double as the JSON config keys.

    ``dataset`` is either a :class:`SyntheticSpec` (or its dict form) or the
    path of a CSV whose ``.structures.json`` sidecar supplies the generating
    structures. ``sigma`` overrides noise estimation.
    """

    dataset: Union[SyntheticSpec, dict, str] = field(default_factory=SyntheticSpec)
    methods: Sequence[str] = ("rhf", "rhf-b", "pif", "pif-b", "pif-r")
    b_values: Sequence[int] = DEFAULT_B_VALUES
    t: int = 100
    psi: int = 256
    k: float = 3.0
    pool_mult: float = 10.0
    runs: int = 5
    seed: int = 0
    sigma: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.dataset, dict):
            spec = dict(self.dataset)
            if "bbox" in spec:
                spec["bbox"] = tuple(spec["bbox"])
            self.dataset = SyntheticSpec(**spec)
        self.methods = tuple(self.methods)
        self.b_values = tuple(int(b) for b in self.b_values)
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {sorted(METHODS)}")
        if not self.b_values:
            raise ValueError("at least one branching factor is required")
        if self.psi < 2:
            raise ValueError(f"psi must be >= 2, got {self.psi}")
        bad = [b for b in self.b_values if not 2 <= b <= self.psi]
        if bad:
            raise ValueError(f"branching factors must lie in [2, psi={self.psi}], got {bad}")
        if self.t < 1 or self.runs < 1:
            raise ValueError("t and runs must be >= 1")
        if not self.k > 0 or not self.pool_mult > 0:
            raise ValueError("k and pool_mult must be positive")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        if isinstance(self.dataset, SyntheticSpec):
            out["dataset"] = asdict(self.dataset)
        out["methods"] = list(self.methods)
        out["b_values"] = list(self.b_values)
        return out


def read_config(path: Union[str, Path]) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return raw


def load_sweep_config(path: Union[str, Path]) -> SweepConfig:
    return SweepConfig.from_dict(read_config(path))


def load_dataset(source) -> Dataset:
    """Dataset from a synthetic spec, or from CSV plus its structures sidecar."""
    if isinstance(source, SyntheticSpec):
        return generate(source)
    data = load_csv(source)
    sidecar = structures_path(source)
    if sidecar.exists():
        data = Dataset(data.points, data.labels, load_structures(sidecar))
    return data


@dataclass
class RunRecord:
    method: str
    b: int
    run: int
    seed: int
    auc: float
    train_time: float
    test_time: float
    train_counters: dict
    test_counters: dict
    scores: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "scores"}
        out["type"] = "run"
        return out


@dataclass
class EvalReport:
    """Per ``(method, b)`` aggregate over runs; ``auc`` is the mean of ``auc_runs``."""

    method: str
    b: int
    auc: float
    train_time: float
    test_time: float
    run_count: int
    auc_runs: list
    train_times: list
    test_times: list
    test_counters: dict
    runs: list = field(default_factory=list, repr=False)

    @classmethod
    def from_runs(cls, runs: list[RunRecord]) -> "EvalReport":
        aucs = [r.auc for r in runs]
        counters = {k: float(np.mean([r.test_counters[k] for r in runs])) for k in runs[0].test_counters}
        return cls(
            method=runs[0].method,
            b=runs[0].b,
            auc=float(np.mean(aucs)),
            train_time=float(np.mean([r.train_time for r in runs])),
            test_time=float(np.mean([r.test_time for r in runs])),
            run_count=len(runs),
            auc_runs=aucs,
            train_times=[r.train_time for r in runs],
            test_times=[r.test_time for r in runs],
            test_counters=counters,
            runs=list(runs),
        )

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "runs"}
        out["type"] = "aggregate"
        return out


def run_seed(seed: int, run: int) -> int:
    return int(np.random.SeedSequence([seed, run]).generate_state(1)[0])


def run_cell(P, labels, method: Method, b: int, cfg: SweepConfig, run: int, seed: int) -> RunRecord:
    """Train and score one forest; the timed regions cover only training and scoring."""
    fcfg = ForestConfig(t=cfg.t, psi=cfg.psi, b=b, method=method.split, distance=method.distance, seed=seed)
    t0 = time.perf_counter()
    forest = build_forest(P, fcfg)
    t1 = time.perf_counter()
    counters = Counters()
    scores = score_all(P, forest, counters)
    t2 = time.perf_counter()
    return RunRecord(
        method=method.name,
        b=b,
        run=run,
        seed=seed,
        auc=roc_auc(scores, labels),
        train_time=t1 - t0,
        test_time=t2 - t1,
        train_counters=forest.train_counters.as_dict(),
        test_counters=counters.as_dict(),
        scores=scores,
    )


def run_sweep(
    cfg: SweepConfig,
    data: Optional[Dataset] = None,
    progress: Optional[Callable[[RunRecord], None]] = None,
) -> list[EvalReport]:
    """Evaluate every method and branching factor over ``cfg.runs`` runs.

    Each run draws its own model pool and forest seed from ``(cfg.seed, run)``;
    all methods and branching factors of a run share that pool.
    """
    if data is None:
        data = load_dataset(cfg.dataset)
    sigma = cfg.sigma if cfg.sigma is not None else estimate_sigma(data)
    if not sigma > 0:
        raise ValueError("estimated noise sigma is zero; pass sigma explicitly")
    kinds = model_kinds_for(data.structures)
    m = max(1, int(round(cfg.pool_mult * data.n)))
    methods = [METHODS[name] for name in cfg.methods]
    cells: dict[tuple[str, int], list[RunRecord]] = {}
    for run in range(cfg.runs):
        seed = run_seed(cfg.seed, run)
        pool = sample_pool(data.points, m, np.random.default_rng(seed), kinds)
        embedded: dict[PreferenceMode, np.ndarray] = {}
        for method in methods:
            if method.mode not in embedded:
                embedded[method.mode] = embed_dataset(data, pool, EmbeddingConfig(sigma, cfg.k, method.mode))
            for b in cfg.b_values:
                rec = run_cell(embedded[method.mode], data.labels, method, b, cfg, run, seed)
                cells.setdefault((method.name, b), []).append(rec)
                if progress is not None:
                    progress(rec)
    return [EvalReport.from_runs(cells[(method.name, b)]) for method in methods for b in cfg.b_values]


def report_json(cfg: SweepConfig, reports: list[EvalReport]) -> dict:
    return {
        "schema": SCHEMA,
        "config": cfg.to_dict(),
        "records": [rec.to_json() for rep in reports for rec in rep.runs],
        "aggregates": [rep.to_json() for rep in reports],
    }


def write_report(path: Union[str, Path], cfg: SweepConfig, reports: list[EvalReport]) -> None:
    Path(path).write_text(json.dumps(report_json(cfg, reports), indent=2) + "\n")


def write_scores_csv(path: Union[str, Path], scores, labels) -> None:
    """``index,score,label`` rows after a ``# schema: 1`` line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {SCHEMA}\n")
        fh.write("index,score,label\n")
        for i, (s, lab) in enumerate(zip(scores, labels)):
            fh.write(f"{i},{float(s):.17g},{int(lab)}\n")


def read_scores_csv(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != f"# schema: {SCHEMA}":
        raise FormatError(f"{path}: missing '# schema: {SCHEMA}' line")
    if len(lines) < 2 or lines[1].strip() != "index,score,label":
        raise FormatError(f"{path}: line 2: expected header 'index,score,label'")
    scores, labels = [], []
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}: line {lineno}: expected 3 columns")
        try:
            scores.append(float(parts[1]))
            labels.append(int(parts[2]))
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: non-numeric field") from None
    return np.array(scores), np.array(labels)


def write_run_scores(directory: Union[str, Path], reports: list[EvalReport], labels) -> list[Path]:
    """One scores CSV per run, named ``<method>_b<b>_run<run>.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for rep in reports:
        for rec in rep.runs:
            path = directory / f"{rec.method}_b{rec.b}_run{rec.run}.csv"
            write_scores_csv(path, rec.scores, labels)
            written.append(path)
    return written
