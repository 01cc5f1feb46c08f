"""Structure-based anomaly detection in the preference space.

Points are embedded against a pool of sampled models (:mod:`.models`,
:mod:`.embedding`) and isolated by RuzHash trees (:mod:`.hashing`,
:mod:`.forest`) or by the Voronoi-split PI-Forest baseline.
"""

from .datagen import Dataset, SyntheticSpec, generate, load_csv, save_csv
from .distances import DistanceKind, jaccard, ruzicka, tanimoto
from .embedding import EmbeddingConfig, PreferenceMode, embed_dataset, embed_point, preference_value
from .errors import DegenerateSample, FormatError, PoolExhausted, SingleClass
from .evaluation import METHODS, EvalReport, SweepConfig, estimate_sigma, roc_auc, run_sweep
from .forest import Forest, ForestConfig, anomaly_score, build_forest, build_tree, height, score_all
from .hashing import SplitRule, apply_split, binarize, estimate_ruzicka, make_split_rule, minhash_bucket
from .models import Circle, Line, ModelPool, fit_circle, fit_line, residual, sample_pool

__version__ = "0.1.0"
