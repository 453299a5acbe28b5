"""Cross-modal subspace learning with retrieval evaluation.

Learns one linear projection per modality by alternating
eigen-updates that jointly maximize kernel dependence between the
projected modalities (and the labels) and preserve a shared semantic
graph, with row-sparse regularization. Ships a CCA baseline, ablation
presets, retrieval metrics (MAP, CMC), a synthetic paired-modality
generator, and a batch CLI.
"""

from .baselines import BaselineModel, PRESETS, fit_cca, preset_config, project_baseline
from .data import Dataset, SynthSpec, load_dataset, save_dataset, split_dataset, synth
from .errors import (
    CKDError,
    DataError,
    DegenerateConfigError,
    NumericError,
    UnlabeledSampleError,
    ValidationError,
)
from .evaluate import (
    DEFAULT_CMC_RANKS,
    RetrievalReport,
    average_precision,
    cmc_curve,
    evaluate_retrieval,
    map_score,
    nc_similarity,
    rank,
    relevance,
)
from .hsic import hsic, hsic_unnormalized
from .model_io import load_model, save_model
from .semgraph import SemanticGraph, build_graph, validate_labels
from .solver import (
    ModelParams,
    SolverConfig,
    TraceLog,
    TraceRecord,
    fit,
    objective,
    project,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineModel",
    "CKDError",
    "DEFAULT_CMC_RANKS",
    "DataError",
    "Dataset",
    "DegenerateConfigError",
    "ModelParams",
    "NumericError",
    "PRESETS",
    "RetrievalReport",
    "SemanticGraph",
    "SolverConfig",
    "SynthSpec",
    "TraceLog",
    "TraceRecord",
    "UnlabeledSampleError",
    "ValidationError",
    "average_precision",
    "build_graph",
    "cmc_curve",
    "evaluate_retrieval",
    "fit",
    "fit_cca",
    "hsic",
    "hsic_unnormalized",
    "load_dataset",
    "load_model",
    "map_score",
    "nc_similarity",
    "objective",
    "preset_config",
    "project",
    "project_baseline",
    "rank",
    "relevance",
    "save_dataset",
    "save_model",
    "split_dataset",
    "synth",
    "validate_labels",
    "__version__",
]
