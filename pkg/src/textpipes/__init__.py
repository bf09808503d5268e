"""Shallow text-classification pipelines and a small evolutionary pipeline search."""

from .corpus import Dataset, FoldPlan, load_corpus, stratified_kfold
from .errors import (ConfigError, ConvergenceWarning, DataError, DomainError, FormatError,
                     LabelError, NumericError, SearchError, ShapeError, TextPipesError,
                     VersionError)
from .evolve import Genome, SearchConfig, SearchLog, run_search
from .pipeline import (FittedPipeline, PipelineSpec, deserialize_pipeline, fit_pipeline,
                       predict_pipeline, preset, serialize_pipeline)
from .sparse import SparseMatrix

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceWarning", "DataError", "Dataset", "DomainError",
    "FittedPipeline", "FoldPlan", "FormatError", "Genome", "LabelError", "NumericError",
    "PipelineSpec", "SearchConfig", "SearchError", "SearchLog", "ShapeError", "SparseMatrix",
    "TextPipesError", "VersionError", "deserialize_pipeline", "fit_pipeline", "load_corpus",
    "predict_pipeline", "preset", "run_search", "serialize_pipeline", "stratified_kfold",
]
