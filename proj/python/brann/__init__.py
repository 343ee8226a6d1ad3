"""Bayesian-regularized neural networks for tool-wear prediction."""

from ._brann import (
    DataError,
    Dataset,
    InvalidInput,
    MetricReport,
    MrmrRanking,
    Network,
    Predictor,
    RunOutcome,
    SchemaError,
    ShapeError,
    StateError,
    TrainingAborted,
    TrainResult,
    algorithms,
    classification_accuracy,
    classify,
    evaluate,
    load_feature_table,
    load_features,
    mae,
    prepare_features,
    r2,
    rank_features,
    rmse,
    sine_benchmark,
    train,
    transfers,
)
from ._brann import run as _run


def _text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def run(config, repeat=0, checkpoint=None):
    """Train once from a mapping of config keys, e.g. {"data.synthetic": "sine"}."""
    return _run([(k, _text(v)) for k, v in config.items()], repeat, checkpoint)


__all__ = [name for name in dir() if not name.startswith("_")]
