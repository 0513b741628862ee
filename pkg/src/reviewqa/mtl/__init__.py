from .check import gradient_check
from .features import (
    MTLExample,
    build_vocab,
    examples_to_dataset,
    featurize,
    span_to_token_target,
)
from .metrics import (
    evaluate,
    exact_match_spans,
    subjectivity_accuracy,
    token_f1_spans,
    write_metrics_csv,
)
from .model import (
    NO_ANSWER,
    SKIP,
    InputFeatures,
    MTLConfig,
    MTLParams,
    NumericalError,
    SpanPrediction,
    encode,
    example_loss_and_grads,
    init_params,
    load_params,
    predict_span,
    predict_subjectivity,
    save_params,
    span_score,
)
from .train import DivergenceError, TrainConfig, TrainResult, train_mtl

__all__ = [
    "DivergenceError",
    "InputFeatures",
    "MTLConfig",
    "MTLExample",
    "MTLParams",
    "NO_ANSWER",
    "NumericalError",
    "SKIP",
    "SpanPrediction",
    "TrainConfig",
    "TrainResult",
    "build_vocab",
    "encode",
    "evaluate",
    "exact_match_spans",
    "example_loss_and_grads",
    "examples_to_dataset",
    "featurize",
    "gradient_check",
    "init_params",
    "load_params",
    "predict_span",
    "predict_subjectivity",
    "save_params",
    "span_score",
    "span_to_token_target",
    "subjectivity_accuracy",
    "token_f1_spans",
    "train_mtl",
    "write_metrics_csv",
]
