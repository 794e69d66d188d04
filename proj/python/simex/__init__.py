"""Node-pair similarity explanations for 2-layer graph convolutional encoders.

Train unsupervised embeddings (plain or variational autoencoder), score node
pairs by cosine similarity, attribute a pair's score to individual edges
(raw gradients, integrated gradients, or a learned sigmoid mask), and
evaluate explanations with the fidelity / effect-overlap protocol.
"""

from simex._core import (
    AggregateEval,
    DimensionError,
    EncoderParams,
    EvalOptions,
    ExplanationMatrix,
    Graph,
    IoError,
    MiConfig,
    NumericError,
    PairEvalRecord,
    ParseError,
    TrainConfig,
    TrainReport,
    ValidationError,
    effect_overlap,
    encode,
    evaluate,
    explain_gb1,
    explain_gb2,
    explain_mi,
    explanation_support,
    generate_sbm,
    load_graph,
    sample_pairs,
    similarity,
    train,
)

__all__ = [
    "AggregateEval",
    "DimensionError",
    "EncoderParams",
    "EvalOptions",
    "ExplanationMatrix",
    "Graph",
    "IoError",
    "MiConfig",
    "NumericError",
    "PairEvalRecord",
    "ParseError",
    "TrainConfig",
    "TrainReport",
    "ValidationError",
    "effect_overlap",
    "encode",
    "evaluate",
    "explain_gb1",
    "explain_gb2",
    "explain_mi",
    "explanation_support",
    "generate_sbm",
    "load_graph",
    "sample_pairs",
    "similarity",
    "train",
]
