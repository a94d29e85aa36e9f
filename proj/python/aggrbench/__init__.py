"""Scatter, reduce, pull and push GNN aggregation kernels and their benchmark harness."""

from ._core import (
    ContractError,
    Error,
    Graph,
    IoError,
    OutOfMemoryError,
    UsageError,
    ValidationError,
    __version__,
    aggregate,
    dense_oracle,
    forward_layer,
    generate,
    random_features,
    read_edge_list,
    run_benchmark,
    supports,
    write_edge_list,
)

ABSTRACTIONS = ("scatter", "reduce", "pull", "push")
MODELS = ("gcn", "gin", "gat", "pdn")
OPS = ("add", "max", "mean")

__all__ = [
    "ABSTRACTIONS",
    "MODELS",
    "OPS",
    "ContractError",
    "Error",
    "Graph",
    "IoError",
    "OutOfMemoryError",
    "UsageError",
    "ValidationError",
    "__version__",
    "aggregate",
    "dense_oracle",
    "forward_layer",
    "generate",
    "random_features",
    "read_edge_list",
    "run_benchmark",
    "supports",
    "write_edge_list",
]
