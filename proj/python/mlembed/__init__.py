"""Optimization over embedded machine-learning surrogates."""

from ._core import (
    Error,
    Model,
    bayesopt,
    compare,
    formulate_lp,
    load_model,
    load_model_file,
    solve,
)

__all__ = [
    "Error",
    "Model",
    "bayesopt",
    "compare",
    "formulate_lp",
    "load_model",
    "load_model_file",
    "solve",
]
