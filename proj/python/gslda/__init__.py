"""Cascaded object detectors trained with greedy sparse LDA and boosting."""

from ._gslda import (
    CascadeModel,
    GsldaError,
    detect,
    draw_face,
    forward_select,
    haar_value,
    load_model,
    model_from_json,
    run_toy,
    save_model,
    set_thread_count,
    train,
    train_stump,
    write_synthetic_corpus,
)

__all__ = [
    "CascadeModel",
    "GsldaError",
    "detect",
    "draw_face",
    "forward_select",
    "haar_value",
    "load_model",
    "model_from_json",
    "run_toy",
    "save_model",
    "set_thread_count",
    "train",
    "train_stump",
    "write_synthetic_corpus",
]
