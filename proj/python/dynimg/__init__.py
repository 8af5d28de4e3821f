"""Rank-pooled dynamic images, a-contrario pruning, and RGB-D activity classification."""

from ._core import (
    DataError,
    Modality,
    approx_coefficients,
    approx_pool,
    binomial_tail,
    embed_image,
    load_sequence,
    normalize_image,
    objective,
    prune_image,
    read_dimg,
    run_pipeline,
    solve_exact,
    synth_generate,
    write_dimg,
)

__all__ = [
    "DataError",
    "Modality",
    "approx_coefficients",
    "approx_pool",
    "binomial_tail",
    "embed_image",
    "load_sequence",
    "normalize_image",
    "objective",
    "prune_image",
    "read_dimg",
    "run_pipeline",
    "solve_exact",
    "synth_generate",
    "write_dimg",
]
