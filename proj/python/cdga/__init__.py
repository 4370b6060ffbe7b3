"""Cross-domain generative augmentation toolkit (C++ core)."""

from ._core import (
    augmented_size,
    balanced_batch_sizes,
    diversity_shift,
    head_hessian,
    hessian_distance,
    load_config,
    near_duplicate_rates,
    run_command,
    scan_dataset,
    sharpness,
    tsne,
    write_shapes_dataset,
)

__all__ = [
    "augmented_size",
    "balanced_batch_sizes",
    "diversity_shift",
    "head_hessian",
    "hessian_distance",
    "load_config",
    "near_duplicate_rates",
    "run_command",
    "scan_dataset",
    "sharpness",
    "tsne",
    "write_shapes_dataset",
]
