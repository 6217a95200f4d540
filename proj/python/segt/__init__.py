"""SegT polyp segmentation (C++ core)."""

from ._segt import (
    InputError,
    Model,
    NumericalError,
    default_config,
    dice,
    edge_ground_truth,
    iou,
    mae,
    pixel_weight_map,
    resolve_config,
    scaled_size,
    train,
    weighted_bce,
    weighted_iou,
    write_synthetic_dataset,
)

__all__ = [
    "InputError",
    "Model",
    "NumericalError",
    "default_config",
    "dice",
    "edge_ground_truth",
    "iou",
    "mae",
    "pixel_weight_map",
    "resolve_config",
    "scaled_size",
    "train",
    "weighted_bce",
    "weighted_iou",
    "write_synthetic_dataset",
]
