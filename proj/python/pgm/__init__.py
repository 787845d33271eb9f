"""Pyramidal gradient matching for optical flow."""

from ._core import (
    Ablation,
    FormatError,
    InvalidInput,
    InvalidParameter,
    IoError,
    ParseError,
    PipelineConfig,
    Variant,
    densify,
    endpoint_metrics,
    flow_to_color,
    match,
    read_flo,
    select_interpolator,
    sparse_matches,
    synthetic_case,
    write_flo,
)


def flow(img1, img2, config=None, spacing=3, interp="auto"):
    """Dense HxWx2 flow: grid matches interpolated over the image."""
    config = config if config is not None else PipelineConfig()
    matches = sparse_matches(img1, img2, config, spacing)
    height, width = img1.shape[:2]
    return densify(matches, width, height, interp)


__all__ = [
    "Ablation",
    "FormatError",
    "InvalidInput",
    "InvalidParameter",
    "IoError",
    "ParseError",
    "PipelineConfig",
    "Variant",
    "densify",
    "endpoint_metrics",
    "flow",
    "flow_to_color",
    "match",
    "read_flo",
    "select_interpolator",
    "sparse_matches",
    "synthetic_case",
    "write_flo",
]
