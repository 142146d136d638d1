"""Pothole area estimation from detections and depth maps."""

from ._core import (
    AreaFilter,
    BBox,
    CameraIntrinsics,
    CdkfConfig,
    PotholeError,
    area_afd,
    area_cv,
    area_mae,
    area_report,
    bench_mbtp,
    ellipse_factor,
    estimate,
    estimate_area,
    estimate_area_corner_point,
    hungarian,
    iou,
    measurement_noise,
    objective_j,
    read_pfm,
    synthesize,
    write_pfm,
)

__all__ = [
    "AreaFilter",
    "BBox",
    "CameraIntrinsics",
    "CdkfConfig",
    "PotholeError",
    "area_afd",
    "area_cv",
    "area_mae",
    "area_report",
    "bench_mbtp",
    "ellipse_factor",
    "estimate",
    "estimate_area",
    "estimate_area_corner_point",
    "hungarian",
    "iou",
    "measurement_noise",
    "objective_j",
    "read_pfm",
    "synthesize",
    "write_pfm",
]
