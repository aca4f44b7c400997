"""Fuzzy information seeded region growing (FISRG) for lesion segmentation."""

__version__ = "0.1.0"

from .estimator import FISRGSegmenter, GaussianDenoiser, GridSearchSegmenter
from .growing import GrowParams, RegionStats, fisrg, grow_region, membership, update
from .metrics import dice, lesion_percentage
from .morphology import StructuringElement, dilate, erode, postprocess
from .phantom import PhantomSpec, generate_phantom
from .preprocess import denoise, gaussian_kernel
from .seeds import SeedCriteria, SeedSet, kmeans, select_seeds
from .io import extract_slice, load_image, load_mask, load_volume, save_mask
from .tuner import (
    ExperimentConfig,
    ParamPoint,
    evaluate,
    roi_from_gt,
    run_experiment,
    segment,
    tune_slice,
)

__all__ = [
    "ExperimentConfig",
    "FISRGSegmenter",
    "GaussianDenoiser",
    "GridSearchSegmenter",
    "GrowParams",
    "ParamPoint",
    "PhantomSpec",
    "RegionStats",
    "SeedCriteria",
    "SeedSet",
    "StructuringElement",
    "denoise",
    "dice",
    "dilate",
    "erode",
    "evaluate",
    "extract_slice",
    "fisrg",
    "gaussian_kernel",
    "generate_phantom",
    "grow_region",
    "kmeans",
    "lesion_percentage",
    "load_image",
    "load_mask",
    "load_volume",
    "membership",
    "postprocess",
    "roi_from_gt",
    "run_experiment",
    "save_mask",
    "segment",
    "select_seeds",
    "tune_slice",
    "update",
]
