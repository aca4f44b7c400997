"""scikit-learn compatible wrappers around the pipeline.

``X`` is a single 2D image or a stack of them (3D array or list). ROI and
ground-truth masks follow the same layout. The i-th image of a stack is
processed with the RNG seed derived from ``(random_state, i)``, the same
derivation the tuner uses, so a tuned point re-run through
:class:`FISRGSegmenter` reproduces the tuner's Dice.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .exceptions import DimensionMismatch
from .metrics import dice
from .preprocess import denoise
from .seeds import SeedCriteria
from .tuner import (
    DEFAULT_GRID,
    ROI_DILATION_RADIUS,
    ExperimentConfig,
    ParamPoint,
    PipelineSettings,
    Slice,
    roi_from_gt,
    run_experiment,
    segment,
    slice_seed,
)
from .validation import check_image, check_mask


def check_stack(X, name="X", kind="image"):
    """Return ``(list_of_2d_arrays, was_single)`` for an image or a stack."""
    check = check_image if kind == "image" else check_mask
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [check(X, name)], True
    if isinstance(X, np.ndarray) and X.ndim != 3:
        raise DimensionMismatch(f"{name} must be 2D or 3D, got {X.ndim}D")
    items = [check(x, f"{name}[{i}]") for i, x in enumerate(X)]
    if not items:
        raise DimensionMismatch(f"{name} is empty")
    return items, False


def _pair_rois(images, roi, name="roi"):
    rois, _ = check_stack(roi, name, kind="mask")
    if len(rois) != len(images):
        raise DimensionMismatch(f"{len(images)} images but {len(rois)} {name} masks")
    for i, (img, r) in enumerate(zip(images, rois)):
        if img.shape != r.shape:
            raise DimensionMismatch(f"image {i} is {img.shape}, {name} is {r.shape}")
    return rois


class GaussianDenoiser(TransformerMixin, BaseEstimator):
    """Gaussian smoothing as a stateless transformer."""

    def __init__(self, sigma=1.0):
        self.sigma = sigma

    def fit(self, X, y=None):
        check_stack(X)
        self.is_fitted_ = True
        return self

    def transform(self, X):
        images, single = check_stack(X)
        out = [denoise(img, self.sigma) for img in images]
        return out[0] if single else np.stack(out)


class _PipelineParams:
    def _settings(self):
        crit = SeedCriteria(
            window_radius=self.window_radius,
            max_local_std=self.max_local_std,
            min_separation=self.min_separation,
            sample_count=self.sample_count,
            max_attempts=self.max_attempts,
        )
        return PipelineSettings(
            erode_size=self.erode_size,
            se_shape=self.se_shape,
            sigma_floor=self.sigma_floor,
            criteria=crit,
        )


class FISRGSegmenter(_PipelineParams, BaseEstimator):
    """Fixed-parameter segmenter: denoise, seed, grow, postprocess.

    Nothing is learned; :meth:`fit` only validates parameters, so the
    estimator can sit inside sklearn tooling that expects ``fit``.
    """

    def __init__(
        self,
        fuzzy_threshold=0.3,
        n_seeds=4,
        denoise_sigma=1.0,
        dilate_size=5,
        erode_size=3,
        se_shape="square",
        sigma_floor=0.005,
        window_radius=2,
        max_local_std=0.05,
        min_separation=5.0,
        sample_count=None,
        max_attempts=5,
        random_state=0,
    ):
        self.fuzzy_threshold = fuzzy_threshold
        self.n_seeds = n_seeds
        self.denoise_sigma = denoise_sigma
        self.dilate_size = dilate_size
        self.erode_size = erode_size
        self.se_shape = se_shape
        self.sigma_floor = sigma_floor
        self.window_radius = window_radius
        self.max_local_std = max_local_std
        self.min_separation = min_separation
        self.sample_count = sample_count
        self.max_attempts = max_attempts
        self.random_state = random_state

    def fit(self, X=None, y=None, roi=None):
        self.settings_ = self._settings()
        self.point_ = ParamPoint(
            self.fuzzy_threshold, int(self.n_seeds), self.denoise_sigma, int(self.dilate_size)
        )
        return self

    def predict(self, X, roi):
        """Segment each image inside its ROI; returns bool mask(s)."""
        if not hasattr(self, "point_"):
            self.fit()
        images, single = check_stack(X)
        rois = _pair_rois(images, roi)
        preds = [
            segment(img, r, self.point_, slice_seed(self.random_state, i), self.settings_)
            for i, (img, r) in enumerate(zip(images, rois))
        ]
        return preds[0] if single else np.stack(preds)

    def score(self, X, y, roi=None, roi_radius=ROI_DILATION_RADIUS):
        """Mean Dice against ``y``; ROI defaults to the dilated ground truth."""
        images, _ = check_stack(X)
        gts = _pair_rois(images, y, "y")
        if roi is None:
            roi = [roi_from_gt(g, roi_radius) for g in gts]
        preds = self.predict(images, roi)
        return float(np.mean([dice(p, g) for p, g in zip(preds, gts)]))


class GridSearchSegmenter(_PipelineParams, BaseEstimator):
    """Per-image exhaustive search of the pipeline parameters.

    After :meth:`fit`, ``results_`` holds one ``SliceResult`` per image,
    ``best_params_`` the winning ``ParamPoint`` per image and ``summary_``
    the mean/std/min/max table.
    """

    def __init__(
        self,
        experiment=1,
        grid=None,
        fixed=None,
        roi_radius=ROI_DILATION_RADIUS,
        erode_size=3,
        se_shape="square",
        sigma_floor=0.005,
        window_radius=2,
        max_local_std=0.05,
        min_separation=5.0,
        sample_count=None,
        max_attempts=5,
        random_state=0,
        n_jobs=None,
    ):
        self.experiment = experiment
        self.grid = grid
        self.fixed = fixed
        self.roi_radius = roi_radius
        self.erode_size = erode_size
        self.se_shape = se_shape
        self.sigma_floor = sigma_floor
        self.window_radius = window_radius
        self.max_local_std = max_local_std
        self.min_separation = min_separation
        self.sample_count = sample_count
        self.max_attempts = max_attempts
        self.random_state = random_state
        self.n_jobs = n_jobs

    def make_config(self):
        grid = dict(DEFAULT_GRID)
        grid.update({k: tuple(v) for k, v in (self.grid or {}).items()})
        fixed = self.fixed if isinstance(self.fixed, ParamPoint) else ParamPoint(**(self.fixed or {}))
        return ExperimentConfig(
            experiment_id=self.experiment,
            fixed=fixed,
            grid=grid,
            rng_seed=self.random_state,
            settings=self._settings(),
        )

    def fit(self, X, y, roi=None):
        images, _ = check_stack(X)
        gts = _pair_rois(images, y, "y")
        if roi is None:
            rois = [roi_from_gt(g, self.roi_radius) for g in gts]
        else:
            rois = _pair_rois(images, roi)
        self.config_ = self.make_config()
        slices = [Slice(i, img, g, r) for i, (img, g, r) in enumerate(zip(images, gts, rois))]
        self.results_, self.summary_ = run_experiment(slices, self.config_, self.n_jobs)
        self.best_params_ = [r.best for r in self.results_]
        self.rois_ = rois
        return self

    def predict(self, X, roi=None):
        """Segment the fitted images, each with its own tuned parameters."""
        if not hasattr(self, "results_"):
            raise NotFittedError("GridSearchSegmenter is not fitted")
        images, single = check_stack(X)
        if len(images) != len(self.results_):
            raise DimensionMismatch(
                f"fitted on {len(self.results_)} images, got {len(images)}"
            )
        rois = self.rois_ if roi is None else _pair_rois(images, roi)
        preds = [
            segment(img, r, res.best, slice_seed(self.config_.rng_seed, res.slice_index),
                    self.config_.settings)
            for img, r, res in zip(images, rois, self.results_)
        ]
        return preds[0] if single else np.stack(preds)
