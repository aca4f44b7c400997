"""Per-slice exhaustive grid search over the pipeline parameters.

Three nested experiment layouts are predefined. Experiment 1 searches the
fuzzy threshold and seed count, experiment 2 adds the denoising sigma and
experiment 3 adds the dilation size. Parameters that are not searched stay
at their fixed defaults. All default grids contain those defaults, so each
experiment's search space contains the previous one's.
"""
import itertools
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import ComputationError, EmptyGrid, EmptyRoi, NoValidSeeds
from .growing import DEFAULT_SIGMA_FLOOR, GrowParams, fisrg
from .metrics import EvalRecord, dice, lesion_percentage
from .morphology import StructuringElement, dilate, postprocess
from .preprocess import denoise
from .seeds import SeedCriteria, select_seeds
from .validation import check_image, check_mask, check_same_shape

logger = logging.getLogger(__name__)

# lexicographic grid order, also the tie-break order
PARAM_ORDER = ("fuzzy_threshold", "n_seeds", "denoise_sigma", "dilate_size")

EXPERIMENT_FREE = {
    1: ("fuzzy_threshold", "n_seeds"),
    2: ("fuzzy_threshold", "n_seeds", "denoise_sigma"),
    3: ("fuzzy_threshold", "n_seeds", "denoise_sigma", "dilate_size"),
}

DEFAULT_GRID = {
    "fuzzy_threshold": (0.1, 0.112, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.829, 0.9, 1.0),
    "n_seeds": tuple(range(2, 12)),
    "denoise_sigma": (0.5, 1.0, 1.5, 2.0),
    "dilate_size": (3, 5, 7, 9),
}

# margin used when the tuning ROI is derived from the ground truth
ROI_DILATION_RADIUS = 3


@dataclass(frozen=True, order=True)
class ParamPoint:
    fuzzy_threshold: float = 0.3
    n_seeds: int = 4
    denoise_sigma: float = 1.0
    dilate_size: int = 5

    def as_tuple(self):
        return tuple(getattr(self, name) for name in PARAM_ORDER)


@dataclass(frozen=True)
class PipelineSettings:
    """Pipeline constants that are never searched."""

    erode_size: int = 3
    se_shape: str = "square"
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    criteria: SeedCriteria = field(default_factory=SeedCriteria)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: int = 1
    fixed: ParamPoint = ParamPoint()
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    rng_seed: int = 0
    settings: PipelineSettings = field(default_factory=PipelineSettings)

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_FREE:
            raise ValueError(f"experiment_id must be 1, 2 or 3, got {self.experiment_id}")
        unknown = set(self.grid) - set(PARAM_ORDER)
        if unknown:
            raise ValueError(f"unknown grid parameters {sorted(unknown)}")

    @property
    def free_params(self):
        return EXPERIMENT_FREE[self.experiment_id]

    def axes(self):
        """Value list per parameter in ``PARAM_ORDER``."""
        out = []
        for name in PARAM_ORDER:
            if name in self.free_params:
                out.append(tuple(self.grid.get(name, DEFAULT_GRID[name])))
            else:
                out.append((getattr(self.fixed, name),))
        return out

    def points(self):
        """Grid points in deterministic lexicographic order."""
        return [ParamPoint(*values) for values in itertools.product(*self.axes())]


class Slice(NamedTuple):
    index: int
    image: np.ndarray
    gt: np.ndarray
    roi: np.ndarray


@dataclass(frozen=True)
class SliceResult:
    slice_index: int
    best: ParamPoint
    dice: float
    lesion_pct: float
    elapsed_ms: float


@dataclass(frozen=True)
class FieldStats:
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class ExperimentSummary:
    experiment_id: int
    n_slices: int
    stats: dict  # field name -> FieldStats
    total_elapsed_min: float


class SliceError(ComputationError):
    def __init__(self, slice_index, cause):
        super().__init__(f"slice {slice_index}: {cause}")
        self.slice_index = slice_index
        self.cause = cause


def slice_seed(rng_seed, slice_index):
    """Per-slice RNG seed derived from the experiment seed."""
    ss = np.random.SeedSequence([int(rng_seed), int(slice_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def roi_from_gt(gt, radius=ROI_DILATION_RADIUS):
    """ROI used for tuning: the ground truth grown by a disk of ``radius``."""
    gt = check_mask(gt, "gt")
    if radius <= 0:
        return gt.copy()
    return dilate(gt, StructuringElement("disk", 2 * radius + 1))


def segment(img, roi, p, rng_seed, settings=None):
    """Run denoise, seed selection, region growing and postprocessing.

    Returns the predicted mask; an empty mask when no seed validates or the
    ROI is empty.
    """
    settings = settings or PipelineSettings()
    img = check_image(img)
    roi = check_mask(roi, "roi")
    check_same_shape(img, roi, names=("image", "roi"))
    smooth = denoise(img, p.denoise_sigma)
    try:
        seeds = select_seeds(smooth, roi, p.n_seeds, settings.criteria, rng_seed)
    except (NoValidSeeds, EmptyRoi):
        return np.zeros(img.shape, dtype=bool)
    grown = fisrg(smooth, seeds, GrowParams(p.fuzzy_threshold, settings.sigma_floor))
    return postprocess(grown, p.dilate_size, settings.erode_size, settings.se_shape)


def evaluate(img, gt, roi, p, rng_seed, settings=None):
    """Score one parameter point on one slice against its ground truth."""
    t0 = time.perf_counter()
    gt = check_mask(gt, "gt")
    check_same_shape(np.asarray(img), gt, roi, names=("image", "gt", "roi"))
    pred = segment(img, roi, p, rng_seed, settings)
    return EvalRecord(
        dice=dice(pred, gt),
        lesion_pct=lesion_percentage(gt),
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
    )


class _SliceEvaluator:
    """Grid evaluation for one slice with stage-level memoization.

    Intermediate results are cached on the parameters that determine them,
    which yields exactly the masks :func:`segment` would produce.
    """

    def __init__(self, img, gt, roi, rng_seed, settings):
        self.img = check_image(img)
        self.gt = check_mask(gt, "gt")
        self.roi = check_mask(roi, "roi")
        check_same_shape(self.img, self.gt, self.roi, names=("image", "gt", "roi"))
        self.rng_seed = rng_seed
        self.settings = settings
        self._smooth = {}
        self._seeds = {}
        self._grown = {}

    def smooth(self, sigma):
        if sigma not in self._smooth:
            self._smooth[sigma] = denoise(self.img, sigma)
        return self._smooth[sigma]

    def seeds(self, sigma, k):
        key = (sigma, k)
        if key not in self._seeds:
            try:
                self._seeds[key] = select_seeds(
                    self.smooth(sigma), self.roi, k, self.settings.criteria, self.rng_seed
                )
            except (NoValidSeeds, EmptyRoi):
                self._seeds[key] = None
        return self._seeds[key]

    def grown(self, sigma, k, t):
        key = (sigma, k, t)
        if key not in self._grown:
            seeds = self.seeds(sigma, k)
            if seeds is None:
                self._grown[key] = None
            else:
                params = GrowParams(t, self.settings.sigma_floor)
                self._grown[key] = fisrg(self.smooth(sigma), seeds, params)
        return self._grown[key]

    def score(self, p):
        grown = self.grown(p.denoise_sigma, p.n_seeds, p.fuzzy_threshold)
        if grown is None:
            pred = np.zeros(self.img.shape, dtype=bool)
        else:
            s = self.settings
            pred = postprocess(grown, p.dilate_size, s.erode_size, s.se_shape)
        return dice(pred, self.gt)


def tune_slice(img, gt, roi, cfg, slice_index=0):
    """Exhaustively search ``cfg``'s grid on one slice.

    Returns the max-Dice point; ties go to the earliest point in
    lexicographic grid order.
    """
    t0 = time.perf_counter()
    points = cfg.points()
    if not points:
        raise EmptyGrid("parameter grid is empty")
    ev = _SliceEvaluator(img, gt, roi, slice_seed(cfg.rng_seed, slice_index), cfg.settings)
    best, best_dice = None, -1.0
    for p in points:
        d = ev.score(p)
        if d > best_dice:
            best, best_dice = p, d
    return SliceResult(
        slice_index=slice_index,
        best=best,
        dice=best_dice,
        lesion_pct=lesion_percentage(ev.gt),
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
    )


def _tune_task(args):
    s, cfg = args
    try:
        return tune_slice(s.image, s.gt, s.roi, cfg, slice_index=s.index)
    except ComputationError as exc:
        raise SliceError(s.index, exc) from exc


def summarize(results, experiment_id, total_elapsed_min=0.0):
    """Mean, sample std, min and max of the tuned parameters and Dice."""
    if not results:
        raise ValueError("no slice results to summarize")
    columns = {name: [getattr(r.best, name) for r in results] for name in PARAM_ORDER}
    columns["dice"] = [r.dice for r in results]
    stats = {}
    for name, values in columns.items():
        arr = np.asarray(values, dtype=np.float64)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        mean = float(arr.mean())
        # keep min <= mean <= max despite rounding in the sum
        mean = min(max(mean, float(arr.min())), float(arr.max()))
        stats[name] = FieldStats(mean, std, float(arr.min()), float(arr.max()))
    return ExperimentSummary(experiment_id, len(results), stats, total_elapsed_min)


def resolve_threads(threads=None):
    if threads is None:
        threads = os.environ.get("FISRG_THREADS")
    if threads in (None, ""):
        return 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def run_experiment(slices, cfg, threads=None, progress=None):
    """Tune every slice and summarize.

    Parameters
    ----------
    slices : list of Slice
    cfg : ExperimentConfig
    threads : int, optional
        Worker processes; falls back to ``FISRG_THREADS`` and then 1.
        Results do not depend on this value.
    progress : callable, optional
        Called with each finished :class:`SliceResult`, in slice order.

    Returns
    -------
    results : list of SliceResult
    summary : ExperimentSummary
    """
    slices = list(slices)
    if not slices:
        raise ValueError("no slices to tune")
    threads = resolve_threads(threads)
    t0 = time.perf_counter()
    tasks = [(s, cfg) for s in slices]
    results = []
    if threads == 1:
        for task in tasks:
            results.append(_tune_task(task))
            if progress:
                progress(results[-1])
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            # map preserves submission order, so the reduction is deterministic
            for res in pool.map(_tune_task, tasks):
                results.append(res)
                if progress:
                    progress(res)
    total_min = (time.perf_counter() - t0) / 60.0
    logger.info("experiment %d: %d slices in %.2f min",
                cfg.experiment_id, len(results), total_min)
    return results, summarize(results, cfg.experiment_id, total_min)


def config_to_dict(cfg):
    d = asdict(cfg)
    d["grid"] = {k: list(v) for k, v in cfg.grid.items()}
    return d


def config_from_dict(d):
    d = dict(d)
    settings = dict(d.pop("settings", {}) or {})
    crit = SeedCriteria(**(settings.pop("criteria", {}) or {}))
    fixed = ParamPoint(**(d.pop("fixed", {}) or {}))
    grid = dict(DEFAULT_GRID)
    grid.update({k: tuple(v) for k, v in (d.pop("grid", {}) or {}).items()})
    return ExperimentConfig(
        fixed=fixed,
        grid=grid,
        settings=PipelineSettings(criteria=crit, **settings),
        **d,
    )
