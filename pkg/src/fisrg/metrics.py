"""Overlap and prevalence measures for a predicted mask."""
from dataclasses import dataclass

import numpy as np

from .validation import check_mask, check_same_shape


@dataclass(frozen=True)
class EvalRecord:
    dice: float
    lesion_pct: float
    elapsed_ms: float = 0.0


def dice(x, y):
    """Dice similarity ``2|X & Y| / (|X| + |Y|)``; two empty masks score 1."""
    x = check_mask(x, "x")
    y = check_mask(y, "y")
    check_same_shape(x, y, names=("x", "y"))
    total = int(np.count_nonzero(x)) + int(np.count_nonzero(y))
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(x & y)) / total


def lesion_percentage(gt):
    """Percentage of the slice covered by the ground-truth mask."""
    gt = check_mask(gt, "gt")
    return 100.0 * int(np.count_nonzero(gt)) / gt.size
