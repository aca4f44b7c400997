"""Command-line interface: ``segment``, ``tune``, ``phantom`` and ``evaluate``.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 computation error.
Every command that writes to ``--out`` also writes ``config-echo.json``
holding all effective settings, defaults included.
"""
import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from .exceptions import ComputationError, FormatError
from .io import (
    extract_mask_slice,
    extract_slice,
    load_image,
    load_mask,
    load_volume,
    save_image,
    save_mask,
)
from .metrics import dice, lesion_percentage
from .phantom import SHAPES, PhantomSpec, generate_phantom, random_specs
from .report import (
    dice_lesion_series,
    emit_chart,
    format_summary,
    write_csv,
    write_json,
    write_text,
)
from .seeds import SeedCriteria
from .tuner import (
    DEFAULT_GRID,
    PARAM_ORDER,
    ROI_DILATION_RADIUS,
    ExperimentConfig,
    ParamPoint,
    PipelineSettings,
    Slice,
    config_to_dict,
    resolve_threads,
    roi_from_gt,
    run_experiment,
    segment,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_COMPUTE = 0, 2, 3, 4

logger = logging.getLogger("fisrg")

IMAGE_SUFFIXES = (".pgm", ".png")
NIFTI_SUFFIXES = (".nii", ".nii.gz")

DEFAULT_PHANTOM_SLICES = 20
DEFAULT_PHANTOM_NOISE = 0.03


class UsageError(Exception):
    pass


# -- argument parsing ---------------------------------------------------------


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_range(text):
    """Parse ``A..B`` (inclusive) into ``(A, B)``."""
    try:
        a, b = text.split("..")
        a, b = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    if b < a:
        raise argparse.ArgumentTypeError(f"empty slice range {text!r}")
    return a, b


def _common(p, out_required=True):
    p.add_argument("--config", metavar="PATH", help="JSON config file; flags override it")
    p.add_argument("--out", metavar="DIR", required=False,
                   help="output directory" + (" (required)" if out_required else ""))
    p.add_argument("--rng-seed", type=int, dest="rng_seed")
    p.add_argument("--threads", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _pipeline_flags(p):
    p.add_argument("--fuzzy-threshold", type=float, dest="fuzzy_threshold")
    p.add_argument("--n-seeds", type=int, dest="n_seeds")
    p.add_argument("--denoise-sigma", type=float, dest="denoise_sigma")
    p.add_argument("--dilate-size", type=int, dest="dilate_size")
    p.add_argument("--erode-size", type=int, dest="erode_size")
    p.add_argument("--se-shape", choices=("square", "disk"), dest="se_shape")
    p.add_argument("--roi-radius", type=int, dest="roi_radius",
                   help=f"ROI margin around the ground truth (default {ROI_DILATION_RADIUS})")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fisrg", description="Fuzzy seeded region growing for lesion segmentation."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one slice")
    _common(p)
    p.add_argument("--input", help="grayscale slice (PGM/PNG) or NIfTI volume")
    p.add_argument("--roi", help="ROI mask (PGM/PNG, or NIfTI with --slice)")
    p.add_argument("--gt", help="ground-truth mask; used for Dice and, without --roi, for the ROI")
    p.add_argument("--axis", type=int, choices=(0, 1, 2))
    p.add_argument("--slice", type=int, dest="slice_index", help="slice index for NIfTI input")
    _pipeline_flags(p)

    p = sub.add_parser("tune", help="grid-search parameters per slice")
    _common(p)
    p.add_argument("--input", help="NIfTI volume or directory of slices; omitted -> phantom corpus")
    p.add_argument("--gt", help="lesion mask volume or directory matching --input")
    p.add_argument("--roi", help="ROI mask volume or directory (provided-mask policy)")
    p.add_argument("--axis", type=int, choices=(0, 1, 2))
    p.add_argument("--slices", type=parse_range, metavar="A..B")
    p.add_argument("--experiment", type=int, choices=(1, 2, 3))
    p.add_argument("--phantom-slices", type=int, dest="phantom_slices")
    for name in PARAM_ORDER:
        conv = _int_list if name in ("n_seeds", "dilate_size") else _float_list
        p.add_argument(f"--grid-{name.replace('_', '-')}", type=conv, dest=f"grid_{name}",
                       metavar="v1,v2,...")
    _pipeline_flags(p)

    p = sub.add_parser("phantom", help="write a synthetic slice and its ground truth")
    _common(p)
    p.add_argument("--shape", choices=SHAPES, dest="lesion_shape")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--lesion-mean", type=float, dest="lesion_mean")
    p.add_argument("--background-mean", type=float, dest="background_mean")
    p.add_argument("--distractor-mean", type=float, dest="distractor_mean")
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    p.add_argument("--bridge-width", type=int, dest="bridge_width")
    p.add_argument("--distractor", action="store_true", default=None)
    p.add_argument("--roi-radius", type=int, dest="roi_radius")

    p = sub.add_parser("evaluate", help="Dice and lesion percentage of a prediction")
    p.add_argument("pred", help="predicted mask (PGM/PNG)")
    p.add_argument("gt", help="ground-truth mask (PGM/PNG)")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


# -- helpers --------------------------------------------------------------------


def load_config(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc})")
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return cfg


def _pick(args, cfg, name, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.get(name, default)


def prepare_out_dir(path):
    """Create ``path`` and prove it is writable before any computation."""
    if not path:
        raise UsageError("--out is required")
    os.makedirs(path, exist_ok=True)
    probe = os.path.join(path, ".fisrg-write-test")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)
    return path


def _require_file(path, what):
    if not path:
        raise UsageError(f"{what} is required")
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _is_nifti(path):
    return path.endswith(NIFTI_SUFFIXES)


def _pipeline_settings(args, cfg):
    settings = dict(cfg.get("settings", {}) or {})
    crit = SeedCriteria(**(settings.pop("criteria", {}) or {}))
    for name in ("erode_size", "se_shape"):
        v = getattr(args, name, None)
        if v is not None:
            settings[name] = v
    return PipelineSettings(criteria=crit, **settings)


def _param_point(args, cfg):
    base = asdict(ParamPoint())
    base.update(cfg.get("fixed", {}) or {})
    for name in PARAM_ORDER:
        v = getattr(args, name, None)
        if v is not None:
            base[name] = v
    return ParamPoint(**base)


# -- commands -------------------------------------------------------------------


def cmd_segment(args):
    cfg = load_config(args.config)
    out = prepare_out_dir(_pick(args, cfg, "out"))
    roi_path = _pick(args, cfg, "roi")
    gt_path = _pick(args, cfg, "gt")
    if not roi_path and not gt_path:
        raise UsageError("segment needs --roi (or --gt to derive one)")
    path = _require_file(_pick(args, cfg, "input"), "--input")
    axis = _pick(args, cfg, "axis", 2)
    index = _pick(args, cfg, "slice_index")
    rng_seed = int(_pick(args, cfg, "rng_seed", 0))
    roi_radius = int(_pick(args, cfg, "roi_radius", ROI_DILATION_RADIUS))
    if roi_path:
        _require_file(roi_path, "--roi")
    if gt_path:
        _require_file(gt_path, "--gt")
    point = _param_point(args, cfg)
    settings = _pipeline_settings(args, cfg)

    def read_mask(p):
        if _is_nifti(p):
            return extract_mask_slice(load_volume(p), axis, index)
        return load_mask(p)

    if _is_nifti(path):
        if index is None:
            raise UsageError("--slice is required for NIfTI input")
        img = extract_slice(load_volume(path), axis, index)
    else:
        img = load_image(path)
    gt = read_mask(gt_path) if gt_path else None
    roi = read_mask(roi_path) if roi_path else roi_from_gt(gt, roi_radius)

    t0 = time.perf_counter()
    pred = segment(img, roi, point, rng_seed, settings)
    elapsed_ms = (time.perf_counter() - t0) * 1e3

    mask_path = os.path.join(out, "mask.pgm")
    save_mask(pred, mask_path)
    sidecar = {
        "input": path,
        "params": asdict(point),
        "settings": asdict(settings),
        "rng_seed": rng_seed,
        "elapsed_ms": round(elapsed_ms, 3),
        "mask": mask_path,
    }
    if gt is not None:
        sidecar["dice"] = dice(pred, gt)
        sidecar["lesion_pct"] = lesion_percentage(gt)
    write_json(sidecar, os.path.join(out, "mask.json"))
    echo = {k: v for k, v in sidecar.items() if k not in ("elapsed_ms", "dice", "lesion_pct")}
    echo.update({"command": "segment", "roi": roi_path, "gt": gt_path, "axis": axis,
                 "slice_index": index, "roi_radius": roi_radius})
    write_json(echo, os.path.join(out, "config-echo.json"))
    print(f"wrote {mask_path}" + (f" dice={sidecar['dice']:.4f}" if gt is not None else ""))
    return EXIT_OK


def _list_images(directory):
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(IMAGE_SUFFIXES))
    if not names:
        raise FileNotFoundError(f"no PGM/PNG slices in {directory}")
    return names


def load_tuning_slices(input_path, gt_path, roi_path, axis, slice_range, roi_radius):
    """Assemble ``Slice`` tuples from a NIfTI pair or from slice directories.

    Without ``slice_range`` a volume contributes every slice whose ground
    truth is non-empty. ROIs come from ``roi_path`` when given, otherwise
    from the dilated ground truth.
    """
    _require_file(gt_path, "--gt")
    if roi_path:
        _require_file(roi_path, "--roi")
    slices = []
    if os.path.isdir(input_path):
        names = _list_images(input_path)
        indices = range(len(names))
        if slice_range:
            indices = [i for i in indices if slice_range[0] <= i <= slice_range[1]]
        for i in indices:
            img = load_image(os.path.join(input_path, names[i]))
            gt = load_mask(_require_file(os.path.join(gt_path, names[i]), "ground truth"))
            if roi_path:
                roi = load_mask(_require_file(os.path.join(roi_path, names[i]), "ROI"))
            else:
                roi = roi_from_gt(gt, roi_radius)
            slices.append(Slice(i, img, gt, roi))
        return slices

    vol = load_volume(input_path)
    gt_vol = load_volume(gt_path)
    roi_vol = load_volume(roi_path) if roi_path else None
    if gt_vol.dims != vol.dims:
        raise ComputationError(f"volume dims {vol.dims} != mask dims {gt_vol.dims}")
    n = vol.dims[axis]
    if slice_range:
        indices = range(slice_range[0], slice_range[1] + 1)
    else:
        lesion_any = np.moveaxis(gt_vol.data > 0, axis, 0).reshape(n, -1).any(axis=1)
        indices = [int(i) for i in np.flatnonzero(lesion_any)]
    for i in indices:
        gt = extract_mask_slice(gt_vol, axis, i)
        roi = (extract_mask_slice(roi_vol, axis, i) if roi_vol is not None
               else roi_from_gt(gt, roi_radius))
        slices.append(Slice(i, extract_slice(vol, axis, i), gt, roi))
    if not slices:
        raise ComputationError("no slices selected (ground truth empty everywhere?)")
    return slices


def phantom_slices(n, rng_seed, roi_radius, **overrides):
    overrides.setdefault("noise_sigma", DEFAULT_PHANTOM_NOISE)
    specs = random_specs(n, rng_seed=rng_seed, **overrides)
    slices = []
    for i, spec in enumerate(specs):
        img, gt = generate_phantom(spec)
        slices.append(Slice(i, img, gt, roi_from_gt(gt, roi_radius)))
    return slices, specs


def build_experiment_config(args, cfg):
    grid = dict(DEFAULT_GRID)
    grid.update({k: tuple(v) for k, v in (cfg.get("grid", {}) or {}).items()})
    for name in PARAM_ORDER:
        v = getattr(args, f"grid_{name}", None)
        if v is not None:
            if not v:
                raise UsageError(f"--grid-{name.replace('_', '-')} is empty")
            grid[name] = tuple(v)
    return ExperimentConfig(
        experiment_id=int(_pick(args, cfg, "experiment", 1)),
        fixed=_param_point(args, cfg),
        grid=grid,
        rng_seed=int(_pick(args, cfg, "rng_seed", 0)),
        settings=_pipeline_settings(args, cfg),
    )


def cmd_tune(args):
    cfg = load_config(args.config)
    out = prepare_out_dir(_pick(args, cfg, "out"))
    threads = resolve_threads(_pick(args, cfg, "threads"))
    exp = build_experiment_config(args, cfg)
    roi_radius = int(_pick(args, cfg, "roi_radius", ROI_DILATION_RADIUS))
    input_path = _pick(args, cfg, "input")
    axis = int(_pick(args, cfg, "axis", 2))
    slice_range = _pick(args, cfg, "slices")
    if isinstance(slice_range, str):
        slice_range = parse_range(slice_range)

    exp_dict = config_to_dict(exp)
    echo = {
        "command": "tune",
        "experiment": exp.experiment_id,
        "rng_seed": exp.rng_seed,
        "fixed": exp_dict["fixed"],
        "grid": exp_dict["grid"],
        "settings": exp_dict["settings"],
        "roi_radius": roi_radius,
        "axis": axis,
        "slices": f"{slice_range[0]}..{slice_range[1]}" if slice_range else None,
        "threads": threads,
    }
    if input_path:
        _require_file(input_path, "--input")
        gt_path = _pick(args, cfg, "gt")
        roi_path = _pick(args, cfg, "roi")
        slices = load_tuning_slices(input_path, gt_path, roi_path, axis, slice_range, roi_radius)
        echo.update(input=input_path, gt=gt_path, roi=roi_path,
                    roi_policy="provided-mask" if roi_path else "dilated-gt")
    else:
        n = int(_pick(args, cfg, "phantom_slices", DEFAULT_PHANTOM_SLICES))
        overrides = dict(cfg.get("phantom", {}) or {})
        slices, specs = phantom_slices(n, exp.rng_seed, roi_radius, **overrides)
        echo.update(input=None, roi_policy="dilated-gt", phantom_slices=n, phantom=overrides,
                    phantom_specs=[asdict(s) for s in specs])
    write_json(echo, os.path.join(out, "config-echo.json"))

    def progress(res):
        logger.info("slice %d: dice=%.4f %s", res.slice_index, res.dice, res.best)

    results, summary = run_experiment(slices, exp, threads=threads, progress=progress)
    csv_path = os.path.join(out, "slices.csv")
    write_csv(results, csv_path)
    text = format_summary(summary, exp.free_params)
    write_text(text, os.path.join(out, "summary.txt"))
    emit_chart(
        dice_lesion_series(results),
        ["Dice", "Lesion %"],
        os.path.join(out, "dice_lesion.svg"),
        title=f"Dice score and lesion percentage per slice, experiment {exp.experiment_id}",
    )
    sys.stdout.write(text)
    return EXIT_OK


def cmd_phantom(args):
    cfg = load_config(args.config)
    out = prepare_out_dir(_pick(args, cfg, "out"))
    spec_kwargs = dict(cfg.get("phantom", {}) or {})
    for f in ("lesion_shape", "width", "height", "radius", "lesion_mean", "background_mean",
              "distractor_mean", "noise_sigma", "bridge_width", "distractor"):
        v = getattr(args, f, None)
        if v is not None:
            spec_kwargs[f] = v
    spec_kwargs["rng_seed"] = int(_pick(args, cfg, "rng_seed", spec_kwargs.get("rng_seed", 0)))
    roi_radius = int(_pick(args, cfg, "roi_radius", ROI_DILATION_RADIUS))
    try:
        spec = PhantomSpec(**spec_kwargs)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))
    img, gt = generate_phantom(spec)
    save_image(img, os.path.join(out, "image.pgm"))
    save_mask(gt, os.path.join(out, "mask.pgm"))
    save_mask(roi_from_gt(gt, roi_radius), os.path.join(out, "roi.pgm"))
    write_json({"command": "phantom", "spec": asdict(spec), "roi_radius": roi_radius},
               os.path.join(out, "config-echo.json"))
    print(f"wrote {out}/image.pgm, mask.pgm, roi.pgm")
    return EXIT_OK


def cmd_evaluate(args):
    _require_file(args.pred, "prediction")
    _require_file(args.gt, "ground truth")
    pred = load_mask(args.pred)
    gt = load_mask(args.gt)
    print(f"dice={dice(pred, gt):.6f} lesion_pct={lesion_percentage(gt):.6f}")
    return EXIT_OK


COMMANDS = {
    "segment": cmd_segment,
    "tune": cmd_tune,
    "phantom": cmd_phantom,
    "evaluate": cmd_evaluate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fisrg: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"fisrg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ComputationError, ValueError, TypeError) as exc:
        print(f"fisrg: computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
