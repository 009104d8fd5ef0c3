"""Batch command-line front end.

Every subcommand wraps one pipeline stage and composes with the others
through files, so the segmentation network (or the baseline-predict toy
stand-in) can slot into the chain by producing probability-map PNGs.

Flag resolution precedence: explicit flag > --config JSON > built-in
default. The FDA_SEED environment variable overrides the built-in default
seed only. Exit codes: 0 success, 2 validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .annotate import MaskGenConfig, parse_annotations, reserve_cells
from .augment import AugmentConfig, DrawRecord, augment_pair, resize_image
from .fda import FdaConfig, fda_transfer
from .imagecore import (
    BinaryMask,
    RasterImage,
    from_real,
    image_to_mask,
    load_image,
    load_label_map,
    mask_to_image,
    save_image,
)
from .losses import LossConfig, dice_loss, focal_loss, total_loss
from .metrics import MatchConfig, evaluate_dataset, report_to_json
from .postproc import PostprocConfig, detect_cells, detections_from_json, detections_to_json
from .predictor import BaselinePredictor
from .tiling import TileConfig, extract_tile, plan_tiles, read_manifest, stitch, write_manifest

_EPILOG = """\
The segmentation model itself is out of scope: train it externally on the
patches, masks and style-transferred images this tool emits. Reference
training recipe for the consuming network (documented only, never executed
here): Adam optimizer, initial learning rate 3e-4 reduced by 10x at epochs
30 and 50, 80 epochs total, mini-batch size 24, loss = Focal + Dice.
"""

DEFAULT_SEED = 0

DEFAULTS: dict = {
    "workers": 1,
    "fda": {"beta": 0.01, "resize_reference": False},
    "mask": {"iou_threshold": 0.8, "categories": "1"},
    "tile": {"patch_size": 512, "stride": 256},
    "stitch": {"mode": "max"},
    "augment": {
        "crop_size": 512,
        "rescale_lo": 0.8,
        "rescale_hi": 1.2,
        "hue_delta": 0.02,
        "sat_delta": 0.1,
        "val_delta": 0.1,
        "rescale": True,
        "rotate": True,
        "hflip": True,
        "vflip": True,
        "crop": True,
        "hsv": True,
    },
    "postproc": {"threshold": 0.5, "connectivity": 8, "min_area": 0},
    "match": {"radius": 30.0, "categories": "1"},
    "loss": {
        "gamma": 2.0,
        "alpha": 0.25,
        "smooth": 1.0,
        "focal_weight": 1.0,
        "dice_weight": 1.0,
        "prob_clip": 1e-7,
    },
}


class _Resolver:
    """flag > config-file value > built-in default."""

    def __init__(self, args: argparse.Namespace, section: str):
        self.args = args
        self.section = section
        self.config = {}
        config_path = getattr(args, "config", None)
        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise FileNotFoundError(f"config file not found: {path}")
            try:
                self.config = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed JSON in {path}: {exc}") from exc
            if not isinstance(self.config, dict):
                raise ValueError(f"config file {path} must hold a JSON object")

    def get(self, key: str, section: str | None = None):
        if hasattr(self.args, key):
            return getattr(self.args, key)
        section = self.section if section is None else section
        sect_cfg = self.config.get(section, {}) if section else self.config
        if isinstance(sect_cfg, dict) and key in sect_cfg:
            return sect_cfg[key]
        defaults = DEFAULTS.get(section, DEFAULTS) if section else DEFAULTS
        return defaults[key]

    def seed(self) -> int:
        if hasattr(self.args, "seed"):
            return int(self.args.seed)
        if "seed" in self.config:
            return int(self.config["seed"])
        return int(os.environ.get("FDA_SEED", DEFAULT_SEED))

    def workers(self) -> int:
        if hasattr(self.args, "workers"):
            return max(1, int(self.args.workers))
        if "workers" in self.config:
            return max(1, int(self.config["workers"]))
        return DEFAULTS["workers"]

    def flag(self, key: str) -> bool:
        """Boolean transform toggle: --no-X flag beats config beats default."""
        if hasattr(self.args, f"no_{key}"):
            return False
        sect_cfg = self.config.get(self.section, {})
        if isinstance(sect_cfg, dict) and key in sect_cfg:
            return bool(sect_cfg[key])
        return DEFAULTS[self.section][key]


def _parse_image_id(value: str) -> int | str:
    try:
        return int(value)
    except ValueError:
        return value


def _parse_categories(value: str) -> frozenset[int]:
    try:
        return frozenset(int(v) for v in str(value).split(",") if v.strip() != "")
    except ValueError as exc:
        raise ValueError(f"categories must be comma-separated integers, got {value!r}") from exc


def _write_json(path: str | None, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_gray01(path: str) -> np.ndarray:
    """Single-channel 8-bit PNG as a float grid in [0, 1]."""
    img = load_image(path)
    if img.channels != 1:
        raise ValueError(f"{path} must be single-channel, got {img.channels} channels")
    return img.pixels[:, :, 0].astype(np.float64) / 255.0


def _run_pool(workers: int, tasks) -> None:
    if workers <= 1:
        for task in tasks:
            task()
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(task) for task in tasks]:
                future.result()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_fda(args: argparse.Namespace) -> int:
    res = _Resolver(args, "fda")
    cfg = FdaConfig(beta=float(res.get("beta")), quantize=True)
    resize_ref = hasattr(args, "resize_reference") or res.get("resize_reference")

    def transfer(src_path: Path, ref_path: Path, out_path: Path) -> None:
        source = load_image(src_path)
        reference = load_image(ref_path)
        if (reference.width, reference.height) != (source.width, source.height):
            if not resize_ref:
                raise ValueError(
                    f"source {source.width}x{source.height} and reference "
                    f"{reference.width}x{reference.height} sizes differ; "
                    "pass --resize-reference to resize the reference"
                )
            reference = resize_image(reference, source.width, source.height)
        save_image(fda_transfer(source, reference, cfg), out_path)

    if getattr(args, "batch_dir", None):
        src_dir, ref_dir = Path(args.source), Path(args.reference)
        for d in (src_dir, ref_dir):
            if not d.is_dir():
                raise NotADirectoryError(f"batch mode needs directories, {d} is not one")
        out_dir = Path(args.batch_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        sources = sorted(src_dir.glob("*.png"))
        references = sorted(ref_dir.glob("*.png"))
        if not sources or not references:
            raise ValueError(
                f"batch mode found {len(sources)} source(s) and "
                f"{len(references)} reference(s); need at least one of each"
            )
        tasks = [
            (lambda s=s, r=r: transfer(s, r, out_dir / f"{s.stem}_{r.stem}.png"))
            for s in sources
            for r in references
        ]
        _run_pool(res.workers(), tasks)
        print(f"fda: wrote {len(tasks)} image(s) to {out_dir}")
    else:
        if not getattr(args, "out", None):
            raise ValueError("--out is required outside batch mode")
        transfer(Path(args.source), Path(args.reference), Path(args.out))
    return 0


def cmd_make_mask(args: argparse.Namespace) -> int:
    res = _Resolver(args, "mask")
    cells = load_label_map(args.cells)
    annotations = parse_annotations(args.annotations)
    if hasattr(args, "image_id"):
        wanted = _parse_image_id(args.image_id)
        matches = [a for a in annotations if a.image_id == wanted]
        if not matches:
            raise ValueError(f"image_id {wanted!r} not present in {args.annotations}")
        ann = matches[0]
    elif len(annotations) == 1:
        ann = annotations[0]
    else:
        raise ValueError(
            f"{args.annotations} describes {len(annotations)} images; pass --image-id"
        )
    cfg = MaskGenConfig(
        iou_threshold=float(res.get("iou_threshold")),
        categories=_parse_categories(res.get("categories")),
    )
    kept, unmatched = reserve_cells(cells, ann, cfg)
    if unmatched:
        print(
            f"make-mask: warning: {unmatched} annotation box(es) for image "
            f"{ann.image_id} reserved no cell and vanish from the mask",
            file=sys.stderr,
        )
    mask = BinaryMask(np.isin(cells.labels, kept))
    save_image(mask_to_image(mask), args.out)
    return 0


def cmd_tile(args: argparse.Namespace) -> int:
    res = _Resolver(args, "tile")
    cfg = TileConfig(patch_size=int(res.get("patch_size")), stride=int(res.get("stride")))
    img = load_image(args.image)
    index = plan_tiles(img.width, img.height, cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = [(x, y, f"tile_y{y:06d}_x{x:06d}.png") for x, y in index.origins]
    tasks = [
        (lambda x=x, y=y, name=name: save_image(extract_tile(img, (x, y), cfg), out_dir / name))
        for x, y, name in entries
    ]
    _run_pool(res.workers(), tasks)
    manifest_path = Path(getattr(args, "manifest", None) or out_dir / "manifest.json")
    write_manifest(manifest_path, cfg, entries)
    print(f"tile: wrote {len(entries)} tile(s) and {manifest_path}")
    return 0


def cmd_stitch(args: argparse.Namespace) -> int:
    res = _Resolver(args, "stitch")
    mode = res.get("mode")
    manifest_path = Path(args.manifest)
    _cfg, entries = read_manifest(manifest_path)
    tiles = []
    for x, y, name in entries:
        grid = _load_gray01(str(manifest_path.parent / name))
        tiles.append(((x, y), grid))
    stitched = stitch(tiles, int(args.width), int(args.height), mode=mode)
    save_image(from_real(RasterImage(stitched * 255.0)), args.out)
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    res = _Resolver(args, "augment")
    cfg = AugmentConfig(
        seed=res.seed(),
        rescale=res.flag("rescale"),
        rotate=res.flag("rotate"),
        hflip=res.flag("hflip"),
        vflip=res.flag("vflip"),
        crop=res.flag("crop"),
        hsv=res.flag("hsv"),
        rescale_range=(float(res.get("rescale_lo")), float(res.get("rescale_hi"))),
        hsv_deltas=(
            float(res.get("hue_delta")),
            float(res.get("sat_delta")),
            float(res.get("val_delta")),
        ),
        crop_size=int(res.get("crop_size")),
    )
    img = load_image(args.image)
    mask = image_to_mask(load_image(args.mask))
    draw = None
    if getattr(args, "replay", None):
        draw = DrawRecord.from_json(json.loads(Path(args.replay).read_text()))
    out_img, out_mask, record = augment_pair(img, mask, cfg, draw=draw)
    save_image(out_img, args.out_image)
    save_image(mask_to_image(out_mask), args.out_mask)
    _write_json(getattr(args, "out_draw", None), record.to_json())
    return 0


def cmd_postprocess(args: argparse.Namespace) -> int:
    res = _Resolver(args, "postproc")
    cfg = PostprocConfig(
        connectivity=int(res.get("connectivity")),
        min_component_area=int(res.get("min_area")),
        threshold=float(res.get("threshold")),
    )
    image_id = (
        _parse_image_id(args.image_id) if hasattr(args, "image_id") else Path(args.prob).stem
    )
    prob = _load_gray01(args.prob)
    detections = detect_cells(prob, cfg, image_id)
    _write_json(getattr(args, "out", None), detections_to_json(detections))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    res = _Resolver(args, "match")
    cfg = MatchConfig(radius=float(res.get("radius")))
    categories = _parse_categories(res.get("categories"))

    preds = []
    for path in args.predictions:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise FileNotFoundError(f"prediction file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed JSON in {path}: {exc}") from exc
        for entry in data if isinstance(data, list) else [data]:
            preds.append(detections_from_json(entry))

    truths = {
        ann.image_id: [box.center for box in ann.boxes if box.category in categories]
        for ann in parse_annotations(args.truth)
    }
    report = evaluate_dataset(preds, truths, cfg)
    _write_json(getattr(args, "out", None), report_to_json(report))
    return 0


def cmd_loss_eval(args: argparse.Namespace) -> int:
    res = _Resolver(args, "loss")
    cfg = LossConfig(
        focal_gamma=float(res.get("gamma")),
        focal_alpha=float(res.get("alpha")),
        dice_smooth=float(res.get("smooth")),
        focal_weight=float(res.get("focal_weight")),
        dice_weight=float(res.get("dice_weight")),
        prob_clip=float(res.get("prob_clip")),
    )
    pred = _load_gray01(args.pred)
    truth = (_load_gray01(args.truth) > 0).astype(np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction {pred.shape} and truth {truth.shape} shapes differ")
    focal, _ = focal_loss(pred, truth, cfg)
    dice, _ = dice_loss(pred, truth, cfg)
    total, _ = total_loss(pred, truth, cfg)
    _write_json(getattr(args, "out", None), {"focal": focal, "dice": dice, "total": total})
    return 0


def cmd_baseline_predict(args: argparse.Namespace) -> int:
    img = load_image(args.image)
    prob = BaselinePredictor().predict(img)
    save_image(from_real(RasterImage(prob * 255.0)), args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mitodet",
        description="Deterministic mitosis-detection pipeline stages, composed through files.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        metavar="PATH",
        default=argparse.SUPPRESS,
        help="JSON config file; precedence is flag > config > default",
    )
    common.add_argument(
        "-j",
        "--workers",
        type=int,
        metavar="N",
        default=argparse.SUPPRESS,
        help="worker threads for independent images/tiles (default: 1)",
    )

    p = sub.add_parser(
        "fda",
        parents=[common],
        help="transfer a reference image's low-frequency style onto a source image",
    )
    p.add_argument("--source", required=True, help="source PNG, or directory with --batch-dir")
    p.add_argument(
        "--reference", required=True, help="reference PNG, or directory with --batch-dir"
    )
    p.add_argument(
        "--beta",
        type=float,
        default=argparse.SUPPRESS,
        help="fractional half-size of the swapped center block (default: 0.01)",
    )
    p.add_argument("--out", default=argparse.SUPPRESS, help="output PNG (single-pair mode)")
    p.add_argument(
        "--batch-dir",
        default=argparse.SUPPRESS,
        metavar="DIR",
        help="emit every source x reference pairing as DIR/<src>_<ref>.png",
    )
    p.add_argument(
        "--resize-reference",
        action="store_true",
        default=argparse.SUPPRESS,
        help="bilinearly resize the reference to the source size when they differ",
    )
    p.set_defaults(func=cmd_fda)

    p = sub.add_parser(
        "make-mask",
        parents=[common],
        help="reserve segmented cells overlapping annotation boxes into a training mask",
    )
    p.add_argument("--cells", required=True, help="instance label map PNG (8- or 16-bit)")
    p.add_argument("--annotations", required=True, help="annotation JSON")
    p.add_argument(
        "--image-id",
        default=argparse.SUPPRESS,
        help="image id inside the annotation file (optional when it has one image)",
    )
    p.add_argument(
        "--iou-threshold",
        type=float,
        default=argparse.SUPPRESS,
        help="reserve a cell when IoU with a box is strictly greater (default: 0.8)",
    )
    p.add_argument(
        "--categories",
        default=argparse.SUPPRESS,
        help="comma-separated category ids to keep (default: 1)",
    )
    p.add_argument("--out", required=True, help="output mask PNG (0/255)")
    p.set_defaults(func=cmd_make_mask)

    p = sub.add_parser(
        "tile", parents=[common], help="crop an image into overlapping fixed-size patches"
    )
    p.add_argument("--image", required=True, help="input PNG")
    p.add_argument("--out-dir", required=True, help="directory for tile PNGs")
    p.add_argument(
        "--patch-size", type=int, default=argparse.SUPPRESS, help="tile side (default: 512)"
    )
    p.add_argument(
        "--stride", type=int, default=argparse.SUPPRESS, help="tile step (default: 256)"
    )
    p.add_argument(
        "--manifest",
        default=argparse.SUPPRESS,
        help="manifest JSON path (default: OUT_DIR/manifest.json)",
    )
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser(
        "stitch", parents=[common], help="recombine per-tile grids into a full image"
    )
    p.add_argument("--manifest", required=True, help="manifest JSON from the tile command")
    p.add_argument("--width", type=int, required=True, help="full image width")
    p.add_argument("--height", type=int, required=True, help="full image height")
    p.add_argument(
        "--mode",
        choices=("max", "mean"),
        default=argparse.SUPPRESS,
        help="overlap resolution (default: max)",
    )
    p.add_argument("--out", required=True, help="output PNG")
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser(
        "augment", parents=[common], help="seeded geometric + HSV augmentation of a pair"
    )
    p.add_argument("--image", required=True, help="input image PNG")
    p.add_argument("--mask", required=True, help="aligned mask PNG (nonzero = foreground)")
    p.add_argument("--out-image", required=True, help="augmented image PNG")
    p.add_argument("--out-mask", required=True, help="augmented mask PNG")
    p.add_argument(
        "--out-draw",
        default=argparse.SUPPRESS,
        help="JSON draw record for replay (default: stdout)",
    )
    p.add_argument(
        "--replay",
        default=argparse.SUPPRESS,
        metavar="DRAW_JSON",
        help="replay a previously emitted draw record instead of drawing",
    )
    p.add_argument(
        "--seed",
        type=int,
        default=argparse.SUPPRESS,
        help="RNG seed (default: 0; FDA_SEED env overrides the default only)",
    )
    p.add_argument(
        "--crop-size", type=int, default=argparse.SUPPRESS, help="crop side (default: 512)"
    )
    p.add_argument(
        "--rescale-lo",
        type=float,
        default=argparse.SUPPRESS,
        help="lower rescale factor (default: 0.8)",
    )
    p.add_argument(
        "--rescale-hi",
        type=float,
        default=argparse.SUPPRESS,
        help="upper rescale factor (default: 1.2)",
    )
    p.add_argument(
        "--hue-delta",
        type=float,
        default=argparse.SUPPRESS,
        help="max hue shift, wrapping in [0,1) (default: 0.02)",
    )
    p.add_argument(
        "--sat-delta",
        type=float,
        default=argparse.SUPPRESS,
        help="max saturation shift (default: 0.1)",
    )
    p.add_argument(
        "--val-delta",
        type=float,
        default=argparse.SUPPRESS,
        help="max value shift (default: 0.1)",
    )
    for name in ("rescale", "rotate", "hflip", "vflip", "crop", "hsv"):
        p.add_argument(
            f"--no-{name}",
            action="store_true",
            default=argparse.SUPPRESS,
            help=f"disable the {name} transform (default: enabled)",
        )
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser(
        "postprocess",
        parents=[common],
        help="probability map -> detected cell centers (fill holes, label, centers)",
    )
    p.add_argument("--prob", required=True, help="single-channel probability PNG (value/255)")
    p.add_argument(
        "--image-id",
        default=argparse.SUPPRESS,
        help="image id stored in the output (default: probability file stem)",
    )
    p.add_argument(
        "--threshold",
        type=float,
        default=argparse.SUPPRESS,
        help="binarization threshold, foreground iff value >= t (default: 0.5)",
    )
    p.add_argument(
        "--connectivity",
        type=int,
        choices=(4, 8),
        default=argparse.SUPPRESS,
        help="component adjacency (default: 8)",
    )
    p.add_argument(
        "--min-area",
        type=int,
        default=argparse.SUPPRESS,
        help="drop components smaller than this many pixels (default: 0)",
    )
    p.add_argument("--out", default=argparse.SUPPRESS, help="detections JSON (default: stdout)")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser(
        "evaluate", parents=[common], help="match detections to truth and report P/R/F1"
    )
    p.add_argument(
        "--predictions",
        required=True,
        nargs="+",
        help="detection JSON file(s) from postprocess (single object or list)",
    )
    p.add_argument(
        "--truth", required=True, help="annotation JSON; truth points are box centers"
    )
    p.add_argument(
        "--radius",
        type=float,
        default=argparse.SUPPRESS,
        help="max center distance of a valid match, pixels (default: 30)",
    )
    p.add_argument(
        "--categories",
        default=argparse.SUPPRESS,
        help="comma-separated truth categories to score (default: 1)",
    )
    p.add_argument("--out", default=argparse.SUPPRESS, help="report JSON (default: stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "loss-eval", parents=[common], help="focal/dice/total loss of a prediction PNG pair"
    )
    p.add_argument("--pred", required=True, help="prediction PNG (8-bit/255 -> [0,1])")
    p.add_argument("--truth", required=True, help="ground-truth mask PNG (nonzero = 1)")
    p.add_argument(
        "--gamma", type=float, default=argparse.SUPPRESS, help="focal exponent (default: 2)"
    )
    p.add_argument(
        "--alpha",
        type=float,
        default=argparse.SUPPRESS,
        help="focal positive-class weight (default: 0.25)",
    )
    p.add_argument(
        "--smooth", type=float, default=argparse.SUPPRESS, help="dice smoothing (default: 1)"
    )
    p.add_argument(
        "--focal-weight",
        type=float,
        default=argparse.SUPPRESS,
        help="weight of the focal term (default: 1)",
    )
    p.add_argument(
        "--dice-weight",
        type=float,
        default=argparse.SUPPRESS,
        help="weight of the dice term (default: 1)",
    )
    p.add_argument(
        "--prob-clip",
        type=float,
        default=argparse.SUPPRESS,
        help="clip predictions to [eps, 1-eps] before logs (default: 1e-07)",
    )
    p.add_argument("--out", default=argparse.SUPPRESS, help="loss JSON (default: stdout)")
    p.set_defaults(func=cmd_loss_eval)

    p = sub.add_parser(
        "baseline-predict",
        parents=[common],
        help="toy probability map: blue-channel darkness (stands in for the network)",
    )
    p.add_argument("--image", required=True, help="3-channel input PNG")
    p.add_argument("--out", required=True, help="probability PNG output")
    p.set_defaults(func=cmd_baseline_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    stage = args.command
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, NotADirectoryError, IsADirectoryError, KeyError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"{stage}: {message}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort guard for exit code 1
        print(f"{stage}: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
