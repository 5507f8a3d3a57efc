"""Command-line entry point: ``monofit3d {infer,fit,eval,render}``.

Data directories follow the KITTI layout: one ``<image id>.txt`` per image
for labels, calibrations and detections, and ``<image id>.ppm`` images for
rendering. Any flag may also be given in a ``--config`` file of
``key=value`` lines; command-line flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .anchors import (
    AnglePrediction,
    DimensionPrediction,
    decode_dimension,
    decode_orientation,
    load_anchors,
)
from .errors import InsufficientData, MissingImage, Mono3DError
from .evaluation import DEFAULT_REPORT_ROWS, evaluation_report, format_report_csv
from .geometry import Detection2D, project_cuboid, rect_iou
from .kitti import (
    label_from_cuboid,
    label_to_cuboid,
    read_calibration,
    read_label_dir,
    read_label_file,
    score_filter,
    write_label_file,
)
from .localization import SamplingParams, estimate_sampling_params, solve_tight_constraint
from .orientation import (
    KITTI_RAY_COEFFICIENT,
    center_offset,
    fit_ray_coefficient,
    global_from_local,
    local_from_global,
    ray_from_bbox,
    ray_from_location,
)
from .pipeline import KITTI_IMAGE_SIZE, PipelineSettings, localize, object_seed
from .scoring import GREEN, SCORERS, ScoringContext, read_ppm, render_wireframe, write_ppm

log = logging.getLogger("monofit3d")

ALPHA_SENTINEL = -10.0
ORACLE_MIN_2D_IOU = 0.5


# ---------------------------------------------------------------------------
# key=value files


def read_kv(path) -> dict:
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: expected key=value, got {line!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def write_kv(path, values: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in values.items()))


def _vec(text) -> np.ndarray:
    return np.array([float(v) for v in str(text).split(",")])


def save_sampling_params(params: SamplingParams, path) -> None:
    write_kv(path, {
        "mu": ",".join(repr(float(v)) for v in params.mu),
        "sigma": ",".join(repr(float(v)) for v in params.sigma),
    })


def load_sampling_params(path, n_samples: int, seed: int) -> SamplingParams:
    kv = read_kv(path)
    return SamplingParams(_vec(kv["mu"]), _vec(kv["sigma"]), n_samples=n_samples, seed=seed)


# ---------------------------------------------------------------------------
# infer


def _first_anchor_dims(anchor_path):
    anchors = load_anchors(anchor_path)
    zeros = DimensionPrediction(np.zeros(len(anchors)), np.zeros((len(anchors), 3)))
    return decode_dimension(zeros, anchors)


def _first_anchor_angle(anchor_path):
    anchors = load_anchors(anchor_path)
    zeros = AnglePrediction(np.zeros(len(anchors)), np.zeros(len(anchors)))
    return decode_orientation(zeros, anchors)


def _match_gt(det_label, gts):
    best, best_iou = None, ORACLE_MIN_2D_IOU
    for g in gts:
        if g.class_name != det_label.class_name:
            continue
        iou = rect_iou(det_label.bbox.box, g.bbox.box)
        if iou >= best_iou:
            best, best_iou = g, iou
    return best


def _infer_image(job):
    image_id, dets, gts, cam, opts = job
    scorer = SCORERS[opts["scorer"]]()
    results, skipped = [], []
    for idx, d in enumerate(dets):
        try:
            if all(v > 0 for v in d.dims):
                h, w, l = d.dims  # noqa: E741
                dims = (w, h, l)
            elif opts["dim_anchors"]:
                dims = tuple(_first_anchor_dims(opts["dim_anchors"]))
            else:
                raise Mono3DError("no dimension estimate and no --dim-anchors")
            if d.alpha != ALPHA_SENTINEL:
                alpha = d.alpha
            elif opts["angle_anchors"]:
                alpha = _first_anchor_angle(opts["angle_anchors"])
            else:
                raise Mono3DError("no orientation estimate and no --angle-anchors")
            ray = ray_from_bbox(d.bbox, opts["image_size"][0], opts["ray_k"])
            yaw = global_from_local(alpha, ray)
            context = ScoringContext(det=d.bbox)
            if opts["scorer"] == "oracle":
                gt = _match_gt(d, gts)
                if gt is None:
                    raise Mono3DError("oracle scorer found no matching ground truth")
                context = ScoringContext(gt=label_to_cuboid(gt), det=d.bbox)
            out = localize(dims, yaw, d.bbox, cam, scorer, context, opts["settings"],
                           seed=object_seed(opts["seed"], image_id, idx))
        except (Mono3DError, ValueError) as exc:
            skipped.append(f"{image_id} {idx} {type(exc).__name__}: {exc}")
            continue
        box = out.cuboid
        alpha_out = local_from_global(box.yaw, ray_from_location(box.location))
        results.append(label_from_cuboid(box, Detection2D(*d.bbox.box), alpha_out,
                                         class_name=d.class_name, score=out.score,
                                         truncated=-1.0, occluded=-1))
    return image_id, results, skipped


def cmd_infer(args) -> int:
    if args.seed is None:
        raise SystemExit("infer: --seed is required")
    if not (args.dets and args.calib and args.out):
        raise SystemExit("infer: --dets, --calib and --out are required")
    seed = int(args.seed)
    if args.sampling:
        params = load_sampling_params(args.sampling, args.samples, seed)
    elif args.sigma:
        mu = _vec(args.mu) if args.mu else np.zeros(3)
        params = SamplingParams(mu, _vec(args.sigma), n_samples=args.samples, seed=seed)
    elif args.fit_from_training:
        params, _ = _fit(args)
        params = params.replace(n_samples=args.samples, seed=seed)
    else:
        raise SystemExit("infer: give --sampling FILE, --sigma, or --fit-from-training")
    if args.scorer == "oracle" and not args.labels:
        raise SystemExit("infer: the oracle scorer needs --labels")

    ray_k = KITTI_RAY_COEFFICIENT
    if args.ray:
        ray_k = float(read_kv(args.ray)["k"])
    image_size = _image_size(args)
    settings = PipelineSettings(params, enum_mode=args.enum, image_size=image_size)
    opts = dict(scorer=args.scorer, dim_anchors=args.dim_anchors, angle_anchors=args.angle_anchors,
                image_size=image_size, ray_k=ray_k, settings=settings, seed=seed)

    det_dir, calib_dir = Path(args.dets), Path(args.calib)
    jobs = []
    for path in sorted(det_dir.glob("*.txt")):
        image_id = path.stem
        dets = [d for d in read_label_file(path) if not d.is_dont_care]
        dets = score_filter(dets, args.score_thresh)
        gts = []
        if args.labels and (Path(args.labels) / path.name).exists():
            gts = read_label_file(Path(args.labels) / path.name)
        cam = read_calibration(calib_dir / path.name) if dets else None
        jobs.append((image_id, dets, gts, cam, opts))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            outputs = list(pool.map(_infer_image, jobs))
    else:
        outputs = [_infer_image(job) for job in jobs]

    all_skipped = []
    for image_id, results, skipped in outputs:
        write_label_file(out_dir / f"{image_id}.txt", results, precision=None)
        all_skipped.extend(skipped)
    for line in all_skipped:
        log.warning("skipped %s", line)
    (out_dir / "skipped.log").write_text("".join(s + "\n" for s in all_skipped))
    log.info("wrote %d result files, %d skipped objects", len(outputs), len(all_skipped))
    return 0


# ---------------------------------------------------------------------------
# fit


def _image_size(args):
    return (int(args.image_width), int(args.image_height))


def _fit(args):
    if not (args.labels and args.calib):
        raise SystemExit("fit: --labels and --calib are required")
    labels = read_label_dir(args.labels)
    errors, pairs = [], []
    width = _image_size(args)[0]
    for image_id, objs in labels.items():
        objs = [o for o in objs if o.class_name == args.class_name]
        objs = [o for o in objs if o.bbox.x1 < o.bbox.x2 and o.bbox.y1 < o.bbox.y2]
        if not objs:
            continue
        cam = read_calibration(Path(args.calib) / f"{image_id}.txt")
        for o in objs:
            box = label_to_cuboid(o)
            try:
                sol = solve_tight_constraint(box.dims, box.yaw, o.bbox, cam, mode=args.enum,
                                             allow_degraded=True)
            except Mono3DError as exc:
                log.warning("fit: %s skipped (%s)", image_id, exc)
                continue
            errors.append(np.asarray(box.location) - sol.location)
            pairs.append((center_offset(o.bbox, width), o.alpha - o.rotation_y))
    if len(errors) < 2:
        raise InsufficientData(f"fit needs at least two usable objects, found {len(errors)}")
    params = estimate_sampling_params(errors)
    # alpha - rotation_y may straddle the wrap point.
    pairs = [(x, float(np.arctan2(np.sin(y), np.cos(y)))) for x, y in pairs]
    ray = fit_ray_coefficient(pairs)
    return params, ray


def cmd_fit(args) -> int:
    params, ray = _fit(args)
    if not args.out:
        raise SystemExit("fit: --out is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_sampling_params(params, out / "sampling.txt")
    write_kv(out / "ray.txt", {"k": repr(ray.k), "residual": repr(ray.residual)})
    print(f"mu={params.mu.tolist()} sigma={params.sigma.tolist()} k={ray.k:.7f}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    if not (args.labels and args.dets):
        raise SystemExit("eval: --labels and --dets are required")
    gts = read_label_dir(args.labels)
    det_dir = Path(args.dets)
    frames = {}
    for image_id, gt in gts.items():
        path = det_dir / f"{image_id}.txt"
        frames[image_id] = (read_label_file(path) if path.exists() else [], gt)
    rows = [("2d", args.iou_thresh)] + [r for r in DEFAULT_REPORT_ROWS if r[0] != "2d"]
    report = evaluation_report(frames, class_name=args.class_name, rows=rows,
                               n_points=int(args.interp))
    text = format_report_csv(report)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# render


def cmd_render(args) -> int:
    if not (args.images and args.dets and args.calib and args.out):
        raise SystemExit("render: --images, --dets, --calib and --out are required")
    images, det_dir, out = Path(args.images), Path(args.dets), Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    available = {p.stem for p in images.glob("*.ppm")}
    for path in sorted(det_dir.glob("*.txt")):
        if path.stem not in available:
            log.warning("%s", MissingImage(f"no image for results {path.name}"))
    for image_id in sorted(available):
        patch = read_ppm(images / f"{image_id}.ppm")
        res_path = det_dir / f"{image_id}.txt"
        results = read_label_file(res_path) if res_path.exists() else []
        if results:
            cam = read_calibration(Path(args.calib) / f"{image_id}.txt")
            for r in results:
                if r.is_dont_care:
                    continue
                patch = render_wireframe(patch, project_cuboid(label_to_cuboid(r), cam),
                                         GREEN, args.linewidth)
        write_ppm(patch, out / f"{image_id}.ppm")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--config", help="key=value file supplying defaults for any flag")
    p.add_argument("--labels", help="ground-truth label directory")
    p.add_argument("--calib", help="calibration directory")
    p.add_argument("--dets", help="detection/result directory")
    p.add_argument("--out", help="output path")
    p.add_argument("--class-name", default="Car")
    p.add_argument("--image-width", type=int, default=KITTI_IMAGE_SIZE[0])
    p.add_argument("--image-height", type=int, default=KITTI_IMAGE_SIZE[1])
    p.add_argument("--enum", choices=("full", "pruned"), default="full")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monofit3d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="2D detections -> 3D boxes")
    _add_common(p)
    p.add_argument("--scorer", choices=sorted(SCORERS), default="alignment")
    p.add_argument("--samples", type=int, default=1024)
    p.add_argument("--seed", type=int)
    p.add_argument("--score-thresh", type=float, default=0.1)
    p.add_argument("--sampling", help="sampling file written by 'fit'")
    p.add_argument("--mu", help="sampling mean as x,y,z")
    p.add_argument("--sigma", help="sampling std as x,y,z")
    p.add_argument("--fit-from-training", action="store_true",
                   help="estimate sampling parameters from --labels/--calib first")
    p.add_argument("--ray", help="ray coefficient file written by 'fit'")
    p.add_argument("--dim-anchors", help="anchor file used when detections lack dimensions")
    p.add_argument("--angle-anchors", help="anchor file used when detections lack alpha")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("fit", help="estimate sampling parameters and the ray coefficient")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="AP / AOS / dimension error report")
    _add_common(p)
    p.add_argument("--iou-thresh", type=float, default=0.7, help="2D overlap threshold")
    p.add_argument("--interp", choices=("11", "40"), default="11")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="draw result wireframes on PPM images")
    _add_common(p)
    p.add_argument("--images", help="directory of <image id>.ppm files")
    p.add_argument("--linewidth", type=int, default=1)
    p.set_defaults(func=cmd_render)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from --config, so explicit flags still win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    config = read_kv(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in config.items():
        if key not in known:
            raise SystemExit(f"{args.config}: unknown key {key!r}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes")
        else:
            defaults[key] = action.type(value) if action.type else value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
