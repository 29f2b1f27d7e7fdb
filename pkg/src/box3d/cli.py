"""Command-line interface.

Subcommands:
  solve            lift 2D detections + regressed properties to 3D boxes
  depurate         filter implausible detections from solved results
  eval             score results against ground truth
  synth            generate synthetic frames (calib/detections/properties/gt)
  viewpoint-table  dump the 16-entry vertex-selection table
"""

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import kitti_io
from .camera import ray_angle
from .depuration import DEFAULT_DEPURATION_CONFIG, depurate
from .metrics import (
    RECALL_POINTS_11,
    RECALL_POINTS_40,
    aos_and_os,
    average_precision,
    dimension_error,
    match_frame,
    passes_difficulty,
)
from .properties import CAR_PRIOR, alpha_from_local, decode_cbf, decode_dimensions, decode_local_angle, global_from_local
from .solver import DEFAULT_SOLVER_CONFIG, SolveInput, SolveReport, initial_location, solve_cascaded
from .synthetic import SyntheticSceneSpec, generate_scene
from .viewpoints import format_viewpoint_table


def _frames_in(directory: Path):
    return sorted(p.stem for p in directory.glob("*.txt"))


def _parse_image_size(text):
    w, h = text.lower().split("x")
    return (float(w), float(h))


def _load_config(path, base):
    if path is None:
        return base
    overrides = kitti_io.parse_keyvalue(Path(path).read_text())
    return kitti_io.coerce_fields(base, overrides)


def cmd_solve(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _load_config(args.config, DEFAULT_SOLVER_CONFIG)
    image_size = _parse_image_size(args.image_size)
    for frame in _frames_in(Path(args.detections)):
        camera = kitti_io.parse_calib((Path(args.calib) / f"{frame}.txt").read_text())
        detections = kitti_io.parse_detections((Path(args.detections) / f"{frame}.txt").read_text())
        record = kitti_io.parse_properties(
            (Path(args.properties) / f"{frame}.txt").read_text(), frame
        )
        if len(record.properties) != len(detections):
            raise SystemExit(
                f"frame {frame}: {len(detections)} detections but "
                f"{len(record.properties)} property rows"
            )
        results = []
        for det, prop in zip(detections, record.properties):
            dims = decode_dimensions(prop.dim_residual, CAR_PRIOR)
            cbf = decode_cbf(prop.cbf_offset, det.box)
            theta_l = decode_local_angle(prop.multibin)
            yaw = global_from_local(theta_l, ray_angle(camera, cbf[0]))
            inp = SolveInput(det.box, dims, yaw, prop.viewpoint_class, cbf, camera, image_size)
            if args.no_refine:
                location = initial_location(cbf, det.box.v_min, dims.h, camera)
                report = SolveReport(location, False, 0, math.nan, True)
            else:
                report = solve_cascaded(inp, config)
            results.append(
                kitti_io.ObjectLabel(
                    cls=det.cls, truncated=0.0, occluded=0, alpha=alpha_from_local(theta_l),
                    box2d=det.box, dims=dims, location=report.location, yaw=yaw,
                    score=det.score,
                )
            )
        (out_dir / f"{frame}.txt").write_text(kitti_io.write_labels(results))
    print(f"solved {len(_frames_in(Path(args.detections)))} frames -> {out_dir}")


def cmd_depurate(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = _load_config(args.config, DEFAULT_DEPURATION_CONFIG)
    report_lines = []
    n_removed = 0
    for frame in _frames_in(Path(args.in_dir)):
        camera = kitti_io.parse_calib((Path(args.calib) / f"{frame}.txt").read_text())
        record = kitti_io.parse_labels((Path(args.in_dir) / f"{frame}.txt").read_text(), frame)
        scene = [(o.box2d, o.box3d()) for o in record.objects]
        verdicts = depurate(scene, camera, cfg)
        kept = [o for o, v in zip(record.objects, verdicts) if v.kept]
        (out_dir / f"{frame}.txt").write_text(kitti_io.write_labels(kept))
        for i, v in enumerate(verdicts):
            if not v.kept:
                n_removed += 1
                rules = ",".join(sorted(v.violated_rules))
                report_lines.append(
                    f"{frame} object {i} ({record.objects[i].cls}): removed, "
                    f"{'hard rule' if v.hard_violation else 'co-determination'} [{rules}]"
                )
    (out_dir / "depuration_report.txt").write_text(
        "\n".join(report_lines) + ("\n" if report_lines else "")
    )
    print(f"removed {n_removed} detections; report -> {out_dir / 'depuration_report.txt'}")


def cmd_eval(args):
    recall_points = RECALL_POINTS_11 if args.recall_points == 11 else RECALL_POINTS_40
    matches = []
    n_gt = 0
    dim_err_sum = 0.0
    dim_err_count = 0
    for frame in _frames_in(Path(args.gt)):
        gt_record = kitti_io.parse_labels((Path(args.gt) / f"{frame}.txt").read_text(), frame)
        gts = [
            o for o in gt_record.objects
            if not o.is_dontcare
            and passes_difficulty(o.box2d.height, o.occluded, o.truncated, args.difficulty)
        ]
        result_path = Path(args.results) / f"{frame}.txt"
        dets = (
            kitti_io.parse_labels(result_path.read_text(), frame).objects
            if result_path.exists()
            else []
        )
        matches.extend(
            match_frame(
                [(o.box3d(), o.score if o.score is not None else 1.0) for o in dets],
                [o.box3d() for o in gts],
                args.iou,
            )
        )
        n_gt += len(gts)
        if gts and dets:
            # closest-ground-truth matching is per frame
            dim_err_sum += dimension_error(
                [o.box3d() for o in dets], [o.box3d() for o in gts]
            ) * len(dets)
            dim_err_count += len(dets)

    ap = average_precision(matches, n_gt, recall_points)
    aos, os_score = aos_and_os(matches, n_gt, recall_points)
    e_d = dim_err_sum / dim_err_count if dim_err_count else None
    table = {
        f"AP3D@{args.iou}": ap,
        "AOS": aos,
        "OS": os_score,
        "E_d": e_d,
        "n_gt": n_gt,
        "n_det": len(matches),
    }
    width = max(len(k) for k in table)
    for key, value in table.items():
        shown = f"{value:.4f}" if isinstance(value, float) else str(value)
        print(f"{key:<{width}}  {shown}")
    if args.json:
        Path(args.json).write_text(json.dumps(table, indent=2) + "\n")


def cmd_synth(args):
    spec = _load_config(args.spec, SyntheticSceneSpec())
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out = Path(args.out)
    for sub in ("calib", "detections", "properties", "gt"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    for i in range(args.frames):
        frame = f"{i:06d}"
        gt, detections, props = generate_scene(replace(spec, seed=spec.seed + i), frame)
        (out / "calib" / f"{frame}.txt").write_text(kitti_io.write_calib(gt.camera))
        (out / "gt" / f"{frame}.txt").write_text(kitti_io.write_labels(gt.objects))
        (out / "detections" / f"{frame}.txt").write_text(kitti_io.write_detections(detections))
        (out / "properties" / f"{frame}.txt").write_text(kitti_io.write_properties(props))
    print(f"wrote {args.frames} frames under {out}")


def cmd_viewpoint_table(args):
    print(format_viewpoint_table())


def build_parser():
    parser = argparse.ArgumentParser(prog="box3d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="lift 2D detections to 3D boxes")
    p.add_argument("--calib", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--properties", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-refine", action="store_true", help="closed-form initialization only")
    p.add_argument("--image-size", default="1242x375", help="WxH in pixels")
    p.add_argument("--config", default=None, help="key-value solver config overrides")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("depurate", help="filter implausible detections")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--config", default=None, help="key-value depuration config overrides")
    p.set_defaults(func=cmd_depurate)

    p = sub.add_parser("eval", help="score results against ground truth")
    p.add_argument("--results", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--iou", type=float, default=0.7, choices=[0.5, 0.7])
    p.add_argument("--recall-points", type=int, default=11, choices=[11, 40])
    p.add_argument("--difficulty", default="all", choices=["all", "easy", "moderate", "hard"])
    p.add_argument("--json", default=None, help="also write the table as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic frames")
    p.add_argument("--spec", default=None, help="key-value SyntheticSceneSpec overrides")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--frames", type=int, default=10)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("viewpoint-table", help="dump the 16-entry selection table")
    p.set_defaults(func=cmd_viewpoint_table)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
