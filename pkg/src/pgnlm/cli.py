"""Command-line pipeline: simulate -> calibrate -> estimate -> analyze -> classify.

Every subcommand exits 0 on success; failures print a single line
``error category=<slug>: <message>`` on stderr and exit 1 (argparse usage
errors exit 2). All outputs are deterministic functions of the inputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, calibration, containers, estimator, simulator
from .containers import (KIND_COVARIANCE, KIND_GUIDE, KIND_LABELS, KIND_SLC,
                         ContainerError, read_expected, write_container)


class CliError(Exception):
    def __init__(self, category, message):
        super().__init__(message)
        self.category = category


def _resolve_threads(value):
    if value is not None:
        return max(1, value)
    env = os.environ.get("PGNLM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise CliError("invalid_input",
                           f"PGNLM_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _load_calibration(path):
    try:
        return calibration.CalibrationResult.load(path)
    except FileNotFoundError as exc:
        raise CliError("missing_calibration",
                       f"calibration file {path} not found") from exc
    except ValueError as exc:
        raise CliError("missing_calibration", str(exc)) from exc


def _parse_region(text):
    try:
        x, y, w, h = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise CliError("invalid_input",
                       f"region must be x,y,w,h integers, got {text!r}") from exc
    if w < 1 or h < 1:
        raise CliError("invalid_input", "region width and height must be >= 1")
    return x, y, w, h


def _cmd_simulate(args):
    spec = simulator.builtin_scenes(args.scene, args.size, seed=args.seed)
    slc, guide, class_map = simulator.generate_scene(spec)
    write_container(args.out_slc, KIND_SLC, slc)
    simulator.write_scene_metadata(f"{args.out_slc}.meta", spec)
    if args.out_guide:
        write_container(args.out_guide, KIND_GUIDE, guide)
    if args.out_labels:
        write_container(args.out_labels, KIND_LABELS, class_map)
    if args.out_groups:
        if spec.group_map is None:
            raise CliError("invalid_input",
                           f"scene {args.scene!r} has no group structure")
        write_container(args.out_groups, KIND_LABELS, spec.group_map)
    print(f"simulated scene={args.scene} size={spec.height}x{spec.width} "
          f"seed={args.seed}")
    return 0


def _cmd_calibrate(args):
    slc = read_expected(args.slc, KIND_SLC)
    guide = read_expected(args.guide, KIND_GUIDE)
    cfg = estimator.PgnlmConfig(search_half=args.search, patch_half=args.patch,
                                p_pol=args.p_pol, p_opt=args.p_opt)
    result = calibration.calibrate(slc, guide, cfg)
    result.save(args.out)
    print(f"calibrated n_samples={result.n_samples} "
          f"t_pol={result.t_pol:.6g} t_opt={result.t_opt:.6g}")
    return 0


def _cmd_estimate(args):
    slc = read_expected(args.slc, KIND_SLC)
    calib = _load_calibration(args.calib)
    guide = None
    if args.guide:
        guide = read_expected(args.guide, KIND_GUIDE)
    elif not args.unguided:
        raise CliError("invalid_input",
                       "guided estimation needs --guide (or pass --unguided)")
    if args.search is not None and args.search != calib.search_half:
        raise CliError("incompatible_geometry",
                       f"--search {args.search} does not match calibration "
                       f"search_half={calib.search_half}")
    if args.patch is not None and args.patch != calib.patch_half:
        raise CliError("incompatible_geometry",
                       f"--patch {args.patch} does not match calibration "
                       f"patch_half={calib.patch_half}")
    cfg = estimator.PgnlmConfig(
        search_half=calib.search_half, patch_half=calib.patch_half,
        gamma=args.gamma, lam=args.lam,
        p_pol=calib.p_pol, p_opt=calib.p_opt,
        s_max=args.smax, guided=not args.unguided)
    threads = _resolve_threads(args.threads)
    print(f"config: search={cfg.search_side}x{cfg.search_side} "
          f"patch={cfg.patch_side}x{cfg.patch_side} gamma={cfg.gamma:g} "
          f"lambda={cfg.lam:g} p_pol={cfg.p_pol:g} p_opt={cfg.p_opt:g} "
          f"s_max={cfg.s_max} guided={'no' if args.unguided else 'yes'} "
          f"threads={threads}")
    cov, diag = estimator.estimate_image(slc, guide, cfg, calib,
                                         threads=threads)
    write_container(args.out, KIND_COVARIANCE, cov)
    if args.diagnostics:
        write_container(f"{args.diagnostics}_npred.bin", KIND_GUIDE,
                        diag.predictors_used.astype(np.float64))
        write_container(f"{args.diagnostics}_wsum.bin", KIND_GUIDE,
                        diag.weight_sum)
    print(f"estimated {cov.shape[0]}x{cov.shape[1]} covariance field -> {args.out}")
    return 0


def _cmd_boxcar(args):
    slc = read_expected(args.slc, KIND_SLC)
    cov = estimator.boxcar(slc, args.half)
    write_container(args.out, KIND_COVARIANCE, cov)
    print(f"boxcar half={args.half} -> {args.out}")
    return 0


def _cmd_features(args):
    cov = read_expected(args.cov, KIND_COVARIANCE)
    feats = analysis.extract_features(cov)
    write_container(args.out, KIND_GUIDE, feats)
    print(f"features {feats.shape[0]}x{feats.shape[1]}x{feats.shape[2]} -> {args.out}")
    return 0


def _cmd_metrics(args):
    cov = read_expected(args.cov, KIND_COVARIANCE)
    report = {}
    if args.enl_region:
        x, y, w, h = _parse_region(args.enl_region)
        if y + h > cov.shape[0] or x + w > cov.shape[1]:
            raise CliError("invalid_input",
                           f"region {args.enl_region} outside field "
                           f"{cov.shape[0]}x{cov.shape[1]}")
        region = cov[y:y + h, x:x + w, 0, 0].real
        report["enl_c11"] = analysis.enl(region)
    if args.truth or args.labels:
        if not (args.truth and args.labels):
            raise CliError("invalid_input",
                           "--truth and --labels must be given together")
        meta = simulator.read_scene_metadata(args.truth)
        labels = read_expected(args.labels, KIND_LABELS)
        report["matrix_error"] = analysis.matrix_error(
            cov, meta["sigmas"], labels)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_classify(args):
    feats = read_expected(args.features, KIND_GUIDE)
    labels = read_expected(args.labels, KIND_LABELS)
    if labels.shape != feats.shape[:2]:
        raise CliError("invalid_input",
                       f"label raster {labels.shape} does not match features "
                       f"{feats.shape[:2]}")
    groups = None
    if args.groups:
        groups = read_expected(args.groups, KIND_LABELS)
        if groups.shape != labels.shape:
            raise CliError("invalid_input", "group raster shape mismatch")
        groups = groups.ravel()
    report = analysis.crossval_classify(
        feats.reshape(-1, feats.shape[-1]), labels.ravel(),
        k=args.k, grouped=groups is not None, groups=groups,
        classifier=args.classifier, knn_k=args.knn_k, seed=args.seed)
    analysis.write_report_json(report, args.out)
    if args.out_csv:
        analysis.write_fold_csv(report, args.out_csv)
    print(f"accuracy mean={report['mean_accuracy']:.4f} "
          f"min={report['min_accuracy']:.4f} max={report['max_accuracy']:.4f} "
          f"-> {args.out}")
    return 0


def _cmd_compare(args):
    kind_a, a = containers.read_container(args.a)
    kind_b, b = containers.read_container(args.b)
    if kind_a != kind_b or a.shape != b.shape:
        raise CliError("invalid_input",
                       f"cannot compare kind={kind_a} shape={a.shape} with "
                       f"kind={kind_b} shape={b.shape}")
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    diff = np.abs(a - b)
    scale = max(float(np.abs(b).max()), 1e-300)
    worst = float(diff.max()) / scale
    print(f"max relative difference: {worst:.3e} (tolerance {args.tol:g})")
    return 0 if worst <= args.tol else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pgnlm",
        description="Guided nonlocal means PolSAR covariance estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scene")
    p.add_argument("--scene", required=True, choices=simulator.SCENE_NAMES)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-slc", required=True)
    p.add_argument("--out-guide")
    p.add_argument("--out-labels")
    p.add_argument("--out-groups")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="compute percentile thresholds")
    p.add_argument("--slc", required=True)
    p.add_argument("--guide", required=True)
    p.add_argument("--p-pol", type=float, default=50.0)
    p.add_argument("--p-opt", type=float, default=50.0)
    p.add_argument("--search", type=int, default=19)
    p.add_argument("--patch", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("estimate", help="estimate the covariance field")
    p.add_argument("--slc", required=True)
    p.add_argument("--guide")
    p.add_argument("--calib", required=True)
    p.add_argument("--gamma", type=float, default=0.85)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--smax", type=int, default=64)
    p.add_argument("--search", type=int)
    p.add_argument("--patch", type=int)
    p.add_argument("--unguided", action="store_true")
    p.add_argument("--diagnostics", metavar="PREFIX")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("boxcar", help="moving-window covariance baseline")
    p.add_argument("--slc", required=True)
    p.add_argument("--half", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_boxcar)

    p = sub.add_parser("features", help="extract per-pixel features")
    p.add_argument("--cov", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("metrics", help="quality metrics for a covariance field")
    p.add_argument("--cov", required=True)
    p.add_argument("--truth", help="scene metadata sidecar with class truth")
    p.add_argument("--labels", help="label container matching --truth")
    p.add_argument("--enl-region", metavar="X,Y,W,H")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("classify", help="cross-validated classification")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--groups")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classifier", choices=("centroid", "knn"),
                   default="centroid")
    p.add_argument("--knn-k", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--out-csv")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("compare", help="compare two containers numerically")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error category={exc.category}: {exc}", file=sys.stderr)
        return 1
    except ContainerError as exc:
        print(f"error category={exc.code}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"error category=invalid_input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
