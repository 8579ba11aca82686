"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with the measured quantities. Run with `pytest -rP` (the
default addopts) to see the lines for passing criteria too."""

import hashlib
import time

import numpy as np
import pytest

from pgnlm import (
    PgnlmConfig,
    boxcar,
    builtin_scenes,
    calibrate,
    crossval_classify,
    diagonal_sample_positions,
    enl,
    estimate_image,
    extract_features,
    generate_scene,
    matrix_error,
    outer_product,
    pgnlm_weight,
)
from pgnlm.cli import main
from pgnlm.simulator import SceneSpec, _SIGMA_BASE, _block_map, _scene_rng

FULL_WINDOW = (2 * 19 + 1) ** 2  # 1521 candidates for the default geometry


def relative_frobenius(a, b):
    diff = np.sqrt((np.abs(a - b) ** 2).sum((-2, -1)))
    norm = np.sqrt((np.abs(b) ** 2).sum((-2, -1)))
    return diff / norm


def test_criterion_01_calibration_count_oracle():
    spec = SceneSpec(
        height=384, width=524,
        class_map=np.zeros((384, 524), dtype=np.int64),
        sigmas=np.array([_SIGMA_BASE]),
        guide_means=np.array([[0.3, 0.35, 0.3, 0.55]]),
        guide_noise=0.02, seed=101)
    slc, guide, _ = generate_scene(spec)

    start = time.perf_counter()
    centers = diagonal_sample_positions(384, 524, 19, 2)
    calib = calibrate(slc, guide, PgnlmConfig())
    elapsed = time.perf_counter() - start

    assert len(centers) == 342
    assert calib.n_samples == 520182
    assert calib.d_pol_samples.size == 342 * 1521
    assert elapsed < 60.0
    print(f"criterion 1 PASS - calibration count oracle: 342 centres, "
          f"520182 dissimilarities in {elapsed:.1f}s (< 60s)")


def test_criterion_02_boxcar_reduction():
    spec = builtin_scenes("homogeneous", 64, seed=102)
    slc, guide, _ = generate_scene(spec)
    cfg = PgnlmConfig(lam=0.0, p_pol=100.0, s_max=FULL_WINDOW)

    start = time.perf_counter()
    calib = calibrate(slc, guide, cfg)
    cov, _ = estimate_image(slc, guide, cfg, calib)
    reference = boxcar(slc, 19)
    elapsed = time.perf_counter() - start

    worst = relative_frobenius(cov, reference).max()
    assert worst <= 1e-10
    assert elapsed < 30.0
    print(f"criterion 2 PASS - boxcar reduction: max relative Frobenius "
          f"difference {worst:.2e} (<= 1e-10) in {elapsed:.1f}s (< 30s)")


def test_criterion_03_psd_suite():
    cases = [("homogeneous", 1), ("homogeneous", 2), ("edge2", 3),
             ("edge2", 4), ("checkerboard", 5), ("checkerboard", 6),
             ("point_target", 7), ("point_target", 8),
             ("canopy_mosaic", 9), ("canopy_mosaic", 10)]
    cfg = PgnlmConfig()
    checked = 0
    for name, seed in cases:
        slc, guide, _ = generate_scene(builtin_scenes(name, 64, seed=seed))
        calib = calibrate(slc, guide, cfg)
        cov, _ = estimate_image(slc, guide, cfg, calib)
        asym = np.abs(cov - np.conj(np.swapaxes(cov, -1, -2))).max()
        assert asym <= 1e-12 * np.abs(cov).max()
        eigmin = np.linalg.eigvalsh(cov)[..., 0]
        trace = np.trace(cov, axis1=-2, axis2=-1).real
        bad = int((eigmin < -1e-9 * trace).sum())
        assert bad == 0, f"{name} seed {seed}: {bad} non-PSD matrices"
        checked += cov.shape[0] * cov.shape[1]
    print(f"criterion 3 PASS - PSD suite: {checked} matrices over "
          f"{len(cases)} seeds, 100% Hermitian PSD "
          f"(min eigenvalue >= -1e-9 x trace)")


def test_criterion_04_predictor_statistics():
    spec = builtin_scenes("homogeneous", 64, seed=104)
    slc, guide, _ = generate_scene(spec)
    cfg = PgnlmConfig(p_pol=50.0, s_max=FULL_WINDOW)
    calib = calibrate(slc, guide, cfg)
    _, diag = estimate_image(slc, guide, cfg, calib)
    fraction = diag.predictors_used.mean() / FULL_WINDOW
    assert 0.45 <= fraction <= 0.55
    print(f"criterion 4 PASS - predictor statistics: mean usage fraction "
          f"{fraction:.3f} in [0.45, 0.55]")


def test_criterion_05_weight_anchor():
    for gamma in (0.0, 0.25, 0.85, 1.0):
        w = pgnlm_weight(1.0, 1.0, gamma, 2.0)
        assert abs(w - np.exp(-2.0)) <= 1e-12
    print(f"criterion 5 PASS - weight anchor: w(1, 1; gamma, lambda=2) = "
          f"e^-2 = {np.exp(-2.0):.6f} to 1e-12 for all gamma")


def test_criterion_06_speckle_suppression():
    spec = builtin_scenes("homogeneous", 64, seed=106)
    slc, guide, class_map = generate_scene(spec)
    cfg = PgnlmConfig()
    calib = calibrate(slc, guide, cfg)
    cov, _ = estimate_image(slc, guide, cfg, calib)

    enl_in = enl(np.abs(slc[..., 0]) ** 2)
    enl_out = enl(cov[..., 0, 0].real)
    assert abs(enl_in - 1.0) <= 0.1
    assert enl_out >= 20.0 * enl_in

    err_pgnlm = matrix_error(cov, spec.sigmas, class_map)
    err_boxcar = matrix_error(boxcar(slc, 2), spec.sigmas, class_map)
    for k in err_pgnlm["per_class"]:
        assert err_pgnlm["per_class"][k] <= 0.9 * err_boxcar["per_class"][k]
    print(f"criterion 6 PASS - speckle suppression: ENL {enl_in:.2f} -> "
          f"{enl_out:.1f} ({enl_out / enl_in:.0f}x >= 20x); matrix error "
          f"{err_pgnlm['overall']:.3f} vs boxcar5x5 "
          f"{err_boxcar['overall']:.3f} "
          f"({100 * (1 - err_pgnlm['overall'] / err_boxcar['overall']):.0f}% "
          f"better, >= 10%)")


def test_criterion_07_detail_preservation():
    cfg = PgnlmConfig()

    # edge band: mean matrix error within 3 pixels of the class boundary
    spec = builtin_scenes("edge2", 64, seed=107)
    slc, guide, class_map = generate_scene(spec)
    calib = calibrate(slc, guide, cfg)
    cov, _ = estimate_image(slc, guide, cfg, calib)
    truth = np.asarray(spec.sigmas)[class_map]
    band = np.zeros((64, 64), dtype=bool)
    band[:, 29:35] = True
    err_pgnlm = relative_frobenius(cov, truth)[band].mean()
    err_boxcar = relative_frobenius(boxcar(slc, 2), truth)[band].mean()
    assert err_pgnlm < err_boxcar

    # point target: contrast retention in C11
    spec = builtin_scenes("point_target", 64, seed=108)
    slc, guide, _ = generate_scene(spec)
    calib = calibrate(slc, guide, cfg)
    cov, _ = estimate_image(slc, guide, cfg, calib)
    r, c = 32, 32
    background = np.ones((64, 64), dtype=bool)
    background[r - 3:r + 4, c - 3:c + 4] = False

    def contrast(field):
        c11 = field[..., 0, 0].real
        return c11[r, c] / c11[background].mean()

    base = contrast(outer_product(slc))
    retention_pgnlm = contrast(cov) / base
    retention_boxcar = contrast(boxcar(slc, 2)) / base
    assert retention_pgnlm >= 0.5
    assert retention_boxcar <= retention_pgnlm
    print(f"criterion 7 PASS - detail preservation: edge-band error "
          f"{err_pgnlm:.3f} < boxcar {err_boxcar:.3f}; point contrast "
          f"retention {retention_pgnlm:.2f} (>= 0.5) vs boxcar "
          f"{retention_boxcar:.2f}")


def _grouped_accuracy(field, class_map, groups):
    feats = extract_features(field).reshape(-1, 5)
    report = crossval_classify(feats, class_map.ravel(), k=4, grouped=True,
                               groups=groups.ravel(), seed=5)
    return report["mean_accuracy"]


def test_criterion_08_classification_ordering():
    spec = builtin_scenes("canopy_mosaic", 64, seed=21)
    slc, guide, class_map = generate_scene(spec)
    cfg = PgnlmConfig()
    calib = calibrate(slc, guide, cfg)
    cov, _ = estimate_image(slc, guide, cfg, calib)

    acc_pgnlm = _grouped_accuracy(cov, class_map, spec.group_map)
    acc_boxcar = _grouped_accuracy(boxcar(slc, 2), class_map, spec.group_map)
    acc_single = _grouped_accuracy(boxcar(slc, 0), class_map, spec.group_map)

    assert acc_pgnlm >= acc_boxcar >= acc_single
    assert acc_pgnlm - acc_single >= 0.10
    print(f"criterion 8 PASS - classification ordering: PGNLM "
          f"{acc_pgnlm:.3f} >= boxcar {acc_boxcar:.3f} >= unfiltered "
          f"{acc_single:.3f}; margin "
          f"{100 * (acc_pgnlm - acc_single):.1f} points (>= 10)")


def test_criterion_09_guided_versus_unguided():
    # classes differ only in the cross-pol share, far below single-look
    # SNR, while the guide separates them cleanly
    size, seed = 64, 31
    cell = size // 8
    groups = _block_map(size, size, cell)
    rng = _scene_rng(np.uint64(seed) ^ np.uint64(0xABCDEF))
    cell_class = rng.integers(0, 2, size=int(groups.max()) + 1)
    sigma_a = np.array([[1.0, 0, 0.3], [0, 0.30, 0], [0.3, 0, 1.0]], complex)
    sigma_b = np.array([[1.0, 0, 0.3], [0, 0.42, 0], [0.3, 0, 1.0]], complex)
    spec = SceneSpec(
        height=size, width=size,
        class_map=cell_class[groups].astype(np.int64),
        sigmas=np.array([sigma_a, sigma_b]),
        guide_means=np.array([[0.25, 0.40, 0.30, 0.60],
                              [0.45, 0.35, 0.30, 0.25]]),
        guide_noise=0.03, seed=seed, group_map=groups)
    slc, guide, class_map = generate_scene(spec)

    cfg = PgnlmConfig()
    calib = calibrate(slc, guide, cfg)
    cov_guided, _ = estimate_image(slc, guide, cfg, calib)
    cov_unguided, _ = estimate_image(slc, None, cfg, calib, unguided=True)

    acc_single = _grouped_accuracy(boxcar(slc, 0), class_map, groups)
    acc_guided = _grouped_accuracy(cov_guided, class_map, groups)
    acc_unguided = _grouped_accuracy(cov_unguided, class_map, groups)

    assert acc_single <= 0.65  # structure invisible at single-look SNR
    assert acc_guided >= acc_unguided
    print(f"criterion 9 PASS - guided vs unguided: guided {acc_guided:.3f} "
          f">= unguided {acc_unguided:.3f} (single-look {acc_single:.3f})")


def test_criterion_10_pipeline_determinism(tmp_path):
    def run_pipeline(tag, threads):
        base = tmp_path / tag
        base.mkdir()
        slc = base / "scene.slc"
        guide = base / "scene.guide"
        labels = base / "scene.labels"
        groups = base / "scene.groups"
        calib = base / "calib.txt"
        cov = base / "scene.cov"
        feats = base / "scene.feat"
        report = base / "report.json"
        assert main(["simulate", "--scene", "canopy_mosaic", "--size", "48",
                     "--seed", "17", "--out-slc", str(slc),
                     "--out-guide", str(guide), "--out-labels", str(labels),
                     "--out-groups", str(groups)]) == 0
        assert main(["calibrate", "--slc", str(slc), "--guide", str(guide),
                     "--out", str(calib)]) == 0
        assert main(["estimate", "--slc", str(slc), "--guide", str(guide),
                     "--calib", str(calib), "--threads", str(threads),
                     "--out", str(cov)]) == 0
        assert main(["features", "--cov", str(cov), "--out", str(feats)]) == 0
        assert main(["classify", "--features", str(feats), "--labels",
                     str(labels), "--groups", str(groups), "--k", "4",
                     "--seed", "5", "--out", str(report)]) == 0
        digest = {}
        for path in (slc, guide, labels, groups, calib, cov, feats, report):
            digest[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digest

    first = run_pipeline("a", threads=1)
    second = run_pipeline("b", threads=1)
    threaded = run_pipeline("c", threads=4)
    assert first == second
    assert first == threaded
    print("criterion 10 PASS - determinism: identical output hashes for "
          "repeated runs and for 1 vs 4 worker threads "
          f"({len(first)} artifacts)")
