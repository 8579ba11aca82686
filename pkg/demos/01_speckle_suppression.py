#!/usr/bin/env python3
"""Speckle suppression on a homogeneous scene.

Walks through the basic workflow: simulate a single-class PolSAR scene with
a paired optical guide, calibrate the dissimilarity thresholds along the
image diagonal, estimate the covariance field, and compare the result
against the classic boxcar filter. On a homogeneous scene the equivalent
number of looks (ENL) of the filtered HH intensity is the headline number:
single-look input sits at ENL ~ 1, and the guided nonlocal estimate
reaches the equivalent of averaging tens of looks while staying at full
resolution.

Runs in roughly ten seconds; writes a comparison figure to demos/output/.
"""

import pathlib
import time

import numpy as np

import pgnlm

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# ---------------------------------------------------------------------------
# 1. A 64x64 homogeneous scene: one covariance matrix everywhere, fully
#    developed speckle, and a four-band guide that is constant up to noise.
# ---------------------------------------------------------------------------
spec = pgnlm.builtin_scenes("homogeneous", 64, seed=42)
slc, guide, class_map = pgnlm.generate_scene(spec)
truth = np.asarray(spec.sigmas)[0]
print("scene:", slc.shape, "| true covariance diagonal:",
      np.diag(truth).real)

hh_intensity = np.abs(slc[..., 0]) ** 2
print(f"single-look ENL of the HH intensity: "
      f"{pgnlm.enl(hh_intensity):.2f} (theory: 1.0)")

# ---------------------------------------------------------------------------
# 2. Calibrate: percentile thresholds from dissimilarities sampled along
#    the main diagonal. The 50th percentile of the PolSAR dissimilarity
#    becomes the predictor rejection threshold and both medians normalise
#    the dissimilarities inside the weight kernel.
# ---------------------------------------------------------------------------
cfg = pgnlm.PgnlmConfig()  # 39x39 search, 5x5 patch, gamma=0.85, lambda=2
calib = pgnlm.calibrate(slc, guide, cfg)
print(f"calibration: {calib.n_samples} samples, "
      f"t_pol={calib.t_pol:.3f}, t_opt={calib.t_opt:.2e}")

# ---------------------------------------------------------------------------
# 3. Estimate. Each pixel averages the outer products of at most 64
#    predictors chosen from the 39x39 window by patch similarity.
# ---------------------------------------------------------------------------
start = time.perf_counter()
cov, diag = pgnlm.estimate_image(slc, guide, cfg, calib)
print(f"estimated {cov.shape[0]}x{cov.shape[1]} field "
      f"in {time.perf_counter() - start:.1f}s; "
      f"mean predictors used {diag.predictors_used.mean():.1f}, "
      f"mean weight sum {diag.weight_sum.mean():.1f}")

box = pgnlm.boxcar(slc, 2)  # 5x5 boxcar baseline

print(f"filtered ENL: pgnlm {pgnlm.enl(cov[..., 0, 0].real):.1f} "
      f"vs boxcar 5x5 {pgnlm.enl(box[..., 0, 0].real):.1f}")
err_pgnlm = pgnlm.matrix_error(cov, spec.sigmas, class_map)["overall"]
err_box = pgnlm.matrix_error(box, spec.sigmas, class_map)["overall"]
print(f"mean relative matrix error: pgnlm {err_pgnlm:.3f} "
      f"vs boxcar {err_box:.3f}")

# ---------------------------------------------------------------------------
# 4. Figure: HH intensity before/after plus the per-pixel weight sum, which
#    is flat on a homogeneous scene (no structure to respect).
# ---------------------------------------------------------------------------
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

fig, axes = plt.subplots(1, 4, figsize=(14, 3.6))
for ax, img, title in zip(
        axes,
        [hh_intensity, cov[..., 0, 0].real, box[..., 0, 0].real,
         diag.weight_sum],
        ["single-look |HH|^2", "pgnlm C11", "boxcar 5x5 C11", "weight sum"]):
    im = ax.imshow(img, cmap="gray")
    ax.set_title(title)
    ax.set_axis_off()
    fig.colorbar(im, ax=ax, fraction=0.046)
fig.tight_layout()
fig.savefig(OUT / "01_speckle_suppression.png", dpi=120)
print("figure ->", OUT / "01_speckle_suppression.png")
