#!/usr/bin/env python3
"""Detail preservation: edges and point targets.

Window averages buy speckle suppression by spending resolution; the whole
point of guided nonlocal estimation is to refuse that trade where it would
erase structure. Two classic situations:

* a sharp boundary between two cover types (here a vertical edge between a
  bright and a dark class) - the boxcar mixes classes within its window,
  the nonlocal estimator keeps its predictors on the right side because
  the optical guide tells it where the boundary is;
* an isolated strong scatterer - normalised SAR patch dissimilarities are
  nearly blind to pure brightness, but the target is visible in the guide,
  so every foreign predictor gets a negligible weight and the pixel keeps
  almost all of its contrast.

Runs in about fifteen seconds; writes figures to demos/output/.
"""

import pathlib

import numpy as np

import pgnlm

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)
cfg = pgnlm.PgnlmConfig()


def relative_error(field, truth):
    diff = np.sqrt((np.abs(field - truth) ** 2).sum((-2, -1)))
    return diff / np.sqrt((np.abs(truth) ** 2).sum((-2, -1)))


# ---------------------------------------------------------------------------
# 1. Two-class vertical edge
# ---------------------------------------------------------------------------
spec = pgnlm.builtin_scenes("edge2", 64, seed=7)
slc, guide, class_map = pgnlm.generate_scene(spec)
calib = pgnlm.calibrate(slc, guide, cfg)
cov, _ = pgnlm.estimate_image(slc, guide, cfg, calib)
box = pgnlm.boxcar(slc, 2)

truth = np.asarray(spec.sigmas)[class_map]
band = np.zeros((64, 64), dtype=bool)
band[:, 29:35] = True  # three pixels on each side of the boundary
print("edge2: mean relative matrix error")
print(f"  whole image : pgnlm {relative_error(cov, truth).mean():.3f}  "
      f"boxcar {relative_error(box, truth).mean():.3f}")
print(f"  3-px band   : pgnlm {relative_error(cov, truth)[band].mean():.3f}  "
      f"boxcar {relative_error(box, truth)[band].mean():.3f}")

# ---------------------------------------------------------------------------
# 2. Point target on a homogeneous background
# ---------------------------------------------------------------------------
pt_spec = pgnlm.builtin_scenes("point_target", 64, seed=9)
pt_slc, pt_guide, _ = pgnlm.generate_scene(pt_spec)
pt_calib = pgnlm.calibrate(pt_slc, pt_guide, cfg)
pt_cov, pt_diag = pgnlm.estimate_image(pt_slc, pt_guide, cfg, pt_calib)
pt_box = pgnlm.boxcar(pt_slc, 2)

r = c = 32
backdrop = np.ones((64, 64), dtype=bool)
backdrop[r - 3:r + 4, c - 3:c + 4] = False


def contrast(field):
    c11 = field[..., 0, 0].real
    return c11[r, c] / c11[backdrop].mean()


base = contrast(pgnlm.outer_product(pt_slc))
print(f"point target contrast: input {base:.0f}x background")
print(f"  pgnlm keeps  {100 * contrast(pt_cov) / base:.0f}% "
      f"(weight sum at target: {pt_diag.weight_sum[r, c]:.2f})")
print(f"  boxcar keeps {100 * contrast(pt_box) / base:.0f}%")

# ---------------------------------------------------------------------------
# 3. Figures
# ---------------------------------------------------------------------------
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def stretch(img, lo=2, hi=98):
    a, b = np.percentile(img, (lo, hi))
    return np.clip((img - a) / (b - a + 1e-12), 0, 1)


fig, axes = plt.subplots(2, 3, figsize=(11, 7))
rows = [
    ("edge2", slc, cov, box),
    ("point target", pt_slc, pt_cov, pt_box),
]
for axrow, (label, raw, nl, bx) in zip(axes, rows):
    views = [np.abs(raw[..., 0]) ** 2, nl[..., 0, 0].real, bx[..., 0, 0].real]
    for ax, img, title in zip(axrow, views,
                              [f"{label}: input |HH|^2", "pgnlm C11",
                               "boxcar 5x5 C11"]):
        ax.imshow(stretch(img), cmap="gray")
        ax.set_title(title)
        ax.set_axis_off()
fig.tight_layout()
fig.savefig(OUT / "02_detail_preservation.png", dpi=120)
print("figure ->", OUT / "02_detail_preservation.png")
