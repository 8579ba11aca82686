"""Percentile thresholds from a reference set of patch dissimilarities.

The reference set is built by centring the search window on pixels of the
image main diagonal and computing the PolSAR and optical patch
dissimilarities between the centre patch and every displaced patch inside
the window. Only fully interior placements are used (no padding), so every
sampled value comes from real data. The thresholds are percentiles of the
two sample sets and later normalise the dissimilarities during estimation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_guide_image, as_scattering_image, patch_offsets

_SCALAR_KEYS = ("t_pol", "t_opt", "p_pol", "p_opt", "n_samples",
                "search_half", "patch_half")


@dataclass
class CalibrationResult:
    """Thresholds plus the dissimilarity samples they were computed from.

    Only the scalar fields are serialized; the sample arrays are kept for
    inspection and testing and may be None after loading from disk.
    """

    t_pol: float
    t_opt: float
    p_pol: float
    p_opt: float
    n_samples: int
    search_half: int
    patch_half: int
    d_pol_samples: np.ndarray | None = field(default=None, repr=False)
    d_opt_samples: np.ndarray | None = field(default=None, repr=False)

    def save(self, path):
        lines = []
        for key in _SCALAR_KEYS:
            value = getattr(self, key)
            lines.append(f"{key}={value!r}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        values = {}
        with open(path, "r", encoding="ascii") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, raw = line.partition("=")
                values[key.strip()] = raw.strip()
        missing = [k for k in _SCALAR_KEYS if k not in values]
        if missing:
            raise ValueError(f"calibration file {path} missing keys: {missing}")
        return cls(
            t_pol=float(values["t_pol"]),
            t_opt=float(values["t_opt"]),
            p_pol=float(values["p_pol"]),
            p_opt=float(values["p_opt"]),
            n_samples=int(values["n_samples"]),
            search_half=int(values["search_half"]),
            patch_half=int(values["patch_half"]),
        )


def diagonal_sample_positions(height, width, search_half, patch_half):
    """Diagonal pixels whose search window plus patch margin fits inside.

    Returns an (n, 2) array of (i, i) centres. The margin is
    search_half + patch_half on each side, so every patch compared during
    calibration lies entirely within the unpadded image.
    """
    if search_half < 0 or patch_half < 0:
        raise ValueError("window half-widths must be >= 0")
    margin = search_half + patch_half
    stop = min(int(height), int(width)) - margin
    if stop <= margin:
        raise ValueError(
            "image too small for calibration: need "
            f"min(height, width) > {2 * margin}, got {min(height, width)}")
    idx = np.arange(margin, stop)
    return np.stack([idx, idx], axis=1)


def random_sample_positions(height, width, search_half, patch_half, n, rng):
    """n distinct interior window centres drawn uniformly at random."""
    margin = search_half + patch_half
    rows = int(height) - 2 * margin
    cols = int(width) - 2 * margin
    if rows < 1 or cols < 1:
        raise ValueError(
            "image too small for calibration: need both dimensions "
            f"> {2 * margin}, got {(height, width)}")
    total = rows * cols
    if n > total:
        raise ValueError(f"requested {n} centres but only {total} are valid")
    flat = rng.choice(total, size=int(n), replace=False)
    r, c = np.divmod(flat, cols)
    return np.stack([r + margin, c + margin], axis=1)


def _window_dissimilarities(img, guide, centers, search_half, patch_half):
    """Dissimilarity sets for all (centre, window offset) pairs.

    Returns (d_pol, d_opt) flattened in window-offset-major order; the
    layout is fixed so repeated runs produce bit-identical arrays.
    """
    po = patch_offsets(patch_half)
    rows0 = centers[:, 0][:, None] + po[:, 0][None, :]
    cols0 = centers[:, 1][:, None] + po[:, 1][None, :]
    cpatch = img[rows0, cols0]                              # (n, P, 3)
    cnorm = (cpatch.real ** 2 + cpatch.imag ** 2).sum(-1)   # (n, P)
    gpatch = guide[rows0, cols0]                            # (n, P, B)

    offsets = patch_offsets(search_half)
    d_pol = np.empty((len(offsets), len(centers)))
    d_opt = np.empty_like(d_pol)
    for k, (dr, dc) in enumerate(offsets):
        sp = img[rows0 + dr, cols0 + dc]
        diff = cpatch - sp
        num = (diff.real ** 2 + diff.imag ** 2).sum(-1)
        den = 0.5 * (cnorm + (sp.real ** 2 + sp.imag ** 2).sum(-1))
        d_pol[k] = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0),
                            0.0).mean(-1)
        gp = guide[rows0 + dr, cols0 + dc]
        d_opt[k] = ((gp - gpatch) ** 2).mean((-2, -1))
    return d_pol.ravel(), d_opt.ravel()


def calibrate(img, guide, cfg, *, mode="diagonal", rng=None, n_positions=None):
    """Compute the percentile thresholds t_pol and t_opt for an image pair.

    cfg supplies search_half, patch_half and the percentiles p_pol / p_opt.
    mode "diagonal" (default) samples deterministically along the main
    diagonal; mode "random" draws the same number of window centres
    uniformly from the interior (seeded via ``rng``) and exists to verify
    that the two sampling schemes give equivalent distributions.
    """
    img = as_scattering_image(img)
    guide = as_guide_image(guide, match=img)
    search_half = int(cfg.search_half)
    patch_half = int(cfg.patch_half)
    p_pol = float(cfg.p_pol)
    p_opt = float(cfg.p_opt)
    if not (0.0 <= p_pol <= 100.0 and 0.0 <= p_opt <= 100.0):
        raise ValueError(f"percentiles must lie in [0, 100], got {p_pol}, {p_opt}")

    height, width, _ = img.shape
    if mode == "diagonal":
        centers = diagonal_sample_positions(height, width, search_half, patch_half)
    elif mode == "random":
        if n_positions is None:
            n_positions = len(
                diagonal_sample_positions(height, width, search_half, patch_half))
        centers = random_sample_positions(
            height, width, search_half, patch_half, n_positions,
            np.random.default_rng(rng))
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")

    d_pol, d_opt = _window_dissimilarities(img, guide, centers,
                                           search_half, patch_half)
    if not np.isfinite(d_pol).all() or not np.isfinite(d_opt).all():
        raise ValueError("non-finite dissimilarity encountered during calibration")

    return CalibrationResult(
        t_pol=float(np.percentile(d_pol, p_pol)),
        t_opt=float(np.percentile(d_opt, p_opt)),
        p_pol=p_pol,
        p_opt=p_opt,
        n_samples=int(d_pol.size),
        search_half=search_half,
        patch_half=patch_half,
        d_pol_samples=d_pol,
        d_opt_samples=d_opt,
    )
