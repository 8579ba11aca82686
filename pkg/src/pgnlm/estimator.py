"""Nonlocal covariance estimation with guided predictor selection.

For every pixel t the estimator compares the patch centred on t with the
patch centred on every candidate s in the search window, in both the SAR
and optical domains. Candidates whose PolSAR dissimilarity exceeds the
calibrated threshold are discarded; the survivors are capped to the s_max
candidates with the lowest optical dissimilarity. The covariance estimate
is the weighted average of the outer products of the surviving target
vectors, with exponential-kernel weights on percentile-normalised
dissimilarities. The unguided variant drops the optical channel entirely:
weights use only the PolSAR dissimilarity and the cap keeps the s_max
candidates with the lowest PolSAR dissimilarity.

Out-of-image samples are resolved by mirror padding; the calibration
thresholds are computed on unpadded data (see calibration module).
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationResult
from .core import (
    DEFAULT_BORDER,
    PAD_MODES,
    as_guide_image,
    as_scattering_image,
    outer_product,
    pad_image,
    patch_offsets,
    pgnlm_weight,
    vector_dissim,
)

# Row chunking bound for the vectorized pixel loop (pixels per chunk).
# Fixed a priori so results never depend on thread count.
_CHUNK_PIXELS = 1024


@dataclass
class PgnlmConfig:
    """Tunables of the estimator.

    Defaults correspond to a 39x39 search window, 5x5 patches,
    gamma = 0.85, kernel scale 2, median percentiles for both thresholds
    and at most 64 predictors per pixel.
    """

    search_half: int = 19
    patch_half: int = 2
    gamma: float = 0.85
    lam: float = 2.0
    p_pol: float = 50.0
    p_opt: float = 50.0
    s_max: int = 64
    guided: bool = True
    border: str = DEFAULT_BORDER

    def __post_init__(self):
        if self.search_half < 0 or self.patch_half < 0:
            raise ValueError("window half-widths must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.lam < 0.0:
            raise ValueError(f"kernel scale must be >= 0, got {self.lam}")
        for name in ("p_pol", "p_opt"):
            p = getattr(self, name)
            if not 0.0 <= p <= 100.0:
                raise ValueError(f"{name} must lie in [0, 100], got {p}")
        if not 1 <= self.s_max <= self.n_candidates:
            raise ValueError(
                f"s_max must lie in [1, {self.n_candidates}], got {self.s_max}")
        if self.border not in PAD_MODES:
            raise ValueError(f"unknown border mode {self.border!r}")

    @property
    def search_side(self) -> int:
        return 2 * self.search_half + 1

    @property
    def patch_side(self) -> int:
        return 2 * self.patch_half + 1

    @property
    def n_candidates(self) -> int:
        return self.search_side ** 2


@dataclass
class EstimatorDiagnostics:
    """Per-pixel predictor count |Omega''(t)| and weight sum N(t)."""

    predictors_used: np.ndarray
    weight_sum: np.ndarray


def normalize_dissim(d, threshold):
    """Divide dissimilarities by their percentile threshold.

    A zero threshold (e.g. calibration on a constant image) maps d = 0 to 0
    and any d > 0 to +inf, which rejects the candidate downstream.
    """
    d = np.asarray(d, dtype=np.float64)
    if threshold > 0.0:
        return d / threshold
    return np.where(d == 0.0, 0.0, np.inf)


def select_predictors(d_pol, d_opt, t_pol, s_max, *, accept_all=False,
                      eligible=None):
    """Select predictor indices from aligned candidate dissimilarity lists.

    Candidates with d_pol <= t_pol survive the threshold (the centre
    candidate has d_pol = 0 and is therefore always retained); the
    survivors are capped to the s_max with the smallest d_opt. Ties are
    broken by candidate list order, i.e. raster-scan order of the window.
    Returns the selected indices ordered by increasing d_opt.

    accept_all bypasses the threshold test (used when the PolSAR percentile
    is 100, which by definition rejects nothing). ``eligible`` optionally
    masks out candidates whose normalised dissimilarity is infinite.
    """
    d_pol = np.asarray(d_pol, dtype=np.float64)
    d_opt = np.asarray(d_opt, dtype=np.float64)
    if d_pol.shape != d_opt.shape or d_pol.ndim != 1:
        raise ValueError("candidate lists must be aligned 1-D arrays")
    if accept_all:
        accept = np.ones(d_pol.shape, dtype=bool)
    elif t_pol == 0.0:
        accept = d_pol == 0.0
    else:
        accept = d_pol <= t_pol
    if eligible is not None:
        accept &= np.asarray(eligible, dtype=bool)
    key = np.where(accept, d_opt, np.inf)
    order = np.argsort(key, kind="stable")
    keep = min(int(accept.sum()), int(s_max))
    return order[:keep]


def _box_mean(arr, half):
    """Mean over all (2*half+1)^2 windows of the last two axes.

    Input (..., H, W) yields (..., H - 2*half, W - 2*half) via an integral
    image, exact for the fully valid window positions.
    """
    if half == 0:
        return arr
    side = 2 * half + 1
    c = np.cumsum(np.cumsum(arr, axis=-2), axis=-1)
    pad = [(0, 0)] * (arr.ndim - 2) + [(1, 0), (1, 0)]
    c = np.pad(c, pad)
    sums = (c[..., side:, side:] - c[..., :-side, side:]
            - c[..., side:, :-side] + c[..., :-side, :-side])
    return sums / (side * side)


def _chunk_dissim(padded, padded_normsq, padded_guide, r0, r1, width, cfg):
    """Patch dissimilarities for all window offsets over an output row chunk.

    Returns (d_pol, d_opt) of shape (n_offsets, r1 - r0, width); d_opt is
    None when no guide is supplied. Offsets are enumerated in raster-scan
    order of the candidate position.
    """
    hp = cfg.patch_half
    pad = cfg.search_half + hp
    rows = r1 - r0
    slab_h = rows + 2 * hp
    slab_w = width + 2 * hp
    sr = pad + r0 - hp
    sc = pad - hp

    a = padded[sr:sr + slab_h, sc:sc + slab_w]
    an = padded_normsq[sr:sr + slab_h, sc:sc + slab_w]
    if padded_guide is not None:
        ga = padded_guide[sr:sr + slab_h, sc:sc + slab_w]

    offsets = patch_offsets(cfg.search_half)
    dp = np.empty((len(offsets), slab_h, slab_w))
    do = np.empty_like(dp) if padded_guide is not None else None
    for k, (dr, dc) in enumerate(offsets):
        b = padded[sr + dr:sr + dr + slab_h, sc + dc:sc + dc + slab_w]
        diff = a - b
        num = (diff.real ** 2 + diff.imag ** 2).sum(-1)
        den = 0.5 * (an + padded_normsq[sr + dr:sr + dr + slab_h,
                                        sc + dc:sc + dc + slab_w])
        dp[k] = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
        if do is not None:
            gb = padded_guide[sr + dr:sr + dr + slab_h,
                              sc + dc:sc + dc + slab_w]
            do[k] = ((ga - gb) ** 2).mean(-1)

    d_pol = _box_mean(dp, hp)
    d_opt = _box_mean(do, hp) if do is not None else None
    return d_pol, d_opt


def _chunk_estimate(padded, padded_normsq, padded_guide, r0, r1, width,
                    cfg, calib, unguided, accept_all):
    """Estimate covariance matrices for output rows [r0, r1)."""
    d_pol, d_opt = _chunk_dissim(padded, padded_normsq, padded_guide,
                                 r0, r1, width, cfg)
    n_off = d_pol.shape[0]

    if accept_all:
        accept = np.ones(d_pol.shape, dtype=bool)
    elif calib.t_pol == 0.0:
        accept = d_pol == 0.0
    else:
        accept = d_pol <= calib.t_pol

    dt_pol = normalize_dissim(d_pol, calib.t_pol)
    if unguided:
        key = d_pol
        accept &= np.isfinite(dt_pol)
    else:
        dt_opt = normalize_dissim(d_opt, calib.t_opt)
        key = d_opt
        accept &= np.isfinite(dt_pol) & np.isfinite(dt_opt)

    key = np.where(accept, key, np.inf)
    order = np.argsort(key, axis=0, kind="stable")
    ranks = np.empty(order.shape, dtype=np.intp)
    np.put_along_axis(
        ranks, order, np.arange(n_off, dtype=np.intp)[:, None, None], axis=0)
    cap = np.minimum(accept.sum(axis=0), cfg.s_max)
    selected = accept & (ranks < cap[None])

    if cfg.lam == 0.0:
        weights = selected.astype(np.float64)
    else:
        if unguided:
            expo = dt_pol
        else:
            expo = np.zeros(dt_pol.shape)
            if cfg.gamma > 0.0:
                expo = expo + cfg.gamma * dt_pol
            if cfg.gamma < 1.0:
                expo = expo + (1.0 - cfg.gamma) * dt_opt
        weights = np.exp(-cfg.lam * np.where(selected, expo, np.inf))

    pad = cfg.search_half + cfg.patch_half
    rows = r1 - r0
    cov = np.zeros((rows, width, 3, 3), dtype=np.complex128)
    offsets = patch_offsets(cfg.search_half)
    for k, (dr, dc) in enumerate(offsets):
        wk = weights[k]
        if not wk.any():
            continue
        sv = padded[pad + r0 + dr:pad + r1 + dr, pad + dc:pad + width + dc]
        cov += wk[..., None, None] * (sv[..., :, None] * np.conj(sv[..., None, :]))
    weight_sum = weights.sum(axis=0)
    cov /= weight_sum[..., None, None]
    return cov, selected.sum(axis=0), weight_sum


def _check_calibration(cfg, calib):
    if calib is None:
        raise ValueError("missing calibration: run calibrate() first")
    if (calib.search_half != cfg.search_half
            or calib.patch_half != cfg.patch_half):
        raise ValueError(
            "incompatible geometry: calibration used search/patch half-widths "
            f"({calib.search_half}, {calib.patch_half}) but the config has "
            f"({cfg.search_half}, {cfg.patch_half})")


def estimate_image(img, guide, cfg: PgnlmConfig, calib: CalibrationResult,
                   unguided: bool | None = None, threads: int | None = None):
    """Estimate the covariance field of a whole image.

    Returns (cov, diagnostics) where cov is (H, W, 3, 3) complex and the
    diagnostics carry the per-pixel predictor count and weight sum. When
    ``unguided`` is None the mode follows cfg.guided. Work is split over
    fixed row chunks; ``threads`` caps the worker threads and has no effect
    on the result.
    """
    img = as_scattering_image(img)
    _check_calibration(cfg, calib)
    if unguided is None:
        unguided = not cfg.guided
    if not unguided:
        if guide is None:
            raise ValueError("guide image required for guided estimation")
        guide = as_guide_image(guide, match=img)

    height, width, _ = img.shape
    pad = cfg.search_half + cfg.patch_half
    padded = pad_image(img, pad, cfg.border)
    padded_normsq = (padded.real ** 2 + padded.imag ** 2).sum(-1)
    padded_guide = None if unguided else pad_image(guide, pad, cfg.border)
    accept_all = calib.p_pol == 100.0

    cov = np.empty((height, width, 3, 3), dtype=np.complex128)
    npred = np.empty((height, width), dtype=np.intp)
    wsum = np.empty((height, width), dtype=np.float64)

    chunk = max(1, _CHUNK_PIXELS // width)
    bounds = [(r, min(r + chunk, height)) for r in range(0, height, chunk)]

    def run(span):
        r0, r1 = span
        cov[r0:r1], npred[r0:r1], wsum[r0:r1] = _chunk_estimate(
            padded, padded_normsq, padded_guide, r0, r1, width,
            cfg, calib, unguided, accept_all)

    if threads is None or threads <= 1 or len(bounds) == 1:
        for span in bounds:
            run(span)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, bounds))

    return cov, EstimatorDiagnostics(predictors_used=npred, weight_sum=wsum)


def predictor_detail(img, guide, t, cfg: PgnlmConfig, calib: CalibrationResult,
                     unguided: bool | None = None):
    """Predictor bookkeeping for a single pixel, useful for inspection.

    Returns (indices, weights, d_pol, d_opt): the selected candidate
    indices into the raster-ordered search window, their kernel weights,
    and the full dissimilarity lists (d_opt is None in unguided mode).
    This is a direct per-pixel reference path, independent of the
    vectorized image loop.
    """
    img = as_scattering_image(img)
    _check_calibration(cfg, calib)
    if unguided is None:
        unguided = not cfg.guided
    if not unguided:
        if guide is None:
            raise ValueError("guide image required for guided estimation")
        guide = as_guide_image(guide, match=img)

    r, c = int(t[0]), int(t[1])
    if not (0 <= r < img.shape[0] and 0 <= c < img.shape[1]):
        raise ValueError(f"pixel {t} outside image of shape {img.shape[:2]}")

    hp = cfg.patch_half
    pad = cfg.search_half + hp
    padded = pad_image(img, pad, cfg.border)
    padded_guide = None if unguided else pad_image(guide, pad, cfg.border)
    side = 2 * hp + 1

    def pol_patch(rr, cc):
        return padded[rr + pad - hp:rr + pad + hp + 1,
                      cc + pad - hp:cc + pad + hp + 1].reshape(-1, 3)

    def opt_patch(rr, cc):
        return padded_guide[rr + pad - hp:rr + pad + hp + 1,
                            cc + pad - hp:cc + pad + hp + 1]

    centre_pol = pol_patch(r, c)
    centre_opt = None if unguided else opt_patch(r, c)
    offsets = patch_offsets(cfg.search_half)
    d_pol = np.empty(len(offsets))
    d_opt = None if unguided else np.empty(len(offsets))
    for k, (dr, dc) in enumerate(offsets):
        d_pol[k] = np.mean(vector_dissim(centre_pol, pol_patch(r + dr, c + dc)))
        if d_opt is not None:
            d_opt[k] = np.mean((centre_opt - opt_patch(r + dr, c + dc)) ** 2)

    accept_all = calib.p_pol == 100.0
    dt_pol = normalize_dissim(d_pol, calib.t_pol)
    if unguided:
        eligible = np.isfinite(dt_pol)
        idx = select_predictors(d_pol, d_pol, calib.t_pol, cfg.s_max,
                                accept_all=accept_all, eligible=eligible)
        weights = (np.ones(len(idx)) if cfg.lam == 0.0
                   else np.exp(-cfg.lam * dt_pol[idx]))
    else:
        dt_opt = normalize_dissim(d_opt, calib.t_opt)
        eligible = np.isfinite(dt_pol) & np.isfinite(dt_opt)
        idx = select_predictors(d_pol, d_opt, calib.t_pol, cfg.s_max,
                                accept_all=accept_all, eligible=eligible)
        weights = pgnlm_weight(dt_pol[idx], dt_opt[idx], cfg.gamma, cfg.lam)
    weights = np.atleast_1d(np.asarray(weights, dtype=np.float64))
    return idx, weights, d_pol, d_opt


def estimate_pixel(img, guide, t, cfg: PgnlmConfig, calib: CalibrationResult,
                   unguided: bool | None = None):
    """Covariance estimate for one pixel: (C, n_predictors, weight_sum)."""
    img = as_scattering_image(img)
    idx, weights, _, _ = predictor_detail(img, guide, t, cfg, calib, unguided)
    pad = cfg.search_half + cfg.patch_half
    padded = pad_image(img, pad, cfg.border)
    offsets = patch_offsets(cfg.search_half)
    r, c = int(t[0]), int(t[1])
    vecs = padded[r + pad + offsets[idx, 0], c + pad + offsets[idx, 1]]
    weight_sum = float(weights.sum())
    cov = (weights[:, None, None] * outer_product(vecs)).sum(0) / weight_sum
    return cov, int(len(idx)), weight_sum


def boxcar(img, window_half: int, border: str = DEFAULT_BORDER):
    """Plain moving-window mean of outer products (the baseline estimator)."""
    img = as_scattering_image(img)
    if window_half < 0:
        raise ValueError("window half-width must be >= 0")
    height, width, _ = img.shape
    padded = pad_image(img, window_half, border)
    cov = np.zeros((height, width, 3, 3), dtype=np.complex128)
    offsets = patch_offsets(window_half)
    for dr, dc in offsets:
        sv = padded[window_half + dr:window_half + dr + height,
                    window_half + dc:window_half + dc + width]
        cov += sv[..., :, None] * np.conj(sv[..., None, :])
    cov /= len(offsets)
    return cov
