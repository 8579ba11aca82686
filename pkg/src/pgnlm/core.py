"""Core data conventions, complex 3x3 helpers, and dissimilarity kernels.

Array conventions used throughout the package:

* scattering image: complex128 of shape (H, W, 3), channels ordered
  [HH, HV, VV] (reciprocity already applied, HV is the single cross-pol
  channel)
* guide image: float64 of shape (H, W, B) with B >= 1 reflectance bands
* covariance field: complex128 of shape (H, W, 3, 3), Hermitian positive
  semidefinite per pixel

All functions here are pure; inputs are treated as immutable and may be
shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BORDER = "reflect"

# np.pad modes accepted for border handling; "reflect" mirrors without
# repeating the edge pixel.
PAD_MODES = ("reflect", "symmetric", "edge", "wrap")

# Row-major ordering of the 9 real numbers that determine a 3x3 Hermitian
# matrix, shared by the covariance container format and feature extraction.
REAL9_LAYOUT = (
    "c11", "c22", "c33",
    "re_c12", "im_c12", "re_c13", "im_c13", "re_c23", "im_c23",
)


def as_scattering_image(data) -> np.ndarray:
    """Validate and return an SLC scattering image as complex128 (H, W, 3)."""
    arr = np.asarray(data)
    if arr.ndim != 3 or arr.shape[-1] != 3:
        raise ValueError(
            f"scattering image must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("scattering image must contain at least one pixel")
    arr = arr.astype(np.complex128, copy=False)
    if not np.isfinite(arr).all():
        raise ValueError("scattering image contains non-finite values")
    return arr


def as_guide_image(data, *, match: np.ndarray | None = None) -> np.ndarray:
    """Validate and return a guide image as float64 (H, W, B).

    A 2-D array is promoted to a single band. When ``match`` is given the
    spatial dimensions must equal those of the matched raster.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[-1] < 1:
        raise ValueError(
            f"guide image must have shape (H, W, B), got {np.shape(data)}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("guide image must contain at least one pixel")
    if not np.isfinite(arr).all():
        raise ValueError("guide image contains non-finite values")
    if match is not None and arr.shape[:2] != match.shape[:2]:
        raise ValueError(
            f"guide dimensions {arr.shape[:2]} do not match "
            f"paired image {match.shape[:2]}")
    return arr


def as_covariance_field(data) -> np.ndarray:
    """Validate and return a covariance field as complex128 (H, W, 3, 3)."""
    arr = np.asarray(data, dtype=np.complex128)
    if arr.ndim != 4 or arr.shape[-2:] != (3, 3):
        raise ValueError(
            f"covariance field must have shape (H, W, 3, 3), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("covariance field contains non-finite values")
    return arr


@dataclass(frozen=True)
class Patch:
    """Square comparison patch of side ``2 * half + 1`` (odd by construction).

    The patch is described by the set of spatial offsets relative to its
    centre pixel; the centre offset (0, 0) is always a member.
    """

    half: int

    def __post_init__(self):
        if self.half < 0:
            raise ValueError("patch half-width must be >= 0")

    @property
    def side(self) -> int:
        return 2 * self.half + 1

    @property
    def npix(self) -> int:
        return self.side * self.side

    @property
    def offsets(self) -> np.ndarray:
        return patch_offsets(self.half)


def patch_offsets(half: int) -> np.ndarray:
    """Spatial offsets of a (2*half+1)^2 window in raster-scan order, (P, 2)."""
    r = np.arange(-half, half + 1)
    rr, cc = np.meshgrid(r, r, indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1)


def _patch_half(patch) -> int:
    if isinstance(patch, Patch):
        return patch.half
    half = int(patch)
    if half < 0:
        raise ValueError("patch half-width must be >= 0")
    return half


def pad_image(arr: np.ndarray, pad: int, border: str = DEFAULT_BORDER) -> np.ndarray:
    """Pad the two leading (spatial) axes of a raster by ``pad`` pixels."""
    if border not in PAD_MODES:
        raise ValueError(f"unknown border mode {border!r}, expected one of {PAD_MODES}")
    if pad == 0:
        return arr
    width = ((pad, pad), (pad, pad)) + ((0, 0),) * (arr.ndim - 2)
    return np.pad(arr, width, mode=border)


def outer_product(s) -> np.ndarray:
    """Outer product s s^H of target vectors, (..., 3) -> (..., 3, 3).

    The result is Hermitian PSD with rank <= 1 and trace equal to the
    squared Euclidean norm of the input vector.
    """
    s = np.asarray(s, dtype=np.complex128)
    if s.shape[-1] != 3:
        raise ValueError(f"target vectors must have 3 channels, got {s.shape}")
    return s[..., :, None] * np.conj(s[..., None, :])


def vector_dissim(s_t, s_s):
    """Normalised squared distance between two target vectors.

    ||s_t - s_s||^2 divided by the average of the two squared norms, which
    keeps the measure sensitive to scattering type rather than backscatter
    strength. Values lie in [0, 4]; the degenerate pair of two zero vectors
    is defined to have dissimilarity 0. Broadcasts over leading axes.
    """
    a = np.asarray(s_t, dtype=np.complex128)
    b = np.asarray(s_s, dtype=np.complex128)
    diff = a - b
    num = (diff.real ** 2 + diff.imag ** 2).sum(axis=-1)
    den = 0.5 * ((a.real ** 2 + a.imag ** 2).sum(axis=-1)
                 + (b.real ** 2 + b.imag ** 2).sum(axis=-1))
    out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    return out if out.ndim else float(out)


def _check_pixel(shape, t, name):
    r, c = int(t[0]), int(t[1])
    if not (0 <= r < shape[0] and 0 <= c < shape[1]):
        raise ValueError(f"pixel {name}={t} outside image of shape {shape[:2]}")
    return r, c


def polsar_patch_dissim(img, t, s, patch=2, border: str = DEFAULT_BORDER) -> float:
    """Mean per-pixel target-vector dissimilarity between two patches.

    The patch centred on t is compared offset by offset with the patch
    centred on s; samples falling outside the image are resolved by the
    border policy. Symmetric in (t, s) and bounded by [0, 4].
    """
    img = as_scattering_image(img)
    half = _patch_half(patch)
    rt, ct = _check_pixel(img.shape, t, "t")
    rs, cs = _check_pixel(img.shape, s, "s")
    padded = pad_image(img, half, border)
    side = 2 * half + 1
    pa = padded[rt:rt + side, ct:ct + side].reshape(-1, 3)
    pb = padded[rs:rs + side, cs:cs + side].reshape(-1, 3)
    return float(np.mean(vector_dissim(pa, pb)))


def optical_patch_dissim(guide, t, s, patch=2, border: str = DEFAULT_BORDER) -> float:
    """Band- and patch-averaged squared difference between two guide patches."""
    guide = as_guide_image(guide)
    half = _patch_half(patch)
    rt, ct = _check_pixel(guide.shape, t, "t")
    rs, cs = _check_pixel(guide.shape, s, "s")
    padded = pad_image(guide, half, border)
    side = 2 * half + 1
    pa = padded[rt:rt + side, ct:ct + side]
    pb = padded[rs:rs + side, cs:cs + side]
    return float(np.mean((pa - pb) ** 2))


def pgnlm_weight(d_pol_tilde, d_opt_tilde, gamma: float, lam: float):
    """Exponential kernel weight from percentile-normalised dissimilarities.

    w = exp(-lam * (gamma * d_pol_tilde + (1 - gamma) * d_opt_tilde)).

    A zero kernel scale gives weight 1 for every candidate; an infinite
    normalised dissimilarity gives weight 0. Broadcasts over arrays.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if lam < 0.0:
        raise ValueError(f"kernel scale must be >= 0, got {lam}")
    dp = np.asarray(d_pol_tilde, dtype=np.float64)
    do = np.asarray(d_opt_tilde, dtype=np.float64)
    if (dp < 0).any() or (do < 0).any():
        raise ValueError("normalised dissimilarities must be >= 0")
    shape = np.broadcast_shapes(dp.shape, do.shape)
    if lam == 0.0:
        out = np.ones(shape)
        return out if out.ndim else 1.0
    # Skip zero-coefficient terms so gamma in {0, 1} never multiplies an
    # infinite dissimilarity by zero.
    expo = np.zeros(shape)
    if gamma > 0.0:
        expo = expo + gamma * dp
    if gamma < 1.0:
        expo = expo + (1.0 - gamma) * do
    out = np.exp(-lam * expo)
    return out if out.ndim else float(out)


def min_eigenvalues(cov) -> np.ndarray:
    """Smallest eigenvalue of each Hermitian 3x3 matrix in (..., 3, 3)."""
    return np.linalg.eigvalsh(np.asarray(cov, dtype=np.complex128))[..., 0]


def is_hermitian_psd(cov, eps_scale: float = 1e-9) -> bool:
    """Check Hermitian symmetry and eigenvalues >= -eps_scale * trace."""
    cov = np.asarray(cov, dtype=np.complex128)
    asym = np.abs(cov - np.conj(np.swapaxes(cov, -1, -2))).max()
    scale = max(float(np.abs(cov).max()), 1.0)
    if asym > 1e-12 * scale:
        return False
    w = np.linalg.eigvalsh(cov)
    tr = np.trace(cov, axis1=-2, axis2=-1).real
    return bool(np.all(w[..., 0] >= -eps_scale * tr))


def covariance_to_real9(cov) -> np.ndarray:
    """Flatten Hermitian (..., 3, 3) matrices to 9 reals (REAL9_LAYOUT order)."""
    cov = np.asarray(cov, dtype=np.complex128)
    if cov.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) matrices, got {cov.shape}")
    out = np.empty(cov.shape[:-2] + (9,), dtype=np.float64)
    out[..., 0] = cov[..., 0, 0].real
    out[..., 1] = cov[..., 1, 1].real
    out[..., 2] = cov[..., 2, 2].real
    out[..., 3] = cov[..., 0, 1].real
    out[..., 4] = cov[..., 0, 1].imag
    out[..., 5] = cov[..., 0, 2].real
    out[..., 6] = cov[..., 0, 2].imag
    out[..., 7] = cov[..., 1, 2].real
    out[..., 8] = cov[..., 1, 2].imag
    return out


def real9_to_covariance(vals) -> np.ndarray:
    """Rebuild Hermitian (..., 3, 3) matrices from their 9-real layout."""
    vals = np.asarray(vals, dtype=np.float64)
    if vals.shape[-1] != 9:
        raise ValueError(f"expected (..., 9) values, got {vals.shape}")
    out = np.zeros(vals.shape[:-1] + (3, 3), dtype=np.complex128)
    out[..., 0, 0] = vals[..., 0]
    out[..., 1, 1] = vals[..., 1]
    out[..., 2, 2] = vals[..., 2]
    out[..., 0, 1] = vals[..., 3] + 1j * vals[..., 4]
    out[..., 0, 2] = vals[..., 5] + 1j * vals[..., 6]
    out[..., 1, 2] = vals[..., 7] + 1j * vals[..., 8]
    out[..., 1, 0] = np.conj(out[..., 0, 1])
    out[..., 2, 0] = np.conj(out[..., 0, 2])
    out[..., 2, 1] = np.conj(out[..., 1, 2])
    return out
