"""Synthetic PolSAR scenes with paired optical guides and known truth.

Target vectors are drawn from a zero-mean multivariate complex circular
Gaussian distribution with a per-class covariance matrix, which makes the
single-look channel intensities exponentially distributed (fully developed
speckle). The guide is the per-class band mean plus independent Gaussian
noise. All randomness comes from a Philox4x32-10 counter-based generator
keyed by the scene seed, so streams are reproducible across platforms and
easy to restate in other languages.

Draw order is part of the contract: first the complex white noise for the
whole SLC raster (real parts then imaginary parts), then the guide noise.
Point targets are deterministic overrides applied last.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import covariance_to_real9, real9_to_covariance

SCENE_NAMES = ("homogeneous", "edge2", "checkerboard", "point_target",
               "canopy_mosaic")

# Stand-in class covariance matrices; chosen PD with contrasts that drive
# the scene geometry, not radiometric truth for any sensor.
_SIGMA_BASE = np.array([
    [1.0, 0.0, 0.5],
    [0.0, 0.25, 0.0],
    [0.5, 0.0, 1.0],
], dtype=np.complex128)

# Low-backscatter surface class; the strong radiometric contrast against
# the base class makes boundary mixing expensive for window averages.
_SIGMA_FIELD = np.array([
    [0.35, 0.0, -0.1],
    [0.0, 0.18, 0.0],
    [-0.1, 0.0, 0.5],
], dtype=np.complex128)

# "live": larger cross-pol (volume) share, weak co-pol correlation.
_SIGMA_LIVE = np.array([
    [1.0, 0.0, 0.25],
    [0.0, 0.55, 0.0],
    [0.25, 0.0, 0.9],
], dtype=np.complex128)

# "dead": small cross-pol share, strong co-pol correlation with a phase
# offset (double-bounce-like signature).
_C13_DEAD = 0.62 * np.exp(2.4j)
_SIGMA_DEAD = np.array([
    [1.25, 0.0, _C13_DEAD],
    [0.0, 0.12, 0.0],
    [np.conj(_C13_DEAD), 0.0, 0.85],
], dtype=np.complex128)


@dataclass
class SceneSpec:
    """Full description of a synthetic scene.

    class_map assigns one covariance matrix and one guide mean vector to
    every pixel; group_map optionally carries spatial group ids (used by
    grouped cross-validation); point_targets are deterministic
    (row, col, target_vector, guide_values) overrides.
    """

    height: int
    width: int
    class_map: np.ndarray
    sigmas: np.ndarray
    guide_means: np.ndarray
    guide_noise: float
    seed: int
    group_map: np.ndarray | None = None
    point_targets: tuple = field(default_factory=tuple)

    @property
    def n_classes(self) -> int:
        return len(self.sigmas)

    @property
    def bands(self) -> int:
        return self.guide_means.shape[1]

    def validate(self):
        cm = np.asarray(self.class_map)
        if cm.shape != (self.height, self.width):
            raise ValueError(
                f"class map shape {cm.shape} does not match "
                f"({self.height}, {self.width})")
        sigmas = np.asarray(self.sigmas, dtype=np.complex128)
        if sigmas.ndim != 3 or sigmas.shape[1:] != (3, 3):
            raise ValueError(f"sigmas must have shape (K, 3, 3), got {sigmas.shape}")
        means = np.asarray(self.guide_means, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] != len(sigmas):
            raise ValueError(
                "guide_means must have shape (K, B) matching the class count")
        if cm.min() < 0 or cm.max() >= len(sigmas):
            raise ValueError(
                f"class map ids must lie in [0, {len(sigmas)}), "
                f"got range [{cm.min()}, {cm.max()}]")
        if self.guide_noise < 0:
            raise ValueError("guide noise sigma must be >= 0")
        for k, sigma in enumerate(sigmas):
            _check_positive_definite(sigma, what=f"class {k} covariance")
        for r, c, svec, gvec in self.point_targets:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ValueError(f"point target ({r}, {c}) outside scene")
            if np.shape(svec) != (3,) or not np.isfinite(svec).all():
                raise ValueError("point target vector must be 3 finite values")
            if np.shape(gvec) != (self.bands,):
                raise ValueError("point target guide values must match bands")


def _check_positive_definite(sigma, what="covariance"):
    sigma = np.asarray(sigma, dtype=np.complex128)
    if sigma.shape != (3, 3):
        raise ValueError(f"{what} must be 3x3, got {sigma.shape}")
    asym = np.abs(sigma - sigma.conj().T).max()
    if asym > 1e-12 * max(np.abs(sigma).max(), 1.0):
        raise ValueError(f"{what} is not Hermitian (asymmetry {asym:.3e})")
    w = np.linalg.eigvalsh(sigma)
    if w[0] <= 0.0:
        raise ValueError(
            f"{what} is not positive definite: smallest eigenvalue {w[0]:.6e}")
    return sigma


def _scene_rng(seed):
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def sample_target_vector(sigma, rng) -> np.ndarray:
    """One draw s = L z with z standard circular complex Gaussian.

    L is the Cholesky factor of sigma, so E{s s^H} = sigma and E{s} = 0.
    """
    sigma = _check_positive_definite(sigma)
    chol = np.linalg.cholesky(sigma)
    z = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) / np.sqrt(2.0)
    return chol @ z


def generate_scene(spec: SceneSpec):
    """Generate (scattering_image, guide_image, class_map) from a spec."""
    spec.validate()
    rng = _scene_rng(spec.seed)
    height, width = spec.height, spec.width
    class_map = np.asarray(spec.class_map, dtype=np.int64)

    zr = rng.standard_normal((height, width, 3))
    zi = rng.standard_normal((height, width, 3))
    z = (zr + 1j * zi) / np.sqrt(2.0)

    slc = np.empty((height, width, 3), dtype=np.complex128)
    sigmas = np.asarray(spec.sigmas, dtype=np.complex128)
    for k in range(len(sigmas)):
        mask = class_map == k
        if not mask.any():
            continue
        chol = np.linalg.cholesky(sigmas[k])
        slc[mask] = z[mask] @ chol.T

    means = np.asarray(spec.guide_means, dtype=np.float64)
    guide = means[class_map]
    if spec.guide_noise > 0.0:
        guide = guide + spec.guide_noise * rng.standard_normal(guide.shape)

    for r, c, svec, gvec in spec.point_targets:
        slc[r, c] = np.asarray(svec, dtype=np.complex128)
        guide[r, c] = np.asarray(gvec, dtype=np.float64)

    return slc, guide, class_map.copy()


def _as_size(size):
    if np.isscalar(size):
        return int(size), int(size)
    height, width = size
    return int(height), int(width)


def _block_map(height, width, cell):
    rows = np.arange(height)[:, None] // cell
    cols = np.arange(width)[None, :] // cell
    ncols = -(-width // cell)
    return rows * ncols + cols


def builtin_scenes(name: str, size, seed: int = 0) -> SceneSpec:
    """Parameterised scene specs used across tests and demos.

    size is an edge length or an (height, width) pair. Available names:

    * homogeneous: one class over the whole scene.
    * edge2: two classes split at the middle column.
    * checkerboard: two classes in alternating blocks of side size//8.
    * point_target: homogeneous background plus one deterministic pixel
      with 100x backscatter, also marked bright in the guide (a strong
      scatterer is visible in both modalities).
    * canopy_mosaic: live/dead mosaic on a grid of size//8 cells with the
      class of each cell drawn from the scene seed; the cell index is
      exposed as group_map for grouped cross-validation.
    """
    height, width = _as_size(size)
    if height < 1 or width < 1:
        raise ValueError("scene size must be positive")

    if name == "homogeneous":
        return SceneSpec(
            height=height, width=width,
            class_map=np.zeros((height, width), dtype=np.int64),
            sigmas=np.array([_SIGMA_BASE]),
            guide_means=np.array([[0.30, 0.35, 0.30, 0.55]]),
            guide_noise=0.02,
            seed=seed,
        )

    if name == "edge2":
        class_map = np.zeros((height, width), dtype=np.int64)
        class_map[:, width // 2:] = 1
        return SceneSpec(
            height=height, width=width,
            class_map=class_map,
            sigmas=np.array([_SIGMA_BASE, _SIGMA_FIELD]),
            guide_means=np.array([[0.45, 0.40, 0.35, 0.30],
                                  [0.20, 0.35, 0.30, 0.65]]),
            guide_noise=0.02,
            seed=seed,
        )

    if name == "checkerboard":
        cell = max(1, min(height, width) // 8)
        blocks = _block_map(height, width, cell)
        rows = blocks // (-(-width // cell))
        cols = blocks % (-(-width // cell))
        class_map = ((rows + cols) % 2).astype(np.int64)
        return SceneSpec(
            height=height, width=width,
            class_map=class_map,
            sigmas=np.array([_SIGMA_BASE, _SIGMA_FIELD]),
            guide_means=np.array([[0.45, 0.40, 0.35, 0.30],
                                  [0.20, 0.35, 0.30, 0.65]]),
            guide_noise=0.02,
            seed=seed,
        )

    if name == "point_target":
        r, c = height // 2, width // 2
        # 100x the background backscatter in every channel, deterministic.
        amp = 10.0 * np.sqrt(np.diag(_SIGMA_BASE).real)
        return SceneSpec(
            height=height, width=width,
            class_map=np.zeros((height, width), dtype=np.int64),
            sigmas=np.array([_SIGMA_BASE]),
            guide_means=np.array([[0.30, 0.35, 0.30, 0.55]]),
            guide_noise=0.02,
            seed=seed,
            point_targets=((r, c, amp.astype(np.complex128),
                            np.full(4, 1.0)),),
        )

    if name == "canopy_mosaic":
        cell = max(1, min(height, width) // 8)
        groups = _block_map(height, width, cell)
        cell_rng = _scene_rng(np.uint64(seed) ^ np.uint64(0x9E3779B97F4A7C15))
        cell_class = cell_rng.integers(0, 2, size=int(groups.max()) + 1)
        class_map = cell_class[groups].astype(np.int64)
        return SceneSpec(
            height=height, width=width,
            class_map=class_map,
            sigmas=np.array([_SIGMA_LIVE, _SIGMA_DEAD]),
            guide_means=np.array([[0.22, 0.42, 0.28, 0.62],
                                  [0.42, 0.36, 0.30, 0.22]]),
            guide_noise=0.03,
            seed=seed,
            group_map=groups,
        )

    raise ValueError(f"unknown scene {name!r}, expected one of {SCENE_NAMES}")


def write_scene_metadata(path, spec: SceneSpec):
    """Plain-text sidecar with the seed, geometry and per-class truth."""
    lines = [
        f"seed={spec.seed}",
        f"height={spec.height}",
        f"width={spec.width}",
        f"bands={spec.bands}",
        f"guide_noise={float(spec.guide_noise)!r}",
        f"n_classes={spec.n_classes}",
    ]
    for k in range(spec.n_classes):
        nine = covariance_to_real9(np.asarray(spec.sigmas)[k])
        lines.append(f"sigma.{k}=" + ",".join(repr(float(v)) for v in nine))
        mu = np.asarray(spec.guide_means, dtype=np.float64)[k]
        lines.append(f"mu.{k}=" + ",".join(repr(float(v)) for v in mu))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_scene_metadata(path) -> dict:
    """Parse a metadata sidecar; sigmas come back as a (K, 3, 3) array."""
    raw = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
    n_classes = int(raw["n_classes"])
    sigmas = np.empty((n_classes, 3, 3), dtype=np.complex128)
    means = []
    for k in range(n_classes):
        nine = np.array([float(v) for v in raw[f"sigma.{k}"].split(",")])
        sigmas[k] = real9_to_covariance(nine)
        means.append([float(v) for v in raw[f"mu.{k}"].split(",")])
    return {
        "seed": int(raw["seed"]),
        "height": int(raw["height"]),
        "width": int(raw["width"]),
        "bands": int(raw["bands"]),
        "guide_noise": float(raw["guide_noise"]),
        "sigmas": sigmas,
        "guide_means": np.array(means, dtype=np.float64),
    }
