"""Pattern illumination, bucket detection and correlation reconstruction.

The acquisition model: a scene with reflectance values in [0, 1] is probed
by a sequence of known illumination patterns; a bucket (single-pixel)
detector records one scalar per frame.  The image is recovered as the
per-pixel covariance between bucket values and pattern intensity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PATTERN_KINDS = ("binary", "gaussian-intensity")


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass
class SceneImage:
    """2-D grayscale object, reflectance in [0, 1], row-major pixels."""

    pixels: np.ndarray  # shape (height, width), float64

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ValueError("scene must be a non-empty 2-D array")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("scene pixels must be finite")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("scene pixels must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class PatternSet:
    """Ordered illumination patterns with the seed that generated them."""

    patterns: np.ndarray  # shape (n, height, width), entries >= 0
    kind: str
    seed: int

    def __post_init__(self):
        self.patterns = np.asarray(self.patterns, dtype=np.float64)
        if self.patterns.ndim != 3:
            raise ValueError("patterns must have shape (n, height, width)")
        if self.kind not in PATTERN_KINDS:
            raise ValueError(f"unknown pattern kind {self.kind!r}")

    @property
    def count(self) -> int:
        return self.patterns.shape[0]

    @property
    def height(self) -> int:
        return self.patterns.shape[1]

    @property
    def width(self) -> int:
        return self.patterns.shape[2]

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, i: int) -> np.ndarray:
        return self.patterns[i]


@dataclass
class BucketSeries:
    """Per-frame scalar detector readings, index-paired with a PatternSet."""

    values: np.ndarray  # shape (n,)
    noise_sigma: float = 0.0
    pattern_seed: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("bucket values must be a 1-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("bucket values must be finite")

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass
class CorrelationImage:
    """Raw covariance image; values may be negative before normalization."""

    values: np.ndarray  # shape (height, width)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError("correlation image must be a non-empty 2-D array")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def generate_patterns(n: int, width: int, height: int,
                      kind: str = "binary", seed: int = 0) -> PatternSet:
    """Draw n illumination patterns deterministically from the seed.

    binary: equiprobable {0, 1} per pixel.  gaussian-intensity: |N(0, 1)|
    per pixel (intensities are non-negative).
    """
    if width < 1 or height < 1:
        raise ValueError("pattern dimensions must be at least 1x1")
    if n < 0:
        raise ValueError("pattern count must be non-negative")
    if kind not in PATTERN_KINDS:
        raise ValueError(f"unknown pattern kind {kind!r}")
    rng = np.random.default_rng(seed)
    if kind == "binary":
        pats = rng.integers(0, 2, size=(n, height, width)).astype(np.float64)
    else:
        pats = np.abs(rng.standard_normal((n, height, width)))
    return PatternSet(patterns=pats, kind=kind, seed=seed)


def simulate_bucket(scene: SceneImage, pattern: np.ndarray,
                    noise_sigma: float = 0.0, rng=None) -> float:
    """One bucket reading: sum of scene*pattern plus optional Gaussian noise."""
    pattern = np.asarray(pattern, dtype=np.float64)
    if pattern.shape != scene.pixels.shape:
        raise ValueError(
            f"pattern shape {pattern.shape} != scene shape {scene.pixels.shape}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    value = float(np.sum(scene.pixels * pattern))
    if noise_sigma > 0:
        value += noise_sigma * float(_as_rng(rng).standard_normal())
    return value


def acquire(scene: SceneImage, patterns: PatternSet,
            noise_sigma: float = 0.0, rng=None) -> BucketSeries:
    """Bucket series for every frame in order.

    Equivalent to simulate_bucket frame by frame, vectorized.  Noise draws
    consume the rng in frame order, so results match the sequential loop.
    """
    if patterns.count and (patterns.height, patterns.width) != scene.pixels.shape:
        raise ValueError("pattern dimensions do not match scene")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if patterns.count == 0:
        return BucketSeries(values=np.zeros(0), noise_sigma=noise_sigma,
                            pattern_seed=patterns.seed)
    flat = patterns.patterns.reshape(patterns.count, -1)
    values = flat @ scene.pixels.ravel()
    if noise_sigma > 0 and patterns.count:
        values = values + noise_sigma * _as_rng(rng).standard_normal(patterns.count)
    return BucketSeries(values=values, noise_sigma=noise_sigma,
                        pattern_seed=patterns.seed)


def reconstruct_cgi(patterns: PatternSet, buckets: BucketSeries) -> CorrelationImage:
    """Intensity-correlation image.

    Per pixel: G = (1/n) sum_i B_i I_i  -  [(1/n) sum_i B_i] [(1/n) sum_i I_i],
    the sample covariance (1/n convention) between bucket values and pattern
    intensity across frames.
    """
    n = patterns.count
    if n < 2:
        raise ValueError("need at least 2 frames for a covariance estimate")
    if len(buckets) != n:
        raise ValueError("bucket series length does not match pattern count")
    flat = patterns.patterns.reshape(n, -1)
    b = buckets.values
    corr = (b @ flat) / n - b.mean() * flat.mean(axis=0)
    return CorrelationImage(values=corr.reshape(patterns.height, patterns.width))


def normalize_image(image: CorrelationImage) -> SceneImage:
    """Affine rescale to [0, 1]; a constant image maps to all 0.5."""
    v = image.values
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return SceneImage(pixels=np.full_like(v, 0.5))
    return SceneImage(pixels=(v - lo) / (hi - lo))
