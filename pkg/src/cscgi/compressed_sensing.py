"""Block partitioning, Gaussian measurement operator, and ISTA CS-GI baseline.

The sparse recovery baseline treats the flattened illumination patterns as
sensing rows A (one row per frame) and the bucket values as measurements y,
then minimizes 0.5*||A x - y||^2 + lam*||Psi x||_1 with Psi an orthonormal
2-D DCT basis, via monotone accelerated shrinkage-thresholding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .ghost_optics import (BucketSeries, CorrelationImage, PatternSet,
                           SceneImage, normalize_image)


@dataclass(frozen=True)
class BlockGrid:
    image_width: int
    image_height: int
    block_size: int = 20

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.image_width % self.block_size or self.image_height % self.block_size:
            raise ValueError(
                f"block size {self.block_size} does not divide "
                f"{self.image_width}x{self.image_height}")

    @property
    def blocks_per_row(self) -> int:
        return self.image_width // self.block_size

    @property
    def blocks_per_col(self) -> int:
        return self.image_height // self.block_size

    @property
    def block_count(self) -> int:
        return self.blocks_per_row * self.blocks_per_col


@dataclass
class MeasurementMatrix:
    """M x N Gaussian sensing operator, regenerable from its seed."""

    entries: np.ndarray  # shape (M, N)
    seed: int
    scale: float  # std of each entry

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.entries.ndim != 2:
            raise ValueError("measurement matrix must be 2-D")

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]


def partition(image: SceneImage, block_size: int = 20) -> list[np.ndarray]:
    """Disjoint block_size x block_size tiles in row-major block order."""
    grid = BlockGrid(image.width, image.height, block_size)
    b = block_size
    return [image.pixels[r * b:(r + 1) * b, c * b:(c + 1) * b].copy()
            for r in range(grid.blocks_per_col)
            for c in range(grid.blocks_per_row)]


def reassemble(blocks, grid: BlockGrid) -> SceneImage:
    """Inverse of partition for blocks in row-major block order."""
    if len(blocks) != grid.block_count:
        raise ValueError(f"expected {grid.block_count} blocks, got {len(blocks)}")
    b = grid.block_size
    out = np.empty((grid.image_height, grid.image_width))
    for i, blk in enumerate(blocks):
        r, c = divmod(i, grid.blocks_per_row)
        out[r * b:(r + 1) * b, c * b:(c + 1) * b] = blk
    return SceneImage(pixels=out)


def vectorize(block: np.ndarray) -> np.ndarray:
    """Row-major flattening of a square block."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise ValueError("block must be square")
    return block.reshape(-1).copy()


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    side = int(round(np.sqrt(v.size)))
    if side * side != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(side, side).copy()


def sample_measurement_matrix(m: int, n: int, seed: int = 0) -> MeasurementMatrix:
    """i.i.d. Normal(0, 1/M) entries, so columns have unit norm in expectation."""
    if m < 1 or m > n:
        raise ValueError(f"need 1 <= M <= N, got M={m}, N={n}")
    scale = 1.0 / np.sqrt(m)
    rng = np.random.default_rng(seed)
    return MeasurementMatrix(entries=scale * rng.standard_normal((m, n)),
                             seed=seed, scale=scale)


def measure(phi: MeasurementMatrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (phi.cols,):
        raise ValueError(f"expected vector of length {phi.cols}, got {x.shape}")
    return phi.entries @ x


def second_stage_compress(y: np.ndarray, phi2: MeasurementMatrix) -> np.ndarray:
    """Further compress a measurement vector with a second Gaussian operator."""
    return measure(phi2, y)


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _largest_eig_ata(flat_patterns: np.ndarray, power_iters: int = 50,
                     seed: int = 0) -> float:
    """Largest eigenvalue of A^T A by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(flat_patterns.shape[1])
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(power_iters):
        w = flat_patterns.T @ (flat_patterns @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 1.0
        v = w / lam
    return lam


def ista_solve(flat_patterns: np.ndarray, y: np.ndarray, shape: tuple[int, int],
               lam: float, iterations: int = 500):
    """Monotone accelerated shrinkage-thresholding on DCT coefficients.

    Minimizes 0.5*||A x - y||^2 + lam*||Psi x||_1 over the image x, with
    Psi the orthonormal 2-D DCT.  Each iteration takes a gradient step of
    size 1/L at the momentum point and soft-thresholds; a candidate that
    would raise the objective is rejected (momentum is still updated), so
    the recorded objective is non-increasing.  L comes from 50
    power-iteration steps with a 1% safety margin.  With lam = 0 and zero
    momentum the first iterate is a plain gradient-descent step.

    Returns (image estimate, objective history of length iterations + 1).
    """
    if lam < 0:
        raise ValueError("sparsity weight must be >= 0")
    a = np.asarray(flat_patterns, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lip = 1.01 * _largest_eig_ata(a)

    def objective(c):
        r = a @ idctn(c, norm="ortho").ravel() - y
        return 0.5 * float(r @ r) + lam * float(np.abs(c).sum())

    c = np.zeros(shape)
    z = c.copy()
    t = 1.0
    f_c = objective(c)
    history = [f_c]
    for _ in range(iterations):
        x = idctn(z, norm="ortho")
        grad = dctn((a.T @ (a @ x.ravel() - y)).reshape(shape), norm="ortho")
        cand = soft_threshold(z - grad / lip, lam / lip)
        f_cand = objective(cand)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if f_cand <= f_c:
            z = cand + ((t - 1.0) / t_next) * (cand - c)
            c, f_c = cand, f_cand
        else:
            z = c + (t / t_next) * (cand - c)
        t = t_next
        history.append(f_c)
    return idctn(c, norm="ortho"), history


def cs_gi_reconstruct(patterns: PatternSet, buckets: BucketSeries,
                      sparsity_weight: float, iterations: int = 500) -> SceneImage:
    """Whole-image CS-GI baseline; output affinely normalized to [0, 1]."""
    n = patterns.count
    if n < 1:
        raise ValueError("need at least one frame")
    if len(buckets) != n:
        raise ValueError("bucket series length does not match pattern count")
    flat = patterns.patterns.reshape(n, -1)
    x, _ = ista_solve(flat, buckets.values, (patterns.height, patterns.width),
                      sparsity_weight, iterations)
    return normalize_image(CorrelationImage(values=x))
