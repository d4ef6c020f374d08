"""Four-algorithm comparison harness: acquisition sharing, sweeps, CSV output.

All algorithms in one comparison consume identical acquisition data: one
pattern set of max(frame_counts) frames is generated per run and every
frame count uses its prefix, so quality versus frame count is evaluated on
nested data.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .compressed_sensing import BlockGrid, cs_gi_reconstruct, partition
from .ghost_optics import (BucketSeries, PatternSet, SceneImage, acquire,
                           generate_patterns, reconstruct_cgi)
from .io_formats import save_pgm
from .neural_reconstructor import (NetworkParams, TrainingSet, infer_image)
from .quality_metrics import MetricReport, psnr, ssim
from .scenes import generate_dataset, random_scene, render_scene

ALGORITHMS = ("cgi", "cs", "dl", "cscnn")
DEFAULT_LETTERS = "DESK"
CSV_HEADER = "algorithm,frames,psnr_db,ssim,wall_ms"

# fixed offsets deriving stage seeds from the master seed
_SEED_DATASET, _SEED_PATTERNS, _SEED_NOISE, _SEED_TRAIN = 1000, 2000, 3000, 4000


@dataclass
class ExperimentConfig:
    scene: str = "builtin"          # "builtin" or a P5 graymap path
    image_size: int = 200
    block_size: int = 20
    frame_counts: tuple = (100, 200, 300, 400)
    mr: float = 0.25
    train_size: int = 1000
    seed: int = 0
    noise_sigma: float = 0.0
    algorithms: tuple = ALGORITHMS
    cs_lambda: float = 0.05
    cs_iterations: int = 500
    deterministic: bool = False     # zero wall_ms so re-runs are bit-identical

    def __post_init__(self):
        if any(n <= 0 for n in self.frame_counts):
            raise ValueError("frame counts must be positive")
        if not 0.0 < self.mr <= 1.0:
            raise ValueError("measurement rate must be in (0, 1]")
        if self.train_size < 1:
            raise ValueError("training set size must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")

    @property
    def compression_width(self) -> int:
        return int(round(self.mr * self.block_size * self.block_size))

    @property
    def grid(self) -> BlockGrid:
        return BlockGrid(self.image_size, self.image_size, self.block_size)


@dataclass
class RunRecord:
    config: ExperimentConfig
    reports: list = field(default_factory=list)   # MetricReport per cell
    image_paths: dict = field(default_factory=dict)
    timings_ms: dict = field(default_factory=dict)


def load_scene(config: ExperimentConfig) -> SceneImage:
    if config.scene == "builtin":
        scale = max(2, config.image_size // 25)
        return render_scene(DEFAULT_LETTERS, size=config.image_size, scale=scale)
    from .io_formats import load_pgm
    return load_pgm(config.scene)


def shared_acquisition(scene: SceneImage, max_frames: int, seed: int,
                       noise_sigma: float = 0.0):
    """One nested pattern set and bucket series reused by all algorithms."""
    patterns = generate_patterns(max_frames, scene.width, scene.height,
                                 kind="binary", seed=seed + _SEED_PATTERNS)
    buckets = acquire(scene, patterns, noise_sigma,
                      rng=np.random.default_rng(seed + _SEED_NOISE))
    return patterns, buckets


def _prefix(patterns: PatternSet, buckets: BucketSeries, n: int):
    sub = PatternSet(patterns=patterns.patterns[:n], kind=patterns.kind,
                     seed=patterns.seed)
    subb = BucketSeries(values=buckets.values[:n],
                        noise_sigma=buckets.noise_sigma,
                        pattern_seed=buckets.pattern_seed)
    return sub, subb


def robust_normalize(corr) -> SceneImage:
    """Mean/std affine map of a correlation image onto [0, 1].

    The image mean goes to 0.5 and +-3 standard deviations span the unit
    interval (clipped).  Unlike a min-max rescale this does not depend on
    the two extreme order statistics of the noise, so the contrast of the
    result varies smoothly with the acquisition's noise level.
    """
    values = corr.values
    spread = values.std()
    if spread == 0.0:
        return SceneImage(pixels=np.full_like(values, 0.5))
    pixels = 0.5 + (values - values.mean()) / (6.0 * spread)
    return SceneImage(pixels=np.clip(pixels, 0.0, 1.0))


def cgi_estimate(patterns: PatternSet, buckets: BucketSeries) -> SceneImage:
    return robust_normalize(reconstruct_cgi(patterns, buckets))


def network_estimate(params: NetworkParams, preliminary: SceneImage,
                     grid: BlockGrid) -> SceneImage:
    """Block-wise network refinement of a preliminary estimate."""
    blocks = np.stack([b.reshape(-1)
                       for b in partition(preliminary, grid.block_size)])
    return infer_image(params, blocks, grid)


def run_pipeline_cscnn(scene: SceneImage, n_frames: int, params: NetworkParams,
                       seed: int = 0, noise_sigma: float = 0.0,
                       algorithm: str = "cscnn"):
    """Acquire -> correlate -> normalize -> blocks -> network -> metrics."""
    patterns, buckets = shared_acquisition(scene, n_frames, seed, noise_sigma)
    grid = BlockGrid(scene.width, scene.height, params.block_size)
    prelim = cgi_estimate(patterns, buckets)
    image = network_estimate(params, prelim, grid)
    report = MetricReport(algorithm=algorithm, frame_count=n_frames,
                          psnr_db=psnr(scene, image), ssim=ssim(scene, image))
    return image, report


def build_denoising_set(count: int, grid: BlockGrid, frame_counts,
                        seed: int = 0, noise_sigma: float = 0.0) -> TrainingSet:
    """Noisy-correlation blocks paired with the clean blocks they came from.

    Each synthetic scene is acquired at every requested frame count so the
    network sees the full range of input quality it will meet at inference.
    """
    rng = np.random.default_rng(seed + _SEED_DATASET)
    inputs, targets = [], []
    scene_idx = 0
    while len(inputs) < count:
        scene = random_scene(rng, size=grid.image_height)
        clean = [b.reshape(-1) for b in partition(scene, grid.block_size)]
        for n in frame_counts:
            acq_seed = seed + 7919 * scene_idx + 13 * n
            patterns, buckets = shared_acquisition(scene, n, acq_seed,
                                                   noise_sigma)
            noisy_img = cgi_estimate(patterns, buckets)
            noisy = [b.reshape(-1)
                     for b in partition(noisy_img, grid.block_size)]
            inputs.extend(noisy)
            targets.extend(clean)
        scene_idx += 1
    inputs = np.stack(inputs)
    targets = np.stack(targets)
    order = rng.permutation(len(inputs))[:count]
    return TrainingSet(inputs=inputs[order], targets=targets[order],
                       provenance="noisy-cgi")


def build_mixed_set(count: int, grid: BlockGrid, frame_counts,
                    seed: int = 0, noise_sigma: float = 0.0,
                    clean_fraction: float = 0.75) -> TrainingSet:
    """Mixture of clean autoencoder pairs and noisy-correlation pairs.

    The clean pairs (three quarters of the set by default) anchor the
    network to reproduce block structure (a pure denoising set lets it
    collapse onto an input-independent mean predictor); the noisy pairs
    calibrate it to the contrast of real correlation estimates.
    """
    if not 0.0 < clean_fraction < 1.0:
        raise ValueError("clean fraction must be in (0, 1)")
    n_clean = round(count * clean_fraction)
    clean = generate_dataset(n_clean, grid, seed=seed)
    noisy = build_denoising_set(count - n_clean, grid, frame_counts,
                                seed=seed, noise_sigma=noise_sigma)
    inputs = np.concatenate([clean.inputs, noisy.inputs])
    targets = np.concatenate([clean.targets, noisy.targets])
    order = np.random.default_rng(seed).permutation(count)
    return TrainingSet(inputs=inputs[order], targets=targets[order],
                       provenance="mixed")


def run_comparison(config: ExperimentConfig, models: dict | None = None,
                   out_dir: str | None = None) -> RunRecord:
    """One reconstruction + metric row per (algorithm, frame count) cell.

    models maps "dl"/"cscnn" to NetworkParams; required iff those
    algorithms are requested.
    """
    models = models or {}
    for algo in ("dl", "cscnn"):
        if algo in config.algorithms and algo not in models:
            raise ValueError(f"algorithm {algo!r} requested but no model given")
    scene = load_scene(config)
    grid = config.grid
    patterns, buckets = shared_acquisition(scene, max(config.frame_counts),
                                           config.seed, config.noise_sigma)
    record = RunRecord(config=config)
    for n in sorted(config.frame_counts):
        pats_n, bucks_n = _prefix(patterns, buckets, n)
        prelim = cgi_estimate(pats_n, bucks_n)
        for algo in sorted(config.algorithms):
            t0 = time.perf_counter()
            if algo == "cgi":
                image = prelim
            elif algo == "cs":
                image = cs_gi_reconstruct(pats_n, bucks_n, config.cs_lambda,
                                          config.cs_iterations)
            else:
                image = network_estimate(models[algo], prelim, grid)
            wall_ms = 0.0 if config.deterministic else \
                1000.0 * (time.perf_counter() - t0)
            record.reports.append(MetricReport(
                algorithm=algo, frame_count=n,
                psnr_db=psnr(scene, image), ssim=ssim(scene, image)))
            record.timings_ms[(algo, n)] = wall_ms
            if out_dir is not None:
                path = os.path.join(out_dir, f"{algo}_{n:04d}.pgm")
                save_pgm(path, image)
                record.image_paths[(algo, n)] = path
    return record


def comparison_csv(record: RunRecord) -> str:
    """CSV rows sorted by (algorithm, frames) under the documented header."""
    lines = [CSV_HEADER]
    for rep in sorted(record.reports,
                      key=lambda r: (r.algorithm, r.frame_count)):
        wall = record.timings_ms.get((rep.algorithm, rep.frame_count), 0.0)
        lines.append(f"{rep.algorithm},{rep.frame_count},"
                     f"{rep.psnr_db!r},{rep.ssim!r},{wall!r}")
    return "\n".join(lines) + "\n"


def config_to_manifest(config: ExperimentConfig, command: str) -> str:
    """Plain-text reproducibility manifest; also parses back as a config."""
    lines = [f"command = {command}",
             f"cscgi_version = {__version__}",
             f"numpy_version = {np.__version__}",
             f"python_version = {sys.version.split()[0]}"]
    for key, value in asdict(config).items():
        if isinstance(value, (tuple, list)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_config_text(text: str) -> dict:
    """Parse line-oriented `key = value` text; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_INT_KEYS = {"image_size", "block_size", "train_size", "seed", "cs_iterations"}
_FLOAT_KEYS = {"mr", "noise_sigma", "cs_lambda"}
_TUPLE_INT_KEYS = {"frame_counts"}
_TUPLE_STR_KEYS = {"algorithms"}
_IGNORED_KEYS = {"command", "cscgi_version", "numpy_version", "python_version"}


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    kwargs = {}
    for key, value in mapping.items():
        if key in _IGNORED_KEYS:
            continue
        if key in _INT_KEYS:
            kwargs[key] = int(value)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(value)
        elif key in _TUPLE_INT_KEYS:
            kwargs[key] = tuple(int(v) for v in value.split(",") if v)
        elif key in _TUPLE_STR_KEYS:
            kwargs[key] = tuple(v.strip() for v in value.split(",") if v)
        elif key == "deterministic":
            kwargs[key] = value.lower() in ("1", "true", "yes")
        elif key == "scene":
            kwargs[key] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    return ExperimentConfig(**kwargs)
