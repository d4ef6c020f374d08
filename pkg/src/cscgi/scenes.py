"""Procedural glyph scenes: block letters on a dark background.

Stands in for a physical test target.  Letters come from a built-in 5x7
bitmap font, scaled by nearest neighbour and placed on the canvas.
"""

from __future__ import annotations

import numpy as np

from .compressed_sensing import partition
from .ghost_optics import SceneImage
from .neural_reconstructor import TrainingSet

# 5x7 bitmap font, one string per row, '#' = lit pixel
_FONT = {
    "A": ["..#..", ".#.#.", "#...#", "#...#", "#####", "#...#", "#...#"],
    "B": ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."],
    "C": [".####", "#....", "#....", "#....", "#....", "#....", ".####"],
    "D": ["####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."],
    "E": ["#####", "#....", "#....", "####.", "#....", "#....", "#####"],
    "F": ["#####", "#....", "#....", "####.", "#....", "#....", "#...."],
    "G": [".####", "#....", "#....", "#..##", "#...#", "#...#", ".####"],
    "H": ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
    "K": ["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"],
    "L": ["#....", "#....", "#....", "#....", "#....", "#....", "#####"],
    "N": ["#...#", "##..#", "##..#", "#.#.#", "#..##", "#..##", "#...#"],
    "O": [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    "P": ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."],
    "Q": [".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"],
    "R": ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"],
    "S": [".####", "#....", "#....", ".###.", "....#", "....#", "####."],
    "T": ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."],
    "U": ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."],
    "V": ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."],
    "X": ["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"],
    "Y": ["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."],
    "Z": ["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"],
}

FONT_LETTERS = "".join(sorted(_FONT))


def glyph_bitmap(letter: str) -> np.ndarray:
    if letter not in _FONT:
        raise ValueError(f"no glyph for {letter!r} (have {FONT_LETTERS})")
    return np.array([[1.0 if c == "#" else 0.0 for c in row]
                     for row in _FONT[letter]])


def render_scene(letters: str, size: int = 200, scale: int = 8,
                 foreground: float = 1.0) -> SceneImage:
    """Letters in a centered row on a black canvas of size x size pixels."""
    canvas = np.zeros((size, size))
    if letters:
        gap = scale  # one scaled column between letters
        total_w = len(letters) * 5 * scale + (len(letters) - 1) * gap
        total_h = 7 * scale
        if total_w > size or total_h > size:
            raise ValueError("letters do not fit the canvas at this scale")
        x = (size - total_w) // 2
        y = (size - total_h) // 2
        for letter in letters:
            bmp = np.kron(glyph_bitmap(letter), np.ones((scale, scale)))
            canvas[y:y + bmp.shape[0], x:x + bmp.shape[1]] = foreground * bmp
            x += 5 * scale + gap
    return SceneImage(pixels=canvas)


def random_scene(rng: np.random.Generator, size: int = 200) -> SceneImage:
    """Scene with 1-4 letters at random scale and position."""
    canvas = np.zeros((size, size))
    count = int(rng.integers(1, 5))
    for _ in range(count):
        letter = FONT_LETTERS[rng.integers(len(FONT_LETTERS))]
        scale = int(rng.integers(max(2, size // 40), max(3, size // 12)))
        bmp = np.kron(glyph_bitmap(letter), np.ones((scale, scale)))
        h, w = bmp.shape
        if h > size or w > size:
            continue
        y = int(rng.integers(0, size - h + 1))
        x = int(rng.integers(0, size - w + 1))
        fg = float(rng.uniform(0.6, 1.0))
        patch = canvas[y:y + h, x:x + w]
        canvas[y:y + h, x:x + w] = np.maximum(patch, fg * bmp)
    return SceneImage(pixels=canvas)


def generate_dataset(count: int, grid, seed: int = 0) -> TrainingSet:
    """Clean block samples drawn from procedurally generated glyph scenes.

    Blocks from successive random scenes are pooled and shuffled so the set
    mixes stroke-bearing and background blocks; deterministic in the seed.
    """
    if count < 1:
        raise ValueError("dataset size must be >= 1")
    rng = np.random.default_rng(seed)
    n = grid.block_size * grid.block_size
    pool = []
    while len(pool) < count:
        scene = random_scene(rng, size=grid.image_height)
        pool.extend(b.reshape(-1) for b in partition(scene, grid.block_size))
    blocks = np.stack(pool)
    order = rng.permutation(len(blocks))
    return TrainingSet(inputs=blocks[order[:count]], provenance="clean")
