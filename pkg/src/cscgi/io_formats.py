"""Binary containers for patterns, buckets, matrices, checkpoints, and P5 graymaps.

All containers are little-endian:

  CGI1 (patterns):      "CGI1" | u32 n | u32 width | u32 height | u8 kind
                        | u64 seed | f64 payload (n*width*height values)
  CGI1 (bucket series): same header with kind = KIND_BUCKETS; width/height
                        are the paired pattern dimensions, seed is the
                        pattern seed; payload = noise_sigma then n values
  PHI1 (matrix):        "PHI1" | u32 M | u32 N | u64 seed | f64 scale
                        | f64 entries row-major
  CSNN (checkpoint):    "CSNN" | u32 version | u32 C | u32 block_size
                        | u32 n_dense | u32 n_conv | per layer: dims,
                        u8 activation, f64 weights then bias

Scenes are 8-bit binary portable graymaps (P5).
"""

from __future__ import annotations

import struct

import numpy as np

from .compressed_sensing import MeasurementMatrix
from .ghost_optics import BucketSeries, PatternSet, SceneImage
from .neural_reconstructor import (ConvLayerParams, DenseLayerParams,
                                   NetworkParams)

KIND_BINARY, KIND_GAUSSIAN, KIND_BUCKETS = 0, 1, 2
_KIND_TO_NAME = {KIND_BINARY: "binary", KIND_GAUSSIAN: "gaussian-intensity"}
_NAME_TO_KIND = {v: k for k, v in _KIND_TO_NAME.items()}
_ACT_TO_CODE = {"relu": 0, "linear": 1}
_CODE_TO_ACT = {v: k for k, v in _ACT_TO_CODE.items()}
CHECKPOINT_VERSION = 1


class FormatError(ValueError):
    """Raised for corrupt or mismatched container files."""


def _read_exact(fh, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise FormatError("truncated file")
    return data


def _write_cgi1_header(fh, n, width, height, kind_code, seed):
    fh.write(b"CGI1")
    fh.write(struct.pack("<IIIBQ", n, width, height, kind_code, seed))


def _read_cgi1_header(fh):
    if _read_exact(fh, 4) != b"CGI1":
        raise FormatError("bad magic, expected CGI1")
    return struct.unpack("<IIIBQ", _read_exact(fh, 21))


def save_patterns(path, patterns: PatternSet) -> None:
    with open(path, "wb") as fh:
        _write_cgi1_header(fh, patterns.count, patterns.width, patterns.height,
                           _NAME_TO_KIND[patterns.kind], patterns.seed)
        fh.write(patterns.patterns.astype("<f8").tobytes())


def load_patterns(path) -> PatternSet:
    with open(path, "rb") as fh:
        n, width, height, kind_code, seed = _read_cgi1_header(fh)
        if kind_code not in _KIND_TO_NAME:
            raise FormatError(f"not a pattern container (kind {kind_code})")
        payload = np.frombuffer(_read_exact(fh, 8 * n * width * height), "<f8")
    return PatternSet(patterns=payload.reshape(n, height, width).copy(),
                      kind=_KIND_TO_NAME[kind_code], seed=seed)


def save_buckets(path, buckets: BucketSeries, width: int, height: int) -> None:
    with open(path, "wb") as fh:
        _write_cgi1_header(fh, len(buckets), width, height, KIND_BUCKETS,
                           buckets.pattern_seed)
        fh.write(struct.pack("<d", buckets.noise_sigma))
        fh.write(buckets.values.astype("<f8").tobytes())


def load_buckets(path) -> BucketSeries:
    with open(path, "rb") as fh:
        n, _, _, kind_code, seed = _read_cgi1_header(fh)
        if kind_code != KIND_BUCKETS:
            raise FormatError(f"not a bucket container (kind {kind_code})")
        sigma = struct.unpack("<d", _read_exact(fh, 8))[0]
        values = np.frombuffer(_read_exact(fh, 8 * n), "<f8")
    return BucketSeries(values=values.copy(), noise_sigma=sigma,
                        pattern_seed=seed)


def save_matrix(path, phi: MeasurementMatrix) -> None:
    with open(path, "wb") as fh:
        fh.write(b"PHI1")
        fh.write(struct.pack("<IIQd", phi.rows, phi.cols, phi.seed, phi.scale))
        fh.write(phi.entries.astype("<f8").tobytes())


def load_matrix(path) -> MeasurementMatrix:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != b"PHI1":
            raise FormatError("bad magic, expected PHI1")
        m, n, seed, scale = struct.unpack("<IIQd", _read_exact(fh, 24))
        entries = np.frombuffer(_read_exact(fh, 8 * m * n), "<f8")
    return MeasurementMatrix(entries=entries.reshape(m, n).copy(),
                             seed=seed, scale=scale)


def save_checkpoint(path, params: NetworkParams) -> None:
    with open(path, "wb") as fh:
        fh.write(b"CSNN")
        fh.write(struct.pack("<IIIII", CHECKPOINT_VERSION,
                             params.compression_width, params.block_size,
                             len(params.dense), len(params.conv)))
        for layer in params.dense:
            out_dim, in_dim = layer.weights.shape
            fh.write(struct.pack("<IIB", out_dim, in_dim,
                                 _ACT_TO_CODE[layer.activation]))
            fh.write(layer.weights.astype("<f8").tobytes())
            fh.write(layer.bias.astype("<f8").tobytes())
        for layer in params.conv:
            out_c, in_c, k, _ = layer.kernels.shape
            fh.write(struct.pack("<IIIB", out_c, in_c, k,
                                 _ACT_TO_CODE[layer.activation]))
            fh.write(layer.kernels.astype("<f8").tobytes())
            fh.write(layer.bias.astype("<f8").tobytes())


def load_checkpoint(path) -> NetworkParams:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != b"CSNN":
            raise FormatError("bad magic, expected CSNN")
        version, c, block_size, n_dense, n_conv = struct.unpack(
            "<IIIII", _read_exact(fh, 20))
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        dense = []
        for _ in range(n_dense):
            out_dim, in_dim, act = struct.unpack("<IIB", _read_exact(fh, 9))
            if act not in _CODE_TO_ACT:
                raise FormatError(f"bad activation code {act}")
            w = np.frombuffer(_read_exact(fh, 8 * out_dim * in_dim), "<f8")
            b = np.frombuffer(_read_exact(fh, 8 * out_dim), "<f8")
            dense.append(DenseLayerParams(
                weights=w.reshape(out_dim, in_dim).copy(), bias=b.copy(),
                activation=_CODE_TO_ACT[act]))
        conv = []
        for _ in range(n_conv):
            out_c, in_c, k, act = struct.unpack("<IIIB", _read_exact(fh, 13))
            if act not in _CODE_TO_ACT:
                raise FormatError(f"bad activation code {act}")
            kern = np.frombuffer(_read_exact(fh, 8 * out_c * in_c * k * k), "<f8")
            b = np.frombuffer(_read_exact(fh, 8 * out_c), "<f8")
            conv.append(ConvLayerParams(
                kernels=kern.reshape(out_c, in_c, k, k).copy(), bias=b.copy(),
                padding=(k - 1) // 2, activation=_CODE_TO_ACT[act]))
    params = NetworkParams(block_size=block_size, dense=dense, conv=conv)
    if params.compression_width != c:
        raise FormatError("checkpoint compression width disagrees with layer dims")
    return params


def save_pgm(path, scene: SceneImage) -> None:
    """8-bit binary P5 graymap; pixel value = round(255 * reflectance)."""
    data = np.round(scene.pixels * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{scene.width} {scene.height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def load_pgm(path) -> SceneImage:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":  # comment line
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated graymap header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise FormatError("bad magic, expected P5")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError("malformed graymap header") from exc
    if maxval != 255:
        raise FormatError("only 8-bit graymaps supported")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise FormatError("truncated graymap raster")
    pixels = np.frombuffer(raster, np.uint8).reshape(height, width)
    return SceneImage(pixels=pixels / 255.0)
