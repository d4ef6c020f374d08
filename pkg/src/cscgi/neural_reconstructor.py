"""From-scratch 10-layer block reconstructor (4 dense + 6 conv layers).

Layers 1-4 form a stacked autoencoder on the flattened block
(N -> C -> N -> N/4 -> N with N = block_size^2); the result is reshaped to
a single-channel block and refined by six shape-preserving convolution
layers.  Layers 1-9 use ReLU, the final layer is linear.  All forward and
backward passes are hand-derived numpy; no autodiff framework.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_CONV_CHANNELS = (64, 32, 1, 64, 32, 1)
DEFAULT_KERNEL_SIZES = (11, 1, 7, 11, 1, 7)


@dataclass
class DenseLayerParams:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)
    activation: str      # "relu" | "linear"

    def __post_init__(self):
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError("bias length must equal weight rows")
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class ConvLayerParams:
    kernels: np.ndarray  # (out_c, in_c, k, k)
    bias: np.ndarray     # (out_c,)
    padding: int
    activation: str

    def __post_init__(self):
        k = self.kernels.shape[-1]
        if self.kernels.ndim != 4 or self.kernels.shape[-2] != k:
            raise ValueError("kernels must have shape (out_c, in_c, k, k)")
        if k % 2 == 0:
            raise ValueError("kernel size must be odd")
        if self.padding != (k - 1) // 2:
            raise ValueError("padding must be (k-1)/2 (shape preserving)")
        if self.activation not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class NetworkParams:
    block_size: int
    dense: list  # 4 DenseLayerParams
    conv: list   # 6 ConvLayerParams

    @property
    def compression_width(self) -> int:
        return self.dense[0].weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.block_size * self.block_size

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            block_size=self.block_size,
            dense=[replace(l, weights=l.weights.copy(), bias=l.bias.copy())
                   for l in self.dense],
            conv=[replace(l, kernels=l.kernels.copy(), bias=l.bias.copy())
                  for l in self.conv])


@dataclass
class TrainingConfig:
    learning_rate: float = 3e-5
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    optimizer: str = "sgd-momentum"  # "sgd" | "sgd-momentum"
    momentum: float = 0.9

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("sgd", "sgd-momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainingSet:
    """Block samples; targets default to the inputs (autoencoder mode)."""

    inputs: np.ndarray            # (T, N) in [0, 1]
    targets: np.ndarray = None    # (T, N); None means inputs are the targets
    provenance: str = "clean"

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        if self.inputs.ndim != 2:
            raise ValueError("inputs must have shape (T, N)")
        if self.targets is None:
            self.targets = self.inputs
        else:
            self.targets = np.asarray(self.targets, dtype=np.float64)
            if self.targets.shape != self.inputs.shape:
                raise ValueError("targets must match inputs shape")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def init_params(compression_width: int, seed: int = 0, block_size: int = 20,
                conv_channels=DEFAULT_CONV_CHANNELS,
                kernel_sizes=DEFAULT_KERNEL_SIZES) -> NetworkParams:
    """Deterministic initialization.

    Dense layers: Glorot uniform, +-sqrt(6/(fan_in+fan_out)).  Conv kernels:
    Normal(0, 0.01) (variance 0.01).  All biases zero.  The measurement rate
    is compression_width / block_size^2.
    """
    n = block_size * block_size
    c = compression_width
    if not 1 <= c <= n:
        raise ValueError(f"compression width must be in [1, {n}], got {c}")
    if conv_channels[-1] != 1:
        raise ValueError("last conv layer must emit a single channel")
    rng = np.random.default_rng(seed)

    def glorot(out_dim, in_dim):
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        return rng.uniform(-limit, limit, size=(out_dim, in_dim))

    widths = [(c, n), (n, c), (n // 4, n), (n, n // 4)]
    dense = [DenseLayerParams(weights=glorot(o, i), bias=np.zeros(o),
                              activation="relu")
             for o, i in widths]
    conv = []
    in_c = 1
    for idx, (out_c, k) in enumerate(zip(conv_channels, kernel_sizes)):
        act = "linear" if idx == len(conv_channels) - 1 else "relu"
        conv.append(ConvLayerParams(
            kernels=0.1 * rng.standard_normal((out_c, in_c, k, k)),
            bias=np.zeros(out_c), padding=(k - 1) // 2, activation=act))
        in_c = out_c
    return NetworkParams(block_size=block_size, dense=dense, conv=conv)


def _act(z: np.ndarray, activation: str) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == "relu" else z


def _im2col(x: np.ndarray, k: int, p: int) -> np.ndarray:
    """Column matrix (B, C*k*k, H*W); row order matches kernels.reshape(O,-1)."""
    b, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    col = np.empty((b, c, k, k, h * w))
    for i in range(k):
        for j in range(k):
            col[:, :, i, j, :] = xp[:, :, i:i + h, j:j + w].reshape(b, c, -1)
    return col.reshape(b, c * k * k, h * w)


def conv2d_forward(x: np.ndarray, layer: ConvLayerParams) -> np.ndarray:
    """Shape-preserving 2-D convolution, x of shape (B, in_c, H, W)."""
    b, _, h, w = x.shape
    out_c, _, k, _ = layer.kernels.shape
    col = _im2col(x, k, layer.padding)
    z = np.matmul(layer.kernels.reshape(out_c, -1), col)
    return z.reshape(b, out_c, h, w) + layer.bias[None, :, None, None]


def conv2d_backward(x: np.ndarray, layer: ConvLayerParams, dz: np.ndarray):
    """Gradients of a conv layer given upstream dz on the pre-activation."""
    b, in_c, h, w = x.shape
    out_c, _, k, _ = layer.kernels.shape
    p = layer.padding
    col = _im2col(x, k, p)
    dz_mat = dz.reshape(b, out_c, h * w)
    dk = np.matmul(dz_mat, col.transpose(0, 2, 1)).sum(axis=0) \
        .reshape(layer.kernels.shape)
    db = dz.sum(axis=(0, 2, 3))
    dcol = np.matmul(layer.kernels.reshape(out_c, -1).T, dz_mat) \
        .reshape(b, in_c, k, k, h * w)
    dxp = np.zeros((b, in_c, h + 2 * p, w + 2 * p))
    for i in range(k):
        for j in range(k):
            dxp[:, :, i:i + h, j:j + w] += dcol[:, :, i, j, :] \
                .reshape(b, in_c, h, w)
    dx = dxp[:, :, p:p + h, p:p + w] if p else dxp
    return dk, db, dx


def forward_batch(params: NetworkParams, x: np.ndarray):
    """Forward pass for a batch of flattened blocks.

    Returns (outputs (B, N), cache).  The cache holds every layer input and
    pre-activation needed by backward_batch.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ValueError(f"expected input of shape (B, {params.input_dim})")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    bsz = params.block_size
    cache = {"dense": [], "conv": [], "input": x}
    a = x
    for layer in params.dense:
        z = a @ layer.weights.T + layer.bias
        cache["dense"].append((a, z))
        a = _act(z, layer.activation)
    fmap = a.reshape(-1, 1, bsz, bsz)
    for layer in params.conv:
        z = conv2d_forward(fmap, layer)
        cache["conv"].append((fmap, z))
        fmap = _act(z, layer.activation)
    out = fmap.reshape(-1, params.input_dim)
    return out, cache


def forward(params: NetworkParams, x: np.ndarray):
    """Single-sample forward pass; returns (block, per-layer activations)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    out, cache = forward_batch(params, x[None, :])
    activations = ([_act(z, l.activation)[0] for (_, z), l
                    in zip(cache["dense"], params.dense)]
                   + [_act(z, l.activation)[0] for (_, z), l
                      in zip(cache["conv"], params.conv)])
    bsz = params.block_size
    return out[0].reshape(bsz, bsz), activations


def loss(params: NetworkParams, train_set: TrainingSet) -> float:
    """Mean over samples of the squared reconstruction error ||F(x) - t||^2."""
    if len(train_set) == 0:
        raise ValueError("empty batch")
    out, _ = forward_batch(params, train_set.inputs)
    diff = out - train_set.targets
    return float(np.mean(np.sum(diff * diff, axis=1)))


@dataclass
class Gradients:
    dense: list  # [(dW, db)] per dense layer
    conv: list   # [(dK, db)] per conv layer


def backward(params: NetworkParams, train_set: TrainingSet) -> Gradients:
    """Analytic gradient of loss() w.r.t. every weight and bias."""
    if len(train_set) == 0:
        raise ValueError("empty batch")
    t = len(train_set)
    out, cache = forward_batch(params, train_set.inputs)
    bsz = params.block_size
    # d loss / d out, loss = (1/T) sum_i ||out_i - target_i||^2
    grad = (2.0 / t) * (out - train_set.targets)
    grad = grad.reshape(-1, 1, bsz, bsz)
    conv_grads = [None] * len(params.conv)
    for idx in range(len(params.conv) - 1, -1, -1):
        layer = params.conv[idx]
        fmap_in, z = cache["conv"][idx]
        dz = grad if layer.activation == "linear" else grad * (z > 0)
        dk, db, grad = conv2d_backward(fmap_in, layer, dz)
        conv_grads[idx] = (dk, db)
    grad = grad.reshape(t, params.input_dim)
    dense_grads = [None] * len(params.dense)
    for idx in range(len(params.dense) - 1, -1, -1):
        layer = params.dense[idx]
        a_in, z = cache["dense"][idx]
        dz = grad if layer.activation == "linear" else grad * (z > 0)
        dense_grads[idx] = (dz.T @ a_in, dz.sum(axis=0))
        grad = dz @ layer.weights
    return Gradients(dense=dense_grads, conv=conv_grads)


def train(params: NetworkParams, train_set: TrainingSet,
          config: TrainingConfig, epoch_callback=None):
    """Mini-batch SGD; returns (trained params, per-epoch loss history).

    Deterministic for a given seed in single-threaded mode: the shuffle
    order and every update depend only on config.seed and the data, and
    each epoch's shuffle is drawn sequentially from one seeded stream, so
    stopping after k epochs matches a run configured with epochs=k.
    Aborts if the loss becomes non-finite.

    epoch_callback, if given, is called as epoch_callback(epoch, params)
    after each epoch (epoch counts from 1) for monitoring or snapshots;
    it must not mutate params.
    """
    if len(train_set) == 0:
        raise ValueError("empty training set")
    params = params.copy()
    rng = np.random.default_rng(config.seed)
    t = len(train_set)
    use_momentum = config.optimizer == "sgd-momentum"
    vel_dense = [(np.zeros_like(l.weights), np.zeros_like(l.bias))
                 for l in params.dense]
    vel_conv = [(np.zeros_like(l.kernels), np.zeros_like(l.bias))
                for l in params.conv]
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(t)
        batch_losses = []
        for start in range(0, t, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = TrainingSet(inputs=train_set.inputs[idx],
                                targets=train_set.targets[idx],
                                provenance=train_set.provenance)
            batch_losses.append(loss(params, batch))
            grads = backward(params, batch)
            for layer, (dw, db), vel in zip(params.dense, grads.dense, vel_dense):
                _sgd_step(layer, "weights", dw, vel[0], config, use_momentum)
                _sgd_step(layer, "bias", db, vel[1], config, use_momentum)
            for layer, (dk, db), vel in zip(params.conv, grads.conv, vel_conv):
                _sgd_step(layer, "kernels", dk, vel[0], config, use_momentum)
                _sgd_step(layer, "bias", db, vel[1], config, use_momentum)
        epoch_loss = float(np.mean(batch_losses))
        if not np.isfinite(epoch_loss):
            raise FloatingPointError(
                f"training diverged: loss {epoch_loss} at epoch {len(history)}")
        history.append(epoch_loss)
        if epoch_callback is not None:
            epoch_callback(len(history), params)
    return params, history


def _sgd_step(layer, attr, grad, velocity, config, use_momentum):
    if use_momentum:
        velocity *= config.momentum
        velocity -= config.learning_rate * grad
        setattr(layer, attr, getattr(layer, attr) + velocity)
    else:
        setattr(layer, attr, getattr(layer, attr) - config.learning_rate * grad)


def parameter_count(params: NetworkParams) -> int:
    total = 0
    for l in params.dense:
        total += l.weights.size + l.bias.size
    for l in params.conv:
        total += l.kernels.size + l.bias.size
    return total


def infer_image(params: NetworkParams, blocks, grid):
    """Per-block forward pass, clamp to [0, 1], reassemble in row-major order."""
    from .compressed_sensing import reassemble
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.ndim != 2 or blocks.shape[1] != params.input_dim:
        raise ValueError(f"blocks must have shape (count, {params.input_dim})")
    if blocks.shape[0] != grid.block_count:
        raise ValueError(
            f"expected {grid.block_count} blocks, got {blocks.shape[0]}")
    # chunked so the conv workspaces stay small for large block counts
    parts = []
    for start in range(0, blocks.shape[0], 32):
        part, _ = forward_batch(params, blocks[start:start + 32])
        parts.append(part)
    out = np.clip(np.concatenate(parts), 0.0, 1.0)
    bsz = params.block_size
    return reassemble([o.reshape(bsz, bsz) for o in out], grid)
