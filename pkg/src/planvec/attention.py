"""Forward-pass reference kernels: convolution, group normalization,
asymmetric convolution, and channel/spatial attention.

Tensors are (H, W, C) float64 arrays; kernels are (kh, kw, in, out) with odd
spatial dims. All convolutions are zero-padded cross-correlations that keep
the spatial size. These kernels exist for property checking and numeric
reference, not speed.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ChannelMismatch, IndivisibleGroups, OddChannels, PlanvecError

INIT_STD = 0.05  # std of the seeded normal initializer


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class ConvKernel:
    weights: np.ndarray  # (kh, kw, c_in, c_out)
    bias: np.ndarray  # (c_out,)
    dilation: int = 1

    def __post_init__(self):
        kh, kw = self.weights.shape[:2]
        if kh % 2 == 0 or kw % 2 == 0:
            raise PlanvecError(f"kernel dims must be odd, got {kh}x{kw}")
        if self.dilation < 1:
            raise PlanvecError(f"dilation must be >= 1, got {self.dilation}")
        if self.bias.shape != (self.weights.shape[3],):
            raise PlanvecError("bias length must equal the output channel count")

    @property
    def in_channels(self) -> int:
        return self.weights.shape[2]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[3]


def conv2d(x: np.ndarray, kernel: ConvKernel) -> np.ndarray:
    """Same-size zero-padded cross-correlation with dilation."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise PlanvecError(f"input must be (H, W, C), got shape {x.shape}")
    if x.shape[2] != kernel.in_channels:
        raise ChannelMismatch(
            f"input has {x.shape[2]} channels, kernel expects {kernel.in_channels}"
        )
    h, w, _ = x.shape
    kh, kw, _, c_out = kernel.weights.shape
    d = kernel.dilation
    ph, pw = (kh // 2) * d, (kw // 2) * d
    padded = np.pad(x, ((ph, ph), (pw, pw), (0, 0)))
    out = np.broadcast_to(kernel.bias, (h, w, c_out)).copy()
    for iy in range(kh):
        for ix in range(kw):
            window = padded[iy * d : iy * d + h, ix * d : ix * d + w]
            out += window @ kernel.weights[iy, ix]
    return out


def group_norm(
    x: np.ndarray,
    groups: int,
    gamma: np.ndarray | None = None,
    beta: np.ndarray | None = None,
    epsilon: float = 1e-5,
) -> np.ndarray:
    """Normalize each channel group over (H, W, group) to zero mean and unit
    variance, then apply the per-channel affine."""
    x = np.asarray(x, dtype=np.float64)
    c = x.shape[2]
    if groups < 1 or c % groups:
        raise IndivisibleGroups(f"{c} channels are not divisible into {groups} groups")
    gamma = np.ones(c) if gamma is None else np.asarray(gamma, dtype=np.float64)
    beta = np.zeros(c) if beta is None else np.asarray(beta, dtype=np.float64)
    h, w, _ = x.shape
    grouped = x.reshape(h, w, groups, c // groups)
    mean = grouped.mean(axis=(0, 1, 3), keepdims=True)
    var = grouped.var(axis=(0, 1, 3), keepdims=True)
    normed = (grouped - mean) / np.sqrt(var + epsilon)
    return normed.reshape(h, w, c) * gamma + beta


@dataclass(frozen=True)
class ACWeights:
    """Square, horizontal, and vertical branches plus group-norm parameters."""

    square: ConvKernel  # k x k
    horizontal: ConvKernel  # 1 x k
    vertical: ConvKernel  # k x 1
    groups: int
    gamma: np.ndarray
    beta: np.ndarray
    epsilon: float = 1e-5

    def __post_init__(self):
        chans = {k.in_channels for k in (self.square, self.horizontal, self.vertical)}
        outs = {k.out_channels for k in (self.square, self.horizontal, self.vertical)}
        if len(chans) != 1 or len(outs) != 1:
            raise ChannelMismatch("the three branch kernels must share channel counts")


def ac_block(x: np.ndarray, w: ACWeights) -> np.ndarray:
    """ReLU(GN(square(x) + horizontal(x) + vertical(x)))."""
    summed = conv2d(x, w.square) + conv2d(x, w.horizontal) + conv2d(x, w.vertical)
    return relu(group_norm(summed, w.groups, w.gamma, w.beta, w.epsilon))


@dataclass(frozen=True)
class CAMWeights:
    """1x1 compression to C/2, then a shared squeeze/expand bottleneck applied
    to the average- and max-pooled vectors."""

    compress: ConvKernel  # 1x1, C -> C/2
    squeeze: ConvKernel  # 1x1, C/2 -> Cs
    expand: ConvKernel  # 1x1, Cs -> C/2


def cam(x: np.ndarray, w: CAMWeights) -> np.ndarray:
    """Channel attention map of shape (1, 1, C/2), sigmoid-valued."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[2] % 2:
        raise OddChannels(f"channel attention needs an even channel count, got {x.shape[2]}")
    fc = conv2d(x, w.compress)
    avg = fc.mean(axis=(0, 1), keepdims=True)
    mx = fc.max(axis=(0, 1), keepdims=True)
    branches = [conv2d(relu(conv2d(p, w.squeeze)), w.expand) for p in (avg, mx)]
    return sigmoid(branches[0] + branches[1])


@dataclass(frozen=True)
class SAMWeights:
    """Three parallel (1x1 + dilated 3x3) branches over the 2-channel pooled
    map, with dilation rates 1, 2, 3."""

    points: tuple[ConvKernel, ConvKernel, ConvKernel]
    dilated: tuple[ConvKernel, ConvKernel, ConvKernel]

    def __post_init__(self):
        if tuple(k.dilation for k in self.dilated) != (1, 2, 3):
            raise PlanvecError("dilated branches must use rates 1, 2, 3")


def sam(x: np.ndarray, w: SAMWeights) -> np.ndarray:
    """Spatial attention map of shape (H, W, 1), sigmoid-valued."""
    x = np.asarray(x, dtype=np.float64)
    pooled = np.concatenate(
        [x.mean(axis=2, keepdims=True), x.max(axis=2, keepdims=True)], axis=2
    )
    total = np.zeros((x.shape[0], x.shape[1], 1))
    for point, dil in zip(w.points, w.dilated):
        total += conv2d(pooled, point) + conv2d(pooled, dil)
    return sigmoid(total)


@dataclass(frozen=True)
class AMWeights:
    channel_compress: ConvKernel  # 1x1, C -> C/2
    spatial_compress: ConvKernel  # 1x1, C -> C/2
    cam: CAMWeights
    sam: SAMWeights
    ac: ACWeights


def attention_module(
    x: np.ndarray,
    w: AMWeights,
    channel_map: np.ndarray | None = None,
    spatial_map: np.ndarray | None = None,
) -> np.ndarray:
    """Weigh two compressed copies of the input by the channel and spatial
    attention maps, concatenate them, and run the asymmetric block.

    ``channel_map``/``spatial_map`` override the computed maps; passing an
    all-ones map turns the corresponding branch into a plain compression,
    which is useful for diagnostics.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[2] != w.channel_compress.in_channels:
        raise ChannelMismatch(
            f"input has {x.shape[2]} channels, weights expect {w.channel_compress.in_channels}"
        )
    fc = conv2d(x, w.channel_compress)
    fs = conv2d(x, w.spatial_compress)
    mc = cam(x, w.cam) if channel_map is None else np.asarray(channel_map, dtype=np.float64)
    ms = sam(x, w.sam) if spatial_map is None else np.asarray(spatial_map, dtype=np.float64)
    combined = np.concatenate([fc * mc, fs * ms], axis=2)
    return ac_block(combined, w.ac)


def random_kernel(rng: np.random.Generator, kh: int, kw: int, c_in: int, c_out: int,
                  dilation: int = 1) -> ConvKernel:
    return ConvKernel(
        rng.normal(0.0, INIT_STD, size=(kh, kw, c_in, c_out)),
        rng.normal(0.0, INIT_STD, size=(c_out,)),
        dilation,
    )


def random_ac_weights(rng: np.random.Generator, c_in: int, c_out: int, k: int = 3,
                      groups: int | None = None) -> ACWeights:
    if groups is None:
        groups = c_out if c_out < 4 else 4
    return ACWeights(
        square=random_kernel(rng, k, k, c_in, c_out),
        horizontal=random_kernel(rng, 1, k, c_in, c_out),
        vertical=random_kernel(rng, k, 1, c_in, c_out),
        groups=groups,
        gamma=np.ones(c_out),
        beta=np.zeros(c_out),
    )


def squeeze_channels(channels: int, from_half: bool = True) -> int:
    """Bottleneck width: one-sixteenth of the compressed (C/2) width by
    default, or of the full width, floored at one channel."""
    ref = channels // 2 if from_half else channels
    return max(1, ref // 16)


def random_cam_weights(rng: np.random.Generator, channels: int,
                       squeeze_from_half: bool = True) -> CAMWeights:
    if channels % 2:
        raise OddChannels(f"channel attention needs an even channel count, got {channels}")
    half = channels // 2
    cs = squeeze_channels(channels, squeeze_from_half)
    return CAMWeights(
        compress=random_kernel(rng, 1, 1, channels, half),
        squeeze=random_kernel(rng, 1, 1, half, cs),
        expand=random_kernel(rng, 1, 1, cs, half),
    )


def random_sam_weights(rng: np.random.Generator) -> SAMWeights:
    return SAMWeights(
        points=tuple(random_kernel(rng, 1, 1, 2, 1) for _ in range(3)),
        dilated=tuple(random_kernel(rng, 3, 3, 2, 1, dilation=d) for d in (1, 2, 3)),
    )


def random_am_weights(rng: np.random.Generator, channels: int,
                      out_channels: int | None = None) -> AMWeights:
    if channels % 2:
        raise OddChannels(f"the attention module needs an even channel count, got {channels}")
    half = channels // 2
    out_channels = out_channels or channels
    return AMWeights(
        channel_compress=random_kernel(rng, 1, 1, channels, half),
        spatial_compress=random_kernel(rng, 1, 1, channels, half),
        cam=random_cam_weights(rng, channels),
        sam=random_sam_weights(rng),
        ac=random_ac_weights(rng, channels, out_channels),
    )


# ---------------------------------------------------------------------------
# Flat binary weight container: a header listing names and dims, followed by
# all payloads as little-endian float32.

_MAGIC = b"PVWT"
_VERSION = 1


def save_weights(path: str | os.PathLike, arrays: dict[str, np.ndarray],
                 manifest: bool = True) -> None:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<II", _VERSION, len(arrays)))
    items = list(arrays.items())
    for name, arr in items:
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    for _, arr in items:
        buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    if manifest:
        with open(f"{path}.manifest", "w", encoding="utf-8") as fh:
            fh.write(weights_manifest(dict(items)))


def load_weights(path: str | os.PathLike) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise PlanvecError(f"{path}: not a weight container")
    version, count = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise PlanvecError(f"{path}: unsupported container version {version}")
    offset = 12
    entries: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<I", data, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        entries.append((name, shape))
    out: dict[str, np.ndarray] = {}
    for name, shape in entries:
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(shape)
        offset += 4 * n
        out[name] = arr.astype(np.float64)
    return out


def weights_manifest(arrays: dict[str, np.ndarray]) -> str:
    lines = [f"{name} {'x'.join(str(d) for d in np.asarray(arr).shape) or 'scalar'}"
             for name, arr in arrays.items()]
    return "\n".join(lines) + "\n"
