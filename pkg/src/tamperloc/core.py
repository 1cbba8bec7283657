"""Planar image containers and fixed-kernel filtering shared by every feature view.

Conventions used throughout the package:

* frames are channel-planar ``(3, H, W)`` float64 with samples in ``[0, 1]``;
* feature stacks are ``(C, H, W)`` float64 with one text label per channel;
* filtering is cross-correlation (kernels applied as written, never reversed)
  with reflect padding that mirrors about the edge sample without repeating it;
* all internal arithmetic is 64-bit, file formats narrow to 32-bit on write.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import PipelineError

MIN_FRAME_SIDE = 8
LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # BT.601 luma coefficients

RGB_LABELS = ("rgb_R", "rgb_G", "rgb_B")


def _as_float64(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64))


@dataclass(frozen=True)
class Frame:
    """One video frame: ``(3, H, W)`` float64 planar RGB, samples in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = _as_float64(self.data)
        if data.ndim != 3 or data.shape[0] != 3:
            raise PipelineError("bad-frame", f"expected (3, H, W), got {data.shape}")
        if data.shape[1] < MIN_FRAME_SIDE or data.shape[2] < MIN_FRAME_SIDE:
            raise PipelineError("bad-frame", f"frame smaller than {MIN_FRAME_SIDE}px: {data.shape}")
        if not np.isfinite(data).all():
            raise PipelineError("bad-frame", "non-finite sample")
        if data.min() < 0.0 or data.max() > 1.0:
            raise PipelineError("bad-frame", "samples outside [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class FeatureStack:
    """Labelled channel stack ``(C, H, W)``; one label per channel."""

    data: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        data = _as_float64(self.data)
        labels = tuple(self.labels)
        if data.ndim != 3:
            raise PipelineError("bad-stack", f"expected (C, H, W), got {data.shape}")
        if len(labels) != data.shape[0]:
            raise PipelineError("bad-stack", f"{len(labels)} labels for {data.shape[0]} channels")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class Kernel2D:
    """Square odd-sized filter taps, applied as printed (cross-correlation)."""

    taps: np.ndarray

    def __post_init__(self):
        taps = _as_float64(self.taps)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1]:
            raise PipelineError("bad-kernel", f"taps must be square, got {taps.shape}")
        if taps.shape[0] < 3 or taps.shape[0] % 2 == 0:
            raise PipelineError("bad-kernel", f"size must be odd and >= 3, got {taps.shape[0]}")
        object.__setattr__(self, "taps", taps)

    @property
    def size(self) -> int:
        return self.taps.shape[0]


def mirror_indices(n: int, start: int, stop: int) -> np.ndarray:
    """Indices ``start..stop-1`` folded into ``[0, n)`` by edge-excluding reflection.

    The fold has period ``2n - 2`` (the edge sample is not repeated), so the
    mapping is valid for arbitrarily wide ranges, not just one kernel radius.
    """
    if n == 1:
        return np.zeros(stop - start, dtype=np.intp)
    period = 2 * n - 2
    idx = np.arange(start, stop, dtype=np.intp) % period
    return np.where(idx < n, idx, period - idx)


def mirror_pad_to_multiple(channel: np.ndarray, block: int) -> np.ndarray:
    """Reflect-extend a 2-D channel on the bottom/right to multiples of ``block``."""
    h, w = channel.shape
    hp = -(-h // block) * block
    wp = -(-w // block) * block
    rows = mirror_indices(h, 0, hp)
    cols = mirror_indices(w, 0, wp)
    return channel[np.ix_(rows, cols)]


def apply_kernel_bank(data: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Cross-correlate every channel of ``data`` with every kernel in one pass.

    ``data`` is ``(C, H, W)``, ``kernels`` is ``(K, k, k)`` with one shared odd
    size; returns ``(K, C, H, W)`` with reflect padding. The caller guarantees
    k <= H and k <= W.
    """
    k = kernels.shape[-1]
    pad = k // 2
    padded = np.pad(data, ((0, 0), (pad, pad), (pad, pad)), mode="reflect")
    win = sliding_window_view(padded, (k, k), axis=(1, 2))  # (C, H, W, k, k)
    out = np.tensordot(win, kernels, axes=([3, 4], [1, 2]))  # (C, H, W, K)
    return np.ascontiguousarray(np.moveaxis(out, 3, 0))


def conv2d_same(x: FeatureStack, kernel: Kernel2D) -> FeatureStack:
    """Per-channel same-size cross-correlation with reflect padding."""
    k = kernel.size
    if k > x.height or k > x.width:
        raise PipelineError(
            "kernel-exceeds-image",
            f"kernel {k}x{k} does not fit {x.height}x{x.width}",
        )
    out = apply_kernel_bank(x.data, kernel.taps[np.newaxis])[0]
    return FeatureStack(out, x.labels)


def concat_channels(parts: "list[FeatureStack] | tuple[FeatureStack, ...]") -> FeatureStack:
    """Stack feature stacks along the channel axis; spatial dims must agree."""
    parts = list(parts)
    if not parts:
        raise PipelineError("empty-input", "nothing to concatenate")
    shape = parts[0].data.shape[1:]
    for p in parts[1:]:
        if p.data.shape[1:] != shape:
            raise PipelineError("shape-mismatch", f"{p.data.shape[1:]} vs {shape}")
    data = np.concatenate([p.data for p in parts], axis=0)
    labels = tuple(label for p in parts for label in p.labels)
    return FeatureStack(data, labels)


def affine_map_to_unit(data: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Clamp ``data`` to [lo, hi] and map that interval onto [0, 1]."""
    if not (lo < hi):
        raise PipelineError("bad-range", f"need lo < hi, got [{lo}, {hi}]")
    return (np.clip(data, lo, hi) - lo) / (hi - lo)


def affine_to_unit(x: FeatureStack, lo: float, hi: float) -> FeatureStack:
    """Channel-wise clamp to [lo, hi] followed by the affine map onto [0, 1]."""
    return FeatureStack(affine_map_to_unit(x.data, lo, hi), x.labels)


def luminance(f: Frame) -> FeatureStack:
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B, one channel in [0, 1]."""
    w = np.asarray(LUMA_WEIGHTS, dtype=np.float64)
    luma = np.tensordot(w, f.data, axes=(0, 0))
    return FeatureStack(luma[np.newaxis], ("luma",))


def rgb_stack(f: Frame) -> FeatureStack:
    """The frame itself as a labelled three-channel stack."""
    return FeatureStack(f.data, RGB_LABELS)
