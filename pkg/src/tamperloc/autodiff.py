"""Minimal reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps a float64 array. Every primitive op records its parents and
a closure that routes the output gradient back to them; ``backward`` replays
the tape in reverse topological order. Gradients are only materialised for
tensors that require them (directly or through a parent), so feeding constant
inputs is cheap.

The op set is deliberately small: exactly what the fusion network needs.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import PipelineError

LAYER_NORM_EPS = 1e-12


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={'yes' if self.grad is not None else 'no'})"


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    needs = any(p.requires_grad for p in parents)
    out.requires_grad = needs
    if needs:
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def _accumulate(t: Tensor, grad: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += grad


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def backward(root: Tensor):
    """Accumulate d(root)/d(leaf) into ``grad`` of every grad-requiring leaf.

    ``root`` must be the output of recorded ops; calling this on a bare leaf
    means no forward pass was taped.
    """
    if root._backward_fn is None:
        raise PipelineError("no-tape", "tensor was not produced by recorded operations")

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))

    root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn(node.grad)


def _coerce(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)

    def back(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(a.data + b.data, (a, b), back)


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)

    def back(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    return _make(a.data * b.data, (a, b), back)


def neg(a) -> Tensor:
    a = _coerce(a)

    def back(g):
        _accumulate(a, -g)

    return _make(-a.data, (a,), back)


def matmul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)

    def back(g):
        _accumulate(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape))
        _accumulate(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape))

    return _make(a.data @ b.data, (a, b), back)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0.0

    def back(g):
        _accumulate(x, g * mask)

    return _make(np.where(mask, x.data, 0.0), (x,), back)


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    y = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))

    def back(g):
        _accumulate(x, g * y * (1.0 - y))

    return _make(y, (x,), back)


def log(x: Tensor) -> Tensor:
    def back(g):
        _accumulate(x, g / x.data)

    return _make(np.log(x.data), (x,), back)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    inside = (x.data > lo) & (x.data < hi)

    def back(g):
        _accumulate(x, g * inside)

    return _make(np.clip(x.data, lo, hi), (x,), back)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        inner = (g * y).sum(axis=axis, keepdims=True)
        _accumulate(x, y * (g - inner))

    return _make(y, (x,), back)


def layer_norm(x: Tensor, axis: int = -1, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalise to zero mean / unit variance along ``axis`` (no affine part)."""
    mu = x.data.mean(axis=axis, keepdims=True)
    xc = x.data - mu
    var = (xc**2).mean(axis=axis, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    y = xc * inv

    def back(g):
        gm = g.mean(axis=axis, keepdims=True)
        gy = (g * y).mean(axis=axis, keepdims=True)
        _accumulate(x, inv * (g - gm - y * gy))

    return _make(y, (x,), back)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size

    def back(g):
        _accumulate(x, np.full(x.data.shape, float(g) / n))

    return _make(np.asarray(x.data.mean()), (x,), back)


def reshape(x: Tensor, shape) -> Tensor:
    old = x.data.shape

    def back(g):
        _accumulate(x, g.reshape(old))

    return _make(x.data.reshape(shape), (x,), back)


def transpose(x: Tensor, axes) -> Tensor:
    inverse = np.argsort(axes)

    def back(g):
        _accumulate(x, g.transpose(inverse))

    return _make(x.data.transpose(axes), (x,), back)


def concat(parts: list[Tensor], axis: int = 0) -> Tensor:
    parts = [_coerce(p) for p in parts]
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def back(g):
        for p, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, stop)
            _accumulate(p, g[tuple(sl)])

    return _make(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), back)


def conv2d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, pad: int = 0, pad_mode: str = "zero") -> Tensor:
    """2-D convolution-as-correlation: x (Cin, H, W), w (Cout, Cin, kh, kw), b (Cout,).

    ``pad_mode`` is "zero" for training and "wrap" for the periodic test
    harness used to probe translation consistency.
    """
    if pad_mode not in ("zero", "wrap"):
        raise PipelineError("bad-pad-mode", pad_mode)
    xd, wd = x.data, w.data
    cout, cin, kh, kw = wd.shape
    if xd.ndim != 3 or xd.shape[0] != cin:
        raise PipelineError("shape-mismatch", f"conv input {xd.shape} vs weight {wd.shape}")

    if pad:
        mode = "constant" if pad_mode == "zero" else "wrap"
        padded = np.pad(xd, ((0, 0), (pad, pad), (pad, pad)), mode=mode)
    else:
        padded = xd
    hp, wp = padded.shape[1:]
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1

    win = sliding_window_view(padded, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    cols = np.ascontiguousarray(win.transpose(1, 2, 0, 3, 4)).reshape(ho * wo, cin * kh * kw)
    wmat = wd.reshape(cout, -1)
    out = (cols @ wmat.T + b.data).T.reshape(cout, ho, wo)

    def back(g):
        gmat = g.reshape(cout, -1).T  # (ho*wo, cout)
        _accumulate(w, (gmat.T @ cols).reshape(wd.shape))
        _accumulate(b, gmat.sum(axis=0))
        if not x.requires_grad:
            return
        dcols = (gmat @ wmat).reshape(ho, wo, cin, kh, kw)
        dpad = np.zeros_like(padded)
        for u in range(kh):
            for v in range(kw):
                dpad[:, u : u + stride * ho : stride, v : v + stride * wo : stride] += dcols[
                    :, :, :, u, v
                ].transpose(2, 0, 1)
        if pad == 0:
            _accumulate(x, dpad)
        elif pad_mode == "zero":
            _accumulate(x, dpad[:, pad:-pad, pad:-pad])
        else:  # fold wrapped borders back onto the image
            h, wdt = xd.shape[1:]
            rows = (np.arange(hp) - pad) % h
            colsix = (np.arange(wp) - pad) % wdt
            dx = np.zeros_like(xd)
            np.add.at(dx, (slice(None), rows[:, None], colsix[None, :]), dpad)
            _accumulate(x, dx)

    return _make(out, (x, w, b), back)


def avg_pool2(x: Tensor) -> Tensor:
    """2x2 average pooling with stride 2; spatial dims must be even."""
    c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise PipelineError("shape-mismatch", f"avg_pool2 needs even dims, got {h}x{w}")
    y = x.data.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))

    def back(g):
        _accumulate(x, np.repeat(np.repeat(g, 2, axis=1), 2, axis=2) * 0.25)

    return _make(y, (x,), back)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    def back(g):
        c, h, w = x.data.shape
        _accumulate(x, g.reshape(c, h, factor, w, factor).sum(axis=(2, 4)))

    return _make(np.repeat(np.repeat(x.data, factor, axis=1), factor, axis=2), (x,), back)
