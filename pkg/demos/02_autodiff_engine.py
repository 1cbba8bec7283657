"""Tour of the reverse-mode tape: build a graph, differentiate it, verify.

Every operation records how to push gradients back to its inputs; calling
``backward()`` on a scalar walks the tape once in reverse topological order.
The finite-difference comparison at the end is the same technique the
``gradcheck`` command applies to the full network.
"""

import numpy as np
from numpy.random import default_rng

from tamperloc import autodiff as ad

rng = default_rng(0)

# a tiny logistic regression: y = sigmoid(W x + b)
W = ad.Tensor(rng.standard_normal((3, 5)), requires_grad=True)
x = ad.Tensor(rng.standard_normal((5, 1)))
b = ad.Tensor(rng.standard_normal((3, 1)), requires_grad=True)
y = ad.sigmoid(ad.add(ad.matmul(W, x), b))
loss = ad.mean_all(ad.mul(y, y))
ad.backward(loss)
print(f"loss = {loss.data:.6f}")
print(f"dloss/dW has shape {W.grad.shape}, dloss/db has shape {b.grad.shape}")

# central finite differences on one entry of W
eps = 1e-6
probe = (1, 2)


def loss_at(delta: float) -> float:
    shifted = W.data.copy()
    shifted[probe] += delta
    y2 = ad.sigmoid(ad.add(ad.matmul(ad.Tensor(shifted), x), b))
    return float(ad.mean_all(ad.mul(y2, y2)).data)


numeric = (loss_at(eps) - loss_at(-eps)) / (2 * eps)
analytic = W.grad[probe]
print(f"\nfinite difference at W{probe}: numeric {numeric:.10f}")
print(f"tape gradient at W{probe}:      {analytic:.10f}")
print(f"relative error: {abs(numeric - analytic) / abs(numeric):.2e}")

# the convolution op understands zero and wrap padding; with wrap padding a
# circular shift of the input circularly shifts the output
img = ad.Tensor(rng.uniform(size=(1, 8, 8)))
taps = ad.Tensor(rng.standard_normal((2, 1, 3, 3)))
bias = ad.Tensor(np.zeros(2))
out = ad.conv2d(img, taps, bias, stride=1, pad=1, pad_mode="wrap")
shifted_in = ad.Tensor(np.roll(img.data, (2, 3), axis=(1, 2)))
out_shifted = ad.conv2d(shifted_in, taps, bias, stride=1, pad=1, pad_mode="wrap")
drift = float(np.abs(np.roll(out.data, (2, 3), axis=(1, 2)) - out_shifted.data).max())
print(f"\nconv2d wrap padding: shift-then-convolve vs convolve-then-shift "
      f"differ by {drift:.2e}")
