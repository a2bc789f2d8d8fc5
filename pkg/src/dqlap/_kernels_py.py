"""Pure numpy implementation of the dense-network kernels.

Every kernel works on a flat float64 parameter vector. Layer ``k`` stores its
weight matrix (row-major, ``sizes[k+1] x sizes[k]``) followed by its bias
vector, layers back to back. Hidden layers use LeakyReLU, the last layer is
linear.
"""

import numpy as np


def _views(params, sizes):
    out = []
    off = 0
    for k in range(len(sizes) - 1):
        n_in, n_out = sizes[k], sizes[k + 1]
        w = params[off:off + n_in * n_out].reshape(n_out, n_in)
        off += n_in * n_out
        b = params[off:off + n_out]
        off += n_out
        out.append((w, b))
    return out


def forward(params, sizes, x, slope):
    """Return the activations of every layer, input first, output last."""
    acts = [x]
    layers = _views(params, sizes)
    last = len(layers) - 1
    a = x
    for k, (w, b) in enumerate(layers):
        z = a @ w.T
        z += b
        if k != last:
            z = np.maximum(z, slope * z)
        acts.append(z)
        a = z
    return acts


def backward(params, sizes, acts, grad_out, slope, grad):
    """Accumulate parameter gradients into ``grad`` (overwritten).

    ``grad_out`` is dLoss/dOutput with shape (batch, sizes[-1]).
    """
    layers = _views(params, sizes)
    grads = _views(grad, sizes)
    delta = grad_out
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        gw, gb = grads[k]
        a_in = acts[k]
        np.matmul(delta.T, a_in, out=gw)
        np.sum(delta, axis=0, out=gb)
        if k > 0:
            delta = delta @ w
            delta[a_in < 0.0] *= slope
    return grad


def adam(params, grad, m, v, t, lr, beta1, beta2, eps):
    """One in-place Adam update with bias correction; ``t`` is the new step count."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    step = lr / (1.0 - beta1 ** t)
    denom = np.sqrt(v / (1.0 - beta2 ** t))
    denom += eps
    params -= step * m / denom
