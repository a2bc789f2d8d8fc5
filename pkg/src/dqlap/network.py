"""Dense feed-forward Q-network with exact gradients and Adam.

All parameters live in one contiguous float64 vector; ``weights[k]`` and
``biases[k]`` are views into it. That keeps the optimizer, copies and
checkpoints to single array operations.

Checkpoint format (all integers little-endian)::

    magic        8 bytes   b"DQLAPNET"
    version      uint16    currently 1
    n_layers     uint32
    slope        float64   LeakyReLU negative slope
    per layer    uint32 input_size, uint32 output_size, uint8 activation
                 (0 = leaky_relu, 1 = linear)
    parameters   float64 little-endian, per layer the weight matrix
                 (output_size x input_size, row-major) then the bias vector
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import _backend

DEFAULT_HIDDEN = (32, 32, 24, 24, 16, 8, 4)
LEAKY_SLOPE = 0.01

MAGIC = b"DQLAPNET"
FORMAT_VERSION = 1
_ACTIVATIONS = ("leaky_relu", "linear")


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    input_size: int
    output_size: int
    activation: str = "leaky_relu"

    def __post_init__(self):
        if self.input_size < 1 or self.output_size < 1:
            raise ValueError(f"layer sizes must be >= 1, got {self.input_size}x{self.output_size}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_params(self):
        return self.input_size * self.output_size + self.output_size


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        for name in ("beta1", "beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


def _sizes_of(layers):
    sizes = [layers[0].input_size]
    for k, spec in enumerate(layers):
        if spec.input_size != sizes[-1]:
            raise ValueError(f"layer {k} input {spec.input_size} does not chain with {sizes[-1]}")
        sizes.append(spec.output_size)
    for spec in layers[:-1]:
        if spec.activation != "leaky_relu":
            raise ValueError("hidden layers must use leaky_relu")
    if layers[-1].activation != "linear":
        raise ValueError("the head layer must be linear")
    return tuple(sizes)


class QNetwork:
    """LeakyReLU MLP with a linear head.

    ``backend`` selects the kernel implementation ("python" or "cython");
    None uses whatever was picked at import.
    """

    def __init__(self, layers, params=None, slope=LEAKY_SLOPE, backend=None):
        self.layers = tuple(layers)
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        self.sizes = _sizes_of(self.layers)
        self.slope = float(slope)
        self.n_params = sum(spec.n_params for spec in self.layers)
        if params is None:
            params = np.zeros(self.n_params)
        params = np.ascontiguousarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {params.shape}")
        self.params = params.copy()
        self._kernels = _backend.get(backend)
        self.backend = backend or _backend.name
        self.reset_optimizer()

    # parameter views -------------------------------------------------------
    def unflatten(self, flat):
        """Split a flat parameter-shaped vector into (weights, biases) lists of views."""
        weights, biases = [], []
        off = 0
        for spec in self.layers:
            n = spec.input_size * spec.output_size
            weights.append(flat[off:off + n].reshape(spec.output_size, spec.input_size))
            off += n
            biases.append(flat[off:off + spec.output_size])
            off += spec.output_size
        return weights, biases

    @property
    def weights(self):
        return self.unflatten(self.params)[0]

    @property
    def biases(self):
        return self.unflatten(self.params)[1]

    @property
    def input_dim(self):
        return self.sizes[0]

    @property
    def output_dim(self):
        return self.sizes[-1]

    def reset_optimizer(self):
        self.adam_m = np.zeros(self.n_params)
        self.adam_v = np.zeros(self.n_params)
        self.adam_t = 0

    # evaluation --------------------------------------------------------------
    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected input dimension {self.input_dim}, got shape {x.shape}")
        return np.ascontiguousarray(x), single

    def activations(self, x):
        """Forward pass on a (batch, input_dim) array keeping every layer's output."""
        x, _ = self._as_batch(x)
        return self._kernels.forward(self.params, self.sizes, x, self.slope)

    def forward(self, x):
        """Q-values for one input vector or a batch of them."""
        x, single = self._as_batch(x)
        out = self._kernels.forward(self.params, self.sizes, x, self.slope)[-1]
        return out[0] if single else out

    __call__ = forward

    def backward_from_activations(self, acts, grad_out):
        grad_out = np.ascontiguousarray(grad_out, dtype=np.float64)
        grad = np.empty(self.n_params)
        return self._kernels.backward(self.params, self.sizes, acts, grad_out, self.slope, grad)

    def backward_mse(self, x, target, mask=None):
        """Loss and flat gradient of the mean squared error over unmasked outputs.

        ``mask`` (same shape as the output, 0/1) restricts the loss to the
        selected entries; the mean is taken over the selected entries only.
        """
        x, single = self._as_batch(x)
        target = np.asarray(target, dtype=np.float64).reshape(x.shape[0], -1)
        if target.shape[1] != self.output_dim:
            raise ValueError(f"expected target dimension {self.output_dim}, got {target.shape[1]}")
        if mask is None:
            mask = np.ones_like(target)
        else:
            mask = np.asarray(mask, dtype=np.float64).reshape(target.shape)
        count = mask.sum()
        if count == 0:
            raise ValueError("mask selects no outputs")
        acts = self._kernels.forward(self.params, self.sizes, x, self.slope)
        err = (acts[-1] - target) * mask
        loss = float((err * err).sum() / count)
        grad = self.backward_from_activations(acts, 2.0 * err / count)
        return loss, grad

    # optimization ------------------------------------------------------------
    def adam_step(self, grad, config=AdamConfig()):
        grad = np.ascontiguousarray(grad, dtype=np.float64)
        if grad.shape != self.params.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match {self.params.shape}")
        self.adam_t += 1
        self._kernels.adam(self.params, grad, self.adam_m, self.adam_v, self.adam_t,
                           config.learning_rate, config.beta1, config.beta2, config.epsilon)
        return self

    # copies and checkpoints -------------------------------------------------
    def clone(self):
        """Copy of the architecture and weights with a fresh optimizer state."""
        return QNetwork(self.layers, self.params, self.slope, backend=self.backend)

    def copy_into(self, target):
        """Overwrite ``target``'s weights with ours; its optimizer state is untouched."""
        if target.layers != self.layers:
            raise ValueError("architecture mismatch")
        np.copyto(target.params, self.params)
        return target

    def to_bytes(self):
        head = [MAGIC, struct.pack("<HId", FORMAT_VERSION, len(self.layers), self.slope)]
        for spec in self.layers:
            head.append(struct.pack("<IIB", spec.input_size, spec.output_size,
                                    _ACTIVATIONS.index(spec.activation)))
        return b"".join(head) + self.params.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, payload, backend=None):
        payload = bytes(payload)
        if payload[:8] != MAGIC:
            raise CheckpointError("not a dqlap network checkpoint (bad magic)")
        try:
            version, n_layers, slope = struct.unpack_from("<HId", payload, 8)
        except struct.error as exc:
            raise CheckpointError("truncated checkpoint header") from exc
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        off = 8 + struct.calcsize("<HId")
        layers = []
        try:
            for _ in range(n_layers):
                n_in, n_out, act = struct.unpack_from("<IIB", payload, off)
                off += struct.calcsize("<IIB")
                if act >= len(_ACTIVATIONS):
                    raise CheckpointError(f"unknown activation code {act}")
                layers.append(LayerSpec(n_in, n_out, _ACTIVATIONS[act]))
        except struct.error as exc:
            raise CheckpointError("truncated checkpoint layer table") from exc
        n_params = sum(spec.n_params for spec in layers)
        body = payload[off:]
        if len(body) != 8 * n_params:
            raise CheckpointError(f"expected {8 * n_params} parameter bytes, found {len(body)}")
        params = np.frombuffer(body, dtype="<f8").astype(np.float64)
        try:
            return cls(layers, params, slope, backend=backend)
        except ValueError as exc:
            raise CheckpointError(f"invalid checkpoint: {exc}") from exc

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path, backend=None):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), backend=backend)

    def __repr__(self):
        return f"QNetwork(sizes={self.sizes}, params={self.n_params}, backend={self.backend!r})"


def build(input_dim, hidden=DEFAULT_HIDDEN, output_dim=2, seed=0, slope=LEAKY_SLOPE, backend=None):
    """Create a network with Glorot-uniform weights and zero biases."""
    sizes = [input_dim, *hidden, output_dim]
    if any(int(s) < 1 for s in sizes):
        raise ValueError(f"all layer sizes must be >= 1, got {sizes}")
    layers = [
        LayerSpec(int(sizes[k]), int(sizes[k + 1]),
                  "linear" if k == len(sizes) - 2 else "leaky_relu")
        for k in range(len(sizes) - 1)
    ]
    net = QNetwork(layers, slope=slope, backend=backend)
    rng = np.random.default_rng(seed)
    for w in net.weights:
        limit = np.sqrt(6.0 / (w.shape[0] + w.shape[1]))
        w[...] = rng.uniform(-limit, limit, size=w.shape)
    return net


def count_params(input_dim, hidden, output_dim):
    sizes = [input_dim, *hidden, output_dim]
    return sum(sizes[k] * sizes[k + 1] + sizes[k + 1] for k in range(len(sizes) - 1))
