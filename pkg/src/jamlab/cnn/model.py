"""The two-conv / two-dense detector network.

Fixed layer sequence: conv -> BN -> ReLU -> conv -> BN -> ReLU -> flatten ->
dense -> ReLU -> dropout -> dense -> softmax. Kernels and dense weights are
initialized from a fan-in scaled uniform distribution, biases at zero.
Training math runs in the dtype the model was built with (float32 normally,
float64 for gradient checking).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError, StateError
from . import layers


@dataclass(frozen=True)
class CnnArchitecture:
    conv1_filters: int = 32
    conv2_filters: int = 16
    kernel: int = 3
    fc1_units: int = 96
    n_classes: int = 2
    dropout_rate: float = 0.5
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5


# Flattening order for gradients, optimizer moments and checkpoints.
PARAM_KEYS = (
    "conv1_w", "conv1_b", "bn1_gamma", "bn1_beta",
    "conv2_w", "conv2_b", "bn2_gamma", "bn2_beta",
    "fc1_w", "fc1_b", "fc2_w", "fc2_b",
)
BN_STATE_KEYS = ("bn1_mean", "bn1_var", "bn2_mean", "bn2_var")


def _uniform(rng, shape, fan_in, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class DetectorModel:
    """Parameters plus the forward/backward machinery for one input shape."""

    def __init__(self, input_shape, arch: CnnArchitecture = CnnArchitecture(),
                 seed: int = 0, dtype=np.float32):
        if len(input_shape) != 3:
            raise ShapeError(f"input shape must be (T, F, C), got {input_shape}")
        self.input_shape = tuple(int(s) for s in input_shape)
        self.arch = arch
        self.dtype = np.dtype(dtype)
        t, f, c = self.input_shape
        k = arch.kernel
        n1, n2 = arch.conv1_filters, arch.conv2_filters
        self.flat_dim = t * f * n2

        rng = np.random.default_rng(seed)
        dt = self.dtype
        self.params = {
            "conv1_w": _uniform(rng, (k, k, c, n1), k * k * c, dt),
            "conv1_b": np.zeros(n1, dtype=dt),
            "bn1_gamma": np.ones(n1, dtype=dt),
            "bn1_beta": np.zeros(n1, dtype=dt),
            "conv2_w": _uniform(rng, (k, k, n1, n2), k * k * n1, dt),
            "conv2_b": np.zeros(n2, dtype=dt),
            "bn2_gamma": np.ones(n2, dtype=dt),
            "bn2_beta": np.zeros(n2, dtype=dt),
            "fc1_w": _uniform(rng, (self.flat_dim, arch.fc1_units), self.flat_dim, dt),
            "fc1_b": np.zeros(arch.fc1_units, dtype=dt),
            "fc2_w": _uniform(rng, (arch.fc1_units, arch.n_classes), arch.fc1_units, dt),
            "fc2_b": np.zeros(arch.n_classes, dtype=dt),
        }
        self.bn_state = {
            "bn1_mean": np.zeros(n1, dtype=dt),
            "bn1_var": np.ones(n1, dtype=dt),
            "bn2_mean": np.zeros(n2, dtype=dt),
            "bn2_var": np.ones(n2, dtype=dt),
        }
        self._cache = None

    def n_parameters(self) -> int:
        return sum(self.params[k].size for k in PARAM_KEYS)

    def forward(self, x, train: bool, rng=None) -> np.ndarray:
        """Class probabilities for a batch; train mode records the backward cache."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4 or x.shape[1:] != self.input_shape:
            raise ShapeError(f"batch shape {x.shape} does not match input {self.input_shape}")
        p = self.params
        a = self.arch

        h1, c_conv1 = layers.conv2d_forward(x, p["conv1_w"], p["conv1_b"])
        h1, c_bn1 = layers.batchnorm_forward(
            h1, p["bn1_gamma"], p["bn1_beta"],
            self.bn_state["bn1_mean"], self.bn_state["bn1_var"],
            train, a.bn_momentum, a.bn_eps,
        )
        h1, c_relu1 = layers.relu_forward(h1)

        h2, c_conv2 = layers.conv2d_forward(h1, p["conv2_w"], p["conv2_b"])
        del h1
        h2, c_bn2 = layers.batchnorm_forward(
            h2, p["bn2_gamma"], p["bn2_beta"],
            self.bn_state["bn2_mean"], self.bn_state["bn2_var"],
            train, a.bn_momentum, a.bn_eps,
        )
        h2, c_relu2 = layers.relu_forward(h2)
        conv_shape = h2.shape

        flat = h2.reshape(x.shape[0], self.flat_dim)
        f1, c_fc1 = layers.dense_forward(flat, p["fc1_w"], p["fc1_b"])
        f1, c_relu3 = layers.relu_forward(f1)
        f1, c_drop = layers.dropout_forward(f1, a.dropout_rate, train, rng)
        logits, c_fc2 = layers.dense_forward(f1, p["fc2_w"], p["fc2_b"])
        probs = layers.softmax(logits)

        if train:
            self._cache = {
                "probs": probs,
                "conv_shape": conv_shape,
                "c_conv1": c_conv1, "c_bn1": c_bn1, "c_relu1": c_relu1,
                "c_conv2": c_conv2, "c_bn2": c_bn2, "c_relu2": c_relu2,
                "c_fc1": c_fc1, "c_relu3": c_relu3, "c_drop": c_drop,
                "c_fc2": c_fc2,
            }
        else:
            self._cache = None
        return probs

    def loss(self, probs, onehot) -> float:
        return layers.cross_entropy(probs, np.asarray(onehot, dtype=self.dtype))

    def backward(self, onehot) -> dict:
        """Gradients of the mean cross-entropy w.r.t. every parameter."""
        if self._cache is None:
            raise StateError("backward called without a recorded train-mode forward")
        c = self._cache
        onehot = np.asarray(onehot, dtype=self.dtype)
        grads = {}

        dlogits = layers.softmax_cross_entropy_backward(c["probs"], onehot)
        df1, grads["fc2_w"], grads["fc2_b"] = layers.dense_backward(dlogits, c["c_fc2"])
        df1 = layers.dropout_backward(df1, c["c_drop"])
        df1 = layers.relu_backward(df1, c["c_relu3"])
        dflat, grads["fc1_w"], grads["fc1_b"] = layers.dense_backward(df1, c["c_fc1"])

        dh2 = dflat.reshape(c["conv_shape"])
        dh2 = layers.relu_backward(dh2, c["c_relu2"])
        dh2, grads["bn2_gamma"], grads["bn2_beta"] = layers.batchnorm_backward(dh2, c["c_bn2"])
        dh1, grads["conv2_w"], grads["conv2_b"] = layers.conv2d_backward(dh2, c["c_conv2"])
        del dh2

        dh1 = layers.relu_backward(dh1, c["c_relu1"])
        dh1, grads["bn1_gamma"], grads["bn1_beta"] = layers.batchnorm_backward(dh1, c["c_bn1"])
        _, grads["conv1_w"], grads["conv1_b"] = layers.conv2d_backward(
            dh1, c["c_conv1"], need_dx=False
        )
        self._cache = None
        return grads

    def predict(self, x, batch_size: int = 64) -> np.ndarray:
        """Eval-mode class decisions, batched to bound memory."""
        out = np.empty(len(x), dtype=np.int64)
        for b0 in range(0, len(x), batch_size):
            probs = self.forward(np.asarray(x[b0:b0 + batch_size]), train=False)
            out[b0:b0 + len(probs)] = probs.argmax(axis=1)
        return out
