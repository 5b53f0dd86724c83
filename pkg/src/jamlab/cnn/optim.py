"""Adam with bias correction, moments kept per parameter tensor."""

from dataclasses import dataclass

import numpy as np

from .model import PARAM_KEYS, DetectorModel


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8


class AdamState:
    """First/second moment tensors mirroring the model parameters, plus the step count."""

    def __init__(self, model: DetectorModel):
        self.m = {k: np.zeros_like(model.params[k]) for k in PARAM_KEYS}
        self.v = {k: np.zeros_like(model.params[k]) for k in PARAM_KEYS}
        self.t = 0


def adam_step(model: DetectorModel, grads: dict, state: AdamState,
              hyper: AdamHyper = AdamHyper()) -> None:
    """One in-place update of every parameter from its gradient."""
    state.t += 1
    b1, b2 = hyper.beta1, hyper.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    # lr * (m/bias1) / (sqrt(v/bias2) + eps), with the scalars hoisted so the
    # large moment tensors are touched a minimal number of times
    step_scale = hyper.lr / bias1
    denom_scale = 1.0 / np.sqrt(bias2)
    for key in PARAM_KEYS:
        g = grads[key]
        m = state.m[key]
        v = state.v[key]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        denom = np.sqrt(v)
        denom *= denom_scale
        denom += hyper.eps
        update = np.divide(m, denom, out=denom)
        update *= step_scale
        model.params[key] -= update.astype(model.params[key].dtype, copy=False)
