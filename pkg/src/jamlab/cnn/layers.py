"""Layer primitives with explicit forward/backward passes.

Every forward returns (out, cache); the matching backward consumes the
upstream gradient and the cache and returns exact analytic gradients.
Convolutions are stride-1 with "same" zero padding, evaluated as one GEMM
per kernel offset against a contiguous shifted copy of the padded input;
on a single core this keeps every copy a long-run memcpy and every matrix
product a plain BLAS call, with no im2col buffer.
"""

import numpy as np


def _shifted(xp, ki, kj, h, wd):
    """Contiguous (B*H*W, C) copy of the padded input shifted by one offset."""
    cin = xp.shape[-1]
    return np.ascontiguousarray(xp[:, ki:ki + h, kj:kj + wd, :]).reshape(-1, cin)


def conv2d_forward(x, w, b):
    """Same-padded stride-1 convolution. x: (B,H,W,Cin), w: (kh,kw,Cin,Cout)."""
    kh, kw, cin, cout = w.shape
    bsz, h, wd, _ = x.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    out = np.empty((bsz * h * wd, cout), dtype=x.dtype)
    term = np.empty_like(out)
    for ki in range(kh):
        for kj in range(kw):
            xs = _shifted(xp, ki, kj, h, wd)
            if ki == 0 and kj == 0:
                np.matmul(xs, w[ki, kj], out=out)
            else:
                np.matmul(xs, w[ki, kj], out=term)
                out += term
    out = out.reshape(bsz, h, wd, cout)
    out += b
    return out, (xp, w, x.shape)


def conv2d_backward(dout, cache, need_dx=True):
    """Gradients for conv2d_forward; dx computation is skippable for the input layer."""
    xp, w, x_shape = cache
    kh, kw, cin, cout = w.shape
    bsz, h, wd, _ = x_shape
    ph, pw = kh // 2, kw // 2

    dflat = dout.reshape(bsz * h * wd, cout)
    dw = np.empty_like(w)
    dxp = np.zeros_like(xp) if need_dx else None
    dcol = np.empty((bsz * h * wd, cin), dtype=dout.dtype) if need_dx else None
    for ki in range(kh):
        for kj in range(kw):
            xs = _shifted(xp, ki, kj, h, wd)
            np.matmul(xs.T, dflat, out=dw[ki, kj])
            if need_dx:
                np.matmul(dflat, w[ki, kj].T, out=dcol)
                dxp[:, ki:ki + h, kj:kj + wd, :] += dcol.reshape(bsz, h, wd, cin)
    db = dout.sum(axis=(0, 1, 2))
    dx = np.ascontiguousarray(dxp[:, ph:ph + h, pw:pw + wd, :]) if need_dx else None
    return dx, dw, db


def batchnorm_forward(x, gamma, beta, running_mean, running_var, train,
                      momentum=0.9, eps=1e-5):
    """Per-channel normalization over all leading axes.

    Train mode normalizes with batch statistics and folds them into the
    running estimates in place; eval mode uses the running estimates.
    """
    axes = tuple(range(x.ndim - 1))
    if train:
        mu = x.mean(axis=axes)
        var = x.var(axis=axes)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x - mu) * inv_std
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
        cache = (xhat, gamma, inv_std)
    else:
        xhat = (x - running_mean) / np.sqrt(running_var + eps)
        cache = (xhat, gamma, None)
    return gamma * xhat + beta, cache


def batchnorm_backward(dout, cache):
    """Gradient through train-mode batch statistics (mean and variance)."""
    xhat, gamma, inv_std = cache
    axes = tuple(range(dout.ndim - 1))
    n = xhat.size // xhat.shape[-1]
    dgamma = (dout * xhat).sum(axis=axes)
    dbeta = dout.sum(axis=axes)
    dxhat = dout * gamma
    dx = (inv_std / n) * (
        n * dxhat - dxhat.sum(axis=axes) - xhat * (dxhat * xhat).sum(axis=axes)
    )
    return dx, dgamma, dbeta


def relu_forward(x):
    out = np.maximum(x, 0)
    return out, x > 0


def relu_backward(dout, mask):
    return dout * mask


def dropout_forward(x, rate, train, rng=None):
    """Inverted dropout: survivors are scaled by 1/keep so eval is the identity."""
    if not train or rate <= 0.0:
        return x, None
    rng = np.random.default_rng(rng)
    keep = 1.0 - rate
    mask = rng.random(x.shape) < keep
    return x * mask / keep, (mask, keep)


def dropout_backward(dout, cache):
    if cache is None:
        return dout
    mask, keep = cache
    return dout * mask / keep


def dense_forward(x, w, b):
    return x @ w + b, (x, w)


def dense_backward(dout, cache):
    x, w = cache
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs, onehot):
    """Mean categorical cross-entropy with the log clamped at 1e-12."""
    if probs.shape != onehot.shape:
        raise ValueError(f"probs {probs.shape} vs labels {onehot.shape}")
    return float(-(onehot * np.log(np.maximum(probs, 1e-12))).sum() / probs.shape[0])


def softmax_cross_entropy_backward(probs, onehot):
    """d(loss)/d(logits) for softmax followed by mean cross-entropy."""
    return (probs - onehot) / probs.shape[0]
