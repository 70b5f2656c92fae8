"""Normalization strategies for high-order moment channels.

Three interchangeable rescalings keep third and fourth moment channels in a
trainable range; all share a single epsilon guard so no division ever sees
a denominator below eps.

layer:  y = (x - mean(x)) / sqrt(var(x) + eps), statistics over the group
max:    y = x / (max|x| + eps), outputs bounded to [-1, 1]
batch:  per-channel statistics over batch and spatial positions, with
        running state updated at momentum 0.1 during training

Backward passes are analytic vector-Jacobian products. Layer and batch
norm use the full three-term Jacobian (the upstream, minus its group mean,
minus the normalized input times the group mean of upstream * normalized
input, all over sqrt(var + eps)). Max norm deliberately treats the divisor
as a constant: the true derivative is discontinuous at the argmax, so the
gradient flows through the numerator only (straight-through subgradient),
and that surrogate is what the gradient checks verify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EPS = 1e-5


def layer_norm(x: np.ndarray, eps: float = DEFAULT_EPS, axis=None) -> np.ndarray:
    """Standardize over the group axes (all elements when axis is None)."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=axis, keepdims=True)
    var = x.var(axis=axis, keepdims=True)
    return (x - mean) / np.sqrt(var + eps)


def layer_norm_backward(x: np.ndarray, upstream: np.ndarray,
                        eps: float = DEFAULT_EPS, axis=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    mean = x.mean(axis=axis, keepdims=True)
    var = x.var(axis=axis, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * inv
    return (u - u.mean(axis=axis, keepdims=True)
            - xhat * (u * xhat).mean(axis=axis, keepdims=True)) * inv


def max_norm(x: np.ndarray, eps: float = DEFAULT_EPS, axis=None) -> np.ndarray:
    """Scale the group by its peak magnitude; outputs lie in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    peak = np.abs(x).max(axis=axis, keepdims=True)
    return x / (peak + eps)


def max_norm_backward(x: np.ndarray, upstream: np.ndarray,
                      eps: float = DEFAULT_EPS, axis=None) -> np.ndarray:
    # straight-through on the divisor; see module docstring
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    peak = np.abs(x).max(axis=axis, keepdims=True)
    return u / (peak + eps)


@dataclass
class BatchNormState:
    """Running per-channel statistics; owned by a single training loop."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def fresh(cls, channels: int, momentum: float = 0.1) -> "BatchNormState":
        return cls(mean=np.zeros(channels), var=np.ones(channels),
                   momentum=momentum)


def _channel_axes(x: np.ndarray) -> tuple[int, ...]:
    return (0,) + tuple(range(2, x.ndim))


def batch_norm(x: np.ndarray, state: BatchNormState | None = None,
               training: bool = True, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Per-channel normalization of a (N, C, ...) block.

    Training mode normalizes by batch statistics (population variance over
    batch and spatial axes) and, when a state is supplied, folds them into
    the running estimates. Eval mode normalizes by the running state and
    requires one.
    """
    x = np.asarray(x, dtype=np.float64)
    if training:
        if x.shape[0] < 2:
            raise ValueError("batch normalization in training mode needs batch size >= 2")
        axes = _channel_axes(x)
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        if state is not None:
            m = state.momentum
            state.mean = (1.0 - m) * state.mean + m * mean
            state.var = (1.0 - m) * state.var + m * var
    else:
        if state is None:
            raise ValueError("eval-mode batch normalization needs running state")
        mean, var = state.mean, state.var
    shape = (1, -1) + (1,) * (x.ndim - 2)
    return (x - mean.reshape(shape)) / np.sqrt(var.reshape(shape) + eps)


def batch_norm_backward(x: np.ndarray, upstream: np.ndarray,
                        state: BatchNormState | None = None,
                        training: bool = True,
                        eps: float = DEFAULT_EPS) -> np.ndarray:
    """VJP of batch_norm; training mode differentiates through batch stats."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    shape = (1, -1) + (1,) * (x.ndim - 2)
    if not training:
        if state is None:
            raise ValueError("eval-mode batch normalization needs running state")
        return u / np.sqrt(state.var.reshape(shape) + eps)
    if x.shape[0] < 2:
        raise ValueError("batch normalization in training mode needs batch size >= 2")
    axes = _channel_axes(x)
    mean = x.mean(axis=axes, keepdims=True)
    var = x.var(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * inv
    return (u - u.mean(axis=axes, keepdims=True)
            - xhat * (u * xhat).mean(axis=axes, keepdims=True)) * inv


def norm_backward(kind: str, x: np.ndarray, upstream: np.ndarray,
                  eps: float = DEFAULT_EPS, axis=None,
                  state: BatchNormState | None = None,
                  training: bool = True) -> np.ndarray:
    """Dispatch the backward pass for a normalization kind."""
    if kind == "layer":
        return layer_norm_backward(x, upstream, eps=eps, axis=axis)
    if kind == "max":
        return max_norm_backward(x, upstream, eps=eps, axis=axis)
    if kind == "batch":
        return batch_norm_backward(x, upstream, state=state,
                                   training=training, eps=eps)
    raise ValueError(f"unknown normalization kind {kind!r}")
