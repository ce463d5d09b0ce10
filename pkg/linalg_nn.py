#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: linalg_nn.py
"""
Feed-forward ReLU network with analytic gradients and an Adam optimizer.

The network always has two hidden layers: d_in -> p1 -> p2 -> d_out, ReLU on
the hidden layers and a linear output. Parameters are kept in the order
[W1, b1, W2, b2, W3, b3]; gradients and optimizer moments use the same order.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np

from utils import ArgumentError, ConfigurationError, DimensionError, as_matrix

STD_FLOOR = 1e-8


@dataclass
class VelocityNet:
    """
    Trained MLP parameters plus the input normalization they were fit under.

    `norm_mean` / `norm_std` standardize the (side, cond) input columns; the
    leading time column is fed raw.
    """

    layer_dims: Tuple[int, int, int, int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    norm_mean: np.ndarray = field(default=None)
    norm_std: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        n_feat = self.layer_dims[0] - 1
        if self.norm_mean is None:
            self.norm_mean = np.zeros(n_feat)
        if self.norm_std is None:
            self.norm_std = np.ones(n_feat)
        # constant columns are centered only
        std = np.asarray(self.norm_std, dtype=np.float64)
        self.norm_std = np.where(std < STD_FLOOR, 1.0, std)

    @property
    def d_in(self) -> int:
        return self.layer_dims[0]

    @property
    def d_out(self) -> int:
        return self.layer_dims[-1]

    def params(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def with_params(self, params: Sequence[np.ndarray]) -> "VelocityNet":
        """Same architecture and normalization, new [W1, b1, ...] values."""
        return replace(
            self,
            weights=[np.asarray(p) for p in params[0::2]],
            biases=[np.asarray(p) for p in params[1::2]],
        )

    def n_params(self) -> int:
        return int(sum(p.size for p in self.params()))


@dataclass
class OptState:
    """Adam moment accumulators mirroring the parameter list."""

    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def _check_layer_dims(layer_dims: Sequence[int]) -> Tuple[int, int, int, int]:
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) != 4:
        raise ConfigurationError(
            f"layer_dims needs exactly 4 entries [d_in, p1, p2, d_out], got {len(dims)}"
        )
    if min(dims) < 1:
        raise ConfigurationError(f"layer_dims entries must be >= 1, got {list(dims)}")
    return dims


def mlp_init(layer_dims: Sequence[int], seed: int) -> VelocityNet:
    """
    Build a network with He-scaled Gaussian weights and zero biases.

    Parameters
    - layer_dims: [d_in, p1, p2, d_out].
    - seed: integer seed; the same seed gives bit-identical parameters.
    """
    dims = _check_layer_dims(layer_dims)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros((1, fan_out)))
    return VelocityNet(layer_dims=dims, weights=weights, biases=biases)


def _forward_cache(net: VelocityNet, inputs: np.ndarray):
    # keep pre-activations for the backward pass
    w1, w2, w3 = net.weights
    b1, b2, b3 = net.biases
    z1 = inputs @ w1 + b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ w2 + b2
    a2 = np.maximum(z2, 0.0)
    out = a2 @ w3 + b3
    return out, (inputs, z1, a1, z2, a2)


def _check_inputs(net: VelocityNet, inputs) -> np.ndarray:
    arr = as_matrix(inputs, "inputs", error=DimensionError)
    if arr.shape[1] != net.d_in:
        raise DimensionError(
            f"inputs have {arr.shape[1]} columns, network expects {net.d_in}"
        )
    return arr


def mlp_forward(net: VelocityNet, inputs) -> np.ndarray:
    """Evaluate the network on a batch; returns shape (rows, d_out)."""
    arr = _check_inputs(net, inputs)
    out, _ = _forward_cache(net, arr)
    return out


def mlp_loss_grad(net: VelocityNet, inputs, targets) -> Tuple[float, List[np.ndarray]]:
    """
    Mean squared-error loss and its exact gradients.

    loss = (1/rows) * sum_i ||net(inputs_i) - targets_i||^2

    Returns
    - (loss, grads) with grads ordered like `net.params()`.
    """
    arr = _check_inputs(net, inputs)
    tgt = as_matrix(targets, "targets", error=DimensionError)
    if arr.shape[0] == 0:
        raise ArgumentError("empty batch")
    if tgt.shape != (arr.shape[0], net.d_out):
        raise DimensionError(
            f"targets shape {tgt.shape} does not match ({arr.shape[0]}, {net.d_out})"
        )

    out, (x, z1, a1, z2, a2) = _forward_cache(net, arr)
    resid = out - tgt
    rows = arr.shape[0]
    loss = float(np.sum(resid**2) / rows)

    w1, w2, w3 = net.weights
    d_out = 2.0 * resid / rows
    d_w3 = a2.T @ d_out
    d_b3 = d_out.sum(axis=0, keepdims=True)
    d_z2 = (d_out @ w3.T) * (z2 > 0)
    d_w2 = a1.T @ d_z2
    d_b2 = d_z2.sum(axis=0, keepdims=True)
    d_z1 = (d_z2 @ w2.T) * (z1 > 0)
    d_w1 = x.T @ d_z1
    d_b1 = d_z1.sum(axis=0, keepdims=True)
    return loss, [d_w1, d_b1, d_w2, d_b2, d_w3, d_b3]


def opt_init(
    net: VelocityNet,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> OptState:
    """Zeroed Adam state shaped like the network parameters."""
    zeros = [np.zeros_like(p) for p in net.params()]
    return OptState(
        m=zeros,
        v=[np.zeros_like(p) for p in zeros],
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def opt_step(
    state: OptState, net: VelocityNet, grads: Sequence[np.ndarray]
) -> Tuple[OptState, VelocityNet]:
    """One bias-corrected Adam update; returns the new (state, net)."""
    params = net.params()
    if len(grads) != len(params):
        raise DimensionError(f"expected {len(params)} gradients, got {len(grads)}")
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**step
    corr2 = 1.0 - b2**step
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        update = state.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.eps)
        new_m.append(m)
        new_v.append(v)
        new_p.append(p - update)
    new_state = replace(state, m=new_m, v=new_v, step=step)
    return new_state, net.with_params(new_p)
