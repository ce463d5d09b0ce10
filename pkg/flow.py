#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: flow.py
"""
Conditional rectified flows: flow-matching training and ODE transport.

A velocity field is anything callable as f(t, x, z) -> dx/dt on row batches
(x of shape (n, d_side), z of shape (n, d_z)). A trained VelocityNet is
wrapped into such a callable by `as_velocity_field`; the closed-form oracle
fields in oracle.py are already callables.

Time runs from t = 0 (Gaussian reference) to t = 1 (data). The reverse pass
maps a data point to its latent (xi or eta); the forward pass maps noise to
a sample of the conditional law.
"""
from __future__ import annotations

__author__ = "FlowCIT Lab contributors"
__version__ = ": 1.0 $"
__date__ = "10/19/26"
__copyright__ = "Copyright (c) 2026"
__license__ = "Python"

import logging
import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Tuple, Union

import numpy as np

from linalg_nn import (
    STD_FLOOR,
    VelocityNet,
    mlp_forward,
    mlp_init,
    mlp_loss_grad,
    opt_init,
    opt_step,
)
from utils import (
    ArgumentError,
    ConfigurationError,
    DataError,
    DataTriplet,
    DimensionError,
    NumericError,
    as_matrix,
    derive_rng,
    derive_seed,
)


logger = logging.getLogger(__name__)

VelocityField = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FlowConfig:
    """Training and integration settings for one velocity field."""

    hidden_width: int = 32
    ode_steps: int = 100
    epochs: int = 200
    batch_size: int = 128
    learning_rate: float = 1e-3
    min_steps: int = 4000
    final_lr_fraction: float = 0.1
    resample_noise_each_epoch: bool = True
    seed: int = 0

    def validate(self) -> "FlowConfig":
        if self.hidden_width < 2 or self.hidden_width % 2:
            raise ConfigurationError(
                f"hidden_width must be even and >= 2, got {self.hidden_width}"
            )
        if self.ode_steps < 1:
            raise ConfigurationError(f"ode_steps must be >= 1, got {self.ode_steps}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigurationError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if self.min_steps < 0:
            raise ConfigurationError(f"min_steps must be >= 0, got {self.min_steps}")
        if not 0 < self.final_lr_fraction <= 1:
            raise ConfigurationError(
                f"final_lr_fraction must be in (0, 1], got {self.final_lr_fraction}"
            )
        return self

    def epochs_for(self, n: int) -> int:
        """Epochs actually run on n rows: at least `epochs`, and enough for `min_steps` updates."""
        per_epoch = math.ceil(n / self.batch_size)
        return max(self.epochs, math.ceil(self.min_steps / per_epoch))

    def lr_at(self, step: int, total: int) -> float:
        """Cosine decay from learning_rate to learning_rate * final_lr_fraction."""
        floor = self.learning_rate * self.final_lr_fraction
        frac = step / max(total - 1, 1)
        return floor + 0.5 * (self.learning_rate - floor) * (1.0 + math.cos(math.pi * frac))

    def layer_dims(self, d_side: int, d_cond: int) -> Tuple[int, int, int, int]:
        return (1 + d_side + d_cond, self.hidden_width, self.hidden_width // 2, d_side)


@dataclass
class TransportOutput:
    """Estimated latents of the test fold: xi_hat (n2, d_x), eta_hat (n2, d_y)."""

    xi_hat: np.ndarray
    eta_hat: np.ndarray


def _check_pair(side, cond, error: type = DataError) -> Tuple[np.ndarray, np.ndarray]:
    side = as_matrix(side, "side data", error=error)
    cond = as_matrix(cond, "condition data", error=error)
    if side.shape[0] != cond.shape[0]:
        raise DimensionError(
            f"side data has {side.shape[0]} rows, condition data {cond.shape[0]}"
        )
    return side, cond


def _net_inputs(net: VelocityNet, times, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    # [t | standardized x | standardized z]
    t_col = np.broadcast_to(np.asarray(times, dtype=np.float64).reshape(-1, 1), (x.shape[0], 1))
    feats = (np.hstack([x, z]) - net.norm_mean) / net.norm_std
    return np.hstack([t_col, feats])


def evaluate_velocity(net: VelocityNet, t, x, z) -> np.ndarray:
    """
    The network as a velocity field in original coordinates.

    Parameters
    - t: scalar time or a column of per-row times.
    - x: side-variable rows, shape (n, d_out).
    - z: condition rows, shape (n, d_in - 1 - d_out).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if x.shape[1] + z.shape[1] + 1 != net.d_in:
        raise DimensionError(
            f"x ({x.shape[1]} cols) and z ({z.shape[1]} cols) do not fit a network "
            f"with {net.d_in} inputs"
        )
    return mlp_forward(net, _net_inputs(net, t, x, z))


def as_velocity_field(field: Union[VelocityNet, VelocityField]) -> VelocityField:
    if isinstance(field, VelocityNet):
        return partial(evaluate_velocity, field)
    if callable(field):
        return field
    raise ConfigurationError(f"not a velocity field: {type(field).__name__}")


def sample_training_tuples(side_data, cond_data, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw Gaussian reference noise shaped like `side_data` and one time per row.

    Returns
    - (noise, times): noise ~ N(0, I) with shape (n, d_side); times ~ U[0, 1]
      with shape (n, 1).
    """
    side, cond = _check_pair(side_data, cond_data)
    if side.shape[0] == 0:
        raise ArgumentError("cannot sample training tuples for empty data")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(side.shape)
    times = rng.uniform(0.0, 1.0, size=(side.shape[0], 1))
    return noise, times


def _regression_pairs(net, side, cond, noise, times):
    interp = (1.0 - times) * noise + times * side
    return _net_inputs(net, times, interp, cond), side - noise


def flow_matching_loss(net: VelocityNet, side_data, cond_data, noise, times) -> float:
    """Full-batch empirical squared loss of `net` for fixed (noise, times) draws."""
    side, cond = _check_pair(side_data, cond_data)
    inputs, targets = _regression_pairs(net, side, cond, noise, times)
    resid = mlp_forward(net, inputs) - targets
    return float(np.sum(resid**2) / side.shape[0])


def fit_velocity(side_data, cond_data, cfg: FlowConfig) -> VelocityNet:
    """
    Regress (side - noise) on (t, interpolant, cond) with minibatch Adam.

    The interpolant is (1 - t) * noise + t * side. Inputs are standardized
    with the training columns' statistics (stored on the returned net);
    constant columns are only centered. Targets stay in original units.

    Small folds run extra epochs until at least `cfg.min_steps` updates are
    taken; the step size follows `cfg.lr_at` over the whole run.
    """
    side, cond = _check_pair(side_data, cond_data)
    if side.shape[0] == 0:
        raise DataError("cannot fit a velocity field on zero rows")
    cfg.validate()
    n, d_side = side.shape

    feats = np.hstack([side, cond])
    std = feats.std(axis=0)
    if np.any(std < STD_FLOOR):
        logger.warning(
            "constant input column(s) %s; centered without scaling",
            np.flatnonzero(std < STD_FLOOR).tolist(),
        )
    net = mlp_init(cfg.layer_dims(d_side, cond.shape[1]), seed=derive_seed(cfg.seed, 0))
    net = replace(net, norm_mean=feats.mean(axis=0), norm_std=std)
    state = opt_init(net, learning_rate=cfg.learning_rate)

    epochs = cfg.epochs_for(n)
    total_steps = epochs * math.ceil(n / cfg.batch_size)
    logger.debug("fitting %d epochs (%d updates) on %d rows", epochs, total_steps, n)
    noise, times = sample_training_tuples(side, cond, derive_seed(cfg.seed, 1))
    order_rng = derive_rng(cfg.seed, 2)
    for epoch in range(epochs):
        if cfg.resample_noise_each_epoch and epoch > 0:
            noise, times = sample_training_tuples(side, cond, derive_seed(cfg.seed, 3, epoch))
        inputs, targets = _regression_pairs(net, side, cond, noise, times)
        order = order_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = mlp_loss_grad(net, inputs[idx], targets[idx])
            state = replace(state, learning_rate=cfg.lr_at(state.step, total_steps))
            state, net = opt_step(state, net, grads)
            total += loss * len(idx)
        if (epoch + 1) % 100 == 0 or epoch + 1 == epochs:
            logger.debug("epoch %d/%d loss %.5f", epoch + 1, epochs, total / n)
    return net


def _integrate(field: VelocityField, state: np.ndarray, cond: np.ndarray, t0: float, t1: float, steps: int) -> np.ndarray:
    # classical RK4 with fixed step; rows are independent
    if steps < 1:
        raise ArgumentError(f"steps must be >= 1, got {steps}")
    h = (t1 - t0) / steps
    x = np.array(state, dtype=np.float64)
    for k in range(steps):
        t = t0 + k * h
        k1 = field(t, x, cond)
        k2 = field(t + 0.5 * h, x + 0.5 * h * k1, cond)
        k3 = field(t + 0.5 * h, x + 0.5 * h * k2, cond)
        k4 = field(t + h, x + h * k3, cond)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NumericError(f"non-finite ODE state at step {k + 1} (t={t + h:.4f})", step=k + 1)
    return x


def _point_pair(point, cond_point) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(point, dtype=np.float64).reshape(1, -1)
    z = np.asarray(cond_point, dtype=np.float64).reshape(1, -1)
    return x, z


def integrate_reverse(net, side_point, cond_point, steps: int) -> np.ndarray:
    """Integrate dx/dt = v(t, x, z) from t = 1 (data) back to t = 0 (latent)."""
    x, z = _point_pair(side_point, cond_point)
    return _integrate(as_velocity_field(net), x, z, 1.0, 0.0, steps)[0]


def integrate_forward(net, noise_point, cond_point, steps: int) -> np.ndarray:
    """Integrate dx/dt = v(t, x, z) from t = 0 (noise) to t = 1 (data)."""
    x, z = _point_pair(noise_point, cond_point)
    return _integrate(as_velocity_field(net), x, z, 0.0, 1.0, steps)[0]


def transport_dataset(net_x, net_y, test_fold: DataTriplet, steps: int) -> TransportOutput:
    """
    Map every test row to its estimated latents (xi_hat, eta_hat).

    Equivalent to `integrate_reverse` row by row; rows are integrated as one
    batch.
    """
    if steps < 1:
        raise ArgumentError(f"steps must be >= 1, got {steps}")
    d_x, d_y, _ = test_fold.dims
    if test_fold.n == 0:
        return TransportOutput(np.empty((0, d_x)), np.empty((0, d_y)))
    xi = _integrate(as_velocity_field(net_x), test_fold.x, test_fold.z, 1.0, 0.0, steps)
    eta = _integrate(as_velocity_field(net_y), test_fold.y, test_fold.z, 1.0, 0.0, steps)
    return TransportOutput(xi_hat=xi, eta_hat=eta)


def sample_conditional(net, cond_data, seed: int, steps: int = 100, d_side: int = None) -> np.ndarray:
    """
    Sample the estimated conditional law: push N(0, I) noise forward to t = 1.

    Parameters
    - net: VelocityNet or velocity-field callable.
    - cond_data: one condition row per sample.
    - d_side: side dimension; read from the network when omitted.
    """
    cond = as_matrix(cond_data, "condition data")
    if d_side is None:
        if not isinstance(net, VelocityNet):
            raise ArgumentError("d_side is required for a callable velocity field")
        d_side = net.d_out
    noise = np.random.default_rng(seed).standard_normal((cond.shape[0], d_side))
    return _integrate(as_velocity_field(net), noise, cond, 0.0, 1.0, steps)
