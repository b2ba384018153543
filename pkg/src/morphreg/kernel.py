"""Truncated Gaussian smoothing kernel applied by separable convolution.

The kernel maps raw momentum fields to velocity fields; its discrete
transpose is needed by the hand-built cost gradient, so both directions are
implemented with the same replicate-border tap loop.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import FieldError, ScalarField, VectorField


class GaussianKernel:
    """Normalized, truncated Gaussian; immutable after construction."""

    def __init__(self, sigma: float, radius: int | None = None):
        if sigma <= 0:
            raise FieldError(f"kernel sigma must be positive, got {sigma}")
        self.sigma = float(sigma)
        self.radius = int(math.ceil(4 * sigma)) if radius is None else int(radius)
        if self.radius < 1:
            raise FieldError(f"kernel radius must be >= 1, got {self.radius}")
        x = np.arange(-self.radius, self.radius + 1, dtype=np.float64)
        w = np.exp(-0.5 * (x / self.sigma) ** 2)
        self.weights = w / np.sum(w)
        self.weights.flags.writeable = False

    def __repr__(self) -> str:
        return f"GaussianKernel(sigma={self.sigma}, radius={self.radius})"


def conv1d_replicate(a: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    """1D convolution along `axis` with replicate (clamped-index) borders."""
    n = a.shape[axis]
    r = (len(weights) - 1) // 2
    base = np.arange(n)
    out = np.zeros_like(a)
    for k, wk in enumerate(weights):
        idx = np.clip(base + k - r, 0, n - 1)
        out += wk * np.take(a, idx, axis=axis)
    return out


def conv1d_replicate_adjoint(
    gbar: np.ndarray, weights: np.ndarray, axis: int
) -> np.ndarray:
    """Exact transpose of `conv1d_replicate` as a linear map."""
    g = np.moveaxis(gbar, axis, 0)
    n = g.shape[0]
    r = (len(weights) - 1) // 2
    out = np.zeros_like(g)
    for k, wk in enumerate(weights):
        s = k - r
        if s >= 0:
            m = max(n - s, 0)
            out[s : s + m] += wk * g[:m]
            if s > 0:
                # samples clamped past the far edge all came from the last row
                out[n - 1] += wk * np.sum(g[m:], axis=0)
        else:
            m = max(n + s, 0)
            out[:m] += wk * g[-s : -s + m]
            out[0] += wk * np.sum(g[: min(-s, n)], axis=0)
    return np.moveaxis(out, 0, axis)


def smooth_arr(kernel: GaussianKernel, a: np.ndarray) -> np.ndarray:
    """Separable smoothing: horizontal pass, then vertical pass."""
    return conv1d_replicate(conv1d_replicate(a, kernel.weights, 1), kernel.weights, 0)


def smooth_adjoint_arr(kernel: GaussianKernel, gbar: np.ndarray) -> np.ndarray:
    return conv1d_replicate_adjoint(
        conv1d_replicate_adjoint(gbar, kernel.weights, 0), kernel.weights, 1
    )


def smooth_vec_arr(kernel: GaussianKernel, v: np.ndarray) -> np.ndarray:
    return np.stack(
        [smooth_arr(kernel, v[..., 0]), smooth_arr(kernel, v[..., 1])], axis=-1
    )


def smooth_adjoint_vec_arr(kernel: GaussianKernel, gbar: np.ndarray) -> np.ndarray:
    return np.stack(
        [smooth_adjoint_arr(kernel, gbar[..., 0]), smooth_adjoint_arr(kernel, gbar[..., 1])],
        axis=-1,
    )


def smooth_scalar(kernel: GaussianKernel, f: ScalarField) -> ScalarField:
    return ScalarField(f.geometry, smooth_arr(kernel, f.values))


def smooth_vector(kernel: GaussianKernel, v: VectorField) -> VectorField:
    return VectorField(v.geometry, smooth_vec_arr(kernel, v.values))


def v_norm_sq_arr(kernel: GaussianKernel, m: np.ndarray) -> float:
    """Squared velocity-space norm of a raw momentum field: <m, K*m>."""
    total = 0.0
    for c in range(m.shape[-1]):
        total += float(np.sum(m[..., c] * smooth_arr(kernel, m[..., c])))
    return total


def v_norm_sq(kernel: GaussianKernel, m: VectorField) -> float:
    return v_norm_sq_arr(kernel, m.values)
