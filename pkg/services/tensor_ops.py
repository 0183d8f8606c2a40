"""Dense tensors and the convolution operators of the target module.

Layout conventions:
  feature maps  x   H x W x C
  encodings     u   H x W x D
  filters       tau K x K x C x D   (K odd)

conv2d is a cross-correlation with zero "same" padding and stride 1, and
conv2d_transpose is its exact adjoint with respect to the filter. Inputs are
never modified in place.
"""
from typing import Tuple

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError

Tensor = NDArray[np.floating]
FilterWeights = NDArray[np.floating]


def as_tensor(data, dtype=None) -> Tensor:
    """Convert to a floating array, rejecting non-finite values"""
    array = np.asarray(data)
    if dtype is not None:
        array = array.astype(dtype, copy=False)
    elif not np.issubdtype(array.dtype, np.floating):
        array = array.astype(np.float64)
    if any(dim <= 0 for dim in array.shape):
        raise DimensionError(f"tensor dimensions must be positive, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("tensor contains NaN or Inf values")
    return array


def check_kernel(tau: FilterWeights) -> Tuple[int, int, int]:
    """Validate a K x K x C x D filter and return (K, C, D)"""
    if tau.ndim != 4:
        raise DimensionError(f"filter must have 4 axes (K, K, C, D), got shape {tau.shape}")
    k_rows, k_cols, channels, outputs = tau.shape
    if k_rows != k_cols:
        raise DimensionError(f"filter axes 0 and 1 must match, got {k_rows} and {k_cols}")
    if k_rows < 1 or k_rows % 2 == 0:
        raise DimensionError(f"kernel size must be odd and positive, got {k_rows}")
    return k_rows, channels, outputs


def _check_map(x: Tensor, name: str) -> None:
    if x.ndim != 3:
        raise DimensionError(f"{name} must have 3 axes (H, W, channels), got shape {x.shape}")


def _pad(x: Tensor, pad: int) -> Tensor:
    if pad == 0:
        return x
    return np.pad(x, ((pad, pad), (pad, pad), (0, 0)))


def conv2d(x: Tensor, tau: FilterWeights) -> Tensor:
    """Apply the target module: out[i, j, d] = sum_{a,b,c} xpad[i+a, j+b, c] tau[a, b, c, d]"""
    _check_map(x, "x")
    kernel_size, channels, outputs = check_kernel(tau)
    if x.shape[2] != channels:
        raise DimensionError(
            f"conv2d: x axis 2 (channels) is {x.shape[2]} but tau axis 2 (input channels) is {channels}"
        )
    height, width = x.shape[:2]
    padded = _pad(x, kernel_size // 2)
    out = np.zeros((height, width, outputs), dtype=np.result_type(x, tau))
    for a in range(kernel_size):
        for b in range(kernel_size):
            out += padded[a:a + height, b:b + width, :] @ tau[a, b]
    return out


def conv2d_transpose(u: Tensor, x: Tensor, kernel_size: int) -> FilterWeights:
    """Adjoint of conv2d in the filter argument: <conv2d(x, tau), u> = <tau, conv2d_transpose(u, x, K)>"""
    _check_map(u, "u")
    _check_map(x, "x")
    if u.shape[:2] != x.shape[:2]:
        raise DimensionError(
            f"conv2d_transpose: spatial axes 0/1 differ, u has {u.shape[:2]} and x has {x.shape[:2]}"
        )
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise DimensionError(f"kernel size must be odd and positive, got {kernel_size}")
    height, width, channels = x.shape
    outputs = u.shape[2]
    padded = _pad(x, kernel_size // 2)
    flat_u = u.reshape(-1, outputs)
    kernel = np.empty((kernel_size, kernel_size, channels, outputs), dtype=np.result_type(u, x))
    for a in range(kernel_size):
        for b in range(kernel_size):
            window = padded[a:a + height, b:b + width, :].reshape(-1, channels)
            kernel[a, b] = window.T @ flat_u
    return kernel


def conv2d_input_adjoint(v: Tensor, tau: FilterWeights) -> Tensor:
    """Adjoint of conv2d in the feature argument: <conv2d(x, tau), v> = <x, conv2d_input_adjoint(v, tau)>"""
    _check_map(v, "v")
    kernel_size, channels, outputs = check_kernel(tau)
    if v.shape[2] != outputs:
        raise DimensionError(
            f"conv2d_input_adjoint: v axis 2 is {v.shape[2]} but tau axis 3 (outputs) is {outputs}"
        )
    height, width = v.shape[:2]
    pad = kernel_size // 2
    grad = np.zeros((height + 2 * pad, width + 2 * pad, channels), dtype=np.result_type(v, tau))
    for a in range(kernel_size):
        for b in range(kernel_size):
            grad[a:a + height, b:b + width, :] += v @ tau[a, b].T
    return grad[pad:pad + height, pad:pad + width, :]


def im2col(x: Tensor, kernel_size: int) -> np.ndarray:
    """Unfold x into an (H*W) x (K*K*C) matrix so that im2col(x) @ tau.reshape(-1, D) equals conv2d(x, tau)"""
    _check_map(x, "x")
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise DimensionError(f"kernel size must be odd and positive, got {kernel_size}")
    height, width, channels = x.shape
    padded = _pad(x, kernel_size // 2)
    # (H, W, C, K, K) -> (H, W, K, K, C)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (kernel_size, kernel_size), axis=(0, 1))
    windows = windows.transpose(0, 1, 3, 4, 2)
    return windows.reshape(height * width, kernel_size * kernel_size * channels)


def dot(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionError(f"dot: shapes differ, {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def norm_sq(a: np.ndarray) -> float:
    return dot(a, a)
