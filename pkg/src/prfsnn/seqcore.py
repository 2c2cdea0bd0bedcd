"""Sequence containers, decay kernels and exact causal convolution.

All arrays are time-major ``(T, B, N)``: timesteps, batch, channels.
Kernels are ``(T, N)``, one decay profile per channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.fft as sfft

KINDS = ("current", "potential", "spike")


@dataclass(frozen=True)
class SequenceBatch:
    """A time-major ``(T, B, N)`` array tagged with what it carries."""

    data: np.ndarray
    kind: str = "current"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.data.ndim != 3 or min(self.data.shape) < 1:
            raise ValueError(f"expected a non-empty (T, B, N) array, got shape {self.data.shape}")

    @property
    def shape(self):
        return self.data.shape

    @property
    def T(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@dataclass(frozen=True)
class DecayKernel:
    """Per-channel decay powers, shape ``(T, N)``."""

    values: np.ndarray

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)


SeqLike = Union[SequenceBatch, np.ndarray, list, tuple]


def as_sequence(x: SeqLike, kind: str = "current") -> SequenceBatch:
    """Promote ``(T,)`` to ``(T, 1, 1)`` and ``(T, N)`` to ``(T, 1, N)``."""
    if isinstance(x, SequenceBatch):
        return x
    arr = np.asarray(x)
    if not (np.iscomplexobj(arr) or arr.dtype == np.float64):
        arr = arr.astype(np.float64)
    if arr.ndim == 1:
        arr = arr[:, None, None]
    elif arr.ndim == 2:
        arr = arr[:, None, :]
    return SequenceBatch(arr, kind)


def _channels(x, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a scalar or a per-channel vector")
    return arr


def _running_powers(base: np.ndarray, T: int) -> np.ndarray:
    # repeated multiplication rather than pow(): identical rounding everywhere
    out = np.empty((T,) + base.shape, dtype=base.dtype)
    out[0] = 1
    for t in range(1, T):
        out[t] = out[t - 1] * base
    return out


def build_lif_kernel(beta, T: int) -> DecayKernel:
    """Kernel ``(beta^0, ..., beta^(T-1))`` per channel."""
    beta = _channels(beta, "beta")
    if T < 1:
        raise ValueError("T must be >= 1")
    if np.any(beta <= 0) or np.any(beta >= 1):
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    return DecayKernel(_running_powers(beta, T))


def prf_decay(delta, tau, theta) -> np.ndarray:
    """Complex per-step decay ``exp(delta * (-1/tau + i*theta))``."""
    delta, tau, theta = np.broadcast_arrays(
        _channels(delta, "delta"), _channels(tau, "tau"), _channels(theta, "theta")
    )
    if np.any(delta <= 0):
        raise ValueError("delta must be positive")
    if np.any(tau <= delta):
        raise ValueError("tau must exceed delta, otherwise the kernel does not decay")
    return np.exp(delta * (-1.0 / tau + 1j * theta))


def build_prf_kernel(delta, tau, theta, T: int) -> DecayKernel:
    """Kernel ``delta * A^t`` with ``A = exp(delta * (-1/tau + i*theta))``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    A = prf_decay(delta, tau, theta)
    delta = np.broadcast_to(_channels(delta, "delta"), A.shape)
    return DecayKernel(delta * _running_powers(A, T))


def fft_length(T: int) -> int:
    """Smallest power of two >= 2T - 1 (linear, not circular, convolution)."""
    return 1 << max(0, int(2 * T - 2).bit_length())


def _check_pair(x: np.ndarray, k: np.ndarray):
    if x.shape[0] != k.shape[0]:
        raise ValueError(f"length mismatch: input T={x.shape[0]}, kernel T={k.shape[0]}")
    if k.shape[1] not in (1, x.shape[2]):
        raise ValueError(f"channel mismatch: input N={x.shape[2]}, kernel N={k.shape[1]}")


def fft_convolve(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Array-level causal convolution of ``x (T,B,N)`` with ``k (T,N)``.

    Transforms run along the time axis in place; transposing to a
    lane-major copy first costs more than the FFT itself at large ``B*N``.
    """
    T = x.shape[0]
    n = fft_length(T)
    if np.iscomplexobj(x):
        X = sfft.fft(x, n=n, axis=0)
        return sfft.ifft(X * sfft.fft(k, n=n, axis=0)[:, None, :], n=n, axis=0)[:T]
    X = sfft.rfft(x, n=n, axis=0)
    if np.iscomplexobj(k):
        re = sfft.irfft(X * sfft.rfft(k.real, n=n, axis=0)[:, None, :], n=n, axis=0)[:T]
        im = sfft.irfft(X * sfft.rfft(k.imag, n=n, axis=0)[:, None, :], n=n, axis=0)[:T]
        return re + 1j * im
    X *= sfft.rfft(k, n=n, axis=0)[:, None, :]
    return sfft.irfft(X, n=n, axis=0)[:T]


def fft_correlate(g: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`fft_convolve` in its input: ``y[j] = sum_t g[t] k[t-j]``."""
    return fft_convolve(g[::-1], k)[::-1]


def causal_convolve(input: SeqLike, kernel: DecayKernel) -> SequenceBatch:
    """``out[t] = sum_{j<=t} kernel[t-j] * input[j]`` via zero-padded FFT."""
    x = as_sequence(input).data
    k = np.asarray(kernel.values)
    _check_pair(x, k)
    return SequenceBatch(fft_convolve(x, k), "potential")


def naive_convolve(input: SeqLike, kernel: DecayKernel) -> SequenceBatch:
    """Direct O(T^2) causal convolution; oracle for :func:`causal_convolve`."""
    x = as_sequence(input).data
    k = np.asarray(kernel.values)
    _check_pair(x, k)
    T = x.shape[0]
    dtype = np.result_type(x.dtype, k.dtype, np.float64)
    out = np.zeros(x.shape[:2] + (max(x.shape[2], k.shape[1]),), dtype=dtype)
    for lag in range(T):
        out[lag:] += k[lag][None, :] * x[: T - lag]
    return SequenceBatch(out, "potential")
