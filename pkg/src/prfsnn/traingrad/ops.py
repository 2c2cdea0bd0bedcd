"""Differentiable primitives recorded on a :class:`~prfsnn.traingrad.tape.Tape`.

Every op takes and returns :class:`Var`. Sequence tensors are ``(T, B, N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import scipy.fft as sfft

from ..neurons import reset_scan
from ..seqcore import fft_convolve, fft_correlate, fft_length
from .tape import TimeSlice, Var


@dataclass(frozen=True)
class SurrogateSpec:
    """Atan-family surrogate. ``smooth=True`` also smooths the forward pass,
    which makes the whole graph differentiable for finite-difference checks."""

    kind: str = "atan"
    width: float = 2.0
    smooth: bool = False

    def __post_init__(self):
        if self.kind != "atan":
            raise ValueError(f"unsupported surrogate {self.kind!r}")
        if self.width <= 0:
            raise ValueError("surrogate width must be positive")


def surrogate_grad(x, spec: SurrogateSpec = SurrogateSpec()):
    """Derivative of ``1/2 + arctan(pi*a*x)/pi``: ``a / (1 + (pi*a*x)^2)``."""
    a = spec.width
    return a / (1.0 + (np.pi * a * np.asarray(x)) ** 2)


def smooth_step(x, spec: SurrogateSpec = SurrogateSpec()):
    return 0.5 + np.arctan(np.pi * spec.width * np.asarray(x)) / np.pi


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _as_var(tape, x) -> Var:
    return x if isinstance(x, Var) else tape.constant(x)


def add(a: Var, b) -> Var:
    b = _as_var(a.tape, b)
    sa, sb = a.shape, b.shape
    return a.tape.record(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a: Var, b) -> Var:
    b = _as_var(a.tape, b)
    sa, sb = a.shape, b.shape
    return a.tape.record(a.value - b.value, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a: Var, b) -> Var:
    b = _as_var(a.tape, b)
    av, bv = a.value, b.value
    return a.tape.record(
        av * bv, (a, b), lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape))
    )


def scale(a: Var, c) -> Var:
    """Multiply by a non-trainable array or scalar."""
    c = np.asarray(c, dtype=a.value.dtype)
    return a.tape.record(a.value * c, (a,), lambda g: (_unbroadcast(g * c, a.shape),))


def linear(x: Var, W: Var, b: Var | None = None) -> Var:
    """Position-wise affine map over the last axis."""
    xv, Wv = x.value, W.value
    out = xv @ Wv
    parents = (x, W)
    if b is not None:
        out = out + b.value
        parents = parents + (b,)

    def vjp(g):
        gx = g @ Wv.T if x.needs_grad else None
        gW = xv.reshape(-1, xv.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        grads = (gx, gW)
        if b is not None:
            grads = grads + (g.reshape(-1, g.shape[-1]).sum(axis=0),)
        return grads

    return x.tape.record(out, parents, vjp)


def causal_conv(x: Var, k: Var) -> Var:
    """Real causal convolution of ``x (T,B,N)`` with ``k (T,N)`` via FFT.

    Backward: the input gradient correlates ``g`` with ``k``, the kernel
    gradient correlates ``g`` with ``x`` summed over the batch.
    """
    xv, kv = x.value, k.value
    out = fft_convolve(xv, kv)

    def vjp(g):
        gx = fft_correlate(g, kv) if x.needs_grad else None
        gk = None
        if k.needs_grad:
            T = xv.shape[0]
            n = fft_length(T)
            G = sfft.rfft(g, n=n, axis=0)
            G *= np.conj(sfft.rfft(xv, n=n, axis=0))
            corr = sfft.irfft(G.sum(axis=1), n=n, axis=0)[:T]  # (T, N), batch summed in frequency
            gk = _unbroadcast(corr, kv.shape)
        return gx, gk

    return x.tape.record(out, (x, k), vjp)


def prf_real_kernel(log_delta: Var, log_tau: Var, theta: Var, T: int) -> Var:
    """``Re(delta * A^t)`` per channel, differentiable in all three parameters."""
    delta = np.exp(log_delta.value)
    tau = np.exp(log_tau.value)
    gamma = -1.0 / tau + 1j * theta.value
    A = np.exp(delta * gamma)
    powers = np.empty((T, A.shape[0]), dtype=np.complex128)
    powers[0] = 1
    for t in range(1, T):
        powers[t] = powers[t - 1] * A
    K = delta * powers
    steps = np.arange(T)[:, None]
    dtype = log_delta.value.dtype

    def vjp(g):
        # dK/dlog_delta = K (1 + t delta gamma); dK/dlog_tau = K t delta / tau; dK/dtheta = i t delta K
        tdk = steps * delta * K
        g_ld = (g * (K + tdk * gamma).real).sum(axis=0)
        g_lt = (g * (tdk / tau).real).sum(axis=0)
        g_th = (g * (1j * tdk).real).sum(axis=0)
        return g_ld.astype(dtype), g_lt.astype(dtype), g_th.astype(dtype)

    return log_delta.tape.record(K.real.astype(dtype), (log_delta, log_tau, theta), vjp)


def spike(x: Var, v_th: float, spec: SurrogateSpec = SurrogateSpec()) -> Var:
    """Heaviside ``[x >= v_th]`` forward, surrogate derivative backward."""
    v = x.value - v_th
    out = smooth_step(v, spec) if spec.smooth else (v >= 0)
    out = out.astype(x.value.dtype)
    return x.tape.record(out, (x,), lambda g: (g * surrogate_grad(v, spec).astype(g.dtype),))


def lif_fire(u_prime: Var, v_th: float, beta, spec: SurrogateSpec = SurrogateSpec()) -> Var:
    """Spikes ``[U' >= D]`` with the scanned reset ``D`` held constant in backward."""
    D = reset_scan(u_prime.value, v_th, beta)
    return spike(sub(u_prime, D), 0.0, spec)


def reverse_time(x: Var) -> Var:
    return x.tape.record(x.value[::-1], (x,), lambda g: (g[::-1],))


def concat(a: Var, b: Var, axis: int = -1) -> Var:
    na = a.shape[axis]

    def vjp(g):
        ga, gb = np.split(g, [na], axis=axis)
        return ga, gb

    return a.tape.record(np.concatenate([a.value, b.value], axis=axis), (a, b), vjp)


def mean_time(x: Var) -> Var:
    T = x.shape[0]
    return x.tape.record(x.value.mean(axis=0), (x,), lambda g: (np.broadcast_to(g / T, x.shape),))


def select_time(x: Var, t: int) -> Var:
    return x.tape.record(x.value[t], (x,), lambda g: (TimeSlice(t, g),))


def stack_time(xs: list[Var]) -> Var:
    return xs[0].tape.record(np.stack([v.value for v in xs]), tuple(xs), lambda g: tuple(g))


def total(x: Var) -> Var:
    return x.tape.record(np.asarray(x.value.sum()), (x,), lambda g: (np.broadcast_to(g, x.shape),))


def weighted_sum(x: Var, w) -> Var:
    w = np.asarray(w, dtype=x.value.dtype)
    return x.tape.record(np.asarray((x.value * w).sum()), (x,), lambda g: (g * w,))


def cross_entropy(logits: Var, labels) -> Var:
    """Mean softmax cross-entropy of ``(B, C)`` logits against integer labels."""
    z = logits.value
    labels = np.asarray(labels)
    shifted = z - z.max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    B = z.shape[0]
    loss = -logp[np.arange(B), labels].mean()

    def vjp(g):
        p = np.exp(logp)
        p[np.arange(B), labels] -= 1.0
        return (g * p / B,)

    return logits.tape.record(np.asarray(loss, dtype=z.dtype), (logits,), vjp)
