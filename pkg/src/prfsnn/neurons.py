"""Spiking neuron dynamics in sequential, parallel and deployment form.

LIF uses a soft reset (subtract ``v_th`` after each spike). The parallel
form splits the membrane into a reset-free leaky integral ``U'`` (an FFT
convolution) and a reset threshold ``D`` scanned from ``U'`` alone, so
``u_t >= v_th`` becomes ``u'_t >= d_t``.

PRF has a complex decay ``exp(delta * (-1/tau + i*theta))`` and no
output-dependent reset, which makes its parallel form a single convolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqcore import (
    SeqLike,
    SequenceBatch,
    as_sequence,
    build_lif_kernel,
    build_prf_kernel,
    fft_convolve,
    prf_decay,
)


@dataclass(frozen=True)
class LifParams:
    beta: np.ndarray | float
    v_th: float = 1.0
    u_reset: float = 0.0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if np.any(beta <= 0) or np.any(beta >= 1):
            raise ValueError("beta must lie in (0, 1)")
        if self.v_th <= 0:
            raise ValueError("v_th must be positive")
        if self.u_reset != 0.0:
            raise ValueError("only u_reset = 0 (soft reset) is supported")

    @classmethod
    def from_tau(cls, tau, v_th: float = 1.0) -> "LifParams":
        return cls(1.0 - 1.0 / np.asarray(tau, dtype=np.float64), v_th)


@dataclass(frozen=True)
class PrfParams:
    tau: np.ndarray | float
    theta: np.ndarray | float
    delta: np.ndarray | float
    v_th: float = 1.0

    def __post_init__(self):
        tau, delta = np.broadcast_arrays(np.asarray(self.tau, float), np.asarray(self.delta, float))
        if np.any(delta <= 0) or np.any(tau <= delta):
            raise ValueError("PRF parameters need tau > delta > 0")

    @property
    def decay(self) -> np.ndarray:
        return prf_decay(self.delta, self.tau, self.theta)


@dataclass(frozen=True)
class AlifParams:
    v_th: float = 1.0
    beta: float = 0.5
    rho: float = 1.0

    def __post_init__(self):
        if self.v_th <= 0:
            raise ValueError("v_th must be positive")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")


@dataclass(frozen=True)
class DeployPrfState:
    """Real two-variable PRF state with merged decay coefficients."""

    u: np.ndarray | float
    r: np.ndarray | float
    phi_re: np.ndarray | float
    phi_im: np.ndarray | float

    @classmethod
    def initial(cls, tau, theta, delta) -> "DeployPrfState":
        A = prf_decay(delta, tau, theta)
        zero = np.zeros_like(A.real)
        return cls(zero, zero.copy(), A.real, A.imag)


def _per_channel(x, n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    return np.broadcast_to(arr.reshape(-1) if arr.ndim else arr, (n,))


def lif_sequential(input: SeqLike, params: LifParams) -> tuple[SequenceBatch, SequenceBatch]:
    """Step-by-step soft-reset LIF; returns ``(spikes, pre-reset potentials)``."""
    c = as_sequence(input).data
    if np.iscomplexobj(c):
        raise TypeError("LIF input must be real")
    T, B, N = c.shape
    beta = _per_channel(params.beta, N)
    v_th = params.v_th
    u = np.zeros((B, N))
    s = np.zeros((B, N))
    spikes = np.empty_like(c)
    pots = np.empty_like(c)
    for t in range(T):
        u = beta * (u - v_th * s) + c[t]
        s = (u >= v_th).astype(np.float64)
        pots[t] = u
        spikes[t] = s
    return SequenceBatch(spikes, "spike"), SequenceBatch(pots, "potential")


def decoupled_reset_scan(potentials: SeqLike, v_th: float, beta) -> SequenceBatch:
    """Scan the reset threshold sequence ``D`` from reset-free potentials ``U'``.

    ``d_t = v_th * (A_t + 1)`` where ``A_t`` accumulates ``beta``-discounted
    past spikes, and a spike at ``t`` is ``u'_t >= d_t``.
    """
    U = as_sequence(potentials, "potential").data
    return SequenceBatch(reset_scan(U, v_th, beta), "potential")


def reset_scan(U: np.ndarray, v_th: float, beta) -> np.ndarray:
    """Array-level :func:`decoupled_reset_scan`, keeping the input dtype."""
    T, B, N = U.shape
    beta = _per_channel(beta, N).astype(U.dtype)
    v_th = U.dtype.type(v_th)
    D = np.empty_like(U)
    acc = np.zeros((B, N), dtype=U.dtype)
    d = np.full((B, N), v_th, dtype=U.dtype)
    for t in range(T):
        D[t] = d
        acc += U[t] >= d
        acc *= beta
        d = v_th * acc + v_th
    return D


def lif_parallel(input: SeqLike, params: LifParams, return_reset: bool = False):
    """FFT leaky integration plus decoupled reset scan.

    Returns ``(spikes, U')`` or, with ``return_reset``, ``(spikes, U', D)``.
    The soft-reset membrane is recovered as ``U' - D + v_th``.
    """
    c = as_sequence(input).data
    if np.iscomplexobj(c):
        raise TypeError("LIF input must be real")
    T, _, N = c.shape
    kernel = build_lif_kernel(_per_channel(params.beta, N), T)
    U = fft_convolve(c, kernel.values)
    D = reset_scan(U, params.v_th, params.beta)
    S = (U >= D).astype(np.float64)
    out = (SequenceBatch(S, "spike"), SequenceBatch(U, "potential"))
    if return_reset:
        return out + (SequenceBatch(D, "potential"),)
    return out


def leaky_integrate(input: SeqLike, beta) -> SequenceBatch:
    """Reset-free LIF membrane ``u_t = beta * u_{t-1} + c_t``, step by step."""
    c = as_sequence(input).data
    T, B, N = c.shape
    beta = _per_channel(beta, N)
    u = np.zeros((B, N))
    out = np.empty_like(c)
    for t in range(T):
        u = beta * u + c[t]
        out[t] = u
    return SequenceBatch(out, "potential")


def prf_sequential(input: SeqLike, params: PrfParams) -> tuple[SequenceBatch, SequenceBatch]:
    """Complex recurrence ``u_t = A u_{t-1} + delta c_t``; spikes on the real part."""
    c = as_sequence(input).data
    T, B, N = c.shape
    A = np.broadcast_to(params.decay.reshape(-1), (N,))
    delta = _per_channel(params.delta, N)
    u = np.zeros((B, N), dtype=np.complex128)
    pots = np.empty((T, B, N), dtype=np.complex128)
    for t in range(T):
        u = A * u + delta * c[t]
        pots[t] = u
    spikes = (pots.real >= params.v_th).astype(np.float64)
    return SequenceBatch(spikes, "spike"), SequenceBatch(pots, "potential")


def prf_parallel(input: SeqLike, params: PrfParams) -> tuple[SequenceBatch, SequenceBatch]:
    """Whole-sequence PRF via one causal convolution with ``delta * A^t``."""
    c = as_sequence(input).data
    T, _, N = c.shape
    d, tau, th = np.broadcast_arrays(
        np.asarray(params.delta, float), np.asarray(params.tau, float), np.asarray(params.theta, float)
    )
    kernel = build_prf_kernel(_per_channel(d, N), _per_channel(tau, N), _per_channel(th, N), T)
    pots = fft_convolve(c, kernel.values)
    spikes = (pots.real >= params.v_th).astype(np.float64)
    return SequenceBatch(spikes, "spike"), SequenceBatch(pots, "potential")


def prf_deploy_step(state: DeployPrfState, c, delta, v_th: float):
    """One inference step with real arithmetic only; returns ``(state', spike)``."""
    u = state.phi_re * state.u - state.phi_im * state.r + delta * c
    r = state.phi_im * state.u + state.phi_re * state.r
    s = (np.asarray(u) >= v_th).astype(np.float64)
    return DeployPrfState(u, r, state.phi_re, state.phi_im), s


def prf_deploy_run(input: SeqLike, params: PrfParams) -> tuple[SequenceBatch, SequenceBatch]:
    """Drive :func:`prf_deploy_step` over a whole sequence; potentials as ``u + i r``."""
    c = as_sequence(input).data
    T, B, N = c.shape
    delta = _per_channel(params.delta, N)
    init = DeployPrfState.initial(params.tau, params.theta, params.delta)
    state = DeployPrfState(
        np.zeros((B, N)),
        np.zeros((B, N)),
        np.broadcast_to(np.reshape(init.phi_re, -1), (N,)),
        np.broadcast_to(np.reshape(init.phi_im, -1), (N,)),
    )
    spikes = np.empty((T, B, N))
    pots = np.empty((T, B, N), dtype=np.complex128)
    for t in range(T):
        state, spikes[t] = prf_deploy_step(state, c[t], delta, params.v_th)
        pots[t] = state.u + 1j * state.r
    return SequenceBatch(spikes, "spike"), SequenceBatch(pots, "potential")


def spatial_neuron(input: SeqLike, v_th: float, alpha) -> SequenceBatch:
    """Stateless threshold unit with output ``{0, alpha_c}`` per channel."""
    c = as_sequence(input).data
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0):
        raise ValueError("alpha must be positive")
    return SequenceBatch(alpha * (c >= v_th), "spike")


def alif_sequential(input: SeqLike, params: AlifParams, beta_lif) -> SequenceBatch:
    """Reset-free LIF with an adaptive threshold ``v_th + beta * a_t``.

    ``a_{t+1} = rho * a_t + z_t``; the membrane is never reset.
    """
    c = as_sequence(input).data
    T, B, N = c.shape
    beta_lif = _per_channel(beta_lif, N)
    u = np.zeros((B, N))
    a = np.zeros((B, N))
    z = np.empty_like(c)
    for t in range(T):
        u = beta_lif * u + c[t]
        z[t] = u >= params.v_th + params.beta * a
        a = params.rho * a + z[t]
    return SequenceBatch(z, "spike")
