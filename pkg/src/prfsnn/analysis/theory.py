"""Numerical checks of the PRF/LIF analytical results."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..neurons import (
    AlifParams,
    LifParams,
    PrfParams,
    alif_sequential,
    leaky_integrate,
    lif_sequential,
    prf_sequential,
)
from ..seqcore import DecayKernel, SequenceBatch, as_sequence, prf_decay


@dataclass(frozen=True)
class FrequencyResponse:
    """Gain ``|x_w / c_0|`` of a subthreshold PRF membrane per drive frequency."""

    omegas: np.ndarray
    magnitude: np.ndarray
    params: tuple[float, float]

    @property
    def peak_omega(self) -> float:
        return float(self.omegas[int(np.argmax(self.magnitude))])

    @property
    def peak(self) -> float:
        return float(self.magnitude.max())


def closed_form_gain(tau, theta, omegas) -> np.ndarray:
    """Continuous-time gain ``1 / sqrt(tau^-2 + (w - theta)^2)``."""
    omegas = np.asarray(omegas, dtype=np.float64)
    return 1.0 / np.sqrt((1.0 / tau) ** 2 + (omegas - theta) ** 2)


def discrete_gain(tau, theta, omegas, delta) -> np.ndarray:
    """Exact steady-state gain of the sampled recurrence with step ``delta``."""
    omegas = np.asarray(omegas, dtype=np.float64)
    phase = np.exp(1j * delta * (theta - omegas))
    return delta / np.abs(1.0 - math.exp(-delta / tau) * phase)


def frequency_response(
    tau: float,
    theta: float,
    omegas,
    simulate: bool = False,
    delta: float = 0.1,
    steps: int = 4096,
    tail: float = 0.25,
) -> FrequencyResponse:
    """Gain curve, from the closed form or from driving the neuron.

    In simulation mode the neuron is driven by ``cos(w t delta)`` and
    ``sin(w t delta)`` on two batch lanes. By linearity these combine into the
    response to ``exp(i w t delta)``, whose modulus is the steady-state
    amplitude of the real membrane. It is averaged over the last ``tail``
    fraction of ``steps``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    omegas = np.asarray(omegas, dtype=np.float64).reshape(-1)
    if not simulate:
        return FrequencyResponse(omegas, closed_form_gain(tau, theta, omegas), (tau, theta))
    t = np.arange(1, steps + 1)[:, None] * delta
    drive = np.stack([np.cos(omegas * t), np.sin(omegas * t)], axis=1)  # (T, 2, M)
    _, pots = prf_sequential(drive, PrfParams(tau=tau, theta=theta, delta=delta, v_th=np.inf))
    u = pots.data
    response = (u[:, 0].real - u[:, 1].imag) + 1j * (u[:, 0].imag + u[:, 1].real)
    start = steps - max(1, int(round(steps * tail)))
    magnitude = np.abs(response[start:]).mean(axis=0)
    return FrequencyResponse(omegas, magnitude, (tau, theta))


def theorem3_steps(tau: float, delta: float, transient: float = 1e-3) -> int:
    """Smallest horizon with ``exp(-2 delta T / tau) < transient``."""
    return int(math.ceil(tau * math.log(1.0 / transient) / (2.0 * delta))) + 1


def theorem3_limits(tau: float, delta: float, sigma: float) -> tuple[float, float]:
    """Exact stationary variance and its small-step approximation."""
    exact = delta**2 * sigma**2 / (-math.expm1(-2.0 * delta / tau))
    approx = tau * delta * sigma**2 / 2.0
    return exact, approx


@dataclass(frozen=True)
class Theorem3Result:
    empirical_var: float
    exact_var: float
    approx_var: float
    trials: int
    steps: int

    @property
    def standard_error(self) -> float:
        return self.exact_var * math.sqrt(2.0 / self.trials)

    @property
    def z_score(self) -> float:
        return abs(self.empirical_var - self.exact_var) / self.standard_error if self.exact_var else 0.0

    @property
    def approx_rel_error(self) -> float:
        return abs(self.approx_var - self.exact_var) / self.exact_var if self.exact_var else 0.0


def check_theorem3(
    tau: float,
    delta: float,
    sigma: float = 1.0,
    trials: int = 100_000,
    T: int | None = None,
    seed: int = 0,
    chunk: int = 10_000,
) -> Theorem3Result:
    """Monte-Carlo variance of the real membrane under white-noise input, ``theta = 0``.

    Trials are split into chunks, each drawing from its own generator seeded
    by ``(seed, chunk index)``, so the result does not depend on scheduling.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    T = theorem3_steps(tau, delta) if T is None else int(T)
    params = PrfParams(tau=tau, theta=0.0, delta=delta, v_th=np.inf)
    finals = []
    for k, start in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - start)
        rng = np.random.default_rng([seed, k])
        c = sigma * rng.standard_normal((T, n, 1))
        _, pots = prf_sequential(c, params)
        finals.append(pots.data[-1, :, 0].real)
    final = np.concatenate(finals)
    exact, approx = theorem3_limits(tau, delta, sigma)
    return Theorem3Result(float(final.var()), exact, approx, trials, T)


@dataclass(frozen=True)
class EquivalenceCount:
    cases: int
    mismatched_cases: int
    mismatched_spikes: int
    first_bad_seed: int | None

    @property
    def passed(self) -> bool:
        return self.mismatched_cases == 0


def check_theorem1(
    cases: int = 1000,
    seed: int = 0,
    rho: float | None = 1.0,
    coupling: float | None = None,
    max_T: int = 128,
) -> EquivalenceCount:
    """Compare soft-reset LIF with reset-free adaptive-threshold LIF spike trains.

    ``rho=None`` means ``rho = beta_lif``; ``coupling=None`` means
    ``beta = beta_lif`` (equal to ``v_th * beta_lif`` at ``v_th = 1``).
    Case ``i`` draws from a generator seeded by ``(seed, i)``.
    """
    bad, bad_spikes, first = 0, 0, None
    for i in range(cases):
        rng = np.random.default_rng([seed, i])
        T = int(rng.integers(1, max_T + 1))
        N = int(rng.integers(1, 9))
        beta_lif = float(rng.uniform(0.05, 0.95))
        c = rng.standard_normal((T, 1, N)) + 0.5
        r = beta_lif if rho is None else rho
        b = beta_lif if coupling is None else coupling
        s_lif, _ = lif_sequential(c, LifParams(beta=beta_lif, v_th=1.0))
        z = alif_sequential(c, AlifParams(v_th=1.0, beta=b, rho=r), beta_lif)
        diff = int(np.count_nonzero(s_lif.data != z.data))
        if diff:
            bad += 1
            bad_spikes += diff
            first = i if first is None else first
    return EquivalenceCount(cases, bad, bad_spikes, first)


def check_theorem2(cases: int = 100, seed: int = 0, max_T: int = 256) -> EquivalenceCount:
    """PRF with ``delta=1, theta=0`` against reset-free LIF with ``beta = exp(-1/tau)``, bit for bit."""
    bad, bad_count, first = 0, 0, None
    for i in range(cases):
        rng = np.random.default_rng([seed, i])
        T = int(rng.integers(1, max_T + 1))
        N = int(rng.integers(1, 9))
        tau = rng.uniform(1.5, 100.0, N)
        c = rng.standard_normal((T, 2, N))
        _, pots = prf_sequential(c, PrfParams(tau=tau, theta=0.0, delta=1.0))
        beta = prf_decay(1.0, tau, 0.0).real  # the PRF decay itself, not a fresh exp
        ref = leaky_integrate(c, beta).data
        diff = int(np.count_nonzero(pots.data.real != ref))
        if diff:
            bad += 1
            bad_count += diff
            first = i if first is None else first
    return EquivalenceCount(cases, bad, bad_count, first)


def kernel_gradient_diagnostic(kernel, spikes) -> np.ndarray:
    """Per-lane ``<K, S reversed in time>``, real part, shape ``(B, N)``.

    ``kernel`` is a :class:`DecayKernel` or ``(T,)`` / ``(T, N)`` array;
    ``spikes`` anything accepted by :func:`as_sequence`.
    """
    k = kernel.values if isinstance(kernel, DecayKernel) else np.asarray(kernel)
    if k.ndim == 1:
        k = k[:, None]
    s = spikes.data if isinstance(spikes, SequenceBatch) else as_sequence(spikes, "spike").data
    if k.shape[0] != s.shape[0]:
        raise ValueError(f"kernel length {k.shape[0]} does not match spike length {s.shape[0]}")
    return np.einsum("tn,tbn->bn", k, s[::-1]).real
