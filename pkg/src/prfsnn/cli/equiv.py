"""Randomized sequential-vs-parallel equivalence suites for LIF and PRF."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..neurons import (
    LifParams,
    PrfParams,
    lif_parallel,
    lif_sequential,
    prf_deploy_run,
    prf_parallel,
    prf_sequential,
    reset_scan,
)
from ..seqcore import SequenceBatch, build_prf_kernel, fft_convolve

MEMBRANE_RTOL = 1e-9
KIND_STREAM = {"lif": 0, "prf": 1}


@dataclass(frozen=True)
class EquivConfig:
    kind: str = "both"  # lif, prf or both
    cases: int = 1000
    max_T: int = 512
    max_B: int = 8
    max_N: int = 32
    seed: int = 0
    inject_bug: bool = False

    def __post_init__(self):
        if self.kind not in ("lif", "prf", "both"):
            raise ValueError(f"unknown suite kind {self.kind!r}")
        if self.cases < 1 or min(self.max_T, self.max_B, self.max_N) < 1:
            raise ValueError("cases and size limits must be positive")


@dataclass(frozen=True)
class CaseResult:
    kind: str
    case: int
    seed: int
    T: int
    B: int
    N: int
    spike_mismatches: int
    max_rel_membrane: float

    @property
    def passed(self) -> bool:
        return self.spike_mismatches == 0 and self.max_rel_membrane <= MEMBRANE_RTOL


@dataclass
class EquivReport:
    config: EquivConfig
    cases: list[CaseResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def failing(self) -> list[CaseResult]:
        return [c for c in self.cases if not c.passed]

    def summary(self) -> dict:
        out = {"passed": self.passed, "cases": len(self.cases)}
        for kind in ("lif", "prf"):
            rows = [c for c in self.cases if c.kind == kind]
            if rows:
                out[f"{kind}_spike_mismatches"] = sum(c.spike_mismatches for c in rows)
                out[f"{kind}_max_rel_membrane"] = max(c.max_rel_membrane for c in rows)
        bad = self.failing
        out["first_failing_seed"] = bad[0].seed if bad else None
        out["first_failing_case"] = f"{bad[0].kind}:{bad[0].case}" if bad else None
        return out

    def records(self) -> list[dict]:
        return [asdict(c) for c in self.cases]


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.abs(b).max())
    return float(np.abs(a - b).max()) / scale if scale > 0 else float(np.abs(a - b).max())


def _lif_parallel_buggy(c: np.ndarray, beta: np.ndarray, v_th: float):
    """Negative control: kernel starts at ``beta^1`` instead of ``beta^0``."""
    T = c.shape[0]
    K = np.cumprod(np.broadcast_to(beta, (T, beta.size)), axis=0)
    U = fft_convolve(c, K)
    D = reset_scan(U, v_th, beta)
    return (U >= D).astype(np.float64), U, D


def lif_case(rng: np.random.Generator, cfg: EquivConfig) -> tuple[int, int, int, int, float]:
    T = int(rng.integers(1, cfg.max_T + 1))
    B = int(rng.integers(1, cfg.max_B + 1))
    N = int(rng.integers(1, cfg.max_N + 1))
    beta = rng.uniform(0.05, 0.95, N)
    c = rng.standard_normal((T, B, N))
    params = LifParams(beta=beta, v_th=1.0)
    s_seq, u_seq = lif_sequential(c, params)
    if cfg.inject_bug:
        S, U, D = _lif_parallel_buggy(c, beta, 1.0)
    else:
        S, U, D = (x.data for x in lif_parallel(c, params, return_reset=True))
    u_par = U - D + 1.0
    return T, B, N, int(np.count_nonzero(S != s_seq.data)), _rel(u_par, u_seq.data)


def prf_case(rng: np.random.Generator, cfg: EquivConfig) -> tuple[int, int, int, int, float]:
    T = int(rng.integers(1, cfg.max_T + 1))
    B = int(rng.integers(1, cfg.max_B + 1))
    N = int(rng.integers(1, cfg.max_N + 1))
    delta = np.exp(rng.uniform(np.log(0.01), np.log(1.0), N))
    tau = delta * rng.uniform(1.1, 100.0, N)
    theta = rng.uniform(0.0, np.pi, N)
    c = rng.standard_normal((T, B, N))
    params = PrfParams(tau=tau, theta=theta, delta=delta, v_th=1.0)
    s_seq, u_seq = prf_sequential(c, params)
    if cfg.inject_bug:
        K = build_prf_kernel(delta, tau, theta, T + 1).values[1:]  # off by one step
        pots = fft_convolve(c, K)
        s_par, u_par = SequenceBatch((pots.real >= 1.0).astype(np.float64), "spike"), SequenceBatch(pots, "potential")
    else:
        s_par, u_par = prf_parallel(c, params)
    s_dep, u_dep = prf_deploy_run(c, params)
    mism = int(np.count_nonzero(s_par.data != s_seq.data)) + int(np.count_nonzero(s_dep.data != s_seq.data))
    rel = max(_rel(u_par.data, u_seq.data), _rel(u_dep.data, u_seq.data))
    return T, B, N, mism, rel


def run_equivalence_suite(config: EquivConfig = EquivConfig()) -> EquivReport:
    """Run ``config.cases`` random cases per neuron kind.

    Case ``i`` uses a generator seeded by ``(seed, KIND_STREAM[kind], i)``, so
    any failing case can be replayed from the reported seed and index.
    """
    report = EquivReport(config)
    kinds = ("lif", "prf") if config.kind == "both" else (config.kind,)
    for kind in kinds:
        fn = lif_case if kind == "lif" else prf_case
        for i in range(config.cases):
            rng = np.random.default_rng([config.seed, KIND_STREAM[kind], i])
            T, B, N, mism, rel = fn(rng, config)
            report.cases.append(CaseResult(kind, i, config.seed, T, B, N, mism, rel))
    return report
