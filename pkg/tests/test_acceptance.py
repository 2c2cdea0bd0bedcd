"""Acceptance criteria, one test each, at the contract tolerances.

Every test prints a ``PASS``/``FAIL criterion N`` line (repeated in the
pytest terminal summary). Run standalone with ``python3 tests/test_acceptance.py``
to get just those lines.
"""

import dataclasses
import os
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from gradcheck import model_gradient_error  # noqa: E402

from prfsnn.analysis import (  # noqa: E402
    check_theorem1,
    check_theorem2,
    check_theorem3,
    frequency_response,
    listops_ratio,
    theorem3_limits,
)
from prfsnn.cli.bench import bench, speedups  # noqa: E402
from prfsnn.cli.config import load_config  # noqa: E402
from prfsnn.cli.data import DATA_ENV  # noqa: E402
from prfsnn.cli.equiv import EquivConfig, run_equivalence_suite  # noqa: E402
from prfsnn.cli.main import load_task  # noqa: E402
from prfsnn.traingrad import TrainConfig, build_model, train  # noqa: E402

REPO = Path(__file__).resolve().parents[1]
MEMBRANE_RTOL = 1e-9


def _equivalence(kind: str):
    start = time.perf_counter()
    report = run_equivalence_suite(EquivConfig(kind=kind, cases=1000, max_T=512, max_B=8, max_N=32, seed=0))
    elapsed = time.perf_counter() - start
    spikes = sum(c.spike_mismatches for c in report.cases)
    worst = max(c.max_rel_membrane for c in report.cases)
    ok = spikes == 0 and worst <= MEMBRANE_RTOL and elapsed < 60
    return ok, f"1000 cases, {spikes} spike mismatches, worst membrane rel err {worst:.2e}, {elapsed:.1f}s"


def criterion_1():
    return _equivalence("lif")


def criterion_2():
    return _equivalence("prf")


def criterion_3():
    start = time.perf_counter()
    res = check_theorem1(cases=1000, seed=0, rho=1.0)
    elapsed = time.perf_counter() - start
    matched = check_theorem1(cases=1000, seed=0, rho=None)
    ok = res.passed and elapsed < 30
    return ok, (
        f"rho=1: {res.mismatched_cases}/1000 cases differ ({res.mismatched_spikes} spikes, first seed {res.first_bad_seed}); "
        f"rho=beta: {matched.mismatched_cases}/1000 differ; {elapsed:.1f}s"
    )


def criterion_4():
    res = check_theorem2(cases=100, seed=0)
    return res.passed, f"{res.mismatched_cases}/100 cases differ ({res.mismatched_spikes} entries)"


def criterion_5():
    start = time.perf_counter()
    exact, approx = theorem3_limits(4.0, 0.5, 1.0)
    reference = round(exact, 4) == 1.1302 and approx == 1.0
    a = check_theorem3(4.0, 0.5, 1.0, trials=100_000, seed=0)
    b = check_theorem3(10.0, 0.1, 1.0, trials=100_000, seed=1)
    elapsed = time.perf_counter() - start
    ok = reference and a.z_score <= 3 and b.z_score <= 3 and b.approx_rel_error <= 0.01 and elapsed < 120
    return ok, (
        f"tau=4,delta=.5: emp {a.empirical_var:.4f} exact {a.exact_var:.4f} approx {a.approx_var:.4f} z={a.z_score:.2f}; "
        f"delta/tau=.01: z={b.z_score:.2f}, approx off by {100 * b.approx_rel_error:.3f}%; {elapsed:.1f}s"
    )


def criterion_6():
    tau, theta, delta = 2.0, 0.5, 0.1
    step = theta / 50
    omegas = np.arange(101) * step
    resp = frequency_response(tau, theta, omegas, simulate=True, delta=delta)
    ok = abs(resp.peak_omega - theta) <= step / 2 and abs(resp.peak - tau) <= 0.1 * tau
    return ok, f"peak at omega={resp.peak_omega:.4f} (theta {theta}), magnitude {resp.peak:.4f} (tau {tau})"


def criterion_7():
    cfg = TrainConfig(model="sdtcm", depth=2, width=8, n_classes=3, delta_range=(0.1, 0.5), tau_init=4.0, seed=0)
    rng = np.random.default_rng(0)
    x = 3.0 * rng.standard_normal((32, 2, 1))
    y = rng.integers(0, 3, 2)
    errors = model_gradient_error(build_model(cfg), x, y, h=1e-6)
    worst = max(errors, key=errors.get)
    ok = errors[worst] <= 1e-5
    return ok, f"{len(errors)} parameter arrays, worst rel err {errors[worst]:.2e} ({worst})"


def criterion_8():
    lens = [256, 1024, 4096]
    records = bench(lens, batch=64, channels=128, repeats=3, seed=0)
    sp = speedups(records)
    faster = all(sp[L] > 1 for L in lens)
    monotone = all(sp[a] <= sp[b] for a, b in zip(lens, lens[1:]))
    ok = faster and monotone and sp[1024] >= 2
    shown = ", ".join(f"L={L}: {sp[L]:.2f}x" for L in lens)
    return ok, f"speedup {shown}; faster={faster}, monotone={monotone}, cpus={os.cpu_count()}"


def _run_config(name: str, epochs: int | None = None):
    cfg = load_config(REPO / "configs" / name)
    tc = dataclasses.replace(cfg.train, seed=cfg.seed)
    if epochs is not None:
        tc = dataclasses.replace(tc, epochs=epochs)
    train_set, test_set = load_task(cfg, cfg.seed)
    return train(build_model(tc), train_set, tc, test=test_set)


def criterion_9():
    start = time.perf_counter()
    prf = max(h["test_acc"] for h in _run_config("impulse_prf.yaml"))
    lif = max(h["test_acc"] for h in _run_config("impulse_lif.yaml"))
    old = os.environ.get(DATA_ENV)
    os.environ[DATA_ENV] = str(REPO / "data")
    try:
        losses = [h["loss"] for h in _run_config("smnist_smoke.yaml")]
    finally:
        if old is None:
            os.environ.pop(DATA_ENV)
        else:
            os.environ[DATA_ENV] = old
    monotone = all(b < a for a, b in zip(losses, losses[1:]))
    elapsed = time.perf_counter() - start
    ok = prf >= 0.95 and lif <= 0.70 and monotone and elapsed < 1200
    loss_str = " > ".join(f"{v:.3f}" for v in losses)
    return ok, f"impulse best test acc PRF {prf:.3f}, LIF {lif:.3f}; sMNIST-5k loss {loss_str}; {elapsed:.0f}s"


def criterion_10():
    ours, s4 = listops_ratio()
    ratio = ours.total_mj / s4.total_mj
    reference = 0.075 / 5.104
    ok = ratio <= 0.05 and reference / 3 <= ratio <= reference * 3
    return ok, f"ours {ours.total_mj:.4f} mJ vs S4-LegS {s4.total_mj:.3f} mJ, ratio {ratio:.4f} (table {reference:.4f})"


TITLES = {
    1: "LIF parallel == sequential",
    2: "PRF sequential == parallel == deploy",
    3: "LIF soft reset == ALIF rho=1",
    4: "PRF theta=0 == LIF",
    5: "stationary variance",
    6: "frequency response peak",
    7: "gradient check",
    8: "parallel speedup trend",
    9: "long-range task",
    10: "energy ratio",
}
CHECKS = {n: globals()[f"criterion_{n}"] for n in TITLES}


def _check(acceptance, n):
    ok, detail = CHECKS[n]()
    assert acceptance(n, TITLES[n], bool(ok), detail), detail


def test_criterion_01_lif_equivalence(acceptance):
    _check(acceptance, 1)


def test_criterion_02_prf_equivalence(acceptance):
    _check(acceptance, 2)


def test_criterion_03_theorem1(acceptance):
    _check(acceptance, 3)


def test_criterion_04_theorem2(acceptance):
    _check(acceptance, 4)


def test_criterion_05_theorem3(acceptance):
    _check(acceptance, 5)


def test_criterion_06_frequency_response(acceptance):
    _check(acceptance, 6)


def test_criterion_07_gradients(acceptance):
    _check(acceptance, 7)


def test_criterion_08_speedup(acceptance):
    _check(acceptance, 8)


def test_criterion_09_long_range(acceptance):
    _check(acceptance, 9)


def test_criterion_10_energy(acceptance):
    _check(acceptance, 10)


if __name__ == "__main__":
    failed = 0
    for n, fn in CHECKS.items():
        ok, detail = fn()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} criterion {n:>2} ({TITLES[n]}): {detail}", flush=True)
    sys.exit(1 if failed else 0)
