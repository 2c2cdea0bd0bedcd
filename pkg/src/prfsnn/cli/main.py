"""``prfsnn`` command line: one subcommand per analysis surface.

Every subcommand accepts ``--seed``, ``--config``, ``--out`` and ``--format``.
Records go to ``--out`` (stdout by default), a one-line JSON summary to
stderr. The exit code is 0 iff every check of the invoked command passes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .. import analysis
from ..neurons import LifParams, PrfParams, lif_parallel, lif_sequential, prf_deploy_run, prf_parallel, prf_sequential
from ..traingrad import SequenceDataset, build_model, load_checkpoint, save_checkpoint, train
from ..traingrad.tasks import impulse_half_task
from ..traingrad.trainer import forward_batch
from . import data as datamod
from .bench import bench, speedups
from .config import ConfigError, RunConfig, load_config
from .equiv import run_equivalence_suite
from .report import FORMATS, emit_report

COMMANDS = ("simulate", "equiv", "bench", "train", "freq", "variance", "energy", "stats")


def _summary(obj: dict):
    sys.stderr.write(json.dumps(obj, default=float) + "\n")


def _input_signal(s, rng: np.random.Generator) -> np.ndarray:
    shape = (s.T, s.B, s.N)
    if s.input == "randn":
        return s.amplitude * rng.standard_normal(shape)
    x = np.zeros(shape)
    if s.input == "impulse":
        x[0] = s.amplitude
    else:
        x[:] = s.amplitude
    return x


def cmd_simulate(cfg: RunConfig, args) -> tuple[list, bool, dict]:
    s = cfg.simulate
    rng = np.random.default_rng(cfg.seed)
    c = _input_signal(s, rng)
    if s.neuron == "lif":
        params = LifParams(beta=s.beta, v_th=s.v_th)
        if s.mode == "sequential":
            spikes, pots = lif_sequential(c, params)
            u = pots.data
        else:
            spikes, U, D = lif_parallel(c, params, return_reset=True)
            u = U.data - D.data + s.v_th
    else:
        params = PrfParams(tau=s.tau, theta=s.theta, delta=s.delta, v_th=s.v_th)
        run = {"sequential": prf_sequential, "parallel": prf_parallel, "deploy": prf_deploy_run}[s.mode]
        spikes, pots = run(c, params)
        u = pots.data
    u = np.asarray(u)
    records = []
    for t, b, n in np.ndindex(c.shape):
        records.append(
            {
                "t": t,
                "batch": b,
                "channel": n,
                "input": float(c[t, b, n]),
                "potential": float(u[t, b, n].real),
                "potential_imag": float(u[t, b, n].imag) if np.iscomplexobj(u) else 0.0,
                "spike": int(spikes.data[t, b, n]),
            }
        )
    rate = float(spikes.data.mean())
    return records, True, {"neuron": s.neuron, "mode": s.mode, "firing_rate": rate}


def cmd_equiv(cfg: RunConfig, args):
    ec = dataclasses.replace(cfg.equiv, seed=cfg.seed)
    if args.cases is not None:
        ec = dataclasses.replace(ec, cases=args.cases)
    if args.kind is not None:
        ec = dataclasses.replace(ec, kind=args.kind)
    if args.inject_bug:
        ec = dataclasses.replace(ec, inject_bug=True)
    report = run_equivalence_suite(ec)
    return report.records(), report.passed, report.summary()


def cmd_bench(cfg: RunConfig, args):
    b = cfg.bench
    seq_lens = args.seq_lens or b.seq_lens
    repeats = args.repeats or b.repeats
    records = bench(seq_lens, b.batch, b.channels, repeats, beta=b.beta, seed=cfg.seed, dtype=b.dtype)
    sp = speedups(records)
    lens = sorted(L for L in sp if L >= 256)
    faster = all(sp[L] > 1.0 for L in lens)
    monotone = all(sp[a] <= sp[b] for a, b in zip(lens, lens[1:]))
    at_1024 = sp.get(1024)
    ok = bool(faster and monotone and (at_1024 is None or at_1024 >= 2.0))
    summary = {
        "speedup": {str(k): v for k, v in sp.items()},
        "parallel_faster_from_256": faster,
        "monotone": monotone,
        "speedup_1024": at_1024,
    }
    return [r.as_dict() for r in records], ok, summary


def _split(ds: SequenceDataset, test_fraction: float, seed: int) -> tuple[SequenceDataset, SequenceDataset]:
    order = np.random.default_rng(seed).permutation(len(ds))
    n_test = max(1, int(round(len(ds) * test_fraction)))
    te, tr = order[:n_test], order[n_test:]
    return SequenceDataset(ds.x[tr], ds.y[tr]), SequenceDataset(ds.x[te], ds.y[te])


def load_task(cfg: RunConfig, seed: int) -> tuple[SequenceDataset, SequenceDataset]:
    t = cfg.task
    if t.name == "impulse":
        return (
            impulse_half_task(t.n_train, t.length, seed=seed, amplitude=t.amplitude),
            impulse_half_task(t.n_test, t.length, seed=seed + 1, amplitude=t.amplitude),
        )
    root = datamod.data_dir(t.data_dir or None)
    images, labels = datamod.find_mnist(root)
    permute = t.permute_seed if t.name == "psmnist" else None
    ds = datamod.ingest_mnist(images, labels, permute, t.limit or None)
    return _split(ds, t.test_fraction, seed)


def cmd_train(cfg: RunConfig, args):
    tc = dataclasses.replace(cfg.train, seed=cfg.seed)
    if args.epochs is not None:
        tc = dataclasses.replace(tc, epochs=args.epochs)
    train_set, test_set = load_task(cfg, cfg.seed)
    if int(train_set.y.max()) >= tc.n_classes:
        raise ConfigError(f"train.n_classes={tc.n_classes} but labels reach {int(train_set.y.max())}")
    n_in = 1 if train_set.x.ndim == 2 else train_set.x.shape[-1]
    if n_in != tc.n_in:
        raise ConfigError(f"train.n_in={tc.n_in} but the task has {n_in} input channels")
    model = build_model(tc)
    if args.resume:
        load_checkpoint(model, args.resume)
    history = train(model, train_set, tc, test=test_set)
    if args.checkpoint:
        save_checkpoint(model, args.checkpoint)
    ok = bool(history) and all(np.isfinite(h["loss"]) for h in history)
    last = history[-1] if history else {}
    return history, ok, {"epochs": len(history), **last}


def cmd_freq(cfg: RunConfig, args):
    f = cfg.freq
    omegas = np.linspace(0.0, f.omega_max, f.n_omegas)
    resp = analysis.frequency_response(f.tau, f.theta, omegas, simulate=f.simulate, delta=f.delta, steps=f.steps)
    closed = analysis.closed_form_gain(f.tau, f.theta, omegas)
    disc = analysis.discrete_gain(f.tau, f.theta, omegas, f.delta)
    records = [
        {"omega": float(w), "magnitude": float(m), "closed_form": float(c), "discrete": float(d)}
        for w, m, c, d in zip(omegas, resp.magnitude, closed, disc)
    ]
    step = omegas[1] - omegas[0]
    peak_ok = bool(abs(resp.peak_omega - f.theta) <= step / 2)
    mag_ok = bool(abs(resp.peak - f.tau) <= f.tolerance * f.tau)
    summary = {"peak_omega": resp.peak_omega, "peak": resp.peak, "peak_at_theta": peak_ok, "peak_near_tau": mag_ok}
    return records, peak_ok and mag_ok, summary


def cmd_variance(cfg: RunConfig, args):
    v = cfg.variance
    res = analysis.check_theorem3(v.tau, v.delta, v.sigma, v.trials, v.T or None, seed=cfg.seed)
    rec = {
        "tau": v.tau,
        "delta": v.delta,
        "sigma": v.sigma,
        "trials": res.trials,
        "steps": res.steps,
        "empirical_var": res.empirical_var,
        "exact_var": res.exact_var,
        "approx_var": res.approx_var,
        "z_score": res.z_score,
        "approx_rel_error": res.approx_rel_error,
    }
    ok = bool(res.z_score <= v.z_max if res.exact_var > 0 else res.empirical_var == 0.0)
    return [rec], ok, {"z_score": res.z_score, "within": ok}


def cmd_energy(cfg: RunConfig, args):
    e = cfg.energy
    model = analysis.EnergyModel(e.e_mac, e.e_ac, e.e_m)
    if e.preset == "listops":
        arch, rates, L = analysis.listops_preset(e.h)
    else:
        arch = [analysis.LayerSpec(e.width, e.h) for _ in range(e.depth)]
        rates = e.rates if len(e.rates) == e.depth else [e.rates[0]] * e.depth
        L = e.seq_len
    ours = analysis.estimate_energy(arch, rates, L, model, "ours")
    s4 = analysis.estimate_energy(arch, None, L, model, "s4-legs")
    ratio = ours.total_mj / s4.total_mj
    summary = {"ours_mj": ours.total_mj, "s4_legs_mj": s4.total_mj, "ratio": ratio}
    return ours.records() + s4.records(), bool(ratio <= e.max_ratio), summary


def cmd_stats(cfg: RunConfig, args):
    if args.spikes:
        with np.load(args.spikes) as archive:
            layers = {name: archive[name] for name in archive.files}
    else:
        tc = dataclasses.replace(cfg.train, seed=cfg.seed)
        model = build_model(tc)
        if args.checkpoint:
            load_checkpoint(model, args.checkpoint)
        _, test_set = load_task(cfg, cfg.seed)
        idx = np.arange(min(cfg.stats.n_samples, len(test_set)))
        xb, _ = test_set.batch(idx, tc.dtype)
        if hasattr(model, "set_training"):
            model.set_training(False)
        record: dict = {}
        forward_batch(model, xb, record)
        layers = {f"{kind}{i}": s for kind, items in record.items() for i, s in enumerate(items)}
    stats = analysis.firing_rate_stats(layers)
    records = [{"layer": k, "rate": v} for k, v in stats["per_layer"].items()]
    records.append({"layer": "average", "rate": stats["average"]})
    return records, True, {"average": stats["average"]}


HANDLERS = {
    "simulate": cmd_simulate,
    "equiv": cmd_equiv,
    "bench": cmd_bench,
    "train": cmd_train,
    "freq": cmd_freq,
    "variance": cmd_variance,
    "energy": cmd_energy,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prfsnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "run one neuron on a synthetic input and dump its trace",
        "equiv": "randomized sequential vs parallel equivalence suite",
        "bench": "time sequential and parallel LIF training steps",
        "train": "train a spiking network on a configured task",
        "freq": "PRF frequency response around the resonance",
        "variance": "Monte-Carlo check of the stationary membrane variance",
        "energy": "inference energy estimate against an S4 baseline",
        "stats": "per-layer firing rates",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides the config)")
        p.add_argument("--config", default=None, help="YAML run configuration")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=FORMATS, default="csv")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        if name == "equiv":
            p.add_argument("--cases", type=int, default=None)
            p.add_argument("--kind", choices=("lif", "prf", "both"), default=None)
            p.add_argument("--inject-bug", action="store_true", help="use an off-by-one kernel (negative control)")
        if name == "bench":
            p.add_argument("--seq-lens", type=int, nargs="+", default=None)
            p.add_argument("--repeats", type=int, default=None)
        if name == "train":
            p.add_argument("--epochs", type=int, default=None)
            p.add_argument("--checkpoint", default=None, help="write final parameters here (.npz)")
            p.add_argument("--resume", default=None, help="start from this checkpoint")
        if name == "stats":
            p.add_argument("--spikes", default=None, help=".npz of spike arrays, one per layer")
            p.add_argument("--checkpoint", default=None, help="model parameters to evaluate")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 1 << 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        records, ok, summary = HANDLERS[args.command](cfg, args)
        emit_report(records, args.format, args.out)
    except (ConfigError, datamod.IdxFormatError, FileNotFoundError, OSError, ValueError, FloatingPointError) as exc:
        sys.stderr.write(f"prfsnn {args.command}: error: {exc}\n")
        return 2
    _summary({"command": args.command, "passed": ok, **summary})
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
